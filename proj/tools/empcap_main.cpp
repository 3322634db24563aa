#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "empcap/asymptotics.hpp"
#include "empcap/capacity_solver.hpp"
#include "empcap/config_io.hpp"
#include "empcap/discrete_oracle.hpp"
#include "empcap/errors.hpp"
#include "empcap/sweep.hpp"

namespace {

using namespace empcap;

struct CommonArgs {
    std::string system_path;
    std::string horizon = "1";
    double p_budget = 1.0;
    bool paper_convention = false;
    bool bits = false;
    bool nats = false;
};

struct GridArgs {
    std::string config_path;
    GridAxis p{0.0, 10.0, 11};
    GridAxis t{0.0, 10.0, 11};
    std::string output;
    int threads = 1;
};

[[nodiscard]] double parse_horizon(const std::string& text) {
    if (text == "inf" || text == "infinity") {
        return std::numeric_limits<double>::infinity();
    }
    size_t consumed = 0;
    double value = 0.0;
    try {
        value = std::stod(text, &consumed);
    } catch (const std::exception&) {
        throw ConfigError("invalid horizon \"" + text + "\"");
    }
    if (consumed != text.size()) {
        throw ConfigError("invalid horizon \"" + text + "\"");
    }
    return value;
}

[[nodiscard]] ValidatedSystem load_validated(const std::string& path) {
    if (path.empty()) {
        throw ConfigError("missing --system config path");
    }
    return validate(load_system(path));
}

[[nodiscard]] SolverOptions options_of(const CommonArgs& args) {
    SolverOptions options;
    options.paper_convention = args.paper_convention;
    return options;
}

void write_text(const std::string& output, const std::string& text) {
    if (output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(output, std::ios::binary);
    if (!out) {
        throw ConfigError("cannot write output file " + output);
    }
    out << text;
}

void summarize(const CommonArgs& args, double nats_value) {
    const bool in_nats = args.nats && !args.bits;
    const double value = in_nats ? nats_value : nats_value / std::numbers::ln2;
    std::fprintf(stderr, "capacity %.6g %s (%s)\n", value, in_nats ? "nats" : "bits",
                 args.paper_convention ? "half factor dropped" : "half factor applied");
}

void run_capacity(const CommonArgs& args, bool seed_set, unsigned long long seed) {
    const ValidatedSystem system = load_validated(args.system_path);
    const SolverOptions options = options_of(args);
    const double horizon = parse_horizon(args.horizon);
    const CapacityResult result = capacity(system, horizon, args.p_budget, options);
    std::cout << capacity_to_json(result, args.p_budget).dump(2) << "\n";
    summarize(args, result.value_nats);

    if (seed_set && args.p_budget > 0.0 && !result.allocation.sigma.empty()) {
        // Reproducible restarts from random simplex points; the objective is
        // concave, so the spread only diagnoses solver trouble.
        std::mt19937_64 rng(seed);
        std::exponential_distribution<double> unit(1.0);
        double lo = result.value_nats;
        double hi = result.value_nats;
        for (int trial = 0; trial < 8; ++trial) {
            std::vector<double> init(result.allocation.sigma.size());
            double sum = 0.0;
            for (double& x : init) {
                x = unit(rng);
                sum += x;
            }
            for (double& x : init) x *= args.p_budget / sum;
            SolverOptions restarted = options;
            restarted.initial_sigma = init;
            const double value = capacity(system, horizon, args.p_budget, restarted).value_nats;
            lo = std::min(lo, value);
            hi = std::max(hi, value);
        }
        std::fprintf(stderr, "multi-start spread over 8 seeded restarts: %.3g nats\n", hi - lo);
    }
}

[[nodiscard]] SweepConfig resolve_sweep(const CommonArgs& common, const GridArgs& grid,
                                        bool threads_set, bool output_set) {
    SweepConfig config;
    if (!grid.config_path.empty()) {
        std::ifstream in(grid.config_path);
        if (!in) {
            throw ConfigError("cannot read sweep config " + grid.config_path);
        }
        nlohmann::json parsed;
        try {
            parsed = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& error) {
            throw ConfigError("invalid JSON in " + grid.config_path + ": " + error.what());
        }
        config = sweep_config_from_json(
            parsed, std::filesystem::path(grid.config_path).parent_path().string());
        if (threads_set) config.threads = grid.threads;
        if (output_set) config.output = grid.output;
        if (common.paper_convention) config.paper_convention = true;
    } else {
        if (common.system_path.empty()) {
            throw ConfigError("missing --system or --config");
        }
        config.system = load_system(common.system_path);
        config.grid.p = grid.p;
        config.grid.t = grid.t;
        config.paper_convention = common.paper_convention;
        config.output = grid.output;
        config.threads = grid.threads;
    }
    return config;
}

void run_landscape(const CommonArgs& common, const GridArgs& grid, bool threads_set,
                   bool output_set) {
    const SweepConfig config = resolve_sweep(common, grid, threads_set, output_set);
    SolverOptions options;
    options.paper_convention = config.paper_convention;
    const std::vector<SweepPoint> points =
        landscape(validate(config.system), config.grid, options, config.threads);
    write_text(config.output, landscape_csv(points));
    std::fprintf(stderr, "landscape %zu points (%s)\n", points.size(),
                 config.paper_convention ? "half factor dropped" : "half factor applied");
}

void run_slice(const CommonArgs& common, const GridArgs& grid, bool threads_set, bool output_set,
               bool fixed_p_set, double fixed_p, bool fixed_t_set, double fixed_t) {
    if (fixed_p_set == fixed_t_set) {
        throw ConfigError("slice requires exactly one of --fixed-P or --fixed-T");
    }
    const SweepConfig config = resolve_sweep(common, grid, threads_set, output_set);
    SolverOptions options;
    options.paper_convention = config.paper_convention;
    const SliceAxis axis = fixed_p_set ? SliceAxis::FixedP : SliceAxis::FixedT;
    const std::vector<SweepPoint> points =
        slice(validate(config.system), config.grid, axis, fixed_p_set ? fixed_p : fixed_t,
              options, config.threads);
    write_text(config.output, slice_csv(points, axis));
}

void run_asymptote(const CommonArgs& args, const std::string& regime,
                   const std::vector<double>& tau_list) {
    const ValidatedSystem system = load_validated(args.system_path);
    const SolverOptions options = options_of(args);
    if (regime == "infinite_horizon") {
        const AsymptoteReport report = capacity_at_infinity(system, args.p_budget, options);
        std::cout << asymptote_to_json(report).dump(2) << "\n";
        summarize(args, report.value_nats);
    } else if (regime == "small_T") {
        const AsymptoteReport report = small_t_slope(system, args.p_budget, options);
        std::cout << asymptote_to_json(report).dump(2) << "\n";
    } else if (regime == "tau_limit") {
        if (tau_list.empty()) {
            throw ConfigError("tau_limit requires --tau with a descending list");
        }
        const TauSweepResult sweep =
            tau_sweep(system, tau_list, args.p_budget, parse_horizon(args.horizon), options);
        std::cout << tau_sweep_to_json(sweep).dump(2) << "\n";
    } else {
        throw ConfigError("unknown regime \"" + regime +
                          "\" (expected infinite_horizon, small_T, or tau_limit)");
    }
}

void run_oracle_check(const CommonArgs& args, int steps) {
    const ValidatedSystem system = load_validated(args.system_path);
    const SolverOptions options = options_of(args);
    const double horizon = parse_horizon(args.horizon);
    const double continuous = capacity(system, horizon, args.p_budget, options).value_nats;
    const double oracle =
        oracle_capacity(discretize(system, horizon, steps), args.p_budget,
                        options.paper_convention);
    const double scale = std::max(std::abs(continuous), 1e-300);
    const nlohmann::json out{{"continuous_nats", continuous},
                             {"oracle_nats", oracle},
                             {"relative_gap", std::abs(continuous - oracle) / scale},
                             {"steps", steps},
                             {"half_factor_applied", !options.paper_convention}};
    std::cout << out.dump(2) << "\n";
}

void run_synthesize(const CommonArgs& args, int samples, const std::string& output) {
    if (args.p_budget <= 0.0) {
        throw ConfigError("synthesize requires a positive power budget");
    }
    if (samples < 2) {
        throw ConfigError("synthesize requires at least two samples");
    }
    const ValidatedSystem system = load_validated(args.system_path);
    const SolverOptions options = options_of(args);
    const double horizon = parse_horizon(args.horizon);
    if (!std::isfinite(horizon) || horizon <= 0.0) {
        throw ConfigError("synthesize requires a finite positive horizon");
    }

    const GramianBundle bundle = gramians_at(system, horizon);
    const ModeSet modes = extract_modes(bundle);
    const Allocation allocation = iterative_water_filling(bundle, modes, args.p_budget, options);
    std::vector<double> grid(static_cast<size_t>(samples));
    for (int i = 0; i < samples; ++i) {
        grid[static_cast<size_t>(i)] = horizon * i / (samples - 1);
    }
    const SynthesizedControls controls =
        synthesize_controls(system, horizon, modes, allocation, grid);

    std::string csv = "t";
    for (const int j : controls.mode_index) {
        const Mode& mode = modes.entries[static_cast<size_t>(j)];
        csv += ",g_" + std::to_string(mode.channel) + "_" + std::to_string(mode.index);
    }
    csv += '\n';
    char buffer[32];
    for (size_t i = 0; i < controls.grid.size(); ++i) {
        std::snprintf(buffer, sizeof(buffer), "%.12g", controls.grid[i]);
        csv += buffer;
        for (Eigen::Index r = 0; r < controls.g.rows(); ++r) {
            std::snprintf(buffer, sizeof(buffer), "%.12g",
                          controls.g(r, static_cast<Eigen::Index>(i)));
            csv += ',';
            csv += buffer;
        }
        csv += '\n';
    }
    write_text(output, csv);
    std::fprintf(stderr, "realized control power %.6g of budget %.6g\n",
                 controls.realized_power, args.p_budget);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"information capacity of power-constrained linear Gaussian channels"};
    app.require_subcommand(1);

    CommonArgs common;
    GridArgs grid;
    std::string regime;
    std::vector<double> tau_list;
    int steps = 1000;
    int samples = 201;
    unsigned long long seed = 0;
    double fixed_p = 0.0;
    double fixed_t = 0.0;

    const auto add_common = [&](CLI::App* cmd, bool with_horizon) {
        cmd->add_option("--system", common.system_path, "system config JSON file");
        if (with_horizon) {
            cmd->add_option("--T", common.horizon, "horizon in seconds, or inf");
        }
        cmd->add_option("--P", common.p_budget, "power budget");
        cmd->add_flag("--paper-convention", common.paper_convention,
                      "drop the Gaussian 1/2 factor");
        auto* bits = cmd->add_flag("--bits", common.bits, "report the summary in bits");
        cmd->add_flag("--nats", common.nats, "report the summary in nats")->excludes(bits);
    };
    const auto add_grid = [&](CLI::App* cmd) {
        cmd->add_option("--config", grid.config_path, "sweep config JSON file");
        cmd->add_option("--p-start", grid.p.start, "P grid start");
        cmd->add_option("--p-stop", grid.p.stop, "P grid stop");
        cmd->add_option("--p-count", grid.p.count, "P grid points");
        cmd->add_option("--t-start", grid.t.start, "T grid start");
        cmd->add_option("--t-stop", grid.t.stop, "T grid stop");
        cmd->add_option("--t-count", grid.t.count, "T grid points");
        cmd->add_option("--output", grid.output, "output file (default stdout)");
        cmd->add_option("--threads", grid.threads, "worker thread count");
    };

    CLI::App* cmd_capacity = app.add_subcommand("capacity", "single (P, T) capacity as JSON");
    add_common(cmd_capacity, true);
    auto* seed_opt =
        cmd_capacity->add_option("--seed", seed, "seed for multi-start diagnostics");

    CLI::App* cmd_landscape = app.add_subcommand("landscape", "C(P, T) grid as CSV");
    add_common(cmd_landscape, false);
    add_grid(cmd_landscape);

    CLI::App* cmd_slice = app.add_subcommand("slice", "one grid line as CSV");
    add_common(cmd_slice, false);
    add_grid(cmd_slice);
    auto* fixed_p_opt = cmd_slice->add_option("--fixed-P", fixed_p, "pin P to a grid value");
    auto* fixed_t_opt = cmd_slice->add_option("--fixed-T", fixed_t, "pin T to a grid value");

    CLI::App* cmd_asymptote =
        app.add_subcommand("asymptote", "limiting-regime report as JSON");
    cmd_asymptote->add_option("regime", regime, "infinite_horizon, small_T, or tau_limit")
        ->required();
    add_common(cmd_asymptote, true);
    cmd_asymptote->add_option("--tau", tau_list, "descending tau list for tau_limit")
        ->delimiter(',');

    CLI::App* cmd_oracle =
        app.add_subcommand("oracle-check", "continuous vs discretized capacity as JSON");
    add_common(cmd_oracle, true);
    cmd_oracle->add_option("--steps", steps, "discretization steps");

    CLI::App* cmd_synth =
        app.add_subcommand("synthesize", "sampled optimal control shapes as CSV");
    add_common(cmd_synth, true);
    cmd_synth->add_option("--samples", samples, "grid samples over [0, T]");
    cmd_synth->add_option("--output", grid.output, "output file");

    try {
        app.parse(argc, argv);
        if (cmd_capacity->parsed()) {
            run_capacity(common, seed_opt->count() > 0, seed);
        } else if (cmd_landscape->parsed()) {
            run_landscape(common, grid, cmd_landscape->count("--threads") > 0,
                          cmd_landscape->count("--output") > 0);
        } else if (cmd_slice->parsed()) {
            run_slice(common, grid, cmd_slice->count("--threads") > 0,
                      cmd_slice->count("--output") > 0, fixed_p_opt->count() > 0, fixed_p,
                      fixed_t_opt->count() > 0, fixed_t);
        } else if (cmd_asymptote->parsed()) {
            run_asymptote(common, regime, tau_list);
        } else if (cmd_oracle->parsed()) {
            run_oracle_check(common, steps);
        } else if (cmd_synth->parsed()) {
            run_synthesize(common, samples, grid.output);
        }
    } catch (const CLI::ParseError& error) {
        const int code = app.exit(error);
        return code == 0 ? 0 : 2;
    } catch (const ConfigError& error) {
        std::cerr << "config error: " << error.what() << "\n";
        return 2;
    } catch (const RefusalError& error) {
        std::cerr << "refusal: " << error.what() << "\n";
        return 3;
    } catch (const std::exception& error) {
        std::cerr << "error: " << error.what() << "\n";
        return 1;
    }
    return 0;
}
