#include "empcap/config_io.hpp"

#include <cmath>
#include <complex>
#include <filesystem>
#include <fstream>
#include <vector>

#include "empcap/errors.hpp"

namespace empcap {

namespace {

using nlohmann::json;

void require_keys(const json& config, std::initializer_list<const char*> allowed,
                  const char* where) {
    for (const auto& item : config.items()) {
        bool known = false;
        for (const char* key : allowed) {
            if (item.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError(std::string("unknown ") + where + " key \"" + item.key() + "\"");
        }
    }
}

[[nodiscard]] double parse_number(const json& value, const std::string& name) {
    if (!value.is_number()) {
        throw ConfigError(name + " must be a number");
    }
    return value.get<double>();
}

[[nodiscard]] Matrix parse_matrix(const json& value, const std::string& name) {
    if (!value.is_array() || value.empty()) {
        throw ConfigError(name + " must be a non-empty array of rows");
    }
    const size_t rows = value.size();
    size_t cols = 0;
    Matrix out;
    for (size_t r = 0; r < rows; ++r) {
        const json& row = value[r];
        if (!row.is_array() || row.empty()) {
            throw ConfigError(name + " rows must be non-empty arrays");
        }
        if (r == 0) {
            cols = row.size();
            out.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
        } else if (row.size() != cols) {
            throw ConfigError(name + " rows must all have the same length");
        }
        for (size_t c = 0; c < cols; ++c) {
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                parse_number(row[c], name + " entry");
        }
    }
    return out;
}

[[nodiscard]] std::vector<std::complex<double>> parse_roots(const json& value,
                                                            const std::string& name) {
    if (!value.is_array()) {
        throw ConfigError(name + " must be an array");
    }
    std::vector<std::complex<double>> roots;
    for (const json& entry : value) {
        if (entry.is_number()) {
            roots.emplace_back(entry.get<double>(), 0.0);
        } else if (entry.is_array() && (entry.size() == 1 || entry.size() == 2)) {
            const double re = parse_number(entry[0], name + " entry");
            const double im = entry.size() == 2 ? parse_number(entry[1], name + " entry") : 0.0;
            roots.emplace_back(re, im);
        } else {
            throw ConfigError(name + " entries must be numbers or [re, im] pairs");
        }
    }
    return roots;
}

[[nodiscard]] json matrix_to_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(row);
    }
    return rows;
}

[[nodiscard]] GridAxis parse_axis(const json& value, const char* name) {
    if (!value.is_object()) {
        throw ConfigError(std::string(name) + " must be an object with start, stop, count");
    }
    require_keys(value, {"start", "stop", "count"}, name);
    for (const char* key : {"start", "stop", "count"}) {
        if (!value.contains(key)) {
            throw ConfigError(std::string(name) + " is missing \"" + key + "\"");
        }
    }
    GridAxis axis;
    axis.start = parse_number(value.at("start"), std::string(name) + ".start");
    axis.stop = parse_number(value.at("stop"), std::string(name) + ".stop");
    if (!value.at("count").is_number_integer()) {
        throw ConfigError(std::string(name) + ".count must be an integer");
    }
    axis.count = value.at("count").get<int>();
    (void)grid_values(axis);  // surface range errors at parse time
    return axis;
}

}  // namespace

LtiSystem system_from_json(const json& config) {
    if (!config.is_object()) {
        throw ConfigError("system config must be a JSON object");
    }
    const bool matrix_form = config.contains("A");
    const bool pole_form = config.contains("poles");
    if (matrix_form == pole_form) {
        throw ConfigError("system config must contain exactly one of \"A\" or \"poles\"");
    }

    LtiSystem system;
    if (matrix_form) {
        require_keys(config, {"A", "B", "C", "G", "F", "sigma_eta", "sigma_nu"}, "system");
        if (!config.contains("B")) {
            throw ConfigError("matrix-form system config requires \"B\"");
        }
        system.a = parse_matrix(config.at("A"), "A");
        system.b = parse_matrix(config.at("B"), "B");
        const Eigen::Index n = system.a.rows();
        system.c = config.contains("C") ? parse_matrix(config.at("C"), "C")
                                        : Matrix::Identity(n, n);
        system.g = config.contains("G") ? parse_matrix(config.at("G"), "G")
                                        : Matrix::Identity(n, n);
        system.f = config.contains("F") ? parse_matrix(config.at("F"), "F")
                                        : Matrix::Identity(system.c.rows(), system.c.rows());
    } else {
        require_keys(config, {"poles", "zeros", "gain", "allow_marginal_poles", "sigma_eta",
                              "sigma_nu"},
                     "system");
        PoleZeroSpec spec;
        spec.poles = parse_roots(config.at("poles"), "poles");
        if (config.contains("zeros")) {
            spec.zeros = parse_roots(config.at("zeros"), "zeros");
        }
        if (config.contains("gain")) {
            spec.gain = parse_number(config.at("gain"), "gain");
        }
        if (config.contains("allow_marginal_poles")) {
            if (!config.at("allow_marginal_poles").is_boolean()) {
                throw ConfigError("allow_marginal_poles must be a boolean");
            }
            spec.allow_marginal_poles = config.at("allow_marginal_poles").get<bool>();
        }
        system = from_pole_zero(spec);
    }

    if (config.contains("sigma_eta")) {
        system.sigma_eta = parse_number(config.at("sigma_eta"), "sigma_eta");
    }
    if (config.contains("sigma_nu")) {
        system.sigma_nu = parse_number(config.at("sigma_nu"), "sigma_nu");
    }
    return system;
}

LtiSystem load_system(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read system config " + path);
    }
    json config;
    try {
        config = json::parse(in);
    } catch (const json::parse_error& error) {
        throw ConfigError("invalid JSON in " + path + ": " + error.what());
    }
    return system_from_json(config);
}

json system_to_json(const LtiSystem& system) {
    return json{{"A", matrix_to_json(system.a)},     {"B", matrix_to_json(system.b)},
                {"C", matrix_to_json(system.c)},     {"G", matrix_to_json(system.g)},
                {"F", matrix_to_json(system.f)},     {"sigma_eta", system.sigma_eta},
                {"sigma_nu", system.sigma_nu}};
}

json capacity_to_json(const CapacityResult& result, double p_budget) {
    json out{{"capacity_bits", result.value_bits},
             {"capacity_nats", result.value_nats},
             {"half_factor_applied", result.half_factor_applied},
             {"P", p_budget},
             {"kkt_residual", result.allocation.kkt_residual},
             {"iterations", result.allocation.iterations}};
    if (result.infinite_horizon) {
        out["T"] = "inf";
    } else {
        out["T"] = result.t_horizon;
    }
    return out;
}

json asymptote_to_json(const AsymptoteReport& report) {
    return json{{"regime", std::string(to_string(report.regime))},
                {"value_nats", report.value_nats},
                {"value_bits", report.value_bits},
                {"half_factor_applied", report.half_factor_applied},
                {"perfect_sensor", report.perfect_sensor},
                {"per_unit_time", report.per_unit_time},
                {"reliable", report.reliable},
                {"lyapunov_residual", report.lyapunov_residual},
                {"extrapolation_error", report.extrapolation_error},
                {"linearity_ratio", report.linearity_ratio},
                {"origin_value", report.origin_value},
                {"notes", report.notes}};
}

json tau_sweep_to_json(const TauSweepResult& result) {
    json points = json::array();
    for (const TauPoint& point : result.points) {
        points.push_back(json{{"tau", point.tau},
                              {"capacity_nats", point.capacity_nats},
                              {"capacity_bits", point.capacity_bits},
                              {"converged", point.converged}});
    }
    json out{{"points", points},
             {"limit_nats", result.limit_nats},
             {"limit_bits", result.limit_bits},
             {"report", asymptote_to_json(result.report)}};
    if (std::isnan(result.sigma_scaled_limit_nats)) {
        out["sigma_scaled_limit_nats"] = nullptr;
    } else {
        out["sigma_scaled_limit_nats"] = result.sigma_scaled_limit_nats;
    }
    return out;
}

SweepConfig sweep_config_from_json(const json& config, const std::string& base_dir) {
    if (!config.is_object()) {
        throw ConfigError("sweep config must be a JSON object");
    }
    require_keys(config,
                 {"system", "system_file", "p_grid", "t_grid", "paper_convention", "output",
                  "threads"},
                 "sweep");

    SweepConfig out;
    const bool inline_system = config.contains("system");
    const bool file_system = config.contains("system_file");
    if (inline_system == file_system) {
        throw ConfigError("sweep config must contain exactly one of \"system\" or \"system_file\"");
    }
    if (inline_system) {
        out.system = system_from_json(config.at("system"));
    } else {
        if (!config.at("system_file").is_string()) {
            throw ConfigError("system_file must be a string path");
        }
        std::filesystem::path path = config.at("system_file").get<std::string>();
        if (path.is_relative() && !base_dir.empty()) {
            path = std::filesystem::path(base_dir) / path;
        }
        out.system = load_system(path.string());
    }

    if (!config.contains("p_grid") || !config.contains("t_grid")) {
        throw ConfigError("sweep config requires p_grid and t_grid");
    }
    out.grid.p = parse_axis(config.at("p_grid"), "p_grid");
    out.grid.t = parse_axis(config.at("t_grid"), "t_grid");

    if (config.contains("paper_convention")) {
        if (!config.at("paper_convention").is_boolean()) {
            throw ConfigError("paper_convention must be a boolean");
        }
        out.paper_convention = config.at("paper_convention").get<bool>();
    }
    if (config.contains("output")) {
        if (!config.at("output").is_string()) {
            throw ConfigError("output must be a string path");
        }
        out.output = config.at("output").get<std::string>();
    }
    if (config.contains("threads")) {
        if (!config.at("threads").is_number_integer()) {
            throw ConfigError("threads must be an integer");
        }
        out.threads = config.at("threads").get<int>();
        if (out.threads < 1) {
            throw ConfigError("threads must be positive");
        }
    }
    return out;
}

}  // namespace empcap
