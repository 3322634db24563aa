#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "empcap/config_io.hpp"
#include "empcap/errors.hpp"
#include "support/oracles.hpp"

using namespace empcap;
using nlohmann::json;

namespace {

LtiSystem sample_system() {
    empcap::testing::Rng rng(701);
    LtiSystem s;
    s.a = rng.stable_matrix(3);
    s.b = rng.gaussian_matrix(3, 2);
    s.c = rng.gaussian_matrix(2, 3);
    s.g = rng.gaussian_matrix(3, 3);
    s.f = rng.gaussian_matrix(2, 2);
    s.sigma_eta = 1.4;
    s.sigma_nu = 0.2;
    return s;
}

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name, const std::string& contents) : path(name) {
        std::ofstream out(path);
        out << contents;
    }
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("matrix-form system survives a serialize, dump, parse round trip") {
    const LtiSystem original = sample_system();
    const json dumped = json::parse(system_to_json(original).dump(2));
    const LtiSystem restored = system_from_json(dumped);
    CHECK(restored.a == original.a);
    CHECK(restored.b == original.b);
    CHECK(restored.c == original.c);
    CHECK(restored.g == original.g);
    CHECK(restored.f == original.f);
    CHECK(restored.sigma_eta == original.sigma_eta);
    CHECK(restored.sigma_nu == original.sigma_nu);
}

TEST_CASE("matrix-form defaults fill identity readouts and unit intensities") {
    const LtiSystem s = system_from_json(json::parse(R"({"A": [[-1]], "B": [[1]]})"));
    CHECK(s.c == Matrix::Identity(1, 1));
    CHECK(s.g == Matrix::Identity(1, 1));
    CHECK(s.f == Matrix::Identity(1, 1));
    CHECK(s.sigma_eta == 1.0);
    CHECK(s.sigma_nu == 1.0);
}

TEST_CASE("pole-zero form matches the direct construction") {
    const json config = json::parse(
        R"({"poles": [[-1, 1], [-1, -1]], "zeros": [0], "gain": 2.0, "sigma_nu": 0.0})");
    const LtiSystem from_config = system_from_json(config);

    PoleZeroSpec spec;
    spec.poles = {{-1.0, 1.0}, {-1.0, -1.0}};
    spec.zeros = {{0.0, 0.0}};
    spec.gain = 2.0;
    const LtiSystem direct = from_pole_zero(spec);
    CHECK(from_config.a == direct.a);
    CHECK(from_config.b == direct.b);
    CHECK(from_config.sigma_nu == 0.0);

    const LtiSystem lag = system_from_json(json::parse(R"({"poles": [-2]})"));
    CHECK(lag.a == Matrix::Constant(1, 1, -2.0));
}

TEST_CASE("system parsing rejects malformed configs") {
    CHECK_THROWS_AS((void)system_from_json(json::parse("[1, 2]")), ConfigError);
    CHECK_THROWS_AS((void)system_from_json(json::parse(R"({"B": [[1]]})")), ConfigError);
    CHECK_THROWS_AS(
        (void)system_from_json(json::parse(R"({"A": [[-1]], "poles": [-1]})")), ConfigError);
    CHECK_THROWS_AS((void)system_from_json(json::parse(R"({"A": [[-1]]})")), ConfigError);
    CHECK_THROWS_AS(
        (void)system_from_json(json::parse(R"({"A": [[-1, 0], [1]], "B": [[1], [0]]})")),
        ConfigError);
    CHECK_THROWS_AS(
        (void)system_from_json(json::parse(R"({"A": [["x"]], "B": [[1]]})")), ConfigError);
    CHECK_THROWS_AS(
        (void)system_from_json(json::parse(R"({"A": [[-1]], "B": [[1]], "Q": [[1]]})")),
        ConfigError);
    // Conjugation violations surface through the pole-zero constructor.
    CHECK_THROWS_AS((void)system_from_json(json::parse(R"({"poles": [[-1, 1]]})")), ConfigError);
}

TEST_CASE("load_system reads files and reports unreadable or invalid ones") {
    const LtiSystem original = sample_system();
    const TempFile file("config_io_system.json", system_to_json(original).dump());
    const LtiSystem loaded = load_system(file.path);
    CHECK(loaded.a == original.a);
    CHECK(loaded.sigma_nu == original.sigma_nu);

    CHECK_THROWS_AS((void)load_system("does_not_exist.json"), ConfigError);
    const TempFile broken("config_io_broken.json", "{not json");
    CHECK_THROWS_AS((void)load_system(broken.path), ConfigError);
}

TEST_CASE("capacity rendering carries exactly the pinned fields") {
    LtiSystem s;
    s.a = Matrix::Constant(1, 1, -1.0);
    s.b = Matrix::Constant(1, 1, 1.0);
    s.c = Matrix::Constant(1, 1, 1.0);
    s.g = Matrix::Constant(1, 1, 1.0);
    s.f = Matrix::Constant(1, 1, 1.0);
    s.sigma_nu = 0.0;
    const ValidatedSystem v = validate(s);
    SolverOptions paper;
    paper.paper_convention = true;

    const json out = capacity_to_json(capacity(v, 1.0, 1.0, paper), 1.0);
    CHECK(out.size() == 7);
    CHECK(out.at("capacity_nats").get<double>() ==
          doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(out.at("capacity_bits").get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK_FALSE(out.at("half_factor_applied").get<bool>());
    CHECK(out.at("T").get<double>() == 1.0);
    CHECK(out.at("P").get<double>() == 1.0);
    CHECK(out.at("kkt_residual").get<double>() < 1e-8);
    CHECK(out.at("iterations").get<int>() >= 1);

    const json stationary = capacity_to_json(
        capacity(v, std::numeric_limits<double>::infinity(), 1.0, paper), 1.0);
    CHECK(stationary.at("T").get<std::string>() == "inf");
}

TEST_CASE("asymptote and tau sweep renderings mirror their reports") {
    LtiSystem s;
    s.a = Matrix::Constant(1, 1, -1.0);
    s.b = Matrix::Constant(1, 1, 1.0);
    s.c = Matrix::Constant(1, 1, 1.0);
    s.g = Matrix::Constant(1, 1, 1.0);
    s.f = Matrix::Constant(1, 1, 1.0);
    s.sigma_nu = 0.0;
    const ValidatedSystem v = validate(s);

    const json rep = asymptote_to_json(capacity_at_infinity(v, 1.0));
    CHECK(rep.at("regime").get<std::string>() == "infinite_horizon");
    CHECK(rep.at("perfect_sensor").get<bool>());
    CHECK(rep.at("reliable").get<bool>());
    CHECK(rep.at("notes").is_array());

    s.g(0, 0) = 1.5;  // split the two sigma_eta placements
    s.sigma_eta = 2.0;
    const TauSweepResult sweep = tau_sweep(validate(s), {1e-1, 1e-2}, 1.0, 1.0);
    const json js = tau_sweep_to_json(sweep);
    CHECK(js.at("points").size() == 2);
    CHECK(js.at("points")[0].at("tau").get<double>() == 1e-1);
    CHECK(js.at("limit_nats").get<double>() == doctest::Approx(sweep.limit_nats));
    CHECK(js.at("sigma_scaled_limit_nats").is_number());
    CHECK(js.at("report").at("regime").get<std::string>() == "tau_limit");

    // A rank-deficient GG' turns the scaled placement into null, not NaN text.
    LtiSystem planar;
    planar.a = -Matrix::Identity(2, 2);
    planar.b = Matrix::Ones(2, 1);
    planar.c = Matrix::Identity(2, 2);
    planar.g = Matrix::Zero(2, 2);
    planar.g.col(0) = planar.b.col(0);
    planar.f = Matrix::Identity(2, 2);
    planar.sigma_nu = 0.0;
    const json degenerate = tau_sweep_to_json(tau_sweep(validate(planar), {1e-2}, 1.0, 1.0));
    CHECK(degenerate.at("sigma_scaled_limit_nats").is_null());
}

TEST_CASE("sweep config parses inline and referenced systems") {
    const json inline_config = json::parse(R"({
        "system": {"A": [[-1]], "B": [[1]], "sigma_nu": 0.0},
        "p_grid": {"start": 0.0, "stop": 2.0, "count": 3},
        "t_grid": {"start": 0.5, "stop": 0.5, "count": 1},
        "paper_convention": true,
        "threads": 4,
        "output": "out.csv"
    })");
    const SweepConfig parsed = sweep_config_from_json(inline_config);
    CHECK(parsed.system.a(0, 0) == -1.0);
    CHECK(parsed.grid.p.count == 3);
    CHECK(parsed.grid.t.start == 0.5);
    CHECK(parsed.paper_convention);
    CHECK(parsed.threads == 4);
    CHECK(parsed.output == "out.csv");

    const TempFile file("config_io_ref.json", R"({"A": [[-2]], "B": [[1]]})");
    const json referenced = json::parse(R"({
        "system_file": "config_io_ref.json",
        "p_grid": {"start": 1.0, "stop": 1.0, "count": 1},
        "t_grid": {"start": 1.0, "stop": 1.0, "count": 1}
    })");
    const SweepConfig loaded = sweep_config_from_json(referenced, ".");
    CHECK(loaded.system.a(0, 0) == -2.0);
    CHECK(loaded.threads == 1);
}

TEST_CASE("sweep config rejects contradictions and bad grids") {
    const char* missing_grid = R"({"system": {"A": [[-1]], "B": [[1]]}})";
    CHECK_THROWS_AS((void)sweep_config_from_json(json::parse(missing_grid)), ConfigError);

    const char* both_sources = R"({
        "system": {"A": [[-1]], "B": [[1]]}, "system_file": "x.json",
        "p_grid": {"start": 0, "stop": 1, "count": 2},
        "t_grid": {"start": 0, "stop": 1, "count": 2}
    })";
    CHECK_THROWS_AS((void)sweep_config_from_json(json::parse(both_sources)), ConfigError);

    const char* bad_count = R"({
        "system": {"A": [[-1]], "B": [[1]]},
        "p_grid": {"start": 0, "stop": 1, "count": 0},
        "t_grid": {"start": 0, "stop": 1, "count": 2}
    })";
    CHECK_THROWS_AS((void)sweep_config_from_json(json::parse(bad_count)), ConfigError);

    const char* bad_threads = R"({
        "system": {"A": [[-1]], "B": [[1]]},
        "p_grid": {"start": 0, "stop": 1, "count": 2},
        "t_grid": {"start": 0, "stop": 1, "count": 2},
        "threads": 0
    })";
    CHECK_THROWS_AS((void)sweep_config_from_json(json::parse(bad_threads)), ConfigError);
}
