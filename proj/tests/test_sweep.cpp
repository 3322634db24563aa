#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "empcap/errors.hpp"
#include "empcap/sweep.hpp"
#include "support/oracles.hpp"

using namespace empcap;
using empcap::testing::Rng;

namespace {

ValidatedSystem scalar_benchmark() {
    LtiSystem s;
    s.a = Matrix::Constant(1, 1, -1.0);
    s.b = Matrix::Constant(1, 1, 1.0);
    s.c = Matrix::Constant(1, 1, 1.0);
    s.g = Matrix::Constant(1, 1, 1.0);
    s.f = Matrix::Constant(1, 1, 1.0);
    s.sigma_nu = 0.0;
    return validate(s);
}

ValidatedSystem planar_system() {
    Rng rng(601);
    LtiSystem s;
    s.a = rng.stable_matrix(2);
    s.b = rng.gaussian_matrix(2, 1);
    s.c = Matrix::Identity(2, 2);
    s.g = Matrix::Identity(2, 2);
    s.f = Matrix::Identity(2, 2);
    s.sigma_nu = 0.3;
    return validate(s);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> fields;
    std::istringstream in(line);
    std::string field;
    while (std::getline(in, field, ',')) fields.push_back(field);
    return fields;
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("grid_values samples inclusively and hits the endpoint exactly") {
    CHECK(grid_values({2.5, 2.5, 1}) == std::vector<double>{2.5});
    CHECK(grid_values({0.0, 10.0, 3}) == std::vector<double>{0.0, 5.0, 10.0});
    const std::vector<double> fine = grid_values({0.1, 0.7, 7});
    CHECK(fine.size() == 7);
    CHECK(fine.front() == 0.1);
    CHECK(fine.back() == 0.7);  // exact, not accumulated
    for (size_t i = 1; i < fine.size(); ++i) CHECK(fine[i] > fine[i - 1]);
}

TEST_CASE("grid_values rejects malformed axes") {
    CHECK_THROWS_AS((void)grid_values({0.0, 1.0, 0}), ConfigError);
    CHECK_THROWS_AS((void)grid_values({-0.5, 1.0, 4}), ConfigError);
    CHECK_THROWS_AS((void)grid_values({2.0, 1.0, 4}), ConfigError);
    CHECK_THROWS_AS((void)grid_values({0.0, std::nan(""), 4}), ConfigError);
}

TEST_CASE("landscape rows are ordered by P then T and match direct solves") {
    const ValidatedSystem v = scalar_benchmark();
    SolverOptions paper;
    paper.paper_convention = true;
    GridSpec grid;
    grid.p = {0.5, 3.0, 3};
    grid.t = {0.5, 1.0, 2};
    const std::vector<SweepPoint> points = landscape(v, grid, paper);
    REQUIRE(points.size() == 6);

    size_t i = 0;
    for (const double p : {0.5, 1.75, 3.0}) {
        for (const double t : {0.5, 1.0}) {
            CAPTURE(i);
            CHECK(points[i].p == p);
            CHECK(points[i].t == t);
            // Noise and signal ride the same scalar Gramian, so the value is
            // ln(1 + P) at any horizon.
            CHECK(points[i].capacity_nats == doctest::Approx(std::log1p(p)).epsilon(1e-9));
            CHECK(points[i].converged);
            ++i;
        }
    }
}

TEST_CASE("landscape handles the T = 0 column and zero power") {
    GridSpec grid;
    grid.p = {0.0, 1.0, 2};
    grid.t = {0.0, 1.0, 2};
    const std::vector<SweepPoint> points = landscape(scalar_benchmark(), grid);
    for (const SweepPoint& point : points) {
        if (point.p == 0.0 || point.t == 0.0) {
            CHECK(point.capacity_bits == 0.0);
            CHECK(point.converged);
        } else {
            CHECK(point.capacity_bits > 0.0);
        }
    }
}

TEST_CASE("landscape output is byte-identical across thread counts and runs") {
    const ValidatedSystem v = planar_system();
    GridSpec grid;
    grid.p = {0.0, 6.0, 4};
    grid.t = {0.2, 2.0, 5};
    const std::string serial = landscape_csv(landscape(v, grid, {}, 1));
    const std::string parallel = landscape_csv(landscape(v, grid, {}, 8));
    const std::string again = landscape_csv(landscape(v, grid, {}, 8));
    CHECK(serial == parallel);
    CHECK(parallel == again);
}

TEST_CASE("landscape rejects a non-positive thread count") {
    GridSpec grid;
    grid.p = {1.0, 1.0, 1};
    grid.t = {1.0, 1.0, 1};
    CHECK_THROWS_AS((void)landscape(scalar_benchmark(), grid, {}, 0), ConfigError);
}

TEST_CASE("landscape csv carries the pinned header and plain field rendering") {
    SolverOptions paper;
    paper.paper_convention = true;
    GridSpec grid;
    grid.p = {1.0, 1.0, 1};
    grid.t = {0.5, 0.5, 1};
    const std::string csv = landscape_csv(landscape(scalar_benchmark(), grid, paper));
    const std::vector<std::string> lines = split_lines(csv);
    REQUIRE(lines.size() == 2);
    CHECK(lines[0] == "P,T,capacity_bits,iterations,converged");
    const std::vector<std::string> fields = split_fields(lines[1]);
    REQUIRE(fields.size() == 5);
    CHECK(fields[0] == "1");
    CHECK(fields[1] == "0.5");
    // ln(1 + 1) nats is exactly one bit under the no-half convention.
    CHECK(std::stod(fields[2]) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::stoi(fields[3]) >= 1);
    CHECK(fields[4] == "1");
    CHECK(csv.back() == '\n');
}

TEST_CASE("slice extracts one grid line and drops the fixed column") {
    const ValidatedSystem v = planar_system();
    GridSpec grid;
    grid.p = {0.5, 4.5, 5};
    grid.t = {1.0, 3.0, 3};

    const std::vector<SweepPoint> line = slice(v, grid, SliceAxis::FixedT, 2.0);
    REQUIRE(line.size() == 5);
    const std::vector<SweepPoint> full = landscape(v, grid);
    size_t matched = 0;
    for (const SweepPoint& point : full) {
        if (point.t != 2.0) continue;
        CHECK(point.p == line[matched].p);
        CHECK(point.capacity_bits == line[matched].capacity_bits);  // same solve, bitwise
        ++matched;
    }
    CHECK(matched == 5);

    // Equal P spacing: concavity in P shows as non-increasing increments.
    for (size_t i = 2; i < line.size(); ++i) {
        const double first = line[i - 1].capacity_nats - line[i - 2].capacity_nats;
        const double second = line[i].capacity_nats - line[i - 1].capacity_nats;
        CHECK(second <= first + 1e-9);
        CHECK(line[i].capacity_nats >= line[i - 1].capacity_nats - 1e-12);
    }

    CHECK(split_lines(slice_csv(line, SliceAxis::FixedT))[0] ==
          "P,capacity_bits,iterations,converged");
    const std::vector<SweepPoint> column = slice(v, grid, SliceAxis::FixedP, 0.5);
    REQUIRE(column.size() == 3);
    CHECK(split_lines(slice_csv(column, SliceAxis::FixedP))[0] ==
          "T,capacity_bits,iterations,converged");
}

TEST_CASE("slice rejects a fixed value off the grid") {
    GridSpec grid;
    grid.p = {0.0, 10.0, 3};
    grid.t = {0.0, 10.0, 3};
    CHECK_THROWS_AS((void)slice(scalar_benchmark(), grid, SliceAxis::FixedT, 3.14), ConfigError);
}
