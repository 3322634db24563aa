#pragma once

#include <string>
#include <vector>

#include "empcap/capacity_solver.hpp"
#include "empcap/system_model.hpp"

namespace empcap {

/// Inclusive linear grid; count = 1 pins the axis to start.
struct GridAxis {
    double start = 0.0;
    double stop = 0.0;
    int count = 1;
};

struct GridSpec {
    GridAxis p;
    GridAxis t;
};

struct SweepPoint {
    double p = 0.0;
    double t = 0.0;
    double capacity_bits = 0.0;
    double capacity_nats = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Axis sample points, ascending. Throws ConfigError for an empty, negative,
/// reversed, or non-finite axis.
[[nodiscard]] std::vector<double> grid_values(const GridAxis& axis);

/// Solves every (P, T) point of the grid. Rows are ordered by P, then T,
/// regardless of thread count: workers pull indices from a shared cursor and
/// write into preallocated slots, so the result is deterministic.
[[nodiscard]] std::vector<SweepPoint> landscape(const ValidatedSystem& system,
                                                const GridSpec& grid,
                                                const SolverOptions& options = {},
                                                int thread_count = 1);

enum class SliceAxis { FixedP, FixedT };

/// One row or column of the landscape. fixed_value must lie on the grid of
/// the fixed axis (ConfigError otherwise); the other axis is swept in full.
[[nodiscard]] std::vector<SweepPoint> slice(const ValidatedSystem& system, const GridSpec& grid,
                                            SliceAxis axis, double fixed_value,
                                            const SolverOptions& options = {},
                                            int thread_count = 1);

/// CSV with the exact header P,T,capacity_bits,iterations,converged, one row
/// per point, floats rendered with %.12g, converged as 1/0.
[[nodiscard]] std::string landscape_csv(const std::vector<SweepPoint>& points);

/// Same format minus the fixed column.
[[nodiscard]] std::string slice_csv(const std::vector<SweepPoint>& points, SliceAxis axis);

}  // namespace empcap
