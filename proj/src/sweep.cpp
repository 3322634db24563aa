#include "empcap/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

#include "empcap/errors.hpp"

namespace empcap {

namespace {

void validate_axis(const GridAxis& axis, const char* name) {
    if (axis.count < 1) {
        throw ConfigError(std::string(name) + " grid must contain at least one point");
    }
    if (!std::isfinite(axis.start) || !std::isfinite(axis.stop)) {
        throw ConfigError(std::string(name) + " grid bounds must be finite");
    }
    if (axis.start < 0.0) {
        throw ConfigError(std::string(name) + " grid bounds must be non-negative");
    }
    if (axis.stop < axis.start) {
        throw ConfigError(std::string(name) + " grid stop must not precede start");
    }
}

[[nodiscard]] std::string format_value(double value) {
    char buffer[32];
    std::snprintf(buffer, sizeof(buffer), "%.12g", value);
    return buffer;
}

void append_row_tail(std::string& out, const SweepPoint& point) {
    out += format_value(point.capacity_bits);
    out += ',';
    out += std::to_string(point.iterations);
    out += ',';
    out += point.converged ? '1' : '0';
    out += '\n';
}

}  // namespace

std::vector<double> grid_values(const GridAxis& axis) {
    validate_axis(axis, "sweep");
    std::vector<double> values;
    values.reserve(static_cast<size_t>(axis.count));
    if (axis.count == 1) {
        values.push_back(axis.start);
        return values;
    }
    const double step = (axis.stop - axis.start) / (axis.count - 1);
    for (int i = 0; i < axis.count; ++i) {
        values.push_back(i + 1 == axis.count ? axis.stop : axis.start + i * step);
    }
    return values;
}

std::vector<SweepPoint> landscape(const ValidatedSystem& system, const GridSpec& grid,
                                  const SolverOptions& options, int thread_count) {
    validate_axis(grid.p, "P");
    validate_axis(grid.t, "T");
    if (thread_count < 1) {
        throw ConfigError("thread count must be positive");
    }
    const std::vector<double> p_values = grid_values(grid.p);
    const std::vector<double> t_values = grid_values(grid.t);

    std::vector<SweepPoint> points(p_values.size() * t_values.size());
    for (size_t pi = 0; pi < p_values.size(); ++pi) {
        for (size_t ti = 0; ti < t_values.size(); ++ti) {
            SweepPoint& point = points[pi * t_values.size() + ti];
            point.p = p_values[pi];
            point.t = t_values[ti];
        }
    }

    const auto solve_one = [&](SweepPoint& point) {
        const CapacityResult result = capacity(system, point.t, point.p, options);
        point.capacity_bits = result.value_bits;
        point.capacity_nats = result.value_nats;
        point.iterations = result.allocation.iterations;
        point.converged = result.allocation.converged;
    };

    const size_t total = points.size();
    const size_t workers =
        std::min<size_t>(static_cast<size_t>(thread_count), std::max<size_t>(total, 1));
    if (workers <= 1) {
        for (SweepPoint& point : points) solve_one(point);
        return points;
    }

    // Slot-addressed write-back: scheduling order cannot change the output.
    std::atomic<size_t> cursor{0};
    std::exception_ptr failure;
    std::mutex failure_guard;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (size_t i = cursor.fetch_add(1); i < total; i = cursor.fetch_add(1)) {
                try {
                    solve_one(points[i]);
                } catch (...) {
                    const std::scoped_lock lock(failure_guard);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    }
    for (std::thread& worker : pool) worker.join();
    if (failure) std::rethrow_exception(failure);
    return points;
}

std::vector<SweepPoint> slice(const ValidatedSystem& system, const GridSpec& grid,
                              SliceAxis axis, double fixed_value, const SolverOptions& options,
                              int thread_count) {
    const GridAxis& fixed_axis = axis == SliceAxis::FixedP ? grid.p : grid.t;
    double matched = 0.0;
    bool found = false;
    for (const double value : grid_values(fixed_axis)) {
        if (std::abs(value - fixed_value) <= 1e-9 * std::max({1.0, std::abs(value), std::abs(fixed_value)})) {
            matched = value;
            found = true;
            break;
        }
    }
    if (!found) {
        throw ConfigError("fixed value does not lie on the sweep grid");
    }

    GridSpec line = grid;
    GridAxis& pinned = axis == SliceAxis::FixedP ? line.p : line.t;
    pinned.start = matched;
    pinned.stop = matched;
    pinned.count = 1;
    return landscape(system, line, options, thread_count);
}

std::string landscape_csv(const std::vector<SweepPoint>& points) {
    std::string out = "P,T,capacity_bits,iterations,converged\n";
    for (const SweepPoint& point : points) {
        out += format_value(point.p);
        out += ',';
        out += format_value(point.t);
        out += ',';
        append_row_tail(out, point);
    }
    return out;
}

std::string slice_csv(const std::vector<SweepPoint>& points, SliceAxis axis) {
    std::string out = axis == SliceAxis::FixedP ? "T,capacity_bits,iterations,converged\n"
                                                : "P,capacity_bits,iterations,converged\n";
    for (const SweepPoint& point : points) {
        out += format_value(axis == SliceAxis::FixedP ? point.t : point.p);
        out += ',';
        append_row_tail(out, point);
    }
    return out;
}

}  // namespace empcap
