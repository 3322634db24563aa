#pragma once

#include <string>

#include <json.hpp>

#include "empcap/asymptotics.hpp"
#include "empcap/capacity_solver.hpp"
#include "empcap/sweep.hpp"
#include "empcap/system_model.hpp"

namespace empcap {

/// Builds a system from one of the two accepted JSON shapes:
///   {"A": [[..]], "B": [[..]], "C": [[..]], "G": [[..]], "F": [[..]],
///    "sigma_eta": x, "sigma_nu": x}
///   {"poles": [[re, im], ..], "zeros": [..], "gain": x}
/// Matrices are row-major nested arrays. C, G, F default to identity
/// shapes, the intensities to 1. Roots may be bare reals or [re, im]
/// pairs; sigma_eta / sigma_nu overrides are accepted in both shapes.
/// Unknown keys and malformed values throw ConfigError.
[[nodiscard]] LtiSystem system_from_json(const nlohmann::json& config);

/// Reads and parses a system config file. Throws ConfigError when the file
/// is unreadable or not valid JSON.
[[nodiscard]] LtiSystem load_system(const std::string& path);

/// Full matrix-form rendering; parses back to an identical system.
[[nodiscard]] nlohmann::json system_to_json(const LtiSystem& system);

/// The fixed result object: capacity_bits, capacity_nats,
/// half_factor_applied, T, P, kkt_residual, iterations. An infinite horizon
/// renders as the string "inf".
[[nodiscard]] nlohmann::json capacity_to_json(const CapacityResult& result, double p_budget);

[[nodiscard]] nlohmann::json asymptote_to_json(const AsymptoteReport& report);

/// Damping sweep with its per-tau curve, both limit placements, and the
/// attached report. NaN placements render as null.
[[nodiscard]] nlohmann::json tau_sweep_to_json(const TauSweepResult& result);

/// File-level sweep bundle: a system (inline or referenced) plus grids and
/// execution knobs.
struct SweepConfig {
    LtiSystem system;
    GridSpec grid;
    bool paper_convention = false;
    std::string output;  // empty: stdout
    int threads = 1;
};

/// Accepts {"system": {..} | "system_file": path, "p_grid": {start, stop,
/// count}, "t_grid": {..}, "paper_convention": bool, "output": path,
/// "threads": n}. A relative system_file resolves against base_dir.
[[nodiscard]] SweepConfig sweep_config_from_json(const nlohmann::json& config,
                                                 const std::string& base_dir = "");

}  // namespace empcap
