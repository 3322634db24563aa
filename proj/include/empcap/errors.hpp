#pragma once

#include <stdexcept>
#include <string>

namespace empcap {

/// Invalid user-facing input: malformed config files, bad grids, out-of-range
/// CLI arguments. Maps to process exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A computation the solver declines on mathematical grounds: wrong stability
/// class for an asymptotic regime, marginal spectrum where a time constant is
/// required, degenerate (zero) noise making the mutual information infinite.
/// Maps to process exit code 3.
class RefusalError : public std::runtime_error {
public:
    explicit RefusalError(const std::string& what) : std::runtime_error(what) {}
};

/// Violated numeric contract: non-finite entries, dimension mismatch,
/// overflow, loss of positive definiteness where the algorithm requires it.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace empcap
