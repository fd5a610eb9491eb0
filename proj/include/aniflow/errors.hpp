#pragma once

#include <stdexcept>
#include <string>

namespace aniflow {

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// An edge shorter than the degeneracy threshold (1e-14 x bbox diagonal).
struct DegenerateEdge : Error {
    explicit DegenerateEdge(const std::string& msg) : Error(msg) {}
};

/// Enclosed area below 1e-14; orientation cannot be determined.
struct ZeroArea : Error {
    explicit ZeroArea(const std::string& msg) : Error(msg) {}
};

/// The energy-stability condition 3*gamma(n) > gamma(-n) fails.
struct ConditionViolated : Error {
    explicit ConditionViolated(const std::string& msg) : Error(msg) {}
};

struct NonFinite : Error {
    explicit NonFinite(const std::string& msg) : Error(msg) {}
};

struct NewtonDiverged : Error {
    explicit NewtonDiverged(const std::string& msg, int iterations)
        : Error(msg), iterations(iterations) {}
    int iterations;
};

struct LinearSolveFailed : Error {
    explicit LinearSolveFailed(const std::string& msg) : Error(msg) {}
};

struct RankDeficient : Error {
    explicit RankDeficient(const std::string& msg) : Error(msg) {}
};

struct NonSimpleInput : Error {
    explicit NonSimpleInput(const std::string& msg) : Error(msg) {}
};

struct NonPositiveError : Error {
    explicit NonPositiveError(const std::string& msg) : Error(msg) {}
};

/// A step() failure wrapped with the step index it occurred at.
struct SolverFailure : Error {
    SolverFailure(const std::string& msg, int step) : Error(msg), step(step) {}
    int step;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

} // namespace aniflow
