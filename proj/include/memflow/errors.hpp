#pragma once

#include <stdexcept>
#include <string>

namespace memflow {

/// Invalid or inconsistent configuration input (file, section, key context in message).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Iterative solver failure (non-convergence, divergence, stability abort).
/// Carries the final residual so callers can report diagnostics.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual = 0.0, int iterations = 0)
        : std::runtime_error(what), residual(residual), iterations(iterations) {}
    double residual;
    int iterations;
};

/// Filesystem / output failure.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace memflow
