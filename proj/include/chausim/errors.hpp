#pragma once

#include <stdexcept>
#include <string>

namespace chausim {

// Bad or inconsistent configuration input (files, presets, CLI arguments).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Measured/expected statistics that cannot be reconciled with the model,
// e.g. decoy bounds that cross. Surfaced, never clamped silently.
class InfeasibleStatistics : public std::runtime_error {
public:
    explicit InfeasibleStatistics(const std::string& what) : std::runtime_error(what) {}
};

// An estimator was requested for a conditional with zero trials.
class UndefinedEstimator : public std::runtime_error {
public:
    explicit UndefinedEstimator(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace chausim
