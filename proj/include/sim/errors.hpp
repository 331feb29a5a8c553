#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sim {

/// Invalid configuration: bad key, bad value, violated invariant.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A non-finite value appeared during learning. The step index is filled in
/// by the harness; learning-rule code throws with step = -1.
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(long long step = -1)
        : std::runtime_error("non-finite value encountered at step " + std::to_string(step)),
          step_(step) {}
    long long step() const { return step_; }

private:
    long long step_;
};

/// Filesystem failure while emitting outputs.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sim
