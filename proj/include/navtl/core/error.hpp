#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace navtl {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor or layer shapes do not chain, or a checkpoint does not fit a spec.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Floor-plan geometry is invalid (self-intersection, pose inside a wall, ...).
class GeometryError : public Error {
public:
    using Error::Error;
};

/// Malformed file contents (checkpoint, floor plan).
class FormatError : public Error {
public:
    using Error::Error;
};

class VersionError : public FormatError {
public:
    using FormatError::FormatError;
};

/// Bad user configuration: unknown keys, out-of-range values, missing inputs.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A training step produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(std::uint64_t step, const std::string& what)
        : Error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::uint64_t step() const noexcept { return step_; }

private:
    std::uint64_t step_;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw ConfigError(msg);
}

}  // namespace navtl
