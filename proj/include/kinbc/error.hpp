#pragma once

#include <stdexcept>
#include <string>

namespace kinbc {

/// Base for every error raised by the library. `validation()` separates
/// rejected input (CLI exit code 2) from numerical failure (exit code 1).
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
    virtual bool validation() const noexcept { return true; }
};

/// Non-positive speed, rate or similar scalar parameter.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// State outside the positive cone, or a point outside the domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed velocity set or collision family, or a non-steady reference state.
class ModelError : public Error {
public:
    using Error::Error;
};

/// Control law inconsistent with the boundary geometry.
class LawError : public Error {
public:
    using Error::Error;
};

/// Unparseable or inconsistent configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Time step violates the explicit stability limit.
class CflError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
    bool validation() const noexcept override { return false; }
};

/// Output file could not be written.
class IoError : public Error {
public:
    using Error::Error;
    bool validation() const noexcept override { return false; }
};

/// Non-finite or runaway field during time stepping.
class DivergenceError : public NumericalError {
public:
    DivergenceError(const std::string& what, long step, int species)
        : NumericalError(what), step_(step), species_(species) {}
    long step() const noexcept { return step_; }
    int species() const noexcept { return species_; }

private:
    long step_;
    int species_;
};

}  // namespace kinbc
