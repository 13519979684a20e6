#pragma once

#include <stdexcept>
#include <string>

namespace gazeaffect {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: malformed config, invalid flag values, impossible specs.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent data files (CSV, manifest, model file).
class DataError : public Error {
public:
    using Error::Error;
};

// Training produced a non-finite loss.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int last_finite_epoch)
        : Error(what), last_finite_epoch_(last_finite_epoch) {}

    // 0 when the very first epoch diverged.
    int last_finite_epoch() const noexcept { return last_finite_epoch_; }

private:
    int last_finite_epoch_;
};

}  // namespace gazeaffect
