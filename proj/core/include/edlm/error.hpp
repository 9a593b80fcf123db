#pragma once

#include <stdexcept>
#include <string>

namespace edlm {

/// Base class for all edlm errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Mismatched or degenerate tensor/layer shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented domain (config ranges, grades, ...).
class ValueError : public Error {
public:
    using Error::Error;
};

/// File or stream problem: missing, truncated, malformed, wrong version.
class IoError : public Error {
public:
    using Error::Error;
};

/// Non-finite values where finite ones are required (diverged training,
/// gradient blow-ups).
class NumericError : public Error {
public:
    using Error::Error;
};

}  // namespace edlm
