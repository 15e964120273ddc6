#pragma once

#include <stdexcept>
#include <string>

namespace ottosim {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree (matrix dimensions, subsystem layouts).
class DimensionError : public Error {
public:
    using Error::Error;
};

/// A precondition on an argument does not hold.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical invariant broke (non-convergence, corrupted state).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A sweep file failed to parse or validate.
class SpecError : public Error {
public:
    using Error::Error;
};

} // namespace ottosim
