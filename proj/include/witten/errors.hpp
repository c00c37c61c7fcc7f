#pragma once

#include <stdexcept>
#include <string>

namespace witten {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad arguments to a library call (range, shape, precondition).
class DomainError : public Error {
public:
    using Error::Error;
};

// Configuration document or CLI flag problems. The CLI maps these to exit code 3.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Anything the numerics could not deliver. The CLI maps these to exit code 2.
class NumericalError : public Error {
public:
    using Error::Error;
};

class ResolutionError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class NotMorseError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class InconclusiveError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace witten
