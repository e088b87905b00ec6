#pragma once

#include <stdexcept>
#include <string>

namespace ensimp {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input violates a documented invariant (non-finite value, non-monotone quantiles, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Exact subset enumeration refused because the pool is too large.
class CapacityError : public Error {
public:
    using Error::Error;
};

/// An ensemble was requested from an empty set of models.
class NoPredictionError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace ensimp
