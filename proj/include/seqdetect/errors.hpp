#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqdetect {

// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

// Invalid parameter combination (k larger than the reference set, bad flags).
class ConfigError : public Error {
public:
    using Error::Error;
};

// Malformed or inconsistent input data.
class DataError : public Error {
public:
    using Error::Error;
};

// Source text could not be parsed. `offset` is a byte offset or a 1-based
// line number depending on `unit`.
class ParseError : public DataError {
public:
    enum class Unit { Byte, Line };

    ParseError(const std::string& what, std::size_t offset, Unit unit = Unit::Byte)
        : DataError(what + (unit == Unit::Byte ? " (at byte " : " (at line ")
                    + std::to_string(offset) + ")"),
          offset_(offset),
          unit_(unit) {}

    std::size_t offset() const noexcept { return offset_; }
    Unit unit() const noexcept { return unit_; }

private:
    std::size_t offset_;
    Unit unit_;
};

class VersionError : public DataError {
public:
    using DataError::DataError;
};

// Parsed successfully but violates a model invariant.
class ValidationError : public DataError {
public:
    using DataError::DataError;
};

class TrainingError : public DataError {
public:
    using DataError::DataError;
};

// Numerically degenerate situation: double root, no bracketed root,
// simulation horizon too short.
class DegenerateError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

}  // namespace seqdetect
