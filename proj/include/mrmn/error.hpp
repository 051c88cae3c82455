#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mrmn {

// Root of the project error hierarchy. The CLI maps subclasses to distinct
// process exit codes (config -> 2, data -> 3, anything else -> 4).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

// Malformed input line; carries the 1-based line number.
class ParseError : public DataError {
public:
    ParseError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

// A user interacted with every item, so no negative can be drawn.
class NoNegativeError : public Error {
public:
    using Error::Error;
};

class CheckpointError : public Error {
public:
    using Error::Error;
};

class CheckpointFormatError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class CheckpointVersionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class CheckpointTruncatedError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

class CheckpointDimensionError : public CheckpointError {
public:
    using CheckpointError::CheckpointError;
};

}  // namespace mrmn
