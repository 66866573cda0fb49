#pragma once

#include <stdexcept>
#include <string>

namespace litmeth {

// Base class for all library errors. CLI maps these to exit code 2.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (OBO, XML, JSONL, CSV, vocab files).
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t position)
        : Error(msg), position_(position) {}
    // Line number (1-based) or byte offset, depending on the format.
    std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InvalidInputError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

// Tensor shape mismatches; message names the operation and both operands.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Non-finite values encountered during numeric work.
class NumericError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Every key position of some attention query row is masked out.
class DegenerateMaskError : public Error {
public:
    using Error::Error;
};

class IncompatibleCheckpointError : public Error {
public:
    using Error::Error;
};

// Metric with a zero denominator; callers report these as null.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
};

// Transient transport failure; fetch_batch retries these a bounded
// number of times before giving up.
class TransportError : public Error {
public:
    using Error::Error;
};

}  // namespace litmeth
