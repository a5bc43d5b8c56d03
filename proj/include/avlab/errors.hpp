#pragma once

#include <stdexcept>
#include <string>

namespace avlab {

// Invalid configuration values or combinations (maps to CLI exit code 2).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// API misuse, e.g. stepping a finished episode.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Numerical faults: non-finite state, filter divergence, degenerate geometry,
// non-finite training losses (maps to CLI exit code 3).
class FaultError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class GeometryError : public FaultError {
public:
    using FaultError::FaultError;
};

// File system and format errors (maps to CLI exit code 4, or 2 for
// malformed inputs the user supplied).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, long line)
        : std::runtime_error(what), line_(line) {}
    long line() const noexcept { return line_; }

private:
    long line_;
};

} // namespace avlab
