#pragma once

#include <stdexcept>
#include <string>

namespace ttp {

/// Base of every error raised by the library. Callers that only need a
/// message catch this; the CLI maps subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfDomain : public Error {
public:
    using Error::Error;
};

class NegativePressure : public Error {
public:
    using Error::Error;
};

class NotFound : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class NonUniformSpacing : public Error {
public:
    using Error::Error;
};

class DegenerateGradient : public Error {
public:
    using Error::Error;
};

class InitialTangencyViolation : public Error {
public:
    using Error::Error;
};

class EmptyEnsemble : public Error {
public:
    using Error::Error;
};

class NoOracle : public Error {
public:
    using Error::Error;
};

// Raised for bad user input: config values, run parameters, too few samples
// for a fit.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Config-file syntax error; carries the offending line.
class ConfigParseError : public Error {
public:
    ConfigParseError(int line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

} // namespace ttp
