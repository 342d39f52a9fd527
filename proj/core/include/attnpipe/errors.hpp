#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace attnpipe {

/// Base of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller broke a precondition (time regression, score outside [0,1], ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// A numeric domain problem: non-finite input, undefined metric, empty series.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration, model, or script document.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A file could not be opened or read.
class IoError : public Error {
public:
    using Error::Error;
};

/// A session log line could not be ingested. `line()` is 1-based.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& reason)
        : Error("line " + std::to_string(line) + ": " + reason), line_(line), reason_(reason) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::size_t line_;
    std::string reason_;
};

} // namespace attnpipe
