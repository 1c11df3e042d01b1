#pragma once

#include <stdexcept>
#include <string>

namespace hayeval {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Invalid or infeasible configuration. Raised before any generation work.
class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::string raw = {})
        : Error(what), raw_text(std::move(raw)) {}
    std::string raw_text;
};

class GatewayError : public Error {
public:
    using Error::Error;
};

/// Transport-level failure (connection refused, timeout, 5xx). Retried by the gateway.
class TransportError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

/// Context window overflow detected before the request was sent.
class PreflightError : public GatewayError {
public:
    using GatewayError::GatewayError;
};

class RetrievalError : public Error {
public:
    using Error::Error;
};

class JudgingError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

class RunError : public Error {
public:
    using Error::Error;
};

}  // namespace hayeval
