#pragma once

#include <stdexcept>
#include <string>

namespace pairs {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument violates an operation's contract (bad range, dimension
/// mismatch, empty input where content is required).
class InvalidInputError : public Error {
public:
    using Error::Error;
};

/// Input is structurally valid but mathematically degenerate (e.g. both
/// angles zero, or a regression with no spread in the predictor).
class DegenerateInputError : public InvalidInputError {
public:
    using InvalidInputError::InvalidInputError;
};

/// Bad pipeline, provider, or template configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Corpus ingestion failure (duplicate or empty ids, empty text).
class IngestError : public Error {
public:
    using Error::Error;
};

/// Persisted index or data file is missing, truncated, or inconsistent.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A provider call failed (transport error or non-success status after
/// retries). Carries the endpoint and the last HTTP status when known.
class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& message, std::string endpoint = {},
                           int status = 0)
        : Error(message), endpoint_(std::move(endpoint)), status_(status) {}

    const std::string& endpoint() const noexcept { return endpoint_; }
    int status() const noexcept { return status_; }

private:
    std::string endpoint_;
    int status_;
};

/// The provider answered but the response body does not match the wire
/// protocol (missing fields, wrong types).
class ProtocolError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

}  // namespace pairs
