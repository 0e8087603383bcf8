#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace exai5g {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class MissingValue : public Error {
public:
    MissingValue(std::size_t row, std::string column)
        : Error("missing value at row " + std::to_string(row) + ", column '" + column + "'"),
          row_(row), column_(std::move(column)) {}

    std::size_t row() const noexcept { return row_; }
    const std::string& column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::string column_;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class WeightMismatch : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    NonFiniteLoss(int epoch, int batch)
        : Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                std::to_string(batch)),
          epoch_(epoch), batch_(batch) {}

    int epoch() const noexcept { return epoch_; }
    int batch() const noexcept { return batch_; }

private:
    int epoch_;
    int batch_;
};

class SampleTooSmall : public Error {
public:
    using Error::Error;
};

class SampleTooLarge : public Error {
public:
    using Error::Error;
};

class EmptyTrain : public Error {
public:
    using Error::Error;
};

class TooFewRules : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

/// Base for failures talking to an LLM or embedding endpoint.
class ExternalServiceError : public Error {
public:
    using Error::Error;
};

class TransportError : public ExternalServiceError {
public:
    TransportError(int attempts, const std::string& detail)
        : ExternalServiceError("transport failure after " + std::to_string(attempts) +
                               " attempt(s): " + detail),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class ApiError : public ExternalServiceError {
public:
    ApiError(int status, std::string body)
        : ExternalServiceError("endpoint returned HTTP " + std::to_string(status) + ": " + body),
          status_(status), body_(std::move(body)) {}

    int status() const noexcept { return status_; }
    const std::string& body() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

class EmptyResponse : public ExternalServiceError {
public:
    using ExternalServiceError::ExternalServiceError;
};

class EmbeddingFailure : public ExternalServiceError {
public:
    using ExternalServiceError::ExternalServiceError;
};

class ConfigInvalid : public Error {
public:
    ConfigInvalid(const std::string& field, const std::string& message)
        : Error("invalid config field '" + field + "': " + message), field_(field) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class MissingArtifact : public Error {
public:
    MissingArtifact(std::string stage, std::string path)
        : Error("missing artifact from stage '" + stage + "': " + path),
          stage_(std::move(stage)), path_(std::move(path)) {}

    const std::string& stage() const noexcept { return stage_; }
    const std::string& path() const noexcept { return path_; }

private:
    std::string stage_;
    std::string path_;
};

}  // namespace exai5g
