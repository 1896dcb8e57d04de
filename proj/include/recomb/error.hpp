#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace recomb {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  NotFound,
  InvalidState,
  Conflict,
  Unprocessable,  // e.g. merge without subject matter
  PayloadTooLarge,
  UnsupportedMedia,
  NoArrangement,
  Provider,
  Storage,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// A model response that could not be read. Keeps the raw text so callers
/// can show it to the user.
class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::string raw)
      : Error(ErrorCode::ParseError, message), raw_(std::move(raw)) {}

  const std::string& raw_text() const noexcept { return raw_; }

 private:
  std::string raw_;
};

enum class ProviderFailure {
  Timeout,
  Remote,
  UndecodableImage,
  EmptyResponse,
};

std::string_view to_string(ProviderFailure failure);

class ProviderError : public Error {
 public:
  ProviderError(ProviderFailure failure, const std::string& message,
                bool retryable = true)
      : Error(ErrorCode::Provider, message),
        failure_(failure),
        retryable_(retryable) {}

  ProviderFailure failure() const noexcept { return failure_; }
  bool retryable() const noexcept { return retryable_; }

 private:
  ProviderFailure failure_;
  bool retryable_;
};

[[noreturn]] inline void invalid_argument(const std::string& message) {
  throw Error(ErrorCode::InvalidArgument, message);
}

}  // namespace recomb
