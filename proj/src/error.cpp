#include "recomb/error.hpp"

namespace recomb {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::ParseError: return "parse-error";
    case ErrorCode::NotFound: return "not-found";
    case ErrorCode::InvalidState: return "invalid-state";
    case ErrorCode::Conflict: return "conflict";
    case ErrorCode::Unprocessable: return "unprocessable";
    case ErrorCode::PayloadTooLarge: return "payload-too-large";
    case ErrorCode::UnsupportedMedia: return "unsupported-media";
    case ErrorCode::NoArrangement: return "no-arrangement";
    case ErrorCode::Provider: return "provider-failure";
    case ErrorCode::Storage: return "storage-failure";
  }
  return "unknown";
}

std::string_view to_string(ProviderFailure failure) {
  switch (failure) {
    case ProviderFailure::Timeout: return "timeout";
    case ProviderFailure::Remote: return "remote-failure";
    case ProviderFailure::UndecodableImage: return "undecodable-image";
    case ProviderFailure::EmptyResponse: return "empty-response";
  }
  return "unknown";
}

}  // namespace recomb
