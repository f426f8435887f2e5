#include "promptlens/common/error.h"

namespace promptlens {

std::string_view CodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kFailedPrecondition: return "failed_precondition";
    case ErrorCode::kOutOfRange: return "out_of_range";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kAlreadyExists: return "already_exists";
    case ErrorCode::kConflict: return "conflict";
    case ErrorCode::kParse: return "parse_error";
    case ErrorCode::kMissingCategory: return "missing_category";
    case ErrorCode::kExhausted: return "lexicon_exhausted";
    case ErrorCode::kUndefined: return "undefined";
    case ErrorCode::kTransport: return "transport_error";
    case ErrorCode::kEndpoint: return "endpoint_error";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace promptlens
