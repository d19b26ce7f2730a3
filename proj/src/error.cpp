#include "coha/error.hpp"

namespace coha {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::malformed_document: return "malformed_document";
    case ErrorCode::invalid_model: return "invalid_model";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::unknown_id: return "unknown_id";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::duplicate_query: return "duplicate_query";
    case ErrorCode::transport: return "transport";
    case ErrorCode::authentication: return "authentication";
    case ErrorCode::fixture_exhausted: return "fixture_exhausted";
    case ErrorCode::session_busy: return "session_busy";
    case ErrorCode::coverage_gap: return "coverage_gap";
    case ErrorCode::token_mismatch: return "token_mismatch";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::conflict: return "conflict";
    case ErrorCode::blinded: return "blinded";
    case ErrorCode::unauthorized: return "unauthorized";
    case ErrorCode::lock_held: return "lock_held";
    case ErrorCode::store_corrupt: return "store_corrupt";
    case ErrorCode::schema_too_new: return "schema_too_new";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

}  // namespace coha
