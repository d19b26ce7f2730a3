#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coha {

enum class ErrorCode {
  malformed_document,
  invalid_model,
  invalid_argument,
  unknown_id,
  protocol,
  duplicate_query,
  transport,
  authentication,
  fixture_exhausted,
  session_busy,
  coverage_gap,
  token_mismatch,
  not_found,
  conflict,
  blinded,
  unauthorized,
  lock_held,
  store_corrupt,
  schema_too_new,
  io,
};

std::string_view to_string(ErrorCode code);

// Every failure surfaced by the library. `details` carries machine-readable
// items (offending ids, uncovered ranges, missing sessions).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::vector<std::string> details = {})
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::vector<std::string>& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace coha
