#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace tutorsim {

// Every failure raised by the core library carries one of these codes.
// The HTTP facade and the CLI translate them into their own surfaces
// (ApiError codes, exit codes) without inspecting message text.
enum class ErrorCode {
  validation_failed,
  stale_conversation,
  session_busy,
  provider_error,
  transport_error,
  script_miss,
  empty_completion,
  not_found,
  schema_error,
  io_error,
  index_not_student_message,
  k_out_of_range,
  length_mismatch,
  out_of_range,
  empty_records,
  config_error,
};

std::string_view to_string(ErrorCode code);
// Inverse of to_string; schema_error for unknown names.
ErrorCode error_code_from_string(std::string_view name);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, nlohmann::json details = nullptr);

  ErrorCode code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

// Published API error vocabulary. Internal codes collapse onto this set.
std::string_view api_code(ErrorCode code);
int http_status(ErrorCode code);

// CLI exit codes: 0 success, 2 config, 3 provider, 4 validation.
int exit_code(ErrorCode code);

}  // namespace tutorsim
