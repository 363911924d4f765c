#include "tutorsim/error.hpp"

namespace tutorsim {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::validation_failed: return "validation_failed";
    case ErrorCode::stale_conversation: return "stale_conversation";
    case ErrorCode::session_busy: return "session_busy";
    case ErrorCode::provider_error: return "provider_error";
    case ErrorCode::transport_error: return "transport_error";
    case ErrorCode::script_miss: return "script_miss";
    case ErrorCode::empty_completion: return "empty_completion";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::schema_error: return "schema_error";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::index_not_student_message: return "index_not_student_message";
    case ErrorCode::k_out_of_range: return "k_out_of_range";
    case ErrorCode::length_mismatch: return "length_mismatch";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::empty_records: return "empty_records";
    case ErrorCode::config_error: return "config_error";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message, nlohmann::json details)
    : std::runtime_error(message), code_(code), details_(std::move(details)) {}

ErrorCode error_code_from_string(std::string_view name) {
  for (int i = 0; i <= static_cast<int>(ErrorCode::config_error); ++i) {
    const auto code = static_cast<ErrorCode>(i);
    if (to_string(code) == name) return code;
  }
  throw Error(ErrorCode::schema_error, "unknown error code '" + std::string(name) + "'");
}

std::string_view api_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::stale_conversation: return "stale_conversation";
    case ErrorCode::session_busy: return "session_busy";
    case ErrorCode::not_found: return "not_found";
    case ErrorCode::schema_error:
    case ErrorCode::io_error: return "schema_error";
    case ErrorCode::provider_error:
    case ErrorCode::transport_error:
    case ErrorCode::script_miss:
    case ErrorCode::empty_completion: return "provider_error";
    default: return "validation_failed";
  }
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::stale_conversation:
    case ErrorCode::session_busy: return 409;
    case ErrorCode::not_found: return 404;
    case ErrorCode::schema_error: return 422;
    case ErrorCode::io_error: return 500;
    case ErrorCode::provider_error:
    case ErrorCode::transport_error:
    case ErrorCode::script_miss:
    case ErrorCode::empty_completion: return 502;
    default: return 400;
  }
}

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::provider_error:
    case ErrorCode::transport_error:
    case ErrorCode::script_miss:
    case ErrorCode::empty_completion: return 3;
    case ErrorCode::config_error:
    case ErrorCode::schema_error:
    case ErrorCode::io_error:
    case ErrorCode::not_found: return 2;
    default: return 4;
  }
}

}  // namespace tutorsim
