#pragma once
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace optiroute {

enum class ErrorCode {
  MalformedCatalog,
  SchemaViolation,
  EmptyCatalog,
  ZeroVector,
  EmptyQuery,
  ZeroPreferences,
  NoModelAvailable,
  EmptyBatch,
  UnknownDecision,
  DuplicateFeedback,
  UnknownPolicyModel,
  InvalidArgument,
  BackendFailure,
  BackendTimeout,
  ConfigError,
};

[[nodiscard]] std::string_view to_string(ErrorCode code) noexcept;

// All domain failures surface as this exception. `details` holds one entry
// per violation when a validator collects more than one.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& message, std::vector<std::string> details = {})
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }
  [[nodiscard]] const std::vector<std::string>& details() const noexcept { return details_; }

private:
  ErrorCode code_;
  std::vector<std::string> details_;
};

}  // namespace optiroute
