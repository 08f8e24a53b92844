#include "optiroute/error.hpp"
#include "optiroute/types.hpp"

namespace optiroute {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MalformedCatalog: return "MalformedCatalog";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::EmptyCatalog: return "EmptyCatalog";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyQuery: return "EmptyQuery";
    case ErrorCode::ZeroPreferences: return "ZeroPreferences";
    case ErrorCode::NoModelAvailable: return "NoModelAvailable";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::UnknownDecision: return "UnknownDecision";
    case ErrorCode::DuplicateFeedback: return "DuplicateFeedback";
    case ErrorCode::UnknownPolicyModel: return "UnknownPolicyModel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BackendFailure: return "BackendFailure";
    case ErrorCode::BackendTimeout: return "BackendTimeout";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

std::string_view to_string(TaskType t) noexcept {
  switch (t) {
    case TaskType::sentiment_analysis: return "sentiment_analysis";
    case TaskType::summarization: return "summarization";
    case TaskType::translation: return "translation";
    case TaskType::question_answering: return "question_answering";
    case TaskType::code_generation: return "code_generation";
    case TaskType::classification: return "classification";
    case TaskType::extraction: return "extraction";
    case TaskType::text_generation: return "text_generation";
    case TaskType::other: return "other";
  }
  return "other";
}

std::string_view to_string(Domain d) noexcept {
  switch (d) {
    case Domain::general: return "general";
    case Domain::healthcare: return "healthcare";
    case Domain::finance: return "finance";
    case Domain::legal: return "legal";
    case Domain::food_beverage: return "food_beverage";
    case Domain::technology: return "technology";
    case Domain::other: return "other";
  }
  return "other";
}

std::optional<TaskType> parse_task_type(std::string_view s) noexcept {
  for (auto t : kAllTaskTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

std::optional<Domain> parse_domain(std::string_view s) noexcept {
  for (auto d : kAllDomains) {
    if (to_string(d) == s) return d;
  }
  return std::nullopt;
}

}  // namespace optiroute
