#pragma once
#include <chrono>
#include <string>

#include <nlohmann/json.hpp>

#include "optiroute/feedback.hpp"
#include "optiroute/registry.hpp"
#include "optiroute/router.hpp"

namespace optiroute {

// Wire format shared by the HTTP service and the CLI's --json output.

[[nodiscard]] nlohmann::json to_json(const TaskProfile& profile);
[[nodiscard]] TaskProfile profile_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json to_json(const PreferenceVector& prefs);
/// Missing keys are 0.0; unknown keys and out-of-range values throw InvalidArgument.
[[nodiscard]] PreferenceVector prefs_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json to_json(const RoutingDecision& decision);
[[nodiscard]] RoutingDecision decision_from_json(const nlohmann::json& j);

[[nodiscard]] nlohmann::json to_json(const BatchDecision& batch);

[[nodiscard]] nlohmann::json to_json(const ModelCard& card);
/// {"schema_version": 1, "models": [...]}
[[nodiscard]] nlohmann::json catalog_document(const std::vector<ModelCard>& cards);

/// {version, models[{id, task_types, domains, normalized_vector}]}
[[nodiscard]] nlohmann::json catalog_summary(const NormalizedCatalog& catalog);

[[nodiscard]] std::string format_utc(std::chrono::system_clock::time_point t);
[[nodiscard]] std::chrono::system_clock::time_point parse_utc(const std::string& s);

}  // namespace optiroute
