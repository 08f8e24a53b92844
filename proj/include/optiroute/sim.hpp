#pragma once
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "optiroute/registry.hpp"
#include "optiroute/router.hpp"

namespace optiroute::sim {

struct ComplexityMix {
  double low = 1.0;
  double mid = 0.0;
  double high = 0.0;
};

struct WorkloadSpec {
  std::size_t n_queries = 100;
  std::map<TaskType, double> task_mix;
  std::map<Domain, double> domain_mix;
  ComplexityMix complexity;
  std::uint64_t seed = 0;
  PreferenceVector prefs = PreferenceVector::uniform(0.5);
};

/// Throws InvalidArgument unless n > 0 and each distribution sums to 1 +- 1e-9.
void validate(const WorkloadSpec& spec);

[[nodiscard]] WorkloadSpec parse_workload(const nlohmann::json& doc);
[[nodiscard]] WorkloadSpec load_workload_file(const std::string& path);

struct WorkloadItem {
  std::string query;
  TaskProfile ground;
};

/// Template-built queries; deterministic for a fixed seed.
[[nodiscard]] std::vector<WorkloadItem> generate_workload(const WorkloadSpec& spec);

/// Random valid catalog of `n` models with ids "m00", "m01", ...; every
/// model supports every task type with probability 0.6 per type, and every
/// `generalist_every`-th model is a generalist (0 disables).
[[nodiscard]] std::vector<ModelCard> generate_catalog(std::size_t n, std::uint64_t seed,
                                                      std::size_t generalist_every = 0);

enum class PolicyKind { optiroute, always_model, random, cheapest_passing_filter };

struct Policy {
  PolicyKind kind = PolicyKind::optiroute;
  std::string model_id;  // always_model
  std::uint64_t seed = 0;  // random
  [[nodiscard]] std::string name() const;
};

/// "optiroute,always:flagship,random,random:7,cheapest_passing_filter".
/// Plain "random" uses `default_seed`.
[[nodiscard]] std::vector<Policy> parse_policies(const std::string& csv,
                                                 std::uint64_t default_seed = 0);

struct PolicyResult {
  std::string name;
  double total_cost_usd = 0.0;
  double mean_latency_ms = 0.0;
  double mean_selection_score = 0.0;
  double fallback_rate = 0.0;
  std::map<std::string, std::size_t> histogram;
};

struct PolicyReport {
  std::size_t n_queries = 0;
  std::uint64_t seed = 0;
  std::vector<PolicyResult> policies;
};

inline constexpr std::string_view kUnrouted = "(unrouted)";

/// Replays every query through every policy. Cost = cost_per_1k * words/1000,
/// latency = catalog latency_ms, quality = weighted score with `prefs`.
/// Throws UnknownPolicyModel for always:<id> with an id outside the catalog.
[[nodiscard]] PolicyReport evaluate(const std::vector<WorkloadItem>& workload,
                                    const NormalizedCatalog& catalog,
                                    const std::vector<Policy>& policies,
                                    const PreferenceVector& prefs, const RouterConfig& cfg = {},
                                    const PruneConfig& prune = {}, unsigned threads = 1);

[[nodiscard]] nlohmann::json to_json(const PolicyReport& report);
[[nodiscard]] std::string render_table(const PolicyReport& report);

}  // namespace optiroute::sim
