#pragma once
#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "optiroute/analyzer.hpp"
#include "optiroute/feedback.hpp"
#include "optiroute/registry.hpp"

namespace optiroute {

/// Explicit user weights, each in [0,1].
struct PreferenceVector {
  double accuracy = 0.0;
  double latency = 0.0;
  double cost = 0.0;
  double helpfulness = 0.0;
  double honesty = 0.0;
  double harmlessness = 0.0;
  double steerability = 0.0;
  double creativity = 0.0;

  /// Weights laid out in routing-dimension order (latency on speed, cost on
  /// cost_efficiency).
  [[nodiscard]] Eigen::Matrix<double, kPreferenceDims, 1> weights() const;
  [[nodiscard]] static PreferenceVector uniform(double w = 0.5);
  [[nodiscard]] bool all_zero() const;

  friend bool operator==(const PreferenceVector&, const PreferenceVector&) = default;
};

inline constexpr std::array<std::string_view, kPreferenceDims> kPreferenceNames = {
    "accuracy", "latency", "cost", "helpfulness", "honesty", "harmlessness", "steerability",
    "creativity"};

/// Throws InvalidArgument naming the first weight outside [0,1].
void validate(const PreferenceVector& prefs);

/// Parses "accuracy=1.0,cost=0.8"; unspecified weights are 0.0.
/// Throws InvalidArgument on unknown keys, bad numbers or out-of-range values.
[[nodiscard]] PreferenceVector parse_preferences(std::string_view csv);

struct Profile {
  std::string name;
  PreferenceVector prefs;
};

inline constexpr std::string_view kBalancedProfile = "balanced";

/// Built-in presets: balanced, cost-effective, ethically-aligned, latency-first.
[[nodiscard]] const std::map<std::string, PreferenceVector, std::less<>>& default_profiles();

/// [prefs..., complexity]. Throws ZeroPreferences when every component is 0.
[[nodiscard]] TaskVector build_task_vector(const PreferenceVector& prefs,
                                           const TaskProfile& profile);

enum class FallbackLevel { none, expanded_k, relaxed_domain, generalist };

[[nodiscard]] std::string_view to_string(FallbackLevel level) noexcept;
[[nodiscard]] std::optional<FallbackLevel> parse_fallback_level(std::string_view s) noexcept;

struct RouterConfig {
  std::size_t k = 10;
  double min_reliability = 0.0;
  unsigned fallback_max_doublings = 3;
};

void validate(const RouterConfig& cfg);

struct FilterOptions {
  bool task_type = true;
  bool domain = true;
  bool generalist_only = false;
};

/// Keeps neighbors whose card supports the task type, covers the domain
/// (general matches anything) and meets min_reliability. Order preserved.
[[nodiscard]] std::vector<Neighbor> filter_candidates(const std::vector<Neighbor>& candidates,
                                                      const TaskProfile& profile,
                                                      const NormalizedCatalog& catalog,
                                                      const RouterConfig& cfg,
                                                      FilterOptions options = {});

[[nodiscard]] bool passes_filters(const ModelCard& card, const TaskProfile& profile,
                                  const RouterConfig& cfg, FilterOptions options = {});

/// Weighted mean of the first eight model dimensions plus bias, clamped to
/// [0,1]. All-zero weights are replaced by uniform weights.
[[nodiscard]] double score(const ModelVector& model, const PreferenceVector& prefs, double bias);

struct ScoredCandidate {
  std::string model_id;
  double similarity = 0.0;
  double score = 0.0;
};

struct RoutingDecision {
  std::string decision_id;
  std::string selected;
  double score = 0.0;
  double similarity = 0.0;
  std::vector<ScoredCandidate> candidates;
  FallbackLevel fallback_level = FallbackLevel::none;
  TaskProfile profile;
  PreferenceVector prefs;
  std::uint64_t catalog_version = 0;
  std::string analyzer_tag;
  std::vector<std::string> tags;
};

using BiasSource = std::function<double(std::string_view model_id, const ClusterKey&)>;

[[nodiscard]] BiasSource no_bias();
[[nodiscard]] BiasSource bias_source(const BiasTable& table);

/// Process-unique decision ids: "<random node prefix>-<counter>".
class DecisionIdGenerator {
public:
  DecisionIdGenerator();
  explicit DecisionIdGenerator(std::string prefix) : prefix_(std::move(prefix)) {}
  [[nodiscard]] std::string next();

private:
  std::string prefix_;
  std::atomic<std::uint64_t> counter_{0};
};

struct RouteContext {
  BiasSource bias = no_bias();
  AnalyzeFn analyzer = heuristic_analyzer();
  DecisionIdGenerator* ids = nullptr;  // defaults to a process-wide generator
};

/// Routes a profile that has already been analyzed. Used by route() and the
/// batch/simulation paths that share one analysis across policies.
[[nodiscard]] RoutingDecision route_profile(const TaskProfile& profile,
                                            const PreferenceVector& prefs,
                                            const NormalizedCatalog& catalog,
                                            const RouterConfig& cfg, const BiasSource& bias);

/// analyze -> task vector -> kNN -> filter -> score -> select, with the
/// expanded_k / relaxed_domain / generalist fallback cascade.
/// Throws EmptyQuery, EmptyCatalog, ZeroPreferences, NoModelAvailable.
[[nodiscard]] RoutingDecision route(std::string_view query, const PreferenceVector& prefs,
                                    const NormalizedCatalog& catalog, const RouterConfig& cfg,
                                    const RouteContext& ctx = {});

struct BatchDecision {
  std::string selected;
  std::size_t batch_size = 0;
  std::vector<std::size_t> sample_indices;
  std::vector<RoutingDecision> decisions;
  std::string selection_basis;  // "mean_score" or "modal"
  double mean_score = 0.0;
  std::uint64_t catalog_version = 0;
};

/// clamp(ceil(rate * n), 1, n).
[[nodiscard]] std::size_t batch_sample_size(std::size_t n, double sample_rate);

/// Samples, routes the samples, then picks one model for the whole batch.
/// Throws EmptyBatch, InvalidArgument (rate outside (0,1]), NoModelAvailable.
[[nodiscard]] BatchDecision route_batch(const std::vector<std::string>& queries,
                                        const PreferenceVector& prefs, double sample_rate,
                                        std::uint64_t seed, const NormalizedCatalog& catalog,
                                        const RouterConfig& cfg, const RouteContext& ctx = {});

}  // namespace optiroute
