#include "optiroute/router.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <random>

#include "optiroute/error.hpp"
#include "optiroute/rng.hpp"

namespace optiroute {

Eigen::Matrix<double, kPreferenceDims, 1> PreferenceVector::weights() const {
  Eigen::Matrix<double, kPreferenceDims, 1> w;
  w << accuracy, latency, cost, helpfulness, honesty, harmlessness, steerability, creativity;
  return w;
}

PreferenceVector PreferenceVector::uniform(double w) { return {w, w, w, w, w, w, w, w}; }

bool PreferenceVector::all_zero() const { return (weights().array() == 0.0).all(); }

namespace {

double PreferenceVector::*member_for(std::string_view name) {
  static constexpr std::array<double PreferenceVector::*, kPreferenceDims> members = {
      &PreferenceVector::accuracy,     &PreferenceVector::latency,
      &PreferenceVector::cost,         &PreferenceVector::helpfulness,
      &PreferenceVector::honesty,      &PreferenceVector::harmlessness,
      &PreferenceVector::steerability, &PreferenceVector::creativity};
  for (std::size_t i = 0; i < kPreferenceNames.size(); ++i) {
    if (kPreferenceNames[i] == name) return members[i];
  }
  return nullptr;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

// Selection order: higher score, then lower raw cost, then ascending id.
bool ranks_before(double score_a, const ModelCard& a, double score_b, const ModelCard& b) {
  if (score_a != score_b) return score_a > score_b;
  if (a.metrics.cost_per_1k_tokens_usd != b.metrics.cost_per_1k_tokens_usd) {
    return a.metrics.cost_per_1k_tokens_usd < b.metrics.cost_per_1k_tokens_usd;
  }
  return a.id < b.id;
}

}  // namespace

void validate(const PreferenceVector& prefs) {
  const auto w = prefs.weights();
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!std::isfinite(w(i)) || !in_unit_interval(w(i))) {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "%g", w(i));
      throw Error(ErrorCode::InvalidArgument,
                  "preference \"" + std::string(kPreferenceNames[static_cast<std::size_t>(i)]) +
                      "\" = " + buf + " is outside [0,1]");
    }
  }
}

PreferenceVector parse_preferences(std::string_view csv) {
  PreferenceVector prefs;
  std::size_t start = 0;
  while (start <= csv.size()) {
    auto end = csv.find(',', start);
    if (end == std::string_view::npos) end = csv.size();
    const auto item = trim(csv.substr(start, end - start));
    start = end + 1;
    if (item.empty()) {
      if (end == csv.size()) break;
      continue;
    }
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidArgument,
                  "expected key=value in preferences, got \"" + std::string(item) + "\"");
    }
    const auto key = trim(item.substr(0, eq));
    const auto value = trim(item.substr(eq + 1));
    auto member = member_for(key);
    if (member == nullptr) {
      throw Error(ErrorCode::InvalidArgument, "unknown preference \"" + std::string(key) + "\"");
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
      throw Error(ErrorCode::InvalidArgument,
                  "preference \"" + std::string(key) + "\" has non-numeric value \"" +
                      std::string(value) + "\"");
    }
    prefs.*member = v;
  }
  validate(prefs);
  return prefs;
}

const std::map<std::string, PreferenceVector, std::less<>>& default_profiles() {
  static const std::map<std::string, PreferenceVector, std::less<>> profiles = [] {
    std::map<std::string, PreferenceVector, std::less<>> p;
    p[std::string(kBalancedProfile)] = PreferenceVector::uniform(0.5);
    PreferenceVector cost_effective;
    cost_effective.cost = 1.0;
    cost_effective.latency = 0.6;
    cost_effective.accuracy = 0.4;
    cost_effective.helpfulness = cost_effective.honesty = cost_effective.harmlessness = 0.5;
    cost_effective.steerability = cost_effective.creativity = 0.3;
    p["cost-effective"] = cost_effective;
    PreferenceVector ethical = PreferenceVector::uniform(0.4);
    ethical.helpfulness = ethical.honesty = ethical.harmlessness = 1.0;
    ethical.accuracy = 0.7;
    p["ethically-aligned"] = ethical;
    PreferenceVector latency_first = PreferenceVector::uniform(0.4);
    latency_first.latency = 1.0;
    latency_first.cost = 0.6;
    latency_first.accuracy = 0.5;
    p["latency-first"] = latency_first;
    return p;
  }();
  return profiles;
}

TaskVector build_task_vector(const PreferenceVector& prefs, const TaskProfile& profile) {
  validate(prefs);
  if (!in_unit_interval(profile.complexity)) {
    throw Error(ErrorCode::InvalidArgument, "task complexity outside [0,1]");
  }
  TaskVector v;
  v.head<kPreferenceDims>() = prefs.weights();
  v(kComplexity) = profile.complexity;
  if ((v.array() == 0.0).all()) {
    throw Error(ErrorCode::ZeroPreferences,
                "all preference weights and the task complexity are zero");
  }
  return v;
}

std::string_view to_string(FallbackLevel level) noexcept {
  switch (level) {
    case FallbackLevel::none: return "none";
    case FallbackLevel::expanded_k: return "expanded_k";
    case FallbackLevel::relaxed_domain: return "relaxed_domain";
    case FallbackLevel::generalist: return "generalist";
  }
  return "none";
}

std::optional<FallbackLevel> parse_fallback_level(std::string_view s) noexcept {
  for (auto l : {FallbackLevel::none, FallbackLevel::expanded_k, FallbackLevel::relaxed_domain,
                 FallbackLevel::generalist}) {
    if (to_string(l) == s) return l;
  }
  return std::nullopt;
}

void validate(const RouterConfig& cfg) {
  if (cfg.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  if (!in_unit_interval(cfg.min_reliability)) {
    throw Error(ErrorCode::InvalidArgument, "min_reliability outside [0,1]");
  }
}

bool passes_filters(const ModelCard& card, const TaskProfile& profile, const RouterConfig& cfg,
                    FilterOptions options) {
  if (options.generalist_only && !card.generalist) return false;
  if (options.task_type && !card.task_types.contains(profile.task_type)) return false;
  if (options.domain && profile.domain != Domain::general && !card.domains.contains(profile.domain)) {
    return false;
  }
  return card.metrics.reliability >= cfg.min_reliability;
}

std::vector<Neighbor> filter_candidates(const std::vector<Neighbor>& candidates,
                                        const TaskProfile& profile,
                                        const NormalizedCatalog& catalog, const RouterConfig& cfg,
                                        FilterOptions options) {
  std::vector<Neighbor> kept;
  for (const auto& c : candidates) {
    if (passes_filters(catalog.card(c.index), profile, cfg, options)) kept.push_back(c);
  }
  return kept;
}

double score(const ModelVector& model, const PreferenceVector& prefs, double bias) {
  auto w = prefs.weights();
  if (w.sum() <= 0.0) w.setConstant(0.5);
  const double weighted = w.dot(model.head<kPreferenceDims>()) / w.sum();
  return std::clamp(weighted + bias, 0.0, 1.0);
}

BiasSource no_bias() {
  return [](std::string_view, const ClusterKey&) { return 0.0; };
}

BiasSource bias_source(const BiasTable& table) {
  return [&table](std::string_view id, const ClusterKey& key) { return table.bias(id, key); };
}

DecisionIdGenerator::DecisionIdGenerator() {
  std::random_device rd;
  const std::uint64_t r = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(r));
  prefix_ = buf;
}

std::string DecisionIdGenerator::next() {
  return "d-" + prefix_ + "-" + std::to_string(counter_.fetch_add(1) + 1);
}

RoutingDecision route_profile(const TaskProfile& profile, const PreferenceVector& prefs,
                              const NormalizedCatalog& catalog, const RouterConfig& cfg,
                              const BiasSource& bias) {
  validate(cfg);
  if (catalog.empty()) throw Error(ErrorCode::EmptyCatalog, "catalog has no models");
  const TaskVector query = build_task_vector(prefs, profile);
  const std::size_t n = catalog.size();

  std::size_t k = std::min(cfg.k, n);
  auto neighbors = top_k(catalog, query, k);
  auto survivors = filter_candidates(neighbors, profile, catalog, cfg);
  FallbackLevel level = FallbackLevel::none;

  for (unsigned d = 0; survivors.empty() && d < cfg.fallback_max_doublings && k < n; ++d) {
    k = std::min(2 * k, n);
    neighbors = top_k(catalog, query, k);
    survivors = filter_candidates(neighbors, profile, catalog, cfg);
    if (!survivors.empty()) level = FallbackLevel::expanded_k;
  }
  if (survivors.empty()) {
    survivors = filter_candidates(neighbors, profile, catalog, cfg,
                                  {.task_type = true, .domain = false});
    if (!survivors.empty()) level = FallbackLevel::relaxed_domain;
  }
  if (survivors.empty()) {
    survivors = filter_candidates(top_k(catalog, query, n), profile, catalog, cfg,
                                  {.task_type = false, .domain = false, .generalist_only = true});
    if (!survivors.empty()) level = FallbackLevel::generalist;
  }
  if (survivors.empty()) {
    throw Error(ErrorCode::NoModelAvailable,
                "no model in the catalog can serve task type \"" +
                    std::string(to_string(profile.task_type)) + "\" in domain \"" +
                    std::string(to_string(profile.domain)) + "\"");
  }

  const ClusterKey cluster = cluster_of(profile);
  struct Scored {
    const Neighbor* neighbor;
    double score;
  };
  std::vector<Scored> scored;
  scored.reserve(survivors.size());
  for (const auto& s : survivors) {
    scored.push_back({&s, score(catalog.vector(s.index), prefs, bias(s.model_id, cluster))});
  }
  std::sort(scored.begin(), scored.end(), [&](const Scored& a, const Scored& b) {
    return ranks_before(a.score, catalog.card(a.neighbor->index), b.score,
                        catalog.card(b.neighbor->index));
  });

  RoutingDecision decision;
  decision.selected = scored.front().neighbor->model_id;
  decision.score = scored.front().score;
  decision.similarity = scored.front().neighbor->similarity;
  for (const auto& s : scored) {
    decision.candidates.push_back({s.neighbor->model_id, s.neighbor->similarity, s.score});
  }
  decision.fallback_level = level;
  decision.profile = profile;
  decision.prefs = prefs;
  decision.catalog_version = catalog.version();
  return decision;
}

namespace {
DecisionIdGenerator& process_ids() {
  static DecisionIdGenerator ids;
  return ids;
}
}  // namespace

RoutingDecision route(std::string_view query, const PreferenceVector& prefs,
                      const NormalizedCatalog& catalog, const RouterConfig& cfg,
                      const RouteContext& ctx) {
  if (catalog.empty()) throw Error(ErrorCode::EmptyCatalog, "catalog has no models");
  const Analysis analysis = ctx.analyzer(query);
  auto decision = route_profile(analysis.profile, prefs, catalog, cfg, ctx.bias);
  decision.analyzer_tag = analysis.tag;
  decision.decision_id = (ctx.ids != nullptr ? *ctx.ids : process_ids()).next();
  return decision;
}

std::size_t batch_sample_size(std::size_t n, double sample_rate) {
  if (n == 0) return 0;
  const double raw = std::ceil(sample_rate * static_cast<double>(n) - 1e-9);
  const double clamped = std::clamp(raw, 1.0, static_cast<double>(n));
  return static_cast<std::size_t>(clamped);
}

BatchDecision route_batch(const std::vector<std::string>& queries, const PreferenceVector& prefs,
                          double sample_rate, std::uint64_t seed,
                          const NormalizedCatalog& catalog, const RouterConfig& cfg,
                          const RouteContext& ctx) {
  if (queries.empty()) throw Error(ErrorCode::EmptyBatch, "batch has no queries");
  if (!(sample_rate > 0.0 && sample_rate <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "sample_rate must be in (0, 1]");
  }
  if (catalog.empty()) throw Error(ErrorCode::EmptyCatalog, "catalog has no models");

  BatchDecision batch;
  batch.batch_size = queries.size();
  batch.catalog_version = catalog.version();
  Rng rng(seed);
  batch.sample_indices =
      rng.sample_indices(queries.size(), batch_sample_size(queries.size(), sample_rate));
  for (auto idx : batch.sample_indices) {
    batch.decisions.push_back(route(queries[idx], prefs, catalog, cfg, ctx));
  }

  std::vector<std::size_t> pool;
  for (const auto& d : batch.decisions) {
    for (const auto& c : d.candidates) pool.push_back(catalog.find(c.model_id));
  }
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  std::optional<std::size_t> best;
  double best_mean = 0.0;
  for (auto idx : pool) {
    const auto& card = catalog.card(idx);
    bool passes_all = true;
    double total = 0.0;
    for (const auto& d : batch.decisions) {
      if (!passes_filters(card, d.profile, cfg)) {
        passes_all = false;
        break;
      }
      total += score(catalog.vector(idx), prefs, ctx.bias(card.id, cluster_of(d.profile)));
    }
    if (!passes_all) continue;
    const double mean = total / static_cast<double>(batch.decisions.size());
    if (!best || ranks_before(mean, card, best_mean, catalog.card(*best))) {
      best = idx;
      best_mean = mean;
    }
  }

  if (best) {
    batch.selected = catalog.card(*best).id;
    batch.selection_basis = "mean_score";
    batch.mean_score = best_mean;
    return batch;
  }

  std::map<std::string, std::pair<std::size_t, double>> votes;  // id -> (count, score sum)
  for (const auto& d : batch.decisions) {
    auto& v = votes[d.selected];
    ++v.first;
    v.second += d.score;
  }
  const ModelCard* winner = nullptr;
  std::size_t winner_votes = 0;
  for (const auto& [id, v] : votes) {
    const auto& card = catalog.card(catalog.find(id));
    const bool better =
        winner == nullptr || v.first > winner_votes ||
        (v.first == winner_votes && ranks_before(0.0, card, 0.0, *winner));
    if (better) {
      winner = &card;
      winner_votes = v.first;
    }
  }
  batch.selected = winner->id;
  batch.selection_basis = "modal";
  batch.mean_score = votes[winner->id].second / static_cast<double>(winner_votes);
  return batch;
}

}  // namespace optiroute
