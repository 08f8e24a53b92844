#pragma once
#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "optiroute/types.hpp"

namespace optiroute {

// Bumped whenever the rule tables or the complexity constants change.
inline constexpr std::string_view kAnalyzerVersion = "heuristic-1";

inline constexpr std::string_view kPruneMarker = "[...]";

struct PruneConfig {
  std::size_t max_words = 512;
  std::size_t head_words = 64;
  std::size_t tail_words = 64;
  std::size_t middle_sample_words = 64;
  std::uint64_t seed = 0;
};

/// Throws InvalidArgument unless all counts are positive and
/// head + tail + middle_sample <= max_words.
void validate(const PruneConfig& cfg);

/// Words are maximal runs of non-whitespace (space, \t, \n, \v, \f, \r).
[[nodiscard]] std::vector<std::string_view> split_words(std::string_view text);

/// Keeps the head and tail of long queries plus an ordered seeded sample of
/// the middle, separated by kPruneMarker. Short texts come back unchanged.
[[nodiscard]] std::string prune_query(std::string_view text, const PruneConfig& cfg = {});

[[nodiscard]] TaskType classify_task(std::string_view text);
[[nodiscard]] Domain classify_domain(std::string_view text);

/// Per-domain lexicon hit counts, indexed like kAllDomains (general is always 0).
[[nodiscard]] std::array<int, kAllDomains.size()> domain_hits(std::string_view text);

struct ComplexitySignals {
  std::size_t words = 0;
  bool negation = false;
  bool multi_step = false;
  bool rare_domain = false;
};

[[nodiscard]] ComplexitySignals complexity_signals(std::string_view text);

/// clamp(0.15 + 0.25*min(1, W/300) + 0.20*neg + 0.20*multi + 0.20*rare, 0, 1)
[[nodiscard]] double estimate_complexity(std::string_view text);

[[nodiscard]] TaskProfile analyze(std::string_view text, const PruneConfig& cfg = {});

struct Analysis {
  TaskProfile profile;
  std::string tag;  // "heuristic", "external" or "fallback-heuristic"
};

using AnalyzeFn = std::function<Analysis(std::string_view)>;

[[nodiscard]] AnalyzeFn heuristic_analyzer(PruneConfig cfg = {});

/// Sends {"query": text} to `endpoint` and validates the structured reply.
/// Any failure (transport, timeout, schema, out-of-range) falls back to the
/// built-in analyzer with tag "fallback-heuristic".
[[nodiscard]] Analysis external_analyze(const std::string& endpoint, std::string_view text,
                                        std::chrono::milliseconds timeout,
                                        const PruneConfig& cfg = {});

/// Parses and validates an external analyzer reply body; throws on violation.
[[nodiscard]] TaskProfile parse_analyzer_reply(std::string_view body);

[[nodiscard]] AnalyzeFn external_analyzer(std::string endpoint,
                                          std::chrono::milliseconds timeout =
                                              std::chrono::milliseconds(500),
                                          PruneConfig cfg = {});

}  // namespace optiroute
