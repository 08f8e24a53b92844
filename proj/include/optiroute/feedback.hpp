#pragma once
#include <chrono>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>

#include "optiroute/types.hpp"

namespace optiroute {

inline constexpr double kBiasStep = 0.1;
inline constexpr double kBiasLimit = 0.3;

enum class Signal { up, down };

[[nodiscard]] std::string_view to_string(Signal s) noexcept;
[[nodiscard]] std::optional<Signal> parse_signal(std::string_view s) noexcept;

struct FeedbackEvent {
  std::string decision_id;
  Signal signal = Signal::up;
  std::chrono::system_clock::time_point timestamp = std::chrono::system_clock::now();
};

// Granularity at which feedback is aggregated.
struct ClusterKey {
  TaskType task_type = TaskType::other;
  Domain domain = Domain::general;
  int complexity_bucket = 0;  // min(3, floor(complexity / 0.25))

  friend auto operator<=>(const ClusterKey&, const ClusterKey&) = default;
};

[[nodiscard]] ClusterKey cluster_of(const TaskProfile& profile) noexcept;

struct FeedbackCounters {
  long long ups = 0;
  long long downs = 0;
};

class BiasTable {
public:
  void apply(std::string_view model_id, const ClusterKey& key, Signal signal);

  [[nodiscard]] FeedbackCounters counters(std::string_view model_id, const ClusterKey& key) const;

  /// clamp(0.1 * (ups - downs), -0.3, +0.3); 0 for unseen keys.
  [[nodiscard]] double bias(std::string_view model_id, const ClusterKey& key) const;

  [[nodiscard]] std::size_t size() const noexcept { return counters_.size(); }

  friend bool operator==(const BiasTable& a, const BiasTable& b);

private:
  using Key = std::tuple<std::string, ClusterKey>;
  std::map<Key, FeedbackCounters> counters_;
};

[[nodiscard]] double bias(std::string_view model_id, const ClusterKey& key, const BiasTable& table);

/// The bias formula on raw counters.
[[nodiscard]] double bias_from_counts(long long ups, long long downs) noexcept;

}  // namespace optiroute
