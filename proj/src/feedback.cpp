#include "optiroute/feedback.hpp"

#include <algorithm>
#include <cmath>

namespace optiroute {

std::string_view to_string(Signal s) noexcept { return s == Signal::up ? "up" : "down"; }

std::optional<Signal> parse_signal(std::string_view s) noexcept {
  if (s == "up") return Signal::up;
  if (s == "down") return Signal::down;
  return std::nullopt;
}

ClusterKey cluster_of(const TaskProfile& profile) noexcept {
  const int bucket = static_cast<int>(std::floor(profile.complexity / 0.25));
  return {profile.task_type, profile.domain, std::clamp(bucket, 0, 3)};
}

void BiasTable::apply(std::string_view model_id, const ClusterKey& key, Signal signal) {
  auto& c = counters_[Key{std::string(model_id), key}];
  if (signal == Signal::up) {
    ++c.ups;
  } else {
    ++c.downs;
  }
}

FeedbackCounters BiasTable::counters(std::string_view model_id, const ClusterKey& key) const {
  auto it = counters_.find(Key{std::string(model_id), key});
  return it == counters_.end() ? FeedbackCounters{} : it->second;
}

double bias_from_counts(long long ups, long long downs) noexcept {
  return std::clamp(kBiasStep * static_cast<double>(ups - downs), -kBiasLimit, kBiasLimit);
}

double BiasTable::bias(std::string_view model_id, const ClusterKey& key) const {
  const auto c = counters(model_id, key);
  return bias_from_counts(c.ups, c.downs);
}

bool operator==(const BiasTable& a, const BiasTable& b) {
  if (a.counters_.size() != b.counters_.size()) return false;
  return std::equal(a.counters_.begin(), a.counters_.end(), b.counters_.begin(),
                    [](const auto& x, const auto& y) {
                      return x.first == y.first && x.second.ups == y.second.ups &&
                             x.second.downs == y.second.downs;
                    });
}

double bias(std::string_view model_id, const ClusterKey& key, const BiasTable& table) {
  return table.bias(model_id, key);
}

}  // namespace optiroute
