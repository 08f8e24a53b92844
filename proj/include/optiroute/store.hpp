#pragma once
#include <chrono>
#include <cstdio>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "optiroute/feedback.hpp"
#include "optiroute/router.hpp"

namespace optiroute {

// Append-only newline-delimited log. Each append is flushed and fsync'd
// before returning.
class AppendLog {
public:
  explicit AppendLog(const std::string& path);
  ~AppendLog();
  AppendLog(const AppendLog&) = delete;
  AppendLog& operator=(const AppendLog&) = delete;

  void append(const std::string& line);

private:
  std::FILE* file_ = nullptr;
  std::string path_;
};

struct DecisionStoreOptions {
  std::optional<std::string> log_path;
  std::chrono::seconds retention = std::chrono::hours(24 * 7);
  std::size_t capacity = 1'000'000;
};

/// Bounded, retention-limited store of routing decisions awaiting feedback.
class DecisionStore {
public:
  explicit DecisionStore(DecisionStoreOptions options = {});

  void put(const RoutingDecision& decision,
           std::chrono::system_clock::time_point at = std::chrono::system_clock::now());

  [[nodiscard]] std::shared_ptr<const RoutingDecision> get(
      const std::string& decision_id,
      std::chrono::system_clock::time_point now = std::chrono::system_clock::now()) const;

  [[nodiscard]] std::size_t size() const;

private:
  struct Entry {
    std::shared_ptr<const RoutingDecision> decision;
    std::chrono::system_clock::time_point stored_at;
  };
  void insert_locked(std::shared_ptr<const RoutingDecision> d,
                     std::chrono::system_clock::time_point at);
  void evict_locked(std::chrono::system_clock::time_point now);

  DecisionStoreOptions options_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, Entry> entries_;
  std::deque<std::string> order_;
  std::unique_ptr<AppendLog> log_;
};

/// Thumbs up/down aggregation. Writes are serialized; readers take the
/// published BiasTable without blocking writers.
class FeedbackStore {
public:
  explicit FeedbackStore(std::optional<std::string> log_path = std::nullopt);

  /// Joins the event to its decision, appends it to the durable log, then
  /// updates counters. Throws UnknownDecision or DuplicateFeedback.
  FeedbackCounters record(const FeedbackEvent& event, const DecisionStore& decisions);

  [[nodiscard]] std::shared_ptr<const BiasTable> table() const;

  /// Rebuilds counters from a feedback log file.
  [[nodiscard]] static BiasTable replay(const std::string& log_path);

private:
  std::mutex writer_;
  mutable std::mutex publish_;
  std::shared_ptr<const BiasTable> table_;
  std::unordered_set<std::string> seen_;
  std::unique_ptr<AppendLog> log_;
};

/// Free-function form of FeedbackStore::record.
FeedbackCounters record_feedback(const FeedbackEvent& event, const DecisionStore& decisions,
                                 FeedbackStore& store);

}  // namespace optiroute
