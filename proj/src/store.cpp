#include "optiroute/store.hpp"

#include <cerrno>
#include <cstring>
#include <fstream>
#include <unistd.h>

#include "optiroute/error.hpp"
#include "optiroute/serialize.hpp"

namespace optiroute {

using nlohmann::json;

AppendLog::AppendLog(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "a");
  if (file_ == nullptr) {
    throw Error(ErrorCode::ConfigError,
                "cannot open log " + path + ": " + std::strerror(errno));
  }
}

AppendLog::~AppendLog() {
  if (file_ != nullptr) std::fclose(file_);
}

void AppendLog::append(const std::string& line) {
  if (std::fputs(line.c_str(), file_) < 0 || std::fputc('\n', file_) == EOF ||
      std::fflush(file_) != 0 || ::fsync(fileno(file_)) != 0) {
    throw Error(ErrorCode::ConfigError, "write to log " + path_ + " failed");
  }
}

namespace {

template <typename Fn>
void for_each_line(const std::string& path, Fn&& fn) {
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    // A torn final line from a crash mid-append is skipped.
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    fn(j);
  }
}

}  // namespace

DecisionStore::DecisionStore(DecisionStoreOptions options) : options_(std::move(options)) {
  if (options_.log_path) {
    const auto now = std::chrono::system_clock::now();
    for_each_line(*options_.log_path, [&](const json& j) {
      const auto at = parse_utc(j.at("ts").get<std::string>());
      if (now - at > options_.retention) return;
      insert_locked(std::make_shared<const RoutingDecision>(decision_from_json(j.at("decision"))),
                    at);
    });
    log_ = std::make_unique<AppendLog>(*options_.log_path);
  }
}

void DecisionStore::insert_locked(std::shared_ptr<const RoutingDecision> d,
                                  std::chrono::system_clock::time_point at) {
  const std::string id = d->decision_id;
  if (entries_.emplace(id, Entry{std::move(d), at}).second) order_.push_back(id);
  while (entries_.size() > options_.capacity && !order_.empty()) {
    entries_.erase(order_.front());
    order_.pop_front();
  }
}

void DecisionStore::evict_locked(std::chrono::system_clock::time_point now) {
  while (!order_.empty()) {
    auto it = entries_.find(order_.front());
    if (it != entries_.end() && now - it->second.stored_at <= options_.retention) break;
    if (it != entries_.end()) entries_.erase(it);
    order_.pop_front();
  }
}

void DecisionStore::put(const RoutingDecision& decision, std::chrono::system_clock::time_point at) {
  auto shared = std::make_shared<const RoutingDecision>(decision);
  std::lock_guard lock(mutex_);
  if (log_) {
    const json line = {{"ts", format_utc(at)}, {"decision", to_json(decision)}};
    log_->append(line.dump());
  }
  evict_locked(at);
  insert_locked(std::move(shared), at);
}

std::shared_ptr<const RoutingDecision> DecisionStore::get(
    const std::string& decision_id, std::chrono::system_clock::time_point now) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(decision_id);
  if (it == entries_.end() || now - it->second.stored_at > options_.retention) return nullptr;
  return it->second.decision;
}

std::size_t DecisionStore::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

namespace {

struct LogRecord {
  std::string decision_id;
  std::string model_id;
  ClusterKey cluster;
  Signal signal;
};

LogRecord parse_record(const json& j) {
  LogRecord r;
  r.decision_id = j.at("decision_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  const auto task = parse_task_type(j.at("task_type").get<std::string>());
  const auto domain = parse_domain(j.at("domain").get<std::string>());
  const auto signal = parse_signal(j.at("signal").get<std::string>());
  if (!task || !domain || !signal) {
    throw Error(ErrorCode::InvalidArgument, "invalid feedback log record");
  }
  r.cluster = {*task, *domain, j.at("complexity_bucket").get<int>()};
  r.signal = *signal;
  return r;
}

}  // namespace

FeedbackStore::FeedbackStore(std::optional<std::string> log_path) {
  auto table = std::make_shared<BiasTable>();
  if (log_path) {
    for_each_line(*log_path, [&](const json& j) {
      const auto r = parse_record(j);
      if (!seen_.insert(r.decision_id).second) return;
      table->apply(r.model_id, r.cluster, r.signal);
    });
    log_ = std::make_unique<AppendLog>(*log_path);
  }
  table_ = std::move(table);
}

FeedbackCounters FeedbackStore::record(const FeedbackEvent& event, const DecisionStore& decisions) {
  std::lock_guard writer(writer_);
  const auto decision = decisions.get(event.decision_id);
  if (!decision) {
    throw Error(ErrorCode::UnknownDecision, "unknown decision id \"" + event.decision_id + "\"");
  }
  if (seen_.contains(event.decision_id)) {
    throw Error(ErrorCode::DuplicateFeedback,
                "feedback already recorded for decision \"" + event.decision_id + "\"");
  }
  const ClusterKey cluster = cluster_of(decision->profile);
  if (log_) {
    const json line = {{"decision_id", event.decision_id},
                       {"model_id", decision->selected},
                       {"task_type", to_string(cluster.task_type)},
                       {"domain", to_string(cluster.domain)},
                       {"complexity_bucket", cluster.complexity_bucket},
                       {"signal", to_string(event.signal)},
                       {"ts", format_utc(event.timestamp)}};
    log_->append(line.dump());
  }
  seen_.insert(event.decision_id);

  auto next = std::make_shared<BiasTable>(*table());
  next->apply(decision->selected, cluster, event.signal);
  const auto counters = next->counters(decision->selected, cluster);
  {
    std::lock_guard lock(publish_);
    table_ = std::move(next);
  }
  return counters;
}

std::shared_ptr<const BiasTable> FeedbackStore::table() const {
  std::lock_guard lock(publish_);
  return table_;
}

BiasTable FeedbackStore::replay(const std::string& log_path) {
  BiasTable table;
  std::unordered_set<std::string> seen;
  for_each_line(log_path, [&](const json& j) {
    const auto r = parse_record(j);
    if (seen.insert(r.decision_id).second) table.apply(r.model_id, r.cluster, r.signal);
  });
  return table;
}

FeedbackCounters record_feedback(const FeedbackEvent& event, const DecisionStore& decisions,
                                 FeedbackStore& store) {
  return store.record(event, decisions);
}

}  // namespace optiroute
