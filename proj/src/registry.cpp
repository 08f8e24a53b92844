#include "optiroute/registry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace optiroute {

using nlohmann::json;

namespace {

std::string model_label(std::string_view id) { return "model \"" + std::string(id) + "\""; }

constexpr std::array<std::string_view, 8> kModelKeys = {
    "id", "name", "provider", "params_b", "task_types", "domains", "generalist", "metrics"};
constexpr std::string_view kAnnotationsKey = "annotations";

struct MetricField {
  std::string_view key;
  double RawMetrics::*member;
  enum class Range { Unit, Positive, NonNegative } range;
};

constexpr std::array<MetricField, 10> kMetricFields = {{
    {"accuracy", &RawMetrics::accuracy, MetricField::Range::Unit},
    {"latency_ms", &RawMetrics::latency_ms, MetricField::Range::Positive},
    {"cost_per_1k_tokens_usd", &RawMetrics::cost_per_1k_tokens_usd, MetricField::Range::NonNegative},
    {"helpfulness", &RawMetrics::helpfulness, MetricField::Range::Unit},
    {"honesty", &RawMetrics::honesty, MetricField::Range::Unit},
    {"harmlessness", &RawMetrics::harmlessness, MetricField::Range::Unit},
    {"steerability", &RawMetrics::steerability, MetricField::Range::Unit},
    {"creativity", &RawMetrics::creativity, MetricField::Range::Unit},
    {"reliability", &RawMetrics::reliability, MetricField::Range::Unit},
    {"complexity_capability", &RawMetrics::complexity_capability, MetricField::Range::Unit},
}};

std::string range_violation(const MetricField& f, double v) {
  std::ostringstream os;
  os << "metrics." << f.key << " = " << v;
  switch (f.range) {
    case MetricField::Range::Unit: os << " out of range [0,1]"; break;
    case MetricField::Range::Positive: os << " must be > 0"; break;
    case MetricField::Range::NonNegative: os << " must be >= 0"; break;
  }
  return os.str();
}

bool metric_in_range(const MetricField& f, double v) {
  if (!std::isfinite(v)) return false;
  switch (f.range) {
    case MetricField::Range::Unit: return in_unit_interval(v);
    case MetricField::Range::Positive: return v > 0.0;
    case MetricField::Range::NonNegative: return v >= 0.0;
  }
  return false;
}

// Parses one model object, appending violations; returns false if the card
// could not be built at all.
bool parse_card(const json& obj, std::size_t position, ModelCard& card,
                std::vector<std::string>& violations) {
  std::string who = "models[" + std::to_string(position) + "]";
  if (!obj.is_object()) {
    violations.push_back(who + ": expected an object");
    return false;
  }
  if (auto it = obj.find("id"); it != obj.end() && it->is_string()) {
    card.id = it->get<std::string>();
    who = model_label(card.id);
  }
  const std::size_t before = violations.size();
  auto fail = [&](const std::string& msg) { violations.push_back(who + ": " + msg); };

  for (const auto& [key, _] : obj.items()) {
    if (std::find(kModelKeys.begin(), kModelKeys.end(), key) == kModelKeys.end() &&
        key != kAnnotationsKey) {
      fail("unknown field \"" + key + "\"");
    }
  }
  for (auto key : kModelKeys) {
    if (!obj.contains(std::string(key))) fail("missing field \"" + std::string(key) + "\"");
  }
  if (violations.size() != before) return false;

  auto expect_string = [&](std::string_view key, std::string& out) {
    const auto& v = obj.at(std::string(key));
    if (!v.is_string()) return fail("field \"" + std::string(key) + "\" must be a string");
    out = v.get<std::string>();
  };
  expect_string("id", card.id);
  expect_string("name", card.name);
  expect_string("provider", card.provider);

  if (const auto& p = obj.at("params_b"); p.is_number()) {
    card.params_b = p.get<double>();
    if (!(card.params_b >= 0.0) || !std::isfinite(card.params_b)) {
      fail("params_b must be a nonnegative number");
    }
  } else {
    fail("params_b must be a number");
  }

  if (const auto& g = obj.at("generalist"); g.is_boolean()) {
    card.generalist = g.get<bool>();
  } else {
    fail("generalist must be a boolean");
  }

  if (const auto& tt = obj.at("task_types"); tt.is_array()) {
    for (const auto& t : tt) {
      auto parsed = t.is_string() ? parse_task_type(t.get<std::string>()) : std::nullopt;
      if (!parsed) {
        fail("unknown task type " + t.dump());
      } else {
        card.task_types.insert(*parsed);
      }
    }
  } else {
    fail("task_types must be an array");
  }

  if (const auto& ds = obj.at("domains"); ds.is_array()) {
    for (const auto& d : ds) {
      auto parsed = d.is_string() ? parse_domain(d.get<std::string>()) : std::nullopt;
      if (!parsed) {
        fail("unknown domain " + d.dump());
      } else {
        card.domains.insert(*parsed);
      }
    }
  } else {
    fail("domains must be an array");
  }

  const auto& m = obj.at("metrics");
  if (!m.is_object()) {
    fail("metrics must be an object");
  } else {
    for (const auto& [key, _] : m.items()) {
      auto known = std::find_if(kMetricFields.begin(), kMetricFields.end(),
                                [&](const MetricField& f) { return f.key == key; });
      if (known == kMetricFields.end()) fail("unknown field \"metrics." + key + "\"");
    }
    for (const auto& f : kMetricFields) {
      auto it = m.find(std::string(f.key));
      if (it == m.end()) {
        fail("missing field \"metrics." + std::string(f.key) + "\"");
      } else if (!it->is_number()) {
        fail("metrics." + std::string(f.key) + " must be a number");
      } else {
        card.metrics.*f.member = it->get<double>();
      }
    }
  }

  if (auto it = obj.find(std::string(kAnnotationsKey)); it != obj.end()) {
    if (!it->is_object()) {
      fail("annotations must be an object of strings");
    } else {
      for (const auto& [key, value] : it->items()) {
        if (!value.is_string()) {
          fail("annotations." + key + " must be a string");
        } else {
          card.annotations[key] = value.get<std::string>();
        }
      }
    }
  }
  return violations.size() == before;
}

}  // namespace

std::vector<std::string> validate_cards(const std::vector<ModelCard>& cards) {
  std::vector<std::string> violations;
  std::unordered_set<std::string> seen;
  for (const auto& card : cards) {
    const std::string who = model_label(card.id);
    if (card.id.empty()) violations.push_back("model with empty id");
    if (!seen.insert(card.id).second) violations.push_back(who + ": duplicate id");
    if (card.task_types.empty()) violations.push_back(who + ": task_types must be nonempty");
    if (card.generalist && card.task_types.size() != kAllTaskTypes.size()) {
      violations.push_back(who + ": generalist models must list every task type");
    }
    if (!(card.params_b >= 0.0)) violations.push_back(who + ": params_b must be >= 0");
    for (const auto& f : kMetricFields) {
      const double v = card.metrics.*f.member;
      if (!metric_in_range(f, v)) violations.push_back(who + ": " + range_violation(f, v));
    }
  }
  return violations;
}

std::vector<ModelCard> load_catalog(std::string_view document) {
  json doc;
  try {
    doc = json::parse(document.begin(), document.end());
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::MalformedCatalog,
                "malformed catalog at byte " + std::to_string(e.byte) + ": " + e.what());
  }

  std::vector<std::string> violations;
  if (!doc.is_object()) {
    throw Error(ErrorCode::SchemaViolation, "catalog: top level must be an object",
                {"catalog: top level must be an object"});
  }
  for (const auto& [key, _] : doc.items()) {
    if (key != "schema_version" && key != "models") {
      violations.push_back("catalog: unknown field \"" + key + "\"");
    }
  }
  if (auto it = doc.find("schema_version"); it == doc.end() || !it->is_number_integer() ||
                                            it->get<std::int64_t>() != 1) {
    violations.push_back("catalog: schema_version must be 1");
  }
  std::vector<ModelCard> cards;
  if (auto it = doc.find("models"); it == doc.end() || !it->is_array()) {
    violations.push_back("catalog: models must be an array");
  } else {
    std::size_t pos = 0;
    for (const auto& entry : *it) {
      ModelCard card;
      if (parse_card(entry, pos++, card, violations)) cards.push_back(std::move(card));
    }
  }
  if (violations.empty()) violations = validate_cards(cards);
  if (!violations.empty()) {
    throw Error(ErrorCode::SchemaViolation, violations.front(), violations);
  }
  return cards;
}

std::vector<ModelCard> load_catalog(std::istream& source) {
  std::ostringstream buf;
  buf << source.rdbuf();
  return load_catalog(std::string_view(buf.str()));
}

std::vector<ModelCard> load_catalog_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::MalformedCatalog, "cannot open catalog file " + path);
  return load_catalog(in);
}

std::size_t NormalizedCatalog::find(std::string_view id) const noexcept {
  auto it = by_id_.find(id);
  return it == by_id_.end() ? cards_.size() : it->second;
}

NormalizedCatalog normalize_catalog(std::vector<ModelCard> cards) {
  if (cards.empty()) throw Error(ErrorCode::EmptyCatalog, "catalog has no models");
  if (auto violations = validate_cards(cards); !violations.empty()) {
    throw Error(ErrorCode::SchemaViolation, violations.front(), violations);
  }

  const auto n = static_cast<Eigen::Index>(cards.size());
  ModelMatrix raw(n, kRouteDims);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& m = cards[static_cast<std::size_t>(i)].metrics;
    raw.row(i) << m.accuracy, m.latency_ms, m.cost_per_1k_tokens_usd, m.helpfulness, m.honesty,
        m.harmlessness, m.steerability, m.creativity, m.complexity_capability;
  }
  std::vector<Direction> directions(kRouteDims, Direction::HigherIsBetter);
  directions[kSpeed] = Direction::LowerIsBetter;
  directions[kCostEfficiency] = Direction::LowerIsBetter;

  NormalizedCatalog out;
  out.bounds_ = min_max_normalize(raw, directions);
  out.norms_ = raw.rowwise().norm();
  out.vectors_ = std::move(raw);
  for (std::size_t i = 0; i < cards.size(); ++i) out.by_id_.emplace(cards[i].id, i);
  out.cards_ = std::move(cards);
  return out;
}

CatalogHandle snapshot(NormalizedCatalog catalog, std::uint64_t version) {
  catalog.version_ = version;
  return std::make_shared<const NormalizedCatalog>(std::move(catalog));
}

std::vector<Neighbor> top_k(const NormalizedCatalog& index, const TaskVector& query,
                            std::size_t k) {
  if (index.empty()) throw Error(ErrorCode::EmptyCatalog, "catalog has no models");
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  const double qn = query.norm();
  if (qn == 0.0) {
    throw Error(ErrorCode::ZeroVector, "query vector has zero magnitude");
  }

  const Eigen::VectorXd dots = index.vectors() * query;
  std::vector<Neighbor> all;
  all.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const double mn = index.norms()(row);
    const double sim = mn == 0.0 ? 0.0 : dots(row) / (mn * qn);
    all.push_back({index.card(i).id, i, sim});
  }
  const std::size_t take = std::min(k, all.size());
  auto before = [](const Neighbor& a, const Neighbor& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.model_id < b.model_id;
  };
  std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take), all.end(),
                    before);
  all.resize(take);
  return all;
}

CatalogHandle CatalogStore::publish(std::vector<ModelCard> cards) {
  std::lock_guard writer(writer_);
  auto normalized = normalize_catalog(std::move(cards));
  auto handle = snapshot(std::move(normalized), version() + 1);
  std::lock_guard lock(mutex_);
  current_ = handle;
  return handle;
}

CatalogHandle CatalogStore::current() const {
  std::lock_guard lock(mutex_);
  return current_;
}

std::uint64_t CatalogStore::version() const {
  std::lock_guard lock(mutex_);
  return current_ ? current_->version() : 0;
}

}  // namespace optiroute
