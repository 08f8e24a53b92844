#pragma once
// Test fixtures and brute-force oracles. Nothing here calls the code under
// test except to build inputs.
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "optiroute/registry.hpp"
#include "optiroute/router.hpp"
#include "optiroute/serialize.hpp"

namespace testing_support {

using namespace optiroute;

inline RawMetrics metrics(double accuracy, double latency_ms, double cost, double ethics = 0.8,
                          double steer = 0.7, double creative = 0.6, double reliability = 0.99,
                          double capability = 0.5) {
  RawMetrics m;
  m.accuracy = accuracy;
  m.latency_ms = latency_ms;
  m.cost_per_1k_tokens_usd = cost;
  m.helpfulness = ethics;
  m.honesty = ethics;
  m.harmlessness = ethics;
  m.steerability = steer;
  m.creativity = creative;
  m.reliability = reliability;
  m.complexity_capability = capability;
  return m;
}

inline ModelCard card(std::string id, std::set<TaskType> types, std::set<Domain> domains,
                      RawMetrics m, bool generalist = false) {
  ModelCard c;
  c.id = id;
  c.name = "Model " + id;
  c.provider = "test";
  c.params_b = 7;
  c.task_types = generalist ? std::set<TaskType>(kAllTaskTypes.begin(), kAllTaskTypes.end())
                            : std::move(types);
  c.domains = std::move(domains);
  c.generalist = generalist;
  c.metrics = m;
  return c;
}

struct RandomCatalogOptions {
  double constant_column_prob = 0.15;  // chance each metric is identical across models
  double quantize = 0.0;               // round metrics to this step to force ties (0 = off)
  double generalist_prob = 0.1;
  double type_prob = 0.5;
  double domain_prob = 0.4;
};

inline std::vector<ModelCard> random_cards(std::mt19937_64& gen, std::size_t n,
                                           RandomCatalogOptions opt = {}) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto q = [&](double v) { return opt.quantize > 0 ? std::round(v / opt.quantize) * opt.quantize : v; };
  // Per-metric: either constant across the catalog or drawn per model.
  std::array<bool, 10> constant{};
  std::array<double, 10> constant_value{};
  for (int f = 0; f < 10; ++f) {
    constant[f] = u(gen) < opt.constant_column_prob;
    constant_value[f] = u(gen);
  }
  auto draw = [&](int f, double lo, double hi) {
    const double t = constant[f] ? constant_value[f] : u(gen);
    return lo + (hi - lo) * q(t);
  };
  std::vector<ModelCard> cards;
  for (std::size_t i = 0; i < n; ++i) {
    ModelCard c;
    c.id = "r" + std::to_string(1000 + i);
    c.name = c.id;
    c.provider = "rand";
    c.params_b = 1 + 100 * u(gen);
    c.generalist = u(gen) < opt.generalist_prob;
    for (auto t : kAllTaskTypes) {
      if (c.generalist || u(gen) < opt.type_prob) c.task_types.insert(t);
    }
    if (c.task_types.empty()) c.task_types.insert(kAllTaskTypes[i % kAllTaskTypes.size()]);
    for (auto d : kAllDomains) {
      if (u(gen) < opt.domain_prob) c.domains.insert(d);
    }
    auto& m = c.metrics;
    m.accuracy = draw(0, 0.0, 1.0);
    m.latency_ms = draw(1, 1.0, 5000.0);
    m.cost_per_1k_tokens_usd = draw(2, 0.0, 0.1);
    m.helpfulness = draw(3, 0.0, 1.0);
    m.honesty = draw(4, 0.0, 1.0);
    m.harmlessness = draw(5, 0.0, 1.0);
    m.steerability = draw(6, 0.0, 1.0);
    m.creativity = draw(7, 0.0, 1.0);
    m.reliability = draw(8, 0.0, 1.0);
    m.complexity_capability = draw(9, 0.0, 1.0);
    cards.push_back(std::move(c));
  }
  // Shuffle ids so id order and generation order differ.
  std::shuffle(cards.begin(), cards.end(), gen);
  return cards;
}

// Raw metric columns in routing-dimension order with a higher-is-better flag.
inline std::vector<std::pair<double, bool>> raw_row(const RawMetrics& m) {
  return {{m.accuracy, true},       {m.latency_ms, false},   {m.cost_per_1k_tokens_usd, false},
          {m.helpfulness, true},    {m.honesty, true},       {m.harmlessness, true},
          {m.steerability, true},   {m.creativity, true},    {m.complexity_capability, true}};
}

// Scalar min-max normalization, written independently of the library.
inline std::vector<std::array<double, 9>> oracle_normalize(const std::vector<ModelCard>& cards) {
  std::vector<std::array<double, 9>> out(cards.size());
  for (int d = 0; d < 9; ++d) {
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& c : cards) {
      const double v = raw_row(c.metrics)[d].first;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (std::size_t i = 0; i < cards.size(); ++i) {
      const auto [v, higher] = raw_row(cards[i].metrics)[d];
      if (hi == lo) {
        out[i][d] = 0.5;
      } else {
        out[i][d] = higher ? (v - lo) / (hi - lo) : (hi - v) / (hi - lo);
      }
    }
  }
  return out;
}

inline double oracle_cosine(const double* a, const double* b, int n) {
  double dot = 0, na = 0, nb = 0;
  for (int i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0 || nb == 0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

struct OracleNeighbor {
  std::string id;
  std::size_t index;
  double similarity;
};

// Exhaustive cosine sort: descending similarity, ascending id.
inline std::vector<OracleNeighbor> oracle_sorted(const NormalizedCatalog& cat,
                                                 const TaskVector& query) {
  std::vector<OracleNeighbor> all;
  for (std::size_t i = 0; i < cat.size(); ++i) {
    const ModelVector v = cat.vector(i);
    all.push_back({cat.card(i).id, i, oracle_cosine(v.data(), query.data(), kRouteDims)});
  }
  std::stable_sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.id < b.id;
  });
  return all;
}

inline double oracle_score(const ModelVector& v, const PreferenceVector& p, double bias) {
  const double w[8] = {p.accuracy,    p.latency,      p.cost,         p.helpfulness,
                       p.honesty,     p.harmlessness, p.steerability, p.creativity};
  double sw = 0, acc = 0;
  for (int i = 0; i < 8; ++i) sw += w[i];
  for (int i = 0; i < 8; ++i) acc += (sw == 0 ? 1.0 : w[i]) * v(i);
  const double mean = acc / (sw == 0 ? 8.0 : sw);
  return std::clamp(mean + bias, 0.0, 1.0);
}

inline bool oracle_passes(const ModelCard& c, const TaskProfile& p, double min_reliability) {
  const bool domain_ok = p.domain == Domain::general || c.domains.contains(p.domain);
  return c.task_types.contains(p.task_type) && domain_ok &&
         c.metrics.reliability >= min_reliability;
}

inline PreferenceVector random_prefs(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PreferenceVector p{u(gen), u(gen), u(gen), u(gen), u(gen), u(gen), u(gen), u(gen)};
  return p;
}

inline TaskProfile random_profile(std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  return {kAllTaskTypes[gen() % kAllTaskTypes.size()], kAllDomains[gen() % kAllDomains.size()],
          u(gen)};
}

class TempDir {
public:
  TempDir() {
    char tmpl[] = "/tmp/optiroute-test-XXXXXX";
    path_ = ::mkdtemp(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  [[nodiscard]] std::string file(const std::string& name) const { return path_ + "/" + name; }
  [[nodiscard]] const std::string& path() const { return path_; }

private:
  std::string path_;
};

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_catalog(const std::string& path, const std::vector<ModelCard>& cards) {
  write_text(path, catalog_document(cards).dump(2));
}

}  // namespace testing_support
