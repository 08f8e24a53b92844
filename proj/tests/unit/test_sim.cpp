#include "support.hpp"

#include "optiroute/analyzer.hpp"
#include "optiroute/error.hpp"
#include "optiroute/serialize.hpp"
#include "optiroute/sim.hpp"

#include <gtest/gtest.h>

#include <numeric>

using namespace optiroute;
using namespace testing_support;
namespace s = optiroute::sim;

namespace {

const std::set<Domain> kAll = {Domain::general,    Domain::healthcare, Domain::finance,
                               Domain::legal,      Domain::technology, Domain::food_beverage};

s::WorkloadSpec uniform_spec(std::size_t n, std::uint64_t seed) {
  s::WorkloadSpec spec;
  spec.n_queries = n;
  spec.seed = seed;
  for (auto t : kAllTaskTypes) spec.task_mix[t] = 1.0 / static_cast<double>(kAllTaskTypes.size());
  spec.domain_mix = {{Domain::general, 0.5}, {Domain::healthcare, 0.25}, {Domain::finance, 0.25}};
  spec.complexity = {0.5, 0.3, 0.2};
  return spec;
}

std::size_t word_count(const std::string& q) {
  std::istringstream in(q);
  std::size_t n = 0;
  for (std::string w; in >> w;) ++n;
  return n;
}

// Independent total for a policy that always picks `card`.
double oracle_always_cost(const std::vector<s::WorkloadItem>& w, const ModelCard& card) {
  double total = 0.0;
  for (const auto& item : w) {
    total += card.metrics.cost_per_1k_tokens_usd * static_cast<double>(word_count(item.query)) / 1000.0;
  }
  return total;
}

const s::PolicyResult& result(const s::PolicyReport& r, const std::string& name) {
  for (const auto& p : r.policies) {
    if (p.name == name) return p;
  }
  throw std::runtime_error("no policy " + name);
}

std::vector<ModelCard> two_tier() {
  return {
      card("cheap", {}, kAll, metrics(0.7, 120, 0.0005, 0.85, 0.8, 0.7, 0.99, 0.3), true),
      card("pricey", {}, kAll, metrics(0.95, 1500, 0.03, 0.85, 0.8, 0.7, 0.995, 0.95), true),
  };
}

}  // namespace

TEST(Workload, DeterministicForSeed) {
  const auto spec = uniform_spec(1000, 11);
  const auto a = s::generate_workload(spec);
  const auto b = s::generate_workload(spec);
  ASSERT_EQ(a.size(), 1000u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].query, b[i].query);
    EXPECT_EQ(a[i].ground, b[i].ground);
  }
  auto other = spec;
  other.seed = 12;
  const auto c = s::generate_workload(other);
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.size(); ++i) same += a[i].query == c[i].query;
  EXPECT_LT(same, a.size());
}

TEST(Workload, DegenerateMix) {
  s::WorkloadSpec spec;
  spec.n_queries = 300;
  spec.seed = 1;
  spec.task_mix = {{TaskType::sentiment_analysis, 1.0}};
  spec.domain_mix = {{Domain::general, 1.0}};
  spec.complexity = {0.4, 0.4, 0.2};
  for (const auto& item : s::generate_workload(spec)) {
    EXPECT_EQ(item.ground.task_type, TaskType::sentiment_analysis);
    EXPECT_EQ(classify_task(item.query), TaskType::sentiment_analysis) << item.query;
  }
}

TEST(Workload, MixWithinThreeSigma) {
  // Binomial(n, 1/2): sigma = sqrt(n)/2.
  const std::size_t n = 10000;
  const double sigma = std::sqrt(static_cast<double>(n)) / 2.0;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    s::WorkloadSpec spec;
    spec.n_queries = n;
    spec.seed = seed;
    spec.task_mix = {{TaskType::sentiment_analysis, 0.5}, {TaskType::translation, 0.5}};
    spec.domain_mix = {{Domain::general, 1.0}};
    const auto w = s::generate_workload(spec);
    const auto count = std::count_if(w.begin(), w.end(), [](const auto& i) {
      return i.ground.task_type == TaskType::sentiment_analysis;
    });
    EXPECT_LE(std::abs(static_cast<double>(count) - n / 2.0), 3.0 * sigma) << "seed " << seed;
  }
}

TEST(Workload, AnalyzerRecoversTaskType) {
  for (std::uint64_t seed : {5ULL, 6ULL}) {
    const auto w = s::generate_workload(uniform_spec(3000, seed));
    std::map<TaskType, std::pair<int, int>> per_type;
    for (const auto& item : w) {
      auto& [hit, total] = per_type[item.ground.task_type];
      hit += classify_task(item.query) == item.ground.task_type;
      ++total;
    }
    int hits = 0;
    for (const auto& [t, ht] : per_type) hits += ht.first;
    EXPECT_GE(static_cast<double>(hits) / static_cast<double>(w.size()), 0.95);
    EXPECT_EQ(per_type.size(), kAllTaskTypes.size());
  }
}

TEST(Workload, ComplexityTiersOrderAnalyzerScores) {
  s::WorkloadSpec spec = uniform_spec(600, 9);
  const auto w = s::generate_workload(spec);
  std::map<double, std::vector<double>> by_ground;
  for (const auto& item : w) by_ground[item.ground.complexity].push_back(estimate_complexity(item.query));
  ASSERT_EQ(by_ground.size(), 3u);
  std::vector<double> means;
  for (const auto& [g, v] : by_ground) means.push_back(std::accumulate(v.begin(), v.end(), 0.0) / v.size());
  EXPECT_LT(means[0], means[1]);
  EXPECT_LT(means[1], means[2]);
}

TEST(Workload, Validation) {
  auto spec = uniform_spec(10, 1);
  spec.n_queries = 0;
  EXPECT_THROW(s::validate(spec), Error);
  spec = uniform_spec(10, 1);
  spec.task_mix[TaskType::other] += 0.01;
  EXPECT_THROW(s::validate(spec), Error);
  spec = uniform_spec(10, 1);
  spec.complexity = {0.5, 0.5, 0.5};
  EXPECT_THROW(s::validate(spec), Error);
  EXPECT_NO_THROW(s::validate(uniform_spec(10, 1)));
}

TEST(Workload, ParseDocument) {
  const auto spec = s::parse_workload(nlohmann::json::parse(R"({
    "n_queries": 50, "seed": 3,
    "task_mix": {"translation": 0.25, "summarization": 0.75},
    "complexity_dist": {"low_frac": 0.8, "mid_frac": 0.15, "high_frac": 0.05},
    "profile": "cost-effective"})"));
  EXPECT_EQ(spec.n_queries, 50u);
  EXPECT_EQ(spec.seed, 3u);
  EXPECT_DOUBLE_EQ(spec.task_mix.at(TaskType::summarization), 0.75);
  EXPECT_DOUBLE_EQ(spec.domain_mix.at(Domain::general), 1.0);
  EXPECT_DOUBLE_EQ(spec.complexity.low, 0.8);
  EXPECT_DOUBLE_EQ(spec.prefs.cost, default_profiles().at("cost-effective").cost);
  EXPECT_THROW((void)s::parse_workload(nlohmann::json::parse(
                   R"({"n_queries": 5, "task_mix": {"other": 1}, "bogus": 1})")),
               Error);
  EXPECT_THROW((void)s::parse_workload(nlohmann::json::parse(
                   R"({"n_queries": 5, "task_mix": {"other": 1}, "profile": "balanced", "prefs": {"cost": 1}})")),
               Error);
}

TEST(Catalog, GeneratedCatalogsAreValid) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto cards = s::generate_catalog(12, seed, 4);
    EXPECT_TRUE(validate_cards(cards).empty());
    EXPECT_EQ(cards.front().id, "m00");
    EXPECT_EQ(std::count_if(cards.begin(), cards.end(), [](const auto& c) { return c.generalist; }), 3);
    EXPECT_NO_THROW((void)normalize_catalog(cards));
  }
  EXPECT_EQ(catalog_document(s::generate_catalog(8, 3)), catalog_document(s::generate_catalog(8, 3)));
}

TEST(Policies, Parse) {
  const auto ps = s::parse_policies("optiroute,always:flagship,random,random:7,cheapest", 42);
  ASSERT_EQ(ps.size(), 5u);
  EXPECT_EQ(ps[0].name(), "optiroute");
  EXPECT_EQ(ps[1].name(), "always:flagship");
  EXPECT_EQ(ps[2].name(), "random:42");
  EXPECT_EQ(ps[3].name(), "random:7");
  EXPECT_EQ(ps[4].name(), "cheapest_passing_filter");
  EXPECT_THROW((void)s::parse_policies("optimal"), Error);
  EXPECT_THROW((void)s::parse_policies("always:"), Error);
}

TEST(Evaluate, AlwaysPolicyIsConcentrated) {
  const auto cards = s::generate_catalog(6, 2, 3);
  const auto catalog = normalize_catalog(cards);
  const auto w = s::generate_workload(uniform_spec(400, 4));
  const auto report = s::evaluate(w, catalog, s::parse_policies("always:m02"), PreferenceVector::uniform(0.5));
  const auto& r = result(report, "always:m02");
  EXPECT_EQ(r.fallback_rate, 0.0);
  ASSERT_EQ(r.histogram.size(), 1u);
  EXPECT_EQ(r.histogram.at("m02"), 400u);
  EXPECT_NEAR(r.total_cost_usd, oracle_always_cost(w, cards[2]), 1e-9);
  EXPECT_NEAR(r.mean_latency_ms, cards[2].metrics.latency_ms, 1e-9 * cards[2].metrics.latency_ms);
}

TEST(Evaluate, DominantModelAlwaysWins) {
  std::vector<ModelCard> cards = {
      card("dom", {}, kAll, metrics(0.97, 80, 0.0004, 0.97, 0.97, 0.97, 0.999, 0.97), true)};
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (int i = 0; i < 6; ++i) {
    cards.push_back(card("weak" + std::to_string(i), {}, kAll,
                         metrics(u(gen), 200 + 1000 * u(gen), 0.001 + 0.02 * u(gen), u(gen), u(gen),
                                 u(gen), 0.99, u(gen)),
                         true));
  }
  const auto w = s::generate_workload(uniform_spec(500, 8));
  std::mt19937_64 pgen(4);
  for (int trial = 0; trial < 5; ++trial) {
    const auto prefs = random_prefs(pgen);
    const auto report = s::evaluate(w, normalize_catalog(cards), s::parse_policies("optiroute"), prefs);
    EXPECT_EQ(result(report, "optiroute").histogram, (std::map<std::string, std::size_t>{{"dom", 500}}));
  }
}

TEST(Evaluate, TwoTierCostSaving) {
  const auto cards = two_tier();
  s::WorkloadSpec spec = uniform_spec(2000, 21);
  spec.complexity = {0.8, 0.15, 0.05};
  spec.prefs = default_profiles().at("cost-effective");
  const auto w = s::generate_workload(spec);
  const auto report = s::evaluate(w, normalize_catalog(cards),
                                  s::parse_policies("optiroute,always:pricey,always:cheap"), spec.prefs);
  const double pricey = oracle_always_cost(w, cards[1]);
  const double cheap = oracle_always_cost(w, cards[0]);
  EXPECT_NEAR(result(report, "always:pricey").total_cost_usd, pricey, 1e-9);
  EXPECT_NEAR(result(report, "always:cheap").total_cost_usd, cheap, 1e-9);
  const double routed = result(report, "optiroute").total_cost_usd;
  EXPECT_LT(routed, pricey);
  EXPECT_GE(routed, cheap - 1e-12);
}

TEST(Evaluate, CostWeightDominance) {
  // Cost weight 1.0, everything passes the filter: never worse than the priciest model.
  std::mt19937_64 gen(17);
  for (int trial = 0; trial < 10; ++trial) {
    RandomCatalogOptions opt;
    opt.generalist_prob = 1.0;
    opt.constant_column_prob = 0.0;
    auto cards = random_cards(gen, 2 + gen() % 8, opt);
    for (auto& c : cards) {
      c.domains = kAll;
      c.metrics.reliability = 0.99;
    }
    const auto priciest = *std::max_element(cards.begin(), cards.end(), [](const auto& a, const auto& b) {
      return a.metrics.cost_per_1k_tokens_usd < b.metrics.cost_per_1k_tokens_usd;
    });
    auto prefs = random_prefs(gen);
    prefs.cost = 1.0;
    const auto w = s::generate_workload(uniform_spec(200, trial));
    const auto report = s::evaluate(w, normalize_catalog(cards),
                                    s::parse_policies("optiroute,always:" + priciest.id), prefs);
    EXPECT_LE(result(report, "optiroute").total_cost_usd,
              result(report, "always:" + priciest.id).total_cost_usd + 1e-12);
  }
}

TEST(Evaluate, HistogramsConserveQueries) {
  std::mt19937_64 gen(23);
  for (int trial = 0; trial < 10; ++trial) {
    const auto cards = random_cards(gen, 2 + gen() % 10);
    const auto w = s::generate_workload(uniform_spec(150 + 10 * trial, trial));
    const auto report =
        s::evaluate(w, normalize_catalog(cards),
                    s::parse_policies("optiroute,random:1,cheapest_passing_filter,always:" + cards[0].id),
                    random_prefs(gen));
    EXPECT_EQ(report.n_queries, w.size());
    for (const auto& p : report.policies) {
      std::size_t sum = 0;
      for (const auto& [id, n] : p.histogram) sum += n;
      EXPECT_EQ(sum, w.size()) << p.name;
      EXPECT_GE(p.fallback_rate, 0.0);
      EXPECT_LE(p.fallback_rate, 1.0);
    }
  }
}

TEST(Evaluate, ReproducibleAcrossRunsAndThreads) {
  const auto cards = s::generate_catalog(10, 5, 3);
  const auto catalog = normalize_catalog(cards);
  const auto spec = uniform_spec(1500, 14);
  const auto policies = s::parse_policies("optiroute,random:9,cheapest_passing_filter,always:m01");
  const auto one = s::to_json(s::evaluate(s::generate_workload(spec), catalog, policies, spec.prefs, {}, {}, 1)).dump();
  const auto again = s::to_json(s::evaluate(s::generate_workload(spec), catalog, policies, spec.prefs, {}, {}, 1)).dump();
  const auto many = s::to_json(s::evaluate(s::generate_workload(spec), catalog, policies, spec.prefs, {}, {}, 7)).dump();
  EXPECT_EQ(one, again);
  EXPECT_EQ(one, many);
}

TEST(Evaluate, Errors) {
  const auto catalog = normalize_catalog(s::generate_catalog(3, 1));
  const auto w = s::generate_workload(uniform_spec(10, 1));
  try {
    (void)s::evaluate(w, catalog, s::parse_policies("always:ghost"), PreferenceVector::uniform(0.5));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnknownPolicyModel);
  }
}

TEST(Report, JsonAndTable) {
  const auto catalog = normalize_catalog(two_tier());
  const auto w = s::generate_workload(uniform_spec(50, 2));
  const auto report = s::evaluate(w, catalog, s::parse_policies("optiroute,always:cheap"),
                                  PreferenceVector::uniform(0.5));
  const auto j = s::to_json(report);
  EXPECT_EQ(j.at("n_queries"), 50);
  EXPECT_TRUE(j.contains("cost_model"));
  EXPECT_EQ(j.at("policies").size(), 2u);
  const auto table = s::render_table(report);
  EXPECT_NE(table.find("optiroute"), std::string::npos);
  EXPECT_NE(table.find("always:cheap"), std::string::npos);
  EXPECT_EQ(table.front(), '#');
}
