#include "support.hpp"

#include <gtest/gtest.h>

#include <thread>

#include "optiroute/error.hpp"
#include "optiroute/linalg.hpp"

using namespace optiroute;
using namespace testing_support;

namespace {

const char* kTwoModels = R"({
  "schema_version": 1,
  "models": [
    {"id": "a", "name": "A", "provider": "p", "params_b": 7, "task_types": ["translation"],
     "domains": ["general"], "generalist": false,
     "metrics": {"accuracy": 0.7, "latency_ms": 100, "cost_per_1k_tokens_usd": 0.01,
                 "helpfulness": 0.5, "honesty": 0.5, "harmlessness": 0.5, "steerability": 0.5,
                 "creativity": 0.5, "reliability": 0.99, "complexity_capability": 0.5}},
    {"id": "b", "name": "B", "provider": "p", "params_b": 70, "task_types": ["translation"],
     "domains": ["legal"], "generalist": false,
     "metrics": {"accuracy": 0.9, "latency_ms": 300, "cost_per_1k_tokens_usd": 0.03,
                 "helpfulness": 0.5, "honesty": 0.5, "harmlessness": 0.5, "steerability": 0.5,
                 "creativity": 0.5, "reliability": 0.99, "complexity_capability": 0.5}}
  ]
})";

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an optiroute::Error";
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(Cosine, IdenticalAndOrthogonal) {
  Eigen::Vector3d a(1, 2, 3);
  EXPECT_NEAR(cosine_similarity(a, a), 1.0, 1e-12);
  EXPECT_NEAR(cosine_similarity(Eigen::Vector2d(1, 0), Eigen::Vector2d(0, 1)), 0.0, 1e-12);
  EXPECT_NEAR(cosine_distance(a, a), 0.0, 1e-12);
}

TEST(Cosine, WorksWithFloatAndExpressions) {
  Eigen::Vector4f a(1, 0, 1, 0);
  Eigen::Vector4f b(2, 0, 2, 0);
  EXPECT_NEAR(cosine_similarity(a, b * 3.0f), 1.0f, 1e-6f);
  EXPECT_NEAR(cosine_similarity(a.head<2>(), b.tail<2>() + Eigen::Vector2f(1, 0)), 1.0f, 1e-6f);
}

TEST(Cosine, ZeroVectorThrows) {
  EXPECT_EQ(code_of([] { (void)cosine_similarity(Eigen::Vector3d::Zero(), Eigen::Vector3d(1, 1, 1)); }),
            ErrorCode::ZeroVector);
}

TEST(MinMax, ColumnsHandleDirectionAndConstants) {
  Eigen::MatrixXd m(3, 3);
  m << 0.7, 100, 5,  //
      0.9, 300, 5,   //
      0.8, 200, 5;
  std::vector<Direction> dirs = {Direction::HigherIsBetter, Direction::LowerIsBetter,
                                 Direction::HigherIsBetter};
  auto bounds = min_max_normalize(m, dirs);
  EXPECT_DOUBLE_EQ(m(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(m(1, 0), 1.0);
  EXPECT_NEAR(m(2, 0), 0.5, 1e-12);
  EXPECT_DOUBLE_EQ(m(0, 1), 1.0);
  EXPECT_DOUBLE_EQ(m(1, 1), 0.0);
  EXPECT_DOUBLE_EQ(m.col(2).minCoeff(), 0.5);
  EXPECT_DOUBLE_EQ(m.col(2).maxCoeff(), 0.5);
  EXPECT_DOUBLE_EQ(bounds[1].min, 100);
  EXPECT_DOUBLE_EQ(bounds[1].max, 300);
}

TEST(LoadCatalog, ParsesValidDocument) {
  const auto cards = load_catalog(std::string_view(kTwoModels));
  ASSERT_EQ(cards.size(), 2u);
  EXPECT_EQ(cards[1].id, "b");
  EXPECT_TRUE(cards[1].domains.contains(Domain::legal));
  EXPECT_DOUBLE_EQ(cards[1].metrics.latency_ms, 300);
}

TEST(LoadCatalog, MalformedJsonReportsPosition) {
  try {
    (void)load_catalog(std::string_view(R"({"schema_version": 1, "models": [)"));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MalformedCatalog);
    EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos) << e.what();
  }
}

TEST(LoadCatalog, NegativeLatencyNamesModelAndField) {
  std::string doc = kTwoModels;
  doc.replace(doc.find("\"latency_ms\": 300"), 17, "\"latency_ms\": -5");
  try {
    (void)load_catalog(std::string_view(doc));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    ASSERT_FALSE(e.details().empty());
    const std::string line = e.details().front();
    EXPECT_NE(line.find("\"b\""), std::string::npos) << line;
    EXPECT_NE(line.find("latency_ms"), std::string::npos) << line;
  }
}

TEST(LoadCatalog, CollectsEveryViolation) {
  std::string doc = kTwoModels;
  doc.replace(doc.find("\"id\": \"b\""), 9, "\"id\": \"a\"");
  doc.replace(doc.find("\"accuracy\": 0.7"), 15, "\"accuracy\": 1.7");
  try {
    (void)load_catalog(std::string_view(doc));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaViolation);
    EXPECT_GE(e.details().size(), 2u);
    bool dup = false;
    for (const auto& d : e.details()) dup |= d.find("duplicate id") != std::string::npos;
    EXPECT_TRUE(dup);
  }
}

TEST(LoadCatalog, RejectsUnknownFieldsAndVersions) {
  std::string extra = kTwoModels;
  extra.replace(extra.find("\"generalist\": false"), 19, "\"generalist\": false, \"color\": 1");
  EXPECT_EQ(code_of([&] { (void)load_catalog(std::string_view(extra)); }),
            ErrorCode::SchemaViolation);
  std::string v2 = kTwoModels;
  v2.replace(v2.find("\"schema_version\": 1"), 19, "\"schema_version\": 2");
  EXPECT_EQ(code_of([&] { (void)load_catalog(std::string_view(v2)); }),
            ErrorCode::SchemaViolation);
}

TEST(LoadCatalog, GeneralistMustListEveryTaskType) {
  auto c = card("g", {TaskType::translation}, {Domain::general}, metrics(0.5, 10, 0.01));
  c.generalist = true;
  const auto v = validate_cards({c});
  ASSERT_EQ(v.size(), 1u);
  EXPECT_NE(v[0].find("generalist"), std::string::npos);
}

TEST(LoadCatalog, AnnotationsKeptButNotRouted) {
  std::string doc = kTwoModels;
  doc.replace(doc.find("\"generalist\": false"), 19,
              R"("generalist": false, "annotations": {"privacy": "on-prem"})");
  const auto cards = load_catalog(std::string_view(doc));
  EXPECT_EQ(cards[0].annotations.at("privacy"), "on-prem");
}

TEST(LoadCatalog, RoundTripsThroughSerializer) {
  const auto cards = load_catalog(std::string_view(kTwoModels));
  const auto again = load_catalog(std::string_view(catalog_document(cards).dump()));
  ASSERT_EQ(again.size(), cards.size());
  for (std::size_t i = 0; i < cards.size(); ++i) {
    EXPECT_EQ(again[i].id, cards[i].id);
    EXPECT_EQ(again[i].task_types, cards[i].task_types);
    EXPECT_EQ(again[i].domains, cards[i].domains);
    EXPECT_DOUBLE_EQ(again[i].metrics.cost_per_1k_tokens_usd, cards[i].metrics.cost_per_1k_tokens_usd);
  }
}

TEST(Normalize, TwoPointAccuracyColumn) {
  const auto cat = normalize_catalog(load_catalog(std::string_view(kTwoModels)));
  EXPECT_DOUBLE_EQ(cat.vector(0)(kAccuracy), 0.0);
  EXPECT_DOUBLE_EQ(cat.vector(1)(kAccuracy), 1.0);
  EXPECT_DOUBLE_EQ(cat.vector(0)(kSpeed), 1.0);
  EXPECT_DOUBLE_EQ(cat.vector(0)(kCostEfficiency), 1.0);
  EXPECT_DOUBLE_EQ(cat.vector(1)(kHelpfulness), 0.5);
}

TEST(Normalize, SingleModelIsAllHalf) {
  const auto cat = normalize_catalog({card("x", {TaskType::other}, {}, metrics(0.3, 50, 0.2))});
  for (Eigen::Index d = 0; d < kRouteDims; ++d) EXPECT_DOUBLE_EQ(cat.vector(0)(d), 0.5);
}

TEST(Normalize, EmptyCatalogThrows) {
  EXPECT_EQ(code_of([] { (void)normalize_catalog({}); }), ErrorCode::EmptyCatalog);
}

TEST(Normalize, MatchesScalarOracle) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto cards = random_cards(gen, 2 + gen() % 40);
    const auto cat = normalize_catalog(cards);
    const auto expected = oracle_normalize(cat.cards());
    for (std::size_t i = 0; i < cat.size(); ++i) {
      for (int d = 0; d < 9; ++d) EXPECT_NEAR(cat.vector(i)(d), expected[i][d], 1e-12);
    }
  }
}

TEST(TopK, SmallExampleWithTieBreak) {
  auto m = metrics(0.5, 10, 0.01);
  std::vector<ModelCard> cards = {card("c", {TaskType::other}, {}, m),
                                  card("a", {TaskType::other}, {}, m),
                                  card("b", {TaskType::other}, {}, metrics(0.9, 50, 0.05))};
  const auto cat = normalize_catalog(cards);
  TaskVector q = TaskVector::Constant(0.5);
  const auto near = top_k(cat, q, 3);
  ASSERT_EQ(near.size(), 3u);
  // a and c share a vector, so they tie; ascending id decides.
  const auto ia = std::find_if(near.begin(), near.end(), [](auto& n) { return n.model_id == "a"; });
  const auto ic = std::find_if(near.begin(), near.end(), [](auto& n) { return n.model_id == "c"; });
  EXPECT_LT(ia - near.begin(), ic - near.begin());
  EXPECT_EQ(ia->similarity, ic->similarity);
}

TEST(TopK, KLargerThanCatalogAndErrors) {
  const auto cat = normalize_catalog(load_catalog(std::string_view(kTwoModels)));
  EXPECT_EQ(top_k(cat, TaskVector::Constant(1.0), 50).size(), 2u);
  EXPECT_EQ(code_of([&] { (void)top_k(cat, TaskVector::Zero(), 1); }), ErrorCode::ZeroVector);
  EXPECT_EQ(code_of([&] { (void)top_k(cat, TaskVector::Constant(1.0), 0); }),
            ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { (void)top_k(NormalizedCatalog{}, TaskVector::Constant(1.0), 1); }),
            ErrorCode::EmptyCatalog);
}

TEST(TopK, ZeroModelVectorHasSimilarityZero) {
  // Three models where one is worst on every dimension -> all-zero vector.
  std::vector<ModelCard> cards = {
      card("best", {TaskType::other}, {}, metrics(0.9, 10, 0.01, 0.9, 0.9, 0.9, 0.9, 0.9)),
      card("mid", {TaskType::other}, {}, metrics(0.5, 20, 0.02, 0.5, 0.5, 0.5, 0.5, 0.5)),
      card("worst", {TaskType::other}, {}, metrics(0.1, 30, 0.03, 0.1, 0.1, 0.1, 0.1, 0.1))};
  const auto cat = normalize_catalog(cards);
  ASSERT_EQ(cat.vector(2).norm(), 0.0);
  const auto near = top_k(cat, TaskVector::Constant(0.3), 3);
  EXPECT_EQ(near.back().model_id, "worst");
  EXPECT_EQ(near.back().similarity, 0.0);
}

TEST(TopK, PropertyMatchesExhaustiveSort) {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    RandomCatalogOptions opt;
    opt.quantize = trial % 2 ? 0.25 : 0.0;
    const auto cat = normalize_catalog(random_cards(gen, 1 + gen() % 64, opt));
    TaskVector q;
    for (int d = 0; d < kRouteDims; ++d) q(d) = trial % 3 ? u(gen) : std::round(u(gen) * 2) / 2;
    if (q.norm() == 0) q(0) = 1;
    const auto oracle = oracle_sorted(cat, q);
    for (std::size_t k : {std::size_t{1}, std::size_t{2}, std::size_t{5}, cat.size()}) {
      const auto got = top_k(cat, q, k);
      ASSERT_EQ(got.size(), std::min(k, cat.size()));
      for (std::size_t i = 0; i < got.size(); ++i) {
        EXPECT_EQ(got[i].model_id, oracle[i].id) << "trial " << trial << " rank " << i;
        EXPECT_NEAR(got[i].similarity, oracle[i].similarity, 1e-12);
      }
    }
  }
}

TEST(CatalogStore, VersionsIncreaseAndOldSnapshotsStayValid) {
  CatalogStore store;
  EXPECT_EQ(store.version(), 0u);
  auto v1 = store.publish(load_catalog(std::string_view(kTwoModels)));
  EXPECT_EQ(v1->version(), 1u);
  auto v2 = store.publish({card("solo", {TaskType::other}, {}, metrics(0.5, 10, 0.01))});
  EXPECT_EQ(v2->version(), 2u);
  EXPECT_EQ(store.current()->version(), 2u);
  EXPECT_EQ(v1->size(), 2u);
  EXPECT_EQ(v1->find("b"), 1u);
  EXPECT_EQ(v1->find("solo"), v1->size());
}

TEST(CatalogStore, FailedPublishKeepsCurrent) {
  CatalogStore store;
  store.publish(load_catalog(std::string_view(kTwoModels)));
  auto bad = card("", {}, {}, metrics(2.0, -1, 0.0));
  EXPECT_THROW(store.publish({bad}), Error);
  EXPECT_EQ(store.version(), 1u);
  EXPECT_EQ(store.current()->size(), 2u);
}

TEST(CatalogStore, ReadersNeverSeeMixedSnapshot) {
  CatalogStore store;
  std::mt19937_64 gen(5);
  auto a = random_cards(gen, 8);
  auto b = random_cards(gen, 3);
  for (auto& c : b) c.id = "z" + c.id;
  store.publish(a);
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::thread reader([&] {
    while (!done) {
      auto snap = store.current();
      const bool is_a = snap->size() == 8;
      for (const auto& c : snap->cards()) {
        if ((c.id[0] == 'z') == is_a) ++bad;
      }
    }
  });
  for (int i = 0; i < 200; ++i) store.publish(i % 2 ? a : b);
  done = true;
  reader.join();
  EXPECT_EQ(bad.load(), 0);
}
