#pragma once
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "optiroute/linalg.hpp"
#include "optiroute/types.hpp"

namespace optiroute {

struct RawMetrics {
  double accuracy = 0.0;
  double latency_ms = 1.0;
  double cost_per_1k_tokens_usd = 0.0;
  double helpfulness = 0.0;
  double honesty = 0.0;
  double harmlessness = 0.0;
  double steerability = 0.0;
  double creativity = 0.0;
  double reliability = 1.0;  // uptime fraction; hard filter, not a routing dimension
  double complexity_capability = 0.0;
};

struct ModelCard {
  std::string id;
  std::string name;
  std::string provider;
  double params_b = 0.0;
  std::set<TaskType> task_types;
  std::set<Domain> domains;
  bool generalist = false;
  RawMetrics metrics;
  // Free-form evaluation notes (security, privacy, ...). Never used for routing.
  std::map<std::string, std::string> annotations;
};

/// Returns every invariant violation of a card list (empty when valid).
[[nodiscard]] std::vector<std::string> validate_cards(const std::vector<ModelCard>& cards);

/// Parses a catalog document. Throws MalformedCatalog on syntax errors (with
/// byte position) and SchemaViolation listing every offending model/field.
[[nodiscard]] std::vector<ModelCard> load_catalog(std::istream& source);
[[nodiscard]] std::vector<ModelCard> load_catalog(std::string_view document);
[[nodiscard]] std::vector<ModelCard> load_catalog_file(const std::string& path);

using ModelMatrix = Eigen::Matrix<double, Eigen::Dynamic, kRouteDims, Eigen::RowMajor>;

class NormalizedCatalog {
public:
  NormalizedCatalog() = default;

  [[nodiscard]] std::size_t size() const noexcept { return cards_.size(); }
  [[nodiscard]] bool empty() const noexcept { return cards_.empty(); }
  [[nodiscard]] const std::vector<ModelCard>& cards() const noexcept { return cards_; }
  [[nodiscard]] const ModelCard& card(std::size_t i) const { return cards_.at(i); }
  [[nodiscard]] const ModelMatrix& vectors() const noexcept { return vectors_; }
  [[nodiscard]] ModelVector vector(std::size_t i) const {
    return vectors_.row(static_cast<Eigen::Index>(i)).transpose();
  }
  [[nodiscard]] const Eigen::VectorXd& norms() const noexcept { return norms_; }
  [[nodiscard]] const std::vector<ColumnBounds<double>>& metric_bounds() const noexcept {
    return bounds_;
  }
  [[nodiscard]] std::uint64_t version() const noexcept { return version_; }

  /// Index of model `id`, or size() when absent.
  [[nodiscard]] std::size_t find(std::string_view id) const noexcept;

private:
  friend NormalizedCatalog normalize_catalog(std::vector<ModelCard> cards);
  friend class CatalogStore;
  friend std::shared_ptr<const NormalizedCatalog> snapshot(NormalizedCatalog catalog,
                                                           std::uint64_t version);

  std::vector<ModelCard> cards_;
  ModelMatrix vectors_;
  Eigen::VectorXd norms_;
  std::vector<ColumnBounds<double>> bounds_;
  std::map<std::string, std::size_t, std::less<>> by_id_;
  std::uint64_t version_ = 0;
};

using CatalogHandle = std::shared_ptr<const NormalizedCatalog>;

/// Per-metric min-max normalization into the 9-dimensional routing space.
/// Throws EmptyCatalog for an empty list.
[[nodiscard]] NormalizedCatalog normalize_catalog(std::vector<ModelCard> cards);

/// Freezes a catalog into an immutable, shareable handle carrying `version`.
[[nodiscard]] CatalogHandle snapshot(NormalizedCatalog catalog, std::uint64_t version = 1);

struct Neighbor {
  std::string model_id;
  std::size_t index;
  double similarity;
};

/// Exact cosine kNN: min(k, N) models by descending similarity, ties by
/// ascending id. Models with a zero vector have similarity 0.
/// Throws EmptyCatalog, ZeroVector (query), InvalidArgument (k < 1).
[[nodiscard]] std::vector<Neighbor> top_k(const NormalizedCatalog& index, const TaskVector& query,
                                          std::size_t k);

/// Single-writer, many-reader holder of the live catalog snapshot.
class CatalogStore {
public:
  CatalogStore() = default;

  /// Normalizes and publishes `cards` as version current+1.
  CatalogHandle publish(std::vector<ModelCard> cards);
  [[nodiscard]] CatalogHandle current() const;
  [[nodiscard]] std::uint64_t version() const;

private:
  mutable std::mutex mutex_;
  std::mutex writer_;
  CatalogHandle current_;
};

}  // namespace optiroute
