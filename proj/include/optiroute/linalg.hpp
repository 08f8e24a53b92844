#pragma once
#include <vector>

#include <Eigen/Core>

#include "optiroute/error.hpp"

namespace optiroute {

/// Cosine of the angle between two non-zero vectors. Throws ZeroVector if
/// either operand has zero magnitude.
template <typename DerivedA, typename DerivedB>
[[nodiscard]] typename DerivedA::Scalar cosine_similarity(const Eigen::MatrixBase<DerivedA>& a,
                                                          const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  const Scalar na = a.norm();
  const Scalar nb = b.norm();
  if (na == Scalar(0) || nb == Scalar(0)) {
    throw Error(ErrorCode::ZeroVector, "cosine similarity is undefined for a zero-magnitude vector");
  }
  return a.dot(b) / (na * nb);
}

template <typename DerivedA, typename DerivedB>
[[nodiscard]] typename DerivedA::Scalar cosine_distance(const Eigen::MatrixBase<DerivedA>& a,
                                                        const Eigen::MatrixBase<DerivedB>& b) {
  return typename DerivedA::Scalar(1) - cosine_similarity(a, b);
}

enum class Direction { HigherIsBetter, LowerIsBetter };

template <typename Scalar>
struct ColumnBounds {
  Scalar min;
  Scalar max;
};

/// Min-max normalizes each column of `raw` into [0,1] in place.
/// Lower-is-better columns are inverted so the raw minimum maps to 1.
/// Constant columns map to 0.5.
template <typename Derived>
std::vector<ColumnBounds<typename Derived::Scalar>> min_max_normalize(
    Eigen::MatrixBase<Derived>& raw, const std::vector<Direction>& directions) {
  using Scalar = typename Derived::Scalar;
  std::vector<ColumnBounds<Scalar>> bounds;
  bounds.reserve(static_cast<std::size_t>(raw.cols()));
  for (Eigen::Index c = 0; c < raw.cols(); ++c) {
    auto col = raw.col(c);
    const Scalar lo = col.minCoeff();
    const Scalar hi = col.maxCoeff();
    bounds.push_back({lo, hi});
    if (hi == lo) {
      col.setConstant(Scalar(0.5));
      continue;
    }
    const Scalar span = hi - lo;
    if (directions[static_cast<std::size_t>(c)] == Direction::LowerIsBetter) {
      col = (Scalar(hi) - col.array()) / span;
    } else {
      col = (col.array() - Scalar(lo)) / span;
    }
  }
  return bounds;
}

}  // namespace optiroute
