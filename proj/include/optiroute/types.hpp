#pragma once
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include <Eigen/Core>

namespace optiroute {

enum class TaskType {
  sentiment_analysis,
  summarization,
  translation,
  question_answering,
  code_generation,
  classification,
  extraction,
  text_generation,
  other,
};

enum class Domain {
  general,
  healthcare,
  finance,
  legal,
  food_beverage,
  technology,
  other,
};

inline constexpr std::array kAllTaskTypes = {
    TaskType::sentiment_analysis, TaskType::summarization,   TaskType::translation,
    TaskType::question_answering, TaskType::code_generation, TaskType::classification,
    TaskType::extraction,         TaskType::text_generation, TaskType::other,
};

inline constexpr std::array kAllDomains = {
    Domain::general, Domain::healthcare, Domain::finance,    Domain::legal,
    Domain::food_beverage, Domain::technology, Domain::other,
};

[[nodiscard]] std::string_view to_string(TaskType t) noexcept;
[[nodiscard]] std::string_view to_string(Domain d) noexcept;
[[nodiscard]] std::optional<TaskType> parse_task_type(std::string_view s) noexcept;
[[nodiscard]] std::optional<Domain> parse_domain(std::string_view s) noexcept;

// Routing space. Dimension order is fixed and shared by model and task vectors.
enum Dim : Eigen::Index {
  kAccuracy = 0,
  kSpeed,
  kCostEfficiency,
  kHelpfulness,
  kHonesty,
  kHarmlessness,
  kSteerability,
  kCreativity,
  kComplexity,
};

inline constexpr Eigen::Index kRouteDims = 9;
inline constexpr Eigen::Index kPreferenceDims = 8;

template <typename Scalar>
using RouteVectorT = Eigen::Matrix<Scalar, kRouteDims, 1>;

using ModelVector = RouteVectorT<double>;
using TaskVector = RouteVectorT<double>;

inline constexpr std::array<std::string_view, kRouteDims> kDimNames = {
    "accuracy", "speed",        "cost_efficiency", "helpfulness",          "honesty",
    "harmlessness", "steerability", "creativity",  "complexity_capability",
};

[[nodiscard]] constexpr bool in_unit_interval(double x) noexcept { return x >= 0.0 && x <= 1.0; }

// Implicit preferences inferred from the query text.
struct TaskProfile {
  TaskType task_type = TaskType::other;
  Domain domain = Domain::general;
  double complexity = 0.0;

  friend bool operator==(const TaskProfile&, const TaskProfile&) = default;
};

}  // namespace optiroute
