#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

namespace meanerg {

/// d(x, y) = 1 for x != y. Every point is isolated.
struct DiscreteMetric {};

/// Points embedded in R^dim, Euclidean distance. `coords` is row-major,
/// one row of `dim` values per state.
struct EuclideanMetric {
  std::size_t dim = 1;
  std::vector<double> coords;
};

/// Explicit symmetric distance matrix, row-major.
struct MatrixMetric {
  std::vector<double> distances;
};

using Metric = std::variant<DiscreteMetric, EuclideanMetric, MatrixMetric>;

struct MetricAxiomReport {
  bool ok = true;
  double max_asymmetry = 0.0;
  double max_triangle_violation = 0.0;
  double min_off_diagonal = 0.0;
};

/// A finite truncation of a countable metric space together with a compact
/// exhaustion K_1 ⊆ K_2 ⊆ ... and optional compactification points.
///
/// The exhaustion is stored as a level per state: K_m = {x : level(x) <= m}.
/// Nesting is therefore automatic. Compactification points have level 1 and
/// so belong to every K_m.
///
/// Continuity ties are pairs of states on which continuous functions are
/// required to agree at this truncation. They stand in for limit relations
/// such as f(x_n) -> f(x) that a finite truncation cannot express, and are
/// used by the function-side fixed-space solve.
class StateSpace {
 public:
  struct Config {
    std::vector<std::string> names;
    Metric metric = DiscreteMetric{};
    std::vector<int> levels;  // empty: every state at level 1
    std::vector<std::size_t> infinity_points;
    std::size_t truncation_level = 0;  // 0: use the number of states
    std::vector<std::pair<std::size_t, std::size_t>> continuity_ties;
  };

  static std::shared_ptr<const StateSpace> create(Config config);

  std::size_t size() const noexcept { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_.at(i); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  std::optional<std::size_t> find(const std::string& name) const;
  /// Throws UnresolvedStateError when the name is not enumerated.
  std::size_t index(const std::string& name) const;

  double distance(std::size_t i, std::size_t j) const;
  const Metric& metric() const noexcept { return metric_; }
  /// O(n^3) check of symmetry, positivity and the triangle inequality.
  MetricAxiomReport check_metric_axioms(double tol = 1e-12) const;

  int level(std::size_t i) const { return levels_.at(i); }
  const std::vector<int>& levels() const noexcept { return levels_; }
  /// Number of exhaustion sets; K_depth() is the whole truncation.
  int depth() const noexcept { return depth_; }
  bool in_exhaustion(std::size_t i, int m) const { return levels_.at(i) <= m; }
  std::vector<std::size_t> exhaustion_set(int m) const;

  const std::vector<std::size_t>& infinity_points() const noexcept { return infinity_points_; }
  bool is_infinity_point(std::size_t i) const;

  std::size_t truncation_level() const noexcept { return truncation_level_; }

  const std::vector<std::pair<std::size_t, std::size_t>>& continuity_ties() const noexcept {
    return ties_;
  }
  /// Class label per state under the equivalence generated by the ties.
  /// Labels are 0..num_classes-1, numbered by first occurrence.
  std::vector<std::size_t> tie_classes() const;

  /// True when both spaces enumerate the same states in the same order.
  bool same_as(const StateSpace& other) const noexcept;

 private:
  StateSpace() = default;

  std::vector<std::string> names_;
  std::unordered_map<std::string, std::size_t> index_;
  Metric metric_;
  std::vector<int> levels_;
  int depth_ = 1;
  std::vector<std::size_t> infinity_points_;
  std::size_t truncation_level_ = 0;
  std::vector<std::pair<std::size_t, std::size_t>> ties_;
};

using SpacePtr = std::shared_ptr<const StateSpace>;

/// Throws SpaceMismatchError unless both spaces agree.
void require_same_space(const StateSpace& a, const StateSpace& b);

}  // namespace meanerg
