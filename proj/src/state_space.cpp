#include "meanerg/state_space.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "meanerg/errors.hpp"

namespace meanerg {

std::shared_ptr<const StateSpace> StateSpace::create(Config config) {
  const std::size_t n = config.names.size();
  if (n == 0) throw DomainError("state space must enumerate at least one state");

  auto space = std::shared_ptr<StateSpace>(new StateSpace());
  space->names_ = std::move(config.names);
  for (std::size_t i = 0; i < n; ++i) {
    if (!space->index_.emplace(space->names_[i], i).second)
      throw DomainError("duplicate state name '" + space->names_[i] + "'");
  }

  if (auto* e = std::get_if<EuclideanMetric>(&config.metric)) {
    if (e->dim == 0 || e->coords.size() != e->dim * n)
      throw DomainError("euclidean metric: coordinate count does not match states");
  } else if (auto* m = std::get_if<MatrixMetric>(&config.metric)) {
    if (m->distances.size() != n * n) throw DomainError("matrix metric: expected n*n distances");
  }
  space->metric_ = std::move(config.metric);

  if (config.levels.empty()) config.levels.assign(n, 1);
  if (config.levels.size() != n) throw DomainError("exhaustion levels: one level per state required");
  for (int l : config.levels)
    if (l < 1) throw DomainError("exhaustion levels must be >= 1");
  space->levels_ = std::move(config.levels);

  for (std::size_t p : config.infinity_points) {
    if (p >= n) throw DomainError("infinity point index out of range");
    if (space->levels_[p] != 1)
      throw DomainError("compactification point '" + space->names_[p] +
                        "' must belong to every exhaustion set");
  }
  std::sort(config.infinity_points.begin(), config.infinity_points.end());
  config.infinity_points.erase(
      std::unique(config.infinity_points.begin(), config.infinity_points.end()),
      config.infinity_points.end());
  space->infinity_points_ = std::move(config.infinity_points);

  space->depth_ = *std::max_element(space->levels_.begin(), space->levels_.end());
  space->truncation_level_ = config.truncation_level == 0 ? n : config.truncation_level;

  for (auto [a, b] : config.continuity_ties)
    if (a >= n || b >= n) throw DomainError("continuity tie index out of range");
  space->ties_ = std::move(config.continuity_ties);
  return space;
}

std::optional<std::size_t> StateSpace::find(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::size_t StateSpace::index(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw UnresolvedStateError(name);
  return it->second;
}

double StateSpace::distance(std::size_t i, std::size_t j) const {
  if (i == j) return 0.0;
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, DiscreteMetric>) {
          return 1.0;
        } else if constexpr (std::is_same_v<M, EuclideanMetric>) {
          double s = 0.0;
          for (std::size_t k = 0; k < m.dim; ++k) {
            const double d = m.coords[i * m.dim + k] - m.coords[j * m.dim + k];
            s += d * d;
          }
          return std::sqrt(s);
        } else {
          return m.distances[i * size() + j];
        }
      },
      metric_);
}

MetricAxiomReport StateSpace::check_metric_axioms(double tol) const {
  MetricAxiomReport r;
  const std::size_t n = size();
  r.min_off_diagonal = n > 1 ? std::numeric_limits<double>::infinity() : 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dij = distance(i, j);
      if (i != j) r.min_off_diagonal = std::min(r.min_off_diagonal, dij);
      r.max_asymmetry = std::max(r.max_asymmetry, std::abs(dij - distance(j, i)));
      for (std::size_t k = 0; k < n; ++k) {
        const double excess = dij - distance(i, k) - distance(k, j);
        r.max_triangle_violation = std::max(r.max_triangle_violation, excess);
      }
    }
  }
  r.ok = r.max_asymmetry <= tol && r.max_triangle_violation <= tol && (n < 2 || r.min_off_diagonal > 0.0);
  return r;
}

std::vector<std::size_t> StateSpace::exhaustion_set(int m) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i)
    if (levels_[i] <= m) out.push_back(i);
  return out;
}

bool StateSpace::is_infinity_point(std::size_t i) const {
  return std::binary_search(infinity_points_.begin(), infinity_points_.end(), i);
}

std::vector<std::size_t> StateSpace::tie_classes() const {
  std::vector<std::size_t> parent(size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  auto root = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (auto [a, b] : ties_) {
    const std::size_t ra = root(a), rb = root(b);
    if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
  }
  std::vector<std::size_t> label(size()), root_label(size(), size());
  std::size_t next = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    const std::size_t r = root(i);
    if (root_label[r] == size()) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

bool StateSpace::same_as(const StateSpace& other) const noexcept {
  return this == &other || names_ == other.names_;
}

void require_same_space(const StateSpace& a, const StateSpace& b) {
  if (!a.same_as(b)) throw SpaceMismatchError("objects live on different state spaces");
}

}  // namespace meanerg
