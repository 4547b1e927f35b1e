#include "meanerg/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "meanerg/errors.hpp"

namespace meanerg {

namespace {

std::vector<std::size_t> all_states(const StateSpace& space) {
  std::vector<std::size_t> v(space.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
  return v;
}

std::size_t require_size(double v, const char* what, std::size_t min) {
  if (!(v >= static_cast<double>(min)) || v != std::floor(v))
    throw DomainError(std::string(what) + " must be an integer >= " + std::to_string(min));
  return static_cast<std::size_t>(v);
}

SpacePtr discrete(std::vector<std::string> names) {
  StateSpace::Config c;
  c.names = std::move(names);
  return StateSpace::create(std::move(c));
}

std::vector<std::string> numbered(const std::string& prefix, std::size_t n, std::size_t first = 0) {
  std::vector<std::string> v;
  for (std::size_t i = 0; i < n; ++i) v.push_back(prefix + std::to_string(first + i));
  return v;
}

std::string integer_name(long k) { return std::to_string(k); }

}  // namespace

const BoundedFunction& Model::function(const std::string& key) const {
  auto it = functions.find(key);
  if (it == functions.end()) throw DomainError("model " + name + " has no function '" + key + "'");
  return it->second;
}

const SignedMeasure& Model::measure(const std::string& key) const {
  auto it = measures.find(key);
  if (it == measures.end()) throw DomainError("model " + name + " has no measure '" + key + "'");
  return it->second;
}

AverageScheme Model::scheme(const SchemeSpec& spec) const {
  if (spec.kind == SchemeSpec::Kind::time) {
    if (!rates) throw DomainError("model " + name + " has no rate matrix for a time scheme");
    return AverageScheme(*rates, spec);
  }
  return AverageScheme(step, spec);
}

AverageScheme Model::backward_scheme(const SchemeSpec& spec) const {
  if (!backward) throw DomainError("model " + name + " has no backward scheme");
  if (spec.kind == SchemeSpec::Kind::time) throw DomainError("backward schemes are discrete");
  return AverageScheme(*backward, spec);
}

Model build_summing_l1(std::size_t n) {
  if (n < 3) throw DomainError("summing_l1: N must be >= 3");
  StateSpace::Config c;
  c.names = numbered("x", n, 1);
  for (std::size_t k = 1; k <= n; ++k) c.levels.push_back(static_cast<int>(k));
  auto space = StateSpace::create(std::move(c));
  // Measure side: (S'x)_1 = x_1 + x_2, (S'x)_j = x_{j+1}; so row k sends
  // its mass to max(1, k - 1).
  std::vector<std::optional<std::size_t>> map(n);
  map[0] = 0;
  for (std::size_t k = 1; k < n; ++k) map[k] = k - 1;
  Model m{"summing_l1", {{"N", static_cast<double>(n)}}, space, KernelOperator(Kernel::deterministic(space, map)),
          {}, {}, {}, all_states(*space), {}, {}};
  m.schemes = {SchemeSpec::cesaro(SchemeSpec::doubling_grid(4096))};
  const std::size_t first[] = {0};
  m.functions.emplace("e1", BoundedFunction::indicator(space, first));
  m.measures.emplace("e1", SignedMeasure::dirac(space, 0));
  m.measures.emplace("e2", SignedMeasure::dirac(space, 1));
  return m;
}

Model build_z_infinity(std::size_t n) {
  if (n < 2) throw DomainError("z_infinity: N must be >= 2");
  const auto nn = static_cast<long>(n);
  StateSpace::Config c;
  EuclideanMetric metric{1, {}};
  for (long k = -nn; k <= nn; ++k) {
    c.names.push_back(integer_name(k));
    metric.coords.push_back(k >= 0 ? 1.0 - 1.0 / static_cast<double>(k + 1) : static_cast<double>(k));
    c.levels.push_back(static_cast<int>(std::max(1L, -k)));
  }
  c.names.push_back("inf");
  metric.coords.push_back(1.0);
  c.levels.push_back(1);
  c.metric = std::move(metric);
  const std::size_t inf = 2 * n + 1;
  c.infinity_points = {inf};
  c.continuity_ties = {{2 * n, inf}};
  auto space = StateSpace::create(std::move(c));

  std::vector<std::optional<std::size_t>> fwd(inf + 1), bwd(inf + 1);
  for (std::size_t i = 0; i < inf; ++i) {
    fwd[i] = i + 1;  // N -> inf
    if (i > 0) bwd[i] = i - 1;
  }
  fwd[inf] = inf;
  bwd[inf] = inf;

  Model m{"z_infinity", {{"N", static_cast<double>(n)}}, space, KernelOperator(Kernel::deterministic(space, fwd)),
          KernelOperator(Kernel::deterministic(space, bwd)), {}, {}, {}, {}, {}};
  m.schemes = {SchemeSpec::cesaro(SchemeSpec::doubling_grid(16384))};
  m.probe_points = {space->index(integer_name(-nn / 2)), space->index("0"), space->index(integer_name(nn / 2)), inf};

  std::vector<std::size_t> upper;
  for (std::size_t i = n; i <= inf; ++i) upper.push_back(i);
  m.functions.emplace("1_N_inf", BoundedFunction::indicator(space, upper));
  Eigen::VectorXd dist(static_cast<Eigen::Index>(inf + 1));
  for (std::size_t i = 0; i <= inf; ++i) dist(static_cast<Eigen::Index>(i)) = std::min(1.0, space->distance(i, inf));
  m.functions.emplace("dist_inf", BoundedFunction(space, dist, TailRule::constant(1.0), 1.0));
  m.measures.emplace("delta_inf", SignedMeasure::dirac(space, inf));
  return m;
}

Model build_cycles_line(std::size_t cycles, std::size_t window) {
  if (cycles < 2) throw DomainError("cycles_line: M must be >= 2");
  if (window < cycles) throw DomainError("cycles_line: W must be >= M");
  StateSpace::Config c;
  EuclideanMetric metric{2, {}};
  std::vector<std::size_t> cycle_start;
  for (std::size_t n = 1; n <= cycles; ++n) {
    cycle_start.push_back(c.names.size());
    for (std::size_t k = 0; k <= n; ++k) {
      c.names.push_back("c" + std::to_string(n) + "_" + std::to_string(k));
      metric.coords.push_back(static_cast<double>(k));
      metric.coords.push_back(1.0 / static_cast<double>(n));
      c.levels.push_back(static_cast<int>(std::max<std::size_t>(1, k)));
    }
  }
  const std::size_t zero = c.names.size();
  for (std::size_t k = 0; k <= window; ++k) {
    c.names.push_back("z" + std::to_string(k));
    metric.coords.push_back(static_cast<double>(k));
    metric.coords.push_back(0.0);
    c.levels.push_back(static_cast<int>(std::max<std::size_t>(1, k)));
  }
  c.metric = std::move(metric);
  c.continuity_ties = {{cycle_start.back(), zero}};
  auto space = StateSpace::create(std::move(c));

  std::vector<std::optional<std::size_t>> phi(space->size());
  for (std::size_t n = 1; n <= cycles; ++n) {
    const std::size_t s = cycle_start[n - 1];
    for (std::size_t k = 0; k < n; ++k) phi[s + k] = s + k + 1;
    phi[s + n] = s;
  }
  for (std::size_t k = 0; k < window; ++k) phi[zero + k] = zero + k + 1;

  Model m{"cycles_line",
          {{"M", static_cast<double>(cycles)}, {"W", static_cast<double>(window)}},
          space,
          KernelOperator(Kernel::deterministic(space, phi)),
          {}, {}, {}, {}, {}, {}};
  // Multiples of the common period of the cycles, so that the cycle part of
  // A_n is exact and only the window contributes a 1/n term.
  std::size_t period = 1;
  for (std::size_t n = 1; n <= cycles; ++n) period = std::lcm(period, n + 1);
  std::vector<std::size_t> grid;
  for (std::size_t j = 0; j < 8; ++j) grid.push_back(period << j);
  m.schemes = {SchemeSpec::cesaro(grid)};
  for (std::size_t s : cycle_start) m.probe_points.push_back(s);
  for (std::size_t k = 0; k <= window / 2; ++k) m.probe_points.push_back(zero + k);

  for (std::size_t n = 1; n <= cycles; ++n) {
    std::vector<std::size_t> kn;
    for (std::size_t k = 0; k <= n; ++k) kn.push_back(cycle_start[n - 1] + k);
    m.functions.emplace("1_K" + std::to_string(n), BoundedFunction::indicator(space, kn));
    m.measures.emplace("zeta_" + std::to_string(n), SignedMeasure::uniform(space, kn));
  }
  m.functions.emplace("1_E", BoundedFunction(space, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(space->size())),
                                             TailRule::constant(1.0)));
  m.measures.emplace("delta_0", SignedMeasure::dirac(space, zero));
  return m;
}

Model build_swap2() {
  auto space = discrete({"a", "b"});
  Model m{"swap2", {}, space, KernelOperator(Kernel::deterministic(space, {1, 0})), {}, {}, {}, all_states(*space), {},
          {}};
  m.schemes = {SchemeSpec::cesaro(SchemeSpec::doubling_grid(64)), SchemeSpec::abel(SchemeSpec::default_abel_grid())};
  m.functions.emplace("e_a", BoundedFunction(space, Eigen::Vector2d(1.0, 0.0)));
  return m;
}

Model build_irreducible_chain(const Eigen::MatrixXd& p, std::string name) {
  if (p.rows() != p.cols() || p.rows() == 0) throw DomainError("irreducible_chain: P must be square and nonempty");
  auto space = discrete(numbered("s", static_cast<std::size_t>(p.rows())));
  KernelOperator s(Kernel::from_dense(space, p));
  if (!is_markovian(s)) throw DomainError("irreducible_chain: P must be stochastic");
  Model m{std::move(name), {}, space, std::move(s), {}, {}, {}, all_states(*space), {}, {}};
  m.schemes = {SchemeSpec::cesaro(SchemeSpec::doubling_grid(1024)), SchemeSpec::abel(SchemeSpec::default_abel_grid())};
  return m;
}

Model build_irreducible3() {
  Eigen::Matrix3d p;
  p << .5, .3, .2, .2, .6, .2, .1, .4, .5;
  Model m = build_irreducible_chain(p, "irreducible3");
  m.functions.emplace("f", BoundedFunction(m.space, Eigen::Vector3d(1.0, -2.0, 0.5)));
  return m;
}

Model build_shift_z(std::size_t n) {
  if (n < 8) throw DomainError("shift_z: N must be >= 8");
  const auto nn = static_cast<long>(n);
  StateSpace::Config c;
  EuclideanMetric metric{1, {}};
  for (long k = -nn; k <= nn; ++k) {
    c.names.push_back(integer_name(k));
    metric.coords.push_back(static_cast<double>(k));
    c.levels.push_back(static_cast<int>(std::abs(k) + 1));
  }
  c.metric = std::move(metric);
  auto space = StateSpace::create(std::move(c));
  std::vector<std::optional<std::size_t>> map(space->size());
  for (std::size_t i = 0; i + 1 < space->size(); ++i) map[i] = i + 1;
  Model m{"shift_z", {{"N", static_cast<double>(n)}}, space, KernelOperator(Kernel::deterministic(space, map)),
          {}, {}, {}, {}, {}, {}};
  m.schemes = {SchemeSpec::cesaro(SchemeSpec::doubling_grid(64))};
  for (long k = -nn / 2; k <= nn / 2; ++k) m.probe_points.push_back(space->index(integer_name(k)));
  Eigen::VectorXd tent(static_cast<Eigen::Index>(space->size()));
  for (long k = -nn; k <= nn; ++k) tent(k + nn) = std::max(0.0, 1.0 - std::abs(static_cast<double>(k)) / 8.0);
  m.functions.emplace("bump", BoundedFunction(space, tent, TailRule::zero(), 1.0 / 8.0));
  return m;
}

Model build_ctmc(const Eigen::MatrixXd& q, std::string name) {
  auto space = discrete(numbered("s", static_cast<std::size_t>(q.rows())));
  RateMatrix rates(space, q);
  auto step = semigroup_operator(rates, 1.0).value;
  Model m{std::move(name), {}, space, std::move(step), {}, rates, {}, all_states(*space), {}, {}};
  m.schemes = {SchemeSpec::time({1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024})};
  return m;
}

Model build_rate2() {
  Eigen::Matrix2d q;
  q << -1, 1, 1, -1;
  Model m = build_ctmc(q, "rate2");
  m.functions.emplace("e_0", BoundedFunction(m.space, Eigen::Vector2d(1.0, 0.0)));
  return m;
}

const std::vector<ModelInfo>& model_catalog() {
  static const std::vector<ModelInfo> catalog = {
      {"summing_l1", {{"N", 64}}, "summing operator on l^1 with the c_0 adjoint; averages do not respect the duality"},
      {"z_infinity", {{"N", 64}}, "shift on Z u {inf}; forward averages have the e-property, backward ones do not"},
      {"cycles_line", {{"M", 8}, {"W", 16}}, "rotating cycles above a shifted line; fixed spaces separate, delta_0 does not decompose"},
      {"swap2", {}, "two-state swap, period 2"},
      {"irreducible3", {}, "irreducible aperiodic three-state chain"},
      {"shift_z", {{"N", 32}}, "shift on Z; e-property without beta0-equicontinuity"},
      {"rate2", {}, "two-state rate matrix Q = [[-1, 1], [1, -1]]"},
  };
  return catalog;
}

Model build_model(const std::string& name, const Params& params) {
  const auto& cat = model_catalog();
  auto it = std::find_if(cat.begin(), cat.end(), [&](const ModelInfo& m) { return m.name == name; });
  if (it == cat.end()) throw DomainError("unknown model '" + name + "'");
  Params p = it->defaults;
  for (const auto& [k, v] : params) {
    if (!p.count(k)) throw DomainError("model " + name + " has no parameter '" + k + "'");
    p[k] = v;
  }
  if (name == "summing_l1") return build_summing_l1(require_size(p["N"], "N", 3));
  if (name == "z_infinity") return build_z_infinity(require_size(p["N"], "N", 2));
  if (name == "cycles_line") return build_cycles_line(require_size(p["M"], "M", 2), require_size(p["W"], "W", 2));
  if (name == "swap2") return build_swap2();
  if (name == "irreducible3") return build_irreducible3();
  if (name == "shift_z") return build_shift_z(require_size(p["N"], "N", 8));
  return build_rate2();
}

}  // namespace meanerg
