#include "meanerg/projection.hpp"

#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "meanerg/bl_distance.hpp"
#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"

namespace meanerg {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_tol(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

/// Kernel matrix with the leakage vector alongside.
struct Dense {
  Eigen::MatrixXd k;
  Eigen::VectorXd leak;
};

Dense dense_of(const KernelOperator& op) {
  const auto& l = op.kernel().leakage();
  return {op.kernel().dense(), Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size()))};
}

KernelOperator operator_of(const SpacePtr& space, const Dense& d) {
  return KernelOperator(Kernel::from_dense(space, d.k, std::vector<double>(d.leak.data(), d.leak.data() + d.leak.size())));
}

class Distance {
 public:
  Distance(const SpacePtr& space, const ProjectionOptions& opts) : space_(space), opts_(opts) {
    const auto n = static_cast<Eigen::Index>(space->size());
    const auto probes = opts.function_probes.empty() ? bump_dictionary(space) : opts.function_probes;
    probes_.resize(n, static_cast<Eigen::Index>(probes.size()));
    tails_.resize(static_cast<Eigen::Index>(probes.size()));
    for (std::size_t p = 0; p < probes.size(); ++p) {
      probes_.col(static_cast<Eigen::Index>(p)) = probes[p].values();
      tails_(static_cast<Eigen::Index>(p)) = probes[p].tail_value().value_or(0.0);
    }
    const auto weights = opts.weights.empty() ? exhaustion_weights(space) : opts.weights;
    weights_.resize(n, static_cast<Eigen::Index>(weights.size()));
    for (std::size_t q = 0; q < weights.size(); ++q) weights_.col(static_cast<Eigen::Index>(q)) = weights[q].values();
  }

  double operator()(const Dense& a, const Dense& b) const {
    const Eigen::MatrixXd dk = a.k - b.k;
    const Eigen::VectorXd dl = a.leak - b.leak;
    switch (opts_.topology) {
      case Topology::sigma: {
        const Eigen::MatrixXd df = dk * probes_ + dl * tails_.transpose();
        return df.size() ? df.cwiseAbs().maxCoeff() : 0.0;
      }
      case Topology::beta0: {
        const Eigen::MatrixXd df = (dk * probes_ + dl * tails_.transpose()).cwiseAbs();
        double best = 0.0;
        for (Eigen::Index q = 0; q < weights_.cols(); ++q)
          best = std::max(best, (weights_.col(q).cwiseAbs().asDiagonal() * df).maxCoeff());
        return best;
      }
      case Topology::sigma_prime:
        return sigma_prime(a, b, dl);
    }
    return kNaN;
  }

 private:
  double sigma_prime(const Dense& a, const Dense& b, const Eigen::VectorXd& dl) const {
    const auto n = a.k.rows();
    const BlOptions bl{opts_.bl_exact_support};
    double best = 0.0;
#pragma omp parallel for reduction(max : best) schedule(dynamic)
    for (Eigen::Index x = 0; x < n; ++x) {
      const SignedMeasure mu(space_, a.k.row(x).transpose()), nu(space_, b.k.row(x).transpose());
      const BlBounds bounds = bl_bounds(mu, nu, bl);
      best = std::max(best, (bounds.exact ? bounds.lower : bounds.upper) + std::abs(dl(x)));
    }
    return best;
  }

  SpacePtr space_;
  const ProjectionOptions& opts_;
  Eigen::MatrixXd probes_;
  Eigen::VectorXd tails_;
  Eigen::MatrixXd weights_;
};

std::vector<std::size_t> exhaustion_order(const StateSpace& space) {
  std::vector<std::size_t> order(space.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return space.level(a) < space.level(b); });
  return order;
}

std::vector<std::size_t> default_counts(std::size_t total) {
  std::vector<std::size_t> c{0};
  for (std::size_t k = 1; k < total; k *= 2) c.push_back(k);
  if (total > 0) c.push_back(total);
  return c;
}

double sup_of(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }
double tv_of(const Eigen::VectorXd& v) { return v.cwiseAbs().sum(); }

/// Residual of r against the first c columns of g, for each requested c.
template <class Norm>
DecompositionReport residual_decay(const Eigen::VectorXd& r, const Eigen::MatrixXd& fixed, const Eigen::MatrixXd& g,
                                   const DecompositionOptions& opts, Norm norm) {
  DecompositionReport out;
  out.counts = opts.counts.empty() ? default_counts(static_cast<std::size_t>(g.cols())) : opts.counts;
  for (std::size_t c : out.counts) {
    const auto cols = std::min<Eigen::Index>(static_cast<Eigen::Index>(c), g.cols());
    Eigen::MatrixXd a(r.size(), fixed.cols() + cols);
    a << fixed, g.leftCols(cols);
    Eigen::VectorXd res = r;
    if (a.cols() > 0) {
      const Eigen::VectorXd coef = a.completeOrthogonalDecomposition().solve(r);
      res = r - a * coef;
      if (fixed.cols() > 0 && c == out.counts.back()) out.fixed_component = norm(fixed * coef.head(fixed.cols()));
    }
    out.residuals.push_back(norm(res));
  }
  out.passes = !out.residuals.empty() && out.residuals.back() <= opts.tol;
  return out;
}

/// Columns (I - S^k) e_j (functions) or (I - S'^k) delta_j with the escaped
/// coordinate appended (measures), states in exhaustion order.
Eigen::MatrixXd range_generators(const KernelOperator& s, Side side, std::size_t max_power) {
  const auto n = static_cast<Eigen::Index>(s.size());
  const auto order = exhaustion_order(*s.space());
  const Eigen::Index rows = side == Side::function ? n : n + 1;
  Eigen::MatrixXd g(rows, n * static_cast<Eigen::Index>(max_power));
  Eigen::Index col = 0;
  for (std::size_t k = 1; k <= max_power; ++k) {
    const Dense pk = dense_of(power(s, k));
    for (std::size_t j : order) {
      const auto jj = static_cast<Eigen::Index>(j);
      Eigen::VectorXd v = Eigen::VectorXd::Zero(rows);
      if (side == Side::function) {
        v = -pk.k.col(jj);
        v(jj) += 1.0;
      } else {
        v.head(n) = -pk.k.row(jj).transpose();
        v(jj) += 1.0;
        v(n) = -pk.leak(jj);
      }
      g.col(col++) = v;
    }
  }
  return g;
}

Eigen::VectorXd with_escaped(const SignedMeasure& mu) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(mu.size()) + 1);
  v << mu.weights(), mu.escaped();
  return v;
}

}  // namespace

std::string topology_name(Topology t) {
  switch (t) {
    case Topology::sigma:
      return "sigma";
    case Topology::sigma_prime:
      return "sigma_prime";
    case Topology::beta0:
      return "beta0";
  }
  return "?";
}

Topology parse_topology(const std::string& name) {
  if (name == "sigma") return Topology::sigma;
  if (name == "sigma_prime") return Topology::sigma_prime;
  if (name == "beta0") return Topology::beta0;
  throw DomainError("unknown topology '" + name + "'");
}

std::vector<double> richardson_weights(std::span<const double> h) {
  std::vector<double> w(h.size(), 1.0);
  for (std::size_t k = 0; k < h.size(); ++k)
    for (std::size_t j = 0; j < h.size(); ++j)
      if (j != k) {
        if (h[j] == h[k]) throw DomainError("richardson_weights: repeated nodes");
        w[k] *= h[j] / (h[j] - h[k]);
      }
  return w;
}

std::vector<BoundedFunction> bump_dictionary(const SpacePtr& space) {
  std::vector<BoundedFunction> out;
  const auto n = static_cast<Eigen::Index>(space->size());
  out.reserve(space->size());
  for (std::size_t c = 0; c < space->size(); ++c) {
    Eigen::VectorXd v(n);
    for (Eigen::Index y = 0; y < n; ++y) v(y) = std::max(0.0, 1.0 - space->distance(c, static_cast<std::size_t>(y)));
    out.emplace_back(space, std::move(v), TailRule::zero(), 1.0);
  }
  return out;
}

std::vector<VanishingWeight> exhaustion_weights(const SpacePtr& space) {
  std::vector<VanishingWeight> out;
  for (int m = 1; m <= space->depth(); ++m) out.push_back(VanishingWeight::indicator(space, m));
  return out;
}

std::string ProjectionEstimate::status_name() const {
  return status == Status::certified ? "certified" : "inconclusive";
}

ProjectionInvariants projection_invariants_check(const KernelOperator& p, std::span<const KernelOperator> generators,
                                                 double tol) {
  ProjectionInvariants out;
  out.tolerance = tol;
  out.idempotent = linear_combination(1.0, compose(p, p), -1.0, p).bound();
  double worst = out.idempotent;
  for (const auto& s : generators) {
    out.left.push_back(linear_combination(1.0, compose(p, s), -1.0, p).bound());
    out.right.push_back(linear_combination(1.0, compose(s, p), -1.0, p).bound());
    worst = std::max({worst, out.left.back(), out.right.back()});
  }
  out.ok = worst <= tol;
  return out;
}

ProjectionEstimate estimate_projection(const AverageScheme& scheme, const ProjectionOptions& opts) {
  if (opts.plateau_window < 2) throw DomainError("estimate_projection: plateau window must be >= 2");
  if (!(opts.plateau_tol > 0.0) || !(opts.invariant_tol > 0.0))
    throw DomainError("estimate_projection: tolerances must be positive");
  const std::size_t m = scheme.grid_size();
  const std::size_t order = opts.extrapolation_order;
  const SpacePtr& space = scheme.space();
  const Distance distance(space, opts);

  ProjectionEstimate out;
  out.topology = opts.topology;
  out.grid = scheme.spec().grid;
  out.raw_distance.assign(m, kNaN);
  out.extrapolated_distance.assign(m, kNaN);

  std::deque<Dense> window;  // last order + 1 averages
  std::deque<double> hs;
  std::optional<Dense> previous_extrapolant, best, last, best_raw;
  std::size_t run = 0, run_raw = 0;
  std::optional<std::size_t> raw_end;
  for (std::size_t i = 0; i < m; ++i) {
    Dense a = dense_of(scheme.average_operator(i).value);
    if (!window.empty()) {
      const double d = distance(a, window.back());
      out.raw_distance[i] = d;
      run_raw = d <= opts.plateau_tol ? run_raw + 1 : 0;
      if (run_raw + 1 >= opts.plateau_window) {
        raw_end = i;
        best_raw = a;
      }
    }
    window.push_back(std::move(a));
    hs.push_back(scheme.h(i));
    if (window.size() > order + 1) {
      window.pop_front();
      hs.pop_front();
    }
    if (window.size() < order + 1) continue;

    const std::vector<double> h(hs.begin(), hs.end());
    const auto w = richardson_weights(h);
    Dense t{Eigen::MatrixXd::Zero(window[0].k.rows(), window[0].k.cols()), Eigen::VectorXd::Zero(window[0].leak.size())};
    for (std::size_t k = 0; k < window.size(); ++k) {
      t.k += w[k] * window[k].k;
      t.leak += w[k] * window[k].leak;
    }
    if (previous_extrapolant) {
      const double d = distance(t, *previous_extrapolant);
      out.extrapolated_distance[i] = d;
      run = d <= opts.plateau_tol ? run + 1 : 0;
      if (run + 1 >= opts.plateau_window) {
        out.plateau_end = i;
        best = t;
      }
    }
    previous_extrapolant = t;
    last = std::move(t);
  }
  bool raw_plateau = false;
  if (!best && best_raw) {
    best = std::move(best_raw);
    out.plateau_end = raw_end;
    raw_plateau = true;
  }
  if (!last && best) last = best;
  if (!last) {
    out.notes.push_back("grid has fewer than " + std::to_string(order + 1) + " points; nothing to extrapolate");
    return out;
  }
  out.projection = operator_of(space, best ? *best : *last);
  const KernelOperator& step = scheme.step();
  out.invariants = projection_invariants_check(*out.projection, std::span<const KernelOperator>(&step, 1), opts.invariant_tol);
  out.notes.push_back("plateau: " + std::to_string(opts.plateau_window) + " consecutive extrapolants within " +
                      topology_name(opts.topology) + " distance " + fmt_tol(opts.plateau_tol) +
                      "; a finite-sample criterion, not a proof that the limit exists");
  if (raw_plateau) out.notes.push_back("plateau found in the raw averages");
  if (!out.plateau_end) out.notes.push_back("no plateau within the grid");
  if (!out.invariants.ok) out.notes.push_back("projection invariants exceed tolerance");
  out.status = out.plateau_end && out.invariants.ok ? ProjectionEstimate::Status::certified
                                                    : ProjectionEstimate::Status::inconclusive;
  return out;
}

DecayFit fit_decay(const AverageScheme& scheme, const KernelOperator& p, double lo, double hi) {
  DecayFit out;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) {
    const double idx = scheme.index(i);
    if (idx < lo || idx > hi) continue;
    const double e = linear_combination(1.0, scheme.average_operator(i).value, -1.0, p).bound();
    out.index.push_back(idx);
    out.error.push_back(e);
    out.constant = std::max(out.constant, e * idx);
    if (e > 0.0) {
      lx.push_back(std::log(idx));
      ly.push_back(std::log(e));
    }
  }
  out.points = lx.size();
  if (lx.size() >= 2) {
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(lx.size());
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(ly.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
      sxy += (lx[k] - mx) * (ly[k] - my);
      sxx += (lx[k] - mx) * (lx[k] - mx);
    }
    out.slope = sxy / sxx;
    out.intercept = my - out.slope * mx;
  }
  return out;
}

DecompositionReport decomposition_check(const BoundedFunction& f, const KernelOperator& s, const KernelOperator& p,
                                        const DecompositionOptions& opts) {
  const BoundedFunction pf = forward_apply(p, f);
  const Eigen::VectorXd r = f.values() - pf.values();
  auto rep = residual_decay(r, Eigen::MatrixXd(r.size(), 0), range_generators(s, Side::function, opts.max_power), opts,
                            sup_of);
  rep.fixed_component = sup_norm(pf);
  return rep;
}

DecompositionReport decomposition_check(const SignedMeasure& mu, const KernelOperator& s, const KernelOperator& p,
                                        const DecompositionOptions& opts) {
  const SignedMeasure pmu = adjoint_apply(p, mu);
  const Eigen::VectorXd r = with_escaped(mu) - with_escaped(pmu);
  auto rep = residual_decay(r, Eigen::MatrixXd(r.size(), 0), range_generators(s, Side::measure, opts.max_power), opts,
                            tv_of);
  rep.fixed_component = tv_norm(pmu);
  return rep;
}

DecompositionReport decomposition_check(const SignedMeasure& mu, const KernelOperator& s,
                                        const FixedSpaceBasis& basis, const DecompositionOptions& opts) {
  if (basis.side != Side::measure) throw DomainError("decomposition_check: measure probe needs a measure-side basis");
  const auto n = static_cast<Eigen::Index>(mu.size());
  Eigen::MatrixXd fixed = Eigen::MatrixXd::Zero(n + 1, static_cast<Eigen::Index>(basis.dimension()));
  fixed.topRows(n) = basis.matrix();
  return residual_decay(with_escaped(mu), fixed, range_generators(s, Side::measure, opts.max_power), opts, tv_of);
}

ObstructionVerdict obstruction_witness(const SignedMeasure& candidate, const SignedMeasure& target,
                                       std::span<const BoundedFunction> fixed_functions, const BoundedFunction& test,
                                       double match_tol, double gap_floor) {
  ObstructionVerdict v;
  const auto k = static_cast<Eigen::Index>(fixed_functions.size());
  v.candidate_pairings.resize(k);
  v.target_pairings.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    v.candidate_pairings(i) = pairing(fixed_functions[static_cast<std::size_t>(i)], candidate);
    v.target_pairings(i) = pairing(fixed_functions[static_cast<std::size_t>(i)], target);
  }
  v.mismatch = sup_of(v.candidate_pairings - v.target_pairings);
  v.test_pairing = pairing(test, candidate);
  v.target_test_pairing = pairing(test, target);
  v.matches = v.mismatch <= match_tol;
  v.obstructs = v.matches && std::abs(v.test_pairing - v.target_test_pairing) >= gap_floor;
  return v;
}

ObstructionSweep obstruction_sweep(const KernelOperator& s, const FixedSpaceBasis& measure_basis,
                                   std::span<const BoundedFunction> fixed_functions, const SignedMeasure& target,
                                   const BoundedFunction& test, std::size_t count, std::uint64_t seed,
                                   double match_tol, double gap_floor) {
  if (measure_basis.side != Side::measure) throw DomainError("obstruction_sweep: needs a measure-side basis");
  const SpacePtr& space = s.space();
  const auto dm = static_cast<Eigen::Index>(measure_basis.dimension());
  const auto nf = static_cast<Eigen::Index>(fixed_functions.size());
  Eigen::MatrixXd gram(nf, dm);
  Eigen::VectorXd rhs(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    rhs(i) = pairing(fixed_functions[static_cast<std::size_t>(i)], target);
    for (Eigen::Index j = 0; j < dm; ++j)
      gram(i, j) = pairing(fixed_functions[static_cast<std::size_t>(i)], measure_basis.measures[static_cast<std::size_t>(j)]);
  }
  const Eigen::VectorXd a0 = dm > 0 ? Eigen::VectorXd(gram.completeOrthogonalDecomposition().solve(rhs)) : Eigen::VectorXd();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_int_distribution<std::size_t> state(0, space->size() - 1);
  std::uniform_int_distribution<int> terms(1, 4);
  const double jitter = 1e-2 * match_tol / std::max<double>(1.0, static_cast<double>(dm));

  ObstructionSweep out;
  out.candidates = count;
  out.target_test_pairing = pairing(test, target);
  out.min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < count; ++c) {
    SignedMeasure cand = SignedMeasure::zero(space);
    for (Eigen::Index j = 0; j < dm; ++j) {
      SignedMeasure m = measure_basis.measures[static_cast<std::size_t>(j)];
      m *= a0(j) + jitter * unit(rng);
      cand += m;
    }
    const int t = terms(rng);
    for (int k = 0; k < t; ++k) {
      SignedMeasure nu = SignedMeasure::dirac(space, state(rng));
      nu *= unit(rng);
      cand += nu - adjoint_apply(s, nu);
    }
    const auto v = obstruction_witness(cand, target, fixed_functions, test, match_tol, gap_floor);
    out.max_mismatch = std::max(out.max_mismatch, v.mismatch);
    if (!v.matches) continue;
    ++out.matching;
    out.max_test_pairing = std::max(out.max_test_pairing, std::abs(v.test_pairing));
    out.min_gap = std::min(out.min_gap, std::abs(v.test_pairing - v.target_test_pairing));
  }
  if (out.matching == 0) out.min_gap = 0.0;
  out.certified = out.matching > 0 && out.min_gap >= gap_floor;
  return out;
}

}  // namespace meanerg
