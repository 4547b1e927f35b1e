#include "meanerg/probes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "meanerg/bl_distance.hpp"
#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"

namespace meanerg {

namespace {

Eigen::VectorXd as_vector(const BoundedFunction& f) { return f.values(); }

Eigen::VectorXd as_vector(const SignedMeasure& mu) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(mu.size()) + 1);
  v << mu.weights(), mu.escaped();
  return v;
}

std::vector<Eigen::VectorXd> extrapolated(const std::vector<Eigen::VectorXd>& xs, const std::vector<double>& h,
                                          std::size_t order) {
  if (h.size() != xs.size()) throw DomainError("cluster_detector: h must have one entry per element");
  std::vector<Eigen::VectorXd> out;
  for (std::size_t i = order; i < xs.size(); ++i) {
    const auto w = richardson_weights(std::span<const double>(h).subspan(i - order, order + 1));
    Eigen::VectorXd t = Eigen::VectorXd::Zero(xs[i].size());
    for (std::size_t k = 0; k <= order; ++k) t += w[k] * xs[i - order + k];
    out.push_back(std::move(t));
  }
  return out;
}

template <class Dist>
ClusterVerdict greedy_net(const std::vector<Eigen::VectorXd>& xs, double eps, Dist dist) {
  ClusterVerdict v;
  const std::size_t len = xs.size();
  if (len == 0) return v;
  const std::size_t start = len / 2;
  const std::size_t late = start + (len - start) / 2;
  bool grew_late = false;
  for (std::size_t j = start; j < len; ++j) {
    double nearest = std::numeric_limits<double>::infinity();
    for (std::size_t c : v.witnesses) nearest = std::min(nearest, dist(xs[j], xs[c]));
    if (nearest > eps) {
      v.witnesses.push_back(j);
      if (j >= late && v.witnesses.size() > 1) grew_late = true;
    }
    v.net_profile.push_back(v.witnesses.size());
  }
  if (grew_late)
    v.status = ClusterStatus::escapes;
  else if (v.witnesses.size() == 1)
    v.status = ClusterStatus::convergent;
  else
    v.status = ClusterStatus::clusters_multiple_limits;
  if (v.status == ClusterStatus::convergent) v.limit = xs.back();
  return v;
}

}  // namespace

std::string cluster_status_name(ClusterStatus s) {
  switch (s) {
    case ClusterStatus::convergent:
      return "convergent";
    case ClusterStatus::clusters_multiple_limits:
      return "clusters-multiple-limits";
    case ClusterStatus::escapes:
      return "escapes";
  }
  return "?";
}

ClusterVerdict cluster_detector(std::span<const BoundedFunction> sequence, const ClusterOptions& opts) {
  if (sequence.empty()) return {};
  const SpacePtr& space = sequence[0].space();
  std::vector<Eigen::VectorXd> xs;
  for (const auto& f : sequence) xs.push_back(as_vector(f));
  if (!opts.h.empty()) xs = extrapolated(xs, opts.h, opts.extrapolation_order);

  ClusterVerdict v;
  if (opts.topology == Topology::beta0) {
    const auto weights = opts.weights.empty() ? exhaustion_weights(space) : opts.weights;
    v = greedy_net(xs, opts.eps, [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      double best = 0.0;
      for (const auto& w : weights) best = std::max(best, (w.values().cwiseAbs().cwiseProduct((a - b).cwiseAbs())).maxCoeff());
      return best;
    });
  } else if (opts.topology == Topology::sigma) {
    v = greedy_net(xs, opts.eps, [](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
      return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
    });
  } else {
    throw DomainError("cluster_detector: functions are compared in sigma or beta0");
  }
  if (v.status == ClusterStatus::convergent && opts.fixed_check) {
    const BoundedFunction w(space, v.limit, sequence[0].tail());
    const double r = sup_norm(forward_apply(*opts.fixed_check, w) - w);
    v.fixed_residual = r;
    v.in_fixed_space = r <= opts.fixed_tol;
  }
  return v;
}

ClusterVerdict cluster_detector(std::span<const SignedMeasure> sequence, const ClusterOptions& opts) {
  if (sequence.empty()) return {};
  const SpacePtr& space = sequence[0].space();
  const auto n = static_cast<Eigen::Index>(space->size());
  std::vector<Eigen::VectorXd> xs;
  for (const auto& mu : sequence) xs.push_back(as_vector(mu));
  if (!opts.h.empty()) xs = extrapolated(xs, opts.h, opts.extrapolation_order);

  const BlOptions bl{opts.bl_exact_support};
  ClusterVerdict v = greedy_net(xs, opts.eps, [&](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    const BlBounds bounds = bl_bounds(SignedMeasure(space, a.head(n)), SignedMeasure(space, b.head(n)), bl);
    return (bounds.exact ? bounds.lower : bounds.upper) + std::abs(a(n) - b(n));
  });
  if (v.status == ClusterStatus::convergent && opts.fixed_check) {
    const SignedMeasure w(space, v.limit.head(n), v.limit(n));
    const double r = tv_norm(adjoint_apply(*opts.fixed_check, w) - w);
    v.fixed_residual = r;
    v.in_fixed_space = r <= opts.fixed_tol;
  }
  return v;
}

// ---- e-property ---------------------------------------------------------------

bool ModulusTable::passes(double level) const {
  if (modulus.cols() == 0) return true;
  return modulus.col(modulus.cols() - 1).maxCoeff() <= level;
}

bool ModulusTable::dominated_by(const ModulusTable& other, double factor, double slack) const {
  if (modulus.rows() != other.modulus.rows() || modulus.cols() != other.modulus.cols()) return false;
  return ((modulus - factor * other.modulus).array() <= slack).all();
}

double ModulusTable::floor() const {
  if (modulus.size() == 0) return 0.0;
  return modulus.col(modulus.cols() - 1).maxCoeff();
}

std::vector<double> halving_radii(double r0, std::size_t count) {
  std::vector<double> r;
  for (std::size_t k = 0; k < count; ++k) r.push_back(r0 / std::pow(2.0, static_cast<double>(k)));
  return r;
}

ModulusTable e_property_probe(std::span<const BoundedFunction> family, std::span<const std::size_t> points,
                              std::span<const double> radii) {
  ModulusTable t;
  if (family.empty()) throw DomainError("e_property_probe: empty family");
  const SpacePtr& space = family[0].space();
  t.points.assign(points.begin(), points.end());
  for (std::size_t x : t.points) t.point_names.push_back(space->name(x));
  t.radii.assign(radii.begin(), radii.end());
  std::sort(t.radii.begin(), t.radii.end(), std::greater<>());
  const auto np = static_cast<Eigen::Index>(t.points.size());
  const auto nr = static_cast<Eigen::Index>(t.radii.size());
  t.modulus = Eigen::MatrixXd::Zero(np, nr);
  t.ball_size = Eigen::MatrixXi::Zero(np, nr);

#pragma omp parallel for schedule(dynamic)
  for (Eigen::Index p = 0; p < np; ++p) {
    const std::size_t x = t.points[static_cast<std::size_t>(p)];
    // Neighbours by distance, with the largest deviation over the family.
    std::vector<std::pair<double, double>> near;
    for (std::size_t y = 0; y < space->size(); ++y) {
      if (y == x) continue;
      const double d = space->distance(x, y);
      if (d >= t.radii.front()) continue;
      double dev = 0.0;
      for (const auto& g : family) dev = std::max(dev, std::abs(g(x) - g(y)));
      near.emplace_back(d, dev);
    }
    for (Eigen::Index r = 0; r < nr; ++r) {
      double m = 0.0;
      int count = 0;
      for (const auto& [d, dev] : near)
        if (d < t.radii[static_cast<std::size_t>(r)]) {
          m = std::max(m, dev);
          ++count;
        }
      t.modulus(p, r) = m;
      t.ball_size(p, r) = count;
    }
  }
  return t;
}

ModulusTable e_property_probe(std::span<const KernelOperator> operators, const BoundedFunction& f,
                              std::span<const std::size_t> points, std::span<const double> radii) {
  std::vector<BoundedFunction> family;
  family.reserve(operators.size());
  for (const auto& op : operators) family.push_back(forward_apply(op, f));
  return e_property_probe(family, points, radii);
}

// ---- beta0-equicontinuity -----------------------------------------------------

Beta0Profile beta0_equicontinuity_probe(std::span<const KernelOperator> operators,
                                        std::span<const std::size_t> compact_set, std::span<const double> eps_grid) {
  if (operators.empty()) throw DomainError("beta0_equicontinuity_probe: no operators");
  const StateSpace& space = *operators[0].space();
  Beta0Profile out;
  out.eps.assign(eps_grid.begin(), eps_grid.end());
  out.outside_mass.assign(static_cast<std::size_t>(space.depth()), 0.0);
  for (const auto& op : operators) {
    require_same_space(space, *op.space());
    for (std::size_t x : compact_set) {
      const SignedMeasure row = op.kernel().row(x);
      const std::array<SignedMeasure, 1> one{row};
      const auto prof = tightness_profile(one, space);
      for (std::size_t m = 0; m < out.outside_mass.size(); ++m)
        out.outside_mass[m] = std::max(out.outside_mass[m], prof.mass_outside[m]);
    }
  }
  out.equicontinuous = true;
  for (double e : out.eps) {
    std::optional<int> idx;
    for (std::size_t m = 0; m < out.outside_mass.size(); ++m)
      if (out.outside_mass[m] <= e) {
        idx = static_cast<int>(m) + 1;
        break;
      }
    out.index.push_back(idx);
    if (!idx) out.equicontinuous = false;
  }
  return out;
}

// ---- Equivalence matrix -------------------------------------------------------

EergVerdict theorem_eerg_equivalences(const AverageScheme& scheme, const EergOptions& opts) {
  EergVerdict v;
  const SpacePtr& space = scheme.space();
  const KernelOperator& step = scheme.step();
  std::vector<std::size_t> points = opts.probe_points;
  if (points.empty()) {
    points.resize(space->size());
    std::iota(points.begin(), points.end(), std::size_t{0});
  }

  v.markovian = scheme.markovian();
  if (!v.markovian) {
    v.diagnosis = "scheme is not Markovian; the equivalences are not asserted";
    return v;
  }

  std::vector<Eigen::MatrixXd> averages;
  std::vector<Eigen::VectorXd> leaks;
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) {
    const auto a = scheme.average_operator(i).value;
    averages.push_back(a.kernel().dense());
    const auto& l = a.kernel().leakage();
    leaks.emplace_back(Eigen::Map<const Eigen::VectorXd>(l.data(), static_cast<Eigen::Index>(l.size())));
  }

  // Clustering hypothesis through the e-property of the Lipschitz averages.
  auto probes = bump_dictionary(space);
  probes.insert(probes.end(), opts.lipschitz_probes.begin(), opts.lipschitz_probes.end());
  double worst = -1.0;
  std::string worst_probe;
  for (std::size_t p = 0; p < probes.size(); ++p) {
    const auto& f = probes[p];
    const double tail = f.tail_value().value_or(0.0);
    std::vector<BoundedFunction> family;
    for (std::size_t i = 0; i < averages.size(); ++i)
      family.push_back(f.with_values(averages[i] * f.values() + tail * leaks[i]));
    auto table = e_property_probe(family, points, opts.radii);
    if (table.floor() > worst) {
      worst = table.floor();
      v.hypothesis_table = std::move(table);
      worst_probe = p < space->size() ? "bump at " + space->name(p) : "supplied probe " + std::to_string(p - space->size());
    }
  }
  v.hypothesis = worst <= opts.modulus_tol;
  if (!v.hypothesis) {
    std::ostringstream msg;
    msg << "clustering hypothesis not supported: modulus " << worst << " > " << opts.modulus_tol
        << " at radius " << v.hypothesis_table.radii.back() << " for the " << worst_probe
        << "; equivalence matrix withheld";
    v.diagnosis = msg.str();
    return v;
  }
  v.withheld = false;

  // (i)
  v.projection = estimate_projection(scheme, opts.projection);
  v.assertions[0] = v.projection->certified();

  // (ii)
  bool clustering = true;
  ClusterOptions copts;
  copts.eps = opts.cluster_eps;
  copts.topology = Topology::sigma_prime;
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) copts.h.push_back(scheme.h(i));
  if (scheme.grid_size() <= copts.extrapolation_order) copts.h.clear();
  for (std::size_t x : points) {
    std::vector<SignedMeasure> seq;
    for (std::size_t i = 0; i < averages.size(); ++i)
      seq.emplace_back(space, averages[i].row(static_cast<Eigen::Index>(x)).transpose(), leaks[i](static_cast<Eigen::Index>(x)));
    const bool tight = tightness_profile(seq, *space).tight_index(opts.tightness_eps).has_value();
    v.clusters.push_back(cluster_detector(seq, copts));
    if (!tight || v.clusters.back().status == ClusterStatus::escapes) clustering = false;
  }
  v.assertions[1] = clustering;

  // (iii)
  const auto fun = fixed_space(step, Side::function);
  const auto mea = fixed_space(step, Side::measure);
  v.separation = separation_test(fun, mea);
  v.assertions[2] = v.separation->measures_separate_functions;

  // (iv)
  bool decomposes = true;
  DecompositionOptions dopts;
  dopts.tol = opts.decomposition_tol;
  for (std::size_t x : points) {
    const auto delta = SignedMeasure::dirac(space, x);
    v.decompositions.push_back(v.projection->projection ? decomposition_check(delta, step, *v.projection->projection, dopts)
                                                        : decomposition_check(delta, step, mea, dopts));
    if (!v.decompositions.back().passes) decomposes = false;
  }
  v.assertions[3] = decomposes;

  v.consistent = std::all_of(v.assertions.begin(), v.assertions.end(),
                             [&](const std::optional<bool>& a) { return a == v.assertions[0]; });
  if (!v.consistent) v.diagnosis = "assertions disagree under the hypothesis";
  return v;
}

}  // namespace meanerg
