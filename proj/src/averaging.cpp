#include "meanerg/averaging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"

namespace meanerg {

namespace {

double sup_values(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

void check_r(double r) {
  if (!(r >= 0.0 && r < 1.0)) throw DomainError("abel: r must lie in [0, 1)");
}

/// (1-r) sum_{k >= K} (r b)^k relative to ||x||, for ||S^k|| <= b^k.
double abel_tail(double r, double bound, std::size_t terms) {
  const double q = r * bound;
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  return (1.0 - r) * std::pow(q, static_cast<double>(terms)) / (1.0 - q);
}

/// Distance between the renormalized truncated Abel mean and the full series,
/// relative to ||x||.
double abel_error(double r, double bound, std::size_t terms) {
  const double rk = std::pow(r, static_cast<double>(terms));
  if (bound <= 1.0 + 1e-12) return 2.0 * rk;
  const double q = r * bound;
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  const double head = (1.0 - r) * (1.0 - std::pow(q, static_cast<double>(terms))) / (1.0 - q);
  return head * rk / (1.0 - rk) + abel_tail(r, bound, terms);
}

std::vector<double> abel_weights(double r, std::size_t terms) {
  std::vector<double> w(terms);
  double c = 1.0 - r;
  for (std::size_t k = 0; k < terms; ++k, c *= r) w[k] = c;
  return w;
}

KernelOperator scaled(double a, const KernelOperator& s) { return linear_combination(a, s, 0.0, s); }

KernelOperator zero_operator(const SpacePtr& space) {
  const auto id = KernelOperator::identity(space);
  return linear_combination(0.0, id, 0.0, id);
}

void require_increasing(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw DomainError(std::string(what) + ": empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1])) throw DomainError(std::string(what) + ": grid must be strictly increasing");
}

// Averages are accumulated as x0 + (1/n) sum_k (x_k - x0), so that a fixed
// point is returned bit for bit.
template <class X, class Apply>
std::vector<X> cesaro_sequence_impl(const KernelOperator& s, std::span<const std::size_t> grid, const X& x0,
                                    Apply apply) {
  std::vector<X> out;
  out.reserve(grid.size());
  if (grid.empty()) return out;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == 0) throw DomainError("cesaro: n must be >= 1");
    if (i > 0 && grid[i] <= grid[i - 1]) throw DomainError("cesaro: grid must be strictly increasing");
  }
  X x = x0;
  X dev = 0.0 * x0;
  std::size_t next = 0;
  for (std::size_t k = 0; next < grid.size(); ++k) {
    if (k > 0) dev += x - x0;
    if (k + 1 == grid[next]) {
      out.push_back(x0 + (1.0 / static_cast<double>(grid[next])) * dev);
      ++next;
    }
    if (next < grid.size()) x = apply(s, x);
  }
  return out;
}

}  // namespace

// ---- Vector level -----------------------------------------------------------

BoundedFunction cesaro_avg(const KernelOperator& s, std::size_t n, const BoundedFunction& f) {
  const std::size_t grid[] = {n};
  return cesaro_sequence(s, grid, f).front();
}

SignedMeasure cesaro_avg(const KernelOperator& s, std::size_t n, const SignedMeasure& mu) {
  const std::size_t grid[] = {n};
  return cesaro_sequence(s, grid, mu).front();
}

std::vector<BoundedFunction> cesaro_sequence(const KernelOperator& s, std::span<const std::size_t> grid,
                                             const BoundedFunction& f) {
  return cesaro_sequence_impl(s, grid, f, [](const KernelOperator& op, const BoundedFunction& x) {
    return forward_apply(op, x);
  });
}

std::vector<SignedMeasure> cesaro_sequence(const KernelOperator& s, std::span<const std::size_t> grid,
                                           const SignedMeasure& mu) {
  return cesaro_sequence_impl(s, grid, mu, [](const KernelOperator& op, const SignedMeasure& x) {
    return adjoint_apply(op, x);
  });
}

std::size_t abel_terms(double r, double eps) {
  check_r(r);
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("abel: series tolerance must lie in (0, 1)");
  if (r == 0.0) return 1;
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(std::log(eps) / std::log(r))));
}

Estimate<BoundedFunction> abel_avg(const KernelOperator& s, double r, const BoundedFunction& f, double eps) {
  const std::size_t terms = abel_terms(r, eps);
  return {weighted_mean(s, abel_weights(r, terms), f), abel_error(r, s.bound(), terms) * sup_norm(f), terms};
}

Estimate<SignedMeasure> abel_avg(const KernelOperator& s, double r, const SignedMeasure& mu, double eps) {
  const std::size_t terms = abel_terms(r, eps);
  return {weighted_mean(s, abel_weights(r, terms), mu), abel_error(r, s.bound(), terms) * tv_norm(mu), terms};
}

Estimate<BoundedFunction> time_avg(const RateMatrix& q, double t, const BoundedFunction& f, double eps) {
  if (!(t > 0.0)) throw DomainError("time average: t must be > 0");
  const auto w = time_average_weights(q.rate() * t, eps);
  return {weighted_mean(q.uniformized(), w.w, f), 2.0 * w.tail * sup_norm(f), w.w.size()};
}

Estimate<SignedMeasure> time_avg(const RateMatrix& q, double t, const SignedMeasure& mu, double eps) {
  if (!(t > 0.0)) throw DomainError("time average: t must be > 0");
  const auto w = time_average_weights(q.rate() * t, eps);
  return {weighted_mean(q.uniformized(), w.w, mu), 2.0 * w.tail * tv_norm(mu), w.w.size()};
}

// ---- Operator level ---------------------------------------------------------

KernelOperator cesaro_operator(const KernelOperator& s, std::size_t n) {
  if (n == 0) throw DomainError("cesaro: n must be >= 1");
  const KernelOperator id = KernelOperator::identity(s.space());
  KernelOperator sum = zero_operator(s.space());  // sum_{k<m} S^k
  std::size_t m = 0;
  int top = 0;
  while ((n >> top) > 1) ++top;
  for (int bit = top; bit >= 0; --bit) {
    if (m > 0) {
      // The power goes on the right: compose passes escaped mass through its
      // second factor unchanged, which only holds for unit total weight.
      sum = linear_combination(1.0, sum, 1.0, compose(sum, power(s, m)));
      m *= 2;
    }
    if ((n >> bit) & 1U) {
      sum = linear_combination(1.0, sum, 1.0, m == 0 ? id : power(s, m));
      m += 1;
    }
  }
  return scaled(1.0 / static_cast<double>(n), sum);
}

Estimate<KernelOperator> abel_operator(const KernelOperator& s, double r, double eps) {
  check_r(r);
  const std::size_t needed = abel_terms(r, eps);
  const KernelOperator id = KernelOperator::identity(s.space());
  KernelOperator sum = id;  // sum_{k<m} r^k S^k
  std::size_t m = 1;
  while (m < needed) {
    const double rm = std::pow(r, static_cast<double>(m));
    sum = linear_combination(1.0, sum, rm, compose(sum, power(s, m)));
    m *= 2;
  }
  // Renormalized to unit total weight, as on the vector level.
  const double rm = std::pow(r, static_cast<double>(m));
  return {scaled((1.0 - r) / (1.0 - rm), sum), abel_error(r, s.bound(), m), m};
}

Estimate<KernelOperator> time_operator(const RateMatrix& q, double t, double eps) {
  if (!(t > 0.0)) throw DomainError("time average: t must be > 0");
  const auto w = time_average_weights(q.rate() * t, eps);
  // Horner on a dense accumulator: acc <- P acc + w_k I.
  const Csr& p = q.uniformized().kernel().rows();
  const auto n = static_cast<Eigen::Index>(q.size());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd next(n, n);
  for (std::size_t k = w.w.size(); k-- > 0;) {
    if (k + 1 < w.w.size()) {
      next.setZero();
      for (std::size_t r = 0; r < p.rows; ++r)
        for (std::size_t e = p.offsets[r]; e < p.offsets[r + 1]; ++e)
          next.row(static_cast<Eigen::Index>(r)) += p.value[e] * acc.row(static_cast<Eigen::Index>(p.index[e]));
      acc.swap(next);
    }
    acc.diagonal().array() += w.w[k];
  }
  long double total = 0.0L;
  for (double v : w.w) total += v;
  acc /= static_cast<double>(total);
  return {KernelOperator(Kernel::from_dense(q.space(), acc)), 2.0 * w.tail, w.w.size()};
}

// ---- SchemeSpec ---------------------------------------------------------------

SchemeSpec SchemeSpec::cesaro(std::vector<std::size_t> n_grid, double norm_bound) {
  SchemeSpec s;
  s.kind = Kind::cesaro;
  s.grid.assign(n_grid.begin(), n_grid.end());
  s.norm_bound = norm_bound;
  return s;
}

SchemeSpec SchemeSpec::abel(std::vector<double> r_grid, double norm_bound) {
  SchemeSpec s;
  s.kind = Kind::abel;
  s.grid = std::move(r_grid);
  s.norm_bound = norm_bound;
  return s;
}

SchemeSpec SchemeSpec::time(std::vector<double> t_grid, double norm_bound) {
  SchemeSpec s;
  s.kind = Kind::time;
  s.grid = std::move(t_grid);
  s.norm_bound = norm_bound;
  return s;
}

std::vector<std::size_t> SchemeSpec::doubling_grid(std::size_t n_max, std::size_t start) {
  std::vector<std::size_t> g;
  for (std::size_t n = std::max<std::size_t>(1, start); n <= n_max; n *= 2) g.push_back(n);
  return g;
}

std::vector<double> SchemeSpec::default_abel_grid(int j_min, int j_max) {
  std::vector<double> g;
  for (int j = j_min; j <= j_max; ++j) g.push_back(1.0 - std::ldexp(1.0, -j));
  return g;
}

void SchemeSpec::validate() const {
  if (!(norm_bound > 0.0) || !std::isfinite(norm_bound)) throw DomainError("scheme: norm bound M must be positive");
  if (!(series_eps > 0.0 && series_eps < 1.0)) throw DomainError("scheme: series tolerance must lie in (0, 1)");
  switch (kind) {
    case Kind::cesaro:
      require_increasing(grid, "cesaro");
      for (double n : grid)
        if (!(n >= 1.0) || n != std::floor(n)) throw DomainError("cesaro: grid entries must be integers >= 1");
      break;
    case Kind::abel:
      require_increasing(grid, "abel");
      for (double r : grid)
        if (!(r >= 0.0 && r < 1.0)) throw DomainError("abel: grid entries must lie in [0, 1)");
      break;
    case Kind::time:
      require_increasing(grid, "time");
      for (double t : grid)
        if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("time: grid entries must be positive");
      if (!(time_step > 0.0)) throw DomainError("time: step must be positive");
      break;
  }
}

std::string SchemeSpec::kind_name() const {
  switch (kind) {
    case Kind::cesaro:
      return "cesaro";
    case Kind::abel:
      return "abel";
    case Kind::time:
      return "time";
  }
  return "unknown";
}

// ---- AverageScheme --------------------------------------------------------------

AverageScheme::AverageScheme(KernelOperator s, SchemeSpec spec) : spec_(std::move(spec)), step_(std::move(s)) {
  spec_.validate();
  if (spec_.kind == SchemeSpec::Kind::time) throw DomainError("time scheme needs a rate matrix");
}

AverageScheme::AverageScheme(RateMatrix q, SchemeSpec spec)
    : spec_(std::move(spec)),
      step_(semigroup_operator(q, spec_.time_step, spec_.series_eps * 1e-2).value),
      rates_(std::move(q)) {
  spec_.validate();
  if (spec_.kind != SchemeSpec::Kind::time) throw DomainError("a rate matrix needs the time scheme");
}

double AverageScheme::h(std::size_t i) const {
  const double a = index(i);
  return spec_.kind == SchemeSpec::Kind::abel ? 1.0 - a : 1.0 / a;
}

Estimate<KernelOperator> AverageScheme::average_operator(std::size_t i) const {
  const double a = index(i);
  switch (spec_.kind) {
    case SchemeSpec::Kind::cesaro: {
      const auto n = static_cast<std::size_t>(a);
      return {cesaro_operator(step_, n), 0.0, n};
    }
    case SchemeSpec::Kind::abel:
      return abel_operator(step_, a, spec_.series_eps);
    case SchemeSpec::Kind::time:
      return time_operator(*rates_, a, spec_.series_eps);
  }
  throw DomainError("unknown scheme");
}

Estimate<BoundedFunction> AverageScheme::average(std::size_t i, const BoundedFunction& f) const {
  const double a = index(i);
  switch (spec_.kind) {
    case SchemeSpec::Kind::cesaro: {
      const auto n = static_cast<std::size_t>(a);
      return {cesaro_avg(step_, n, f), 0.0, n};
    }
    case SchemeSpec::Kind::abel:
      return abel_avg(step_, a, f, spec_.series_eps);
    case SchemeSpec::Kind::time:
      return time_avg(*rates_, a, f, spec_.series_eps);
  }
  throw DomainError("unknown scheme");
}

Estimate<SignedMeasure> AverageScheme::average(std::size_t i, const SignedMeasure& mu) const {
  const double a = index(i);
  switch (spec_.kind) {
    case SchemeSpec::Kind::cesaro: {
      const auto n = static_cast<std::size_t>(a);
      return {cesaro_avg(step_, n, mu), 0.0, n};
    }
    case SchemeSpec::Kind::abel:
      return abel_avg(step_, a, mu, spec_.series_eps);
    case SchemeSpec::Kind::time:
      return time_avg(*rates_, a, mu, spec_.series_eps);
  }
  throw DomainError("unknown scheme");
}

namespace {

std::vector<std::size_t> integer_grid(const SchemeSpec& spec) {
  std::vector<std::size_t> g;
  for (double n : spec.grid) g.push_back(static_cast<std::size_t>(n));
  return g;
}

}  // namespace

std::vector<Estimate<BoundedFunction>> AverageScheme::averages(const BoundedFunction& f) const {
  std::vector<Estimate<BoundedFunction>> out;
  if (spec_.kind == SchemeSpec::Kind::cesaro) {
    const auto g = integer_grid(spec_);
    auto seq = cesaro_sequence(step_, g, f);
    for (std::size_t i = 0; i < seq.size(); ++i) out.push_back({std::move(seq[i]), 0.0, g[i]});
    return out;
  }
  for (std::size_t i = 0; i < grid_size(); ++i) out.push_back(average(i, f));
  return out;
}

std::vector<Estimate<SignedMeasure>> AverageScheme::averages(const SignedMeasure& mu) const {
  std::vector<Estimate<SignedMeasure>> out;
  if (spec_.kind == SchemeSpec::Kind::cesaro) {
    const auto g = integer_grid(spec_);
    auto seq = cesaro_sequence(step_, g, mu);
    for (std::size_t i = 0; i < seq.size(); ++i) out.push_back({std::move(seq[i]), 0.0, g[i]});
    return out;
  }
  for (std::size_t i = 0; i < grid_size(); ++i) out.push_back(average(i, mu));
  return out;
}

// ---- Checks -------------------------------------------------------------------------

void verify_as1(const AverageScheme& scheme, SchemeReport& report, std::span<const BoundedFunction> probes) {
  report.scheme = scheme.spec().kind_name();
  report.grid = scheme.spec().grid;
  report.norm_bound = scheme.spec().norm_bound;
  report.as1_norms.clear();
  report.as1_sup = 0.0;
  bool markov_exact = true;
  double roundoff = 1e-12;
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) {
    const auto a = scheme.average_operator(i);
    const double term_roundoff = std::max(1e-12, 4.0 * static_cast<double>(a.terms) * std::numeric_limits<double>::epsilon());
    roundoff = std::max(roundoff, term_roundoff);
    double norm = forward_operator_norm(a.value);
    for (const auto& f : probes) {
      const double fn = sup_norm(f);
      if (fn > 0.0) norm = std::max(norm, sup_values(forward_apply(a.value, f).values()) / fn);
    }
    report.as1_norms.push_back(norm);
    report.as1_sup = std::max(report.as1_sup, norm);
    if (std::abs(norm - 1.0) > term_roundoff + a.error_bound) markov_exact = false;
  }
  report.as1_ok = report.as1_sup <= report.norm_bound * (1.0 + roundoff);
  if (scheme.markovian()) report.as1_ok = report.as1_ok && markov_exact;
}

void verify_as3(const AverageScheme& scheme, const BoundedFunction& f, const SignedMeasure& mu,
                SchemeReport& report) {
  const KernelOperator& s = scheme.step();
  const BoundedFunction g = forward_apply(s, f) - f;
  const SignedMeasure nu = adjoint_apply(s, mu) - mu;
  const double fnorm = sup_norm(f);
  report.as3_function_decay.clear();
  report.as3_measure_decay.clear();
  report.identity_residuals.clear();
  report.identity_ok = true;

  const auto ag = scheme.averages(g);
  const auto anu = scheme.averages(nu);
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) {
    report.as3_function_decay.push_back(sup_values(ag[i].value.values()));
    report.as3_measure_decay.push_back(tv_norm(anu[i].value));
  }

  switch (scheme.spec().kind) {
    case SchemeSpec::Kind::cesaro: {
      // (1/n)(S^n - I) f along the grid, from one pass over the orbit.
      report.identity_tolerance = 1e-12 * std::max(1.0, fnorm);
      BoundedFunction x = f;
      std::size_t k = 0;
      bool bound_ok = true;
      for (std::size_t i = 0; i < scheme.grid_size(); ++i) {
        const auto n = static_cast<std::size_t>(scheme.index(i));
        while (k < n) {
          x = forward_apply(s, x);
          ++k;
        }
        const Eigen::VectorXd rhs = (x.values() - f.values()) / static_cast<double>(n);
        const double res = sup_values(ag[i].value.values() - rhs);
        report.identity_residuals.push_back(res);
        if (res > report.identity_tolerance) report.identity_ok = false;
        if (report.as3_function_decay[i] > 2.0 * fnorm / static_cast<double>(n) + 1e-12) bound_ok = false;
      }
      if (scheme.markovian()) report.as3_bound_ok = bound_ok;
      break;
    }
    case SchemeSpec::Kind::abel:
      report.identity_tolerance = 1e-10 * std::max(1.0, fnorm);
      for (std::size_t i = 0; i < scheme.grid_size(); ++i) {
        const double r = scheme.index(i);
        if (r == 0.0) {
          report.identity_residuals.push_back(0.0);
          continue;
        }
        const double res = abel_identity_check(s, r, f, scheme.spec().series_eps);
        report.identity_residuals.push_back(res);
        if (!(res <= report.identity_tolerance)) report.identity_ok = false;
      }
      break;
    case SchemeSpec::Kind::time:
      report.identity_tolerance = 1e-8 * std::max(1.0, fnorm);
      for (std::size_t i = 0; i < scheme.grid_size(); ++i) {
        const auto id = time_identity_check(*scheme.rates(), scheme.index(i), scheme.spec().time_step, f,
                                            scheme.spec().series_eps);
        report.identity_residuals.push_back(id.residual);
        if (!(id.residual <= report.identity_tolerance)) report.identity_ok = false;
      }
      break;
  }
}

void verify_hull(const AverageScheme& scheme, const BoundedFunction& f, SchemeReport& report) {
  report.hull_violations.clear();
  report.hull_ok = true;
  const auto n = static_cast<Eigen::Index>(f.size());
  const double fnorm = sup_norm(f);
  const auto avgs = scheme.averages(f);
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) {
    Eigen::VectorXd lo = f.values(), hi = f.values();
    double tol = 1e-12 * std::max(1.0, fnorm) + avgs[i].error_bound;
    auto absorb = [&](const Eigen::VectorXd& v) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    };
    switch (scheme.spec().kind) {
      case SchemeSpec::Kind::cesaro:
      case SchemeSpec::Kind::abel: {
        const std::size_t terms = avgs[i].terms;
        BoundedFunction x = f;
        for (std::size_t k = 1; k < terms; ++k) {
          x = forward_apply(scheme.step(), x);
          absorb(x.values());
        }
        if (scheme.spec().kind == SchemeSpec::Kind::abel) {
          // The truncated series has total weight 1 - r^K; its defect sits at 0.
          absorb(Eigen::VectorXd::Zero(n));
        }
        break;
      }
      case SchemeSpec::Kind::time: {
        const double t = scheme.index(i);
        constexpr int samples = 256;
        for (int j = 1; j <= samples; ++j) {
          const auto sj = semigroup_apply(*scheme.rates(), t * j / samples, f);
          absorb(sj.value.values());
          tol += sj.error_bound / samples;
        }
        // Between samples S(s)f moves by at most (t / samples) ||Q|| ||f||.
        tol += 2.0 * scheme.rates()->rate() * fnorm * t / samples;
        break;
      }
    }
    const Eigen::VectorXd& a = avgs[i].value.values();
    const double violation =
        std::max(0.0, std::max((lo - a).maxCoeff(), (a - hi).maxCoeff()));
    report.hull_violations.push_back(violation);
    if (violation > tol) report.hull_ok = false;
  }
}

SchemeReport check_scheme(const AverageScheme& scheme, const BoundedFunction& f, const SignedMeasure& mu) {
  SchemeReport report;
  const BoundedFunction probes[] = {f};
  verify_as1(scheme, report, probes);
  verify_as3(scheme, f, mu, report);
  verify_hull(scheme, f, report);
  return report;
}

double abel_identity_check(const KernelOperator& s, double r, const BoundedFunction& f, double eps) {
  check_r(r);
  const auto af = abel_avg(s, r, f, eps);
  const auto asf = abel_avg(s, r, forward_apply(s, f), eps);
  const double lhs = sup_values(asf.value.values() - af.value.values());
  const double rhs = (1.0 - r) * sup_values(f.values() - asf.value.values());
  return std::abs(lhs - rhs);
}

TimeIdentity time_identity_check(const RateMatrix& q, double t, double s, const BoundedFunction& f, double eps) {
  if (!(t > 0.0 && s > 0.0)) throw DomainError("time identity: t and s must be positive");
  const auto ss_f = semigroup_apply(q, s, f, eps);
  const auto at_ssf = time_avg(q, t, ss_f.value, eps);
  const auto at_f = time_avg(q, t, f, eps);
  const auto as_f = time_avg(q, s, f, eps);
  const auto st_as_f = semigroup_apply(q, t, as_f.value, eps);

  TimeIdentity out;
  out.lhs = at_ssf.value.values() - at_f.value.values();
  out.rhs = (s / t) * (st_as_f.value.values() - as_f.value.values());
  out.residual = sup_values(out.lhs - out.rhs);
  out.error_bound = ss_f.error_bound + at_ssf.error_bound + at_f.error_bound +
                    (s / t) * (2.0 * as_f.error_bound + st_as_f.error_bound);
  return out;
}

}  // namespace meanerg
