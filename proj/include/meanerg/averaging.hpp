#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meanerg/function.hpp"
#include "meanerg/kernel.hpp"
#include "meanerg/measure.hpp"
#include "meanerg/rate_matrix.hpp"

namespace meanerg {

inline constexpr double kSeriesEps = 1e-12;

// ---- Vector-level averages -------------------------------------------------

/// (1/n) sum_{k<n} S^k f.
BoundedFunction cesaro_avg(const KernelOperator& s, std::size_t n, const BoundedFunction& f);
SignedMeasure cesaro_avg(const KernelOperator& s, std::size_t n, const SignedMeasure& mu);

/// Cesaro averages at every n of an increasing grid, in one pass over the orbit.
std::vector<BoundedFunction> cesaro_sequence(const KernelOperator& s, std::span<const std::size_t> grid,
                                             const BoundedFunction& f);
std::vector<SignedMeasure> cesaro_sequence(const KernelOperator& s, std::span<const std::size_t> grid,
                                           const SignedMeasure& mu);

/// K(r) = ceil(log eps / log r), the number of Abel series terms kept.
std::size_t abel_terms(double r, double eps = kSeriesEps);

/// (1-r) sum_k r^k S^k f, truncated after abel_terms(r) terms.
Estimate<BoundedFunction> abel_avg(const KernelOperator& s, double r, const BoundedFunction& f,
                                   double eps = kSeriesEps);
Estimate<SignedMeasure> abel_avg(const KernelOperator& s, double r, const SignedMeasure& mu,
                                 double eps = kSeriesEps);

/// (1/t) int_0^t e^{sQ} f ds through the uniformized series.
Estimate<BoundedFunction> time_avg(const RateMatrix& q, double t, const BoundedFunction& f, double eps = kSeriesEps);
Estimate<SignedMeasure> time_avg(const RateMatrix& q, double t, const SignedMeasure& mu, double eps = kSeriesEps);

// ---- Operator-level averages ----------------------------------------------

/// A_n as a kernel, by binary splitting sum_{k<a+b} S^k = sum_{k<a} S^k + S^a sum_{k<b} S^k.
KernelOperator cesaro_operator(const KernelOperator& s, std::size_t n);
/// A_r as a kernel, doubling sum_{k<2m} r^k S^k = (sum_{k<m} r^k S^k)(I + r^m S^m).
Estimate<KernelOperator> abel_operator(const KernelOperator& s, double r, double eps = kSeriesEps);
Estimate<KernelOperator> time_operator(const RateMatrix& q, double t, double eps = kSeriesEps);

// ---- Schemes ----------------------------------------------------------------

struct SchemeSpec {
  enum class Kind { cesaro, abel, time };

  Kind kind = Kind::cesaro;
  /// n values, r values, or t values; strictly increasing.
  std::vector<double> grid;
  /// The M of the norm-boundedness axiom.
  double norm_bound = 1.0;
  double series_eps = kSeriesEps;
  /// Semigroup element S(step) used for the time scheme's (S - I) checks.
  double time_step = 1.0;

  static SchemeSpec cesaro(std::vector<std::size_t> n_grid, double norm_bound = 1.0);
  static SchemeSpec abel(std::vector<double> r_grid, double norm_bound = 1.0);
  static SchemeSpec time(std::vector<double> t_grid, double norm_bound = 1.0);

  /// Doubling grid 1, 2, 4, ..., <= n_max.
  static std::vector<std::size_t> doubling_grid(std::size_t n_max, std::size_t start = 1);
  /// r = 1 - 2^-j for j = j_min..j_max.
  static std::vector<double> default_abel_grid(int j_min = 3, int j_max = 16);

  /// Throws DomainError on an invalid grid or bound.
  void validate() const;
  std::string kind_name() const;
};

/// A semigroup together with an averaging scheme over a finite grid.
class AverageScheme {
 public:
  /// Discrete semigroup {S^n}, Cesaro or Abel scheme.
  AverageScheme(KernelOperator s, SchemeSpec spec);
  /// Semigroup e^{tQ}, time scheme.
  AverageScheme(RateMatrix q, SchemeSpec spec);

  const SchemeSpec& spec() const noexcept { return spec_; }
  const SpacePtr& space() const noexcept { return step_.space(); }
  std::size_t grid_size() const noexcept { return spec_.grid.size(); }
  double index(std::size_t i) const { return spec_.grid.at(i); }
  /// Extrapolation variable: 1/n, 1-r or 1/t.
  double h(std::size_t i) const;

  /// S for discrete schemes, S(time_step) for the time scheme.
  const KernelOperator& step() const noexcept { return step_; }
  const std::optional<RateMatrix>& rates() const noexcept { return rates_; }
  bool markovian() const noexcept { return step_.markovian_with_leakage(); }

  Estimate<KernelOperator> average_operator(std::size_t i) const;
  Estimate<BoundedFunction> average(std::size_t i, const BoundedFunction& f) const;
  Estimate<SignedMeasure> average(std::size_t i, const SignedMeasure& mu) const;

  /// All grid averages of f (one pass for Cesaro).
  std::vector<Estimate<BoundedFunction>> averages(const BoundedFunction& f) const;
  std::vector<Estimate<SignedMeasure>> averages(const SignedMeasure& mu) const;

 private:
  SchemeSpec spec_;
  KernelOperator step_;
  std::optional<RateMatrix> rates_;
};

// ---- Axiom and identity checks --------------------------------------------

struct SchemeReport {
  std::string scheme;
  std::vector<double> grid;
  double norm_bound = 1.0;

  /// Norm-boundedness: operator norm of each A_alpha (sup over sign probes).
  std::vector<double> as1_norms;
  double as1_sup = 0.0;
  bool as1_ok = false;

  /// ||A_alpha (S - I) f||_inf and ||A'_alpha (S' - I) mu||_TV per index.
  std::vector<double> as3_function_decay;
  std::vector<double> as3_measure_decay;
  /// Markovian bound 2||f||/n (Cesaro) checked on every index.
  std::optional<bool> as3_bound_ok;

  /// Residual of the scheme's exact identity per index.
  std::vector<double> identity_residuals;
  double identity_tolerance = 0.0;
  bool identity_ok = true;

  /// Pointwise orbit-hull check per index (finite convexity surrogate).
  std::vector<double> hull_violations;
  bool hull_ok = true;
};

/// Exact operator norms of the averages; passes iff sup <= M (1 + 1e-12).
/// `probes` are extra functions whose norms ||A f|| / ||f|| are folded in as
/// lower bounds.
void verify_as1(const AverageScheme& scheme, SchemeReport& report,
                std::span<const BoundedFunction> probes = {});

/// Decay of A(S - I) on f and mu. For Cesaro, also the exact identity
/// A_n(S - I)f = (1/n)(S^n - I)f (residual <= 1e-12 scale) and, for Markovian
/// S, the bound ||A_n(S - I)f|| <= 2||f||/n.
void verify_as3(const AverageScheme& scheme, const BoundedFunction& f, const SignedMeasure& mu,
                SchemeReport& report);

/// Pointwise convex-hull membership of the averages of f in the finite orbit
/// used to compute them.
void verify_hull(const AverageScheme& scheme, const BoundedFunction& f, SchemeReport& report);

SchemeReport check_scheme(const AverageScheme& scheme, const BoundedFunction& f, const SignedMeasure& mu);

/// |(||A_r S f - A_r f||) - (1 - r)||f - A_r S f|| |.
double abel_identity_check(const KernelOperator& s, double r, const BoundedFunction& f, double eps = kSeriesEps);

struct TimeIdentity {
  Eigen::VectorXd lhs;  // A_t S(s) f - A_t f
  Eigen::VectorXd rhs;  // (s/t)(S(t) - I) A_s f
  double residual = 0.0;
  double error_bound = 0.0;
};

/// A_t S(s) - A_t = (s/t)(S(t) - I) A_s evaluated on f.
TimeIdentity time_identity_check(const RateMatrix& q, double t, double s, const BoundedFunction& f,
                                 double eps = kSeriesEps);

}  // namespace meanerg
