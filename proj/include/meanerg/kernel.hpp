#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <memory>
#include <optional>
#include <vector>

#include "meanerg/csr.hpp"
#include "meanerg/function.hpp"
#include "meanerg/measure.hpp"
#include "meanerg/state_space.hpp"

namespace meanerg {

struct KernelEntry {
  std::size_t target;
  double weight;
};

/// Bounded kernel k(x, .) on a truncation. Row x is the measure k(x, .) on
/// the enumerated states plus `leakage[x]`, the mass sent outside the
/// truncation.
class Kernel {
 public:
  Kernel(SpacePtr space, Csr rows, std::vector<double> leakage = {});

  /// Duplicate targets within a row are summed; zero weights are dropped.
  static Kernel from_rows(SpacePtr space, const std::vector<std::vector<KernelEntry>>& rows,
                          std::vector<double> leakage = {});
  static Kernel from_dense(SpacePtr space, const Eigen::MatrixXd& m, std::vector<double> leakage = {});
  static Kernel identity(SpacePtr space);
  /// Rows delta_{map(x)}; an empty entry sends all mass outside.
  static Kernel deterministic(SpacePtr space, const std::vector<std::optional<std::size_t>>& map);

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return rows_.rows; }
  const Csr& rows() const noexcept { return rows_; }
  const Csr& transposed() const noexcept { return transposed_; }
  const std::vector<double>& leakage() const noexcept { return leakage_; }
  bool leaks() const noexcept { return leaks_; }

  /// sup_x |k|(x, E), leakage included.
  double bound() const noexcept { return bound_; }

  SignedMeasure row(std::size_t x) const;
  double row_tv(std::size_t x) const;
  /// k(x, E): retained mass plus leakage.
  double row_mass(std::size_t x) const;
  double retained_mass(std::size_t x) const;

  Eigen::MatrixXd dense() const { return rows_.to_dense(); }

 private:
  SpacePtr space_;
  Csr rows_;
  Csr transposed_;
  std::vector<double> leakage_;
  bool leaks_ = false;
  double bound_ = 0.0;
};

namespace detail {
class PowerCache;
}

/// Immutable handle to a kernel. Copies share the kernel and the power cache.
class KernelOperator {
 public:
  explicit KernelOperator(Kernel kernel, double markov_tol = 1e-12);
  static KernelOperator identity(SpacePtr space);

  const Kernel& kernel() const noexcept { return *kernel_; }
  const SpacePtr& space() const noexcept { return kernel_->space(); }
  std::size_t size() const noexcept { return kernel_->size(); }
  double bound() const noexcept { return kernel_->bound(); }

  /// Rows are probability measures on the retained states.
  bool markovian() const noexcept { return markovian_; }
  /// Rows are probability measures once leaked mass is counted as mass.
  bool markovian_with_leakage() const noexcept { return markovian_with_leakage_; }

  /// S^(2^j), memoized.
  KernelOperator ladder(std::size_t j) const;

 private:
  KernelOperator(std::shared_ptr<const Kernel> kernel, double markov_tol);

  std::shared_ptr<const Kernel> kernel_;
  bool markovian_ = false;
  bool markovian_with_leakage_ = false;
  double markov_tol_ = 1e-12;
  std::shared_ptr<detail::PowerCache> cache_;
};

/// (Sf)(x) = sum_y k(x, y) f(y) + leakage(x) * tail(f). The tail rule is kept.
/// Throws UnresolvedStateError naming x when row x leaks and f has no tail rule.
BoundedFunction forward_apply(const KernelOperator& s, const BoundedFunction& f);

/// (S'mu)(A) = sum_x mu(x) k(x, A). Leaked mass joins mu's escaped mass;
/// escaped mass is carried over unchanged.
SignedMeasure adjoint_apply(const KernelOperator& s, const SignedMeasure& mu);

struct DualityReport {
  double forward_side = 0.0;  // <Sf, mu>
  double adjoint_side = 0.0;  // <f, S'mu>
  double residual = 0.0;
  double scale = 1.0;
  bool ok = false;
};

DualityReport duality_consistency(const KernelOperator& s, const BoundedFunction& f, const SignedMeasure& mu,
                                  double tol = 1e-12);

/// ST, i.e. (ST)f = S(Tf) and k_ST(x, .) = sum_y k_S(x, y) k_T(y, .).
/// Mass leaked by S is carried through T unchanged, so T must keep escaped
/// mass escaped with unit weight (true for powers and their convex
/// combinations, not for unnormalized sums).
KernelOperator compose(const KernelOperator& s, const KernelOperator& t);
/// S^n by binary decomposition over the cached doubling ladder.
KernelOperator power(const KernelOperator& s, std::size_t n);
/// a S + b T.
KernelOperator linear_combination(double a, const KernelOperator& s, double b, const KernelOperator& t);

/// Nonnegative rows of retained mass 1 within tol.
bool is_markovian(const Kernel& k, double tol = 1e-12);
bool is_markovian(const KernelOperator& s, double tol = 1e-12);

/// sup over sign probes |f| <= 1 of ||Sf||_inf.
double forward_operator_norm(const KernelOperator& s);
/// sup over atoms of ||S' delta_x||_TV.
double adjoint_operator_norm(const KernelOperator& s);

struct LeakageReport {
  double total = 0.0;
  double max_row = 0.0;
  std::vector<std::size_t> leaking_rows;
};

LeakageReport leakage_report(const KernelOperator& s);

}  // namespace meanerg
