#include "meanerg/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>

#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"

namespace meanerg {

Kernel::Kernel(SpacePtr space, Csr rows, std::vector<double> leakage)
    : space_(std::move(space)), rows_(std::move(rows)), leakage_(std::move(leakage)) {
  if (!space_) throw DomainError("kernel: null state space");
  const std::size_t n = space_->size();
  if (rows_.rows != n || rows_.cols != n || rows_.offsets.size() != n + 1)
    throw DomainError("kernel: row storage does not match the state space");
  if (leakage_.empty()) leakage_.assign(n, 0.0);
  if (leakage_.size() != n) throw DomainError("kernel: leakage vector has wrong length");
  for (std::size_t r = 0; r < n; ++r) {
    const auto idx = rows_.row_index(r);
    for (std::size_t k = 0; k < idx.size(); ++k) {
      if (idx[k] >= n) throw DomainError("kernel: target index out of range in row " + space_->name(r));
      if (k > 0 && idx[k] <= idx[k - 1]) throw DomainError("kernel: unsorted row " + space_->name(r));
    }
    for (double w : rows_.row_value(r))
      if (!std::isfinite(w)) throw DomainError("kernel: non-finite weight in row " + space_->name(r));
    if (!std::isfinite(leakage_[r])) throw DomainError("kernel: non-finite leakage");
    if (leakage_[r] != 0.0) leaks_ = true;
  }
  transposed_ = parallel::transpose(rows_);
  for (std::size_t r = 0; r < n; ++r) bound_ = std::max(bound_, row_tv(r));
}

Kernel Kernel::from_rows(SpacePtr space, const std::vector<std::vector<KernelEntry>>& rows,
                         std::vector<double> leakage) {
  const std::size_t n = space->size();
  if (rows.size() != n) throw DomainError("kernel: expected one row per state");
  Csr c;
  c.rows = c.cols = n;
  c.offsets.assign(n + 1, 0);
  for (std::size_t r = 0; r < n; ++r) {
    std::map<std::size_t, double> acc;
    for (const auto& e : rows[r]) {
      if (e.target >= n) throw DomainError("kernel: target index out of range");
      acc[e.target] += e.weight;
    }
    for (auto [t, w] : acc) {
      if (w == 0.0) continue;
      c.index.push_back(t);
      c.value.push_back(w);
    }
    c.offsets[r + 1] = c.index.size();
  }
  return Kernel(std::move(space), std::move(c), std::move(leakage));
}

Kernel Kernel::from_dense(SpacePtr space, const Eigen::MatrixXd& m, std::vector<double> leakage) {
  return Kernel(std::move(space), Csr::from_dense(m), std::move(leakage));
}

Kernel Kernel::identity(SpacePtr space) {
  const std::size_t n = space->size();
  return Kernel(std::move(space), Csr::identity(n));
}

Kernel Kernel::deterministic(SpacePtr space, const std::vector<std::optional<std::size_t>>& map) {
  const std::size_t n = space->size();
  if (map.size() != n) throw DomainError("kernel: map must have one entry per state");
  std::vector<std::vector<KernelEntry>> rows(n);
  std::vector<double> leak(n, 0.0);
  for (std::size_t x = 0; x < n; ++x) {
    if (map[x])
      rows[x].push_back({*map[x], 1.0});
    else
      leak[x] = 1.0;
  }
  return from_rows(std::move(space), rows, std::move(leak));
}

SignedMeasure Kernel::row(std::size_t x) const {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size()));
  const auto idx = rows_.row_index(x);
  const auto val = rows_.row_value(x);
  for (std::size_t k = 0; k < idx.size(); ++k) w(static_cast<Eigen::Index>(idx[k])) = val[k];
  return SignedMeasure(space_, std::move(w), leakage_.at(x));
}

double Kernel::row_tv(std::size_t x) const {
  double s = std::abs(leakage_.at(x));
  for (double w : rows_.row_value(x)) s += std::abs(w);
  return s;
}

double Kernel::retained_mass(std::size_t x) const {
  double s = 0.0;
  for (double w : rows_.row_value(x)) s += w;
  return s;
}

double Kernel::row_mass(std::size_t x) const { return retained_mass(x) + leakage_.at(x); }

namespace detail {

class PowerCache {
 public:
  explicit PowerCache(std::shared_ptr<const Kernel> base) { ladder_.push_back(std::move(base)); }

  std::shared_ptr<const Kernel> get(std::size_t j) {
    std::lock_guard lock(mutex_);
    while (ladder_.size() <= j) {
      const auto& prev = ladder_.back();
      ladder_.push_back(std::make_shared<const Kernel>(square(*prev)));
    }
    return ladder_[j];
  }

  static Kernel square(const Kernel& k) {
    Csr rows = parallel::multiply(k.rows(), k.rows());
    std::vector<double> leak(k.size());
    parallel::apply(k.rows(), k.leakage(), leak);
    for (std::size_t x = 0; x < leak.size(); ++x) leak[x] += k.leakage()[x];
    return Kernel(k.space(), std::move(rows), std::move(leak));
  }

 private:
  std::mutex mutex_;
  std::vector<std::shared_ptr<const Kernel>> ladder_;
};

}  // namespace detail

KernelOperator::KernelOperator(Kernel kernel, double markov_tol)
    : KernelOperator(std::make_shared<const Kernel>(std::move(kernel)), markov_tol) {}

KernelOperator::KernelOperator(std::shared_ptr<const Kernel> kernel, double markov_tol)
    : kernel_(std::move(kernel)), markov_tol_(markov_tol) {
  markovian_ = is_markovian(*kernel_, markov_tol_);
  markovian_with_leakage_ = true;
  for (std::size_t x = 0; x < kernel_->size() && markovian_with_leakage_; ++x) {
    if (kernel_->leakage()[x] < 0.0 || std::abs(kernel_->row_mass(x) - 1.0) > markov_tol_)
      markovian_with_leakage_ = false;
    for (double w : kernel_->rows().row_value(x))
      if (w < 0.0) markovian_with_leakage_ = false;
  }
  cache_ = std::make_shared<detail::PowerCache>(kernel_);
}

KernelOperator KernelOperator::identity(SpacePtr space) { return KernelOperator(Kernel::identity(std::move(space))); }

KernelOperator KernelOperator::ladder(std::size_t j) const {
  if (j == 0) return *this;
  return KernelOperator(cache_->get(j), markov_tol_);
}

BoundedFunction forward_apply(const KernelOperator& s, const BoundedFunction& f) {
  const Kernel& k = s.kernel();
  require_same_space(*k.space(), *f.space());
  Eigen::VectorXd out(static_cast<Eigen::Index>(k.size()));
  parallel::apply(k.rows(), std::span<const double>(f.values().data(), f.size()),
                  std::span<double>(out.data(), k.size()));
  if (k.leaks()) {
    const auto tail = f.tail_value();
    for (std::size_t x = 0; x < k.size(); ++x) {
      const double leak = k.leakage()[x];
      if (leak == 0.0) continue;
      if (!tail) throw UnresolvedStateError(k.space()->name(x));
      out(static_cast<Eigen::Index>(x)) += leak * *tail;
    }
  }
  return BoundedFunction(f.space(), std::move(out), f.tail());
}

SignedMeasure adjoint_apply(const KernelOperator& s, const SignedMeasure& mu) {
  const Kernel& k = s.kernel();
  require_same_space(*k.space(), *mu.space());
  Eigen::VectorXd out(static_cast<Eigen::Index>(k.size()));
  parallel::apply(k.transposed(), std::span<const double>(mu.weights().data(), mu.size()),
                  std::span<double>(out.data(), k.size()));
  double escaped = mu.escaped();
  if (k.leaks())
    for (std::size_t x = 0; x < k.size(); ++x) escaped += mu(x) * k.leakage()[x];
  return SignedMeasure(mu.space(), std::move(out), escaped);
}

DualityReport duality_consistency(const KernelOperator& s, const BoundedFunction& f, const SignedMeasure& mu,
                                  double tol) {
  DualityReport r;
  r.forward_side = pairing(forward_apply(s, f), mu);
  r.adjoint_side = pairing(f, adjoint_apply(s, mu));
  r.residual = std::abs(r.forward_side - r.adjoint_side);
  r.scale = std::max(1.0, s.bound() * sup_norm(f) * tv_norm(mu));
  r.ok = r.residual <= tol * r.scale;
  return r;
}

KernelOperator compose(const KernelOperator& s, const KernelOperator& t) {
  const Kernel& a = s.kernel();
  const Kernel& b = t.kernel();
  require_same_space(*a.space(), *b.space());
  Csr rows = parallel::multiply(a.rows(), b.rows());
  std::vector<double> leak(a.size());
  parallel::apply(a.rows(), b.leakage(), leak);
  for (std::size_t x = 0; x < leak.size(); ++x) leak[x] += a.leakage()[x];
  return KernelOperator(Kernel(a.space(), std::move(rows), std::move(leak)));
}

KernelOperator power(const KernelOperator& s, std::size_t n) {
  if (n == 0) return KernelOperator::identity(s.space());
  std::optional<KernelOperator> acc;
  for (std::size_t j = 0; n != 0; ++j, n >>= 1) {
    if (!(n & 1U)) continue;
    KernelOperator step = s.ladder(j);
    acc = acc ? compose(*acc, step) : step;
  }
  return *acc;
}

KernelOperator linear_combination(double a, const KernelOperator& s, double b, const KernelOperator& t) {
  const Kernel& ks = s.kernel();
  const Kernel& kt = t.kernel();
  require_same_space(*ks.space(), *kt.space());
  Csr rows = parallel::axpby(a, ks.rows(), b, kt.rows());
  std::vector<double> leak(ks.size());
  for (std::size_t x = 0; x < leak.size(); ++x) leak[x] = a * ks.leakage()[x] + b * kt.leakage()[x];
  return KernelOperator(Kernel(ks.space(), std::move(rows), std::move(leak)));
}

bool is_markovian(const Kernel& k, double tol) {
  for (std::size_t x = 0; x < k.size(); ++x) {
    if (k.leakage()[x] != 0.0) return false;
    for (double w : k.rows().row_value(x))
      if (w < 0.0) return false;
    if (std::abs(k.retained_mass(x) - 1.0) > tol) return false;
  }
  return true;
}

bool is_markovian(const KernelOperator& s, double tol) { return is_markovian(s.kernel(), tol); }

double forward_operator_norm(const KernelOperator& s) {
  const Kernel& k = s.kernel();
  const auto n = static_cast<Eigen::Index>(k.size());
  double best = 0.0;
  for (std::size_t x = 0; x < k.size(); ++x) {
    Eigen::VectorXd probe = Eigen::VectorXd::Zero(n);
    const auto idx = k.rows().row_index(x);
    const auto val = k.rows().row_value(x);
    for (std::size_t i = 0; i < idx.size(); ++i)
      probe(static_cast<Eigen::Index>(idx[i])) = val[i] > 0 ? 1.0 : -1.0;
    const double leak = k.leakage()[x];
    const TailRule tail = TailRule::constant(leak > 0 ? 1.0 : (leak < 0 ? -1.0 : 0.0));
    const auto image = forward_apply(s, BoundedFunction(k.space(), std::move(probe), tail));
    best = std::max(best, image.values().cwiseAbs().maxCoeff());
  }
  return best;
}

double adjoint_operator_norm(const KernelOperator& s) {
  double best = 0.0;
  for (std::size_t x = 0; x < s.size(); ++x)
    best = std::max(best, tv_norm(adjoint_apply(s, SignedMeasure::dirac(s.space(), x))));
  return best;
}

LeakageReport leakage_report(const KernelOperator& s) {
  LeakageReport r;
  const auto& leak = s.kernel().leakage();
  for (std::size_t x = 0; x < leak.size(); ++x) {
    if (leak[x] == 0.0) continue;
    r.total += std::abs(leak[x]);
    r.max_row = std::max(r.max_row, std::abs(leak[x]));
    r.leaking_rows.push_back(x);
  }
  return r;
}

}  // namespace meanerg
