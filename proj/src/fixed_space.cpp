#include "meanerg/fixed_space.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>

#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"

namespace meanerg {

namespace {

/// Rows of `b` (one basis vector per row) brought to reduced row echelon form.
Eigen::MatrixXd rref(Eigen::MatrixXd b, double tol) {
  const Eigen::Index rows = b.rows(), cols = b.cols();
  Eigen::Index lead = 0;
  for (Eigen::Index c = 0; c < cols && lead < rows; ++c) {
    Eigen::Index pivot = lead;
    b.col(c).segment(lead, rows - lead).cwiseAbs().maxCoeff(&pivot);
    pivot += lead;
    if (std::abs(b(pivot, c)) <= tol) continue;
    b.row(pivot).swap(b.row(lead));
    b.row(lead) /= b(lead, c);
    b(lead, c) = 1.0;
    for (Eigen::Index r = 0; r < rows; ++r)
      if (r != lead && b(r, c) != 0.0) {
        b.row(r) -= b(r, c) * b.row(lead);
        b(r, c) = 0.0;
      }
    ++lead;
  }
  return b.topRows(lead);
}

struct NullSpace {
  Eigen::MatrixXd basis;  // columns
  Eigen::VectorXd singular_values;
  double threshold = 0.0;
};

NullSpace null_space(const Eigen::MatrixXd& a, double relative) {
  NullSpace out;
  const Eigen::Index cols = a.cols();
  if (a.rows() == 0) {
    out.basis = Eigen::MatrixXd::Identity(cols, cols);
    return out;
  }
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  out.singular_values = svd.singularValues();
  const double top = out.singular_values.size() ? out.singular_values(0) : 0.0;
  out.threshold = relative * top;
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < out.singular_values.size(); ++i)
    if (out.singular_values(i) > out.threshold) ++rank;
  out.basis = svd.matrixV().rightCols(cols - rank);
  return out;
}

}  // namespace

std::string side_name(Side side) { return side == Side::function ? "function" : "measure"; }

bool FixedSpaceBasis::residuals_ok(double tol) const {
  return std::all_of(residuals.begin(), residuals.end(), [tol](double r) { return r <= tol; });
}

Eigen::MatrixXd FixedSpaceBasis::matrix() const {
  const auto d = static_cast<Eigen::Index>(dimension());
  Eigen::Index n = 0;
  if (d > 0) n = static_cast<Eigen::Index>(side == Side::function ? functions[0].size() : measures[0].size());
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index j = 0; j < d; ++j)
    m.col(j) = side == Side::function ? functions[static_cast<std::size_t>(j)].values()
                                      : measures[static_cast<std::size_t>(j)].weights();
  return m;
}

FixedSpaceBasis fixed_space(std::span<const KernelOperator> generators, Side side, const FixedSpaceOptions& opts) {
  if (generators.empty()) throw DomainError("fixed_space: no generators");
  const SpacePtr& space = generators[0].space();
  for (const auto& g : generators) require_same_space(*space, *g.space());
  const auto n = static_cast<Eigen::Index>(space->size());

  FixedSpaceBasis out;
  out.side = side;

  if (side == Side::function) {
    const auto cls = space->tie_classes();
    const auto c = static_cast<Eigen::Index>(cls.empty() ? 0 : *std::max_element(cls.begin(), cls.end()) + 1);
    Eigen::MatrixXd incidence = Eigen::MatrixXd::Zero(n, c);
    for (Eigen::Index i = 0; i < n; ++i) incidence(i, static_cast<Eigen::Index>(cls[static_cast<std::size_t>(i)])) = 1.0;

    std::vector<bool> resolved(static_cast<std::size_t>(n), true);
    for (const auto& g : generators)
      for (std::size_t i = 0; i < g.size(); ++i)
        if (g.kernel().leakage()[i] != 0.0) resolved[i] = false;
    Eigen::Index kept = 0;
    for (Eigen::Index i = 0; i < n; ++i) kept += resolved[static_cast<std::size_t>(i)] ? 1 : 0;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!resolved[static_cast<std::size_t>(i)]) out.unresolved_states.push_back(space->name(static_cast<std::size_t>(i)));

    Eigen::MatrixXd a(kept * static_cast<Eigen::Index>(generators.size()), c);
    Eigen::Index row = 0;
    for (const auto& g : generators) {
      const Eigen::MatrixXd m = (Eigen::MatrixXd::Identity(n, n) - g.kernel().dense()) * incidence;
      for (Eigen::Index i = 0; i < n; ++i)
        if (resolved[static_cast<std::size_t>(i)]) a.row(row++) = m.row(i);
    }
    const NullSpace ns = null_space(a, opts.relative_threshold);
    out.singular_values = ns.singular_values;
    out.threshold = ns.threshold;
    const Eigen::MatrixXd canon = rref((incidence * ns.basis).transpose(), 1e-10);
    for (Eigen::Index k = 0; k < canon.rows(); ++k) {
      BoundedFunction b(space, canon.row(k).transpose());
      double res = 0.0;
      for (const auto& g : generators) {
        const Eigen::VectorXd r = canon.row(k).transpose() - g.kernel().dense() * canon.row(k).transpose();
        for (Eigen::Index i = 0; i < n; ++i)
          if (resolved[static_cast<std::size_t>(i)]) res = std::max(res, std::abs(r(i)));
      }
      out.functions.push_back(std::move(b));
      out.residuals.push_back(res);
    }
    if (!out.unresolved_states.empty())
      out.warnings.push_back(std::to_string(out.unresolved_states.size()) +
                             " leaking row(s) dropped from the fixed-point equations; the truncation does not "
                             "determine Sf there");
  } else {
    Eigen::MatrixXd a((n + 1) * static_cast<Eigen::Index>(generators.size()), n);
    Eigen::Index row = 0;
    for (const auto& g : generators) {
      a.middleRows(row, n) = Eigen::MatrixXd::Identity(n, n) - g.kernel().dense().transpose();
      row += n;
      for (Eigen::Index i = 0; i < n; ++i) a(row, i) = g.kernel().leakage()[static_cast<std::size_t>(i)];
      ++row;
    }
    const NullSpace ns = null_space(a, opts.relative_threshold);
    out.singular_values = ns.singular_values;
    out.threshold = ns.threshold;
    const Eigen::MatrixXd canon = rref(ns.basis.transpose(), 1e-10);
    for (Eigen::Index k = 0; k < canon.rows(); ++k) {
      Eigen::VectorXd w = canon.row(k).transpose();
      const double mass = w.sum();
      w /= std::abs(mass) > 1e-12 * w.cwiseAbs().sum() ? mass : w.cwiseAbs().sum();
      SignedMeasure mu(space, w);
      double res = 0.0;
      for (const auto& g : generators) res = std::max(res, tv_norm(mu - adjoint_apply(g, mu)));
      out.measures.push_back(std::move(mu));
      out.residuals.push_back(res);
    }
  }
  for (std::size_t k = 0; k < out.residuals.size(); ++k)
    if (out.residuals[k] > opts.residual_tol)
      out.warnings.push_back("basis element " + std::to_string(k) + " has residual " + std::to_string(out.residuals[k]));
  return out;
}

FixedSpaceBasis fixed_space(const KernelOperator& s, Side side, const FixedSpaceOptions& opts) {
  return fixed_space(std::span<const KernelOperator>(&s, 1), side, opts);
}

SeparationVerdict separation_test(const FixedSpaceBasis& functions, const FixedSpaceBasis& measures, double rank_tol) {
  if (functions.side != Side::function || measures.side != Side::measure)
    throw DomainError("separation_test: expects a function basis and a measure basis");
  SeparationVerdict v;
  const auto df = static_cast<Eigen::Index>(functions.dimension());
  const auto dm = static_cast<Eigen::Index>(measures.dimension());
  v.gram.resize(df, dm);
  for (Eigen::Index i = 0; i < df; ++i)
    for (Eigen::Index j = 0; j < dm; ++j)
      v.gram(i, j) = pairing(functions.functions[static_cast<std::size_t>(i)], measures.measures[static_cast<std::size_t>(j)]);

  Eigen::VectorXd sv;
  if (df > 0 && dm > 0) sv = Eigen::JacobiSVD<Eigen::MatrixXd>(v.gram).singularValues();
  auto margin = [&](Eigen::Index d) {
    if (d == 0) return std::numeric_limits<double>::infinity();
    if (sv.size() < d) return 0.0;
    return sv(d - 1);
  };
  v.function_margin = margin(df);
  v.measure_margin = margin(dm);
  v.measures_separate_functions = v.function_margin > rank_tol;
  v.functions_separate_measures = v.measure_margin > rank_tol;
  return v;
}

SumDirectness sum_directness(const KernelOperator& s, const FixedSpaceBasis& basis, double cos_tol) {
  const auto n = static_cast<Eigen::Index>(s.size());
  const Eigen::MatrixXd k = s.kernel().dense();
  Eigen::MatrixXd range;
  Eigen::MatrixXd fixed = basis.matrix();
  if (basis.side == Side::function) {
    range = Eigen::MatrixXd::Identity(n, n) - k;
  } else {
    range = Eigen::MatrixXd::Zero(n + 1, n);
    range.topRows(n) = Eigen::MatrixXd::Identity(n, n) - k.transpose();
    for (Eigen::Index j = 0; j < n; ++j) range(n, j) = -s.kernel().leakage()[static_cast<std::size_t>(j)];
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(n + 1, fixed.cols());
    padded.topRows(n) = fixed;
    fixed = padded;
  }
  SumDirectness out;
  if (fixed.cols() == 0) {
    out.direct = true;
    out.angle = M_PI / 2;
    return out;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_range(range);
  qr_range.setThreshold(1e-10);
  out.range_rank = static_cast<std::size_t>(qr_range.rank());
  if (out.range_rank == 0) {
    out.direct = true;
    out.angle = M_PI / 2;
    return out;
  }
  const Eigen::MatrixXd q_range =
      Eigen::MatrixXd(qr_range.householderQ()).leftCols(static_cast<Eigen::Index>(out.range_rank));
  Eigen::HouseholderQR<Eigen::MatrixXd> qr_fixed(fixed);
  const Eigen::MatrixXd q_fixed = Eigen::MatrixXd(qr_fixed.householderQ()).leftCols(fixed.cols());
  out.max_cosine = Eigen::JacobiSVD<Eigen::MatrixXd>(q_fixed.transpose() * q_range).singularValues()(0);
  out.angle = std::acos(std::min(1.0, out.max_cosine));
  out.direct = out.max_cosine < 1.0 - cos_tol;
  return out;
}

}  // namespace meanerg
