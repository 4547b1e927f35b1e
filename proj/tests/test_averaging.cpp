#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "meanerg/averaging.hpp"
#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"
#include "oracles.hpp"

using namespace meanerg;
using testing::fn;
using testing::max_abs;
using testing::op;

namespace {

const Eigen::Matrix2d kSwap = (Eigen::Matrix2d() << 0, 1, 1, 0).finished();
const Eigen::Matrix3d kIrreducible = (Eigen::Matrix3d() << .5, .3, .2, .2, .6, .2, .1, .4, .5).finished();
const Eigen::Matrix2d kRate = (Eigen::Matrix2d() << -1, 1, 1, -1).finished();

}  // namespace

TEST_CASE("cesaro examples") {
  auto s = testing::discrete_space(2);
  CHECK(cesaro_avg(KernelOperator::identity(s), 7, fn(s, {0.1, 3})).values() == Eigen::Vector2d(0.1, 3));
  CHECK(cesaro_avg(op(s, kSwap), 2, fn(s, {1, 0})).values() == Eigen::Vector2d(0.5, 0.5));
  CHECK_THROWS_AS(cesaro_avg(op(s, kSwap), 0, fn(s, {1, 0})), DomainError);
}

TEST_CASE("cesaro operator matches dense accumulation") {
  std::mt19937_64 rng(41);
  auto s = testing::discrete_space(6);
  const Eigen::MatrixXd pm = oracle::random_stochastic(6, rng, 0.3);
  auto p = op(s, pm);
  for (std::size_t n : {1u, 2u, 3u, 5u, 8u, 13u, 64u, 100u})
    CHECK(max_abs(cesaro_operator(p, n).kernel().dense() - oracle::cesaro_dense(pm, static_cast<int>(n))) <= 1e-13);
}

TEST_CASE("cesaro recursion (n+1)A_{n+1} = n A_n + S^n") {
  std::mt19937_64 rng(42);
  auto s = testing::discrete_space(7);
  auto p = op(s, oracle::random_stochastic(7, rng, 0.3));
  BoundedFunction f(s, oracle::random_vector(7, rng));
  std::vector<std::size_t> grid;
  for (std::size_t n = 1; n <= 40; ++n) grid.push_back(n);
  auto seq = cesaro_sequence(p, grid, f);
  BoundedFunction sn = f;
  for (std::size_t n = 1; n < 40; ++n) {
    sn = forward_apply(p, sn);
    const Eigen::VectorXd lhs = static_cast<double>(n + 1) * seq[n].values();
    const Eigen::VectorXd rhs = static_cast<double>(n) * seq[n - 1].values() + sn.values();
    CHECK(max_abs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("abel examples") {
  auto s = testing::discrete_space(2);
  auto id = abel_avg(KernelOperator::identity(s), 0.7, fn(s, {2, -1}));
  CHECK(max_abs(id.value.values() - Eigen::Vector2d(2, -1)) <= 2e-12);
  auto sw = abel_avg(op(s, kSwap), 0.5, fn(s, {1, 0}));
  CHECK(max_abs(sw.value.values() - Eigen::Vector2d(2.0 / 3, 1.0 / 3)) <= 1e-12);
  CHECK(sw.error_bound <= 2e-12);
  CHECK_THROWS_AS(abel_avg(op(s, kSwap), 1.0, fn(s, {1, 0})), DomainError);
  CHECK_THROWS_AS(abel_avg(op(s, kSwap), -0.1, fn(s, {1, 0})), DomainError);
  CHECK(abel_terms(0.5) == 40);
}

TEST_CASE("abel mean near r = 1 approaches the stationary average") {
  auto s = testing::discrete_space(3);
  auto p = op(s, kIrreducible);
  const Eigen::VectorXd pi = oracle::stationary(kIrreducible);
  const Eigen::Vector3d f(1.0, -2.0, 0.5);
  // A_r f = pi(f) + (1 - r) D f + O((1 - r)^2), D the deviation matrix.
  const Eigen::MatrixXd proj = Eigen::VectorXd::Ones(3) * pi.transpose();
  const Eigen::MatrixXd dev = (Eigen::MatrixXd::Identity(3, 3) - kIrreducible + proj).inverse() - proj;
  for (double r : {0.999, 0.9999}) {
    auto a = abel_avg(p, r, BoundedFunction(s, f));
    const Eigen::VectorXd expected = Eigen::VectorXd::Constant(3, f.dot(pi)) + (1.0 - r) * dev * f;
    CHECK(max_abs(a.value.values() - expected) <= 20.0 * (1.0 - r) * (1.0 - r) + 1e-10);
    CHECK(max_abs(a.value.values() - Eigen::VectorXd::Constant(3, f.dot(pi))) <= 5.0 * (1.0 - r));
  }
}

TEST_CASE("abel operator matches the resolvent") {
  std::mt19937_64 rng(43);
  auto s = testing::discrete_space(5);
  const Eigen::MatrixXd pm = oracle::random_stochastic(5, rng);
  for (double r : {0.0, 0.3, 0.9, 0.99}) {
    auto a = abel_operator(op(s, pm), r);
    CHECK(max_abs(a.value.kernel().dense() - oracle::abel_dense(pm, r)) <= 1e-11);
    CHECK(a.error_bound <= 1e-12);
  }
}

TEST_CASE("operator averages of a leaking kernel match an absorbing extension") {
  // Leaked mass goes to a cemetery state c with P(c, c) = 1; the averaged
  // cemetery column must equal the averaged leakage.
  std::mt19937_64 rng(44);
  auto s = testing::discrete_space(4);
  Eigen::MatrixXd pm = oracle::random_stochastic(4, rng);
  const Eigen::Vector4d leak(0.0, 0.3, 1.0, 0.05);
  for (int i = 0; i < 4; ++i) pm.row(i) *= 1.0 - leak(i);
  const auto k = KernelOperator(Kernel::from_dense(s, pm, {leak.data(), leak.data() + 4}));
  Eigen::MatrixXd ext = Eigen::MatrixXd::Zero(5, 5);
  ext.topLeftCorner(4, 4) = pm;
  ext.col(4).head(4) = leak;
  ext(4, 4) = 1.0;
  auto check = [](const KernelOperator& a, const Eigen::MatrixXd& dense, double tol) {
    CHECK(max_abs(a.kernel().dense() - dense.topLeftCorner(4, 4)) <= tol);
    const auto& l = a.kernel().leakage();
    for (int i = 0; i < 4; ++i) CHECK(std::abs(l[static_cast<std::size_t>(i)] - dense(i, 4)) <= tol);
  };
  for (std::size_t n : {1u, 2u, 3u, 7u, 64u, 100u}) {
    CAPTURE(n);
    check(cesaro_operator(k, n), oracle::cesaro_dense(ext, static_cast<int>(n)), 1e-13);
  }
  for (double r : {0.3, 0.9, 0.99}) {
    CAPTURE(r);
    check(abel_operator(k, r).value, oracle::abel_dense(ext, r), 1e-11);
  }
}

TEST_CASE("time average examples") {
  auto s = testing::discrete_space(2);
  RateMatrix zero(s, Eigen::Matrix2d::Zero());
  CHECK(time_avg(zero, 3.0, fn(s, {1, 4})).value.values() == Eigen::Vector2d(1, 4));

  RateMatrix q(s, kRate);
  for (double t : {0.01, 0.5, 2.0, 10.0, 250.0}) {
    auto a = time_avg(q, t, fn(s, {1, 0}));
    CHECK(max_abs(a.value.values() - oracle::two_state_time_average(t)) <= 1e-11);
  }
  auto far = time_avg(q, 1e6, fn(s, {1, 0}));
  CHECK(max_abs(far.value.values() - Eigen::Vector2d(0.5, 0.5)) <= 1e-6);

  CHECK_THROWS_AS(RateMatrix(s, (Eigen::Matrix2d() << -1, 1, 0.5, -1).finished()), DomainError);
  CHECK_THROWS_AS(RateMatrix(s, (Eigen::Matrix2d() << 1, -1, 1, -1).finished()), DomainError);
}

TEST_CASE("time average matches matrix-exponential quadrature") {
  std::mt19937_64 rng(44);
  auto s = testing::discrete_space(4);
  Eigen::MatrixXd qm = oracle::random_stochastic(4, rng);
  qm.diagonal().setZero();
  for (int i = 0; i < 4; ++i) qm(i, i) = -qm.row(i).sum();
  qm *= 1.7;
  RateMatrix q(s, qm);
  for (double t : {0.3, 1.0, 4.0}) {
    auto a = time_operator(q, t);
    CHECK(max_abs(a.value.kernel().dense() - oracle::time_average_quadrature(qm, t)) <= 1e-10);
    auto st = semigroup_operator(q, t);
    CHECK(max_abs(st.value.kernel().dense() - oracle::expm(qm, t)) <= 1e-12);
  }
}

TEST_CASE("time identity A_t S(s) - A_t = (s/t)(S(t) - I) A_s") {
  auto s2 = testing::discrete_space(2);
  RateMatrix zero(s2, Eigen::Matrix2d::Zero());
  auto z = time_identity_check(zero, 2.0, 1.0, fn(s2, {1, 0}));
  CHECK(z.residual == 0.0);
  CHECK(max_abs(z.lhs) == 0.0);

  RateMatrix q(s2, kRate);
  auto id = time_identity_check(q, 2.0, 1.0, fn(s2, {1, 0}));
  CHECK(id.residual <= 1e-8);
  // Oracle for the left side from the closed forms.
  const Eigen::Vector2d ssf = oracle::two_state_semigroup(1.0) * Eigen::Vector2d(1, 0);
  const double g = (1.0 - std::exp(-4.0)) / 4.0;  // A_2 on the mean-zero part
  const Eigen::Vector2d lhs_oracle = 0.5 * g * Eigen::Vector2d(ssf(0) - ssf(1), ssf(1) - ssf(0)) -
                                     (oracle::two_state_time_average(2.0) - Eigen::Vector2d(0.5, 0.5));
  CHECK(max_abs(id.lhs - lhs_oracle) <= 1e-12);

  // With the opposite sign (I - S(t)) the residual is 2||rhs||, far from zero.
  CHECK(max_abs(id.lhs + id.rhs) > 0.05);
}

TEST_CASE("time identity vanishes linearly as s -> 0") {
  auto s = testing::discrete_space(2);
  RateMatrix q(s, kRate);
  const double t = 3.0;
  double prev = 0.0;
  for (double step : {1e-1, 1e-2, 1e-3}) {
    auto id = time_identity_check(q, t, step, fn(s, {1, 0}));
    const double size = max_abs(id.lhs);
    CHECK(id.residual <= 1e-10);
    if (prev > 0.0) CHECK(size / prev == doctest::Approx(0.1).epsilon(0.05));
    prev = size;
  }
}

TEST_CASE("abel identity") {
  auto s2 = testing::discrete_space(2);
  CHECK(abel_identity_check(op(s2, kSwap), 0.5, fn(s2, {1, 0})) <= 1e-12);
  CHECK(abel_identity_check(op(s2, kSwap), 0.5, fn(s2, {3, 3})) <= 1e-12);
  std::mt19937_64 rng(45);
  auto s4 = testing::discrete_space(4);
  for (int trial = 0; trial < 20; ++trial) {
    auto p = op(s4, oracle::random_stochastic(4, rng));
    CHECK(abel_identity_check(p, 0.9, BoundedFunction(s4, oracle::random_vector(4, rng))) <= 1e-10);
  }
}

TEST_CASE("scheme spec validation") {
  CHECK_THROWS_AS(SchemeSpec::cesaro({4, 2}).validate(), DomainError);
  CHECK_THROWS_AS(SchemeSpec::abel({0.5, 1.0}).validate(), DomainError);
  CHECK_THROWS_AS(SchemeSpec::time({-1.0, 2.0}).validate(), DomainError);
  CHECK_THROWS_AS(SchemeSpec::cesaro({1, 2}, 0.0).validate(), DomainError);
  CHECK_NOTHROW(SchemeSpec::abel(SchemeSpec::default_abel_grid()).validate());
  CHECK(SchemeSpec::doubling_grid(1024).size() == 11);
}

TEST_CASE("AS1 on Markov and doubling kernels") {
  auto s = testing::discrete_space(3);
  AverageScheme ces(op(s, kIrreducible), SchemeSpec::cesaro(SchemeSpec::doubling_grid(64)));
  SchemeReport rep;
  verify_as1(ces, rep);
  CHECK(rep.as1_ok);
  for (double n : rep.as1_norms) CHECK(std::abs(n - 1.0) <= 1e-12);

  AverageScheme abel(op(s, kIrreducible), SchemeSpec::abel({0.5, 0.9, 0.99}));
  verify_as1(abel, rep);
  CHECK(rep.as1_ok);

  // Millions of series terms near r = 1; summation roundoff must not read as a bound violation.
  AverageScheme near_one(op(s, kIrreducible), SchemeSpec::abel({0.9999, 0.99999}));
  verify_as1(near_one, rep);
  CHECK(rep.as1_ok);
  for (double n : rep.as1_norms) CHECK(std::abs(n - 1.0) <= 1e-9);

  auto doubling = op(s, 2.0 * Eigen::Matrix3d::Identity());
  AverageScheme grow(doubling, SchemeSpec::abel({0.1, 0.3, 0.45, 0.49}, 10.0));
  verify_as1(grow, rep);
  CHECK_FALSE(rep.as1_ok);
  // (1 - r)/(1 - 2r) grows without bound as r -> 1/2 and passes M = 10.
  CHECK(rep.as1_norms[0] == doctest::Approx(0.9 / 0.8));
  CHECK(rep.as1_norms.back() > 10.0);
}

TEST_CASE("AS3 swap example and fixed points") {
  auto s = testing::discrete_space(2);
  AverageScheme swap(op(s, kSwap), SchemeSpec::cesaro({1, 2, 3}));
  SchemeReport rep;
  verify_as3(swap, fn(s, {1, 0}), SignedMeasure::dirac(s, 0), rep);
  CHECK(rep.as3_function_decay[2] == doctest::Approx(1.0 / 3.0));
  CHECK(rep.identity_ok);
  REQUIRE(rep.as3_bound_ok.has_value());
  CHECK(*rep.as3_bound_ok);

  verify_as3(swap, fn(s, {2, 2}), SignedMeasure::uniform(s, std::vector<std::size_t>{0, 1}), rep);
  for (double d : rep.as3_function_decay) CHECK(d == 0.0);
  for (double d : rep.as3_measure_decay) CHECK(d == 0.0);
}

TEST_CASE("fixed points are invariant under every scheme") {
  auto s = testing::discrete_space(3);
  auto p = op(s, kIrreducible);
  const Eigen::VectorXd pi = oracle::stationary(kIrreducible);
  auto one = BoundedFunction::constant(s, 1.0);
  SignedMeasure stat(s, pi);
  AverageScheme ces(p, SchemeSpec::cesaro({1, 5, 50}));
  for (auto& a : ces.averages(one)) CHECK(a.value.values() == Eigen::VectorXd::Ones(3));
  // Swap permutes exactly; its fixed functions are reproduced bit for bit.
  auto s2 = testing::discrete_space(2);
  AverageScheme sw(op(s2, kSwap), SchemeSpec::cesaro({1, 2, 7, 64}));
  for (auto& a : sw.averages(BoundedFunction::constant(s2, 0.3))) CHECK(a.value.values() == Eigen::Vector2d(0.3, 0.3));
  for (auto& a : ces.averages(stat)) CHECK(max_abs(a.value.weights() - pi) <= 1e-15);
}

TEST_CASE("orbit hull check passes for all three schemes") {
  std::mt19937_64 rng(46);
  auto s = testing::discrete_space(4);
  auto p = op(s, oracle::random_stochastic(4, rng));
  BoundedFunction f(s, oracle::random_vector(4, rng));
  SchemeReport rep;
  verify_hull(AverageScheme(p, SchemeSpec::cesaro({1, 3, 17})), f, rep);
  CHECK(rep.hull_ok);
  verify_hull(AverageScheme(p, SchemeSpec::abel({0.2, 0.9})), f, rep);
  CHECK(rep.hull_ok);
  auto s2 = testing::discrete_space(2);
  verify_hull(AverageScheme(RateMatrix(s2, kRate), SchemeSpec::time({0.5, 4.0})), fn(s2, {1, 0}), rep);
  CHECK(rep.hull_ok);
}

TEST_CASE("check_scheme on the time scheme") {
  auto s = testing::discrete_space(2);
  AverageScheme sch(RateMatrix(s, kRate), SchemeSpec::time({1.0, 2.0, 8.0}));
  auto rep = check_scheme(sch, fn(s, {1, 0}), SignedMeasure::dirac(s, 0));
  CHECK(rep.as1_ok);
  CHECK(rep.identity_ok);
  CHECK(rep.hull_ok);
  for (std::size_t i = 1; i < rep.as3_function_decay.size(); ++i)
    CHECK(rep.as3_function_decay[i] <= rep.as3_function_decay[i - 1]);
}

TEST_CASE("Abel and Cesaro averages approach each other on an ergodic chain") {
  auto s = testing::discrete_space(3);
  auto p = op(s, kIrreducible);
  BoundedFunction f(s, Eigen::Vector3d(1, 0, -1));
  const SignedMeasure mu = SignedMeasure::dirac(s, 0);
  double prev = 1e300;
  for (std::size_t n : {4u, 16u, 64u, 256u}) {
    const double gap = std::abs(pairing(abel_avg(p, 1.0 - 1.0 / static_cast<double>(n), f).value, mu) -
                                pairing(cesaro_avg(p, n, f), mu));
    CHECK(gap < prev);
    prev = gap;
  }
  CHECK(prev < 1e-2);
}
