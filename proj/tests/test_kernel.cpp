#include <doctest.h>

#include <random>
#include <thread>

#include "helpers.hpp"
#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"
#include "meanerg/kernel.hpp"
#include "oracles.hpp"

using namespace meanerg;
using testing::fn;
using testing::max_abs;
using testing::ms;
using testing::op;

namespace {

Csr random_csr(std::size_t rows, std::size_t cols, double density, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0, 1), v(-1, 1);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (u(rng) < density) m(i, j) = v(rng);
  return Csr::from_dense(m);
}

std::span<const double> cs(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<double> ms_(Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

TEST_CASE("parallel CSR kernels agree with the serial reference") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 20; ++trial) {
    const Csr a = random_csr(37, 23, 0.2, rng);
    const Csr b = random_csr(23, 41, 0.2, rng);
    const Csr c = random_csr(37, 23, 0.3, rng);
    const Eigen::VectorXd x = oracle::random_vector(23, rng);
    Eigen::VectorXd yp(37), ys(37);
    parallel::apply(a, cs(x), ms_(yp));
    serial::apply(a, cs(x), ms_(ys));
    CHECK(max_abs(yp - ys) == 0.0);

    const Eigen::VectorXd z = oracle::random_vector(37, rng);
    Eigen::VectorXd tp(23), ts(23);
    parallel::apply(parallel::transpose(a), cs(z), ms_(tp));
    serial::apply_transposed(a, cs(z), ms_(ts));
    CHECK(max_abs(tp - ts) <= 1e-14);

    CHECK(max_abs(parallel::multiply(a, b).to_dense() - serial::multiply(a, b).to_dense()) <= 1e-14);
    CHECK(max_abs(parallel::multiply(a, b).to_dense() - a.to_dense() * b.to_dense()) <= 1e-14);
    CHECK(max_abs(parallel::axpby(0.5, a, -2.0, c).to_dense() - serial::axpby(0.5, a, -2.0, c).to_dense()) == 0.0);
    CHECK(parallel::transpose(parallel::transpose(a)).index == a.index);
  }
}

TEST_CASE("kernel construction and validation") {
  auto s = testing::discrete_space(3);
  CHECK_THROWS_AS(Kernel::from_rows(s, {{{5, 1.0}}, {}, {}}), DomainError);
  CHECK_THROWS_AS(Kernel::from_rows(s, {{}, {}}), DomainError);
  auto k = Kernel::from_rows(s, {{{1, 0.5}, {1, 0.25}, {0, 0.25}}, {{2, -1.0}}, {}}, {0.0, 0.0, 1.0});
  CHECK(k.rows().row_index(0).size() == 2);
  CHECK(k.row(0)(1) == 0.75);
  CHECK(k.row_tv(1) == 1.0);
  CHECK(k.row_mass(2) == 1.0);
  CHECK(k.retained_mass(2) == 0.0);
  CHECK(k.bound() == 1.0);
}

TEST_CASE("forward_apply examples") {
  auto s = testing::discrete_space(2);
  CHECK(forward_apply(KernelOperator::identity(s), fn(s, {0.3, -4})).values() == Eigen::Vector2d(0.3, -4));
  auto swap = op(s, (Eigen::Matrix2d() << 0, 1, 1, 0).finished());
  CHECK(forward_apply(swap, fn(s, {1, 0})).values() == Eigen::Vector2d(0, 1));
  auto p = op(s, (Eigen::Matrix2d() << .5, .5, .25, .75).finished());
  CHECK(forward_apply(p, fn(s, {1, 0})).values() == Eigen::Vector2d(.5, .25));
}

TEST_CASE("adjoint_apply examples") {
  auto s = testing::discrete_space(2);
  auto mu = ms(s, {0.2, -1.5});
  CHECK(adjoint_apply(KernelOperator::identity(s), mu).weights() == mu.weights());
  auto swap = op(s, (Eigen::Matrix2d() << 0, 1, 1, 0).finished());
  CHECK(adjoint_apply(swap, SignedMeasure::dirac(s, 0)).weights() == Eigen::Vector2d(0, 1));
  auto p = op(s, (Eigen::Matrix2d() << .5, .5, .25, .75).finished());
  CHECK(adjoint_apply(p, SignedMeasure::dirac(s, 0)).weights() == Eigen::Vector2d(.5, .5));
}

TEST_CASE("leaking rows need a tail rule and name the state") {
  auto s = testing::discrete_space(2);
  KernelOperator k(Kernel::deterministic(s, {1, std::nullopt}));
  try {
    forward_apply(k, fn(s, {1, 2}));
    FAIL("expected UnresolvedStateError");
  } catch (const UnresolvedStateError& e) {
    CHECK(e.state() == "s1");
  }
  auto g = forward_apply(k, BoundedFunction(s, Eigen::Vector2d(1, 2), TailRule::constant(7)));
  CHECK(g.values() == Eigen::Vector2d(2, 7));
  auto mu = adjoint_apply(k, ms(s, {0.25, 0.75}));
  CHECK(mu.weights() == Eigen::Vector2d(0, 0.25));
  CHECK(mu.escaped() == 0.75);
  CHECK(mu.total_mass() == 1.0);
  auto leak = leakage_report(k);
  CHECK(leak.leaking_rows == std::vector<std::size_t>{1});
  CHECK_FALSE(k.markovian());
  CHECK(k.markovian_with_leakage());
}

TEST_CASE("duality consistency examples") {
  std::mt19937_64 rng(32);
  auto s = testing::discrete_space(5);
  BoundedFunction f(s, oracle::random_vector(5, rng));
  SignedMeasure mu(s, oracle::random_vector(5, rng));
  auto id = duality_consistency(KernelOperator::identity(s), f, mu);
  CHECK(id.ok);
  CHECK(id.forward_side == doctest::Approx(pairing(f, mu)));
  auto r = duality_consistency(op(s, oracle::random_stochastic(5, rng)), f, mu);
  CHECK(r.ok);
  CHECK(r.residual <= 1e-12);
}

TEST_CASE("compose and power examples") {
  auto s = testing::discrete_space(2);
  auto swap = op(s, (Eigen::Matrix2d() << 0, 1, 1, 0).finished());
  CHECK(power(swap, 0).kernel().dense() == Eigen::Matrix2d::Identity());
  CHECK(power(swap, 2).kernel().dense() == Eigen::Matrix2d::Identity());
  auto p = op(s, (Eigen::Matrix2d() << .5, .5, .25, .75).finished());
  Eigen::Matrix2d expected;
  expected << .375, .625, .3125, .6875;
  CHECK(max_abs(power(p, 2).kernel().dense() - expected) <= 1e-15);
  CHECK_THROWS_AS(compose(p, KernelOperator::identity(testing::discrete_space(3))), SpaceMismatchError);
}

TEST_CASE("is_markovian examples") {
  auto s = testing::discrete_space(2);
  CHECK(is_markovian(op(s, (Eigen::Matrix2d() << .5, .5, .25, .75).finished())));
  CHECK_FALSE(is_markovian(op(s, (Eigen::Matrix2d() << 1.5, -.5, .25, .75).finished())));
  CHECK_FALSE(is_markovian(op(s, (Eigen::Matrix2d() << .5, .499, .25, .75).finished())));
}

TEST_CASE("random stochastic kernels: duality, norms, powers") {
  std::mt19937_64 rng(33);
  std::uniform_int_distribution<int> size(2, 20);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = size(rng);
    auto s = testing::discrete_space(static_cast<std::size_t>(n));
    const Eigen::MatrixXd pm = oracle::random_stochastic(n, rng, 0.5);
    auto p = op(s, pm);
    CHECK(p.markovian());

    BoundedFunction f(s, oracle::random_vector(n, rng));
    SignedMeasure mu(s, oracle::random_vector(n, rng));
    CHECK(duality_consistency(p, f, mu).residual <= 1e-12);

    CHECK(std::abs(forward_operator_norm(p) - adjoint_operator_norm(p)) <= 1e-12);
    CHECK(std::abs(forward_operator_norm(p) - p.bound()) <= 1e-12);

    std::uniform_int_distribution<int> e(0, 12);
    const int m = e(rng), k = e(rng);
    const Eigen::MatrixXd lhs = power(p, static_cast<std::size_t>(m + k)).kernel().dense();
    const Eigen::MatrixXd rhs =
        compose(power(p, static_cast<std::size_t>(m)), power(p, static_cast<std::size_t>(k))).kernel().dense();
    CHECK(max_abs(lhs - rhs) <= 1e-12);
    CHECK(max_abs(lhs - oracle::matrix_power(pm, m + k)) <= 1e-12);
  }
}

TEST_CASE("signed kernels: forward and adjoint operator norms agree") {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = testing::discrete_space(6);
    Eigen::MatrixXd m(6, 6);
    for (int i = 0; i < 6; ++i) m.row(i) = oracle::random_vector(6, rng).transpose();
    std::vector<double> leak(6);
    for (auto& l : leak) l = oracle::random_vector(1, rng)(0);
    KernelOperator k(Kernel::from_dense(s, m, leak));
    CHECK(std::abs(forward_operator_norm(k) - adjoint_operator_norm(k)) <= 1e-12);
    CHECK(std::abs(forward_operator_norm(k) - k.bound()) <= 1e-12);
  }
}

TEST_CASE("composition is associative") {
  std::mt19937_64 rng(35);
  for (int trial = 0; trial < 30; ++trial) {
    auto s = testing::discrete_space(8);
    auto a = op(s, oracle::random_stochastic(8, rng, 0.4));
    auto b = op(s, oracle::random_stochastic(8, rng, 0.4));
    auto c = op(s, oracle::random_stochastic(8, rng, 0.4));
    CHECK(max_abs(compose(compose(a, b), c).kernel().dense() - compose(a, compose(b, c)).kernel().dense()) <= 1e-12);
  }
}

TEST_CASE("Markov operators preserve constants and probability") {
  std::mt19937_64 rng(36);
  auto s = testing::discrete_space(10);
  auto p = op(s, oracle::random_stochastic(10, rng, 0.3));
  auto one = forward_apply(p, BoundedFunction::constant(s, 1.0));
  CHECK(max_abs(one.values() - Eigen::VectorXd::Ones(10)) <= 1e-15);
  SignedMeasure prob(s, oracle::random_vector(10, rng, 0, 1));
  prob *= 1.0 / prob.total_mass();
  auto image = adjoint_apply(p, prob);
  CHECK(image.weights().minCoeff() >= 0.0);
  CHECK(image.total_mass() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("power cache is safe under concurrent use") {
  std::mt19937_64 rng(37);
  auto s = testing::discrete_space(12);
  const Eigen::MatrixXd pm = oracle::random_stochastic(12, rng, 0.5);
  auto p = op(s, pm);
  std::vector<Eigen::MatrixXd> results(8);
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] { results[static_cast<std::size_t>(t)] = power(p, 37 + static_cast<std::size_t>(t)).kernel().dense(); });
  for (auto& th : threads) th.join();
  for (int t = 0; t < 8; ++t) CHECK(max_abs(results[static_cast<std::size_t>(t)] - oracle::matrix_power(pm, 37 + t)) <= 1e-12);
}
