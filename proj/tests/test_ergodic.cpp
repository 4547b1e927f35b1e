#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "meanerg/averaging.hpp"
#include "meanerg/dualpair.hpp"
#include "meanerg/fixed_space.hpp"
#include "meanerg/models.hpp"
#include "meanerg/probes.hpp"
#include "meanerg/projection.hpp"
#include "oracles.hpp"

using namespace meanerg;
using testing::fn;
using testing::max_abs;
using testing::ms;
using testing::op;

namespace {

const Eigen::Matrix3d kIrreducible = (Eigen::Matrix3d() << .5, .3, .2, .2, .6, .2, .1, .4, .5).finished();

std::vector<BoundedFunction> cycle_indicators(const Model& m) {
  std::vector<BoundedFunction> v;
  for (int n = 1; n <= static_cast<int>(m.params.at("M")); ++n) v.push_back(m.function("1_K" + std::to_string(n)));
  return v;
}

}  // namespace

// ---- fixed spaces -----------------------------------------------------------

TEST_CASE("fixed spaces of an irreducible chain") {
  const Model m = build_irreducible3();
  const Eigen::Vector3d pi = oracle::stationary(kIrreducible);
  const auto fun = fixed_space(m.step, Side::function);
  const auto mea = fixed_space(m.step, Side::measure);
  REQUIRE(fun.dimension() == 1);
  REQUIRE(mea.dimension() == 1);
  CHECK(max_abs(fun.functions[0].values() - Eigen::Vector3d::Ones()) <= 1e-12);
  CHECK(max_abs(mea.measures[0].weights() - pi) <= 1e-12);
  CHECK(fun.residuals_ok(1e-10));
  CHECK(mea.residuals_ok(1e-10));
  const auto sep = separation_test(fun, mea);
  CHECK(sep.both());
  CHECK(std::abs(sep.gram(0, 0) - 1.0) <= 1e-12);
  const auto direct = sum_directness(m.step, fun);
  CHECK(direct.direct);
  CHECK(direct.range_rank == 2);
  CHECK(sum_directness(m.step, mea).direct);
}

TEST_CASE("fixed space of the identity and of a reducible chain") {
  auto s = testing::discrete_space(4);
  const auto id = fixed_space(KernelOperator::identity(s), Side::function);
  CHECK(id.dimension() == 4);
  CHECK(max_abs(id.matrix() - Eigen::MatrixXd::Identity(4, 4)) <= 1e-14);

  // Two closed classes {0, 1} and {2}, state 3 transient and split 1:3.
  Eigen::Matrix4d p;
  p << .5, .5, 0, 0, .2, .8, 0, 0, 0, 0, 1, 0, .25, 0, .75, 0;
  const auto k = op(s, p);
  const auto fun = fixed_space(k, Side::function);
  const auto mea = fixed_space(k, Side::measure);
  REQUIRE(fun.dimension() == 2);
  REQUIRE(mea.dimension() == 2);
  // Absorption probabilities: from 3, into {0,1} w.p. 1/4.
  Eigen::Vector4d h0(1, 1, 0, 0.25);
  Eigen::Vector4d h1(0, 0, 1, 0.75);
  const Eigen::MatrixXd f = fun.matrix();
  // The span is {h0, h1}.
  Eigen::MatrixXd both(4, 2);
  both << h0, h1;
  const Eigen::MatrixXd coef = both.colPivHouseholderQr().solve(f);
  CHECK(max_abs(both * coef - f) <= 1e-12);
  CHECK(separation_test(fun, mea).both());
  for (const auto& mu : mea.measures) {
    CHECK(std::abs(mu.total_mass() - 1.0) <= 1e-12);
    CHECK(std::abs(mu(3)) <= 1e-14);
  }
}

TEST_CASE("fixed space over several generators is the common kernel") {
  auto s = testing::discrete_space(3);
  Eigen::Matrix3d a, b;
  a << 0, 1, 0, 1, 0, 0, 0, 0, 1;  // swap 0 and 1
  b << 1, 0, 0, 0, 0, 1, 0, 1, 0;  // swap 1 and 2
  const std::vector<KernelOperator> gens = {op(s, a), op(s, b)};
  CHECK(fixed_space(gens[0], Side::function).dimension() == 2);
  const auto common = fixed_space(gens, Side::function);
  REQUIRE(common.dimension() == 1);
  CHECK(max_abs(common.functions[0].values() - Eigen::Vector3d::Ones()) <= 1e-12);
}

TEST_CASE("leaking rows are unresolved on the function side") {
  const Model m = build_shift_z(8);
  const auto fun = fixed_space(m.step, Side::function);
  CHECK(fun.unresolved_states.size() == 1);
  CHECK(!fun.warnings.empty());
  const auto mea = fixed_space(m.step, Side::measure);
  CHECK(mea.dimension() == 0);
}

// ---- projections ------------------------------------------------------------

TEST_CASE("ergodic projection of the irreducible chain") {
  const Model m = build_irreducible3();
  const Eigen::Vector3d pi = oracle::stationary(kIrreducible);
  const Eigen::Matrix3d expected = Eigen::Vector3d::Ones() * pi.transpose();

  const auto ces = estimate_projection(m.scheme(SchemeSpec::cesaro(SchemeSpec::doubling_grid(1024))));
  REQUIRE(ces.certified());
  CHECK(max_abs(ces.projection->kernel().dense() - expected) <= 1e-8);
  CHECK(ces.invariants.ok);
  CHECK(ces.invariants.idempotent <= 1e-8);

  const auto abel = estimate_projection(m.scheme(SchemeSpec::abel(SchemeSpec::default_abel_grid())));
  REQUIRE(abel.certified());
  CHECK(max_abs(abel.projection->kernel().dense() - ces.projection->kernel().dense()) <= 1e-6);

  const auto fit = fit_decay(m.scheme(SchemeSpec::cesaro(SchemeSpec::doubling_grid(1024))), *ces.projection, 8, 1024);
  CHECK(fit.points == 8);
  CHECK(std::abs(fit.slope + 1.0) <= 0.1);
  CHECK(fit.constant < 10.0);
}

TEST_CASE("projection of the swap is the uniform average") {
  const Model m = build_swap2();
  for (auto topo : {Topology::sigma, Topology::sigma_prime, Topology::beta0}) {
    CAPTURE(topology_name(topo));
    ProjectionOptions opts;
    opts.topology = topo;
    const auto est = estimate_projection(m.scheme(m.schemes.front()), opts);
    REQUIRE(est.certified());
    CHECK(max_abs(est.projection->kernel().dense() - Eigen::Matrix2d::Constant(0.5)) <= 1e-12);
  }
  // Raw distances: A_1 = I to A_2 = uniform, then nothing moves.
  const auto est = estimate_projection(m.scheme(m.schemes.front()));
  CHECK(std::isnan(est.raw_distance[0]));
  CHECK(est.raw_distance[1] > 0.4);
  for (std::size_t i = 2; i < est.raw_distance.size(); ++i) CHECK(est.raw_distance[i] <= 1e-15);
}

TEST_CASE("projection of the rate model from time averages") {
  const Model m = build_rate2();
  const auto est = estimate_projection(m.scheme(m.schemes.front()));
  REQUIRE(est.certified());
  CHECK(max_abs(est.projection->kernel().dense() - Eigen::Matrix2d::Constant(0.5)) <= 1e-8);
}

TEST_CASE("an escaping shift is not certified") {
  const Model m = build_shift_z(16);
  const auto est = estimate_projection(m.scheme(m.schemes.front()));
  CHECK_FALSE(est.certified());
  CHECK(est.status_name() == "inconclusive");
}

TEST_CASE("richardson weights reproduce polynomials") {
  const std::vector<double> h = {0.25, 0.125, 0.0625};
  const auto w = richardson_weights(h);
  double s0 = 0, s1 = 0, s2 = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    s0 += w[i];
    s1 += w[i] * h[i];
    s2 += w[i] * h[i] * h[i];
  }
  CHECK(std::abs(s0 - 1.0) <= 1e-14);
  CHECK(std::abs(s1) <= 1e-14);
  CHECK(std::abs(s2) <= 1e-14);
  CHECK(parse_topology("beta0") == Topology::beta0);
  CHECK_THROWS(parse_topology("weak"));
}

TEST_CASE("projection invariants detect a non-projection") {
  auto s = testing::discrete_space(2);
  const auto swap = op(s, (Eigen::Matrix2d() << 0, 1, 1, 0).finished());
  const auto bad = op(s, (Eigen::Matrix2d() << 1, 0, 0, 1).finished());
  const std::vector<KernelOperator> gens = {swap};
  const auto inv = projection_invariants_check(bad, gens);
  CHECK(inv.idempotent == 0.0);
  CHECK(inv.left[0] >= 1.0);
  CHECK_FALSE(inv.ok);
}

// ---- decomposition and obstruction ------------------------------------------

TEST_CASE("decomposition residuals for the irreducible chain vanish") {
  const Model m = build_irreducible3();
  const auto p = *estimate_projection(m.scheme(m.schemes.front())).projection;
  const auto mu = SignedMeasure::dirac(m.space, 0);
  const auto rep = decomposition_check(mu, m.step, p);
  CHECK(rep.passes);
  CHECK(rep.residuals.back() <= 1e-8);
  CHECK(rep.residuals.front() > 0.1);
  const auto frep = decomposition_check(fn(m.space, {1, -2, 0.5}), m.step, p);
  CHECK(frep.passes);
}

TEST_CASE("cycles_line: fixed spaces, Gram identity, failed decomposition of delta_0") {
  const Model m = build_cycles_line(8, 16);
  const auto fun = fixed_space(m.step, Side::function);
  const auto mea = fixed_space(m.step, Side::measure);
  REQUIRE(fun.dimension() == 8);
  REQUIRE(mea.dimension() == 8);
  CHECK(fun.residuals_ok(1e-10));
  CHECK(mea.residuals_ok(1e-10));
  for (int n = 1; n <= 8; ++n)
    CHECK(max_abs(mea.measures[static_cast<std::size_t>(n - 1)].weights() -
                  m.measure("zeta_" + std::to_string(n)).weights()) <= 1e-10);
  for (int n = 1; n < 8; ++n)
    CHECK(max_abs(fun.functions[static_cast<std::size_t>(n - 1)].values() -
                  m.function("1_K" + std::to_string(n)).values()) <= 1e-10);
  // The last cycle is glued to the line by continuity.
  const auto& last = fun.functions.back();
  CHECK(last(m.space->index("c8_3")) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(last(m.space->index("z5")) == doctest::Approx(1.0).epsilon(1e-12));

  const auto sep = separation_test(fun, mea);
  CHECK(max_abs(sep.gram - Eigen::MatrixXd::Identity(8, 8)) <= 1e-10);
  CHECK(sep.both());

  const auto delta0 = m.measure("delta_0");
  const auto indicators = cycle_indicators(m);

  const auto w = obstruction_witness(m.measure("zeta_2"), delta0, indicators, m.function("1_E"));
  CHECK(w.candidate_pairings(1) == doctest::Approx(1.0));
  CHECK(w.candidate_pairings.sum() == doctest::Approx(1.0));
  const auto nu = SignedMeasure::dirac(m.space, m.space->index("c2_0"));
  const auto range = nu - adjoint_apply(m.step, nu);
  const auto wr = obstruction_witness(range, delta0, indicators, m.function("1_E"));
  CHECK(max_abs(wr.candidate_pairings) <= 1e-15);
  CHECK(std::abs(wr.test_pairing) <= 1e-15);
  CHECK(wr.matches);
  CHECK(wr.obstructs);

  const auto sweep = obstruction_sweep(m.step, mea, indicators, delta0, m.function("1_E"), 1000, 7);
  CHECK(sweep.candidates == 1000);
  CHECK(sweep.matching == 1000);
  CHECK(sweep.max_mismatch <= 1e-9);
  CHECK(sweep.max_test_pairing <= 1e-8);
  CHECK(sweep.target_test_pairing == 1.0);
  CHECK(sweep.certified);

  // Least squares against the fixed basis and growing range generators stays
  // bounded away from delta_0.
  const auto rep = decomposition_check(delta0, m.step, mea);
  CHECK_FALSE(rep.passes);
  CHECK(rep.residuals.back() >= 0.01);
}

// ---- clusters ---------------------------------------------------------------

TEST_CASE("cluster detector cases") {
  auto s = testing::discrete_space(2);
  std::vector<BoundedFunction> alt;
  for (int i = 0; i < 40; ++i) alt.push_back(fn(s, {double(i % 2), 0}));
  const auto va = cluster_detector(alt);
  CHECK(va.status == ClusterStatus::clusters_multiple_limits);
  CHECK(va.witnesses.size() == 2);

  // delta_n on a line: pairwise bl distance 2 once points are 2 apart.
  std::vector<double> coords;
  for (int i = 0; i < 64; ++i) coords.push_back(2.0 * i);
  auto line = testing::line_space(coords);
  std::vector<SignedMeasure> walk;
  for (std::size_t i = 0; i < 64; ++i) walk.push_back(SignedMeasure::dirac(line, i));
  const auto vw = cluster_detector(walk);
  CHECK(vw.status == ClusterStatus::escapes);

  // Powers of an aperiodic chain converge geometrically; the raw net settles.
  const Model m = build_irreducible3();
  const Eigen::Vector3d pi = oracle::stationary(kIrreducible);
  const double mean = pi.dot(Eigen::Vector3d(1.0, -2.0, 0.5));
  std::vector<BoundedFunction> orbit;
  for (std::size_t n = 0; n < 64; ++n) orbit.push_back(forward_apply(power(m.step, n), m.function("f")));
  ClusterOptions opts;
  opts.fixed_check = m.step;
  const auto vp = cluster_detector(orbit, opts);
  CHECK(vp.status == ClusterStatus::convergent);
  REQUIRE(vp.in_fixed_space.has_value());
  CHECK(*vp.in_fixed_space);
  CHECK(max_abs(vp.limit - Eigen::Vector3d::Constant(mean)) <= 1e-3);

  // Cesaro averages converge at rate 1/n, so they are netted on their
  // extrapolants in 1/n, over a grid long enough for the transient to stay in
  // the first half of the sample.
  const auto scheme = m.scheme(SchemeSpec::cesaro(SchemeSpec::doubling_grid(1 << 16)));
  std::vector<BoundedFunction> avgs;
  for (auto& e : scheme.averages(m.function("f"))) avgs.push_back(e.value);
  // With extrapolation in 1/n the limit is recovered far more precisely.
  std::vector<double> h;
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) h.push_back(scheme.h(i));
  opts.h = h;
  opts.eps = 1e-9;
  const auto ve = cluster_detector(avgs, opts);
  CHECK(ve.status == ClusterStatus::convergent);
  REQUIRE(ve.in_fixed_space.has_value());
  CHECK(*ve.in_fixed_space);
  CHECK(*ve.fixed_residual <= 1e-8);
  CHECK(max_abs(ve.limit - Eigen::Vector3d::Constant(mean)) <= 1e-8);
}

// ---- e-property and beta0 ---------------------------------------------------

TEST_CASE("shift: e-property with Lipschitz modulus, no beta0-equicontinuity") {
  const Model m = build_shift_z(32);
  const auto& bump = m.function("bump");
  std::vector<KernelOperator> powers;
  for (std::size_t n = 0; n <= 16; ++n) powers.push_back(power(m.step, n));
  const auto radii = std::vector<double>{4.5, 2.5, 1.5};
  const auto table = e_property_probe(powers, bump, m.probe_points, radii);
  for (Eigen::Index i = 0; i < table.modulus.rows(); ++i)
    for (Eigen::Index j = 0; j < table.modulus.cols(); ++j)
      CHECK(table.modulus(i, j) <= radii[static_cast<std::size_t>(j)] / 8.0 + 1e-15);

  // Past 2N steps every atom has left the truncation.
  for (std::size_t n = 17; n <= 66; ++n) powers.push_back(power(m.step, n));
  const std::size_t origin = m.space->index("0");
  const std::vector<std::size_t> k = {origin};
  const std::vector<double> eps = {0.5, 0.1};
  const auto prof = beta0_equicontinuity_probe(powers, k, eps);
  CHECK_FALSE(prof.equicontinuous);
  CHECK_FALSE(prof.index[0].has_value());
}

TEST_CASE("e-property inheritance: averages stay within twice the semigroup modulus") {
  const Model m = build_shift_z(32);
  const auto& bump = m.function("bump");
  const auto radii = halving_radii(8.0, 4);
  std::vector<KernelOperator> powers, averages;
  for (std::size_t n = 0; n <= 64; ++n) powers.push_back(power(m.step, n));
  for (std::size_t n : SchemeSpec::doubling_grid(64)) averages.push_back(cesaro_operator(m.step, n));
  for (double r : {0.5, 0.9}) averages.push_back(abel_operator(m.step, r).value);
  const auto semi = e_property_probe(powers, bump, m.probe_points, radii);
  const auto avg = e_property_probe(averages, bump, m.probe_points, radii);
  for (Eigen::Index j = 0; j < semi.modulus.cols(); ++j) {
    const double eps = semi.modulus.col(j).maxCoeff();
    CHECK(avg.modulus.col(j).maxCoeff() <= 2.0 * eps + 1e-15);
  }
  CHECK(avg.dominated_by(semi, 2.0));
}

TEST_CASE("beta0 probe cases") {
  const Model ir = build_irreducible3();
  std::vector<KernelOperator> ops = {ir.step, power(ir.step, 5)};
  const std::vector<std::size_t> all = {0, 1, 2};
  const auto fin = beta0_equicontinuity_probe(ops, all, VanishingWeight::default_eps_grid());
  CHECK(fin.equicontinuous);
  for (const auto& i : fin.index) CHECK(i == 1);

  const Model z = build_z_infinity(32);
  std::vector<KernelOperator> avgs;
  for (std::size_t n : SchemeSpec::doubling_grid(256)) avgs.push_back(cesaro_operator(z.step, n));
  const std::vector<std::size_t> at_inf = {z.space->index("inf")};
  CHECK(beta0_equicontinuity_probe(avgs, at_inf, VanishingWeight::default_eps_grid()).equicontinuous);
}

// ---- the equivalence matrix -------------------------------------------------

TEST_CASE("equivalences on the irreducible chain") {
  const Model m = build_irreducible3();
  EergOptions opts;
  opts.probe_points = m.probe_points;
  const auto v = theorem_eerg_equivalences(m.scheme(m.schemes.front()), opts);
  CHECK(v.markovian);
  CHECK(v.hypothesis);
  CHECK_FALSE(v.withheld);
  for (const auto& a : v.assertions) CHECK(a == true);
  CHECK(v.consistent);
}

TEST_CASE("z_infinity forward: pointwise limit f(inf) and all four assertions") {
  const Model m = build_z_infinity(64);
  const auto scheme = m.scheme(m.schemes.front());
  const std::size_t inf = m.space->index("inf");

  ProjectionOptions popts;
  popts.topology = Topology::beta0;
  const auto est = estimate_projection(scheme, popts);
  REQUIRE(est.certified());
  for (const char* key : {"dist_inf", "1_N_inf"}) {
    const auto& f = m.function(key);
    const auto pf = forward_apply(*est.projection, f);
    for (auto x : m.probe_points) CHECK(std::abs(pf(x) - f(inf)) <= 1e-9);
  }

  std::vector<KernelOperator> avgs;
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) avgs.push_back(scheme.average_operator(i).value);
  const std::vector<std::size_t> at_inf = {inf};
  const auto table = e_property_probe(avgs, m.function("dist_inf"), at_inf, halving_radii());
  for (Eigen::Index j = 1; j < table.modulus.cols(); ++j) CHECK(table.modulus(0, j) <= table.modulus(0, j - 1));
  CHECK(table.floor() <= 0.1);

  EergOptions opts;
  opts.probe_points = m.probe_points;
  opts.lipschitz_probes = {m.function("dist_inf")};
  const auto v = theorem_eerg_equivalences(scheme, opts);
  CHECK(v.hypothesis);
  CHECK_FALSE(v.withheld);
  for (const auto& a : v.assertions) CHECK(a == true);
  CHECK(v.consistent);
  // P' delta_x = delta_inf.
  for (auto x : m.probe_points) CHECK(std::abs(est.projection->kernel().row(x)(inf) - 1.0) <= 1e-9);
}

TEST_CASE("z_infinity backward: modulus floor at infinity, matrix withheld") {
  const Model m = build_z_infinity(64);
  const auto scheme = m.backward_scheme(m.schemes.front());
  const std::size_t inf = m.space->index("inf");
  std::vector<KernelOperator> avgs;
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) avgs.push_back(scheme.average_operator(i).value);
  const std::vector<std::size_t> at_inf = {inf};
  const auto table = e_property_probe(avgs, m.function("1_N_inf"), at_inf, halving_radii());
  for (Eigen::Index j = 0; j < table.modulus.cols(); ++j) CHECK(table.modulus(0, j) >= 0.5 - 1e-12);

  EergOptions opts;
  opts.probe_points = m.probe_points;
  opts.lipschitz_probes = {m.function("dist_inf")};
  const auto v = theorem_eerg_equivalences(scheme, opts);
  CHECK(v.markovian);
  CHECK_FALSE(v.hypothesis);
  CHECK(v.withheld);
  CHECK_FALSE(v.diagnosis.empty());
  for (const auto& a : v.assertions) CHECK_FALSE(a.has_value());
  CHECK(v.hypothesis_table.floor() >= 0.5 - 1e-12);
}

TEST_CASE("non-Markovian schemes withhold the matrix") {
  auto s = testing::discrete_space(2);
  const AverageScheme scheme(op(s, (Eigen::Matrix2d() << 0.5, 0, 0, 0.5).finished()), SchemeSpec::cesaro({1, 2, 4}));
  const auto v = theorem_eerg_equivalences(scheme);
  CHECK_FALSE(v.markovian);
  CHECK(v.withheld);
}

// ---- invariants -------------------------------------------------------------

TEST_CASE("exact fixed points survive every average bit for bit") {
  // Fixed points with S f == f and S' mu == mu exactly in floating point.
  struct Case {
    KernelOperator s;
    BoundedFunction f;
    SignedMeasure mu;
  };
  auto d3 = testing::discrete_space(3);
  const auto dyadic = op(d3, (Eigen::Matrix3d() << .5, .25, .25, .25, .5, .25, .25, .25, .5).finished());
  const Model cyc = build_cycles_line(4, 8);
  const Model z = build_z_infinity(16);
  std::vector<Case> cases = {
      {dyadic, BoundedFunction::constant(d3, 1.0), ms(d3, {0.25, 0.25, 0.25})},
      {cyc.step, cyc.function("1_K3"), cyc.measure("zeta_3")},
      {cyc.step, cyc.function("1_E"), 0.75 * cyc.measure("zeta_2")},
      {z.step, BoundedFunction::constant(z.space, -2.5), 3.0 * z.measure("delta_inf")},
  };
  for (std::size_t c = 0; c < cases.size(); ++c) {
    CAPTURE(c);
    const auto& [s, f, mu] = cases[c];
    REQUIRE(forward_apply(s, f).values() == f.values());
    REQUIRE(adjoint_apply(s, mu).weights() == mu.weights());
    for (const auto& spec : {SchemeSpec::cesaro({1, 3, 17, 200}), SchemeSpec::abel({0.5, 0.9, 0.999})}) {
      const AverageScheme scheme(s, spec);
      for (const auto& e : scheme.averages(f)) CHECK(e.value.values() == f.values());
      for (const auto& e : scheme.averages(mu)) CHECK(e.value.weights() == mu.weights());
    }
  }
  const Model rate = build_rate2();
  const auto half = BoundedFunction::constant(rate.space, 0.5);
  for (const auto& e : rate.scheme(rate.schemes.front()).averages(half)) CHECK(max_abs(e.value.values().array() - 0.5) <= 1e-15);
}

TEST_CASE("cluster points of averages are fixed points") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    auto s = testing::discrete_space(6);
    const auto k = op(s, oracle::random_stochastic(6, rng, 0.4));
    const AverageScheme scheme(k, SchemeSpec::cesaro(SchemeSpec::doubling_grid(1 << 14)));
    std::vector<double> h;
    for (std::size_t i = 0; i < scheme.grid_size(); ++i) h.push_back(scheme.h(i));
    const auto f = BoundedFunction(s, oracle::random_vector(6, rng));
    std::vector<BoundedFunction> fs;
    for (auto& e : scheme.averages(f)) fs.push_back(e.value);
    const auto mu = SignedMeasure(s, oracle::random_vector(6, rng, 0.0, 1.0));
    std::vector<SignedMeasure> mus;
    for (auto& e : scheme.averages(mu)) mus.push_back(e.value);
    ClusterOptions opts;
    opts.fixed_check = k;
    opts.h = h;
    opts.eps = 1e-6;
    const auto vf = cluster_detector(fs, opts);
    const auto vm = cluster_detector(mus, opts);
    CAPTURE(trial);
    CHECK(vf.status == ClusterStatus::convergent);
    CHECK(vm.status == ClusterStatus::convergent);
    CHECK(*vf.fixed_residual <= 1e-8);
    CHECK(*vm.fixed_residual <= 1e-8);
  }
}
