#include "meanerg/runner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "meanerg/averaging.hpp"
#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"
#include "meanerg/fixed_space.hpp"
#include "meanerg/probes.hpp"
#include "meanerg/projection.hpp"

#ifndef MEANERG_FIXTURES_DIR
#define MEANERG_FIXTURES_DIR "fixtures"
#endif

namespace meanerg {

namespace {

double flag(bool b) { return b ? 1.0 : 0.0; }

std::vector<KernelOperator> average_operators(const AverageScheme& scheme) {
  std::vector<KernelOperator> ops;
  for (std::size_t i = 0; i < scheme.grid_size(); ++i) ops.push_back(scheme.average_operator(i).value);
  return ops;
}

double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return a.size() ? (a - b).cwiseAbs().maxCoeff() : 0.0;
}

io::Json quantities_report(const Reproduction& r) {
  io::Json j;
  j["example"] = r.example;
  j["model"] = {{"name", r.model.name}, {"params", r.model.params}, {"states", r.model.space->size()},
                {"truncation_level", r.model.space->truncation_level()}, {"depth", r.model.space->depth()}};
  j["quantities"] = to_json(r.quantities);
  j["verdict"] = r.verdict;
  return j;
}

}  // namespace

Reproduction reproduce_ex61(const Params& params) {
  Reproduction r{"ex61", build_model("summing_l1", params), {}, {}, {}};
  const Model& m = r.model;
  const auto n_states = m.space->size();
  const auto& s = m.step;
  auto& q = r.quantities;

  const auto a4 = cesaro_avg(s, 4, m.measure("e2"));
  q.emplace_back("A4_e2[1]", a4(0));
  q.emplace_back("A4_e2[2]", a4(1));

  std::vector<std::size_t> grid = SchemeSpec::doubling_grid(1024);
  grid.insert(grid.end(), {3, 5, 100, 1000});
  std::sort(grid.begin(), grid.end());
  const auto mus = cesaro_sequence(s, grid, m.measure("e2"));
  const auto fs = cesaro_sequence(s, grid, m.function("e1"));
  double e2_err = 0.0, adj_err = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double n = static_cast<double>(grid[i]);
    Eigen::VectorXd expected = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_states));
    expected(0) = 1.0 - 1.0 / n;
    expected(1) = 1.0 / n;
    e2_err = std::max(e2_err, max_abs_diff(mus[i].weights(), expected));
    for (std::size_t k = 1; k <= std::min<std::size_t>(grid[i], n_states); ++k)
      adj_err = std::max(adj_err, std::abs(fs[i](k - 1) - (n - static_cast<double>(k) + 1.0) / n));
  }
  q.emplace_back("A_n_e2_closed_form_error", e2_err);
  q.emplace_back("adjoint_closed_form_error", adj_err);

  std::vector<std::size_t> escape_grid;
  for (std::size_t k = 1; k <= n_states; ++k) escape_grid.push_back(100 * k);
  const auto tail = cesaro_sequence(s, escape_grid, m.function("e1"));
  double escape_min = 1.0;
  for (std::size_t k = 1; k <= n_states; ++k) escape_min = std::min(escape_min, tail[k - 1](k - 1));
  q.emplace_back("escape_coordinate_min", escape_min);

  const auto est = estimate_projection(m.scheme(m.schemes.front()));
  q.emplace_back("projection_certified", flag(est.certified()));
  const auto& p = *est.projection;
  const double fwd = tv_norm(adjoint_apply(p, m.measure("e2")) - m.measure("e1"));
  q.emplace_back("forward_limit_tv_error", fwd);
  const auto limit = forward_apply(p, m.function("e1"));
  q.emplace_back("adjoint_limit_min", limit.values().minCoeff());
  q.emplace_back("adjoint_limit_last", limit(n_states - 1));

  if (est.certified() && fwd <= 1e-9)
    r.verdict.push_back("forward sigma-convergent: A_n e2 -> e1");
  else
    r.verdict.push_back("forward convergence not certified");
  if (escape_min >= 0.99 && limit.values().minCoeff() >= 1.0 - 1e-9)
    r.verdict.push_back("adjoint pointwise limit 1 is not in c0: every coordinate reaches 0.99 by n = 100 m");
  else
    r.verdict.push_back("adjoint escape not certified");

  r.report = quantities_report(r);
  r.report["projection"] = io::to_json(est);
  return r;
}

Reproduction reproduce_ex62(const Params& params) {
  Reproduction r{"ex62", build_model("z_infinity", params), {}, {}, {}};
  const Model& m = r.model;
  const auto& sp = *m.space;
  const std::size_t inf = sp.index("inf");
  auto& q = r.quantities;
  const std::vector<std::size_t> at_inf = {inf};

  // Forward scheme.
  const auto fwd = m.scheme(m.schemes.front());
  ProjectionOptions popts;
  popts.topology = Topology::beta0;
  const auto est = estimate_projection(fwd, popts);
  q.emplace_back("fwd_projection_certified", flag(est.certified()));
  for (const char* key : {"dist_inf", "1_N_inf"}) {
    const auto& f = m.function(key);
    const auto pf = forward_apply(*est.projection, f);
    double err = 0.0;
    for (auto x : m.probe_points) err = std::max(err, std::abs(pf(x) - f(inf)));
    q.emplace_back(std::string("fwd_limit_error_") + key, err);
  }
  double row_err = 0.0;
  for (auto x : m.probe_points) row_err = std::max(row_err, std::abs(est.projection->kernel().row(x)(inf) - 1.0));
  q.emplace_back("fwd_limit_row_error", row_err);

  const auto fwd_ops = average_operators(fwd);
  const auto fwd_table = e_property_probe(fwd_ops, m.function("dist_inf"), at_inf, halving_radii());
  q.emplace_back("fwd_modulus_floor_inf", fwd_table.floor());
  const auto beta0 = beta0_equicontinuity_probe(fwd_ops, at_inf, VanishingWeight::default_eps_grid());
  q.emplace_back("fwd_beta0_equicontinuous_inf", flag(beta0.equicontinuous));

  EergOptions eopts;
  eopts.probe_points = m.probe_points;
  eopts.lipschitz_probes = {m.function("dist_inf")};
  const auto fv = theorem_eerg_equivalences(fwd, eopts);
  q.emplace_back("fwd_hypothesis", flag(fv.hypothesis));
  for (std::size_t i = 0; i < 4; ++i)
    q.emplace_back("fwd_assertion_" + std::to_string(i + 1), flag(fv.assertions[i].value_or(false)));
  q.emplace_back("fwd_consistent", flag(fv.consistent));

  // Backward scheme.
  const auto bwd = m.backward_scheme(m.schemes.front());
  const auto& one = m.function("1_N_inf");
  const auto seq = bwd.averages(one);
  double closed = 0.0;
  for (std::size_t i = 0; i < seq.size(); ++i) {
    const auto n = static_cast<std::size_t>(bwd.index(i));
    for (std::size_t k = 0; k <= static_cast<std::size_t>(m.params.at("N")); ++k) {
      const double expected = static_cast<double>(std::min(n, k + 1)) / static_cast<double>(n);
      closed = std::max(closed, std::abs(seq[i].value(sp.index(std::to_string(k))) - expected));
    }
    closed = std::max(closed, std::abs(seq[i].value(inf) - 1.0));
  }
  q.emplace_back("bwd_closed_form_error", closed);
  const auto bwd_ops = average_operators(bwd);
  const auto bwd_table = e_property_probe(bwd_ops, one, at_inf, halving_radii());
  q.emplace_back("bwd_modulus_floor_inf", bwd_table.floor());
  const auto bv = theorem_eerg_equivalences(bwd, eopts);
  q.emplace_back("bwd_hypothesis", flag(bv.hypothesis));
  q.emplace_back("bwd_withheld", flag(bv.withheld));
  ProjectionOptions sopts;
  sopts.topology = Topology::sigma;
  const auto best = estimate_projection(bwd, sopts);
  q.emplace_back("bwd_projection_certified", flag(best.certified()));
  const auto g = forward_apply(*best.projection, one);
  double finite_max = 0.0;
  for (auto x : m.probe_points)
    if (x != inf) finite_max = std::max(finite_max, std::abs(g(x)));
  q.emplace_back("bwd_limit_jump_at_inf", g(inf) - finite_max);

  if (fv.hypothesis && fv.consistent && fv.assertions[0].value_or(false))
    r.verdict.push_back("A has the e-property; all four assertions hold with P' delta_x = delta_inf");
  else
    r.verdict.push_back("forward scheme not certified");
  if (!bv.hypothesis && bwd_table.floor() >= 0.5 - 1e-12)
    r.verdict.push_back("A~ fails the e-property: modulus at inf stays >= 1/2; equivalence matrix withheld");
  else
    r.verdict.push_back("backward failure not certified");
  if (best.certified() && g(inf) - finite_max >= 1.0 - 1e-9)
    r.verdict.push_back("A~-limit of 1_{N u {inf}} is 1_{inf}, which is discontinuous");
  else
    r.verdict.push_back("backward limit not certified");

  r.report = quantities_report(r);
  r.report["forward"] = {{"projection", io::to_json(est)},
                         {"modulus_at_inf", io::to_json(fwd_table)},
                         {"beta0", io::to_json(beta0)},
                         {"equivalences", io::to_json(fv)}};
  r.report["backward"] = {{"modulus_at_inf", io::to_json(bwd_table)}, {"equivalences", io::to_json(bv)}};
  return r;
}

Reproduction reproduce_ex63(const Params& params, std::uint64_t seed, std::size_t candidates) {
  Reproduction r{"ex63", build_model("cycles_line", params), {}, {}, {}};
  const Model& m = r.model;
  auto& q = r.quantities;
  const auto cycles = static_cast<std::size_t>(m.params.at("M"));

  const auto fun = fixed_space(m.step, Side::function);
  const auto mea = fixed_space(m.step, Side::measure);
  q.emplace_back("fixed_dim_function", static_cast<double>(fun.dimension()));
  q.emplace_back("fixed_dim_measure", static_cast<double>(mea.dimension()));
  const auto max_res = [](const FixedSpaceBasis& b) {
    return b.residuals.empty() ? 0.0 : *std::max_element(b.residuals.begin(), b.residuals.end());
  };
  q.emplace_back("fixed_residual_function", max_res(fun));
  q.emplace_back("fixed_residual_measure", max_res(mea));

  const auto sep = separation_test(fun, mea);
  const auto d = static_cast<Eigen::Index>(std::min(fun.dimension(), mea.dimension()));
  double gram_dev = sep.gram.rows() == sep.gram.cols() && sep.gram.rows() == d
                        ? (sep.gram - Eigen::MatrixXd::Identity(d, d)).cwiseAbs().maxCoeff()
                        : std::numeric_limits<double>::infinity();
  q.emplace_back("gram_identity_error", gram_dev);
  q.emplace_back("measures_separate_functions", flag(sep.measures_separate_functions));
  q.emplace_back("functions_separate_measures", flag(sep.functions_separate_measures));

  std::vector<BoundedFunction> indicators;
  for (std::size_t n = 1; n <= cycles; ++n) indicators.push_back(m.function("1_K" + std::to_string(n)));
  const auto& delta0 = m.measure("delta_0");
  const auto& one = m.function("1_E");
  const auto sweep = obstruction_sweep(m.step, mea, indicators, delta0, one, candidates, seed);
  q.emplace_back("sweep_candidates", static_cast<double>(sweep.candidates));
  q.emplace_back("sweep_matching", static_cast<double>(sweep.matching));
  q.emplace_back("sweep_max_mismatch", sweep.max_mismatch);
  q.emplace_back("sweep_max_test_pairing", sweep.max_test_pairing);
  q.emplace_back("sweep_target_test_pairing", sweep.target_test_pairing);
  q.emplace_back("sweep_certified", flag(sweep.certified));

  const auto dec = decomposition_check(delta0, m.step, mea);
  q.emplace_back("delta0_decomposition_residual", dec.residuals.empty() ? 0.0 : dec.residuals.back());

  if (sep.both() && gram_dev <= 1e-10)
    r.verdict.push_back("fixed spaces separate each other; pairing Gram matrix is the identity");
  else
    r.verdict.push_back("separation not certified");
  if (sweep.certified)
    r.verdict.push_back("decomposition obstruction for delta_0: every candidate matching the cycle indicators pairs 0 with 1_E, delta_0 pairs 1");
  else
    r.verdict.push_back("decomposition obstruction not certified");

  r.report = quantities_report(r);
  r.report["seed"] = seed;
  r.report["fixed_functions"] = io::to_json(fun);
  r.report["fixed_measures"] = io::to_json(mea);
  r.report["separation"] = io::to_json(sep);
  r.report["sweep"] = io::to_json(sweep);
  r.report["decomposition"] = io::to_json(dec);
  return r;
}

Reproduction reproduce(const std::string& example, const Params& params, std::optional<std::uint64_t> seed) {
  if (example == "ex61") return reproduce_ex61(params);
  if (example == "ex62") return reproduce_ex62(params);
  if (example == "ex63") return reproduce_ex63(params, seed.value_or(7));
  throw DomainError("unknown example '" + example + "' (expected ex61, ex62 or ex63)");
}

Quantities model_quantities(const Model& model) {
  Quantities q;
  const auto scheme = model.scheme(model.schemes.front());
  const auto est = estimate_projection(scheme);
  q.emplace_back("projection_certified", flag(est.certified()));
  q.emplace_back("projection_invariants_ok", flag(est.invariants.ok));
  if (est.projection && model.space->size() <= 4) {
    const Eigen::MatrixXd p = est.projection->kernel().dense();
    for (Eigen::Index i = 0; i < p.rows(); ++i)
      for (Eigen::Index j = 0; j < p.cols(); ++j)
        q.emplace_back("P[" + std::to_string(i) + "][" + std::to_string(j) + "]", p(i, j));
  }
  const auto fun = fixed_space(model.step, Side::function);
  const auto mea = fixed_space(model.step, Side::measure);
  q.emplace_back("fixed_dim_function", static_cast<double>(fun.dimension()));
  q.emplace_back("fixed_dim_measure", static_cast<double>(mea.dimension()));
  q.emplace_back("separation_both", flag(separation_test(fun, mea).both()));

  std::vector<std::size_t> points = model.probe_points;
  if (points.empty())
    for (std::size_t i = 0; i < model.space->size(); ++i) points.push_back(i);
  const auto ops = average_operators(scheme);
  q.emplace_back("beta0_equicontinuous",
                 flag(beta0_equicontinuity_probe(ops, points, VanishingWeight::default_eps_grid()).equicontinuous));
  double floor = 0.0;
  for (const auto& f : bump_dictionary(model.space))
    floor = std::max(floor, e_property_probe(ops, f, points, halving_radii()).floor());
  q.emplace_back("e_property_floor", floor);
  return q;
}

FixtureComparison compare_fixture(const io::Json& fixture, const Quantities& quantities) {
  FixtureComparison out;
  if (!fixture.contains("expected") || !fixture.at("expected").is_array())
    throw ParseError("fixture has no 'expected' array");
  for (const auto& e : fixture.at("expected")) {
    FixtureCheck c;
    try {
      c.quantity = e.at("quantity").get<std::string>();
      c.expected = e.at("value").get<double>();
      c.tol = e.value("tol", 0.0);
      c.mode = e.value("mode", std::string("abs"));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("fixture entry: ") + ex.what());
    }
    if (c.mode != "abs" && c.mode != "min" && c.mode != "max") throw ParseError("unknown fixture mode '" + c.mode + "'");
    for (const auto& [name, value] : quantities)
      if (name == c.quantity) c.actual = value;
    if (c.actual) {
      const double a = *c.actual;
      if (c.mode == "abs") c.pass = std::abs(a - c.expected) <= c.tol;
      else if (c.mode == "min") c.pass = a >= c.expected - c.tol;
      else c.pass = a <= c.expected + c.tol;
    }
    if (!c.pass) out.divergent.push_back(c.quantity);
    out.checks.push_back(std::move(c));
  }
  out.passed = out.divergent.empty();
  return out;
}

std::string default_fixtures_dir() { return MEANERG_FIXTURES_DIR; }

io::Json load_fixture(const std::string& name, const std::string& dir) {
  return io::read_json_file((dir.empty() ? default_fixtures_dir() : dir) + "/" + name + ".json");
}

io::Json to_json(const Quantities& q) {
  io::Json j = io::Json::object();
  for (const auto& [k, v] : q) j[k] = io::number(v);
  return j;
}

io::Json to_json(const FixtureComparison& c) {
  io::Json checks = io::Json::array();
  for (const auto& x : c.checks)
    checks.push_back({{"quantity", x.quantity},
                      {"mode", x.mode},
                      {"expected", io::number(x.expected)},
                      {"tol", io::number(x.tol)},
                      {"actual", x.actual ? io::number(*x.actual) : io::Json(nullptr)},
                      {"pass", x.pass}});
  return {{"passed", c.passed}, {"divergent", c.divergent}, {"checks", checks}};
}

}  // namespace meanerg
