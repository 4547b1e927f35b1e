#include "meanerg/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "meanerg/errors.hpp"

namespace meanerg::io {

namespace {

const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  return j.at(key);
}

std::size_t state_of(const StateSpace& space, const Json& j) {
  if (!j.is_string()) throw ParseError("state names must be strings");
  const auto i = space.find(j.get<std::string>());
  if (!i) throw ParseError("unknown state '" + j.get<std::string>() + "'");
  return *i;
}

Json vector_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(number(v(i)));
  return a;
}

Json vector_json(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

Json optional_bool(const std::optional<bool>& b) { return b ? Json(*b) : Json(nullptr); }

Json optional_double(const std::optional<double>& d) { return d ? number(*d) : Json(nullptr); }

double get_double(const Json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

}  // namespace

Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_json(Eigen::VectorXd(m.row(i).transpose())));
  return rows;
}

// ---- core types ---------------------------------------------------------------

Json to_json(const StateSpace& space) {
  Json j;
  j["states"] = space.names();
  Json metric;
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, DiscreteMetric>) {
          metric["kind"] = "discrete";
        } else if constexpr (std::is_same_v<M, EuclideanMetric>) {
          metric["kind"] = "euclidean";
          metric["dim"] = m.dim;
          metric["coords"] = m.coords;
        } else {
          metric["kind"] = "matrix";
          metric["distances"] = m.distances;
        }
      },
      space.metric());
  j["metric"] = metric;
  j["levels"] = space.levels();
  Json inf = Json::array();
  for (auto i : space.infinity_points()) inf.push_back(space.name(i));
  j["infinity_points"] = inf;
  j["truncation_level"] = space.truncation_level();
  Json ties = Json::array();
  for (auto [a, b] : space.continuity_ties()) ties.push_back({space.name(a), space.name(b)});
  j["continuity_ties"] = ties;
  return j;
}

SpacePtr space_from_json(const Json& j) {
  StateSpace::Config c;
  try {
    c.names = field(j, "states").get<std::vector<std::string>>();
    if (j.contains("metric")) {
      const Json& m = j.at("metric");
      const auto kind = field(m, "kind").get<std::string>();
      if (kind == "discrete") {
        c.metric = DiscreteMetric{};
      } else if (kind == "euclidean") {
        c.metric = EuclideanMetric{field(m, "dim").get<std::size_t>(),
                                   field(m, "coords").get<std::vector<double>>()};
      } else if (kind == "matrix") {
        c.metric = MatrixMetric{field(m, "distances").get<std::vector<double>>()};
      } else {
        throw ParseError("unknown metric kind '" + kind + "'");
      }
    }
    if (j.contains("levels")) c.levels = j.at("levels").get<std::vector<int>>();
    if (j.contains("truncation_level")) c.truncation_level = j.at("truncation_level").get<std::size_t>();
    auto position = [&](const Json& s) {
      const auto name = s.get<std::string>();
      for (std::size_t i = 0; i < c.names.size(); ++i)
        if (c.names[i] == name) return i;
      throw ParseError("unknown state '" + name + "'");
    };
    if (j.contains("infinity_points"))
      for (const auto& s : j.at("infinity_points")) c.infinity_points.push_back(position(s));
    if (j.contains("continuity_ties"))
      for (const auto& t : j.at("continuity_ties")) {
        if (!t.is_array() || t.size() != 2) throw ParseError("continuity ties are pairs of state names");
        c.continuity_ties.emplace_back(position(t[0]), position(t[1]));
      }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("state space: ") + e.what());
  }
  try {
    return StateSpace::create(std::move(c));
  } catch (const DomainError& e) {
    throw ParseError(std::string("state space: ") + e.what());
  }
}

Json to_json(const TailRule& tail, const StateSpace& space) {
  switch (tail.kind()) {
    case TailRule::Kind::none:
      return {{"kind", "none"}};
    case TailRule::Kind::zero:
      return {{"kind", "zero"}};
    case TailRule::Kind::constant:
      return {{"kind", "constant"}, {"value", tail.constant_value()}};
    case TailRule::Kind::at_infinity:
      return {{"kind", "at_infinity"}, {"state", space.name(tail.infinity_state())}};
  }
  return nullptr;
}

TailRule tail_from_json(const Json& j, const StateSpace& space) {
  const auto kind = field(j, "kind").get<std::string>();
  if (kind == "none") return TailRule::none();
  if (kind == "zero") return TailRule::zero();
  if (kind == "constant") return TailRule::constant(get_double(field(j, "value"), "tail value"));
  if (kind == "at_infinity") return TailRule::at_infinity(state_of(space, field(j, "state")));
  throw ParseError("unknown tail rule '" + kind + "'");
}

Json to_json(const BoundedFunction& f) {
  Json values;
  for (std::size_t i = 0; i < f.size(); ++i) values[f.space()->name(i)] = f(i);
  Json j;
  j["values"] = values;
  j["tail"] = to_json(f.tail(), *f.space());
  j["lip_hint"] = optional_double(f.lip_hint());
  return j;
}

BoundedFunction function_from_json(const Json& j, const SpacePtr& space) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
  for (const auto& [name, value] : field(j, "values").items())
    v(static_cast<Eigen::Index>(state_of(*space, Json(name)))) = get_double(value, "function value");
  const TailRule tail = j.contains("tail") ? tail_from_json(j.at("tail"), *space) : TailRule::none();
  std::optional<double> lip;
  if (j.contains("lip_hint") && !j.at("lip_hint").is_null()) lip = get_double(j.at("lip_hint"), "lip_hint");
  return BoundedFunction(space, std::move(v), tail, lip);
}

Json to_json(const SignedMeasure& mu) {
  Json weights = Json::object();
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu(i) != 0.0) weights[mu.space()->name(i)] = mu(i);
  Json j;
  j["weights"] = weights;
  j["escaped"] = mu.escaped();
  return j;
}

SignedMeasure measure_from_json(const Json& j, const SpacePtr& space) {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
  for (const auto& [name, value] : field(j, "weights").items())
    w(static_cast<Eigen::Index>(state_of(*space, Json(name)))) += get_double(value, "weight");
  const double escaped = j.contains("escaped") ? get_double(j.at("escaped"), "escaped") : 0.0;
  return SignedMeasure(space, std::move(w), escaped);
}

Json to_json(const Kernel& k) {
  const auto& space = *k.space();
  Json rows = Json::object();
  for (std::size_t x = 0; x < k.size(); ++x) {
    Json row = Json::array();
    const auto idx = k.rows().row_index(x);
    const auto val = k.rows().row_value(x);
    for (std::size_t e = 0; e < idx.size(); ++e) row.push_back({{"target", space.name(idx[e])}, {"weight", val[e]}});
    rows[space.name(x)] = row;
  }
  Json leakage = Json::object();
  for (std::size_t x = 0; x < k.size(); ++x)
    if (k.leakage()[x] != 0.0) leakage[space.name(x)] = k.leakage()[x];
  Json j;
  j["schema"] = kKernelSchema;
  j["space"] = to_json(space);
  j["rows"] = rows;
  j["leakage"] = leakage;
  return j;
}

Kernel kernel_from_json(const Json& j, SpacePtr space) {
  if (j.contains("schema") && j.at("schema") != kKernelSchema)
    throw ParseError("unsupported kernel schema " + j.at("schema").dump());
  if (!space) space = space_from_json(field(j, "space"));
  std::vector<std::vector<KernelEntry>> rows(space->size());
  std::vector<double> leakage(space->size(), 0.0);
  try {
    for (const auto& [name, row] : field(j, "rows").items()) {
      const auto x = state_of(*space, Json(name));
      if (!row.is_array()) throw ParseError("kernel row '" + name + "' must be an array");
      for (const auto& e : row)
        rows[x].push_back({state_of(*space, field(e, "target")), get_double(field(e, "weight"), "weight")});
    }
    if (j.contains("leakage"))
      for (const auto& [name, l] : j.at("leakage").items())
        leakage[state_of(*space, Json(name))] = get_double(l, "leakage");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("kernel: ") + e.what());
  }
  return Kernel::from_rows(space, rows, std::move(leakage));
}

Json to_json(const SchemeSpec& spec) {
  Json j;
  j["kind"] = spec.kind_name();
  j["grid"] = spec.grid;
  j["norm_bound"] = spec.norm_bound;
  j["series_eps"] = spec.series_eps;
  if (spec.kind == SchemeSpec::Kind::time) j["time_step"] = spec.time_step;
  return j;
}

SchemeSpec scheme_from_json(const Json& j) {
  SchemeSpec s;
  const auto kind = field(j, "kind").get<std::string>();
  if (kind == "cesaro") s.kind = SchemeSpec::Kind::cesaro;
  else if (kind == "abel") s.kind = SchemeSpec::Kind::abel;
  else if (kind == "time") s.kind = SchemeSpec::Kind::time;
  else throw ParseError("unknown scheme kind '" + kind + "'");
  s.grid = field(j, "grid").get<std::vector<double>>();
  if (j.contains("norm_bound")) s.norm_bound = get_double(j.at("norm_bound"), "norm_bound");
  if (j.contains("series_eps")) s.series_eps = get_double(j.at("series_eps"), "series_eps");
  if (j.contains("time_step")) s.time_step = get_double(j.at("time_step"), "time_step");
  try {
    s.validate();
  } catch (const DomainError& e) {
    throw ParseError(e.what());
  }
  return s;
}

Json to_json(const Model& m) {
  Json j;
  j["name"] = m.name;
  j["params"] = m.params;
  j["kernel"] = to_json(m.step.kernel());
  if (m.backward) j["backward_kernel"] = to_json(m.backward->kernel());
  if (m.rates) j["rates"] = matrix_json(m.rates->q());
  Json schemes = Json::array();
  for (const auto& s : m.schemes) schemes.push_back(to_json(s));
  j["schemes"] = schemes;
  Json probes = Json::array();
  for (auto x : m.probe_points) probes.push_back(m.space->name(x));
  j["probe_points"] = probes;
  Json functions = Json::object();
  for (const auto& [k, f] : m.functions) functions[k] = to_json(f);
  j["functions"] = functions;
  Json measures = Json::object();
  for (const auto& [k, mu] : m.measures) measures[k] = to_json(mu);
  j["measures"] = measures;
  return j;
}

// ---- reports ------------------------------------------------------------------

Json to_json(const SchemeReport& r) {
  Json j;
  j["scheme"] = r.scheme;
  j["grid"] = r.grid;
  j["norm_bound"] = r.norm_bound;
  j["as1"] = {{"norms", vector_json(r.as1_norms)}, {"sup", number(r.as1_sup)}, {"ok", r.as1_ok}};
  j["as3"] = {{"function_decay", vector_json(r.as3_function_decay)},
              {"measure_decay", vector_json(r.as3_measure_decay)},
              {"markov_bound_ok", optional_bool(r.as3_bound_ok)}};
  j["identity"] = {{"residuals", vector_json(r.identity_residuals)},
                   {"tolerance", number(r.identity_tolerance)},
                   {"ok", r.identity_ok}};
  j["hull"] = {{"violations", vector_json(r.hull_violations)}, {"ok", r.hull_ok}};
  return j;
}

Json to_json(const ProjectionInvariants& inv) {
  return {{"idempotent", number(inv.idempotent)},
          {"left", vector_json(inv.left)},
          {"right", vector_json(inv.right)},
          {"tolerance", number(inv.tolerance)},
          {"ok", inv.ok}};
}

Json to_json(const ProjectionEstimate& e) {
  Json j;
  j["status"] = e.status_name();
  j["topology"] = topology_name(e.topology);
  j["grid"] = e.grid;
  j["raw_distance"] = vector_json(e.raw_distance);
  j["extrapolated_distance"] = vector_json(e.extrapolated_distance);
  j["plateau_end"] = e.plateau_end ? Json(e.grid[*e.plateau_end]) : Json(nullptr);
  j["invariants"] = to_json(e.invariants);
  if (e.projection) {
    j["projection"] = matrix_json(e.projection->kernel().dense());
    j["projection_leakage"] = e.projection->kernel().leakage();
  }
  j["notes"] = e.notes;
  return j;
}

Json to_json(const FixedSpaceBasis& b) {
  Json j;
  j["side"] = side_name(b.side);
  j["dimension"] = b.dimension();
  Json basis = Json::array();
  if (b.side == Side::function)
    for (const auto& f : b.functions) basis.push_back(vector_json(f.values()));
  else
    for (const auto& mu : b.measures) basis.push_back(vector_json(mu.weights()));
  j["basis"] = basis;
  j["residuals"] = vector_json(b.residuals);
  j["singular_values"] = vector_json(b.singular_values);
  j["threshold"] = number(b.threshold);
  const Json unresolved = b.unresolved_states;
  j["unresolved_states"] = unresolved;
  j["warnings"] = b.warnings;
  return j;
}

Json to_json(const SeparationVerdict& v) {
  return {{"gram", matrix_json(v.gram)},
          {"measures_separate_functions", v.measures_separate_functions},
          {"functions_separate_measures", v.functions_separate_measures},
          {"function_margin", number(v.function_margin)},
          {"measure_margin", number(v.measure_margin)}};
}

Json to_json(const SumDirectness& d) {
  return {{"max_cosine", number(d.max_cosine)},
          {"angle", number(d.angle)},
          {"range_rank", d.range_rank},
          {"direct", d.direct}};
}

Json to_json(const DecayFit& f) {
  return {{"index", vector_json(f.index)},         {"error", vector_json(f.error)},
          {"slope", number(f.slope)},              {"intercept", number(f.intercept)},
          {"constant", number(f.constant)},        {"points", f.points}};
}

Json to_json(const DecompositionReport& r) {
  return {{"counts", r.counts},
          {"residuals", vector_json(r.residuals)},
          {"fixed_component", number(r.fixed_component)},
          {"passes", r.passes}};
}

Json to_json(const ObstructionVerdict& v) {
  return {{"candidate_pairings", vector_json(v.candidate_pairings)},
          {"target_pairings", vector_json(v.target_pairings)},
          {"mismatch", number(v.mismatch)},
          {"test_pairing", number(v.test_pairing)},
          {"target_test_pairing", number(v.target_test_pairing)},
          {"matches", v.matches},
          {"obstructs", v.obstructs}};
}

Json to_json(const ObstructionSweep& s) {
  return {{"candidates", s.candidates},
          {"matching", s.matching},
          {"max_mismatch", number(s.max_mismatch)},
          {"max_test_pairing", number(s.max_test_pairing)},
          {"target_test_pairing", number(s.target_test_pairing)},
          {"min_gap", number(s.min_gap)},
          {"certified", s.certified}};
}

Json to_json(const ClusterVerdict& v) {
  Json j;
  j["status"] = cluster_status_name(v.status);
  j["witnesses"] = v.witnesses;
  j["net_profile"] = v.net_profile;
  j["limit"] = vector_json(v.limit);
  j["fixed_residual"] = optional_double(v.fixed_residual);
  j["in_fixed_space"] = optional_bool(v.in_fixed_space);
  return j;
}

Json to_json(const ModulusTable& t) {
  Json j;
  j["points"] = t.point_names;
  j["radii"] = vector_json(t.radii);
  j["modulus"] = matrix_json(t.modulus);
  Json sizes = Json::array();
  for (Eigen::Index i = 0; i < t.ball_size.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index k = 0; k < t.ball_size.cols(); ++k) row.push_back(t.ball_size(i, k));
    sizes.push_back(row);
  }
  j["ball_size"] = sizes;
  j["floor"] = number(t.floor());
  return j;
}

Json to_json(const Beta0Profile& p) {
  Json index = Json::array();
  for (const auto& i : p.index) index.push_back(i ? Json(*i) : Json(nullptr));
  return {{"eps", vector_json(p.eps)},
          {"index", index},
          {"outside_mass", vector_json(p.outside_mass)},
          {"equicontinuous", p.equicontinuous}};
}

Json to_json(const TightnessProfile& p) { return {{"mass_outside", vector_json(p.mass_outside)}}; }

Json to_json(const EergVerdict& v) {
  Json j;
  j["markovian"] = v.markovian;
  j["hypothesis"] = v.hypothesis;
  j["withheld"] = v.withheld;
  j["diagnosis"] = v.diagnosis;
  j["hypothesis_table"] = to_json(v.hypothesis_table);
  Json a = Json::array();
  for (const auto& x : v.assertions) a.push_back(optional_bool(x));
  j["assertions"] = a;
  j["consistent"] = v.consistent;
  if (v.projection) j["projection"] = to_json(*v.projection);
  if (v.separation) j["separation"] = to_json(*v.separation);
  Json clusters = Json::array();
  for (const auto& c : v.clusters) clusters.push_back(to_json(c));
  j["clusters"] = clusters;
  Json dec = Json::array();
  for (const auto& d : v.decompositions) dec.push_back(to_json(d));
  j["decompositions"] = dec;
  return j;
}

// ---- CSV and files ------------------------------------------------------------

void write_csv(std::ostream& os, std::span<const std::string> header, std::span<const std::vector<double>> columns) {
  if (header.size() != columns.size()) throw DomainError("write_csv: header and column counts differ");
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  std::size_t rows = 0;
  for (const auto& col : columns) rows = std::max(rows, col.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) os << ',';
      if (r < columns[c].size()) os << format_double(columns[c][r]);
    }
    os << '\n';
  }
}

void write_profile_csv(std::ostream& os, std::span<const double> values, std::size_t first) {
  std::vector<double> index(values.size());
  for (std::size_t i = 0; i < index.size(); ++i) index[i] = static_cast<double>(first + i);
  const std::vector<std::string> header = {"index", "value"};
  const std::vector<std::vector<double>> cols = {index, std::vector<double>(values.begin(), values.end())};
  write_csv(os, header, cols);
}

Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "'");
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write '" + path + "'");
  out << text;
  if (!out) throw Error("write failed for '" + path + "'");
}

}  // namespace meanerg::io
