#include "cli.hpp"

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include "meanerg/averaging.hpp"
#include "meanerg/dualpair.hpp"
#include "meanerg/fixed_space.hpp"
#include "meanerg/probes.hpp"
#include "meanerg/projection.hpp"
#include "meanerg/runner.hpp"

namespace meanerg::cli {

namespace fs = std::filesystem;
using io::Json;

const std::vector<std::string>& diagnostic_names() {
  static const std::vector<std::string> names = {"scheme",   "projection", "decay",      "fixed-space", "separation",
                                                 "e-property", "beta0",    "tightness", "equivalences"};
  return names;
}

namespace {

struct Series {
  std::string diagnostic;
  std::string file;
};

const std::map<std::string, Series>& plot_series() {
  static const std::map<std::string, Series> s = {
      {"as1", {"scheme", "as1.csv"}},
      {"as3", {"scheme", "as3.csv"}},
      {"projection-distance", {"projection", "projection_distance.csv"}},
      {"projection-error", {"decay", "projection_error.csv"}},
      {"modulus", {"e-property", "modulus.csv"}},
      {"beta0", {"beta0", "beta0.csv"}},
      {"tightness", {"tightness", "tightness.csv"}},
  };
  return s;
}

const std::vector<std::string> kDefaultDiagnostics = {"scheme", "projection"};
const std::vector<std::string> kDefaultSeries = {"as3", "projection-error"};

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

template <class T>
T get_as(const Json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("config: '" + what + "' has the wrong type");
  }
}

void reject_unknown(const Json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* key) { return k == key; }))
      throw ConfigError("config: unknown key '" + k + "' in " + where);
  }
}

}  // namespace

const std::vector<std::string>& plot_series_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [k, v] : plot_series()) n.push_back(k);
    return n;
  }();
  return names;
}

// ---- Config -------------------------------------------------------------------

RunConfig parse_config(const Json& j) {
  reject_unknown(j, {"schema", "model", "scheme", "diagnostics", "allow_inconclusive", "tolerances", "out", "seed"},
                 "config");
  if (j.contains("schema") && get_as<std::string>(j.at("schema"), "schema") != kConfigSchema)
    throw ConfigError("config: unsupported schema " + j.at("schema").dump());
  RunConfig c;
  if (j.contains("model")) {
    const Json& m = j.at("model");
    if (m.is_string()) {
      c.model = m.get<std::string>();
    } else {
      reject_unknown(m, {"name", "params"}, "model");
      if (m.contains("name")) c.model = get_as<std::string>(m.at("name"), "model.name");
      if (m.contains("params")) c.params = get_as<Params>(m.at("params"), "model.params");
    }
  }
  if (j.contains("scheme")) {
    const Json& s = j.at("scheme");
    reject_unknown(s, {"kind", "grid", "n_max"}, "scheme");
    if (s.contains("kind")) c.scheme = get_as<std::string>(s.at("kind"), "scheme.kind");
    if (s.contains("grid")) c.grid = get_as<std::vector<double>>(s.at("grid"), "scheme.grid");
    if (s.contains("n_max")) c.n_max = get_as<std::size_t>(s.at("n_max"), "scheme.n_max");
  }
  if (j.contains("diagnostics")) c.diagnostics = get_as<std::vector<std::string>>(j.at("diagnostics"), "diagnostics");
  if (j.contains("allow_inconclusive"))
    c.allow_inconclusive = get_as<std::vector<std::string>>(j.at("allow_inconclusive"), "allow_inconclusive");
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    reject_unknown(t, {"plateau", "invariant", "modulus", "tightness"}, "tolerances");
    if (t.contains("plateau")) c.tol.plateau = get_as<double>(t.at("plateau"), "tolerances.plateau");
    if (t.contains("invariant")) c.tol.invariant = get_as<double>(t.at("invariant"), "tolerances.invariant");
    if (t.contains("modulus")) c.tol.modulus = get_as<double>(t.at("modulus"), "tolerances.modulus");
    if (t.contains("tightness")) c.tol.tightness = get_as<double>(t.at("tightness"), "tolerances.tightness");
  }
  if (j.contains("out")) c.out = get_as<std::string>(j.at("out"), "out");
  if (j.contains("seed")) c.seed = get_as<std::uint64_t>(j.at("seed"), "seed");
  return c;
}

void validate(const RunConfig& c) {
  if (!c.scheme.empty() && c.scheme != "cesaro" && c.scheme != "abel" && c.scheme != "time" && c.scheme != "backward")
    throw ConfigError("unknown scheme '" + c.scheme + "' (expected cesaro, abel, time or backward)");
  if (!c.grid.empty() && c.n_max) throw ConfigError("give either a grid or n-max, not both");
  if (c.n_max && (c.scheme == "abel" || c.scheme == "time"))
    throw ConfigError("n-max applies to the cesaro and backward schemes");
  if (c.n_max && *c.n_max < 1) throw ConfigError("n-max must be positive");
  for (const auto& [name, value] : std::initializer_list<std::pair<const char*, double>>{
           {"plateau", c.tol.plateau}, {"invariant", c.tol.invariant}, {"modulus", c.tol.modulus},
           {"tightness", c.tol.tightness}})
    if (!(value > 0.0) || !std::isfinite(value)) throw ConfigError(std::string("tolerance '") + name + "' must be positive");
  if (c.diagnostics)
    for (const auto& d : *c.diagnostics)
      if (!contains(diagnostic_names(), d) && !plot_series().count(d)) throw ConfigError("unknown diagnostic '" + d + "'");
  for (const auto& d : c.allow_inconclusive)
    if (!contains(diagnostic_names(), d)) throw ConfigError("unknown diagnostic '" + d + "' in allow-inconclusive");
}

Json to_json(const RunConfig& c) {
  Json j;
  j["schema"] = kConfigSchema;
  j["model"] = {{"name", c.model}, {"params", c.params}};
  Json s = Json::object();
  if (!c.scheme.empty()) s["kind"] = c.scheme;
  if (!c.grid.empty()) s["grid"] = c.grid;
  if (c.n_max) s["n_max"] = *c.n_max;
  j["scheme"] = s;
  if (c.diagnostics) j["diagnostics"] = *c.diagnostics;
  j["allow_inconclusive"] = c.allow_inconclusive;
  j["tolerances"] = {{"plateau", c.tol.plateau},
                     {"invariant", c.tol.invariant},
                     {"modulus", c.tol.modulus},
                     {"tightness", c.tol.tightness}};
  j["seed"] = c.seed;
  return j;
}

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error("sha256 failed");
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return os.str();
}

}  // namespace

std::string config_hash(const RunConfig& c) { return "sha256:" + sha256_hex(to_json(c).dump()); }

// ---- Diagnostics ----------------------------------------------------------------

namespace {

struct CsvFile {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
};

struct Outcome {
  std::string status;  // pass, fail, inconclusive
  Json detail = Json::object();
  std::vector<CsvFile> files;
};

std::string pass_fail(bool ok) { return ok ? "pass" : "fail"; }

/// Model, scheme and lazily computed shared results.
class Context {
 public:
  Context(const RunConfig& c) : config_(c), model_(build(c)), spec_(resolve(c, model_)), scheme_(make_scheme()) {
    points_ = model_.probe_points;
    if (points_.empty())
      for (std::size_t i = 0; i < model_.space->size(); ++i) points_.push_back(i);
  }

  const RunConfig& config() const { return config_; }
  const Model& model() const { return model_; }
  const AverageScheme& scheme() const { return scheme_; }
  const SchemeSpec& spec() const { return spec_; }
  bool backward() const { return config_.scheme == "backward"; }
  const std::vector<std::size_t>& points() const { return points_; }

  const std::vector<KernelOperator>& operators() {
    if (ops_.empty())
      for (std::size_t i = 0; i < scheme_.grid_size(); ++i) ops_.push_back(scheme_.average_operator(i).value);
    return ops_;
  }

  const ProjectionEstimate& projection() {
    if (!projection_) {
      ProjectionOptions o;
      o.topology = backward() ? Topology::sigma : Topology::sigma_prime;
      o.plateau_tol = config_.tol.plateau;
      o.invariant_tol = config_.tol.invariant;
      projection_ = estimate_projection(scheme_, o);
    }
    return *projection_;
  }

  BoundedFunction probe_function() const {
    if (!model_.functions.empty()) return model_.functions.begin()->second;
    return bump_dictionary(model_.space).at(points_.front());
  }
  SignedMeasure probe_measure() const {
    if (!model_.measures.empty()) return model_.measures.begin()->second;
    return SignedMeasure::dirac(model_.space, points_.front());
  }

  std::vector<BoundedFunction> lipschitz_family() const {
    auto fam = bump_dictionary(model_.space);
    for (const auto& [k, f] : model_.functions) fam.push_back(f);
    return fam;
  }

 private:
  static Model build(const RunConfig& c) {
    try {
      return build_model(c.model, c.params);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }

  static const SchemeSpec* model_scheme(const Model& m, SchemeSpec::Kind kind) {
    for (const auto& s : m.schemes)
      if (s.kind == kind) return &s;
    return nullptr;
  }

  static SchemeSpec resolve(const RunConfig& c, const Model& m) {
    SchemeSpec spec;
    if (c.scheme.empty()) {
      spec = m.schemes.front();
    } else if (c.scheme == "backward") {
      if (!m.backward) throw ConfigError("model " + m.name + " has no backward scheme");
      const auto* s = model_scheme(m, SchemeSpec::Kind::cesaro);
      spec = s ? *s : SchemeSpec::cesaro(SchemeSpec::doubling_grid(1024));
    } else if (c.scheme == "cesaro") {
      const auto* s = model_scheme(m, SchemeSpec::Kind::cesaro);
      spec = s ? *s : SchemeSpec::cesaro(SchemeSpec::doubling_grid(1024));
    } else if (c.scheme == "abel") {
      const auto* s = model_scheme(m, SchemeSpec::Kind::abel);
      spec = s ? *s : SchemeSpec::abel(SchemeSpec::default_abel_grid());
    } else {
      if (!m.rates) throw ConfigError("model " + m.name + " has no rate matrix for a time scheme");
      const auto* s = model_scheme(m, SchemeSpec::Kind::time);
      spec = s ? *s : SchemeSpec::time({1, 2, 4, 8, 16, 32, 64, 128, 256, 512, 1024});
    }
    if (c.n_max) {
      if (spec.kind != SchemeSpec::Kind::cesaro) throw ConfigError("n-max applies to the cesaro and backward schemes");
      const auto g = SchemeSpec::doubling_grid(*c.n_max);
      spec.grid.assign(g.begin(), g.end());
    }
    if (!c.grid.empty()) spec.grid = c.grid;
    try {
      spec.validate();
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
    return spec;
  }

  AverageScheme make_scheme() const {
    try {
      return backward() ? model_.backward_scheme(spec_) : model_.scheme(spec_);
    } catch (const DomainError& e) {
      throw ConfigError(e.what());
    }
  }

  RunConfig config_;
  Model model_;
  SchemeSpec spec_;
  AverageScheme scheme_;
  std::vector<std::size_t> points_;
  std::vector<KernelOperator> ops_;
  std::optional<ProjectionEstimate> projection_;
};

Outcome diag_scheme(Context& ctx) {
  const auto f = ctx.probe_function();
  const auto r = check_scheme(ctx.scheme(), f, ctx.probe_measure());
  Outcome o;
  o.status = pass_fail(r.as1_ok && r.identity_ok && r.hull_ok && r.as3_bound_ok.value_or(true));
  o.detail = io::to_json(r);
  o.files.push_back({"as1.csv", {"index", "norm"}, {r.grid, r.as1_norms}});
  CsvFile as3{"as3.csv", {"index", "function_decay", "measure_decay"}, {r.grid, r.as3_function_decay, r.as3_measure_decay}};
  if (ctx.spec().kind == SchemeSpec::Kind::cesaro) {
    const double fn = sup_norm(f);
    std::vector<double> bound;
    for (double n : r.grid) bound.push_back(2.0 * fn / n);
    as3.header.push_back("markov_bound");
    as3.columns.push_back(bound);
  }
  o.files.push_back(std::move(as3));
  return o;
}

Outcome diag_projection(Context& ctx) {
  const auto& est = ctx.projection();
  Outcome o;
  o.status = est.certified() ? "pass" : "inconclusive";
  o.detail = io::to_json(est);
  if (est.projection) {
    const auto& sp = *ctx.model().space;
    Json limits = Json::object();
    for (const auto& [key, f] : ctx.model().functions) {
      const auto pf = forward_apply(*est.projection, f);
      Json vals = Json::object();
      for (auto x : ctx.points()) vals[sp.name(x)] = io::number(pf(x));
      limits[key] = vals;
    }
    o.detail["limits_on_probes"] = limits;
  }
  o.files.push_back({"projection_distance.csv",
                     {"index", "raw_distance", "extrapolated_distance"},
                     {est.grid, est.raw_distance, est.extrapolated_distance}});
  return o;
}

Outcome diag_decay(Context& ctx) {
  const auto& est = ctx.projection();
  Outcome o;
  if (!est.projection) {
    o.status = "inconclusive";
    o.detail["note"] = "no projection estimate";
    return o;
  }
  const auto& g = ctx.spec().grid;
  const auto fit = fit_decay(ctx.scheme(), *est.projection, g.front(), g.back());
  o.status = est.certified() && fit.points >= 2 ? "pass" : "inconclusive";
  o.detail = io::to_json(fit);
  o.detail["projection_certified"] = est.certified();
  o.files.push_back({"projection_error.csv", {"index", "error"}, {fit.index, fit.error}});
  return o;
}

Outcome diag_fixed_space(Context& ctx) {
  const auto& s = ctx.scheme().step();
  const auto fun = fixed_space(s, Side::function);
  const auto mea = fixed_space(s, Side::measure);
  Outcome o;
  o.status = pass_fail(fun.residuals_ok(ctx.config().tol.invariant) && mea.residuals_ok(ctx.config().tol.invariant));
  o.detail = {{"function", io::to_json(fun)}, {"measure", io::to_json(mea)}};
  return o;
}

Outcome diag_separation(Context& ctx) {
  const auto& s = ctx.scheme().step();
  const auto v = separation_test(fixed_space(s, Side::function), fixed_space(s, Side::measure));
  Outcome o;
  o.status = pass_fail(v.both());
  o.detail = io::to_json(v);
  return o;
}

Outcome diag_e_property(Context& ctx) {
  const auto& ops = ctx.operators();
  const auto radii = halving_radii();
  std::optional<ModulusTable> worst;
  double floor = -1.0;
  for (const auto& f : ctx.lipschitz_family()) {
    auto t = e_property_probe(ops, f, ctx.points(), radii);
    if (t.floor() > floor) {
      floor = t.floor();
      worst = std::move(t);
    }
  }
  Outcome o;
  o.status = pass_fail(floor <= ctx.config().tol.modulus);
  o.detail = {{"floor", floor}, {"modulus_tol", ctx.config().tol.modulus}, {"worst_table", io::to_json(*worst)}};
  CsvFile csv{"modulus.csv", {"point", "radius", "modulus"}, {{}, {}, {}}};
  for (std::size_t p = 0; p < worst->points.size(); ++p)
    for (std::size_t r = 0; r < worst->radii.size(); ++r) {
      csv.columns[0].push_back(static_cast<double>(worst->points[p]));
      csv.columns[1].push_back(worst->radii[r]);
      csv.columns[2].push_back(worst->modulus(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(r)));
    }
  o.files.push_back(std::move(csv));
  return o;
}

Outcome diag_beta0(Context& ctx) {
  const auto p = beta0_equicontinuity_probe(ctx.operators(), ctx.points(), VanishingWeight::default_eps_grid());
  Outcome o;
  o.status = pass_fail(p.equicontinuous);
  o.detail = io::to_json(p);
  std::vector<double> m;
  for (std::size_t i = 0; i < p.outside_mass.size(); ++i) m.push_back(static_cast<double>(i + 1));
  o.files.push_back({"beta0.csv", {"m", "outside_mass"}, {m, p.outside_mass}});
  return o;
}

Outcome diag_tightness(Context& ctx) {
  std::vector<SignedMeasure> family;
  for (auto x : ctx.points()) {
    const auto avgs = ctx.scheme().averages(SignedMeasure::dirac(ctx.model().space, x));
    for (const auto& a : avgs) family.push_back(a.value);
  }
  const auto prof = tightness_profile(family, *ctx.model().space);
  const auto idx = prof.tight_index(ctx.config().tol.tightness);
  Outcome o;
  o.status = pass_fail(idx.has_value());
  o.detail = io::to_json(prof);
  o.detail["eps"] = ctx.config().tol.tightness;
  o.detail["tight_index"] = idx ? Json(*idx) : Json(nullptr);
  std::vector<double> m;
  for (std::size_t i = 0; i < prof.mass_outside.size(); ++i) m.push_back(static_cast<double>(i + 1));
  o.files.push_back({"tightness.csv", {"m", "mass_outside"}, {m, prof.mass_outside}});
  return o;
}

Outcome diag_equivalences(Context& ctx) {
  EergOptions e;
  e.probe_points = ctx.points();
  for (const auto& [k, f] : ctx.model().functions) e.lipschitz_probes.push_back(f);
  e.modulus_tol = ctx.config().tol.modulus;
  e.tightness_eps = ctx.config().tol.tightness;
  e.projection.plateau_tol = ctx.config().tol.plateau;
  e.projection.invariant_tol = ctx.config().tol.invariant;
  const auto v = theorem_eerg_equivalences(ctx.scheme(), e);
  Outcome o;
  o.status = v.withheld ? "inconclusive" : pass_fail(v.consistent);
  o.detail = io::to_json(v);
  return o;
}

Outcome run_diagnostic(const std::string& name, Context& ctx) {
  if (name == "scheme") return diag_scheme(ctx);
  if (name == "projection") return diag_projection(ctx);
  if (name == "decay") return diag_decay(ctx);
  if (name == "fixed-space") return diag_fixed_space(ctx);
  if (name == "separation") return diag_separation(ctx);
  if (name == "e-property") return diag_e_property(ctx);
  if (name == "beta0") return diag_beta0(ctx);
  if (name == "tightness") return diag_tightness(ctx);
  if (name == "equivalences") return diag_equivalences(ctx);
  throw ConfigError("unknown diagnostic '" + name + "'");
}

Json model_json(const Model& m) {
  const auto& sp = *m.space;
  Json inf = Json::array();
  for (auto i : sp.infinity_points()) inf.push_back(sp.name(i));
  return {{"name", m.name},          {"params", m.params},  {"states", sp.size()},
          {"truncation_level", sp.truncation_level()}, {"depth", sp.depth()}, {"infinity_points", inf}};
}

void write_csv_file(const fs::path& dir, const CsvFile& f) {
  std::ostringstream os;
  io::write_csv(os, f.header, f.columns);
  io::write_text_file((dir / f.name).string(), os.str());
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir + "'");
}

}  // namespace

int cmd_diagnose(const RunConfig& c, std::ostream& out) {
  validate(c);
  const auto requested = c.diagnostics.value_or(kDefaultDiagnostics);
  if (requested.empty()) {
    out << "no diagnostics requested\n";
    return kOk;
  }
  for (const auto& d : requested)
    if (!contains(diagnostic_names(), d)) throw ConfigError("'" + d + "' is a plot series, not a diagnostic");

  Context ctx(c);
  Json report;
  report["schema"] = io::kReportSchema;
  report["command"] = "diagnose";
  report["config_hash"] = config_hash(c);
  report["config"] = to_json(c);
  report["model"] = model_json(ctx.model());
  report["scheme"] = io::to_json(ctx.spec());
  report["scheme"]["name"] = c.scheme.empty() ? ctx.spec().kind_name() : c.scheme;

  Json diags = Json::object();
  std::vector<CsvFile> files;
  int code = kOk;
  for (const auto& d : requested) {
    Outcome o = run_diagnostic(d, ctx);
    if (o.status == "fail" || (o.status == "inconclusive" && !contains(c.allow_inconclusive, d)))
      code = kCertificationFailure;
    diags[d] = {{"status", o.status}, {"result", o.detail}};
    for (auto& f : o.files) files.push_back(std::move(f));
  }
  report["diagnostics"] = diags;
  report["status"] = code == kOk ? "certified" : "failed";
  report["exit_code"] = code;

  if (c.out.empty()) {
    out << report.dump(2) << '\n';
    return code;
  }
  ensure_dir(c.out);
  Json names = Json::array();
  for (const auto& f : files) {
    write_csv_file(c.out, f);
    names.push_back(f.name);
  }
  report["files"] = names;
  io::write_text_file((fs::path(c.out) / "report.json").string(), report.dump(2) + "\n");
  for (const auto& d : requested) out << std::left << std::setw(14) << d << diags[d]["status"].get<std::string>() << '\n';
  out << "report: " << (fs::path(c.out) / "report.json").string() << '\n';
  return code;
}

int cmd_export_plotdata(const RunConfig& c, std::ostream& out) {
  validate(c);
  const auto requested = c.diagnostics.value_or(kDefaultSeries);
  if (requested.empty()) {
    out << "no series requested\n";
    return kOk;
  }
  for (const auto& s : requested)
    if (!plot_series().count(s)) throw ConfigError("unknown plot series '" + s + "'");
  if (c.out.empty()) throw ConfigError("export-plotdata needs an output directory (--out)");

  Context ctx(c);
  std::map<std::string, Outcome> done;
  ensure_dir(c.out);
  for (const auto& s : requested) {
    const auto& ser = plot_series().at(s);
    if (!done.count(ser.diagnostic)) done.emplace(ser.diagnostic, run_diagnostic(ser.diagnostic, ctx));
    const auto& files = done.at(ser.diagnostic).files;
    const auto it = std::find_if(files.begin(), files.end(), [&](const CsvFile& f) { return f.name == ser.file; });
    if (it == files.end()) {
      out << s << ": not available (" << done.at(ser.diagnostic).detail.value("note", std::string("no data")) << ")\n";
      continue;
    }
    write_csv_file(c.out, *it);
    out << s << ": " << (fs::path(c.out) / it->name).string() << '\n';
  }
  return kOk;
}

// ---- Reproduce and list-models ---------------------------------------------------

namespace {

std::string params_string(const Params& p) {
  std::ostringstream os;
  bool first = true;
  for (const auto& [k, v] : p) {
    os << (first ? "" : ", ") << k << "=" << io::format_double(v);
    first = false;
  }
  return os.str();
}

}  // namespace

int cmd_reproduce(const std::vector<std::string>& examples, const Params& params, std::optional<std::uint64_t> seed,
                  const std::string& fixtures_dir, const std::string& out_dir, std::ostream& out) {
  if (examples.empty()) throw ConfigError("reproduce needs at least one example (ex61, ex62, ex63)");
  for (const auto& e : examples)
    if (e != "ex61" && e != "ex62" && e != "ex63") throw ConfigError("unknown example '" + e + "'");
  if (!out_dir.empty()) ensure_dir(out_dir);

  int code = kOk;
  for (const auto& name : examples) {
    Json fixture;
    try {
      fixture = load_fixture(name, fixtures_dir);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
    Params p;
    if (fixture.contains("params"))
      for (const auto& [k, v] : fixture.at("params").items()) p[k] = v.get<double>();
    for (const auto& [k, v] : params) p[k] = v;
    std::optional<std::uint64_t> s = seed;
    if (!s && fixture.contains("seed")) s = fixture.at("seed").get<std::uint64_t>();

    const Reproduction r = [&] {
      try {
        return reproduce(name, p, s);
      } catch (const DomainError& e) {
        throw ConfigError(e.what());
      }
    }();
    const FixtureComparison cmp = compare_fixture(fixture, r.quantities);

    out << "== " << name << ": " << r.model.name << " (" << params_string(r.model.params) << ") ==\n";
    out << "states " << r.model.space->size() << ", truncation level " << r.model.space->truncation_level();
    if (s) out << ", seed " << *s;
    out << "\n\nverdict\n";
    for (const auto& v : r.verdict) out << "  " << v << '\n';
    out << "\nquantities\n";
    for (const auto& [k, v] : r.quantities) {
      out << "  " << std::left << std::setw(34) << k << std::setw(24) << io::format_double(v);
      const auto it = std::find_if(cmp.checks.begin(), cmp.checks.end(), [&](const FixtureCheck& c) { return c.quantity == k; });
      if (it != cmp.checks.end()) {
        const char* op = it->mode == "min" ? ">= " : it->mode == "max" ? "<= " : "== ";
        out << op << io::format_double(it->expected);
        if (it->tol > 0) out << " +- " << io::format_double(it->tol);
        out << (it->pass ? "  ok" : "  MISMATCH");
      }
      out << '\n';
    }
    if (cmp.passed) {
      out << "\nresult: matches fixture (" << cmp.checks.size() << " checks)\n\n";
    } else {
      code = kCertificationFailure;
      out << "\nresult: divergent quantities:";
      for (const auto& d : cmp.divergent) out << ' ' << d;
      out << "\n\n";
    }

    if (!out_dir.empty()) {
      Json cfg = {{"example", name}, {"params", p}, {"seed", s ? Json(*s) : Json(nullptr)}};
      Json report;
      report["schema"] = io::kReportSchema;
      report["command"] = "reproduce";
      report["config_hash"] = "sha256:" + sha256_hex(cfg.dump());
      report["config"] = cfg;
      report["model"] = model_json(r.model);
      report["result"] = r.report;
      report["fixture_comparison"] = to_json(cmp);
      report["status"] = cmp.passed ? "certified" : "failed";
      io::write_text_file((fs::path(out_dir) / (name + ".json")).string(), report.dump(2) + "\n");
    }
  }
  return code;
}

int cmd_list_models(bool json, std::ostream& out) {
  if (json) {
    Json arr = Json::array();
    for (const auto& m : model_catalog()) arr.push_back({{"name", m.name}, {"params", m.defaults}, {"summary", m.summary}});
    out << arr.dump(2) << '\n';
    return kOk;
  }
  for (const auto& m : model_catalog()) {
    out << std::left << std::setw(14) << m.name << m.summary;
    if (!m.defaults.empty()) out << " [" << params_string(m.defaults) << "]";
    out << '\n';
  }
  return kOk;
}

// ---- Argument parsing ------------------------------------------------------------

namespace {

struct Flags {
  std::string config;
  std::string model;
  std::vector<std::string> params;
  std::string scheme;
  std::size_t n_max = 0;
  std::vector<double> r_grid;
  std::vector<double> t_grid;
  std::vector<double> grid;
  double tol = 0.0;
  std::string out;
  std::uint64_t seed = 0;
  std::vector<std::string> checks;
  std::vector<std::string> allow;
};

Params parse_params(const std::vector<std::string>& kv) {
  Params p;
  for (const auto& s : kv) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("--param expects key=value, got '" + s + "'");
    try {
      std::size_t used = 0;
      p[s.substr(0, eq)] = std::stod(s.substr(eq + 1), &used);
      if (used != s.size() - eq - 1) throw std::invalid_argument(s);
    } catch (const std::exception&) {
      throw ConfigError("--param value is not a number: '" + s + "'");
    }
  }
  return p;
}

void add_run_options(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON run configuration; flags override it")->check(CLI::ExistingFile);
  app->add_option("--model", f.model, "Catalogued model (see list-models)");
  app->add_option("--param", f.params, "Model parameter key=value, repeatable");
  app->add_option("--scheme", f.scheme, "cesaro, abel, time or backward");
  app->add_option("--n-max", f.n_max, "Cesaro doubling grid 1, 2, 4, ... up to n-max");
  app->add_option("--r-grid", f.r_grid, "Abel grid, comma separated")->delimiter(',');
  app->add_option("--t-grid", f.t_grid, "Time grid, comma separated")->delimiter(',');
  app->add_option("--grid", f.grid, "Explicit grid for the chosen scheme")->delimiter(',');
  app->add_option("--tol", f.tol, "Plateau tolerance of the projection estimate");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--seed", f.seed, "Seed for randomized sweeps");
  app->add_option("--check", f.checks, "Diagnostics or plot series, repeatable or comma separated")->delimiter(',');
  app->add_option("--allow-inconclusive", f.allow, "Diagnostics whose inconclusive status is accepted")->delimiter(',');
}

RunConfig resolve_config(const CLI::App* app, const Flags& f) {
  RunConfig c;
  if (!f.config.empty()) {
    try {
      c = parse_config(io::read_json_file(f.config));
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }
  auto given = [&](const char* name) { return app->count(name) > 0; };
  if (given("--model")) {
    if (f.model != c.model) c.params.clear();
    c.model = f.model;
  }
  for (const auto& [k, v] : parse_params(f.params)) c.params[k] = v;
  if (given("--scheme")) c.scheme = f.scheme;
  int grids = given("--n-max") + given("--r-grid") + given("--t-grid") + given("--grid");
  if (grids > 1) throw ConfigError("give at most one of --n-max, --r-grid, --t-grid and --grid");
  if (grids) {
    c.grid.clear();
    c.n_max.reset();
  }
  auto implied = [&](const char* kind, const char* flag) {
    if (!given("--scheme")) c.scheme = kind;
    else if (c.scheme != kind) throw ConfigError(std::string(flag) + " requires --scheme " + kind);
  };
  if (given("--n-max")) c.n_max = f.n_max;
  if (given("--r-grid")) {
    implied("abel", "--r-grid");
    c.grid = f.r_grid;
  }
  if (given("--t-grid")) {
    implied("time", "--t-grid");
    c.grid = f.t_grid;
  }
  if (given("--grid")) c.grid = f.grid;
  if (given("--tol")) c.tol.plateau = f.tol;
  if (given("--out")) c.out = f.out;
  if (given("--seed")) c.seed = f.seed;
  if (given("--check")) c.diagnostics = f.checks;
  if (given("--allow-inconclusive")) c.allow_inconclusive = f.allow;
  validate(c);
  return c;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Mean ergodic diagnostics for kernel operators on truncated state spaces", "meanerg"};
  app.require_subcommand(1);

  Flags diag_flags, plot_flags;
  auto* diagnose = app.add_subcommand("diagnose", "Run diagnostics and write a JSON report with CSV series");
  add_run_options(diagnose, diag_flags);
  auto* plot = app.add_subcommand("export-plotdata", "Write CSV series for plotting");
  add_run_options(plot, plot_flags);

  std::vector<std::string> examples;
  std::vector<std::string> repro_params;
  std::string fixtures_dir, repro_out;
  std::uint64_t repro_seed = 0;
  auto* repro = app.add_subcommand("reproduce", "Reproduce worked examples and compare against fixtures");
  repro->add_option("examples", examples, "ex61, ex62, ex63")->required();
  repro->add_option("--param", repro_params, "Model parameter key=value, repeatable");
  repro->add_option("--seed", repro_seed, "Seed for the obstruction sweep");
  repro->add_option("--fixtures", fixtures_dir, "Fixture directory");
  repro->add_option("--out", repro_out, "Directory for per-example JSON reports");

  bool list_json = false;
  auto* list = app.add_subcommand("list-models", "List catalogued models and default parameters");
  list->add_flag("--json", list_json, "Print JSON");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kOk : kConfigError;
  }

  try {
    if (*diagnose) return cmd_diagnose(resolve_config(diagnose, diag_flags), out);
    if (*plot) return cmd_export_plotdata(resolve_config(plot, plot_flags), out);
    if (*repro) {
      std::optional<std::uint64_t> seed;
      if (repro->count("--seed")) seed = repro_seed;
      return cmd_reproduce(examples, parse_params(repro_params), seed, fixtures_dir, repro_out, out);
    }
    return cmd_list_models(list_json, out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kCertificationFailure;
  }
}

}  // namespace meanerg::cli
