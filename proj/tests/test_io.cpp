#include <doctest.h>

#include <random>
#include <sstream>

#include "helpers.hpp"
#include "meanerg/errors.hpp"
#include "meanerg/io.hpp"
#include "meanerg/models.hpp"

using namespace meanerg;

namespace {

Kernel random_leaking_kernel(const SpacePtr& space, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = space->size();
  std::vector<std::vector<KernelEntry>> rows(n);
  std::vector<double> leak(n);
  for (std::size_t x = 0; x < n; ++x) {
    double total = 0.0;
    for (std::size_t y = 0; y < n; ++y) {
      if (u(rng) < 0.4) continue;
      const double w = u(rng);
      rows[x].push_back({y, w});
      total += w;
    }
    leak[x] = u(rng) / 3.0;
    for (auto& e : rows[x]) e.weight *= (1.0 - leak[x]) / total;
  }
  return Kernel::from_rows(space, rows, leak);
}

void check_same_space(const StateSpace& a, const StateSpace& b) {
  REQUIRE(a.same_as(b));
  CHECK(a.levels() == b.levels());
  CHECK(a.infinity_points() == b.infinity_points());
  CHECK(a.truncation_level() == b.truncation_level());
  CHECK(a.continuity_ties() == b.continuity_ties());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) CHECK(a.distance(i, j) == b.distance(i, j));
}

}  // namespace

TEST_CASE("kernel JSON round trip is bit-exact") {
  const auto space = testing::discrete_space(9);
  const Kernel k = random_leaking_kernel(space, 11);
  const io::Json j = io::to_json(k);
  CHECK(j.at("schema") == io::kKernelSchema);

  // Through text, as a file would.
  const Kernel back = io::kernel_from_json(io::Json::parse(j.dump()));
  check_same_space(*space, *back.space());
  CHECK(back.dense() == k.dense());
  CHECK(back.leakage() == k.leakage());
  CHECK(io::to_json(back).dump() == j.dump());
}

TEST_CASE("model spaces, functions and measures round trip") {
  for (const char* name : {"z_infinity", "cycles_line", "summing_l1"}) {
    CAPTURE(name);
    const Model m = build_model(name);
    const SpacePtr space = io::space_from_json(io::Json::parse(io::to_json(*m.space).dump()));
    check_same_space(*m.space, *space);

    for (const auto& [key, f] : m.functions) {
      CAPTURE(key);
      const auto g = io::function_from_json(io::Json::parse(io::to_json(f).dump()), space);
      CHECK(g.values() == f.values());
      CHECK(g.tail() == f.tail());
      CHECK(g.lip_hint() == f.lip_hint());
    }
    for (const auto& [key, mu] : m.measures) {
      CAPTURE(key);
      const auto nu = io::measure_from_json(io::Json::parse(io::to_json(mu).dump()), space);
      CHECK(nu.weights() == mu.weights());
      CHECK(nu.escaped() == mu.escaped());
    }

    const Kernel k = io::kernel_from_json(io::to_json(m.step.kernel()));
    CHECK(k.dense() == m.step.kernel().dense());
    CHECK(k.leakage() == m.step.kernel().leakage());
  }
}

TEST_CASE("scheme specs round trip and validate") {
  const SchemeSpec a = SchemeSpec::abel(SchemeSpec::default_abel_grid(), 2.0);
  const SchemeSpec b = io::scheme_from_json(io::to_json(a));
  CHECK(b.kind == a.kind);
  CHECK(b.grid == a.grid);
  CHECK(b.norm_bound == a.norm_bound);

  io::Json bad = io::to_json(SchemeSpec::cesaro({1, 2, 4}));
  bad["grid"] = {4, 2};
  CHECK_THROWS_AS(io::scheme_from_json(bad), ParseError);
  bad["kind"] = "borel";
  CHECK_THROWS_AS(io::scheme_from_json(bad), ParseError);
}

TEST_CASE("malformed kernel documents raise ParseError") {
  const auto space = testing::discrete_space(2);
  const io::Json good = io::to_json(Kernel::identity(space));

  io::Json j = good;
  j["schema"] = "meanerg.kernel/99";
  CHECK_THROWS_AS(io::kernel_from_json(j), ParseError);

  j = good;
  j["rows"]["s0"] = {{{"target", "nowhere"}, {"weight", 1.0}}};
  CHECK_THROWS_AS(io::kernel_from_json(j), ParseError);

  j = good;
  j["rows"]["s1"] = "not an array";
  CHECK_THROWS_AS(io::kernel_from_json(j), ParseError);

  j = good;
  j.erase("space");
  CHECK_THROWS_AS(io::kernel_from_json(j), ParseError);

  j = good;
  j["space"]["metric"]["kind"] = "hyperbolic";
  CHECK_THROWS_AS(io::kernel_from_json(j), ParseError);

  CHECK_THROWS_AS(io::read_json_file("/nonexistent/kernel.json"), ParseError);
}

TEST_CASE("CSV output keeps full precision") {
  CHECK(io::format_double(0.1) == "0.1");
  CHECK(io::format_double(1.0 / 3.0) == "0.3333333333333333");
  CHECK(std::stod(io::format_double(2.0 / 3.0)) == 2.0 / 3.0);

  std::ostringstream os;
  const std::vector<std::string> header = {"n", "err"};
  const std::vector<std::vector<double>> cols = {{1, 2, 4}, {0.5, 0.25}};
  io::write_csv(os, header, cols);
  CHECK(os.str() == "n,err\n1,0.5\n2,0.25\n4,\n");

  std::ostringstream prof;
  const std::vector<double> values = {1.0, 0.125};
  io::write_profile_csv(prof, values, 3);
  CHECK(prof.str() == "index,value\n3,1\n4,0.125\n");

  const std::vector<std::string> short_header = {"n"};
  CHECK_THROWS_AS(io::write_csv(os, short_header, cols), DomainError);
}

TEST_CASE("non-finite numbers serialize as null") {
  CHECK(io::number(std::numeric_limits<double>::quiet_NaN()).is_null());
  CHECK(io::number(std::numeric_limits<double>::infinity()).is_null());
  CHECK(io::number(0.5) == 0.5);
}
