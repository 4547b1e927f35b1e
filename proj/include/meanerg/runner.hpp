#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "meanerg/io.hpp"
#include "meanerg/models.hpp"

namespace meanerg {

/// Named scalar results in the order they were computed. Booleans are 0/1.
using Quantities = std::vector<std::pair<std::string, double>>;

struct Reproduction {
  std::string example;
  Model model;
  Quantities quantities;
  /// One-line verdicts, e.g. "A has the e-property".
  std::vector<std::string> verdict;
  io::Json report;
};

/// Summing operator on l^1: forward sigma-convergence and the escaping
/// adjoint averages.
Reproduction reproduce_ex61(const Params& params = {});
/// Forward and backward shifts on Z u {inf}.
Reproduction reproduce_ex62(const Params& params = {});
/// Cycles above a line: separation and the decomposition obstruction for delta_0.
Reproduction reproduce_ex63(const Params& params = {}, std::uint64_t seed = 7, std::size_t candidates = 1000);
Reproduction reproduce(const std::string& example, const Params& params = {}, std::optional<std::uint64_t> seed = {});

/// Generic pipeline over a model's first recommended scheme: projection,
/// fixed spaces, separation, beta0 probe and e-property floor.
Quantities model_quantities(const Model& model);

/// Fixture entry {"quantity", "value", "tol", "mode"} with mode
///   "abs": |actual - value| <= tol,
///   "min": actual >= value - tol,
///   "max": actual <= value + tol.
struct FixtureCheck {
  std::string quantity;
  std::string mode;
  double expected = 0.0;
  double tol = 0.0;
  std::optional<double> actual;
  bool pass = false;
};

struct FixtureComparison {
  std::vector<FixtureCheck> checks;
  bool passed = false;
  /// Quantities that failed or were not computed.
  std::vector<std::string> divergent;
};

FixtureComparison compare_fixture(const io::Json& fixture, const Quantities& quantities);

/// Reads <dir>/<name>.json; dir defaults to the fixtures shipped with the source.
io::Json load_fixture(const std::string& name, const std::string& dir = "");
std::string default_fixtures_dir();

io::Json to_json(const Quantities& q);
io::Json to_json(const FixtureComparison& c);

}  // namespace meanerg
