#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "meanerg/errors.hpp"
#include "meanerg/io.hpp"
#include "meanerg/models.hpp"

namespace meanerg::cli {

inline constexpr const char* kConfigSchema = "meanerg.config/1";

enum ExitCode : int { kOk = 0, kCertificationFailure = 1, kConfigError = 2 };

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Diagnostics understood by `diagnose`.
const std::vector<std::string>& diagnostic_names();
/// Series understood by `export-plotdata`.
const std::vector<std::string>& plot_series_names();

struct Tolerances {
  double plateau = 1e-6;
  double invariant = 1e-8;
  double modulus = 0.1;
  double tightness = 1e-3;
};

struct RunConfig {
  std::string model = "swap2";
  Params params;
  /// cesaro, abel, time or backward; empty takes the model's first scheme.
  std::string scheme;
  /// Explicit grid; empty takes n_max or the model's grid.
  std::vector<double> grid;
  std::optional<std::size_t> n_max;
  /// nullopt: the command's default list. An empty list runs nothing.
  std::optional<std::vector<std::string>> diagnostics;
  std::vector<std::string> allow_inconclusive;
  Tolerances tol;
  std::string out;
  std::uint64_t seed = 7;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
RunConfig parse_config(const io::Json& j);
/// Throws ConfigError.
void validate(const RunConfig& c);
/// Canonical form; `out` is omitted so the hash does not depend on it.
io::Json to_json(const RunConfig& c);
/// "sha256:<hex>" of the canonical form.
std::string config_hash(const RunConfig& c);

int cmd_diagnose(const RunConfig& c, std::ostream& out);
int cmd_export_plotdata(const RunConfig& c, std::ostream& out);
int cmd_reproduce(const std::vector<std::string>& examples, const Params& params, std::optional<std::uint64_t> seed,
                  const std::string& fixtures_dir, const std::string& out_dir, std::ostream& out);
int cmd_list_models(bool json, std::ostream& out);

/// Parses argv, dispatches and maps errors to exit codes.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace meanerg::cli
