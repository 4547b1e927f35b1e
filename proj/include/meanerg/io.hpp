#pragma once

#include <json.hpp>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "meanerg/averaging.hpp"
#include "meanerg/dualpair.hpp"
#include "meanerg/fixed_space.hpp"
#include "meanerg/models.hpp"
#include "meanerg/probes.hpp"
#include "meanerg/projection.hpp"

namespace meanerg::io {

/// Keys keep insertion order so that reports are byte-identical across runs.
using Json = nlohmann::ordered_json;

inline constexpr const char* kKernelSchema = "meanerg.kernel/1";
inline constexpr const char* kReportSchema = "meanerg.report/1";

Json to_json(const StateSpace& space);
SpacePtr space_from_json(const Json& j);

Json to_json(const TailRule& tail, const StateSpace& space);
TailRule tail_from_json(const Json& j, const StateSpace& space);

/// {"values": {state: v}, "tail": {...}, "lip_hint": L}.
Json to_json(const BoundedFunction& f);
BoundedFunction function_from_json(const Json& j, const SpacePtr& space);

/// {"weights": {state: w}, "escaped": e}; zero weights are omitted.
Json to_json(const SignedMeasure& mu);
SignedMeasure measure_from_json(const Json& j, const SpacePtr& space);

/// {"schema", "space", "rows": {state: [{"target", "weight"}, ...]}, "leakage": {state: l}}.
/// Doubles are written with 17 significant digits or the shortest string that
/// reads back to the same value, so the round trip is bit-exact.
Json to_json(const Kernel& k);
/// Reads the embedded space unless `space` is given.
Kernel kernel_from_json(const Json& j, SpacePtr space = nullptr);

Json to_json(const SchemeSpec& spec);
SchemeSpec scheme_from_json(const Json& j);

Json to_json(const Model& m);

Json to_json(const SchemeReport& r);
Json to_json(const ProjectionInvariants& inv);
Json to_json(const ProjectionEstimate& e);
Json to_json(const FixedSpaceBasis& b);
Json to_json(const SeparationVerdict& v);
Json to_json(const SumDirectness& d);
Json to_json(const DecayFit& f);
Json to_json(const DecompositionReport& r);
Json to_json(const ObstructionVerdict& v);
Json to_json(const ObstructionSweep& s);
Json to_json(const ClusterVerdict& v);
Json to_json(const ModulusTable& t);
Json to_json(const Beta0Profile& p);
Json to_json(const TightnessProfile& p);
Json to_json(const EergVerdict& v);

/// Dense matrix as an array of rows.
Json matrix_json(const Eigen::MatrixXd& m);
/// NaN and infinities become null.
Json number(double v);

/// Shortest representation that reads back to the same double.
std::string format_double(double v);

/// Header row then one line per row index; columns may differ in length,
/// missing cells are left empty.
void write_csv(std::ostream& os, std::span<const std::string> header, std::span<const std::vector<double>> columns);
/// Columns (index, value) with index starting at `first`.
void write_profile_csv(std::ostream& os, std::span<const double> values, std::size_t first = 1);

Json read_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace meanerg::io
