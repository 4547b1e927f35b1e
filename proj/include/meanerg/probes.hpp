#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meanerg/averaging.hpp"
#include "meanerg/fixed_space.hpp"
#include "meanerg/projection.hpp"

namespace meanerg {

// ---- Cluster detection ------------------------------------------------------

enum class ClusterStatus { convergent, clusters_multiple_limits, escapes };

std::string cluster_status_name(ClusterStatus s);

struct ClusterOptions {
  /// Net radius.
  double eps = 1e-3;
  /// sup (functions) or bl (measures) by default; beta0 uses `weights`.
  Topology topology = Topology::sigma;
  std::vector<VanishingWeight> weights;
  /// Index variable per element (1/n, 1-r, 1/t). When given, the net is built
  /// on Richardson extrapolants of the sequence instead of the raw elements.
  std::vector<double> h;
  std::size_t extrapolation_order = 2;
  /// When set and the sequence converges, the witness is checked against
  /// ||(S - I) w|| <= fixed_tol.
  std::optional<KernelOperator> fixed_check;
  double fixed_tol = 1e-8;
  std::size_t bl_exact_support = 40;
};

/// Total-boundedness surrogate on a finite sample. A greedy eps-net is built
/// over the second half of the sequence; new centres in its last half mean
/// the sample keeps leaving every ball found so far (escapes), one centre
/// means convergent, several recurrent centres mean multiple cluster points.
struct ClusterVerdict {
  ClusterStatus status = ClusterStatus::escapes;
  /// Sequence positions of the net centres (positions in the extrapolated
  /// sequence when h is given).
  std::vector<std::size_t> witnesses;
  /// Net size after each element of the examined tail.
  std::vector<std::size_t> net_profile;
  /// Values (functions) or weights with the escaped mass appended (measures)
  /// of the convergent witness.
  Eigen::VectorXd limit;
  std::optional<double> fixed_residual;
  std::optional<bool> in_fixed_space;
};

ClusterVerdict cluster_detector(std::span<const BoundedFunction> sequence, const ClusterOptions& opts = {});
ClusterVerdict cluster_detector(std::span<const SignedMeasure> sequence, const ClusterOptions& opts = {});

// ---- e-property ---------------------------------------------------------------

/// modulus(x, delta) = sup over the family and over y with 0 < d(x, y) < delta
/// of |g(x) - g(y)|. Radii are stored in decreasing order.
struct ModulusTable {
  std::vector<std::size_t> points;
  std::vector<std::string> point_names;
  std::vector<double> radii;
  Eigen::MatrixXd modulus;  // points x radii
  /// Number of neighbours y in each ball; 0 means the ball is a singleton.
  Eigen::MatrixXi ball_size;

  /// Every point's modulus at the smallest radius is <= level.
  bool passes(double level) const;
  /// Entrywise modulus <= factor * other.modulus + slack.
  bool dominated_by(const ModulusTable& other, double factor, double slack = 1e-15) const;
  /// Largest modulus at the smallest radius.
  double floor() const;
};

ModulusTable e_property_probe(std::span<const BoundedFunction> family, std::span<const std::size_t> points,
                              std::span<const double> radii);
/// Family {T f : T in operators}.
ModulusTable e_property_probe(std::span<const KernelOperator> operators, const BoundedFunction& f,
                              std::span<const std::size_t> points, std::span<const double> radii);

/// Radii r0, r0/2, ..., r0/2^(count-1).
std::vector<double> halving_radii(double r0 = 0.5, std::size_t count = 5);

// ---- beta0-equicontinuity -----------------------------------------------------

/// Per eps: the smallest exhaustion index m with
/// sup_{T, x in K} |p_T|(x, E \ K_m) <= eps, escaped mass counted as outside.
struct Beta0Profile {
  std::vector<double> eps;
  std::vector<std::optional<int>> index;
  /// outside_mass[m - 1] = sup over operators and x in K of the mass outside K_m.
  std::vector<double> outside_mass;
  bool equicontinuous = false;
};

Beta0Profile beta0_equicontinuity_probe(std::span<const KernelOperator> operators,
                                        std::span<const std::size_t> compact_set, std::span<const double> eps_grid);

// ---- Equivalence matrix -------------------------------------------------------

struct EergOptions {
  /// States x probed by delta_x; empty means every state.
  std::vector<std::size_t> probe_points;
  /// Lipschitz functions for the hypothesis probe, in addition to bump_dictionary.
  std::vector<BoundedFunction> lipschitz_probes;
  std::vector<double> radii = halving_radii();
  /// Hypothesis holds when every modulus at the smallest radius is <= modulus_tol.
  double modulus_tol = 0.1;
  double cluster_eps = 1e-3;
  double tightness_eps = 1e-3;
  double decomposition_tol = 1e-8;
  ProjectionOptions projection = [] {
    ProjectionOptions p;
    p.topology = Topology::beta0;
    return p;
  }();
};

/// The four assertions
///   (i)   weak ergodicity with beta0-convergence of A f on function probes,
///   (ii)  sigma'-clustering of A' delta_x (tight, and the net does not escape),
///   (iii) fix(S') separates fix(S),
///   (iv)  delta_x lies in fix(S') + span rg(I - S') up to decomposition_tol,
/// evaluated on the truncated model. They are reported only when the scheme is
/// Markovian and the clustering hypothesis is supported by the e-property
/// probe; otherwise the matrix is withheld and `diagnosis` says why.
struct EergVerdict {
  bool markovian = false;
  bool hypothesis = false;
  bool withheld = true;
  std::string diagnosis;
  ModulusTable hypothesis_table;  // the worst probe
  std::array<std::optional<bool>, 4> assertions{};
  bool consistent = false;

  std::optional<ProjectionEstimate> projection;
  std::optional<SeparationVerdict> separation;
  std::vector<ClusterVerdict> clusters;
  std::vector<DecompositionReport> decompositions;
};

EergVerdict theorem_eerg_equivalences(const AverageScheme& scheme, const EergOptions& opts = {});

}  // namespace meanerg
