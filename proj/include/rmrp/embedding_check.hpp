#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "rmrp/parallel.hpp"
#include "rmrp/sparse_projection.hpp"

namespace rmrp {

/// Subspace-embedding target: preserve a p-dimensional subspace to
/// distortion epsilon with failure probability delta.
struct EmbeddingSpec {
  int subspace_dim = 5;
  double epsilon = 0.3;
  double delta = 0.1;
  double constant = 1.0;

  /// Angle-leakage constant sqrt(2) (1 + epsilon).
  double c1() const;
  /// Residual constant 1 + c1().
  double c2() const;
  void validate() const;
};

/// k = ceil(C p ln(p / delta) / epsilon^2).
int choose_dimension(const EmbeddingSpec& spec);

/// Per-trial measurements, all relative to the unit-normalized inputs.
struct TrialRecord {
  double length_ratio_subspace = 0.0;   ///< |‖Rv‖ - ‖v‖| / ‖v‖, v in S
  double length_ratio_orthogonal = 0.0; ///< same for x_perp
  double angle_ratio = 0.0;             ///< ‖P_RS R x_perp‖ / ‖x_perp‖
  double hw_ratio = 0.0;                ///< |‖R x_perp‖² - ‖x_perp‖²| / ‖x_perp‖²
  double residual_ratio = 0.0;          ///< |‖e_proj‖² - ‖x_perp‖²| / ‖x_perp‖²
  double residual_norm_ratio = 0.0;     ///< ‖e_proj‖ / ‖x_perp‖
  double identity_error = 0.0;          ///< ‖(Rx - P Rx) - P⊥ R x_perp‖
  bool rank_deficient = false;
  bool len_ok = true;
  bool ang_ok = true;
  bool hw_ok = true;
  bool residual_ok = true;
};

struct ResidualCheckReport {
  int trials = 0;
  int violations_len = 0;
  int violations_ang = 0;
  int violations_hw = 0;
  int violations_residual = 0;
  int rank_deficient = 0;
  double worst_ratio = 0.0;
  double empirical_delta = 0.0;
  double max_identity_error = 0.0;
  std::vector<TrialRecord> per_trial;

  double rate_len() const { return trials ? static_cast<double>(violations_len) / trials : 0.0; }
  double rate_ang() const { return trials ? static_cast<double>(violations_ang) / trials : 0.0; }
  double rate_hw() const { return trials ? static_cast<double>(violations_hw) / trials : 0.0; }
  double rate_residual() const { return empirical_delta; }
  bool all_rates_within(double delta) const;
};

/// Orthogonal pieces of x relative to span(basis) and the projected residual
/// e_proj = R x - P_RS R x, where P_RS projects onto R span(basis).
struct ResidualDecomposition {
  Eigen::VectorXd in_subspace;      ///< x_S
  Eigen::VectorXd orthogonal;       ///< x_perp
  Eigen::VectorXd residual;         ///< e_proj computed as R x - P_RS R x
  Eigen::VectorXd residual_via_perp;///< P_RS^perp R x_perp
  Eigen::VectorXd leakage;          ///< P_RS R x_perp
  int projected_rank = 0;
};

/// basis: M x p with orthonormal columns.
ResidualDecomposition decompose_residual(const SparseProjection& projection,
                                         const Eigen::MatrixXd& basis,
                                         const Eigen::VectorXd& x);

/// Evaluates all four events for explicit vectors. v lies in span(basis),
/// x = x_s + x_perp. Zero-norm inputs count as satisfying every bound.
TrialRecord evaluate_trial(const SparseProjection& projection, const Eigen::MatrixXd& basis,
                           const Eigen::VectorXd& v, const Eigen::VectorXd& x_s,
                           const Eigen::VectorXd& x_perp, const EmbeddingSpec& spec);

/// Orthonormalized Gaussian M x p basis (uniform on the Grassmannian).
Eigen::MatrixXd sample_subspace_basis(int ambient_dim, int subspace_dim, std::uint64_t seed);

/// Fresh-projection parameters; each trial draws its own R from these.
struct ProjectionParams {
  int rows = 0;
  int cols = 0;
  double density = 3.0;
  std::uint64_t seed = 0;
};

/// Length preservation (for a unit v in S and a unit x_perp in S-perp) and
/// the Hanson-Wright event, over random p-dimensional subspaces S of R^M.
/// violations_residual counts trials failing either tested event.
ResidualCheckReport verify_embedding(const SparseProjection& projection,
                                     const EmbeddingSpec& spec, int trials,
                                     std::uint64_t seed,
                                     Execution exec = Execution::kParallel);

/// Full residual-energy check with a fixed projection and random subspaces.
ResidualCheckReport verify_residual_energy(const SparseProjection& projection,
                                           const EmbeddingSpec& spec, int trials,
                                           std::uint64_t seed,
                                           Execution exec = Execution::kParallel);

/// Same check with a fresh projection drawn per trial (probability over R).
ResidualCheckReport verify_residual_energy(const ProjectionParams& params,
                                           const EmbeddingSpec& spec, int trials,
                                           std::uint64_t seed,
                                           Execution exec = Execution::kParallel);

struct DimensionSweepStep {
  int k = 0;
  ResidualCheckReport report;
  bool passed = false;
};

struct DimensionSweep {
  int formula_k = 0;
  int smallest_passing_k = 0;  ///< 0 when even formula_k fails
  double effective_constant = 0.0;
  std::vector<DimensionSweepStep> steps;
};

/// Starts at choose_dimension(spec) and walks k downward (coarse halving,
/// then unit steps inside the last bracket) while every event rate stays
/// <= delta; reports the smallest k of that passing run.
DimensionSweep sweep_dimension(const EmbeddingSpec& spec, int feature_dim, double density,
                               int trials, std::uint64_t seed,
                               Execution exec = Execution::kParallel);

}  // namespace rmrp
