#include "rmrp/embedding_check.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rmrp/rng.hpp"

namespace rmrp {

double EmbeddingSpec::c1() const { return std::sqrt(2.0) * (1.0 + epsilon); }
double EmbeddingSpec::c2() const { return 1.0 + c1(); }

void EmbeddingSpec::validate() const {
  if (subspace_dim < 1) throw std::invalid_argument("subspace dimension p must be >= 1");
  if (!(epsilon > 0.0 && epsilon <= 0.3)) {
    throw std::invalid_argument("distortion epsilon must lie in (0, 0.3]");
  }
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(constant > 0.0) || !std::isfinite(constant)) {
    throw std::invalid_argument("dimension constant C must be positive");
  }
}

int choose_dimension(const EmbeddingSpec& spec) {
  spec.validate();
  const double p = spec.subspace_dim;
  const double k = spec.constant * p * std::log(p / spec.delta) / (spec.epsilon * spec.epsilon);
  return static_cast<int>(std::ceil(k));
}

bool ResidualCheckReport::all_rates_within(double delta) const {
  return rate_len() <= delta && rate_ang() <= delta && rate_hw() <= delta &&
         rate_residual() <= delta;
}

Eigen::MatrixXd sample_subspace_basis(int ambient_dim, int subspace_dim, std::uint64_t seed) {
  if (subspace_dim > ambient_dim) {
    throw std::invalid_argument("subspace dimension exceeds ambient dimension");
  }
  Rng rng(seed);
  Eigen::MatrixXd gaussian(ambient_dim, subspace_dim);
  for (int j = 0; j < subspace_dim; ++j) {
    for (int i = 0; i < ambient_dim; ++i) gaussian(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gaussian);
  return qr.householderQ() * Eigen::MatrixXd::Identity(ambient_dim, subspace_dim);
}

namespace {

// Orthonormal basis of range(a) via column-pivoted QR; rank decided with a
// relative threshold on |R_ii|.
Eigen::MatrixXd range_basis(const Eigen::MatrixXd& a, int* rank) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  qr.setThreshold(1e-10);
  *rank = static_cast<int>(qr.rank());
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  return q.leftCols(*rank);
}

Eigen::VectorXd project_onto(const Eigen::MatrixXd& basis, const Eigen::VectorXd& y) {
  if (basis.cols() == 0) return Eigen::VectorXd::Zero(y.size());
  return basis * (basis.transpose() * y);
}

}  // namespace

ResidualDecomposition decompose_residual(const SparseProjection& projection,
                                         const Eigen::MatrixXd& basis,
                                         const Eigen::VectorXd& x) {
  if (basis.rows() != projection.cols() || x.size() != projection.cols()) {
    throw std::invalid_argument("decompose_residual: dimension mismatch");
  }
  ResidualDecomposition out;
  out.in_subspace = basis * (basis.transpose() * x);
  out.orthogonal = x - out.in_subspace;
  const Eigen::MatrixXd image = projection.project_columns(basis);
  const Eigen::MatrixXd image_basis = range_basis(image, &out.projected_rank);
  const Eigen::VectorXd rx = projection.project(x);
  out.residual = rx - project_onto(image_basis, rx);
  const Eigen::VectorXd rperp = projection.project(out.orthogonal);
  out.leakage = project_onto(image_basis, rperp);
  out.residual_via_perp = rperp - out.leakage;
  return out;
}

TrialRecord evaluate_trial(const SparseProjection& projection, const Eigen::MatrixXd& basis,
                           const Eigen::VectorXd& v, const Eigen::VectorXd& x_s,
                           const Eigen::VectorXd& x_perp, const EmbeddingSpec& spec) {
  const double eps = spec.epsilon;
  TrialRecord rec;

  const double v_norm = v.norm();
  if (v_norm > 0.0) {
    rec.length_ratio_subspace = std::abs(projection.project(v).norm() - v_norm) / v_norm;
  }
  const double perp_norm = x_perp.norm();
  const Eigen::VectorXd rperp = projection.project(x_perp);
  if (perp_norm > 0.0) {
    const double rperp_norm = rperp.norm();
    rec.length_ratio_orthogonal = std::abs(rperp_norm - perp_norm) / perp_norm;
    rec.hw_ratio = std::abs(rperp_norm * rperp_norm - perp_norm * perp_norm) /
                   (perp_norm * perp_norm);
  }

  int rank = 0;
  const Eigen::MatrixXd image_basis = range_basis(projection.project_columns(basis), &rank);
  rec.rank_deficient = rank < basis.cols();

  const Eigen::VectorXd x = x_s + x_perp;
  const Eigen::VectorXd rx = projection.project(x);
  const Eigen::VectorXd residual = rx - project_onto(image_basis, rx);
  const Eigen::VectorXd leakage = project_onto(image_basis, rperp);
  rec.identity_error = (residual - (rperp - leakage)).norm();

  if (perp_norm > 0.0) {
    rec.angle_ratio = leakage.norm() / perp_norm;
    rec.residual_norm_ratio = residual.norm() / perp_norm;
    rec.residual_ratio = std::abs(residual.squaredNorm() - perp_norm * perp_norm) /
                         (perp_norm * perp_norm);
  } else {
    rec.residual_norm_ratio = 1.0;
  }

  rec.len_ok = rec.length_ratio_subspace <= eps && rec.length_ratio_orthogonal <= eps;
  rec.hw_ok = rec.hw_ratio <= eps;
  rec.ang_ok = perp_norm == 0.0 || rec.angle_ratio <= spec.c1() * eps;
  const double c2e = spec.c2() * eps;
  rec.residual_ok = perp_norm == 0.0 ||
                    (rec.residual_norm_ratio >= 1.0 - c2e && rec.residual_norm_ratio <= 1.0 + c2e &&
                     rec.residual_ratio <= 2.0 * c2e);
  return rec;
}

namespace {

struct TrialVectors {
  Eigen::MatrixXd basis;
  Eigen::VectorXd v;
  Eigen::VectorXd x_s;
  Eigen::VectorXd x_perp;
};

TrialVectors sample_trial(int ambient, int p, std::uint64_t seed) {
  TrialVectors t;
  t.basis = sample_subspace_basis(ambient, p, derive_seed(seed, 0));
  Rng rng(derive_seed(seed, 1));
  Eigen::VectorXd z(p);
  for (int i = 0; i < p; ++i) z(i) = rng.normal();
  t.v = t.basis * (z / z.norm());
  for (int i = 0; i < p; ++i) z(i) = rng.normal();
  t.x_s = t.basis * z;
  Eigen::VectorXd g(ambient);
  for (int i = 0; i < ambient; ++i) g(i) = rng.normal();
  // Two Gram-Schmidt passes keep x_perp orthogonal to working precision.
  g -= t.basis * (t.basis.transpose() * g);
  g -= t.basis * (t.basis.transpose() * g);
  t.x_perp = g / g.norm();
  return t;
}

ResidualCheckReport aggregate(std::vector<TrialRecord> records, bool full) {
  ResidualCheckReport report;
  report.trials = static_cast<int>(records.size());
  for (const TrialRecord& r : records) {
    if (!r.len_ok) ++report.violations_len;
    if (!r.hw_ok) ++report.violations_hw;
    if (full) {
      if (!r.ang_ok) ++report.violations_ang;
      if (!r.residual_ok) ++report.violations_residual;
      if (r.rank_deficient) ++report.rank_deficient;
      report.worst_ratio = std::max(report.worst_ratio, r.residual_ratio);
      report.max_identity_error = std::max(report.max_identity_error, r.identity_error);
    } else {
      if (!r.len_ok || !r.hw_ok) ++report.violations_residual;
      report.worst_ratio = std::max(report.worst_ratio, r.hw_ratio);
    }
  }
  report.empirical_delta =
      report.trials ? static_cast<double>(report.violations_residual) / report.trials : 0.0;
  report.per_trial = std::move(records);
  return report;
}

template <typename ProjectionFor>
ResidualCheckReport run_trials(int ambient, const EmbeddingSpec& spec, int trials,
                               std::uint64_t seed, bool full, Execution exec,
                               ProjectionFor&& projection_for) {
  spec.validate();
  if (trials < 1) throw std::invalid_argument("verification needs trials >= 1");
  if (spec.subspace_dim > ambient) {
    throw std::invalid_argument("subspace dimension p exceeds feature dimension M");
  }
  std::vector<TrialRecord> records(static_cast<std::size_t>(trials));
  for_each_index(records.size(), exec, [&](std::size_t t) {
    const TrialVectors tv = sample_trial(ambient, spec.subspace_dim, derive_seed(seed, t));
    const auto& projection = projection_for(t);
    TrialRecord rec;
    if (full) {
      rec = evaluate_trial(projection, tv.basis, tv.v, tv.x_s, tv.x_perp, spec);
    } else {
      const double eps = spec.epsilon;
      rec.length_ratio_subspace = std::abs(projection.project(tv.v).norm() - 1.0);
      const double rn = projection.project(tv.x_perp).norm();
      rec.length_ratio_orthogonal = std::abs(rn - 1.0);
      rec.hw_ratio = std::abs(rn * rn - 1.0);
      rec.len_ok = rec.length_ratio_subspace <= eps && rec.length_ratio_orthogonal <= eps;
      rec.hw_ok = rec.hw_ratio <= eps;
    }
    records[t] = rec;
  });
  return aggregate(std::move(records), full);
}

}  // namespace

ResidualCheckReport verify_embedding(const SparseProjection& projection,
                                     const EmbeddingSpec& spec, int trials,
                                     std::uint64_t seed, Execution exec) {
  return run_trials(projection.cols(), spec, trials, seed, false, exec,
                    [&](std::size_t) -> const SparseProjection& { return projection; });
}

ResidualCheckReport verify_residual_energy(const SparseProjection& projection,
                                           const EmbeddingSpec& spec, int trials,
                                           std::uint64_t seed, Execution exec) {
  return run_trials(projection.cols(), spec, trials, seed, true, exec,
                    [&](std::size_t) -> const SparseProjection& { return projection; });
}

ResidualCheckReport verify_residual_energy(const ProjectionParams& params,
                                           const EmbeddingSpec& spec, int trials,
                                           std::uint64_t seed, Execution exec) {
  return run_trials(params.cols, spec, trials, seed, true, exec, [&](std::size_t t) {
    return SparseProjection::build(params.rows, params.cols, params.density,
                                   derive_seed(params.seed, t));
  });
}

DimensionSweep sweep_dimension(const EmbeddingSpec& spec, int feature_dim, double density,
                               int trials, std::uint64_t seed, Execution exec) {
  DimensionSweep sweep;
  sweep.formula_k = std::min(choose_dimension(spec), feature_dim);

  auto evaluate = [&](int k) {
    DimensionSweepStep step;
    step.k = k;
    step.report = verify_residual_energy(
        ProjectionParams{k, feature_dim, density, derive_seed(seed, 1000003ULL + static_cast<std::uint64_t>(k))},
        spec, trials, seed, exec);
    step.report.per_trial.clear();
    step.passed = step.report.all_rates_within(spec.delta) &&
                  step.report.max_identity_error <= 1e-10;
    sweep.steps.push_back(step);
    return step.passed;
  };

  if (!evaluate(sweep.formula_k)) return sweep;
  int passing = sweep.formula_k;
  int failing = 0;
  while (passing > 1) {
    const int candidate = passing / 2;
    if (evaluate(candidate)) {
      passing = candidate;
    } else {
      failing = candidate;
      break;
    }
  }
  while (passing - failing > 1) {
    const int mid = failing + (passing - failing) / 2;
    if (evaluate(mid)) {
      passing = mid;
    } else {
      failing = mid;
    }
  }
  sweep.smallest_passing_k = passing;
  const double p = spec.subspace_dim;
  sweep.effective_constant =
      passing * spec.epsilon * spec.epsilon / (p * std::log(p / spec.delta));
  return sweep;
}

}  // namespace rmrp
