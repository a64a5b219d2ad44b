#include "rmrp/field.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>
#include <string>

#include "rmrp/kernels.hpp"
#include "rmrp/rng.hpp"

namespace rmrp {

const char* to_string(FieldKind kind) {
  switch (kind) {
    case FieldKind::kOccupancy: return "occupancy";
    case FieldKind::kEsdf: return "esdf";
    case FieldKind::kTerrain: return "terrain";
  }
  return "unknown";
}

FieldKind field_kind_from_string(const std::string& name) {
  if (name == "occupancy") return FieldKind::kOccupancy;
  if (name == "esdf") return FieldKind::kEsdf;
  if (name == "terrain") return FieldKind::kTerrain;
  throw std::invalid_argument("unknown field kind '" + name + "'");
}

ParametricField::ParametricField(RandomFeatureMap feature_map, SparseProjection projection,
                                 LinearHead head, FieldKind kind)
    : feature_map_(std::move(feature_map)),
      projection_(std::move(projection)),
      head_(std::move(head)),
      kind_(kind) {
  const int expected_dim = kind_ == FieldKind::kTerrain ? 2 : 3;
  if (feature_map_.input_dim() != expected_dim) {
    throw std::invalid_argument(std::string(to_string(kind_)) + " field needs input_dim " +
                                std::to_string(expected_dim));
  }
  if (projection_.cols() != feature_map_.feature_dim()) {
    throw std::invalid_argument("field: projection cols != feature dimension M");
  }
  set_head(std::move(head_));
}

void ParametricField::set_head(LinearHead head) {
  if (head.weights.size() != projection_.rows()) {
    throw std::invalid_argument("field: head length " + std::to_string(head.weights.size()) +
                                " != projection rows k=" + std::to_string(projection_.rows()));
  }
  head_ = std::move(head);
  backprojected_ = projection_.project_transpose(head_.weights);
}

void ParametricField::check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != input_dim()) {
    throw std::invalid_argument(std::string(to_string(kind_)) + " field query has dimension " +
                                std::to_string(x.size()) + ", expected " +
                                std::to_string(input_dim()));
  }
}

Eigen::VectorXd ParametricField::features(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  Eigen::VectorXd lifted(feature_map_.feature_dim());
  feature_map_.lift_into(x, lifted);
  return projection_.project(lifted);
}

double ParametricField::value(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  Eigen::VectorXd lifted(feature_map_.feature_dim());
  Eigen::VectorXd projected(projection_.rows());
  feature_map_.lift_into(x, lifted);
  projection_.project_into(lifted, projected);
  return head_.weights.dot(projected);
}

Eigen::VectorXd ParametricField::gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  const Eigen::MatrixXd& w = feature_map_.weights();
  const Eigen::VectorXd& b = feature_map_.biases();
  Eigen::VectorXd grad = Eigen::VectorXd::Zero(x.size());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double phase = b(i);
    for (Eigen::Index j = 0; j < w.cols(); ++j) phase += w(i, j) * x(j);
    grad += (backprojected_(i) * std::cos(phase)) * w.row(i).transpose();
  }
  return grad;
}

Eigen::MatrixXd ParametricField::hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  check_input(x);
  const Eigen::MatrixXd& w = feature_map_.weights();
  const Eigen::VectorXd& b = feature_map_.biases();
  Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(x.size(), x.size());
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    double phase = b(i);
    for (Eigen::Index j = 0; j < w.cols(); ++j) phase += w(i, j) * x(j);
    hess -= (backprojected_(i) * std::sin(phase)) * (w.row(i).transpose() * w.row(i));
  }
  return hess;
}

LabeledPoints LabeledPoints::from_rows(const std::vector<Eigen::VectorXd>& points,
                                       const std::vector<double>& targets) {
  if (points.size() != targets.size()) {
    throw std::invalid_argument("LabeledPoints: points/targets size mismatch");
  }
  LabeledPoints out;
  const Eigen::Index dim = points.empty() ? 0 : points.front().size();
  out.points.resize(dim, static_cast<Eigen::Index>(points.size()));
  out.targets.resize(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    out.points.col(static_cast<Eigen::Index>(i)) = points[i];
    out.targets(static_cast<Eigen::Index>(i)) = targets[i];
  }
  return out;
}

LabeledPoints LabeledPoints::subset(const std::vector<std::size_t>& indices) const {
  LabeledPoints out;
  out.points.resize(points.rows(), static_cast<Eigen::Index>(indices.size()));
  out.targets.resize(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.points.col(static_cast<Eigen::Index>(i)) = points.col(static_cast<Eigen::Index>(indices[i]));
    out.targets(static_cast<Eigen::Index>(i)) = targets(static_cast<Eigen::Index>(indices[i]));
  }
  return out;
}

ParametricField make_untrained_field(FieldKind kind, int input_dim, const FieldConfig& config) {
  RandomFeatureMap map =
      RandomFeatureMap::build(input_dim, config.feature_dim, config.feature_seed, config.scale);
  bool identity = config.projection == ProjectionMode::kIdentity ||
                  (config.projection == ProjectionMode::kDefault && kind == FieldKind::kTerrain);
  SparseProjection projection =
      identity ? SparseProjection::identity(config.feature_dim)
               : SparseProjection::build(config.projected_dim, config.feature_dim, config.density,
                                         config.projection_seed);
  const Task task = kind == FieldKind::kOccupancy ? Task::kClassification : Task::kRegression;
  LinearHead head{Eigen::VectorXd::Zero(projection.rows()), task};
  return ParametricField(std::move(map), std::move(projection), std::move(head), kind);
}

FitMetrics classification_metrics(const ParametricField& field, const LabeledPoints& samples,
                                  double tau, Execution exec) {
  FitMetrics m;
  m.count = samples.size();
  if (m.count == 0) return m;
  const Eigen::VectorXd scores = kernels::field_values(field, samples.points, exec);
  std::size_t correct = 0, positives = 0, negatives = 0, true_pos = 0, true_neg = 0;
  double sq = 0.0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const bool label = samples.targets(i) > 0.5;
    const bool predicted = scores(i) > tau;
    if (label == predicted) ++correct;
    if (label) {
      ++positives;
      if (predicted) ++true_pos;
    } else {
      ++negatives;
      if (!predicted) ++true_neg;
    }
    sq += (scores(i) - samples.targets(i)) * (scores(i) - samples.targets(i));
  }
  m.accuracy = static_cast<double>(correct) / static_cast<double>(m.count);
  const double tpr = positives ? static_cast<double>(true_pos) / static_cast<double>(positives) : 1.0;
  const double tnr = negatives ? static_cast<double>(true_neg) / static_cast<double>(negatives) : 1.0;
  m.balanced_accuracy = 0.5 * (tpr + tnr);
  m.mse = sq / static_cast<double>(m.count);
  return m;
}

FitMetrics regression_metrics(const ParametricField& field, const LabeledPoints& samples,
                              Execution exec) {
  FitMetrics m;
  m.count = samples.size();
  if (m.count == 0) return m;
  const Eigen::VectorXd pred = kernels::field_values(field, samples.points, exec);
  const double mean = samples.targets.mean();
  const double ss_res = (pred - samples.targets).squaredNorm();
  const double ss_tot = (samples.targets.array() - mean).square().sum();
  m.mse = ss_res / static_cast<double>(m.count);
  m.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return m;
}

namespace {

void split_samples(const LabeledPoints& samples, const FieldConfig& config, LabeledPoints& train,
                   LabeledPoints& holdout) {
  if (config.holdout_fraction <= 0.0) {
    train = samples;
    holdout = LabeledPoints{Eigen::MatrixXd(samples.points.rows(), 0), Eigen::VectorXd(0)};
    return;
  }
  std::vector<std::size_t> train_idx, holdout_idx;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    Rng rng(derive_seed(config.split_seed, i));
    (rng.uniform() < config.holdout_fraction ? holdout_idx : train_idx).push_back(i);
  }
  train = samples.subset(train_idx);
  holdout = samples.subset(holdout_idx);
}

TrainResult fit(FieldKind kind, int input_dim, const LabeledPoints& samples,
                const FieldConfig& config, double tau) {
  if (samples.size() == 0) {
    throw std::invalid_argument(std::string("cannot train ") + to_string(kind) +
                                " field on an empty sample set");
  }
  if (samples.points.rows() != input_dim) {
    throw std::invalid_argument(std::string(to_string(kind)) + " samples must be " +
                                std::to_string(input_dim) + "-dimensional");
  }
  if (!samples.points.allFinite() || !samples.targets.allFinite()) {
    throw std::invalid_argument("training samples contain non-finite values");
  }
  const auto start = std::chrono::steady_clock::now();
  LabeledPoints train, holdout;
  split_samples(samples, config, train, holdout);
  if (train.size() == 0) throw std::invalid_argument("holdout split left no training samples");

  ParametricField field = make_untrained_field(kind, input_dim, config);
  const kernels::NormalEquations eq = kernels::accumulate_normal_equations(
      field.feature_map(), field.projection(), train.points, train.targets);
  LinearHead head{solve_normal_equations(eq.gram, eq.rhs, config.ridge.alpha),
                  kind == FieldKind::kOccupancy ? Task::kClassification : Task::kRegression};
  field.set_head(std::move(head));
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  TrainResult result{std::move(field), {}, {}, seconds};
  if (kind == FieldKind::kOccupancy) {
    result.train = classification_metrics(result.field, train, tau);
    result.holdout = classification_metrics(result.field, holdout, tau);
  } else {
    result.train = regression_metrics(result.field, train);
    result.holdout = regression_metrics(result.field, holdout);
  }
  return result;
}

}  // namespace

TrainResult train_occupancy(const LabeledPoints& samples, const FieldConfig& config, double tau) {
  bool has_free = false, has_occupied = false;
  for (Eigen::Index i = 0; i < samples.targets.size(); ++i) {
    const double t = samples.targets(i);
    if (t != 0.0 && t != 1.0) {
      throw std::invalid_argument("occupancy labels must be 0 (free) or 1 (occupied)");
    }
    (t > 0.5 ? has_occupied : has_free) = true;
  }
  if (samples.size() > 0 && !(has_free && has_occupied)) {
    throw std::invalid_argument(
        "occupancy training needs both free and occupied samples; decision boundary undefined");
  }
  return fit(FieldKind::kOccupancy, 3, samples, config, tau);
}

TrainResult train_esdf(const LabeledPoints& samples, const FieldConfig& config) {
  if ((samples.targets.array() < 0.0).any()) {
    throw std::invalid_argument("ESDF targets are unsigned distances and must be >= 0");
  }
  return fit(FieldKind::kEsdf, 3, samples, config, 0.0);
}

TrainResult train_terrain(const LabeledPoints& samples, const FieldConfig& config) {
  return fit(FieldKind::kTerrain, 2, samples, config, 0.0);
}

void online_update(ParametricField& field, const Eigen::Ref<const Eigen::VectorXd>& x,
                   double target, AdamWState& state) {
  if (!x.allFinite() || !std::isfinite(target)) {
    throw std::invalid_argument("online_update: non-finite sample");
  }
  const Eigen::VectorXd s = field.features(x);
  LinearHead head = field.head();
  const Eigen::VectorXd grad = streaming_gradient(head, s, target);
  adamw_step(head, state, grad);
  field.set_head(std::move(head));
}

std::vector<Eigen::Vector3d> region_grid(const Box3& region, double pitch) {
  if (!(pitch > 0.0)) throw std::invalid_argument("grid pitch must be > 0");
  std::vector<Eigen::Vector3d> points;
  if (region.empty()) return points;
  const Eigen::Vector3d extent = region.extent();
  int counts[3];
  for (int a = 0; a < 3; ++a) {
    counts[a] = static_cast<int>(std::floor(extent(a) / pitch + 1e-9));
  }
  for (int k = 0; k < counts[2]; ++k) {
    for (int j = 0; j < counts[1]; ++j) {
      for (int i = 0; i < counts[0]; ++i) {
        points.emplace_back(region.min + pitch * Eigen::Vector3d(i + 0.5, j + 0.5, k + 0.5));
      }
    }
  }
  return points;
}

std::vector<CellIndex> complete_blind_spots(const ParametricField& field,
                                            const CompletionConfig& config,
                                            OccupancyStore& store, Execution exec) {
  if (!std::isfinite(config.tau) && !std::isinf(config.tau)) {
    throw std::invalid_argument("completion threshold tau must not be NaN");
  }
  if (field.input_dim() != 3) throw std::invalid_argument("completion needs a 3D field");
  const std::vector<Eigen::Vector3d> grid = region_grid(config.region, config.pitch);
  std::vector<CellIndex> newly;
  if (grid.empty()) return newly;
  Eigen::MatrixXd points(3, static_cast<Eigen::Index>(grid.size()));
  for (std::size_t i = 0; i < grid.size(); ++i) points.col(static_cast<Eigen::Index>(i)) = grid[i];
  const Eigen::VectorXd scores = kernels::field_values(field, points, exec);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (scores(static_cast<Eigen::Index>(i)) > config.tau) {
      const CellIndex cell = store.cell_of(grid[i]);
      if (store.mark_occupied(cell)) newly.push_back(cell);
    }
  }
  std::sort(newly.begin(), newly.end());
  return newly;
}

}  // namespace rmrp
