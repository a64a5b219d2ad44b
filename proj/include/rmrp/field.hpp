#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <vector>

#include "rmrp/geometry.hpp"
#include "rmrp/linear_model.hpp"
#include "rmrp/occupancy_store.hpp"
#include "rmrp/parallel.hpp"
#include "rmrp/random_features.hpp"
#include "rmrp/sparse_projection.hpp"

namespace rmrp {

enum class FieldKind : std::uint8_t { kOccupancy = 0, kEsdf = 1, kTerrain = 2 };

const char* to_string(FieldKind kind);
FieldKind field_kind_from_string(const std::string& name);

/// head . R g(W x + b), specialised as occupancy score, unsigned distance or
/// terrain elevation. Value, gradient and Hessian are all closed form.
///
/// The back-projected weights h = R^T head are cached so gradient/Hessian
/// queries cost O(M d) and never touch R. A published field is immutable
/// and safe for concurrent readers; online updates go through set_head on a
/// private copy.
class ParametricField {
 public:
  ParametricField(RandomFeatureMap feature_map, SparseProjection projection, LinearHead head,
                  FieldKind kind);

  FieldKind kind() const { return kind_; }
  int input_dim() const { return feature_map_.input_dim(); }
  const RandomFeatureMap& feature_map() const { return feature_map_; }
  const SparseProjection& projection() const { return projection_; }
  const LinearHead& head() const { return head_; }
  const Eigen::VectorXd& backprojected_weights() const { return backprojected_; }

  void set_head(LinearHead head);

  /// Projected features R g(W x + b).
  Eigen::VectorXd features(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  double value(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd gradient(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::MatrixXd hessian(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  void check_input(const Eigen::Ref<const Eigen::VectorXd>& x) const;

  RandomFeatureMap feature_map_;
  SparseProjection projection_;
  LinearHead head_;
  FieldKind kind_;
  Eigen::VectorXd backprojected_;
};

enum class ProjectionMode : std::uint8_t { kDefault, kSparse, kIdentity };

/// Dimensions, seeds and regularization for building a field. kDefault
/// means sparse for occupancy/ESDF and identity for terrain.
struct FieldConfig {
  int feature_dim = 100;
  int projected_dim = 50;
  double density = 3.0;
  double scale = 1.0;
  std::uint64_t feature_seed = 1;
  std::uint64_t projection_seed = 2;
  ProjectionMode projection = ProjectionMode::kDefault;
  RidgeConfig ridge;
  /// Fraction of samples withheld for the reported holdout metrics.
  double holdout_fraction = 0.0;
  std::uint64_t split_seed = 3;
};

/// Column-major sample set: points is d x L, targets length L.
struct LabeledPoints {
  Eigen::MatrixXd points;
  Eigen::VectorXd targets;

  std::size_t size() const { return static_cast<std::size_t>(targets.size()); }
  static LabeledPoints from_rows(const std::vector<Eigen::VectorXd>& points,
                                 const std::vector<double>& targets);
  LabeledPoints subset(const std::vector<std::size_t>& indices) const;
};

struct FitMetrics {
  std::size_t count = 0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double balanced_accuracy = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
};

struct TrainResult {
  ParametricField field;
  FitMetrics train;
  FitMetrics holdout;
  double seconds = 0.0;
};

/// Builds W, b and R from config without fitting (head = 0).
ParametricField make_untrained_field(FieldKind kind, int input_dim, const FieldConfig& config);

/// Offline fit: lift, project, ridge-solve. Occupancy targets are {0, 1}
/// regressed directly; prediction is score > tau.
TrainResult train_occupancy(const LabeledPoints& samples, const FieldConfig& config,
                            double tau = 0.5);
TrainResult train_esdf(const LabeledPoints& samples, const FieldConfig& config);
TrainResult train_terrain(const LabeledPoints& samples, const FieldConfig& config);

FitMetrics classification_metrics(const ParametricField& field, const LabeledPoints& samples,
                                  double tau, Execution exec = Execution::kParallel);
FitMetrics regression_metrics(const ParametricField& field, const LabeledPoints& samples,
                              Execution exec = Execution::kParallel);

/// One streaming gradient + AdamW step on the head; W, b and R stay fixed.
void online_update(ParametricField& field, const Eigen::Ref<const Eigen::VectorXd>& x,
                   double target, AdamWState& state);

struct CompletionConfig {
  double tau = 0.5;
  Box3 region;
  double pitch = 0.1;
};

/// Evaluates the field at every grid point of the region and marks cells
/// scoring above tau as occupied. The field is not modified. Returns the
/// cells that were newly marked, in lexicographic order.
std::vector<CellIndex> complete_blind_spots(const ParametricField& field,
                                            const CompletionConfig& config,
                                            OccupancyStore& store,
                                            Execution exec = Execution::kParallel);

/// Grid points of a region at the given pitch (cell centers), x-fastest.
std::vector<Eigen::Vector3d> region_grid(const Box3& region, double pitch);

}  // namespace rmrp
