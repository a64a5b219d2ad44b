#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "rmrp/backend.hpp"
#include "rmrp/embedding_check.hpp"
#include "rmrp/field.hpp"
#include "rmrp/frontend.hpp"
#include "rmrp/scene.hpp"
#include "rmrp/sensing.hpp"

namespace rmrp {

// ---------------------------------------------------------------- sensing

struct SensingConfig {
  int poses = 8;
  double pose_clearance = 0.5;
  ScanConfig scan;
  /// Scans are subsampled (seeded) to at most this many samples.
  std::size_t sample_budget = 50000;
  /// Caps free occupancy samples at this multiple of the occupied ones
  /// (seeded subsample); 0 keeps the natural class mix.
  double free_ratio = 0.0;
  std::uint64_t seed = 5;
};

struct SensedScene {
  std::vector<ScanSample> samples;
  LabeledPoints occupancy;
  LabeledPoints esdf;
};

SensedScene sense_scene(const Scene& scene, const SensingConfig& config);

/// Seeded subset of at most `count` indices out of n, in increasing order.
std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t count, std::uint64_t seed);

// ---------------------------------------------------------------- mapping

struct MappingMetrics {
  std::string variant;
  int feature_dim = 0;
  int projected_dim = 0;
  std::size_t train_samples = 0;
  std::size_t holdout_samples = 0;
  double train_ms = 0.0;
  double query_ms = 0.0;  ///< mean latency of one field_value call
  std::size_t checkpoint_bytes = 0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  double balanced_accuracy = std::numeric_limits<double>::quiet_NaN();
  double r2 = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
};

/// Mean wall time of field.value over the given points (best of `repeats`).
double measure_query_ms(const ParametricField& field, const Eigen::MatrixXd& points,
                        int repeats = 3);

/// Train time, latency, checkpoint size and held-out quality of a trained
/// field. Classification metrics for occupancy, regression otherwise.
MappingMetrics evaluate_mapping(const TrainResult& trained, const LabeledPoints& holdout,
                                double tau, int latency_queries = 2000);

/// Bytes of a dense voxel grid over the box, float per voxel.
std::size_t voxel_grid_bytes(const Box3& box, double pitch, std::size_t bytes_per_voxel = 4);

struct MappingConfig {
  std::string scene = "box-grid";
  SceneParams scene_params{{"size_x", 8.0}, {"size_y", 8.0}, {"rows", 2.0}, {"cols", 2.0}};
  SensingConfig sensing;
  FieldConfig occupancy;
  FieldConfig esdf;
  double tau = 0.5;
  double holdout_fraction = 0.2;
  int latency_queries = 2000;

  MappingConfig();
};

struct MappingComparison {
  MappingMetrics rmrp_occupancy, rm_occupancy, rmrp_esdf, rm_esdf;
};

/// RMRP (k from config) against RM (square projection, k = M) on one
/// seeded scene, occupancy and ESDF.
MappingComparison run_mapping_comparison(const MappingConfig& config, std::uint64_t seed);

// ---------------------------------------------------------------- planning

struct SceneFields {
  TrainResult occupancy;
  TrainResult esdf;
};

/// Scans the scene and fits occupancy and ESDF fields on the samples.
SceneFields train_scene_fields(const Scene& scene, const SensingConfig& sensing,
                               const FieldConfig& occupancy, const FieldConfig& esdf);

/// Scene bounds shrunk by margin on every side (search region).
Box3 inset(const Box3& box, double margin);

/// A* at search.tau; when that rejects an endpoint or finds no path, one
/// retry at fallback_tau (the classification threshold).
SearchResult search_with_fallback(const ParametricField& occupancy, const Eigen::Vector3d& start,
                                  const Eigen::Vector3d& goal, const SearchConfig& search,
                                  double fallback_tau);

struct UavPlanConfig {
  SearchConfig search;
  double fallback_tau = 0.5;
  double search_margin = 0.3;
  bool refine = true;
  RefinementConfig refinement;
  double seed_spacing = 0.4;
  int degree = 3;
  double dt = 0.5;
  TrajectoryCostConfig cost;
  /// Added to cost.clearance inside the collision term to absorb ESDF model
  /// error; clearance is still judged against cost.clearance.
  double model_margin = 0.35;
  OptimizerConfig optimizer;
  int samples = 200;
};

struct UavPlan {
  SearchResult search;
  RefinementResult refinement;
  BSplineTrajectory initial;
  OptimizationResult optimized;
  std::vector<TrajectorySample> samples;
  double search_ms = 0.0;
  double refine_ms = 0.0;
  double optimize_ms = 0.0;
};

/// A* on the occupancy field, optional gradient refinement, B-spline
/// seeding and optimization against the ESDF.
UavPlan plan_uav(const Scene& scene, const ParametricField& occupancy,
                 const ParametricField& esdf, const UavPlanConfig& config);

struct UgvPlanConfig {
  double seed_spacing = 0.4;
  int degree = 3;
  double dt = 0.5;
  TrajectoryCostConfig cost;
  OptimizerConfig optimizer;
  int samples = 200;
};

struct UgvPlan {
  BSplineTrajectory initial;
  OptimizationResult optimized;
  std::vector<TrajectorySample> samples;  ///< 2D positions
  double optimize_ms = 0.0;
};

/// Fits the terrain field on uniform samples over the scene footprint.
TrainResult train_scene_terrain(const Scene& scene, const FieldConfig& config, int samples,
                                std::uint64_t seed);

/// Straight start-goal seed in the plane, optimized with the terrain
/// penalty (weight from config.cost.terrain_weight, 0 = ablation).
UgvPlan plan_ugv(const Scene& scene, const ParametricField& terrain, const UgvPlanConfig& config);

// ---------------------------------------------------------------- completion

/// Prior learned offline from fully observed scenes, then used to fill the
/// masked (occluded) region of a held-out scene.
struct CompletionExperimentConfig {
  std::string scene = "corner";
  SceneParams scene_params;
  int train_scenes = 20;
  int samples_per_scene = 5000;
  FieldConfig field;
  double tau = 0.5;
  double pitch = 0.1;
  /// Scan of the held-out scene that seeds the known map (mask applied).
  SensingConfig sensing;

  CompletionExperimentConfig();
};

struct CompletionOutcome {
  std::size_t occupied_cells = 0;  ///< ground-truth occupied cells in the mask
  std::size_t free_cells = 0;
  std::size_t true_positive = 0;
  std::size_t false_positive = 0;
  double recall = 0.0;
  double false_positive_rate = 0.0;
  std::size_t known_cells = 0;  ///< store size before completion
  std::vector<CellIndex> marked;
  bool idempotent = false;
  double train_ms = 0.0;
  double complete_ms = 0.0;
};

/// Offline training data: uniform ground-truth samples from complete scenes.
LabeledPoints complete_scene_samples(const CompletionExperimentConfig& config, std::uint64_t seed);

/// Scores a completed store against the scene inside region.
void score_completion(const Scene& scene, const Box3& region, double pitch,
                      const OccupancyStore& store, CompletionOutcome& outcome);

/// Known map from a scan that cannot see into region, then completion of
/// region with the field, idempotency re-run and scoring.
CompletionOutcome complete_scene(const ParametricField& field, const Scene& scene,
                                 const Box3& region, const CompletionExperimentConfig& config,
                                 std::uint64_t seed);

CompletionOutcome run_completion_experiment(const CompletionExperimentConfig& config,
                                            std::uint64_t seed);

// ---------------------------------------------------------------- suites

struct BenchmarkConfig {
  std::uint64_t seed = 1;
  int scenes = 10;
  MappingConfig mapping;
  FieldConfig planning_occupancy;
  FieldConfig planning_esdf;
  SensingConfig planning_sensing;
  std::vector<double> frontend_pitches{0.2, 0.15, 0.1};
  UavPlanConfig uav;
  FieldConfig terrain;
  int terrain_samples = 20000;
  UgvPlanConfig ugv;
  EmbeddingSpec theorem;
  int theorem_feature_dim = 400;
  double theorem_density = 3.0;
  int theorem_trials = 2000;

  BenchmarkConfig();
};

struct BenchmarkReport {
  std::string suite;
  bool passed = true;
  std::vector<std::string> checks;  ///< "PASS ..." / "FAIL ..." lines
  std::vector<std::string> files;
};

std::vector<std::string> suite_names();

/// Runs one suite and writes its CSV tables (plus .dat copies for gnuplot)
/// into out_dir. Columns ending in _ms are wall-clock timings; everything
/// else is deterministic per seed.
BenchmarkReport run_benchmark(const std::string& suite, const BenchmarkConfig& config,
                              const std::string& out_dir);

// ---------------------------------------------------------------- csv

/// Fixed formatting used by every table: %.10g for reals.
std::string format_number(double v);

class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  CsvTable& add(std::vector<std::string> row);
  const std::vector<std::string>& header() const { return header_; }
  std::size_t size() const { return rows_.size(); }

  void write(const std::string& path) const;
  /// Whitespace-separated copy with a '#' header line.
  void write_dat(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace rmrp
