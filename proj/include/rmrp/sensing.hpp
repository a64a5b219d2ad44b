#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "rmrp/field.hpp"
#include "rmrp/geometry.hpp"
#include "rmrp/scene.hpp"

namespace rmrp {

/// One labeled point: occupancy label in {0, 1}, distance or elevation,
/// plus the id of the ray that produced it (-1 for non-scan samples).
struct ScanSample {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  double label = 0.0;
  int ray = -1;
};

struct ScanConfig {
  int ray_count = 2000;
  double max_range = 12.0;
  /// Spacing of free samples along a ray.
  double free_stride = 0.25;
  /// Free samples stop this far short of the hit, so the inverse sensor
  /// model never labels the surface itself free.
  double free_margin = 0.1;
  /// Occupied samples continue this far past the hit, one per free_stride
  /// (the thickness term of the classic inverse sensor model). 0 keeps
  /// just the surface sample.
  double hit_thickness = 0.0;
  /// Simulated occlusion: no samples are emitted inside this box.
  std::optional<Box3> mask;
};

/// Unit directions spread evenly over the sphere (Fibonacci lattice).
std::vector<Eigen::Vector3d> sphere_directions(int count);

/// Ray-casts from pose against every primitive. Each ray yields free
/// samples at multiples of free_stride up to the hit (minus free_margin)
/// and one occupied sample on the hit surface (plus samples behind it when
/// hit_thickness > 0). Rays end at max_range or
/// where they leave the scene bounds.
std::vector<ScanSample> simulate_scan(const Scene& scene, const Eigen::Vector3d& pose,
                                      const ScanConfig& config);

/// Nearest hit along a unit ray over all primitives.
std::optional<double> cast_ray(const Scene& scene, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir);

/// Seeded sensor poses in free space, at least `clearance` from every
/// obstacle and the bounds.
std::vector<Eigen::Vector3d> sample_free_poses(const Scene& scene, int count, double clearance,
                                               std::uint64_t seed);

/// Scans from every pose and concatenates the samples in pose order.
std::vector<ScanSample> scan_from_poses(const Scene& scene,
                                        const std::vector<Eigen::Vector3d>& poses,
                                        const ScanConfig& config);

LabeledPoints occupancy_dataset(const std::vector<ScanSample>& samples);

/// Free scan samples relabeled with their brute-force obstacle distance.
LabeledPoints esdf_dataset(const Scene& scene, const std::vector<ScanSample>& samples);

/// Uniform points in a region labeled by ground-truth containment.
LabeledPoints volumetric_occupancy_samples(const Scene& scene, const Box3& region, int count,
                                           std::uint64_t seed);

/// Uniform (x, y) points labeled by terrain elevation.
LabeledPoints terrain_samples(const Terrain& terrain, const Eigen::Vector2d& lo,
                              const Eigen::Vector2d& hi, int count, std::uint64_t seed);

}  // namespace rmrp
