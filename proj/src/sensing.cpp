#include "rmrp/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rmrp/rng.hpp"

namespace rmrp {

namespace {

// Distance along a unit ray from an interior origin to the bounds.
double exit_distance(const Box3& bounds, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  double t = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    if (d(a) > 1e-15) t = std::min(t, (bounds.max(a) - o(a)) / d(a));
    if (d(a) < -1e-15) t = std::min(t, (bounds.min(a) - o(a)) / d(a));
  }
  return std::max(t, 0.0);
}

}  // namespace

std::vector<Eigen::Vector3d> sphere_directions(int count) {
  std::vector<Eigen::Vector3d> dirs;
  if (count <= 0) return dirs;
  dirs.reserve(static_cast<std::size_t>(count));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < count; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / count;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    dirs.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return dirs;
}

std::optional<double> cast_ray(const Scene& scene, const Eigen::Vector3d& origin,
                               const Eigen::Vector3d& dir) {
  std::optional<double> best;
  for (const Obstacle& o : scene.obstacles) {
    const auto t = obstacle_ray_hit(o, origin, dir);
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

std::vector<ScanSample> simulate_scan(const Scene& scene, const Eigen::Vector3d& pose,
                                      const ScanConfig& config) {
  if (config.free_stride <= 0.0) throw std::invalid_argument("scan free_stride must be > 0");
  std::vector<ScanSample> samples;
  const auto dirs = sphere_directions(config.ray_count);
  auto emit = [&](const Eigen::Vector3d& p, double label, int ray) {
    if (config.mask && config.mask->contains(p)) return;
    samples.push_back(ScanSample{p, label, ray});
  };
  for (int ray = 0; ray < static_cast<int>(dirs.size()); ++ray) {
    const Eigen::Vector3d& d = dirs[static_cast<std::size_t>(ray)];
    const double t_exit = std::min(exit_distance(scene.bounds, pose, d), config.max_range);
    const auto hit = cast_ray(scene, pose, d);
    const bool hit_seen = hit && *hit <= t_exit;
    const double free_end = hit_seen ? *hit - config.free_margin : t_exit;
    for (int j = 1;; ++j) {
      const double t = j * config.free_stride;
      if (t > free_end) break;
      emit(pose + t * d, 0.0, ray);
    }
    if (hit_seen) {
      emit(pose + *hit * d, 1.0, ray);
      for (int j = 1; j * config.free_stride <= config.hit_thickness; ++j) {
        const Eigen::Vector3d p = pose + (*hit + j * config.free_stride) * d;
        if (scene_occupied(scene, p)) emit(p, 1.0, ray);
      }
    }
  }
  return samples;
}

std::vector<Eigen::Vector3d> sample_free_poses(const Scene& scene, int count, double clearance,
                                               std::uint64_t seed) {
  std::vector<Eigen::Vector3d> poses;
  Rng rng(seed);
  const Eigen::Vector3d lo = scene.bounds.min.array() + clearance;
  const Eigen::Vector3d hi = scene.bounds.max.array() - clearance;
  if ((hi.array() < lo.array()).any()) throw std::invalid_argument("bounds too small for poses");
  int attempts = 0;
  while (static_cast<int>(poses.size()) < count) {
    if (++attempts > 100000 + 1000 * count) {
      throw std::runtime_error("could not place sensor poses in free space");
    }
    const Eigen::Vector3d p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()),
                            rng.uniform(lo.z(), hi.z()));
    if (brute_force_esdf(scene, p) >= clearance) poses.push_back(p);
  }
  return poses;
}

std::vector<ScanSample> scan_from_poses(const Scene& scene,
                                        const std::vector<Eigen::Vector3d>& poses,
                                        const ScanConfig& config) {
  std::vector<ScanSample> all;
  for (const auto& pose : poses) {
    auto part = simulate_scan(scene, pose, config);
    all.insert(all.end(), part.begin(), part.end());
  }
  return all;
}

LabeledPoints occupancy_dataset(const std::vector<ScanSample>& samples) {
  LabeledPoints out{Eigen::MatrixXd(3, static_cast<Eigen::Index>(samples.size())),
                    Eigen::VectorXd(static_cast<Eigen::Index>(samples.size()))};
  for (std::size_t i = 0; i < samples.size(); ++i) {
    out.points.col(static_cast<Eigen::Index>(i)) = samples[i].position;
    out.targets(static_cast<Eigen::Index>(i)) = samples[i].label;
  }
  return out;
}

LabeledPoints esdf_dataset(const Scene& scene, const std::vector<ScanSample>& samples) {
  std::vector<Eigen::Vector3d> pts;
  std::vector<double> targets;
  for (const ScanSample& s : samples) {
    if (s.label != 0.0) continue;
    const double d = brute_force_esdf(scene, s.position);
    if (!std::isfinite(d)) continue;
    pts.push_back(s.position);
    targets.push_back(d);
  }
  LabeledPoints out{Eigen::MatrixXd(3, static_cast<Eigen::Index>(pts.size())),
                    Eigen::Map<const Eigen::VectorXd>(targets.data(),
                                                      static_cast<Eigen::Index>(targets.size()))};
  for (std::size_t i = 0; i < pts.size(); ++i) out.points.col(static_cast<Eigen::Index>(i)) = pts[i];
  return out;
}

LabeledPoints volumetric_occupancy_samples(const Scene& scene, const Box3& region, int count,
                                           std::uint64_t seed) {
  LabeledPoints out{Eigen::MatrixXd(3, count), Eigen::VectorXd(count)};
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const Eigen::Vector3d p(rng.uniform(region.min.x(), region.max.x()),
                            rng.uniform(region.min.y(), region.max.y()),
                            rng.uniform(region.min.z(), region.max.z()));
    out.points.col(i) = p;
    out.targets(i) = scene_occupied(scene, p) ? 1.0 : 0.0;
  }
  return out;
}

LabeledPoints terrain_samples(const Terrain& terrain, const Eigen::Vector2d& lo,
                              const Eigen::Vector2d& hi, int count, std::uint64_t seed) {
  LabeledPoints out{Eigen::MatrixXd(2, count), Eigen::VectorXd(count)};
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    const Eigen::Vector2d p(rng.uniform(lo.x(), hi.x()), rng.uniform(lo.y(), hi.y()));
    out.points.col(i) = p;
    out.targets(i) = terrain.elevation(p);
  }
  return out;
}

}  // namespace rmrp
