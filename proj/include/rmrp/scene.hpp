#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "rmrp/geometry.hpp"

namespace rmrp {

struct BoxObstacle {
  Box3 box;
};

struct SphereObstacle {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 1.0;
};

/// Vertical cylinder.
struct CylinderObstacle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.5;
  double z_min = 0.0;
  double z_max = 1.0;
};

using Obstacle = std::variant<BoxObstacle, SphereObstacle, CylinderObstacle>;

/// Euclidean distance to the obstacle, 0 inside.
double obstacle_distance(const Obstacle& obstacle, const Eigen::Vector3d& p);
bool obstacle_contains(const Obstacle& obstacle, const Eigen::Vector3d& p);
/// Smallest t >= 0 with origin + t dir on the obstacle surface, if any
/// (dir must be unit length). Origins inside report t = 0.
std::optional<double> obstacle_ray_hit(const Obstacle& obstacle, const Eigen::Vector3d& origin,
                                       const Eigen::Vector3d& dir);
Box3 obstacle_bounds(const Obstacle& obstacle);

enum class TerrainBase : std::uint8_t { kFlat, kSlope, kSineRidge };

/// Raised-cosine depression: depth * (1 + cos(pi rho / radius)) / 2 below
/// the base surface for rho < radius.
struct Pit {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 1.0;
  double depth = 0.5;
};

struct Terrain {
  TerrainBase base = TerrainBase::kFlat;
  double height = 0.0;
  Eigen::Vector2d slope = Eigen::Vector2d::Zero();  ///< kSlope: dz/dx, dz/dy
  double amplitude = 0.5;                           ///< kSineRidge: z = h + a sin(f x)
  double frequency = 1.0;
  std::vector<Pit> pits;

  double base_height(const Eigen::Vector2d& xy) const;
  double elevation(const Eigen::Vector2d& xy) const;
  /// True when the ground lies more than margin below the pit-free surface.
  bool in_pit(const Eigen::Vector2d& xy, double margin = 0.05) const;
};

struct Scene {
  std::string name;
  std::uint64_t seed = 0;
  Box3 bounds;
  std::vector<Obstacle> obstacles;
  std::optional<Terrain> terrain;
  std::optional<Eigen::Vector3d> start;
  std::optional<Eigen::Vector3d> goal;
  /// Region hidden from the sensor (blind spot), if the generator defines one.
  std::optional<Box3> occluded;
};

using SceneParams = std::map<std::string, double>;

/// Known names: box-grid, corner, forest-random, pits-flat, pits-slope,
/// sphere-single. Deterministic per (name, params, seed).
Scene generate_scene(const std::string& name, const SceneParams& params, std::uint64_t seed);
std::vector<std::string> scene_names();

/// Exact minimum distance to the union of obstacles; 0 inside any of them.
/// Returns +inf for a scene without obstacles.
double brute_force_esdf(const Scene& scene, const Eigen::Vector3d& x);
bool scene_occupied(const Scene& scene, const Eigen::Vector3d& x);

/// Text scene format, see docs/scene_format.md.
void write_scene(std::ostream& out, const Scene& scene);
Scene read_scene(std::istream& in);
void save_scene(const std::string& path, const Scene& scene);
Scene load_scene(const std::string& path);

}  // namespace rmrp
