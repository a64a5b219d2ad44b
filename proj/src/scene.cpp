#include "rmrp/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "rmrp/rng.hpp"

namespace rmrp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::optional<double> box_hit(const Box3& box, const Eigen::Vector3d& o, const Eigen::Vector3d& d) {
  double t_enter = -kInf, t_exit = kInf;
  for (int a = 0; a < 3; ++a) {
    if (std::abs(d(a)) < 1e-15) {
      if (o(a) < box.min(a) || o(a) > box.max(a)) return std::nullopt;
      continue;
    }
    double t1 = (box.min(a) - o(a)) / d(a);
    double t2 = (box.max(a) - o(a)) / d(a);
    if (t1 > t2) std::swap(t1, t2);
    t_enter = std::max(t_enter, t1);
    t_exit = std::min(t_exit, t2);
  }
  if (t_enter > t_exit || t_exit < 0.0) return std::nullopt;
  return std::max(t_enter, 0.0);
}

std::optional<double> sphere_hit(const SphereObstacle& s, const Eigen::Vector3d& o,
                                 const Eigen::Vector3d& d) {
  const Eigen::Vector3d oc = o - s.center;
  const double c = oc.squaredNorm() - s.radius * s.radius;
  if (c <= 0.0) return 0.0;
  const double b = oc.dot(d);
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double t = -b - std::sqrt(disc);
  if (t < 0.0) return std::nullopt;
  return t;
}

std::optional<double> cylinder_hit(const CylinderObstacle& cyl, const Eigen::Vector3d& o,
                                   const Eigen::Vector3d& d) {
  if (obstacle_contains(Obstacle{cyl}, o)) return 0.0;
  std::optional<double> best;
  auto consider = [&](double t) {
    if (t >= 0.0 && (!best || t < *best)) best = t;
  };
  const Eigen::Vector2d oc(o.x() - cyl.center.x(), o.y() - cyl.center.y());
  const Eigen::Vector2d dxy(d.x(), d.y());
  const double a = dxy.squaredNorm();
  if (a > 1e-15) {
    const double b = oc.dot(dxy);
    const double c = oc.squaredNorm() - cyl.radius * cyl.radius;
    const double disc = b * b - a * c;
    if (disc >= 0.0) {
      const double t = (-b - std::sqrt(disc)) / a;
      const double z = o.z() + t * d.z();
      if (z >= cyl.z_min && z <= cyl.z_max) consider(t);
    }
  }
  if (std::abs(d.z()) > 1e-15) {
    for (double zc : {cyl.z_min, cyl.z_max}) {
      const double t = (zc - o.z()) / d.z();
      const Eigen::Vector2d p = oc + t * dxy;
      if (p.squaredNorm() <= cyl.radius * cyl.radius) consider(t);
    }
  }
  return best;
}

}  // namespace

double obstacle_distance(const Obstacle& obstacle, const Eigen::Vector3d& p) {
  return std::visit(
      Overloaded{
          [&](const BoxObstacle& b) {
            const Eigen::Vector3d below = (b.box.min - p).cwiseMax(0.0);
            const Eigen::Vector3d above = (p - b.box.max).cwiseMax(0.0);
            return (below + above).norm();
          },
          [&](const SphereObstacle& s) { return std::max((p - s.center).norm() - s.radius, 0.0); },
          [&](const CylinderObstacle& c) {
            const double radial =
                std::max(std::hypot(p.x() - c.center.x(), p.y() - c.center.y()) - c.radius, 0.0);
            const double vertical = std::max({c.z_min - p.z(), p.z() - c.z_max, 0.0});
            return std::hypot(radial, vertical);
          }},
      obstacle);
}

bool obstacle_contains(const Obstacle& obstacle, const Eigen::Vector3d& p) {
  return std::visit(
      Overloaded{[&](const BoxObstacle& b) { return b.box.contains(p); },
                 [&](const SphereObstacle& s) {
                   return (p - s.center).squaredNorm() <= s.radius * s.radius;
                 },
                 [&](const CylinderObstacle& c) {
                   const double dx = p.x() - c.center.x(), dy = p.y() - c.center.y();
                   return dx * dx + dy * dy <= c.radius * c.radius && p.z() >= c.z_min &&
                          p.z() <= c.z_max;
                 }},
      obstacle);
}

std::optional<double> obstacle_ray_hit(const Obstacle& obstacle, const Eigen::Vector3d& origin,
                                       const Eigen::Vector3d& dir) {
  return std::visit(Overloaded{[&](const BoxObstacle& b) { return box_hit(b.box, origin, dir); },
                               [&](const SphereObstacle& s) { return sphere_hit(s, origin, dir); },
                               [&](const CylinderObstacle& c) {
                                 return cylinder_hit(c, origin, dir);
                               }},
                    obstacle);
}

Box3 obstacle_bounds(const Obstacle& obstacle) {
  return std::visit(
      Overloaded{[](const BoxObstacle& b) { return b.box; },
                 [](const SphereObstacle& s) {
                   const Eigen::Vector3d r = Eigen::Vector3d::Constant(s.radius);
                   return Box3{s.center - r, s.center + r};
                 },
                 [](const CylinderObstacle& c) {
                   return Box3{Eigen::Vector3d(c.center.x() - c.radius, c.center.y() - c.radius,
                                               c.z_min),
                               Eigen::Vector3d(c.center.x() + c.radius, c.center.y() + c.radius,
                                               c.z_max)};
                 }},
      obstacle);
}

double Terrain::base_height(const Eigen::Vector2d& xy) const {
  switch (base) {
    case TerrainBase::kFlat: return height;
    case TerrainBase::kSlope: return height + slope.dot(xy);
    case TerrainBase::kSineRidge: return height + amplitude * std::sin(frequency * xy.x());
  }
  return height;
}

double Terrain::elevation(const Eigen::Vector2d& xy) const {
  double z = base_height(xy);
  for (const Pit& pit : pits) {
    const double rho = (xy - pit.center).norm();
    if (rho < pit.radius) {
      z -= pit.depth * 0.5 * (1.0 + std::cos(std::numbers::pi * rho / pit.radius));
    }
  }
  return z;
}

bool Terrain::in_pit(const Eigen::Vector2d& xy, double margin) const {
  return elevation(xy) < base_height(xy) - margin;
}

namespace {

double param(const SceneParams& params, const std::string& key, double fallback) {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

Obstacle box_obstacle(double x0, double y0, double z0, double x1, double y1, double z1) {
  return BoxObstacle{Box3{Eigen::Vector3d(x0, y0, z0), Eigen::Vector3d(x1, y1, z1)}};
}

Scene box_grid(const SceneParams& params, std::uint64_t seed) {
  const double sx = param(params, "size_x", 10.0);
  const double sy = param(params, "size_y", 10.0);
  const double h = param(params, "height", 3.0);
  const int rows = static_cast<int>(param(params, "rows", 3));
  const int cols = static_cast<int>(param(params, "cols", 3));
  const double width = param(params, "box", 1.0);
  const double jitter = param(params, "jitter", 0.5);
  Scene scene;
  scene.bounds = Box3{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(sx, sy, h)};
  Rng rng(seed);
  const double cell_x = sx / cols, cell_y = sy / rows;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const double room_x = std::max(0.0, 0.5 * (cell_x - width) - 0.3);
      const double room_y = std::max(0.0, 0.5 * (cell_y - width) - 0.3);
      double cx = (c + 0.5) * cell_x + jitter * room_x * rng.uniform(-1.0, 1.0);
      // keep the start/goal ends clear
      cx = std::clamp(cx, std::min(1.0 + width / 2, sx / 2), std::max(sx - 1.0 - width / 2, sx / 2));
      const double cy = (r + 0.5) * cell_y + jitter * room_y * rng.uniform(-1.0, 1.0);
      scene.obstacles.push_back(box_obstacle(cx - width / 2, cy - width / 2, 0.0, cx + width / 2,
                                             cy + width / 2, h));
    }
  }
  const double lateral = param(params, "start_offset", 0.0);
  scene.start = Eigen::Vector3d(0.4, sy / 2 + lateral, h / 2);
  scene.goal = Eigen::Vector3d(sx - 0.4, sy / 2 - lateral, h / 2);
  return scene;
}

// L-shaped corridor turning left: leg one runs along +x, leg two along +y.
Scene corner(const SceneParams& params, std::uint64_t seed) {
  const double length = param(params, "length", 8.0);
  const double h = param(params, "height", 3.0);
  const double jitter = param(params, "jitter", 0.1);
  Rng rng(seed);
  const double w = param(params, "width", 2.0) + jitter * rng.uniform(-1.0, 1.0);
  const double t = param(params, "wall", 0.8) + 0.5 * jitter * rng.uniform(-1.0, 1.0);
  const double y0 = 1.0 + jitter * rng.uniform(-1.0, 1.0);
  const double xr = length + jitter * rng.uniform(-1.0, 1.0);
  const double top = length + 1.0;
  Scene scene;
  scene.bounds = Box3{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(length + 1.0, top, h)};
  scene.obstacles.push_back(box_obstacle(0.0, y0 - t, 0.0, xr + t, y0, h));            // outer leg 1
  scene.obstacles.push_back(box_obstacle(xr, y0 - t, 0.0, xr + t, top, h));            // outer leg 2
  // Solid inside of the bend, so the only open space is the corridor.
  scene.obstacles.push_back(box_obstacle(0.0, y0 + w, 0.0, xr - w, top, h));
  scene.start = Eigen::Vector3d(0.5, y0 + w / 2, h / 2);
  scene.goal = Eigen::Vector3d(xr - w / 2, top - 0.5, h / 2);
  const double margin = 0.3;
  scene.occluded = Box3{Eigen::Vector3d(xr - w - t - margin, y0 + w + 1.5, 0.0),
                        Eigen::Vector3d(std::min(xr + t + margin, length + 1.0), top, h)};
  return scene;
}

Scene forest_random(const SceneParams& params, std::uint64_t seed) {
  const double sx = param(params, "size_x", 10.0);
  const double sy = param(params, "size_y", 10.0);
  const double h = param(params, "height", 3.0);
  const int count = static_cast<int>(param(params, "count", 12));
  const double r_min = param(params, "radius_min", 0.2);
  const double r_max = param(params, "radius_max", 0.5);
  Scene scene;
  scene.bounds = Box3{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(sx, sy, h)};
  Rng rng(seed);
  for (int i = 0; i < count; ++i) {
    CylinderObstacle c;
    c.radius = rng.uniform(r_min, r_max);
    c.center = Eigen::Vector2d(rng.uniform(1.5 + c.radius, sx - 1.5 - c.radius),
                               rng.uniform(c.radius, sy - c.radius));
    c.z_min = 0.0;
    c.z_max = h;
    scene.obstacles.emplace_back(c);
  }
  scene.start = Eigen::Vector3d(0.5, sy / 2, h / 2);
  scene.goal = Eigen::Vector3d(sx - 0.5, sy / 2, h / 2);
  return scene;
}

Scene sphere_single(const SceneParams& params, std::uint64_t) {
  const double half = param(params, "half_size", 5.0);
  Scene scene;
  scene.bounds = Box3{Eigen::Vector3d::Constant(-half), Eigen::Vector3d::Constant(half)};
  SphereObstacle s;
  s.center = Eigen::Vector3d(param(params, "cx", 0.0), param(params, "cy", 0.0),
                             param(params, "cz", 0.0));
  s.radius = param(params, "radius", 1.0);
  scene.obstacles.emplace_back(s);
  scene.start = Eigen::Vector3d(-half + 0.5, 0.0, 0.0);
  scene.goal = Eigen::Vector3d(half - 0.5, 0.0, 0.0);
  return scene;
}

// Straight start-goal run along +x with pits straddling the line: each pit
// centre sits a seeded fraction of its radius off the line, so the straight
// path cuts through the depression off-centre.
Scene pits(const SceneParams& params, std::uint64_t seed, bool sloped) {
  const double sx = param(params, "size_x", 20.0);
  const double sy = param(params, "size_y", 10.0);
  const int count = static_cast<int>(param(params, "pits", 2));
  const double radius = param(params, "pit_radius", 1.5);
  const double depth = param(params, "pit_depth", 0.6);
  const double offset_min = param(params, "offset_min", 0.45);
  const double offset_max = param(params, "offset_max", 0.65);
  Scene scene;
  scene.bounds = Box3{Eigen::Vector3d(0, -sy / 2, -2.0), Eigen::Vector3d(sx, sy / 2, 2.0)};
  Terrain terrain;
  if (sloped) {
    terrain.base = TerrainBase::kSlope;
    terrain.slope = Eigen::Vector2d(param(params, "slope_x", 0.08), param(params, "slope_y", 0.04));
    terrain.height = -0.5 * terrain.slope.x() * sx;
  } else {
    terrain.base = TerrainBase::kFlat;
    terrain.height = 0.0;
  }
  Rng rng(seed);
  const double spacing = (sx - 6.0) / std::max(count, 1);
  const double side0 = rng.uniform() < 0.5 ? -1.0 : 1.0;
  for (int i = 0; i < count; ++i) {
    Pit pit;
    pit.radius = radius * rng.uniform(0.9, 1.1);
    pit.depth = depth * rng.uniform(0.8, 1.2);
    const double side = (i % 2 == 0) ? side0 : -side0;
    const double x = 3.0 + (i + 0.5) * spacing + rng.uniform(-0.5, 0.5);
    pit.center = Eigen::Vector2d(x, side * pit.radius * rng.uniform(offset_min, offset_max));
    terrain.pits.push_back(pit);
  }
  scene.terrain = terrain;
  const auto ground = [&](double x, double y) {
    return Eigen::Vector3d(x, y, terrain.elevation(Eigen::Vector2d(x, y)));
  };
  scene.start = ground(1.0, 0.0);
  scene.goal = ground(sx - 1.0, 0.0);
  return scene;
}

}  // namespace

std::vector<std::string> scene_names() {
  return {"box-grid", "corner", "forest-random", "pits-flat", "pits-slope", "sphere-single"};
}

Scene generate_scene(const std::string& name, const SceneParams& params, std::uint64_t seed) {
  Scene scene;
  if (name == "box-grid") {
    scene = box_grid(params, seed);
  } else if (name == "corner") {
    scene = corner(params, seed);
  } else if (name == "forest-random") {
    scene = forest_random(params, seed);
  } else if (name == "pits-flat") {
    scene = pits(params, seed, false);
  } else if (name == "pits-slope") {
    scene = pits(params, seed, true);
  } else if (name == "sphere-single") {
    scene = sphere_single(params, seed);
  } else {
    throw std::invalid_argument("unknown scene spec '" + name + "'");
  }
  scene.name = name;
  scene.seed = seed;
  return scene;
}

double brute_force_esdf(const Scene& scene, const Eigen::Vector3d& x) {
  double best = kInf;
  for (const Obstacle& o : scene.obstacles) best = std::min(best, obstacle_distance(o, x));
  return best;
}

bool scene_occupied(const Scene& scene, const Eigen::Vector3d& x) {
  return std::any_of(scene.obstacles.begin(), scene.obstacles.end(),
                     [&](const Obstacle& o) { return obstacle_contains(o, x); });
}

namespace {

void put(std::ostream& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), " %.17g", v);
  out << buf;
}

void put(std::ostream& out, const Eigen::Vector3d& v) {
  for (int i = 0; i < 3; ++i) put(out, v(i));
}

const char* base_name(TerrainBase base) {
  switch (base) {
    case TerrainBase::kFlat: return "flat";
    case TerrainBase::kSlope: return "slope";
    case TerrainBase::kSineRidge: return "sine-ridge";
  }
  return "flat";
}

}  // namespace

void write_scene(std::ostream& out, const Scene& scene) {
  out << "rmrp-scene 1\n";
  if (!scene.name.empty()) out << "name " << scene.name << "\n";
  out << "seed " << scene.seed << "\n";
  out << "bounds";
  put(out, scene.bounds.min);
  put(out, scene.bounds.max);
  out << "\n";
  if (scene.start) {
    out << "start";
    put(out, *scene.start);
    out << "\n";
  }
  if (scene.goal) {
    out << "goal";
    put(out, *scene.goal);
    out << "\n";
  }
  if (scene.occluded) {
    out << "occluded";
    put(out, scene.occluded->min);
    put(out, scene.occluded->max);
    out << "\n";
  }
  for (const Obstacle& o : scene.obstacles) {
    std::visit(Overloaded{[&](const BoxObstacle& b) {
                            out << "box";
                            put(out, b.box.min);
                            put(out, b.box.max);
                          },
                          [&](const SphereObstacle& s) {
                            out << "sphere";
                            put(out, s.center);
                            put(out, s.radius);
                          },
                          [&](const CylinderObstacle& c) {
                            out << "cylinder";
                            put(out, c.center.x());
                            put(out, c.center.y());
                            put(out, c.radius);
                            put(out, c.z_min);
                            put(out, c.z_max);
                          }},
               o);
    out << "\n";
  }
  if (scene.terrain) {
    const Terrain& t = *scene.terrain;
    out << "terrain " << base_name(t.base);
    put(out, t.height);
    if (t.base == TerrainBase::kSlope) {
      put(out, t.slope.x());
      put(out, t.slope.y());
    } else if (t.base == TerrainBase::kSineRidge) {
      put(out, t.amplitude);
      put(out, t.frequency);
    }
    out << "\n";
    for (const Pit& p : t.pits) {
      out << "pit";
      put(out, p.center.x());
      put(out, p.center.y());
      put(out, p.radius);
      put(out, p.depth);
      out << "\n";
    }
  }
  out << "end\n";
}

Scene read_scene(std::istream& in) {
  std::string line;
  int line_no = 0;
  auto fail = [&](const std::string& what) {
    throw std::runtime_error("scene line " + std::to_string(line_no) + ": " + what);
  };
  auto read_doubles = [&](std::istringstream& ls, int n) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (double& x : v) {
      if (!(ls >> x)) fail("expected " + std::to_string(n) + " numbers");
    }
    std::string extra;
    if (ls >> extra) fail("trailing token '" + extra + "'");
    return v;
  };

  Scene scene;
  bool header = false, ended = false, has_bounds = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    if (!header) {
      int version = 0;
      if (key != "rmrp-scene" || !(ls >> version)) fail("missing 'rmrp-scene <version>' header");
      if (version != 1) fail("unsupported scene version " + std::to_string(version));
      header = true;
      continue;
    }
    if (key == "end") {
      ended = true;
      break;
    } else if (key == "name") {
      ls >> scene.name;
    } else if (key == "seed") {
      if (!(ls >> scene.seed)) fail("bad seed");
    } else if (key == "bounds") {
      const auto v = read_doubles(ls, 6);
      scene.bounds = Box3{Eigen::Vector3d(v[0], v[1], v[2]), Eigen::Vector3d(v[3], v[4], v[5])};
      has_bounds = true;
    } else if (key == "start" || key == "goal") {
      const auto v = read_doubles(ls, 3);
      (key == "start" ? scene.start : scene.goal) = Eigen::Vector3d(v[0], v[1], v[2]);
    } else if (key == "occluded") {
      const auto v = read_doubles(ls, 6);
      scene.occluded = Box3{Eigen::Vector3d(v[0], v[1], v[2]), Eigen::Vector3d(v[3], v[4], v[5])};
    } else if (key == "box") {
      const auto v = read_doubles(ls, 6);
      scene.obstacles.push_back(box_obstacle(v[0], v[1], v[2], v[3], v[4], v[5]));
    } else if (key == "sphere") {
      const auto v = read_doubles(ls, 4);
      if (!(v[3] > 0.0)) fail("sphere radius must be > 0");
      scene.obstacles.emplace_back(SphereObstacle{Eigen::Vector3d(v[0], v[1], v[2]), v[3]});
    } else if (key == "cylinder") {
      const auto v = read_doubles(ls, 5);
      if (!(v[2] > 0.0)) fail("cylinder radius must be > 0");
      scene.obstacles.emplace_back(CylinderObstacle{Eigen::Vector2d(v[0], v[1]), v[2], v[3], v[4]});
    } else if (key == "terrain") {
      std::string base;
      ls >> base;
      Terrain t;
      if (base == "flat") {
        t.base = TerrainBase::kFlat;
        t.height = read_doubles(ls, 1)[0];
      } else if (base == "slope") {
        const auto v = read_doubles(ls, 3);
        t.base = TerrainBase::kSlope;
        t.height = v[0];
        t.slope = Eigen::Vector2d(v[1], v[2]);
      } else if (base == "sine-ridge") {
        const auto v = read_doubles(ls, 3);
        t.base = TerrainBase::kSineRidge;
        t.height = v[0];
        t.amplitude = v[1];
        t.frequency = v[2];
      } else {
        fail("unknown terrain base '" + base + "'");
      }
      if (scene.terrain) t.pits = scene.terrain->pits;
      scene.terrain = t;
    } else if (key == "pit") {
      const auto v = read_doubles(ls, 4);
      if (!(v[2] > 0.0) || !(v[3] > 0.0)) fail("pit radius and depth must be > 0");
      if (!scene.terrain) fail("pit declared before terrain");
      scene.terrain->pits.push_back(Pit{Eigen::Vector2d(v[0], v[1]), v[2], v[3]});
    } else {
      fail("unknown directive '" + key + "'");
    }
  }
  if (!header) throw std::runtime_error("scene: empty input");
  if (!ended) throw std::runtime_error("scene: missing 'end'");
  if (!has_bounds) throw std::runtime_error("scene: missing bounds");
  return scene;
}

void save_scene(const std::string& path, const Scene& scene) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scene file " + path);
  write_scene(out, scene);
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scene file " + path);
  return read_scene(in);
}

}  // namespace rmrp
