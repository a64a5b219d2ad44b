#include "rmrp/frontend.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_map>

namespace rmrp {

double WaypointPath::length() const {
  double total = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) total += (points[i] - points[i - 1]).norm();
  return total;
}

namespace {

using Cell = std::array<int, 3>;

constexpr int kCoordBits = 21;
constexpr int kCoordOffset = 1 << (kCoordBits - 1);

std::uint64_t pack(const Cell& c) {
  std::uint64_t key = 0;
  for (int a = 0; a < 3; ++a) {
    key = (key << kCoordBits) | static_cast<std::uint64_t>(c[a] + kCoordOffset);
  }
  return key;
}

// Octile distance on the 26-connected lattice: consistent, so A* with a
// closed set stays optimal.
double lattice_heuristic(const Cell& a, const Cell& b) {
  std::array<int, 3> d{std::abs(a[0] - b[0]), std::abs(a[1] - b[1]), std::abs(a[2] - b[2])};
  std::sort(d.begin(), d.end());
  return std::sqrt(3.0) * d[0] + std::sqrt(2.0) * (d[1] - d[0]) + (d[2] - d[1]);
}

struct Node {
  double g = std::numeric_limits<double>::infinity();
  std::uint64_t parent = 0;
  bool has_parent = false;
  bool closed = false;
  int blocked = -1;  // -1 unknown
};

struct QueueItem {
  double f;
  Cell cell;
  bool operator>(const QueueItem& o) const { return std::tie(f, cell) > std::tie(o.f, o.cell); }
};

}  // namespace

SearchResult search_initial_path(const ParametricField& field, const Eigen::Vector3d& start,
                                 const Eigen::Vector3d& goal, const SearchConfig& config) {
  if (field.kind() != FieldKind::kOccupancy) {
    throw std::invalid_argument("path search needs an occupancy field");
  }
  if (!(config.pitch > 0.0)) throw std::invalid_argument("search pitch must be > 0");
  if (field.value(start) > config.tau) throw std::invalid_argument("start is occupied");
  if (field.value(goal) > config.tau) {
    throw UnreachableError("goal is occupied (unreachable)", 0);
  }

  auto position = [&](const Cell& c) {
    return Eigen::Vector3d(start + config.pitch * Eigen::Vector3d(c[0], c[1], c[2]));
  };
  const Eigen::Vector3d rel = (goal - start) / config.pitch;
  const Cell goal_cell{static_cast<int>(std::lround(rel.x())), static_cast<int>(std::lround(rel.y())),
                       static_cast<int>(std::lround(rel.z()))};
  for (int a = 0; a < 3; ++a) {
    if (std::abs(goal_cell[a]) >= kCoordOffset - 2) {
      throw std::invalid_argument("goal too far for the lattice at this pitch");
    }
  }

  std::unordered_map<std::uint64_t, Node> nodes;
  std::unordered_map<std::uint64_t, Cell> cells;
  auto is_blocked = [&](Node& n, const Cell& c) {
    if (n.blocked < 0) {
      const Eigen::Vector3d p = position(c);
      const bool outside = config.bounds && !config.bounds->contains(p);
      n.blocked = (outside || field.value(p) > config.tau) ? 1 : 0;
    }
    return n.blocked == 1;
  };

  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> open;
  const Cell origin{0, 0, 0};
  Node& root = nodes[pack(origin)];
  root.g = 0.0;
  root.blocked = 0;
  cells[pack(origin)] = origin;
  open.push({lattice_heuristic(origin, goal_cell) * config.pitch, origin});

  std::size_t visited = 0;
  while (!open.empty()) {
    const QueueItem item = open.top();
    open.pop();
    const std::uint64_t key = pack(item.cell);
    Node& node = nodes[key];
    if (node.closed) continue;
    node.closed = true;
    ++visited;
    if (item.cell == goal_cell) {
      SearchResult result;
      result.nodes_visited = visited;
      result.cost = node.g;
      std::vector<Cell> chain;
      std::uint64_t k = key;
      while (true) {
        chain.push_back(cells[k]);
        const Node& n = nodes[k];
        if (!n.has_parent) break;
        k = n.parent;
      }
      std::reverse(chain.begin(), chain.end());
      for (const Cell& c : chain) result.path.points.push_back(position(c));
      result.path.points.front() = start;
      if (result.path.points.size() == 1) result.path.points.push_back(goal);
      result.path.points.back() = goal;
      return result;
    }
    if (visited >= config.node_budget) break;
    const double g = node.g;
    for (int dx = -1; dx <= 1; ++dx) {
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dz = -1; dz <= 1; ++dz) {
          if (dx == 0 && dy == 0 && dz == 0) continue;
          const Cell next{item.cell[0] + dx, item.cell[1] + dy, item.cell[2] + dz};
          const std::uint64_t nkey = pack(next);
          Node& nn = nodes[nkey];
          if (nn.closed || is_blocked(nn, next)) continue;
          const double step =
              config.pitch * std::sqrt(static_cast<double>(dx * dx + dy * dy + dz * dz));
          if (g + step < nn.g) {
            nn.g = g + step;
            nn.parent = key;
            nn.has_parent = true;
            cells[nkey] = next;
            open.push({nn.g + lattice_heuristic(next, goal_cell) * config.pitch, next});
          }
        }
      }
    }
  }
  throw UnreachableError("goal unreachable after visiting " + std::to_string(visited) + " nodes",
                         visited);
}

void RefinementConfig::validate() const {
  if (!(gradient_weight >= 0.0) || !(deviation_weight >= 0.0)) {
    throw std::invalid_argument("refinement weights must be >= 0");
  }
  if (iterations < 0) throw std::invalid_argument("refinement iterations must be >= 0");
  if (!(step_size > 0.0)) throw std::invalid_argument("refinement step size must be > 0");
}

namespace {

void check_pair(const WaypointPath& path, const WaypointPath& initial) {
  if (path.size() != initial.size()) {
    throw std::invalid_argument("refinement: path and initial path differ in length");
  }
  if (initial.size() < 2) throw std::invalid_argument("a waypoint path needs >= 2 points");
}

}  // namespace

double refinement_cost(const WaypointPath& path, const WaypointPath& initial,
                       const ParametricField& field, const RefinementConfig& config) {
  check_pair(path, initial);
  double grad_term = 0.0, dev_term = 0.0;
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    grad_term += field.gradient(path.points[i]).squaredNorm();
    dev_term += (path.points[i] - initial.points[i]).squaredNorm();
  }
  return config.gradient_weight * grad_term + config.deviation_weight * dev_term;
}

std::vector<Eigen::Vector3d> refinement_gradient(const WaypointPath& path,
                                                 const WaypointPath& initial,
                                                 const ParametricField& field,
                                                 const RefinementConfig& config) {
  check_pair(path, initial);
  std::vector<Eigen::Vector3d> grad(path.size(), Eigen::Vector3d::Zero());
  for (std::size_t i = 1; i + 1 < path.size(); ++i) {
    const Eigen::Vector3d g = field.gradient(path.points[i]);
    const Eigen::Matrix3d h = field.hessian(path.points[i]);
    grad[i] = 2.0 * config.gradient_weight * (h * g) +
              2.0 * config.deviation_weight * (path.points[i] - initial.points[i]);
  }
  return grad;
}

namespace {

double mean_segment(const WaypointPath& path) {
  const double n = static_cast<double>(path.size() - 1);
  const double len = path.length() / n;
  return len > 0.0 ? len : 1.0;
}

}  // namespace

RefinementConfig normalized_refinement_config(const WaypointPath& initial,
                                              const ParametricField& field,
                                              const RefinementConfig& config) {
  RefinementConfig eff = config;
  if (!config.normalize || initial.size() < 3) return eff;
  double g0 = 0.0;
  for (std::size_t i = 1; i + 1 < initial.size(); ++i) {
    g0 += field.gradient(initial.points[i]).squaredNorm();
  }
  const double seg = mean_segment(initial);
  const double interior = static_cast<double>(initial.size() - 2);
  eff.gradient_weight = config.gradient_weight / (g0 + 1e-12);
  eff.deviation_weight = config.deviation_weight / (interior * seg * seg);
  eff.normalize = false;
  return eff;
}

RefinementResult refine_path(const WaypointPath& initial, const ParametricField& field,
                             const RefinementConfig& config) {
  config.validate();
  if (initial.size() < 2) throw std::invalid_argument("a waypoint path needs >= 2 points");
  RefinementResult result;
  result.path = initial;
  result.effective = normalized_refinement_config(initial, field, config);
  double cost = refinement_cost(initial, initial, field, result.effective);
  result.cost_trace.push_back(cost);
  if (initial.size() < 3) return result;
  if (!std::isfinite(cost)) {
    result.warning = true;
    return result;
  }

  const double seg = mean_segment(initial);
  double alpha = config.step_size;
  for (int it = 0; it < config.iterations; ++it) {
    const auto grad = refinement_gradient(result.path, initial, field, result.effective);
    double gmax = 0.0;
    for (const auto& g : grad) gmax = std::max(gmax, g.norm());
    if (!std::isfinite(gmax)) {
      result.warning = true;
      break;
    }
    if (gmax == 0.0) {
      result.cost_trace.push_back(cost);
      continue;
    }
    WaypointPath trial = result.path;
    for (std::size_t i = 1; i + 1 < trial.size(); ++i) {
      trial.points[i] -= (alpha * seg / gmax) * grad[i];
    }
    const double trial_cost = refinement_cost(trial, initial, field, result.effective);
    if (!std::isfinite(trial_cost)) {
      result.warning = true;
      break;
    }
    if (trial_cost <= cost) {
      result.path = std::move(trial);
      cost = trial_cost;
      ++result.accepted_steps;
    } else {
      alpha *= 0.5;
    }
    result.cost_trace.push_back(cost);
  }
  return result;
}

}  // namespace rmrp
