#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rmrp/field.hpp"
#include "rmrp/geometry.hpp"

namespace rmrp {

struct WaypointPath {
  std::vector<Eigen::Vector3d> points;
  bool fixed_endpoints = true;

  std::size_t size() const { return points.size(); }
  double length() const;
};

struct SearchConfig {
  double pitch = 0.2;
  double tau = 0.5;
  std::size_t node_budget = 2'000'000;
  /// Lattice nodes outside this box are never expanded.
  std::optional<Box3> bounds;
};

/// Raised when the goal cannot be reached within the node budget.
class UnreachableError : public std::runtime_error {
 public:
  UnreachableError(const std::string& what, std::size_t nodes_visited)
      : std::runtime_error(what), nodes_visited_(nodes_visited) {}
  std::size_t nodes_visited() const { return nodes_visited_; }

 private:
  std::size_t nodes_visited_;
};

struct SearchResult {
  WaypointPath path;
  std::size_t nodes_visited = 0;
  double cost = 0.0;  ///< lattice path length
};

/// A* over the 26-connected lattice anchored at start with spacing pitch.
/// Nodes whose field score exceeds tau are blocked. The goal node is the
/// lattice point nearest the goal; the returned path ends exactly at goal.
/// Ties are broken by lexicographic cell order, so the result is
/// deterministic.
SearchResult search_initial_path(const ParametricField& field, const Eigen::Vector3d& start,
                                 const Eigen::Vector3d& goal, const SearchConfig& config);

struct RefinementConfig {
  double gradient_weight = 1.0;   ///< lambda_g
  double deviation_weight = 1.0;  ///< lambda_d
  int iterations = 50;
  /// Largest waypoint displacement per step, as a fraction of the mean
  /// segment length of the initial path.
  double step_size = 0.25;
  /// Rescale both terms by their natural magnitude at the initial path
  /// (see normalized_refinement_config).
  bool normalize = true;

  void validate() const;
};

/// lambda_g sum ||grad f(x_i)||^2 + lambda_d sum ||x_i - x_i,init||^2 over
/// interior points.
double refinement_cost(const WaypointPath& path, const WaypointPath& initial,
                       const ParametricField& field, const RefinementConfig& config);

/// Gradient of refinement_cost for each point; endpoint rows are zero.
std::vector<Eigen::Vector3d> refinement_gradient(const WaypointPath& path,
                                                 const WaypointPath& initial,
                                                 const ParametricField& field,
                                                 const RefinementConfig& config);

/// Weights actually used by refine_path: lambda_g divided by the gradient
/// energy at the initial path, lambda_d divided by n L^2 (n interior
/// points, L mean segment length). Both terms become dimensionless, so the
/// balance is unchanged when the scene is rescaled.
RefinementConfig normalized_refinement_config(const WaypointPath& initial,
                                              const ParametricField& field,
                                              const RefinementConfig& config);

struct RefinementResult {
  WaypointPath path;
  /// Cost of the current iterate (effective weights) before the first step
  /// and after every iteration.
  std::vector<double> cost_trace;
  RefinementConfig effective;
  int accepted_steps = 0;
  /// Set when a non-finite cost stopped the iteration.
  bool warning = false;
};

/// Gradient descent on the interior waypoints with a max-norm scaled step;
/// a step that raises the cost is rejected and the step size halved.
/// Endpoints are never touched.
RefinementResult refine_path(const WaypointPath& initial, const ParametricField& field,
                             const RefinementConfig& config);

}  // namespace rmrp
