#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "rmrp/field.hpp"
#include "rmrp/scene.hpp"

namespace rmrp {

/// Uniform B-spline of degree p with control points Q_0..Q_N stored as the
/// columns of a dim x (N+1) matrix. Knots are spaced dt apart; the curve
/// is defined for t in [0, (N + 1 - p) dt].
struct BSplineTrajectory {
  Eigen::MatrixXd control;
  int degree = 3;
  double dt = 0.5;

  int dim() const { return static_cast<int>(control.rows()); }
  int last_index() const { return static_cast<int>(control.cols()) - 1; }  ///< N
  double duration() const;
  void validate() const;

  /// Position (derivative = 0), velocity (1) or acceleration (2) at t.
  Eigen::VectorXd evaluate(double t, int derivative = 0) const;

  /// Velocity control points (Q_{i+1} - Q_i) / dt, and the acceleration
  /// ones from a second difference over dt^2.
  Eigen::MatrixXd velocity_control() const;
  Eigen::MatrixXd acceleration_control() const;
};

/// Control polygon from a waypoint polyline: resampled by arc length at
/// about `spacing`, with the endpoints repeated so the first and last
/// `degree` control points sit on start and goal (rest-to-rest).
BSplineTrajectory seed_trajectory(const std::vector<Eigen::VectorXd>& waypoints, int degree,
                                  double dt, double spacing);

struct TrajectoryCostConfig {
  double smooth_weight = 1.0;     ///< lambda_s
  double collision_weight = 10.0; ///< lambda_c
  double dynamic_weight = 1.0;    ///< lambda_d
  double terrain_weight = 5.0;    ///< lambda_t (ground vehicles only)
  double clearance = 0.5;         ///< S_f, a.k.a. d_min
  double v_max = 5.0;
  double a_max = 4.0;

  void validate() const;
};

/// F(x, y) = (x - y)^2 for x <= y, else 0.
double penalty_F(double x, double y);
/// dF/dy.
double penalty_F_dy(double x, double y);

/// Index ranges of each term, in one place for audit. All are inclusive
/// [first, last] over control point indices.
struct TermRange {
  int first;
  int last;
};
TermRange smoothness_range(int degree, int n);    ///< p-1 .. N-p+1
TermRange collision_range(int degree, int n);     ///< p .. N-p
TermRange velocity_range(int degree, int n);      ///< p-1 .. N-p
TermRange acceleration_range(int degree, int n);  ///< p-2 .. N-p
TermRange terrain_range(int degree, int n);       ///< p .. N-p

/// Each cost returns its value and, when grad is non-null, adds its
/// gradient (dim x (N+1), same layout as control) into *grad.
double smoothness_cost(const BSplineTrajectory& traj, Eigen::MatrixXd* grad = nullptr);
double collision_cost(const BSplineTrajectory& traj, const ParametricField& esdf,
                      const TrajectoryCostConfig& config, Eigen::MatrixXd* grad = nullptr);
double velocity_cost(const BSplineTrajectory& traj, const TrajectoryCostConfig& config,
                     Eigen::MatrixXd* grad = nullptr);
double acceleration_cost(const BSplineTrajectory& traj, const TrajectoryCostConfig& config,
                         Eigen::MatrixXd* grad = nullptr);
double dynamic_cost(const BSplineTrajectory& traj, const TrajectoryCostConfig& config,
                    Eigen::MatrixXd* grad = nullptr);
double terrain_cost(const BSplineTrajectory& traj, const ParametricField& terrain,
                    Eigen::MatrixXd* grad = nullptr);

/// ||grad Elevation(q)||^2 and its gradient in closed form:
/// -2 W^T diag(h . sin y) W g with y = W q + b, g = W^T (h . cos y) and
/// h the back-projected head.
double terrain_penalty(const ParametricField& terrain, const Eigen::Vector2d& q);
Eigen::Vector2d terrain_penalty_gradient(const ParametricField& terrain, const Eigen::Vector2d& q);
/// Same quantity through the generic chain rule 2 J^T g, with the Jacobian
/// J of the elevation gradient assembled explicitly.
Eigen::Vector2d terrain_penalty_gradient_generic(const ParametricField& terrain,
                                                 const Eigen::Vector2d& q);

/// Fields the optimizer may use. An absent ESDF drops the collision term,
/// an absent terrain drops the terrain term.
struct TrajectoryFields {
  const ParametricField* esdf = nullptr;
  const ParametricField* terrain = nullptr;
};

struct CostTerms {
  double smoothness = 0.0;
  double collision = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
  double terrain = 0.0;
  double total = 0.0;
};

/// lambda_s f_s + lambda_c f_c + lambda_d (f_v + f_a) + lambda_t f_terrain.
CostTerms total_cost(const BSplineTrajectory& traj, const TrajectoryFields& fields,
                     const TrajectoryCostConfig& config, Eigen::MatrixXd* grad = nullptr);

struct OptimizerConfig {
  int max_iterations = 200;
  int memory = 8;
  double gradient_tolerance = 1e-6;
  double armijo = 1e-4;
  int max_backtracks = 40;
};

struct OptimizationResult {
  BSplineTrajectory trajectory;
  std::vector<double> cost_trace;  ///< initial cost, then one entry per iteration
  CostTerms terms;
  int iterations = 0;
  bool warning = false;  ///< a non-finite cost stopped the run
  std::string stop_reason;
};

/// L-BFGS with Armijo backtracking over the free control points
/// p .. N-p. The first and last p control points are never written.
OptimizationResult optimize_trajectory(const BSplineTrajectory& initial,
                                       const TrajectoryFields& fields,
                                       const TrajectoryCostConfig& config,
                                       const OptimizerConfig& optimizer = {});

struct TrajectorySample {
  double t = 0.0;
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
  Eigen::VectorXd acceleration;
};

/// count >= 2 samples evenly spaced over [0, duration].
std::vector<TrajectorySample> sample_trajectory(const BSplineTrajectory& traj, int count);

/// Trapezoid estimate of the integral of ||a||^2 dt over the samples.
double energy_proxy(const std::vector<TrajectorySample>& samples);
double sampled_length(const std::vector<TrajectorySample>& samples);
/// Smallest brute-force obstacle distance over 3D samples.
double min_clearance(const std::vector<TrajectorySample>& samples, const Scene& scene);
/// Samples whose (x, y) lies inside a terrain depression (in_pit).
int count_pit_samples(const std::vector<TrajectorySample>& samples, const Terrain& terrain,
                      double margin = 0.05);

}  // namespace rmrp
