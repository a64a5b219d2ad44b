#include "rmrp/backend.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace rmrp {

double BSplineTrajectory::duration() const {
  return (static_cast<double>(control.cols()) - degree) * dt;
}

void BSplineTrajectory::validate() const {
  if (degree < 2) throw std::invalid_argument("B-spline degree must be >= 2");
  if (!(dt > 0.0)) throw std::invalid_argument("B-spline knot interval must be > 0");
  if (control.cols() < degree + 1) {
    throw std::invalid_argument("B-spline needs at least degree + 1 control points");
  }
  if (control.rows() != 2 && control.rows() != 3) {
    throw std::invalid_argument("B-spline control points must be 2D or 3D");
  }
}

namespace {

Eigen::MatrixXd difference(const Eigen::MatrixXd& c, double dt) {
  if (c.cols() < 2) return Eigen::MatrixXd(c.rows(), 0);
  return (c.rightCols(c.cols() - 1) - c.leftCols(c.cols() - 1)) / dt;
}

// de Boor on uniform knots u_j = (j + offset) dt.
Eigen::VectorXd de_boor(const Eigen::MatrixXd& ctrl, int degree, int offset, double dt, double u) {
  const int count = static_cast<int>(ctrl.cols());
  auto knot = [&](int j) { return (j + offset) * dt; };
  int span = static_cast<int>(std::floor(u / dt)) - offset;
  span = std::clamp(span, degree, count - 1);
  std::vector<Eigen::VectorXd> d;
  d.reserve(static_cast<std::size_t>(degree) + 1);
  for (int j = 0; j <= degree; ++j) d.emplace_back(ctrl.col(j + span - degree));
  for (int r = 1; r <= degree; ++r) {
    for (int j = degree; j >= r; --j) {
      const int i = j + span - degree;
      const double a = (u - knot(i)) / (knot(i + degree + 1 - r) - knot(i));
      d[static_cast<std::size_t>(j)] =
          (1.0 - a) * d[static_cast<std::size_t>(j) - 1] + a * d[static_cast<std::size_t>(j)];
    }
  }
  return d[static_cast<std::size_t>(degree)];
}

}  // namespace

Eigen::VectorXd BSplineTrajectory::evaluate(double t, int derivative) const {
  validate();
  if (derivative < 0) throw std::invalid_argument("derivative order must be >= 0");
  if (derivative > degree) return Eigen::VectorXd::Zero(dim());
  Eigen::MatrixXd ctrl = control;
  for (int r = 0; r < derivative; ++r) ctrl = difference(ctrl, dt);
  const double u = std::clamp(t, 0.0, duration()) + degree * dt;
  return de_boor(ctrl, degree - derivative, derivative, dt, u);
}

Eigen::MatrixXd BSplineTrajectory::velocity_control() const { return difference(control, dt); }

Eigen::MatrixXd BSplineTrajectory::acceleration_control() const {
  return difference(difference(control, dt), dt);
}

BSplineTrajectory seed_trajectory(const std::vector<Eigen::VectorXd>& waypoints, int degree,
                                  double dt, double spacing) {
  if (waypoints.size() < 2) throw std::invalid_argument("seeding needs >= 2 waypoints");
  if (!(spacing > 0.0)) throw std::invalid_argument("seed spacing must be > 0");
  const Eigen::Index dim = waypoints.front().size();
  std::vector<double> arc{0.0};
  for (std::size_t i = 1; i < waypoints.size(); ++i) {
    arc.push_back(arc.back() + (waypoints[i] - waypoints[i - 1]).norm());
  }
  const double total = arc.back();
  const int segments = std::max(2, static_cast<int>(std::ceil(total / spacing)));
  std::vector<Eigen::VectorXd> pts;
  std::size_t seg = 0;
  for (int s = 0; s <= segments; ++s) {
    const double a = total * s / segments;
    while (seg + 2 < arc.size() && arc[seg + 1] < a) ++seg;
    const double len = arc[seg + 1] - arc[seg];
    const double f = len > 0.0 ? std::clamp((a - arc[seg]) / len, 0.0, 1.0) : 0.0;
    pts.push_back(waypoints[seg] + f * (waypoints[seg + 1] - waypoints[seg]));
  }
  pts.front() = waypoints.front();
  pts.back() = waypoints.back();

  BSplineTrajectory traj;
  traj.degree = degree;
  traj.dt = dt;
  const int extra = degree - 1;
  const int count = static_cast<int>(pts.size()) + 2 * extra;
  traj.control.resize(dim, count);
  int c = 0;
  for (int i = 0; i < extra; ++i) traj.control.col(c++) = pts.front();
  for (const auto& p : pts) traj.control.col(c++) = p;
  for (int i = 0; i < extra; ++i) traj.control.col(c++) = pts.back();
  traj.validate();
  return traj;
}

void TrajectoryCostConfig::validate() const {
  if (!(smooth_weight >= 0.0) || !(collision_weight >= 0.0) || !(dynamic_weight >= 0.0) ||
      !(terrain_weight >= 0.0)) {
    throw std::invalid_argument("trajectory cost weights must be >= 0");
  }
  if (!(clearance > 0.0) || !(v_max > 0.0) || !(a_max > 0.0)) {
    throw std::invalid_argument("clearance, v_max and a_max must be > 0");
  }
}

double penalty_F(double x, double y) { return x <= y ? (x - y) * (x - y) : 0.0; }

double penalty_F_dy(double x, double y) { return x <= y ? -2.0 * (x - y) : 0.0; }

TermRange smoothness_range(int p, int n) { return {p - 1, n - p + 1}; }
TermRange collision_range(int p, int n) { return {p, n - p}; }
TermRange velocity_range(int p, int n) { return {p - 1, n - p}; }
TermRange acceleration_range(int p, int n) { return {p - 2, n - p}; }
TermRange terrain_range(int p, int n) { return {p, n - p}; }

namespace {

void check_grad(const BSplineTrajectory& traj, Eigen::MatrixXd* grad) {
  if (grad && (grad->rows() != traj.control.rows() || grad->cols() != traj.control.cols())) {
    throw std::invalid_argument("gradient buffer does not match the control matrix");
  }
}

}  // namespace

double smoothness_cost(const BSplineTrajectory& traj, Eigen::MatrixXd* grad) {
  traj.validate();
  check_grad(traj, grad);
  const auto range = smoothness_range(traj.degree, traj.last_index());
  const auto& q = traj.control;
  double cost = 0.0;
  for (int i = std::max(range.first, 1); i <= std::min(range.last, traj.last_index() - 1); ++i) {
    const Eigen::VectorXd d = q.col(i + 1) - 2.0 * q.col(i) + q.col(i - 1);
    cost += d.squaredNorm();
    if (grad) {
      grad->col(i + 1) += 2.0 * d;
      grad->col(i) -= 4.0 * d;
      grad->col(i - 1) += 2.0 * d;
    }
  }
  return cost;
}

double collision_cost(const BSplineTrajectory& traj, const ParametricField& esdf,
                      const TrajectoryCostConfig& config, Eigen::MatrixXd* grad) {
  traj.validate();
  check_grad(traj, grad);
  if (esdf.kind() != FieldKind::kEsdf) throw std::invalid_argument("collision cost needs an ESDF field");
  if (traj.dim() != 3) throw std::invalid_argument("collision cost needs 3D control points");
  const auto range = collision_range(traj.degree, traj.last_index());
  double cost = 0.0;
  for (int i = range.first; i <= range.last; ++i) {
    const Eigen::VectorXd qi = traj.control.col(i);
    const double d = esdf.value(qi);
    if (d <= config.clearance) {
      cost += (d - config.clearance) * (d - config.clearance);
      if (grad) grad->col(i) += 2.0 * (d - config.clearance) * esdf.gradient(qi);
    }
  }
  return cost;
}

namespace {

// Sum over components of F(limit^2, c^2) for the columns of derivative
// control points in [first, last]. chain(i, dcost/dc) spreads the
// per-column gradient back onto Q.
template <typename Chain>
double limit_cost(const Eigen::MatrixXd& deriv, TermRange range, double limit, Chain&& chain) {
  const double lim2 = limit * limit;
  double cost = 0.0;
  for (int i = std::max(range.first, 0); i <= std::min(range.last, static_cast<int>(deriv.cols()) - 1); ++i) {
    Eigen::VectorXd dc = Eigen::VectorXd::Zero(deriv.rows());
    bool active = false;
    for (Eigen::Index a = 0; a < deriv.rows(); ++a) {
      const double c = deriv(a, i);
      cost += penalty_F(lim2, c * c);
      dc(a) = penalty_F_dy(lim2, c * c) * 2.0 * c;
      active = active || dc(a) != 0.0;
    }
    if (active) chain(i, dc);
  }
  return cost;
}

}  // namespace

double velocity_cost(const BSplineTrajectory& traj, const TrajectoryCostConfig& config,
                     Eigen::MatrixXd* grad) {
  traj.validate();
  check_grad(traj, grad);
  const double dt = traj.dt;
  return limit_cost(traj.velocity_control(), velocity_range(traj.degree, traj.last_index()),
                    config.v_max, [&](int i, const Eigen::VectorXd& dc) {
                      if (!grad) return;
                      grad->col(i + 1) += dc / dt;
                      grad->col(i) -= dc / dt;
                    });
}

double acceleration_cost(const BSplineTrajectory& traj, const TrajectoryCostConfig& config,
                         Eigen::MatrixXd* grad) {
  traj.validate();
  check_grad(traj, grad);
  const double dt2 = traj.dt * traj.dt;
  return limit_cost(traj.acceleration_control(),
                    acceleration_range(traj.degree, traj.last_index()), config.a_max,
                    [&](int i, const Eigen::VectorXd& dc) {
                      if (!grad) return;
                      grad->col(i + 2) += dc / dt2;
                      grad->col(i + 1) -= 2.0 * dc / dt2;
                      grad->col(i) += dc / dt2;
                    });
}

double dynamic_cost(const BSplineTrajectory& traj, const TrajectoryCostConfig& config,
                    Eigen::MatrixXd* grad) {
  return velocity_cost(traj, config, grad) + acceleration_cost(traj, config, grad);
}

double terrain_penalty(const ParametricField& terrain, const Eigen::Vector2d& q) {
  return terrain.gradient(q).squaredNorm();
}

Eigen::Vector2d terrain_penalty_gradient(const ParametricField& terrain, const Eigen::Vector2d& q) {
  if (terrain.kind() != FieldKind::kTerrain) throw std::invalid_argument("terrain field expected");
  const Eigen::MatrixXd& w = terrain.feature_map().weights();
  const Eigen::VectorXd& h = terrain.backprojected_weights();
  const Eigen::VectorXd y = terrain.feature_map().phases(q);
  const Eigen::VectorXd hc = h.array() * y.array().cos();
  const Eigen::VectorXd hs = h.array() * y.array().sin();
  const Eigen::Vector2d g = w.transpose() * hc;
  const Eigen::VectorXd wg = w * g;
  return -2.0 * (w.transpose() * (hs.array() * wg.array()).matrix());
}

Eigen::Vector2d terrain_penalty_gradient_generic(const ParametricField& terrain,
                                                 const Eigen::Vector2d& q) {
  if (terrain.kind() != FieldKind::kTerrain) throw std::invalid_argument("terrain field expected");
  const Eigen::MatrixXd& w = terrain.feature_map().weights();
  const Eigen::VectorXd& h = terrain.backprojected_weights();
  const Eigen::VectorXd y = terrain.feature_map().phases(q);
  const Eigen::Vector2d g = w.transpose() * (h.array() * y.array().cos()).matrix();
  const Eigen::VectorXd neg_sin = -(h.array() * y.array().sin());
  const Eigen::Matrix2d jac = w.transpose() * neg_sin.asDiagonal() * w;
  return 2.0 * jac.transpose() * g;
}

double terrain_cost(const BSplineTrajectory& traj, const ParametricField& terrain,
                    Eigen::MatrixXd* grad) {
  traj.validate();
  check_grad(traj, grad);
  if (terrain.kind() != FieldKind::kTerrain) throw std::invalid_argument("terrain field expected");
  if (traj.dim() != 2) throw std::invalid_argument("terrain cost needs 2D control points");
  const auto range = terrain_range(traj.degree, traj.last_index());
  double cost = 0.0;
  for (int i = range.first; i <= range.last; ++i) {
    const Eigen::Vector2d q = traj.control.col(i);
    cost += terrain_penalty(terrain, q);
    if (grad) grad->col(i) += terrain_penalty_gradient(terrain, q);
  }
  return cost;
}

CostTerms total_cost(const BSplineTrajectory& traj, const TrajectoryFields& fields,
                     const TrajectoryCostConfig& config, Eigen::MatrixXd* grad) {
  config.validate();
  CostTerms t;
  Eigen::MatrixXd part;
  auto add = [&](double weight, auto&& term) {
    if (!grad) return term(nullptr);
    part.setZero(traj.control.rows(), traj.control.cols());
    const double v = term(&part);
    *grad += weight * part;
    return v;
  };
  if (grad) {
    check_grad(traj, grad);
  }
  t.smoothness = add(config.smooth_weight, [&](Eigen::MatrixXd* g) { return smoothness_cost(traj, g); });
  if (fields.esdf) {
    t.collision = add(config.collision_weight,
                      [&](Eigen::MatrixXd* g) { return collision_cost(traj, *fields.esdf, config, g); });
  }
  t.velocity = add(config.dynamic_weight, [&](Eigen::MatrixXd* g) { return velocity_cost(traj, config, g); });
  t.acceleration =
      add(config.dynamic_weight, [&](Eigen::MatrixXd* g) { return acceleration_cost(traj, config, g); });
  if (fields.terrain) {
    t.terrain = add(config.terrain_weight,
                    [&](Eigen::MatrixXd* g) { return terrain_cost(traj, *fields.terrain, g); });
  }
  t.total = config.smooth_weight * t.smoothness + config.collision_weight * t.collision +
            config.dynamic_weight * (t.velocity + t.acceleration) +
            config.terrain_weight * t.terrain;
  return t;
}

OptimizationResult optimize_trajectory(const BSplineTrajectory& initial,
                                       const TrajectoryFields& fields,
                                       const TrajectoryCostConfig& config,
                                       const OptimizerConfig& opt) {
  initial.validate();
  config.validate();
  const int p = initial.degree;
  const int n = initial.last_index();
  const int first = p, last = n - p;
  const Eigen::Index dim = initial.control.rows();

  OptimizationResult result;
  result.trajectory = initial;
  BSplineTrajectory work = initial;

  auto pack = [&](const Eigen::MatrixXd& m) {
    Eigen::VectorXd v(dim * std::max(0, last - first + 1));
    for (int i = first; i <= last; ++i) v.segment(dim * (i - first), dim) = m.col(i);
    return v;
  };
  auto evaluate = [&](const Eigen::VectorXd& x, Eigen::VectorXd* g, CostTerms* terms) {
    for (int i = first; i <= last; ++i) work.control.col(i) = x.segment(dim * (i - first), dim);
    Eigen::MatrixXd full = Eigen::MatrixXd::Zero(dim, work.control.cols());
    const CostTerms t = total_cost(work, fields, config, g ? &full : nullptr);
    if (g) *g = pack(full);
    if (terms) *terms = t;
    return t.total;
  };

  Eigen::VectorXd x = pack(initial.control);
  Eigen::VectorXd g;
  double f = evaluate(x, &g, &result.terms);
  result.cost_trace.push_back(f);
  if (!std::isfinite(f)) {
    result.warning = true;
    result.stop_reason = "non-finite cost";
    return result;
  }
  if (x.size() == 0) {
    result.stop_reason = "no free control points";
    return result;
  }

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> history;
  result.stop_reason = "iteration limit";
  for (int it = 0; it < opt.max_iterations; ++it) {
    if (g.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      result.stop_reason = "converged";
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    std::vector<double> alphas(history.size());
    for (std::size_t j = history.size(); j-- > 0;) {
      const auto& [s, y] = history[j];
      alphas[j] = s.dot(d) / y.dot(s);
      d -= alphas[j] * y;
    }
    if (!history.empty()) {
      const auto& [s, y] = history.back();
      d *= s.dot(y) / y.squaredNorm();
    }
    for (std::size_t j = 0; j < history.size(); ++j) {
      const auto& [s, y] = history[j];
      const double beta = y.dot(d) / y.dot(s);
      d += (alphas[j] - beta) * s;
    }
    double slope = g.dot(d);
    if (!(slope < 0.0)) {
      history.clear();
      d = -g;
      slope = -g.squaredNorm();
    }
    double step = history.empty() ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new, g_new;
    double f_new = f;
    CostTerms terms_new;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      x_new = x + step * d;
      f_new = evaluate(x_new, &g_new, &terms_new);
      if (std::isfinite(f_new) && f_new <= f + opt.armijo * step * slope) {
        accepted = true;
        break;
      }
      if (!std::isfinite(f_new) && bt + 1 == opt.max_backtracks) {
        result.warning = true;
      }
      step *= 0.5;
    }
    if (!accepted) {
      result.stop_reason = result.warning ? "non-finite cost" : "line search stalled";
      break;
    }
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      history.emplace_back(s, y);
      if (static_cast<int>(history.size()) > opt.memory) history.pop_front();
    }
    x = std::move(x_new);
    g = std::move(g_new);
    f = f_new;
    result.terms = terms_new;
    result.cost_trace.push_back(f);
    result.iterations = it + 1;
  }
  for (int i = first; i <= last; ++i) {
    result.trajectory.control.col(i) = x.segment(dim * (i - first), dim);
  }
  return result;
}

std::vector<TrajectorySample> sample_trajectory(const BSplineTrajectory& traj, int count) {
  traj.validate();
  if (count < 2) throw std::invalid_argument("need at least 2 trajectory samples");
  std::vector<TrajectorySample> out;
  out.reserve(static_cast<std::size_t>(count));
  const double total = traj.duration();
  for (int i = 0; i < count; ++i) {
    const double t = total * i / (count - 1);
    out.push_back({t, traj.evaluate(t, 0), traj.evaluate(t, 1), traj.evaluate(t, 2)});
  }
  return out;
}

double energy_proxy(const std::vector<TrajectorySample>& samples) {
  double e = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    const double h = samples[i].t - samples[i - 1].t;
    e += 0.5 * h * (samples[i].acceleration.squaredNorm() + samples[i - 1].acceleration.squaredNorm());
  }
  return e;
}

double sampled_length(const std::vector<TrajectorySample>& samples) {
  double len = 0.0;
  for (std::size_t i = 1; i < samples.size(); ++i) {
    len += (samples[i].position - samples[i - 1].position).norm();
  }
  return len;
}

double min_clearance(const std::vector<TrajectorySample>& samples, const Scene& scene) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.position.size() != 3) throw std::invalid_argument("clearance needs 3D samples");
    best = std::min(best, brute_force_esdf(scene, s.position));
  }
  return best;
}

int count_pit_samples(const std::vector<TrajectorySample>& samples, const Terrain& terrain,
                      double margin) {
  int count = 0;
  for (const auto& s : samples) {
    if (terrain.in_pit(s.position.head<2>(), margin)) ++count;
  }
  return count;
}

}  // namespace rmrp
