#include <doctest.h>

#include <cmath>
#include <functional>
#include <numbers>

#include "rmrp/backend.hpp"
#include "test_util.hpp"

using namespace rmrp;

namespace {

/// Field with value c everywhere (one feature sin(pi/2)).
ParametricField constant_esdf(double c) {
  RandomFeatureMap map(Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Constant(1, std::numbers::pi / 2));
  return ParametricField(map, SparseProjection::identity(1), LinearHead{Eigen::VectorXd::Constant(1, c)},
                         FieldKind::kEsdf);
}

ParametricField random_field(FieldKind kind, int dim, std::uint64_t seed, double scale = 1.0) {
  FieldConfig c;
  c.feature_dim = 80;
  c.projected_dim = kind == FieldKind::kTerrain ? 80 : 40;
  c.scale = scale;
  c.feature_seed = seed;
  auto f = make_untrained_field(kind, dim, c);
  Rng rng(seed + 7);
  f.set_head(LinearHead{testutil::random_vector(rng, c.projected_dim, -0.3, 0.3)});
  return f;
}

BSplineTrajectory random_trajectory(int dim, int count, std::uint64_t seed, double spread = 2.0) {
  Rng rng(seed);
  BSplineTrajectory t;
  t.degree = 3;
  t.dt = 0.5;
  t.control.resize(dim, count);
  for (int i = 0; i < count; ++i) t.control.col(i) = testutil::random_vector(rng, dim, -spread, spread);
  return t;
}

/// Cox-de Boor basis on knots u_j = j dt.
double basis(int i, int p, double u, double dt) {
  if (p == 0) return (u >= i * dt && u < (i + 1) * dt) ? 1.0 : 0.0;
  const double left = (u - i * dt) / (p * dt) * basis(i, p - 1, u, dt);
  const double right = ((i + p + 1) * dt - u) / (p * dt) * basis(i + 1, p - 1, u, dt);
  return left + right;
}

/// FD check of one cost term over all control points.
double gradient_error(const BSplineTrajectory& traj,
                      const std::function<double(const BSplineTrajectory&, Eigen::MatrixXd*)>& cost) {
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(traj.control.rows(), traj.control.cols());
  cost(traj, &grad);
  Eigen::MatrixXd fd(traj.control.rows(), traj.control.cols());
  const double h = 1e-6;
  for (Eigen::Index j = 0; j < traj.control.cols(); ++j) {
    for (Eigen::Index a = 0; a < traj.control.rows(); ++a) {
      BSplineTrajectory p = traj, m = traj;
      p.control(a, j) += h;
      m.control(a, j) -= h;
      fd(a, j) = (cost(p, nullptr) - cost(m, nullptr)) / (2 * h);
    }
  }
  return (grad - fd).norm() / std::max(fd.norm(), 1e-3);
}

}  // namespace

TEST_CASE("penalty F") {
  CHECK(penalty_F(1.0, 3.0) == 4.0);
  CHECK(penalty_F(3.0, 1.0) == 0.0);
  CHECK(penalty_F(2.0, 2.0) == 0.0);
  CHECK(penalty_F_dy(1.0, 3.0) == 4.0);
  CHECK(penalty_F_dy(3.0, 1.0) == 0.0);
}

TEST_CASE("index ranges") {
  CHECK(smoothness_range(3, 10).first == 2);
  CHECK(smoothness_range(3, 10).last == 8);
  CHECK(collision_range(3, 10).first == 3);
  CHECK(collision_range(3, 10).last == 7);
  CHECK(velocity_range(3, 10).first == 2);
  CHECK(velocity_range(3, 10).last == 7);
  CHECK(acceleration_range(3, 10).first == 1);
  CHECK(acceleration_range(3, 10).last == 7);
  CHECK(terrain_range(3, 10).first == 3);
}

TEST_CASE("B-spline evaluation against Cox-de Boor") {
  const auto traj = random_trajectory(3, 9, 4);
  const int p = traj.degree;
  for (int s = 0; s < 40; ++s) {
    const double t = traj.duration() * s / 40.0;
    const double u = t + p * traj.dt;
    Eigen::Vector3d expected = Eigen::Vector3d::Zero();
    for (int i = 0; i <= traj.last_index(); ++i) expected += basis(i, p, u, traj.dt) * traj.control.col(i);
    CHECK((traj.evaluate(t) - expected).norm() <= 1e-12);
    const double h = 1e-6;
    if (t > h && t + h < traj.duration()) {
      const Eigen::VectorXd fd = (traj.evaluate(t + h) - traj.evaluate(t - h)) / (2 * h);
      CHECK(testutil::rel_err(traj.evaluate(t, 1), fd, 1e-3) <= 1e-6);
      const Eigen::VectorXd fd2 = (traj.evaluate(t + h, 1) - traj.evaluate(t - h, 1)) / (2 * h);
      CHECK(testutil::rel_err(traj.evaluate(t, 2), fd2, 1e-3) <= 1e-5);
    }
  }
  BSplineTrajectory short_traj;
  short_traj.control = Eigen::MatrixXd::Zero(3, 3);
  CHECK_THROWS_AS(short_traj.validate(), std::invalid_argument);
}

TEST_CASE("seeded trajectory rests on start and goal") {
  std::vector<Eigen::VectorXd> wp{Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(2, 0, 1), Eigen::Vector3d(2, 3, 1)};
  const auto traj = seed_trajectory(wp, 3, 0.5, 0.4);
  for (int i = 0; i < 3; ++i) {
    CHECK(traj.control.col(i) == wp.front());
    CHECK(traj.control.col(traj.last_index() - i) == wp.back());
  }
  CHECK((traj.evaluate(0.0) - wp.front()).norm() <= 1e-12);
  CHECK((traj.evaluate(traj.duration()) - wp.back()).norm() <= 1e-12);
  CHECK(traj.evaluate(0.0, 1).norm() <= 1e-12);
}

TEST_CASE("smoothness examples") {
  BSplineTrajectory t;
  t.degree = 2;
  t.control.resize(2, 3);
  t.control << 0, 0, 1,
               0, 0, 0;
  CHECK(smoothness_cost(t) == doctest::Approx(1.0));
  t.control << 0, 1, 2,
               0, 2, 4;
  CHECK(smoothness_cost(t) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("collision examples") {
  BSplineTrajectory t;
  t.degree = 3;
  t.control = Eigen::MatrixXd::Zero(3, 7);  // collision range is the single index 3
  TrajectoryCostConfig cfg;
  cfg.clearance = 1.5;
  CHECK(collision_cost(t, constant_esdf(2.0), cfg) == 0.0);
  CHECK(collision_cost(t, constant_esdf(0.5), cfg) == doctest::Approx(1.0));
  CHECK(collision_cost(t, constant_esdf(1.5), cfg) == 0.0);
}

TEST_CASE("dynamic examples") {
  TrajectoryCostConfig cfg;
  cfg.v_max = 1.0;
  cfg.a_max = 10.0;
  BSplineTrajectory t;
  t.degree = 3;
  t.dt = 1.0;
  t.control = Eigen::MatrixXd::Constant(2, 7, 0.3);
  CHECK(dynamic_cost(t, cfg) == 0.0);
  // one velocity component with q^2 = v_max^2 + 1, everything else at rest
  const double r = std::sqrt(2.0);
  t.control.row(0) << 0, 0, 0, r, r, r, r;
  CHECK(velocity_cost(t, cfg) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(acceleration_cost(t, cfg) == 0.0);
}

TEST_CASE("terrain penalty examples") {
  Eigen::MatrixXd w(1, 2);
  w << 1.0, 0.0;
  ParametricField field(RandomFeatureMap(w, Eigen::VectorXd::Zero(1)), SparseProjection::identity(1),
                        LinearHead{Eigen::VectorXd::Ones(1)}, FieldKind::kTerrain);
  const Eigen::Vector2d q(std::numbers::pi / 4, 0.0);
  CHECK(terrain_penalty(field, q) == doctest::Approx(0.5));
  const Eigen::Vector2d g = terrain_penalty_gradient(field, q);
  CHECK(g(0) == doctest::Approx(-1.0));
  CHECK(std::abs(g(1)) <= 1e-15);

  auto flat = field;
  flat.set_head(LinearHead{Eigen::VectorXd::Zero(1)});
  BSplineTrajectory t = random_trajectory(2, 8, 3);
  CHECK(terrain_cost(t, flat) == 0.0);
}

TEST_CASE("terrain gradient closed form matches the generic chain rule") {
  const auto field = random_field(FieldKind::kTerrain, 2, 17, 2.0);
  Rng rng(5);
  double worst = 0.0, worst_fd = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d q = testutil::random_vector(rng, 2, -5, 5);
    const Eigen::VectorXd closed = terrain_penalty_gradient(field, q);
    worst = std::max(worst, testutil::rel_err(closed, terrain_penalty_gradient_generic(field, q), 1e-12));
    const Eigen::VectorXd fd = testutil::fd_gradient([&](const Eigen::VectorXd& x) {
      return terrain_penalty(field, Eigen::Vector2d(x));
    }, q);
    worst_fd = std::max(worst_fd, testutil::rel_err(closed, fd, 1e-3));
  }
  CHECK(worst <= 1e-10);
  CHECK(worst_fd <= 1e-5);
}

TEST_CASE("cost gradients agree with finite differences") {
  const auto esdf = random_field(FieldKind::kEsdf, 3, 21);
  const auto terrain = random_field(FieldKind::kTerrain, 2, 22);
  TrajectoryCostConfig cfg;
  cfg.clearance = 1.0;  // keep some collision terms active
  cfg.v_max = 2.0;
  cfg.a_max = 3.0;
  const auto t3 = random_trajectory(3, 10, 8);
  const auto t2 = random_trajectory(2, 10, 9);
  CHECK(gradient_error(t3, [](const auto& t, auto* g) { return smoothness_cost(t, g); }) <= 1e-5);
  CHECK(gradient_error(t3, [&](const auto& t, auto* g) { return collision_cost(t, esdf, cfg, g); }) <= 1e-5);
  CHECK(gradient_error(t3, [&](const auto& t, auto* g) { return velocity_cost(t, cfg, g); }) <= 1e-5);
  CHECK(gradient_error(t3, [&](const auto& t, auto* g) { return acceleration_cost(t, cfg, g); }) <= 1e-5);
  CHECK(gradient_error(t2, [&](const auto& t, auto* g) { return terrain_cost(t, terrain, g); }) <= 1e-5);
  CHECK(gradient_error(t3, [&](const auto& t, auto* g) {
          return total_cost(t, TrajectoryFields{&esdf, nullptr}, cfg, g).total;
        }) <= 1e-5);
  CHECK(gradient_error(t2, [&](const auto& t, auto* g) {
          return total_cost(t, TrajectoryFields{nullptr, &terrain}, cfg, g).total;
        }) <= 1e-5);
  CHECK(collision_cost(t3, esdf, cfg) > 0.0);
}

TEST_CASE("optimizer in free space") {
  const auto esdf = constant_esdf(10.0);
  std::vector<Eigen::VectorXd> wp{Eigen::Vector3d(0, 0, 1), Eigen::Vector3d(1, 1, 1), Eigen::Vector3d(2, -1, 1),
                                  Eigen::Vector3d(4, 0, 1)};
  const auto initial = seed_trajectory(wp, 3, 0.5, 0.4);
  const auto res = optimize_trajectory(initial, TrajectoryFields{&esdf, nullptr}, TrajectoryCostConfig{});
  CHECK(!res.warning);
  for (std::size_t i = 1; i < res.cost_trace.size(); ++i) CHECK(res.cost_trace[i] <= res.cost_trace[i - 1]);
  CHECK(res.cost_trace.back() < res.cost_trace.front());
  CHECK(res.terms.collision == 0.0);
  const int p = initial.degree, n = initial.last_index();
  for (int i = 0; i < p; ++i) {
    CHECK(res.trajectory.control.col(i) == initial.control.col(i));
    CHECK(res.trajectory.control.col(n - i) == initial.control.col(n - i));
  }
  const auto again = optimize_trajectory(initial, TrajectoryFields{&esdf, nullptr}, TrajectoryCostConfig{});
  CHECK(again.trajectory.control == res.trajectory.control);
}

TEST_CASE("a trajectory at rest stays at rest") {
  BSplineTrajectory t;
  t.control = Eigen::MatrixXd::Constant(3, 9, 1.0);
  const auto res = optimize_trajectory(t, TrajectoryFields{}, TrajectoryCostConfig{});
  CHECK(res.trajectory.control == t.control);
  CHECK(res.cost_trace.front() == 0.0);
  CHECK(energy_proxy(sample_trajectory(res.trajectory, 30)) == 0.0);
}

TEST_CASE("a straight uniform polygon is already optimal") {
  BSplineTrajectory t;
  t.control.resize(3, 10);
  for (int i = 0; i < 10; ++i) t.control.col(i) = Eigen::Vector3d(0.3 * i, 1.0, 1.0);
  const auto esdf = constant_esdf(10.0);
  const auto res = optimize_trajectory(t, TrajectoryFields{&esdf, nullptr}, TrajectoryCostConfig{});
  CHECK((res.trajectory.control - t.control).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(res.terms.collision == 0.0);
  CHECK(res.terms.velocity + res.terms.acceleration == 0.0);
}

TEST_CASE("pit counting and clearance helpers") {
  Terrain terrain;
  terrain.pits.push_back(Pit{Eigen::Vector2d(1, 0), 0.5, 0.3});
  BSplineTrajectory t;
  t.control.resize(2, 7);
  for (int i = 0; i < 7; ++i) t.control.col(i) = Eigen::Vector2d(-1 + i / 2.0, 0.0);
  const auto samples = sample_trajectory(t, 50);
  CHECK(count_pit_samples(samples, terrain) > 0);
  Scene scene;
  scene.obstacles.push_back(SphereObstacle{Eigen::Vector3d(0, 0, 0), 0.5});
  BSplineTrajectory t3;
  t3.control = Eigen::MatrixXd::Zero(3, 6);
  t3.control.row(1).setConstant(2.0);
  CHECK(min_clearance(sample_trajectory(t3, 10), scene) == doctest::Approx(1.5));
}
