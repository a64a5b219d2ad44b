#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rmrp/linear_model.hpp"
#include "test_util.hpp"

using namespace rmrp;

namespace {

double ridge_objective(const Eigen::VectorXd& eta, const Eigen::MatrixXd& f,
                       const Eigen::VectorXd& t, double alpha) {
  return (f.transpose() * eta - t).squaredNorm() + alpha * eta.squaredNorm();
}

}  // namespace

TEST_CASE("zero targets give a zero head") {
  Rng rng(1);
  Eigen::MatrixXd f(4, 30);
  for (int j = 0; j < 30; ++j) f.col(j) = testutil::random_vector(rng, 4, -1, 1);
  const auto head = ridge_solve(f, Eigen::VectorXd::Zero(30), RidgeConfig{0.01});
  CHECK(head.weights.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("toy ridge system against an independent solve") {
  Eigen::MatrixXd f(2, 3);
  f << 1.0, 0.0, 2.0,
       0.5, -1.0, 1.0;
  const Eigen::Vector3d t(1.0, -2.0, 0.5);
  const double alpha = 0.1;
  const auto head = ridge_solve(f, t, RidgeConfig{alpha});
  // Closed form through QR on the stacked least-squares system [F^T; sqrt(a) I].
  Eigen::MatrixXd a(5, 2);
  a << f.transpose(), std::sqrt(alpha) * Eigen::Matrix2d::Identity();
  Eigen::VectorXd b(5);
  b << t, 0.0, 0.0;
  const Eigen::VectorXd expected = a.colPivHouseholderQr().solve(b);
  CHECK(testutil::rel_err(head.weights, expected) <= 1e-10);
}

TEST_CASE("ridge solution is a local minimum") {
  Rng rng(2);
  Eigen::MatrixXd f(6, 40);
  for (int j = 0; j < 40; ++j) f.col(j) = testutil::random_vector(rng, 6, -1, 1);
  const Eigen::VectorXd t = testutil::random_vector(rng, 40, -1, 1);
  const auto head = ridge_solve(f, t, RidgeConfig{0.01});
  const double best = ridge_objective(head.weights, f, t, 0.01);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd delta = testutil::random_vector(rng, 6, -1e-3, 1e-3);
    CHECK(ridge_objective(head.weights + delta, f, t, 0.01) >= best - 1e-12);
  }
}

TEST_CASE("sample order does not matter") {
  Rng rng(3);
  Eigen::MatrixXd f(5, 50);
  for (int j = 0; j < 50; ++j) f.col(j) = testutil::random_vector(rng, 5, -1, 1);
  const Eigen::VectorXd t = testutil::random_vector(rng, 50, -1, 1);
  std::vector<int> perm(50);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  std::rotate(perm.begin(), perm.begin() + 13, perm.end());
  Eigen::MatrixXd fp(5, 50);
  Eigen::VectorXd tp(50);
  for (int j = 0; j < 50; ++j) {
    fp.col(j) = f.col(perm[j]);
    tp(j) = t(perm[j]);
  }
  const auto a = ridge_solve(f, t, RidgeConfig{0.01});
  const auto b = ridge_solve(fp, tp, RidgeConfig{0.01});
  CHECK(testutil::rel_err(a.weights, b.weights) <= 1e-10);
}

TEST_CASE("singular system without regularization is an error") {
  Eigen::MatrixXd f(3, 2);
  f << 1, 2, 1, 2, 1, 2;  // rank 1
  CHECK_THROWS_AS(ridge_solve(f, Eigen::Vector2d(1, 1), RidgeConfig{0.0}), std::runtime_error);
  CHECK_THROWS_AS(ridge_solve(f, Eigen::Vector3d(1, 1, 1), RidgeConfig{0.01}),
                  std::invalid_argument);
  CHECK_THROWS_AS(ridge_solve(f, Eigen::Vector2d(1, 1), RidgeConfig{-1.0}),
                  std::invalid_argument);
}

TEST_CASE("streaming gradient") {
  LinearHead head{Eigen::Vector3d(0.5, -1.0, 2.0), Task::kRegression};
  const Eigen::Vector3d s(1.0, 0.5, 0.25);
  SUBCASE("perfect prediction") {
    CHECK(streaming_gradient(head, s, head.score(s)).norm() == 0.0);
  }
  SUBCASE("zero head, unit target") {
    LinearHead zero{Eigen::Vector3d::Zero(), Task::kRegression};
    CHECK(streaming_gradient(zero, Eigen::Vector3d::UnitX(), 1.0) == -Eigen::Vector3d::UnitX());
  }
  SUBCASE("finite differences of the squared error") {
    const double t = 0.3;
    auto loss = [&](const Eigen::VectorXd& eta) {
      const double r = t - eta.dot(s);
      return 0.5 * r * r;
    };
    CHECK(testutil::rel_err(streaming_gradient(head, s, t),
                            testutil::fd_gradient(loss, head.weights)) <= 1e-8);
  }
}

TEST_CASE("one AdamW step against a hand computation") {
  AdamWConfig cfg{0.1, 0.01, 0.9, 0.999, 1e-8};
  LinearHead head{Eigen::Vector2d(1.0, -2.0), Task::kRegression};
  auto state = AdamWState::zeros(2, cfg);
  const Eigen::Vector2d g(0.5, -0.25);
  adamw_step(head, state, g);
  for (int i = 0; i < 2; ++i) {
    const double m = 0.1 * g(i), v = 0.001 * g(i) * g(i);
    const double mh = m / 0.1, vh = v / 0.001;
    const double prev = i == 0 ? 1.0 : -2.0;
    const double expected = prev - 0.1 * (mh / (std::sqrt(vh) + 1e-8) + 0.01 * prev);
    CHECK(head.weights(i) == doctest::Approx(expected).epsilon(1e-14));
  }
  CHECK(state.step == 1);
  CHECK(state.second_moment.minCoeff() >= 0.0);
}

TEST_CASE("AdamW with zero gradient") {
  SUBCASE("no decay leaves the head unchanged") {
    AdamWConfig cfg;
    cfg.weight_decay = 0.0;
    LinearHead head{Eigen::Vector3d(1, 2, 3), Task::kRegression};
    auto state = AdamWState::zeros(3, cfg);
    adamw_step(head, state, Eigen::Vector3d::Zero());
    CHECK(head.weights == Eigen::Vector3d(1, 2, 3));
  }
  SUBCASE("decay alone shrinks by 1 - lr * lambda") {
    AdamWConfig cfg{0.1, 0.5, 0.9, 0.999, 1e-8};
    LinearHead head{Eigen::Vector3d(1, -2, 3), Task::kRegression};
    auto state = AdamWState::zeros(3, cfg);
    adamw_step(head, state, Eigen::Vector3d::Zero());
    CHECK(testutil::rel_err(head.weights, 0.95 * Eigen::Vector3d(1, -2, 3)) <= 1e-15);
  }
}

TEST_CASE("AdamW rejects non-finite gradients without side effects") {
  LinearHead head{Eigen::Vector2d(1, 2), Task::kRegression};
  auto state = AdamWState::zeros(2);
  Eigen::Vector2d bad(0.0, std::numeric_limits<double>::quiet_NaN());
  CHECK_THROWS_AS(adamw_step(head, state, bad), std::invalid_argument);
  CHECK(head.weights == Eigen::Vector2d(1, 2));
  CHECK(state.step == 0);
  CHECK(state.first_moment.norm() == 0.0);
  AdamWConfig cfg;
  cfg.rate1 = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("small-step AdamW decreases a quadratic loss") {
  Rng rng(9);
  Eigen::MatrixXd f(4, 20);
  for (int j = 0; j < 20; ++j) f.col(j) = testutil::random_vector(rng, 4, -1, 1);
  const Eigen::VectorXd t = testutil::random_vector(rng, 20, -1, 1);
  auto loss = [&](const Eigen::VectorXd& eta) { return 0.5 * (f.transpose() * eta - t).squaredNorm(); };
  AdamWConfig cfg{1e-3, 0.0, 0.9, 0.999, 1e-8};
  LinearHead head{Eigen::VectorXd::Zero(4), Task::kRegression};
  auto state = AdamWState::zeros(4, cfg);
  double prev = loss(head.weights);
  for (int it = 0; it < 100; ++it) {
    const Eigen::VectorXd g = f * (f.transpose() * head.weights - t);
    adamw_step(head, state, g);
    const double cur = loss(head.weights);
    CHECK(cur <= prev + 1e-12);
    prev = cur;
  }
}
