#include <doctest.h>

#include <cmath>
#include <numbers>

#include "rmrp/field.hpp"
#include "rmrp/kernels.hpp"
#include "rmrp/scene.hpp"
#include "rmrp/sensing.hpp"
#include "test_util.hpp"

using namespace rmrp;
using testutil::rel_err;

namespace {

FieldConfig small_config(double scale = 1.0) {
  FieldConfig c;
  c.feature_dim = 200;
  c.projected_dim = 100;
  c.scale = scale;
  c.feature_seed = 11;
  c.projection_seed = 12;
  return c;
}

ParametricField random_field(FieldKind kind, int dim, std::uint64_t seed) {
  FieldConfig c = small_config(1.5);
  c.feature_seed = seed;
  auto field = make_untrained_field(kind, dim, c);
  Rng rng(seed + 1);
  LinearHead head{testutil::random_vector(rng, field.projection().rows(), -1, 1),
                  kind == FieldKind::kOccupancy ? Task::kClassification : Task::kRegression};
  field.set_head(head);
  return field;
}

/// Unit box at the origin inside [-2, 2]^3, labeled by containment.
LabeledPoints box_samples(int count, std::uint64_t seed) {
  Scene scene;
  scene.bounds = Box3{Eigen::Vector3d::Constant(-2), Eigen::Vector3d::Constant(2)};
  scene.obstacles.push_back(BoxObstacle{Box3{Eigen::Vector3d::Constant(-0.5), Eigen::Vector3d::Constant(0.5)}});
  return volumetric_occupancy_samples(scene, scene.bounds, count, seed);
}

FieldConfig box_config() {
  FieldConfig c;
  c.feature_dim = 600;
  c.projected_dim = 300;
  c.scale = 2.0;
  return c;
}

}  // namespace

TEST_CASE("zero head gives a zero field") {
  const auto field = make_untrained_field(FieldKind::kEsdf, 3, small_config());
  const Eigen::Vector3d x(0.3, 1.0, -2.0);
  CHECK(field.value(x) == 0.0);
  CHECK(field.gradient(x).norm() == 0.0);
  CHECK(field.hessian(x).norm() == 0.0);
}

TEST_CASE("single-term terrain field") {
  Eigen::MatrixXd w(1, 2);
  w << 1.0, 0.0;
  ParametricField field(RandomFeatureMap(w, Eigen::VectorXd::Zero(1)), SparseProjection::identity(1),
                        LinearHead{Eigen::VectorXd::Ones(1), Task::kRegression}, FieldKind::kTerrain);
  CHECK(field.value(Eigen::Vector2d(std::numbers::pi / 2, 7.0)) == doctest::Approx(1.0).epsilon(1e-15));
  const Eigen::VectorXd g = field.gradient(Eigen::Vector2d::Zero());
  CHECK(g(0) == doctest::Approx(1.0));
  CHECK(g(1) == 0.0);
}

TEST_CASE("value is head . R g(Wx + b)") {
  const auto field = random_field(FieldKind::kOccupancy, 3, 5);
  const Eigen::Vector3d x(0.1, -0.4, 0.9);
  const Eigen::VectorXd lifted = field.feature_map().lift(x);
  const double expected = field.head().weights.dot(field.projection().to_dense() * lifted);
  CHECK(field.value(x) == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("gradient and hessian agree with finite differences") {
  const std::vector<std::pair<FieldKind, int>> kinds{
      {FieldKind::kOccupancy, 3}, {FieldKind::kEsdf, 3}, {FieldKind::kTerrain, 2}};
  for (const auto& [kind, dim] : kinds) {
    CAPTURE(to_string(kind));
    const auto field = random_field(kind, dim, 20 + dim);
    Rng rng(7);
    double worst_g = 0.0, worst_h = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const Eigen::VectorXd x = testutil::random_vector(rng, dim, -3, 3);
      const Eigen::VectorXd fd = testutil::fd_gradient([&](const Eigen::VectorXd& y) { return field.value(y); }, x);
      worst_g = std::max(worst_g, rel_err(field.gradient(x), fd, 1e-3));
      const double h = 1e-5;
      Eigen::MatrixXd fdh(dim, dim);
      for (int j = 0; j < dim; ++j) {
        Eigen::VectorXd xp = x, xm = x;
        xp(j) += h;
        xm(j) -= h;
        fdh.col(j) = (field.gradient(xp) - field.gradient(xm)) / (2 * h);
      }
      worst_h = std::max(worst_h, (field.hessian(x) - fdh).norm() / std::max(fdh.norm(), 1e-3));
    }
    CHECK(worst_g <= 1e-5);
    CHECK(worst_h <= 1e-5);
  }
}

TEST_CASE("dimension and kind errors") {
  const auto field = make_untrained_field(FieldKind::kOccupancy, 3, small_config());
  CHECK_THROWS_AS(field.value(Eigen::Vector2d(1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(make_untrained_field(FieldKind::kTerrain, 3, small_config()), std::invalid_argument);
  LinearHead wrong{Eigen::VectorXd::Zero(7), Task::kClassification};
  auto copy = field;
  CHECK_THROWS_AS(copy.set_head(wrong), std::invalid_argument);
  CHECK_THROWS_AS(field_kind_from_string("voxel"), std::invalid_argument);
}

TEST_CASE("occupancy training") {
  SUBCASE("unit box") {
    const auto train = box_samples(6000, 1);
    const auto test = box_samples(2000, 2);
    const auto result = train_occupancy(train, box_config());
    const auto metrics = classification_metrics(result.field, test, 0.5);
    CHECK(metrics.accuracy >= 0.95);
  }
  SUBCASE("degenerate inputs") {
    LabeledPoints one_class = box_samples(100, 3);
    one_class.targets.setZero();
    CHECK_THROWS_AS(train_occupancy(one_class, small_config()), std::invalid_argument);
    LabeledPoints empty{Eigen::MatrixXd(3, 0), Eigen::VectorXd(0)};
    CHECK_THROWS(train_occupancy(empty, small_config()));
    LabeledPoints bad = box_samples(100, 3);
    bad.targets(0) = 0.5;
    CHECK_THROWS_AS(train_occupancy(bad, small_config()), std::invalid_argument);
  }
}

TEST_CASE("esdf training") {
  SUBCASE("all-zero targets") {
    LabeledPoints zero = box_samples(500, 4);
    zero.targets.setZero();
    const auto result = train_esdf(zero, small_config());
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
      CHECK(std::abs(result.field.value(testutil::random_vector(rng, 3, -2, 2))) <= 1e-6);
    }
  }
  SUBCASE("single sphere") {
    const Scene scene = generate_scene("sphere-single", {}, 0);
    auto make = [&](int count, std::uint64_t seed) {
      Rng rng(seed);
      std::vector<Eigen::VectorXd> pts;
      std::vector<double> d;
      while (static_cast<int>(pts.size()) < count) {
        const Eigen::Vector3d p = testutil::random_vector(rng, 3, -3, 3);
        if (scene_occupied(scene, p)) continue;
        pts.push_back(p);
        d.push_back(brute_force_esdf(scene, p));
      }
      return LabeledPoints::from_rows(pts, d);
    };
    FieldConfig c = box_config();
    c.scale = 1.0;
    const auto result = train_esdf(make(5000, 5), c);
    CHECK(regression_metrics(result.field, make(1000, 6)).r2 >= 0.95);
  }
  SUBCASE("negative distances are rejected") {
    LabeledPoints bad = box_samples(50, 4);
    bad.targets.setConstant(-1.0);
    CHECK_THROWS_AS(train_esdf(bad, small_config()), std::invalid_argument);
  }
}

TEST_CASE("terrain training") {
  FieldConfig c;
  c.feature_dim = 400;
  c.projected_dim = 400;
  c.scale = 3.0;
  SUBCASE("flat ground") {
    Terrain flat;
    flat.height = 0.7;
    const auto train = terrain_samples(flat, {0, 0}, {5, 5}, 3000, 1);
    const auto result = train_terrain(train, c);
    Rng rng(2);
    for (int i = 0; i < 50; ++i) {
      const Eigen::VectorXd q = testutil::random_vector(rng, 2, 0.5, 4.5);
      CHECK(std::abs(result.field.value(q) - 0.7) <= 0.7 * 1e-3 + 1e-4);
    }
  }
  SUBCASE("sine ridge") {
    Terrain ridge;
    ridge.base = TerrainBase::kSineRidge;
    ridge.amplitude = 0.5;
    ridge.frequency = 1.0;
    const auto train = terrain_samples(ridge, {0, 0}, {6, 6}, 4000, 3);
    const auto test = terrain_samples(ridge, {0.5, 0.5}, {5.5, 5.5}, 1000, 4);
    const auto result = train_terrain(train, c);
    CHECK(regression_metrics(result.field, test).r2 >= 0.99);
  }
}

TEST_CASE("online updates learn a new obstacle") {
  const auto train = box_samples(6000, 1);
  auto field = train_occupancy(train, box_config()).field;
  // Second box, absent from the offline data.
  const Box3 added{Eigen::Vector3d(1.0, 1.0, 1.0), Eigen::Vector3d(1.6, 1.6, 1.6)};
  Scene scene;
  scene.bounds = added;
  scene.obstacles.push_back(BoxObstacle{added});
  const auto stream = volumetric_occupancy_samples(scene, added, 500, 9);
  AdamWConfig cfg;
  cfg.learning_rate = 1e-2;
  auto state = AdamWState::zeros(field.projection().rows(), cfg);
  const Eigen::VectorXd before = field.head().weights;

  SUBCASE("a perfectly predicted sample with no decay is a no-op") {
    AdamWConfig quiet;
    quiet.weight_decay = 0.0;
    auto s = AdamWState::zeros(field.projection().rows(), quiet);
    const Eigen::Vector3d x(0, 0, 0);
    online_update(field, x, field.value(x), s);
    CHECK(field.head().weights == before);
  }
  SUBCASE("streamed samples") {
    for (std::size_t i = 0; i < stream.size(); ++i) {
      online_update(field, stream.points.col(static_cast<Eigen::Index>(i)), 1.0, state);
    }
    const auto probe = volumetric_occupancy_samples(scene, added, 400, 10);
    int hits = 0;
    for (std::size_t i = 0; i < probe.size(); ++i)
      hits += field.value(probe.points.col(static_cast<Eigen::Index>(i))) > 0.5;
    CHECK(hits >= 0.9 * static_cast<double>(probe.size()));
    CHECK(state.step == 500);
    // W, b and R are fixed
    CHECK(field.feature_map().weights() == train_occupancy(train, box_config()).field.feature_map().weights());
  }
  SUBCASE("non-finite sample is rejected") {
    CHECK_THROWS_AS(online_update(field, Eigen::Vector3d(NAN, 0, 0), 1.0, state),
                    std::invalid_argument);
    CHECK(field.head().weights == before);
  }
}

TEST_CASE("blind-spot completion") {
  const auto field = train_occupancy(box_samples(6000, 1), box_config()).field;
  const Box3 region{Eigen::Vector3d::Constant(-1.0), Eigen::Vector3d::Constant(1.0)};

  SUBCASE("empty region marks nothing") {
    OccupancyStore store(0.1);
    Box3 empty{Eigen::Vector3d::Constant(1.0), Eigen::Vector3d::Constant(-1.0)};
    CHECK(complete_blind_spots(field, CompletionConfig{0.5, empty, 0.1}, store).empty());
    CHECK(store.size() == 0);
  }
  SUBCASE("tau above every score marks nothing") {
    OccupancyStore store(0.1);
    CHECK(complete_blind_spots(field, CompletionConfig{1e9, region, 0.1}, store).empty());
  }
  SUBCASE("idempotent and leaves the field alone") {
    OccupancyStore store(0.1, Eigen::Vector3d::Constant(-1.0));
    const Eigen::VectorXd head = field.head().weights;
    const auto first = complete_blind_spots(field, CompletionConfig{0.5, region, 0.1}, store);
    CHECK(!first.empty());
    const OccupancyStore snapshot = store;
    const auto second = complete_blind_spots(field, CompletionConfig{0.5, region, 0.1}, store);
    CHECK(second.empty());
    CHECK(store == snapshot);
    CHECK(field.head().weights == head);
    // marked cells sit in the unit box
    for (const auto& cell : first) {
      CHECK(store.center_of(cell).cwiseAbs().maxCoeff() <= 0.75);
    }
  }
  SUBCASE("scaling head and tau together keeps the decision") {
    auto scaled = field;
    scaled.set_head(LinearHead{3.0 * field.head().weights, Task::kClassification});
    OccupancyStore a(0.1, Eigen::Vector3d::Constant(-1.0)), b(0.1, Eigen::Vector3d::Constant(-1.0));
    complete_blind_spots(field, CompletionConfig{0.5, region, 0.1}, a);
    complete_blind_spots(scaled, CompletionConfig{1.5, region, 0.1}, b);
    CHECK(a == b);
  }
}

TEST_CASE("region grid uses cell centers") {
  const Box3 r{Eigen::Vector3d::Zero(), Eigen::Vector3d(1.0, 0.5, 0.2)};
  const auto g = region_grid(r, 0.1);
  CHECK(g.size() == 10 * 5 * 2);
  CHECK(rel_err(g.front(), Eigen::Vector3d(0.05, 0.05, 0.05)) <= 1e-12);
}

TEST_CASE("parallel kernels match the serial path and the dense oracle") {
  const auto field = random_field(FieldKind::kOccupancy, 3, 31);
  Rng rng(3);
  Eigen::MatrixXd pts(3, 5000);
  for (int j = 0; j < 5000; ++j) pts.col(j) = testutil::random_vector(rng, 3, -3, 3);
  Eigen::VectorXd targets = testutil::random_vector(rng, 5000, 0, 1);

  const auto fs = kernels::projected_features(field.feature_map(), field.projection(), pts, Execution::kSerial);
  const auto fp = kernels::projected_features(field.feature_map(), field.projection(), pts, Execution::kParallel);
  CHECK(fs == fp);
  const auto fr = kernels::reference::projected_features(field.feature_map(), field.projection(), pts);
  CHECK((fs - fr).cwiseAbs().maxCoeff() <= 1e-12);

  const auto vs = kernels::field_values(field, pts, Execution::kSerial);
  const auto vp = kernels::field_values(field, pts, Execution::kParallel);
  CHECK(vs == vp);
  for (int j = 0; j < 5000; j += 97) CHECK(vp(j) == field.value(pts.col(j)));
  CHECK((vs - kernels::reference::field_values(field, pts)).cwiseAbs().maxCoeff() <= 1e-12);

  const auto ns = kernels::accumulate_normal_equations(field.feature_map(), field.projection(), pts, targets,
                                                       Execution::kSerial, 1000);
  const auto np = kernels::accumulate_normal_equations(field.feature_map(), field.projection(), pts, targets,
                                                       Execution::kParallel, 1000);
  CHECK(ns.gram == np.gram);
  CHECK(ns.rhs == np.rhs);
  const auto nr = kernels::reference::normal_equations(field.feature_map(), field.projection(), pts, targets);
  CHECK((ns.gram - nr.gram).norm() <= 1e-9 * nr.gram.norm());
  CHECK(rel_err(ns.rhs, nr.rhs) <= 1e-9);
}
