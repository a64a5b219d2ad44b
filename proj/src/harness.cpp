#include "rmrp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "rmrp/checkpoint.hpp"
#include "rmrp/parallel.hpp"
#include "rmrp/rng.hpp"

namespace rmrp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

// ---------------------------------------------------------------- sensing

std::vector<std::size_t> subsample_indices(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (count >= n) return idx;
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots become the sample.
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(n - i));
    std::swap(idx[i], idx[std::min(j, n - 1)]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

SensedScene sense_scene(const Scene& scene, const SensingConfig& config) {
  const auto poses =
      sample_free_poses(scene, config.poses, config.pose_clearance, derive_seed(config.seed, 1));
  auto all = scan_from_poses(scene, poses, config.scan);
  const auto keep = subsample_indices(all.size(), config.sample_budget, derive_seed(config.seed, 2));
  SensedScene sensed;
  sensed.samples.reserve(keep.size());
  for (std::size_t i : keep) sensed.samples.push_back(all[i]);
  sensed.occupancy = occupancy_dataset(sensed.samples);
  if (config.free_ratio > 0.0) {
    std::vector<std::size_t> occupied, free;
    for (std::size_t i = 0; i < sensed.occupancy.size(); ++i) {
      (sensed.occupancy.targets(static_cast<Eigen::Index>(i)) > 0.5 ? occupied : free).push_back(i);
    }
    const auto cap = static_cast<std::size_t>(config.free_ratio * static_cast<double>(occupied.size()));
    for (std::size_t k : subsample_indices(free.size(), cap, derive_seed(config.seed, 3))) {
      occupied.push_back(free[k]);
    }
    std::sort(occupied.begin(), occupied.end());
    sensed.occupancy = sensed.occupancy.subset(occupied);
  }
  sensed.esdf = esdf_dataset(scene, sensed.samples);
  return sensed;
}

// ---------------------------------------------------------------- mapping

double measure_query_ms(const ParametricField& field, const Eigen::MatrixXd& points, int repeats) {
  if (points.cols() == 0) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  volatile double sink = 0.0;
  for (int r = 0; r < std::max(repeats, 1); ++r) {
    const auto start = Clock::now();
    double acc = 0.0;
    for (Eigen::Index c = 0; c < points.cols(); ++c) acc += field.value(points.col(c));
    best = std::min(best, ms_since(start) / static_cast<double>(points.cols()));
    sink = sink + acc;
  }
  return best;
}

MappingMetrics evaluate_mapping(const TrainResult& trained, const LabeledPoints& holdout,
                                double tau, int latency_queries) {
  const ParametricField& field = trained.field;
  MappingMetrics m;
  m.feature_dim = field.feature_map().feature_dim();
  m.projected_dim = field.projection().rows();
  m.train_samples = trained.train.count;
  m.holdout_samples = holdout.size();
  m.train_ms = trained.seconds * 1000.0;
  const Eigen::Index q = std::min<Eigen::Index>(latency_queries, holdout.points.cols());
  m.query_ms = measure_query_ms(field, holdout.points.leftCols(q));
  m.checkpoint_bytes = checkpoint_bytes(field);
  if (field.kind() == FieldKind::kOccupancy) {
    const FitMetrics fit = classification_metrics(field, holdout, tau);
    m.accuracy = fit.accuracy;
    m.balanced_accuracy = fit.balanced_accuracy;
  } else {
    const FitMetrics fit = regression_metrics(field, holdout);
    m.r2 = fit.r2;
    m.mse = fit.mse;
  }
  return m;
}

std::size_t voxel_grid_bytes(const Box3& box, double pitch, std::size_t bytes_per_voxel) {
  if (!(pitch > 0.0)) throw std::invalid_argument("voxel pitch must be > 0");
  std::size_t cells = 1;
  for (int a = 0; a < 3; ++a) {
    cells *= static_cast<std::size_t>(std::ceil(box.extent()(a) / pitch - 1e-9));
  }
  return cells * bytes_per_voxel;
}

MappingConfig::MappingConfig() {
  sensing.scan.ray_count = 1200;
  sensing.scan.hit_thickness = 0.3;
  sensing.sample_budget = 62500;  // 50k training samples after the 20 % holdout
  occupancy.feature_dim = 600;
  occupancy.projected_dim = 300;
  occupancy.scale = 3.0;
  esdf.feature_dim = 600;
  esdf.projected_dim = 300;
  esdf.scale = 2.0;
}

namespace {

// Same seeded split for both variants so they see identical samples.
std::pair<LabeledPoints, LabeledPoints> holdout_split(const LabeledPoints& data, double fraction,
                                                      std::uint64_t seed) {
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < data.size(); ++i) {
    Rng rng(derive_seed(seed, i));
    (rng.uniform() < fraction ? test : train).push_back(i);
  }
  return {data.subset(train), data.subset(test)};
}

}  // namespace

MappingComparison run_mapping_comparison(const MappingConfig& config, std::uint64_t seed) {
  const Scene scene = generate_scene(config.scene, config.scene_params, seed);
  SensingConfig sensing = config.sensing;
  sensing.seed = derive_seed(seed, 11);
  const SensedScene sensed = sense_scene(scene, sensing);
  const auto [occ_train, occ_test] =
      holdout_split(sensed.occupancy, config.holdout_fraction, derive_seed(seed, 12));
  const auto [esdf_train, esdf_test] =
      holdout_split(sensed.esdf, config.holdout_fraction, derive_seed(seed, 13));

  auto run = [&](FieldConfig fc, bool square, bool occupancy) {
    fc.holdout_fraction = 0.0;
    if (square) {
      fc.projected_dim = fc.feature_dim;
      fc.projection = ProjectionMode::kSparse;
    }
    const TrainResult trained = occupancy ? train_occupancy(occ_train, fc, config.tau)
                                          : train_esdf(esdf_train, fc);
    MappingMetrics m = evaluate_mapping(trained, occupancy ? occ_test : esdf_test, config.tau,
                                        config.latency_queries);
    m.variant = square ? "rm" : "rmrp";
    return std::pair{m, trained.field};
  };
  // Latency of the two variants is re-measured in alternating rounds so a
  // burst of background load cannot favour one of them.
  auto interleave = [&](auto& a, auto& b, const LabeledPoints& test) {
    const Eigen::Index q = std::min<Eigen::Index>(config.latency_queries, test.points.cols());
    const Eigen::MatrixXd pts = test.points.leftCols(q);
    for (int round = 0; round < 5; ++round) {
      a.first.query_ms = std::min(a.first.query_ms, measure_query_ms(a.second, pts, 1));
      b.first.query_ms = std::min(b.first.query_ms, measure_query_ms(b.second, pts, 1));
    }
  };
  auto occ = run(config.occupancy, false, true);
  auto occ_rm = run(config.occupancy, true, true);
  interleave(occ, occ_rm, occ_test);
  auto esdf = run(config.esdf, false, false);
  auto esdf_rm = run(config.esdf, true, false);
  interleave(esdf, esdf_rm, esdf_test);
  return MappingComparison{occ.first, occ_rm.first, esdf.first, esdf_rm.first};
}

// ---------------------------------------------------------------- planning

SceneFields train_scene_fields(const Scene& scene, const SensingConfig& sensing,
                               const FieldConfig& occupancy, const FieldConfig& esdf) {
  const SensedScene sensed = sense_scene(scene, sensing);
  return SceneFields{train_occupancy(sensed.occupancy, occupancy), train_esdf(sensed.esdf, esdf)};
}

Box3 inset(const Box3& box, double margin) {
  return Box3{box.min.array() + margin, box.max.array() - margin};
}

SearchResult search_with_fallback(const ParametricField& occupancy, const Eigen::Vector3d& start,
                                  const Eigen::Vector3d& goal, const SearchConfig& search,
                                  double fallback_tau) {
  try {
    return search_initial_path(occupancy, start, goal, search);
  } catch (const std::invalid_argument&) {
    if (search.tau == fallback_tau) throw;
  } catch (const UnreachableError&) {
    if (search.tau == fallback_tau) throw;
  }
  SearchConfig retry = search;
  retry.tau = fallback_tau;
  return search_initial_path(occupancy, start, goal, retry);
}

UavPlan plan_uav(const Scene& scene, const ParametricField& occupancy,
                 const ParametricField& esdf, const UavPlanConfig& config) {
  if (!scene.start || !scene.goal) throw std::invalid_argument("scene has no start/goal");
  UavPlan plan;
  SearchConfig search = config.search;
  if (!search.bounds) search.bounds = inset(scene.bounds, config.search_margin);

  auto t0 = Clock::now();
  plan.search =
      search_with_fallback(occupancy, *scene.start, *scene.goal, search, config.fallback_tau);
  plan.search_ms = ms_since(t0);

  t0 = Clock::now();
  if (config.refine) {
    plan.refinement = refine_path(plan.search.path, occupancy, config.refinement);
  } else {
    plan.refinement.path = plan.search.path;
  }
  plan.refine_ms = ms_since(t0);

  std::vector<Eigen::VectorXd> waypoints;
  for (const auto& p : plan.refinement.path.points) waypoints.emplace_back(p);
  plan.initial = seed_trajectory(waypoints, config.degree, config.dt, config.seed_spacing);

  TrajectoryCostConfig cost = config.cost;
  cost.clearance += config.model_margin;
  t0 = Clock::now();
  plan.optimized =
      optimize_trajectory(plan.initial, TrajectoryFields{&esdf, nullptr}, cost, config.optimizer);
  plan.optimize_ms = ms_since(t0);
  plan.samples = sample_trajectory(plan.optimized.trajectory, config.samples);
  return plan;
}

TrainResult train_scene_terrain(const Scene& scene, const FieldConfig& config, int samples,
                                std::uint64_t seed) {
  if (!scene.terrain) throw std::invalid_argument("scene has no terrain");
  const LabeledPoints data =
      terrain_samples(*scene.terrain, scene.bounds.min.head<2>(), scene.bounds.max.head<2>(),
                      samples, seed);
  return train_terrain(data, config);
}

UgvPlan plan_ugv(const Scene& scene, const ParametricField& terrain, const UgvPlanConfig& config) {
  if (!scene.start || !scene.goal) throw std::invalid_argument("scene has no start/goal");
  UgvPlan plan;
  const std::vector<Eigen::VectorXd> waypoints{scene.start->head<2>(), scene.goal->head<2>()};
  plan.initial = seed_trajectory(waypoints, config.degree, config.dt, config.seed_spacing);
  const auto t0 = Clock::now();
  plan.optimized = optimize_trajectory(plan.initial, TrajectoryFields{nullptr, &terrain},
                                       config.cost, config.optimizer);
  plan.optimize_ms = ms_since(t0);
  plan.samples = sample_trajectory(plan.optimized.trajectory, config.samples);
  return plan;
}

// ---------------------------------------------------------------- completion

CompletionExperimentConfig::CompletionExperimentConfig() {
  field.feature_dim = 600;
  field.projected_dim = 300;
  field.scale = 2.0;
  sensing.scan.ray_count = 1200;
}

LabeledPoints complete_scene_samples(const CompletionExperimentConfig& config, std::uint64_t seed) {
  if (config.train_scenes < 1 || config.samples_per_scene < 1) {
    throw std::invalid_argument("completion needs >= 1 training scene and sample");
  }
  const Eigen::Index per = config.samples_per_scene;
  LabeledPoints all{Eigen::MatrixXd(3, per * config.train_scenes),
                    Eigen::VectorXd(per * config.train_scenes)};
  for (int s = 0; s < config.train_scenes; ++s) {
    const auto i = static_cast<std::uint64_t>(s);
    const Scene scene = generate_scene(config.scene, config.scene_params, derive_seed(seed, 500 + i));
    const LabeledPoints part = volumetric_occupancy_samples(
        scene, scene.bounds, config.samples_per_scene, derive_seed(seed, 600 + i));
    all.points.middleCols(s * per, per) = part.points;
    all.targets.segment(s * per, per) = part.targets;
  }
  return all;
}

void score_completion(const Scene& scene, const Box3& region, double pitch,
                      const OccupancyStore& store, CompletionOutcome& outcome) {
  outcome.occupied_cells = outcome.free_cells = 0;
  outcome.true_positive = outcome.false_positive = 0;
  for (const auto& p : region_grid(region, pitch)) {
    const bool truth = scene_occupied(scene, p);
    const bool predicted = store.occupied(store.cell_of(p));
    if (truth) {
      ++outcome.occupied_cells;
      outcome.true_positive += predicted ? 1 : 0;
    } else {
      ++outcome.free_cells;
      outcome.false_positive += predicted ? 1 : 0;
    }
  }
  auto ratio = [](std::size_t a, std::size_t b) {
    return b ? static_cast<double>(a) / static_cast<double>(b) : 0.0;
  };
  outcome.recall = ratio(outcome.true_positive, outcome.occupied_cells);
  outcome.false_positive_rate = ratio(outcome.false_positive, outcome.free_cells);
}

CompletionOutcome complete_scene(const ParametricField& field, const Scene& scene,
                                 const Box3& region, const CompletionExperimentConfig& config,
                                 std::uint64_t seed) {
  CompletionOutcome outcome;
  // Known map: occupied hits of a scan that cannot see into the mask.
  SensingConfig sensing = config.sensing;
  sensing.scan.mask = region;
  sensing.seed = seed;
  const SensedScene sensed = sense_scene(scene, sensing);
  OccupancyStore store(config.pitch, region.min);
  for (const auto& sample : sensed.samples) {
    if (sample.label > 0.5) store.mark_occupied(store.cell_of(sample.position));
  }
  outcome.known_cells = store.size();

  CompletionConfig cc;
  cc.tau = config.tau;
  cc.region = region;
  cc.pitch = config.pitch;
  const auto t0 = Clock::now();
  outcome.marked = complete_blind_spots(field, cc, store);
  outcome.complete_ms = ms_since(t0);

  OccupancyStore again = store;
  const auto second = complete_blind_spots(field, cc, again);
  outcome.idempotent = second.empty() && again == store;
  score_completion(scene, region, config.pitch, store, outcome);
  return outcome;
}

CompletionOutcome run_completion_experiment(const CompletionExperimentConfig& config,
                                            std::uint64_t seed) {
  const auto t0 = Clock::now();
  const LabeledPoints data = complete_scene_samples(config, seed);
  const TrainResult trained = train_occupancy(data, config.field, config.tau);
  const double train_ms = ms_since(t0);
  const Scene held = generate_scene(config.scene, config.scene_params, derive_seed(seed, 900));
  if (!held.occluded) throw std::invalid_argument("held-out scene has no occluded region");
  CompletionOutcome outcome =
      complete_scene(trained.field, held, *held.occluded, config, derive_seed(seed, 901));
  outcome.train_ms = train_ms;
  return outcome;
}

// ---------------------------------------------------------------- csv

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

CsvTable::CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

CsvTable& CsvTable::add(std::vector<std::string> row) {
  if (row.size() != header_.size()) throw std::invalid_argument("csv row width mismatch");
  rows_.push_back(std::move(row));
  return *this;
}

namespace {

void write_rows(const std::string& path, const std::string& prefix, char sep,
                const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? std::string(1, sep) : "") << cells[i];
    out << "\n";
  };
  out << prefix;
  line(header);
  for (const auto& r : rows) line(r);
}

}  // namespace

void CsvTable::write(const std::string& path) const { write_rows(path, "", ',', header_, rows_); }

void CsvTable::write_dat(const std::string& path) const {
  write_rows(path, "# ", ' ', header_, rows_);
}

// ---------------------------------------------------------------- suites

BenchmarkConfig::BenchmarkConfig() {
  planning_occupancy = mapping.occupancy;
  planning_esdf = mapping.esdf;
  planning_sensing = mapping.sensing;
  planning_sensing.sample_budget = 30000;
  planning_sensing.free_ratio = 3.0;
  // conservative blocking threshold for search; classification keeps tau
  uav.search.tau = 0.3;
  terrain.feature_dim = 400;
  terrain.scale = 3.0;
  ugv.cost.collision_weight = 0.0;
}

std::vector<std::string> suite_names() {
  return {"mapping", "frontend", "backend-uav", "backend-ugv", "theorem"};
}

namespace {

std::string yes(bool b) { return b ? "1" : "0"; }
std::string num(double v) { return format_number(v); }
std::string num(std::size_t v) { return std::to_string(v); }
std::string num(int v) { return std::to_string(v); }

void check(BenchmarkReport& report, bool ok, const std::string& what) {
  report.checks.push_back(std::string(ok ? "PASS " : "FAIL ") + what);
  report.passed = report.passed && ok;
}

void emit(BenchmarkReport& report, const CsvTable& table, const std::string& dir,
          const std::string& stem) {
  const std::string csv = (std::filesystem::path(dir) / (stem + ".csv")).string();
  const std::string dat = (std::filesystem::path(dir) / (stem + ".dat")).string();
  table.write(csv);
  table.write_dat(dat);
  report.files.push_back(csv);
  report.files.push_back(dat);
}

bool non_increasing(const std::vector<double>& trace) {
  for (std::size_t i = 1; i < trace.size(); ++i) {
    if (trace[i] > trace[i - 1]) return false;
  }
  return true;
}

double path_clearance(const WaypointPath& path, const Scene& scene) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : path.points) best = std::min(best, brute_force_esdf(scene, p));
  return best;
}

std::string threads() { return std::to_string(max_threads()); }

void mapping_suite(const BenchmarkConfig& config, const std::string& dir, BenchmarkReport& report) {
  const MappingComparison cmp = run_mapping_comparison(config.mapping, config.seed);
  CsvTable table({"variant", "task", "M", "k", "train_samples", "holdout_samples", "threads",
                  "train_ms", "query_ms", "checkpoint_bytes", "accuracy", "balanced_accuracy",
                  "r2", "mse"});
  auto row = [&](const MappingMetrics& m, const char* task) {
    table.add({m.variant, task, num(m.feature_dim), num(m.projected_dim), num(m.train_samples),
               num(m.holdout_samples), threads(), num(m.train_ms), num(m.query_ms),
               num(m.checkpoint_bytes), num(m.accuracy), num(m.balanced_accuracy), num(m.r2),
               num(m.mse)});
  };
  row(cmp.rmrp_occupancy, "occupancy");
  row(cmp.rm_occupancy, "occupancy");
  row(cmp.rmrp_esdf, "esdf");
  row(cmp.rm_esdf, "esdf");
  emit(report, table, dir, "mapping");
  check(report, cmp.rmrp_occupancy.accuracy >= 0.95, "occupancy accuracy >= 0.95");
  check(report, cmp.rmrp_esdf.r2 >= 0.95, "ESDF held-out R2 >= 0.95");
  check(report, std::abs(cmp.rm_occupancy.accuracy - cmp.rmrp_occupancy.accuracy) <= 0.02,
        "RMRP vs RM accuracy gap <= 0.02");
  check(report, cmp.rmrp_occupancy.query_ms < cmp.rm_occupancy.query_ms,
        "RMRP query latency below RM");

  // Memory: same (M, k) across scene volume and sample count.
  FieldConfig small;
  small.feature_dim = 100;
  small.projected_dim = 50;
  small.scale = config.mapping.occupancy.scale;
  CsvTable memory({"case", "volume_m3", "train_samples", "checkpoint_bytes", "voxel_bytes_0.05",
                   "voxel_ratio"});
  std::vector<std::size_t> sizes;
  const double base_x = config.mapping.scene_params.count("size_x")
                            ? config.mapping.scene_params.at("size_x")
                            : 8.0;
  struct Case {
    const char* name;
    double size_x;
    std::size_t budget;
  };
  for (const Case& c : {Case{"base", base_x, 5000}, Case{"volume_x2", 2.0 * base_x, 5000},
                        Case{"samples_x10", base_x, 50000}}) {
    SceneParams params = config.mapping.scene_params;
    params["size_x"] = c.size_x;
    const Scene scene = generate_scene(config.mapping.scene, params, config.seed);
    SensingConfig sensing = config.mapping.sensing;
    sensing.sample_budget = c.budget;
    sensing.seed = derive_seed(config.seed, 21);
    const SensedScene sensed = sense_scene(scene, sensing);
    const TrainResult trained = train_occupancy(sensed.occupancy, small);
    const std::size_t bytes = checkpoint_bytes(trained.field);
    const std::size_t voxels = voxel_grid_bytes(scene.bounds, 0.05);
    sizes.push_back(bytes);
    memory.add({c.name, num(scene.bounds.volume()), num(trained.train.count), num(bytes),
                num(voxels), num(static_cast<double>(voxels) / static_cast<double>(bytes))});
    if (std::string(c.name) != "samples_x10") {
      check(report, voxels >= 100 * bytes,
            std::string("voxel grid >= 100x checkpoint (") + c.name + ")");
    }
  }
  emit(report, memory, dir, "memory");
  check(report, sizes[0] == sizes[1] && sizes[0] == sizes[2],
        "checkpoint bytes constant in volume and sample count");
}

void frontend_suite(const BenchmarkConfig& config, const std::string& dir,
                    BenchmarkReport& report) {
  // Table I analogue: A* with and without refinement across pitches.
  {
    const Scene scene = generate_scene("box-grid", {}, config.seed);
    SensingConfig sensing = config.planning_sensing;
    sensing.seed = derive_seed(config.seed, 31);
    const SceneFields fields =
        train_scene_fields(scene, sensing, config.planning_occupancy, config.planning_esdf);
    CsvTable table({"scene", "seed", "pitch", "planner", "threads", "total_ms", "path_length",
                    "nodes_visited", "min_clearance", "success"});
    for (double pitch : config.frontend_pitches) {
      for (bool refine : {false, true}) {
        SearchConfig search = config.uav.search;
        search.pitch = pitch;
        search.bounds = inset(scene.bounds, config.uav.search_margin);
        const auto t0 = Clock::now();
        bool ok = true;
        SearchResult result;
        RefinementResult refined;
        try {
          result = search_with_fallback(fields.occupancy.field, *scene.start, *scene.goal, search,
                                        config.uav.fallback_tau);
          refined.path = result.path;
          if (refine) refined = refine_path(result.path, fields.occupancy.field, config.uav.refinement);
        } catch (const UnreachableError& e) {
          ok = false;
          result.nodes_visited = e.nodes_visited();
        }
        const double total = ms_since(t0);
        const double clearance = ok ? path_clearance(refined.path, scene) : 0.0;
        table.add({"box-grid", num(static_cast<std::size_t>(config.seed)), num(pitch),
                   refine ? "astar+refine" : "astar", threads(), num(total),
                   num(ok ? refined.path.length() : 0.0), num(result.nodes_visited),
                   num(clearance), yes(ok && clearance > 0.0)});
        check(report, ok, "A* reaches goal at pitch " + num(pitch));
      }
    }
    emit(report, table, dir, "frontend");
  }
  // Refinement on corridor scenes.
  CsvTable table({"scene", "seed", "waypoints", "threads", "refine_ms", "cost_init", "cost_final",
                  "clearance_init", "clearance_final", "endpoints_fixed", "monotone",
                  "accepted_steps"});
  int improved = 0, cost_ok = 0, fixed = 0;
  for (int s = 0; s < config.scenes; ++s) {
    const std::uint64_t seed = derive_seed(config.seed, 100 + static_cast<std::uint64_t>(s));
    const Scene scene = generate_scene("corner", {}, seed);
    SensingConfig sensing = config.planning_sensing;
    sensing.seed = derive_seed(seed, 32);
    const SensedScene sensed = sense_scene(scene, sensing);
    const TrainResult occ = train_occupancy(sensed.occupancy, config.planning_occupancy);
    SearchConfig search = config.uav.search;
    search.bounds = inset(scene.bounds, config.uav.search_margin);
    const SearchResult found = search_with_fallback(occ.field, *scene.start, *scene.goal, search,
                                                    config.uav.fallback_tau);
    const auto t0 = Clock::now();
    const RefinementResult refined = refine_path(found.path, occ.field, config.uav.refinement);
    const double refine_ms = ms_since(t0);
    const double j0 = refined.cost_trace.front();
    const double j1 = refinement_cost(refined.path, found.path, occ.field, refined.effective);
    const double c0 = path_clearance(found.path, scene);
    const double c1 = path_clearance(refined.path, scene);
    const bool ends = refined.path.points.front() == found.path.points.front() &&
                      refined.path.points.back() == found.path.points.back();
    improved += c1 >= c0 ? 1 : 0;
    cost_ok += j1 <= j0 ? 1 : 0;
    fixed += ends ? 1 : 0;
    table.add({"corner", std::to_string(seed), num(found.path.size()), threads(), num(refine_ms),
               num(j0), num(j1), num(c0), num(c1), yes(ends), yes(non_increasing(refined.cost_trace)),
               num(refined.accepted_steps)});
  }
  emit(report, table, dir, "refinement");
  check(report, cost_ok == config.scenes, "J(P*) <= J(P_init) in every scene");
  check(report, 10 * improved >= 9 * config.scenes, "clearance not reduced in >= 90% of scenes");
  check(report, fixed == config.scenes, "endpoints unchanged");
}

Scene uav_scene(int index, std::uint64_t seed) {
  if (index % 2 == 0) return generate_scene("box-grid", {{"rows", 1.0}, {"cols", 1.0}}, seed);
  return generate_scene("box-grid", {}, seed);
}

void uav_suite(const BenchmarkConfig& config, const std::string& dir, BenchmarkReport& report) {
  CsvTable table({"scene", "seed", "variant", "threads", "search_ms", "refine_ms", "optimize_ms",
                  "total_ms", "length", "min_clearance", "energy", "iterations", "monotone",
                  "success"});
  const double required = 0.9 * config.uav.cost.clearance;
  int safe = 0, monotone = 0;
  for (int s = 0; s < config.scenes; ++s) {
    const std::uint64_t seed = derive_seed(config.seed, 200 + static_cast<std::uint64_t>(s));
    const Scene scene = uav_scene(s, seed);
    SensingConfig sensing = config.planning_sensing;
    sensing.seed = derive_seed(seed, 33);
    const SceneFields fields =
        train_scene_fields(scene, sensing, config.planning_occupancy, config.planning_esdf);
    const UavPlan plan = plan_uav(scene, fields.occupancy.field, fields.esdf.field, config.uav);
    const std::string name = s % 2 == 0 ? "single-box" : "box-grid";
    // Baseline: the seeded spline straight from the front end.
    const auto seeded = sample_trajectory(plan.initial, config.uav.samples);
    const double base_clear = min_clearance(seeded, scene);
    table.add({name, std::to_string(seed), "seeded", threads(), num(plan.search_ms),
               num(plan.refine_ms), "0", num(plan.search_ms + plan.refine_ms),
               num(sampled_length(seeded)), num(base_clear), num(energy_proxy(seeded)), "0", "1",
               yes(base_clear >= required)});
    const double clear = min_clearance(plan.samples, scene);
    const bool mono = non_increasing(plan.optimized.cost_trace);
    safe += clear >= required ? 1 : 0;
    monotone += mono ? 1 : 0;
    table.add({name, std::to_string(seed), "optimized", threads(), num(plan.search_ms),
               num(plan.refine_ms), num(plan.optimize_ms),
               num(plan.search_ms + plan.refine_ms + plan.optimize_ms),
               num(sampled_length(plan.samples)), num(clear), num(energy_proxy(plan.samples)),
               num(plan.optimized.iterations), yes(mono), yes(clear >= required)});
  }
  emit(report, table, dir, "backend_uav");
  check(report, 10 * safe >= 9 * config.scenes, "clearance >= 0.9 S_f in >= 90% of scenes");
  check(report, monotone == config.scenes, "cost traces non-increasing");
}

void ugv_suite(const BenchmarkConfig& config, const std::string& dir, BenchmarkReport& report) {
  CsvTable table({"scene", "seed", "variant", "threads", "t_tot_ms", "n_pit", "l_tot", "E_eng",
                  "iterations", "f_terrain", "monotone"});
  for (const char* name : {"pits-flat", "pits-slope"}) {
    int clean = 0, ablation_hits = 0;
    for (int s = 0; s < config.scenes; ++s) {
      const std::uint64_t seed = derive_seed(config.seed, 300 + static_cast<std::uint64_t>(s));
      const Scene scene = generate_scene(name, {}, seed);
      const TrainResult terrain =
          train_scene_terrain(scene, config.terrain, config.terrain_samples, derive_seed(seed, 34));
      for (bool with_terrain : {true, false}) {
        UgvPlanConfig cfg = config.ugv;
        if (!with_terrain) cfg.cost.terrain_weight = 0.0;
        const UgvPlan plan = plan_ugv(scene, terrain.field, cfg);
        const int pits = count_pit_samples(plan.samples, *scene.terrain);
        if (with_terrain) clean += pits == 0 ? 1 : 0;
        if (!with_terrain) ablation_hits += pits >= 1 ? 1 : 0;
        table.add({name, std::to_string(seed), with_terrain ? "terrain" : "no-terrain", threads(),
                   num(plan.optimize_ms), num(pits), num(sampled_length(plan.samples)),
                   num(energy_proxy(plan.samples)), num(plan.optimized.iterations),
                   num(plan.optimized.terms.terrain),
                   yes(non_increasing(plan.optimized.cost_trace))});
      }
    }
    check(report, clean == config.scenes, std::string(name) + ": n_pit = 0 with terrain term");
    check(report, 10 * ablation_hits >= 8 * config.scenes,
          std::string(name) + ": ablation enters a pit in >= 80% of seeds");
  }
  emit(report, table, dir, "backend_ugv");
}

void theorem_suite(const BenchmarkConfig& config, const std::string& dir,
                   BenchmarkReport& report) {
  const auto t0 = Clock::now();
  const DimensionSweep sweep =
      sweep_dimension(config.theorem, config.theorem_feature_dim, config.theorem_density,
                      config.theorem_trials, config.seed);
  const double total = ms_since(t0);
  CsvTable table({"k", "trials", "rate_len", "rate_ang", "rate_hw", "rate_residual",
                  "worst_ratio", "max_identity_error", "rank_deficient", "passed"});
  for (const auto& step : sweep.steps) {
    const auto& r = step.report;
    table.add({num(step.k), num(r.trials), num(r.rate_len()), num(r.rate_ang()), num(r.rate_hw()),
               num(r.rate_residual()), num(r.worst_ratio), num(r.max_identity_error),
               num(r.rank_deficient), yes(step.passed)});
  }
  emit(report, table, dir, "theorem_sweep");
  CsvTable summary({"formula_k", "smallest_passing_k", "effective_constant", "threads",
                    "sweep_ms"});
  summary.add({num(sweep.formula_k), num(sweep.smallest_passing_k),
               num(sweep.effective_constant), threads(), num(total)});
  emit(report, summary, dir, "theorem_summary");

  if (sweep.smallest_passing_k > 0) {
    const ResidualCheckReport detail = verify_residual_energy(
        ProjectionParams{sweep.smallest_passing_k, config.theorem_feature_dim,
                         config.theorem_density, derive_seed(config.seed, 77)},
        config.theorem, config.theorem_trials, config.seed);
    CsvTable trials({"trial", "len_subspace", "len_orthogonal", "angle", "hw", "residual",
                     "residual_norm", "identity_error", "rank_deficient"});
    for (std::size_t i = 0; i < detail.per_trial.size(); ++i) {
      const auto& t = detail.per_trial[i];
      trials.add({num(i), num(t.length_ratio_subspace), num(t.length_ratio_orthogonal),
                  num(t.angle_ratio), num(t.hw_ratio), num(t.residual_ratio),
                  num(t.residual_norm_ratio), num(t.identity_error), yes(t.rank_deficient)});
    }
    emit(report, trials, dir, "theorem_trials");
  }
  check(report, sweep.smallest_passing_k > 0, "a passing k exists at or below the formula k");
}

}  // namespace

BenchmarkReport run_benchmark(const std::string& suite, const BenchmarkConfig& config,
                              const std::string& out_dir) {
  const auto names = suite_names();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    throw std::invalid_argument("unknown benchmark suite '" + suite + "'");
  }
  std::filesystem::create_directories(out_dir);
  BenchmarkReport report;
  report.suite = suite;
  if (suite == "mapping") mapping_suite(config, out_dir, report);
  if (suite == "frontend") frontend_suite(config, out_dir, report);
  if (suite == "backend-uav") uav_suite(config, out_dir, report);
  if (suite == "backend-ugv") ugv_suite(config, out_dir, report);
  if (suite == "theorem") theorem_suite(config, out_dir, report);
  return report;
}

}  // namespace rmrp
