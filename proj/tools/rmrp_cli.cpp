// Command line front end: training, queries, planning, completion, the
// embedding verifier and the benchmark suites.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "rmrp/checkpoint.hpp"
#include "rmrp/harness.hpp"
#include "rmrp/rng.hpp"

using namespace rmrp;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// ---------------------------------------------------------------- config

void read_field(const json& j, FieldConfig& f) {
  f.feature_dim = j.value("M", f.feature_dim);
  f.projected_dim = j.value("k", f.projected_dim);
  f.scale = j.value("scale", f.scale);
  f.density = j.value("density", f.density);
  f.ridge.alpha = j.value("alpha", f.ridge.alpha);
  f.feature_seed = j.value("feature_seed", f.feature_seed);
  f.projection_seed = j.value("projection_seed", f.projection_seed);
}

void read_cost(const json& j, TrajectoryCostConfig& c) {
  c.smooth_weight = j.value("smooth_weight", c.smooth_weight);
  c.collision_weight = j.value("collision_weight", c.collision_weight);
  c.dynamic_weight = j.value("dynamic_weight", c.dynamic_weight);
  c.terrain_weight = j.value("terrain_weight", c.terrain_weight);
  c.clearance = j.value("clearance", c.clearance);
  c.v_max = j.value("v_max", c.v_max);
  c.a_max = j.value("a_max", c.a_max);
}

struct Settings {
  BenchmarkConfig bench;
  CompletionExperimentConfig completion;
};

Settings load_settings(const std::string& path) {
  Settings s;
  if (path.empty()) return s;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  const json j = json::parse(in, nullptr, true, true);
  BenchmarkConfig& b = s.bench;
  b.seed = j.value("seed", b.seed);
  b.scenes = j.value("scenes", b.scenes);
  if (j.contains("fields")) {
    const json& f = j["fields"];
    if (f.contains("occupancy")) {
      read_field(f["occupancy"], b.mapping.occupancy);
      read_field(f["occupancy"], b.planning_occupancy);
    }
    if (f.contains("esdf")) {
      read_field(f["esdf"], b.mapping.esdf);
      read_field(f["esdf"], b.planning_esdf);
    }
    if (f.contains("terrain")) read_field(f["terrain"], b.terrain);
    if (f.contains("completion")) read_field(f["completion"], s.completion.field);
  }
  if (j.contains("mapping")) {
    const json& m = j["mapping"];
    b.mapping.sensing.sample_budget = m.value("sample_budget", b.mapping.sensing.sample_budget);
    b.mapping.sensing.scan.ray_count = m.value("rays", b.mapping.sensing.scan.ray_count);
    b.mapping.tau = m.value("tau", b.mapping.tau);
  }
  if (j.contains("planning")) {
    const json& p = j["planning"];
    b.uav.search.pitch = p.value("pitch", b.uav.search.pitch);
    b.uav.search.tau = p.value("tau", b.uav.search.tau);
    b.uav.model_margin = p.value("model_margin", b.uav.model_margin);
    b.uav.optimizer.max_iterations = p.value("iterations", b.uav.optimizer.max_iterations);
    b.ugv.optimizer.max_iterations = p.value("iterations", b.ugv.optimizer.max_iterations);
    b.uav.refinement.iterations = p.value("refine_iterations", b.uav.refinement.iterations);
    read_cost(p, b.uav.cost);
    read_cost(p, b.ugv.cost);
    b.terrain_samples = p.value("terrain_samples", b.terrain_samples);
    b.planning_sensing.sample_budget =
        p.value("sample_budget", b.planning_sensing.sample_budget);
  }
  if (j.contains("theorem")) {
    const json& t = j["theorem"];
    b.theorem.subspace_dim = t.value("p", b.theorem.subspace_dim);
    b.theorem.epsilon = t.value("epsilon", b.theorem.epsilon);
    b.theorem.delta = t.value("delta", b.theorem.delta);
    b.theorem.constant = t.value("constant", b.theorem.constant);
    b.theorem_feature_dim = t.value("M", b.theorem_feature_dim);
    b.theorem_density = t.value("s", b.theorem_density);
    b.theorem_trials = t.value("trials", b.theorem_trials);
  }
  if (j.contains("completion")) {
    const json& c = j["completion"];
    s.completion.train_scenes = c.value("train_scenes", s.completion.train_scenes);
    s.completion.samples_per_scene = c.value("samples_per_scene", s.completion.samples_per_scene);
    s.completion.tau = c.value("tau", s.completion.tau);
    s.completion.pitch = c.value("pitch", s.completion.pitch);
  }
  return s;
}

// ---------------------------------------------------------------- helpers

std::string out_path(const std::string& dir, const std::string& name) {
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

Scene scene_from(const std::string& file, const std::string& spec, std::uint64_t seed,
                 const std::string& out_dir) {
  if (!file.empty()) return load_scene(file);
  if (spec.empty()) throw std::invalid_argument("need --scene <file> or --scene-spec <name>");
  Scene scene = generate_scene(spec, {}, seed);
  save_scene(out_path(out_dir, "scene.txt"), scene);
  return scene;
}

std::vector<Eigen::VectorXd> read_points_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<Eigen::VectorXd> points;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (points.empty()) continue;  // header
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": not a number");
    }
    points.push_back(Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size())));
  }
  return points;
}

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

void write_trajectory(const std::string& dir, const OptimizationResult& result,
                      const std::vector<TrajectorySample>& samples, const ParametricField* terrain) {
  const auto& control = result.trajectory.control;
  std::vector<std::string> header = {"x", "y"};
  if (control.rows() == 3) header.push_back("z");
  CsvTable cp(header);
  for (Eigen::Index c = 0; c < control.cols(); ++c) {
    std::vector<std::string> row;
    for (Eigen::Index r = 0; r < control.rows(); ++r) row.push_back(format_number(control(r, c)));
    cp.add(row);
  }
  cp.write(out_path(dir, "control_points.csv"));

  CsvTable traj({"t", "x", "y", "z", "v", "a"});
  for (const auto& s : samples) {
    const double z = s.position.size() == 3 ? s.position(2) : terrain->value(s.position);
    traj.add({format_number(s.t), format_number(s.position(0)), format_number(s.position(1)),
              format_number(z), format_number(s.velocity.norm()),
              format_number(s.acceleration.norm())});
  }
  traj.write(out_path(dir, "trajectory.csv"));

  CsvTable trace({"iteration", "cost"});
  for (std::size_t i = 0; i < result.cost_trace.size(); ++i) {
    trace.add({std::to_string(i), format_number(result.cost_trace[i])});
  }
  trace.write(out_path(dir, "cost_trace.csv"));
}

// ---------------------------------------------------------------- commands

int cmd_train(const Settings& s, std::uint64_t seed, const std::string& out, const std::string& task,
              const std::string& scene_file, const std::string& scene_spec, long samples,
              const std::string& name) {
  const BenchmarkConfig& b = s.bench;
  const Scene scene = scene_from(scene_file, scene_spec, seed, out);
  const FieldKind kind = field_kind_from_string(task);
  TrainResult trained = [&] {
    if (kind == FieldKind::kTerrain) {
      return train_scene_terrain(scene, b.terrain, samples > 0 ? static_cast<int>(samples)
                                                               : b.terrain_samples,
                                 derive_seed(seed, 34));
    }
    SensingConfig sensing = b.planning_sensing;
    sensing.seed = derive_seed(seed, 33);
    if (samples > 0) sensing.sample_budget = static_cast<std::size_t>(samples);
    const SensedScene sensed = sense_scene(scene, sensing);
    if (kind == FieldKind::kOccupancy) return train_occupancy(sensed.occupancy, b.planning_occupancy);
    return train_esdf(sensed.esdf, b.planning_esdf);
  }();
  const std::string ckpt = out_path(out, name.empty() ? task + ".rmrp" : name);
  save_checkpoint(ckpt, trained.field);
  CsvTable table({"task", "M", "k", "samples", "train_ms", "checkpoint_bytes", "accuracy",
                  "balanced_accuracy", "r2", "mse"});
  const auto& m = trained.train;
  table.add({task, std::to_string(trained.field.feature_map().feature_dim()),
             std::to_string(trained.field.projection().rows()), std::to_string(m.count),
             format_number(trained.seconds * 1000.0),
             std::to_string(checkpoint_bytes(trained.field)), format_number(m.accuracy),
             format_number(m.balanced_accuracy), format_number(m.r2), format_number(m.mse)});
  table.write(out_path(out, "train_" + task + ".csv"));
  std::printf("trained %s field: %zu samples, checkpoint %s (%zu bytes)\n", task.c_str(), m.count,
              ckpt.c_str(), checkpoint_bytes(trained.field));
  return 0;
}

int cmd_query(const std::string& out, const std::string& ckpt, const std::string& points_file,
              const std::vector<double>& at) {
  const Checkpoint loaded = load_checkpoint(ckpt);
  const ParametricField& field = loaded.field;
  std::vector<Eigen::VectorXd> points;
  if (!points_file.empty()) points = read_points_csv(points_file);
  if (!at.empty()) {
    points.push_back(Eigen::Map<const Eigen::VectorXd>(at.data(), static_cast<Eigen::Index>(at.size())));
  }
  if (points.empty()) throw std::invalid_argument("nothing to query: give --points or --at");
  const int d = field.input_dim();
  std::vector<std::string> header = {"x", "y"};
  if (d == 3) header.push_back("z");
  header.push_back("value");
  header.insert(header.end(), {"dx", "dy"});
  if (d == 3) header.push_back("dz");
  CsvTable table(header);
  for (const auto& p : points) {
    if (p.size() != d) {
      throw std::invalid_argument("query point has " + std::to_string(p.size()) +
                                  " coordinates, field expects " + std::to_string(d));
    }
    const double v = field.value(p);
    const Eigen::VectorXd g = field.gradient(p);
    std::vector<std::string> row;
    for (int i = 0; i < d; ++i) row.push_back(format_number(p(i)));
    row.push_back(format_number(v));
    for (int i = 0; i < d; ++i) row.push_back(format_number(g(i)));
    table.add(row);
    if (points.size() == 1) std::printf("value %s\n", format_number(v).c_str());
  }
  table.write(out_path(out, "query.csv"));
  return 0;
}

ParametricField field_or_train(const std::string& ckpt, FieldKind kind, const Scene& scene,
                               const Settings& s, std::uint64_t seed) {
  if (!ckpt.empty()) {
    Checkpoint c = load_checkpoint(ckpt);
    if (c.field.kind() != kind) {
      throw std::invalid_argument(ckpt + " holds a " + to_string(c.field.kind()) +
                                  " field, expected " + to_string(kind));
    }
    return std::move(c.field);
  }
  if (kind == FieldKind::kTerrain) {
    return train_scene_terrain(scene, s.bench.terrain, s.bench.terrain_samples,
                               derive_seed(seed, 34))
        .field;
  }
  SensingConfig sensing = s.bench.planning_sensing;
  sensing.seed = derive_seed(seed, 33);
  const SensedScene sensed = sense_scene(scene, sensing);
  if (kind == FieldKind::kOccupancy) return train_occupancy(sensed.occupancy, s.bench.planning_occupancy).field;
  return train_esdf(sensed.esdf, s.bench.planning_esdf).field;
}

int cmd_plan_uav(const Settings& s, std::uint64_t seed, const std::string& out,
                 const std::string& scene_file, const std::string& scene_spec,
                 const std::string& occ_ckpt, const std::string& esdf_ckpt,
                 const std::string& stage) {
  const Scene scene = scene_from(scene_file, scene_spec, seed, out);
  if (!scene.start || !scene.goal) throw std::invalid_argument("scene has no start/goal");
  const ParametricField occ = field_or_train(occ_ckpt, FieldKind::kOccupancy, scene, s, seed);
  const UavPlanConfig& cfg = s.bench.uav;
  const auto t0 = std::chrono::steady_clock::now();
  if (stage == "frontend") {
    SearchConfig search = cfg.search;
    search.bounds = inset(scene.bounds, cfg.search_margin);
    const SearchResult found =
        search_with_fallback(occ, *scene.start, *scene.goal, search, cfg.fallback_tau);
    const RefinementResult refined = refine_path(found.path, occ, cfg.refinement);
    const double wall = ms_since(t0);
    CsvTable wp({"x", "y", "z"});
    for (const auto& p : refined.path.points) {
      wp.add({format_number(p.x()), format_number(p.y()), format_number(p.z())});
    }
    wp.write(out_path(out, "waypoints.csv"));
    CsvTable trace({"iteration", "J"});
    for (std::size_t i = 0; i < refined.cost_trace.size(); ++i) {
      trace.add({std::to_string(i), format_number(refined.cost_trace[i])});
    }
    trace.write(out_path(out, "refinement_trace.csv"));
    double clear = std::numeric_limits<double>::infinity();
    for (const auto& p : refined.path.points) clear = std::min(clear, brute_force_esdf(scene, p));
    std::printf("length %s min_clearance %s nodes %zu iterations %d wall_ms %s\n",
                format_number(refined.path.length()).c_str(), format_number(clear).c_str(),
                found.nodes_visited, refined.accepted_steps, format_number(wall).c_str());
    return 0;
  }
  if (stage != "full") throw std::invalid_argument("--stage must be frontend or full");
  const ParametricField esdf = field_or_train(esdf_ckpt, FieldKind::kEsdf, scene, s, seed);
  const UavPlan plan = plan_uav(scene, occ, esdf, cfg);
  const double wall = ms_since(t0);
  write_trajectory(out, plan.optimized, plan.samples, nullptr);
  const double clear = min_clearance(plan.samples, scene);
  std::printf("length %s min_clearance %s n_pit 0 iterations %d wall_ms %s\n",
              format_number(sampled_length(plan.samples)).c_str(), format_number(clear).c_str(),
              plan.optimized.iterations, format_number(wall).c_str());
  return 0;
}

int cmd_plan_ugv(const Settings& s, std::uint64_t seed, const std::string& out,
                 const std::string& scene_file, const std::string& scene_spec,
                 const std::string& terrain_ckpt, double terrain_weight) {
  const Scene scene = scene_from(scene_file, scene_spec, seed, out);
  if (!scene.terrain) throw std::invalid_argument("scene has no terrain");
  const ParametricField terrain = field_or_train(terrain_ckpt, FieldKind::kTerrain, scene, s, seed);
  UgvPlanConfig cfg = s.bench.ugv;
  if (terrain_weight >= 0.0) cfg.cost.terrain_weight = terrain_weight;
  const auto t0 = std::chrono::steady_clock::now();
  const UgvPlan plan = plan_ugv(scene, terrain, cfg);
  const double wall = ms_since(t0);
  write_trajectory(out, plan.optimized, plan.samples, &terrain);
  std::printf("length %s min_clearance nan n_pit %d iterations %d wall_ms %s\n",
              format_number(sampled_length(plan.samples)).c_str(),
              count_pit_samples(plan.samples, *scene.terrain), plan.optimized.iterations,
              format_number(wall).c_str());
  return 0;
}

int cmd_complete(const Settings& s, std::uint64_t seed, const std::string& out,
                 const std::string& ckpt, const std::string& scene_file,
                 const std::string& scene_spec, const std::vector<double>& region_vals) {
  CompletionOutcome outcome;
  Box3 region;
  if (ckpt.empty()) {
    outcome = run_completion_experiment(s.completion, seed);
    const Scene held = generate_scene(s.completion.scene, s.completion.scene_params,
                                      derive_seed(seed, 900));
    save_scene(out_path(out, "scene.txt"), held);
    region = *held.occluded;
  } else {
    const Scene scene = scene_from(scene_file, scene_spec, seed, out);
    if (region_vals.size() == 6) {
      region = Box3{Eigen::Vector3d(region_vals[0], region_vals[1], region_vals[2]),
                    Eigen::Vector3d(region_vals[3], region_vals[4], region_vals[5])};
    } else if (scene.occluded) {
      region = *scene.occluded;
    } else {
      throw std::invalid_argument("no --region given and the scene has no occluded region");
    }
    const Checkpoint c = load_checkpoint(ckpt);
    if (c.field.kind() != FieldKind::kOccupancy) {
      throw std::invalid_argument("completion needs an occupancy checkpoint");
    }
    outcome = complete_scene(c.field, scene, region, s.completion, derive_seed(seed, 901));
  }
  const double pitch = s.completion.pitch;
  CsvTable cells({"i", "j", "k", "x", "y", "z"});
  for (const auto& c : outcome.marked) {
    const Eigen::Vector3d p = region.min + pitch * (Eigen::Vector3d(c[0], c[1], c[2]).array() + 0.5).matrix();
    cells.add({std::to_string(c[0]), std::to_string(c[1]), std::to_string(c[2]),
               format_number(p.x()), format_number(p.y()), format_number(p.z())});
  }
  cells.write(out_path(out, "completed_cells.csv"));
  CsvTable summary({"known_cells", "newly_marked", "occupied_cells", "free_cells", "recall",
                    "false_positive_rate", "idempotent", "train_ms", "complete_ms"});
  summary.add({std::to_string(outcome.known_cells), std::to_string(outcome.marked.size()),
               std::to_string(outcome.occupied_cells), std::to_string(outcome.free_cells),
               format_number(outcome.recall), format_number(outcome.false_positive_rate),
               outcome.idempotent ? "1" : "0", format_number(outcome.train_ms),
               format_number(outcome.complete_ms)});
  summary.write(out_path(out, "completion.csv"));
  std::printf("marked %zu cells, recall %s, false positive rate %s, idempotent %s\n",
              outcome.marked.size(), format_number(outcome.recall).c_str(),
              format_number(outcome.false_positive_rate).c_str(), outcome.idempotent ? "yes" : "no");
  return 0;
}

int cmd_verify(const Settings& s, std::uint64_t seed, const std::string& out, int k, bool sweep) {
  const BenchmarkConfig& b = s.bench;
  b.theorem.validate();
  std::ostringstream report;
  bool ok = true;
  if (sweep) {
    const DimensionSweep result =
        sweep_dimension(b.theorem, b.theorem_feature_dim, b.theorem_density, b.theorem_trials, seed);
    report << "formula k " << result.formula_k << "\n";
    for (const auto& step : result.steps) {
      report << "k " << step.k << (step.passed ? " pass" : " fail") << "\n";
    }
    report << "smallest passing k " << result.smallest_passing_k << "\n"
           << "effective constant " << format_number(result.effective_constant) << "\n";
    ok = result.smallest_passing_k > 0;
    k = result.smallest_passing_k > 0 ? result.smallest_passing_k : result.formula_k;
  }
  if (k <= 0) k = choose_dimension(b.theorem);
  const ResidualCheckReport r = verify_residual_energy(
      ProjectionParams{k, b.theorem_feature_dim, b.theorem_density, derive_seed(seed, 77)},
      b.theorem, b.theorem_trials, seed);
  const bool passed = r.all_rates_within(b.theorem.delta) && r.max_identity_error <= 1e-10;
  ok = ok && passed;
  report << "p " << b.theorem.subspace_dim << " epsilon " << format_number(b.theorem.epsilon)
         << " delta " << format_number(b.theorem.delta) << " C "
         << format_number(b.theorem.constant) << " M " << b.theorem_feature_dim << " s "
         << format_number(b.theorem_density) << " k " << k << " trials " << r.trials << "\n"
         << "violation rate length " << format_number(r.rate_len()) << "\n"
         << "violation rate angle " << format_number(r.rate_ang()) << "\n"
         << "violation rate hanson-wright " << format_number(r.rate_hw()) << "\n"
         << "violation rate residual " << format_number(r.rate_residual()) << "\n"
         << "worst ratio " << format_number(r.worst_ratio) << "\n"
         << "max identity error " << format_number(r.max_identity_error) << "\n"
         << "rank deficient trials " << r.rank_deficient << "\n"
         << (passed ? "PASS" : "FAIL") << "\n";
  std::cout << report.str();
  std::ofstream(out_path(out, "theorem_report.txt")) << report.str();
  CsvTable trials({"trial", "len_subspace", "len_orthogonal", "angle", "hw", "residual",
                   "residual_norm", "identity_error", "rank_deficient"});
  for (std::size_t i = 0; i < r.per_trial.size(); ++i) {
    const auto& t = r.per_trial[i];
    trials.add({std::to_string(i), format_number(t.length_ratio_subspace),
                format_number(t.length_ratio_orthogonal), format_number(t.angle_ratio),
                format_number(t.hw_ratio), format_number(t.residual_ratio),
                format_number(t.residual_norm_ratio), format_number(t.identity_error),
                t.rank_deficient ? "1" : "0"});
  }
  trials.write(out_path(out, "theorem_trials.csv"));
  return ok ? 0 : 1;
}

int cmd_benchmark(const Settings& s, const std::string& out, const std::string& suite) {
  std::vector<std::string> suites;
  if (suite == "all") {
    suites = suite_names();
  } else {
    suites.push_back(suite);
  }
  bool ok = true;
  for (const auto& name : suites) {
    const auto t0 = std::chrono::steady_clock::now();
    const BenchmarkReport report = run_benchmark(name, s.bench, (fs::path(out) / name).string());
    for (const auto& c : report.checks) std::printf("[%s] %s\n", name.c_str(), c.c_str());
    std::printf("[%s] %s in %.1f s\n", name.c_str(), report.passed ? "passed" : "FAILED",
                ms_since(t0) / 1000.0);
    ok = ok && report.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random-mapping parametric fields for mapping and motion planning"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  bool seed_given = false;
  std::string config_file, out = "out";
  app.add_option("--seed", seed, "master seed")->each([&](const std::string&) { seed_given = true; });
  app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--out", out, "output directory");

  std::string task = "occupancy", scene_file, scene_spec, ckpt_name;
  long samples = 0;
  auto* train = app.add_subcommand("train", "fit a field on a scene and write a checkpoint");
  train->add_option("--task", task, "occupancy | esdf | terrain")
      ->check(CLI::IsMember({"occupancy", "esdf", "terrain"}));
  train->add_option("--scene", scene_file, "scene file")->check(CLI::ExistingFile);
  train->add_option("--scene-spec", scene_spec, "generate a scene: " + [] {
    std::string names;
    for (const auto& n : scene_names()) names += (names.empty() ? "" : ", ") + n;
    return names;
  }());
  train->add_option("--samples", samples, "sample budget (0 = config default)");
  train->add_option("--checkpoint", ckpt_name, "checkpoint file name inside --out");

  std::string ckpt, points_file;
  std::vector<double> at;
  auto* query = app.add_subcommand("query", "evaluate a checkpoint at points");
  query->add_option("--checkpoint", ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  query->add_option("--points", points_file, "CSV of points, one per row")->check(CLI::ExistingFile);
  query->add_option("--at", at, "single point")->expected(2, 3);

  std::string occ_ckpt, esdf_ckpt, terrain_ckpt, stage = "full";
  auto* uav = app.add_subcommand("plan-uav", "front end + B-spline optimization on a 3D scene");
  uav->add_option("--scene", scene_file, "scene file")->check(CLI::ExistingFile);
  uav->add_option("--scene-spec", scene_spec, "generate a scene instead");
  uav->add_option("--occupancy", occ_ckpt, "occupancy checkpoint (trained if absent)");
  uav->add_option("--esdf", esdf_ckpt, "ESDF checkpoint (trained if absent)");
  uav->add_option("--stage", stage, "frontend | full")->check(CLI::IsMember({"frontend", "full"}));

  double terrain_weight = -1.0;
  auto* ugv = app.add_subcommand("plan-ugv", "terrain-aware planar trajectory");
  ugv->add_option("--scene", scene_file, "scene file")->check(CLI::ExistingFile);
  ugv->add_option("--scene-spec", scene_spec, "generate a scene instead");
  ugv->add_option("--terrain", terrain_ckpt, "terrain checkpoint (trained if absent)");
  ugv->add_option("--terrain-weight", terrain_weight, "override lambda_t (0 = ablation)");

  std::vector<double> region;
  auto* complete = app.add_subcommand(
      "complete", "fill an occluded region from a learned prior (trains one if no checkpoint)");
  complete->add_option("--checkpoint", ckpt, "occupancy checkpoint")->check(CLI::ExistingFile);
  complete->add_option("--scene", scene_file, "scene file")->check(CLI::ExistingFile);
  complete->add_option("--scene-spec", scene_spec, "generate a scene instead");
  complete->add_option("--region", region, "x0 y0 z0 x1 y1 z1")->expected(6);

  int p = -1, M = -1, trials = -1, k = 0;
  double eps = -1, delta = -1, constant = -1, density = -1;
  bool sweep = false;
  auto* verify = app.add_subcommand("verify-theorem", "Monte-Carlo residual energy check");
  verify->add_option("--p", p, "subspace dimension");
  verify->add_option("--epsilon", eps, "distortion");
  verify->add_option("--delta", delta, "failure probability");
  verify->add_option("--C", constant, "dimension rule constant");
  verify->add_option("--M", M, "ambient (feature) dimension");
  verify->add_option("--s", density, "sparsity parameter");
  verify->add_option("--trials", trials, "Monte-Carlo trials");
  verify->add_option("--k", k, "projected dimension (default: dimension rule)");
  verify->add_flag("--sweep", sweep, "sweep k downward and report the smallest passing k");

  std::string suite = "all";
  auto* bench = app.add_subcommand("benchmark", "run benchmark suites, write CSV + .dat tables");
  bench->add_option("--suite", suite, "all | mapping | frontend | backend-uav | backend-ugv | theorem");

  CLI11_PARSE(app, argc, argv);

  try {
    Settings settings = load_settings(config_file);
    if (seed_given) {
      settings.bench.seed = seed;
    } else {
      seed = settings.bench.seed;
    }
    auto& th = settings.bench;
    if (p > 0) th.theorem.subspace_dim = p;
    if (eps > 0) th.theorem.epsilon = eps;
    if (delta > 0) th.theorem.delta = delta;
    if (constant > 0) th.theorem.constant = constant;
    if (M > 0) th.theorem_feature_dim = M;
    if (density > 0) th.theorem_density = density;
    if (trials > 0) th.theorem_trials = trials;

    if (*train) return cmd_train(settings, seed, out, task, scene_file, scene_spec, samples, ckpt_name);
    if (*query) return cmd_query(out, ckpt, points_file, at);
    if (*uav) return cmd_plan_uav(settings, seed, out, scene_file, scene_spec, occ_ckpt, esdf_ckpt, stage);
    if (*ugv) return cmd_plan_ugv(settings, seed, out, scene_file, scene_spec, terrain_ckpt, terrain_weight);
    if (*complete) return cmd_complete(settings, seed, out, ckpt, scene_file, scene_spec, region);
    if (*verify) return cmd_verify(settings, seed, out, k, sweep);
    if (*bench) return cmd_benchmark(settings, out, suite);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
