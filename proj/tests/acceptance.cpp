// Acceptance run: one PASS/FAIL line per criterion. Suite-level criteria
// are judged from the CSV tables the suites write, not from their own
// check strings.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "rmrp/backend.hpp"
#include "rmrp/embedding_check.hpp"
#include "rmrp/frontend.hpp"
#include "rmrp/harness.hpp"
#include "rmrp/rng.hpp"

using namespace rmrp;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool passed = false;
  std::string detail;
};

int failures = 0;
std::vector<int> selected;  // empty: all criteria

void report(int id, const std::string& title, const Outcome& o, double secs) {
  std::printf("criterion %2d %s  %s: %s [%.1f s]\n", id, o.passed ? "PASS" : "FAIL", title.c_str(),
              o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.passed) ++failures;
}

void run_criterion(int id, const std::string& title, const std::function<Outcome()>& body) {
  if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) return;
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  report(id, title, o, seconds_since(t0));
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), f, v);
  return buf;
}

// ---------------------------------------------------------------- csv input

using Row = std::map<std::string, std::string>;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, sep)) out.push_back(cell);
  return out;
}

std::vector<Row> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("missing table " + path.string());
  std::string line;
  std::getline(in, line);
  const auto header = split(line, ',');
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    const auto cells = split(line, ',');
    Row r;
    for (std::size_t i = 0; i < header.size() && i < cells.size(); ++i) r[header[i]] = cells[i];
    rows.push_back(r);
  }
  return rows;
}

double d(const Row& r, const std::string& key) { return std::stod(r.at(key)); }

// ---------------------------------------------------------------- fields

ParametricField trained_box_field(FieldKind kind) {
  const Scene scene = generate_scene("box-grid", {{"size_x", 6}, {"size_y", 6}, {"rows", 2}, {"cols", 2}}, 5);
  FieldConfig c;
  c.feature_dim = 600;
  c.projected_dim = 300;
  c.scale = 2.0;
  if (kind == FieldKind::kOccupancy) {
    return train_occupancy(volumetric_occupancy_samples(scene, scene.bounds, 8000, 6), c).field;
  }
  Rng rng(7);
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> dist;
  while (pts.size() < 8000) {
    const Eigen::Vector3d p(rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 3));
    if (scene_occupied(scene, p)) continue;
    pts.push_back(p);
    dist.push_back(brute_force_esdf(scene, p));
  }
  return train_esdf(LabeledPoints::from_rows(pts, dist), c).field;
}

ParametricField trained_terrain() {
  const Scene scene = generate_scene("pits-slope", {}, 3);
  FieldConfig c;
  c.feature_dim = 400;
  c.projected_dim = 400;
  c.scale = 3.0;
  return train_scene_terrain(scene, c, 20000, 4).field;
}

Eigen::VectorXd central_difference(const std::function<double(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x, double h) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd a = x, b = x;
    a(i) += h;
    b(i) -= h;
    g(i) = (f(a) - f(b)) / (2 * h);
  }
  return g;
}

double rel(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-3);
}

// ---------------------------------------------------------------- criteria

Outcome criterion_theorem() {
  const EmbeddingSpec spec{5, 0.3, 0.1, 1.0};
  const auto t0 = Clock::now();
  const DimensionSweep sweep = sweep_dimension(spec, 400, 3.0, 2000, 1, Execution::kSerial);
  const double secs = seconds_since(t0);
  double identity = 0.0;
  const DimensionSweepStep* best = nullptr;
  for (const auto& s : sweep.steps) {
    identity = std::max(identity, s.report.max_identity_error);
    if (s.k == sweep.smallest_passing_k) best = &s;
  }
  bool ok = best && best->report.trials == 2000 && best->report.all_rates_within(spec.delta) &&
            identity <= 1e-10 && secs <= 120.0;
  std::string detail = "formula k " + std::to_string(sweep.formula_k) + ", smallest passing k " +
                       std::to_string(sweep.smallest_passing_k);
  if (best) {
    detail += fmt(", rates len %.4f", best->report.rate_len()) + fmt(" ang %.4f", best->report.rate_ang()) +
              fmt(" hw %.4f", best->report.rate_hw()) + fmt(" residual %.4f", best->report.rate_residual());
  }
  detail += fmt(", max identity error %.2e", identity) + fmt(", serial sweep %.1f s", secs);
  return {ok, detail};
}

Outcome criterion_gradients() {
  const auto t0 = Clock::now();
  const ParametricField occ = trained_box_field(FieldKind::kOccupancy);
  const ParametricField esdf = trained_box_field(FieldKind::kEsdf);
  const ParametricField terrain = trained_terrain();
  Rng rng(11);
  auto point3 = [&] { return Eigen::Vector3d(rng.uniform(0, 6), rng.uniform(0, 6), rng.uniform(0, 3)); };
  auto point2 = [&] { return Eigen::Vector2d(rng.uniform(0, 20), rng.uniform(0, 10)); };

  double field_worst = 0.0, composite_worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    for (const ParametricField* f : {&occ, &esdf}) {
      const Eigen::VectorXd x = point3();
      field_worst = std::max(field_worst, rel(f->gradient(x),
                                              central_difference([&](const Eigen::VectorXd& y) { return f->value(y); }, x, 1e-5)));
    }
    const Eigen::VectorXd q = point2();
    field_worst = std::max(field_worst, rel(terrain.gradient(q),
                                            central_difference([&](const Eigen::VectorXd& y) { return terrain.value(y); }, q, 1e-5)));
    composite_worst = std::max(
        composite_worst,
        rel(terrain_penalty_gradient(terrain, q),
            central_difference([&](const Eigen::VectorXd& y) { return terrain_penalty(terrain, Eigen::Vector2d(y)); }, q, 1e-5)));
  }

  // Refinement cost over 100 random interior waypoints.
  WaypointPath init;
  for (int i = 0; i <= 101; ++i) init.points.push_back(point3());
  WaypointPath moved = init;
  for (std::size_t i = 1; i + 1 < moved.size(); ++i) moved.points[i] += Eigen::Vector3d::Constant(0.05 * rng.uniform(-1, 1));
  const RefinementConfig rc = normalized_refinement_config(init, occ, RefinementConfig{});
  const auto rg = refinement_gradient(moved, init, occ, rc);
  for (std::size_t i = 1; i + 1 < moved.size(); ++i) {
    auto f = [&](const Eigen::VectorXd& x) {
      WaypointPath p = moved;
      p.points[i] = x;
      return refinement_cost(p, init, occ, rc);
    };
    composite_worst = std::max(composite_worst, rel(rg[i], central_difference(f, moved.points[i], 1e-6)));
  }

  // Trajectory cost terms: 100 control points each, every term active.
  TrajectoryCostConfig cfg;
  cfg.clearance = 1.0;
  cfg.v_max = 1.0;
  cfg.a_max = 1.0;
  auto term_check = [&](BSplineTrajectory traj, const std::function<double(const BSplineTrajectory&, Eigen::MatrixXd*)>& cost) {
    Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(traj.control.rows(), traj.control.cols());
    cost(traj, &grad);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < traj.control.cols(); ++j) {
      auto f = [&](const Eigen::VectorXd& x) {
        BSplineTrajectory t = traj;
        t.control.col(j) = x;
        return cost(t, nullptr);
      };
      const Eigen::VectorXd fd = central_difference(f, traj.control.col(j), 1e-6);
      worst = std::max(worst, (grad.col(j) - fd).norm() / std::max(fd.norm(), 1e-3));
    }
    return worst;
  };
  BSplineTrajectory t3, t2;
  t3.control.resize(3, 100);
  t2.control.resize(2, 100);
  for (int j = 0; j < 100; ++j) {
    t3.control.col(j) = point3();
    t2.control.col(j) = point2();
  }
  const std::vector<std::pair<const char*, double>> terms{
      {"smoothness", term_check(t3, [](const auto& t, auto* g) { return smoothness_cost(t, g); })},
      {"collision", term_check(t3, [&](const auto& t, auto* g) { return collision_cost(t, esdf, cfg, g); })},
      {"velocity", term_check(t3, [&](const auto& t, auto* g) { return velocity_cost(t, cfg, g); })},
      {"acceleration", term_check(t3, [&](const auto& t, auto* g) { return acceleration_cost(t, cfg, g); })},
      {"terrain", term_check(t2, [&](const auto& t, auto* g) { return terrain_cost(t, terrain, g); })},
  };
  for (const auto& [name, err] : terms) composite_worst = std::max(composite_worst, err);
  const double secs = seconds_since(t0);
  return {field_worst <= 1e-5 && composite_worst <= 1e-4 && secs <= 30.0,
          fmt("worst field gradient error %.2e", field_worst) +
              fmt(", worst cost-term error %.2e", composite_worst)};
}

Outcome criterion_closed_form() {
  const ParametricField terrain = trained_terrain();
  Rng rng(13);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d q(rng.uniform(0, 20), rng.uniform(0, 10));
    worst = std::max(worst, (terrain_penalty_gradient(terrain, q) - terrain_penalty_gradient_generic(terrain, q))
                                .cwiseAbs()
                                .maxCoeff());
  }
  return {worst <= 1e-10, fmt("max absolute difference %.2e", worst)};
}

struct SuiteRun {
  fs::path dir;
  double seconds = 0.0;
};

SuiteRun run_suite(const std::string& name, const fs::path& root) {
  SuiteRun r;
  r.dir = root / name;
  const auto t0 = Clock::now();
  run_benchmark(name, BenchmarkConfig{}, r.dir.string());
  r.seconds = seconds_since(t0);
  return r;
}

Outcome criterion_mapping(const SuiteRun& run) {
  const auto rows = read_csv(run.dir / "mapping.csv");
  const Row *rmrp_occ = nullptr, *rm_occ = nullptr, *rmrp_esdf = nullptr;
  for (const auto& r : rows) {
    if (r.at("variant") == "rmrp" && r.at("task") == "occupancy") rmrp_occ = &r;
    if (r.at("variant") == "rm" && r.at("task") == "occupancy") rm_occ = &r;
    if (r.at("variant") == "rmrp" && r.at("task") == "esdf") rmrp_esdf = &r;
  }
  if (!rmrp_occ || !rm_occ || !rmrp_esdf) return {false, "mapping.csv rows missing"};
  const double acc = d(*rmrp_occ, "accuracy"), acc_rm = d(*rm_occ, "accuracy");
  const double r2 = d(*rmrp_esdf, "r2");
  const double q = d(*rmrp_occ, "query_ms"), q_rm = d(*rm_occ, "query_ms");
  const bool samples_ok = d(*rmrp_occ, "train_samples") + d(*rmrp_occ, "holdout_samples") >= 5e4;
  const bool ok = acc >= 0.95 && r2 >= 0.95 && std::abs(acc - acc_rm) <= 0.02 && q < q_rm &&
                  samples_ok && run.seconds <= 180.0;
  return {ok, fmt("occupancy accuracy %.4f", acc) + fmt(" (RM %.4f)", acc_rm) + fmt(", ESDF R2 %.4f", r2) +
                  fmt(", query %.4f ms", q) + fmt(" vs RM %.4f ms", q_rm) +
                  fmt(", samples %.0f", d(*rmrp_occ, "train_samples") + d(*rmrp_occ, "holdout_samples"))};
}

Outcome criterion_memory(const SuiteRun& run) {
  const auto rows = read_csv(run.dir / "memory.csv");
  if (rows.size() != 3) return {false, "memory.csv needs 3 rows"};
  bool same = true;
  double worst_ratio = 1e300;
  for (const auto& r : rows) {
    same = same && r.at("checkpoint_bytes") == rows[0].at("checkpoint_bytes");
    if (r.at("case") != "samples_x10") worst_ratio = std::min(worst_ratio, d(r, "voxel_ratio"));
  }
  return {same && worst_ratio >= 100.0,
          "checkpoint " + rows[0].at("checkpoint_bytes") + " bytes in every case" +
              fmt(", smallest 0.05 m voxel-grid ratio %.0fx", worst_ratio)};
}

Outcome criterion_refinement(const SuiteRun& run) {
  const auto rows = read_csv(run.dir / "refinement.csv");
  int cost_ok = 0, clearance_ok = 0, ends = 0;
  for (const auto& r : rows) {
    cost_ok += d(r, "cost_final") <= d(r, "cost_init");
    clearance_ok += d(r, "clearance_final") >= d(r, "clearance_init");
    ends += r.at("endpoints_fixed") == "1";
  }
  const int n = static_cast<int>(rows.size());
  return {n == 10 && cost_ok == n && clearance_ok >= 9 && ends == n && run.seconds <= 120.0,
          std::to_string(cost_ok) + "/" + std::to_string(n) + " cost not increased, " +
              std::to_string(clearance_ok) + "/" + std::to_string(n) + " clearance not reduced, " +
              std::to_string(ends) + "/" + std::to_string(n) + " endpoints exact"};
}

Outcome criterion_uav(const SuiteRun& run) {
  const double required = 0.9 * TrajectoryCostConfig{}.clearance;
  int n = 0, safe = 0, mono = 0;
  double worst = 1e300;
  for (const auto& r : read_csv(run.dir / "backend_uav.csv")) {
    if (r.at("variant") != "optimized") continue;
    ++n;
    safe += d(r, "min_clearance") >= required;
    mono += r.at("monotone") == "1";
    worst = std::min(worst, d(r, "min_clearance"));
  }
  return {n == 10 && safe >= 9 && mono == n && run.seconds <= 180.0,
          std::to_string(safe) + "/" + std::to_string(n) + fmt(" scenes with clearance >= %.2f m", required) +
              fmt(" (worst %.3f)", worst) + ", " + std::to_string(mono) + "/" + std::to_string(n) +
              " monotone traces"};
}

Outcome criterion_ugv(const SuiteRun& run) {
  std::map<std::string, int> clean, hits, total;
  for (const auto& r : read_csv(run.dir / "backend_ugv.csv")) {
    const std::string scene = r.at("scene");
    const int pits = static_cast<int>(d(r, "n_pit"));
    if (r.at("variant") == "terrain") {
      ++total[scene];
      clean[scene] += pits == 0;
    } else {
      hits[scene] += pits >= 1;
    }
  }
  bool ok = run.seconds <= 180.0 && total.size() == 2;
  std::string detail;
  for (const auto& [scene, n] : total) {
    ok = ok && n == 10 && clean[scene] == 10 && hits[scene] >= 8;
    detail += (detail.empty() ? "" : "; ") + scene + ": " + std::to_string(clean[scene]) + "/" +
              std::to_string(n) + " clean, ablation in pit " + std::to_string(hits[scene]) + "/" +
              std::to_string(n);
  }
  return {ok, detail};
}

Outcome criterion_completion() {
  const auto t0 = Clock::now();
  const CompletionExperimentConfig cfg;
  const CompletionOutcome o = run_completion_experiment(cfg, 1);
  const double secs = seconds_since(t0);
  return {cfg.train_scenes == 20 && cfg.tau == 0.5 && o.recall >= 0.8 && o.false_positive_rate <= 0.2 &&
              o.idempotent && o.occupied_cells > 0 && secs <= 120.0,
          fmt("recall %.3f", o.recall) + fmt(", false-positive rate %.3f", o.false_positive_rate) + ", " +
              std::to_string(o.marked.size()) + " cells marked, idempotent " + (o.idempotent ? "yes" : "no")};
}

// ---------------------------------------------------------------- determinism

/// Table text with every *_ms column removed; other files verbatim.
std::string normalized(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string ext = p.extension().string();
  if (ext != ".csv" && ext != ".dat") return ss.str();
  const char sep = ext == ".csv" ? ',' : ' ';
  std::istringstream lines(ss.str());
  std::string line, out;
  std::vector<bool> keep;
  bool first = true;
  while (std::getline(lines, line)) {
    std::string body = line;
    if (first && ext == ".dat" && body.rfind("# ", 0) == 0) body = body.substr(2);
    const auto cells = split(body, sep);
    if (first) {
      for (const auto& c : cells) keep.push_back(!(c.size() >= 3 && c.compare(c.size() - 3, 3, "_ms") == 0));
      first = false;
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i >= keep.size() || keep[i]) out += cells[i] + sep;
    }
    out += '\n';
  }
  return out;
}

std::map<std::string, std::string> snapshot(const fs::path& root) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), root).string()] = normalized(e.path());
  }
  return files;
}

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(RMRP_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome criterion_determinism(const fs::path& root) {
  // Reduced sizes keep two full passes affordable; determinism does not
  // depend on problem size.
  fs::create_directories(root);
  const fs::path cfg = root / "determinism.json";
  std::ofstream(cfg) << R"({
  "seed": 7,
  "scenes": 2,
  "mapping": {"sample_budget": 10000, "rays": 600},
  "planning": {"sample_budget": 10000, "terrain_samples": 5000},
  "theorem": {"trials": 200},
  "completion": {"train_scenes": 3, "samples_per_scene": 2000}
})";
  const std::vector<std::string> commands{
      "benchmark --suite all",
      "train --task occupancy --scene-spec corner",
      "train --task terrain --scene-spec pits-slope",
      "plan-uav --scene-spec box-grid --stage full",
      "plan-ugv --scene-spec pits-flat",
      "complete",
      "verify-theorem --trials 200",
  };
  std::vector<std::map<std::string, std::string>> passes;
  for (int pass = 0; pass < 2; ++pass) {
    const fs::path out = root / ("pass" + std::to_string(pass));
    fs::remove_all(out);
    for (std::size_t c = 0; c < commands.size(); ++c) {
      const fs::path dir = out / std::to_string(c);
      fs::create_directories(dir);
      const int code = cli("--config " + cfg.string() + " --out " + dir.string() + " " + commands[c],
                           root / "cli.log");
      // 1 only reports failed suite checks; anything else is a broken run
      if (code != 0 && code != 1) {
        return {false, "'" + commands[c] + "' exited with " + std::to_string(code) + ", see " +
                           (root / "cli.log").string()};
      }
    }
    passes.push_back(snapshot(out));
  }
  std::size_t differing = 0;
  std::string first_diff;
  for (const auto& [name, text] : passes[0]) {
    auto it = passes[1].find(name);
    if (it == passes[1].end() || it->second != text) {
      ++differing;
      if (first_diff.empty()) first_diff = name;
    }
  }
  const bool ok = differing == 0 && passes[0].size() == passes[1].size() && !passes[0].empty();
  return {ok, std::to_string(passes[0].size()) + " output files compared, " + std::to_string(differing) +
                  " differ" + (first_diff.empty() ? "" : " (first: " + first_diff + ")")};
}

}  // namespace

int main(int argc, char** argv) {
  // acceptance [out_dir [criterion ...]]
  const fs::path root = fs::absolute(argc > 1 ? argv[1] : "acceptance_out");
  for (int i = 2; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  fs::create_directories(root);
  std::printf("threads %d, outputs in %s\n", max_threads(), root.string().c_str());

  run_criterion(1, "residual energy preservation", criterion_theorem);
  run_criterion(2, "gradient fidelity", criterion_gradients);
  run_criterion(3, "terrain penalty closed form", criterion_closed_form);

  SuiteRun mapping, frontend, uav, ugv;
  auto suite_or_fail = [&](int id, const std::string& title, const std::string& name, SuiteRun& run,
                           const std::function<Outcome(const SuiteRun&)>& judge) {
    run_criterion(id, title, [&] {
      if (run.dir.empty()) run = run_suite(name, root);
      Outcome o = judge(run);
      o.detail += fmt(", suite %.1f s", run.seconds);
      return o;
    });
  };
  suite_or_fail(4, "mapping quality", "mapping", mapping, criterion_mapping);
  suite_or_fail(5, "memory invariance", "mapping", mapping, criterion_memory);
  suite_or_fail(6, "front-end refinement", "frontend", frontend, criterion_refinement);
  suite_or_fail(7, "back-end UAV", "backend-uav", uav, criterion_uav);
  suite_or_fail(8, "back-end UGV", "backend-ugv", ugv, criterion_ugv);
  run_criterion(9, "blind-spot completion", criterion_completion);
  run_criterion(10, "determinism", [&] { return criterion_determinism(root / "determinism"); });

  std::printf("%d of %zu criteria failed\n", failures, selected.empty() ? std::size_t{10} : selected.size());
  return failures == 0 ? 0 : 1;
}
