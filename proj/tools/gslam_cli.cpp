#include <CLI11.hpp>

#include <cmath>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gslam/bench.hpp"
#include "gslam/dataset_io.hpp"
#include "gslam/map_io.hpp"
#include "gslam/run.hpp"

namespace fs = std::filesystem;
using namespace gslam;

namespace {

enum Exit : int { kOk = 0, kUsage = 2, kData = 3, kDivergence = 4 };

// Raised for problems with flags or configuration discovered after parsing.
struct UsageError : Error {
  using Error::Error;
};

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Overrides {
  std::deque<std::string> storage;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void bind(CLI::App& app, const std::string& flag, const std::string& key, const std::string& help) {
    storage.emplace_back();
    options.emplace_back(key, app.add_option(flag, storage.back(), help));
  }

  void apply(RunConfig& cfg) const {
    for (std::size_t i = 0; i < options.size(); ++i)
      if (options[i].second->count() > 0) set_config_value(cfg, options[i].first, storage[i]);
  }
};

std::vector<std::string> csv_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

template <class Int>
std::vector<Int> int_list(const std::string& flag, const std::string& s) {
  std::vector<Int> out;
  for (const std::string& t : csv_list(s)) {
    const auto v = text::parse_int<Int>(t);
    if (!v) throw UsageError(flag + ": expected a comma-separated list of integers, got '" + s + "'");
    out.push_back(*v);
  }
  if (out.empty()) throw UsageError(flag + ": empty list");
  return out;
}

RunInputs load_inputs(const std::string& path, const RunConfig& cfg) {
  return split_log(read_log(path, cfg.sensor.beam_count));
}

std::optional<World> metrics_world(const std::string& name) {
  if (name == "none") return std::nullopt;
  try {
    return make_world(name);
  } catch (const InvalidArgument& e) {
    throw UsageError(std::string("--world: ") + e.what());
  }
}

int cmd_sim(const RunConfig& cfg, const std::string& out) {
  if (!metrics_world(cfg.sim.world)) throw UsageError("--world: sim needs a world");
  const GroundTruthLog log = simulate_run(cfg);
  write_log(to_log_records(log), out);
  std::cerr << "wrote " << log.records.size() << " steps to " << out << '\n';
  return kOk;
}

struct RunFlags {
  std::string log;
  std::string method = "gslam";
  std::string out_dir;
  std::string world = "default";
};

template <class State>
BenchRow metrics_row(const std::string& method, const RunConfig& cfg, const RunInputs& in,
                     const RunOutput<State>& out, double concentration) {
  BenchRow row;
  row.method = method;
  row.particles = cfg.filter.particles;
  row.gen_points = cfg.filter.gen_points;
  row.mean_step_ms = out.step_ms.size() >= 10 ? step_timing(out.step_ms).mean_ms : kNaN;
  row.concentration = concentration;
  row.mean_err_m = row.rmse_m = kNaN;
  if (!in.gps.empty()) {
    try {
      const ErrorStats e = position_error(out.times, out.trajectory, in.gps);
      row.mean_err_m = e.mean;
      row.rmse_m = e.rmse;
    } catch (const InvalidArgument&) {
    }
  }
  return row;
}

void write_metrics(const fs::path& dir, const BenchRow& row) {
  write_file((dir / "metrics.csv").string(), [&](std::ostream& os) { os << kBenchHeader << '\n' << format_bench_row(row) << '\n'; });
  std::cout << kBenchHeader << '\n' << format_bench_row(row) << '\n';
}

int cmd_run(const RunConfig& cfg, const RunFlags& f) {
  if (f.method != "gslam" && f.method != "grid") throw UsageError("--method: expected gslam or grid");
  const std::optional<World> world = metrics_world(f.world);
  const RunInputs in = load_inputs(f.log, cfg);
  if (in.steps.empty()) throw ParseError(1, 1, "log contains no scans");
  const fs::path dir(f.out_dir);
  fs::create_directories(dir);

  if (!in.gps.empty()) {
    const auto dr = dead_reckoning(in, cfg.vehicle, start_pose(cfg));
    try {
      std::cerr << "dead-reckoning mean error: " << position_error(step_times(in), dr, in.gps).mean << " m\n";
    } catch (const InvalidArgument&) {
    }
  }

  const auto write_traj = [&](const auto& out) {
    write_file((dir / "trajectory.csv").string(),
               [&](std::ostream& os) { write_trajectory_csv(os, out.times, out.trajectory); });
  };
  if (f.method == "gslam") {
    const auto out = run_gslam(in, cfg);
    write_traj(out);
    write_file((dir / "points.csv").string(), [&](std::ostream& os) { write_points_csv(os, out.best_map.points()); });
    write_file((dir / "density.grid").string(), [&](std::ostream& os) {
      write_grid(os, export_density_grid(out.best_map, cfg.grid.resolution, cfg.grid.extent));
    });
    const double conc = world ? map_concentration(out.best_map, *world, cfg.metrics.radius) : kNaN;
    write_metrics(dir, metrics_row("gslam", cfg, in, out, conc));
  } else {
    const auto out = run_grid(in, cfg);
    write_traj(out);
    write_file((dir / "occupancy.grid").string(), [&](std::ostream& os) { write_grid(os, export_grid(out.best_map)); });
    const double conc = world ? grid_sharpness(out.best_map, *world, cfg.metrics.radius) : kNaN;
    write_metrics(dir, metrics_row("grid", cfg, in, out, conc));
  }
  return kOk;
}

struct BenchFlags {
  std::vector<std::string> logs;
  std::string sim_seeds = "1,2,3";
  std::string particles = "2,8,30";
  std::string gen_points = "10";
  bool grid = false;
  std::size_t jobs = 1;
  std::string out;
};

int cmd_bench(const RunConfig& cfg, const BenchFlags& f) {
  BenchPlan plan;
  plan.particles = int_list<std::size_t>("--particles-list", f.particles);
  plan.gen_points = int_list<std::size_t>("--gen-points-list", f.gen_points);
  plan.grid_baseline = f.grid;
  plan.jobs = f.jobs;
  if (plan.jobs < 1) throw UsageError("--jobs: must be >= 1");
  const World world = make_world(cfg.sim.world);

  std::vector<RunInputs> logs;
  if (!f.logs.empty()) {
    for (const std::string& p : f.logs) logs.push_back(load_inputs(p, cfg));
  } else {
    for (std::uint64_t s : int_list<std::uint64_t>("--sim-seeds", f.sim_seeds)) {
      RunConfig c = cfg;
      c.sim.seed = s;
      logs.push_back(split_log(to_log_records(simulate_run(c))));
    }
  }

  const std::vector<BenchRow> rows = run_bench(logs, world, cfg, plan);
  const auto emit = [&](std::ostream& os) {
    os << kBenchHeader << '\n';
    for (const BenchRow& r : rows) os << format_bench_row(r) << '\n';
  };
  if (f.out.empty())
    emit(std::cout);
  else
    write_file(f.out, emit);
  for (const BenchRow& r : rows)
    if (r.status != "ok") std::cerr << r.method << " N=" << r.particles << " M=" << r.gen_points << ": " << r.status << '\n';
  return kOk;
}

struct ExportFlags {
  std::string points;
  std::string out;
  double resolution = 0.0;
};

int cmd_export_grid(const RunConfig& cfg, const ExportFlags& f) {
  const Rect bounds = cfg.grid.extent;
  if (bounds.empty()) throw UsageError("bounds: x_max must exceed x_min and y_max must exceed y_min");
  if (!(f.resolution > 0.0) || !std::isfinite(f.resolution)) throw UsageError("--resolution: must be > 0");
  auto is = open_input(f.points);
  const std::vector<MapPoint> pts = read_points_csv(is);
  const DensityGrid g = export_density_grid(pts, f.resolution, bounds);
  write_file(f.out, [&](std::ostream& os) { write_grid(os, g); });
  std::cerr << g.rows << "x" << g.cols << " grid, mass " << g.total() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"G-SLAM: particle-filter SLAM over scattered-point maps"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::string config_path;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "Run-configuration file (key = value lines)")->check(CLI::ExistingFile);
  app.add_option("--set", sets, "Override a configuration key: --set key=value (repeatable)");

  Overrides keys;
  for (const ConfigKey& k : config_keys()) keys.bind(app, "--" + k.name, k.name, k.help);
  Overrides local;

  auto* sim = app.add_subcommand("sim", "Simulate a run and write its log");
  std::string sim_out;
  local.bind(*sim, "--world", "sim.world", "World name");
  local.bind(*sim, "--seed", "sim.seed", "Simulation seed");
  local.bind(*sim, "--noise-scale", "sim.noise_scale", "Multiplier on simulated noise std");
  local.bind(*sim, "--steps", "sim.steps", "Number of steps");
  sim->add_option("--out", sim_out, "Output log file")->required();

  auto* run = app.add_subcommand("run", "Run SLAM over a log");
  RunFlags rf;
  run->add_option("--log", rf.log, "Input log file")->required()->check(CLI::ExistingFile);
  local.bind(*run, "--particles", "filter.particles", "Number of particles N");
  local.bind(*run, "--gen-points", "filter.gen_points", "Points generated per beam M");
  local.bind(*run, "--seed", "filter.seed", "Filter seed");
  local.bind(*run, "--threads", "filter.threads", "Worker threads");
  run->add_option("--method", rf.method, "gslam or grid")->check(CLI::IsMember({"gslam", "grid"}));
  run->add_option("--out-dir", rf.out_dir, "Output directory")->required();
  run->add_option("--world", rf.world, "World for the concentration metric, or 'none'");

  auto* bench = app.add_subcommand("bench", "Benchmark over particles x generated points");
  BenchFlags bf;
  bench->add_option("--log", bf.logs, "Input log (repeatable); default: simulate one per --sim-seeds");
  bench->add_option("--sim-seeds", bf.sim_seeds, "Comma-separated simulation seeds");
  bench->add_option("--particles-list", bf.particles, "Comma-separated N values");
  bench->add_option("--gen-points-list", bf.gen_points, "Comma-separated M values");
  bench->add_flag("--grid-baseline", bf.grid, "Add one grid row per N at the matched cell budget");
  bench->add_option("--jobs", bf.jobs, "Parallel benchmark cells (timings only comparable with 1)");
  local.bind(*bench, "--seed", "filter.seed", "Base filter seed; log i uses seed + i");
  bench->add_option("--out", bf.out, "Output CSV (default: stdout)");

  auto* exp = app.add_subcommand("export-grid", "Bin a points CSV into the portable grid");
  ExportFlags ef;
  exp->add_option("--points", ef.points, "Input points CSV")->required()->check(CLI::ExistingFile);
  exp->add_option("--resolution", ef.resolution, "Cell size (m)")->required();
  local.bind(*exp, "--x-min", "grid.x_min", "Lower x bound");
  local.bind(*exp, "--y-min", "grid.y_min", "Lower y bound");
  local.bind(*exp, "--x-max", "grid.x_max", "Upper x bound");
  local.bind(*exp, "--y-max", "grid.y_max", "Upper y bound");
  exp->add_option("--out", ef.out, "Output grid file")->required();

  app.add_subcommand("config", "Print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  RunConfig cfg;
  try {
    if (!config_path.empty()) cfg = read_config(config_path);
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw UsageError("--set: expected key=value, got '" + s + "'");
      set_config_value(cfg, text::trim(std::string_view(s).substr(0, eq)), text::trim(std::string_view(s).substr(eq + 1)));
    }
    keys.apply(cfg);
    local.apply(cfg);
    validate(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (sim->parsed()) return cmd_sim(cfg, sim_out);
    if (run->parsed()) return cmd_run(cfg, rf);
    if (bench->parsed()) return cmd_bench(cfg, bf);
    if (exp->parsed()) return cmd_export_grid(cfg, ef);
    write_config(std::cout, cfg);
    return kOk;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "; last good step: ";
    if (e.step == 0)
      std::cerr << "none\n";
    else
      std::cerr << e.step - 1 << '\n';
    return kDivergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kData;
  }
}
