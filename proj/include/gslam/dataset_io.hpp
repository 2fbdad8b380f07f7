#pragma once

#include <algorithm>
#include <cstddef>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gslam/error.hpp"
#include "gslam/geometry.hpp"
#include "gslam/gslam_model.hpp"
#include "gslam/motion_model.hpp"
#include "gslam/occupancy_grid.hpp"
#include "gslam/particle_filter.hpp"
#include "gslam/sensor_model.hpp"
#include "gslam/sim_world.hpp"
#include "gslam/text_format.hpp"

namespace gslam {

// ---------------------------------------------------------------------------
// Log records
//
//   record  = time SP kind { SP field } LF
//   control : "control v_e=<real> omega=<real>"
//   scan    : "scan ranges=<real>{,<real>}"
//   gps     : "gps x=<real> y=<real>"
// Lines starting with '#' and blank lines are ignored.

struct ControlRecord {
  Control control;
  friend bool operator==(const ControlRecord&, const ControlRecord&) = default;
};

struct ScanRecord {
  std::vector<double> ranges;
  friend bool operator==(const ScanRecord&, const ScanRecord&) = default;
};

struct GpsRecord {
  Point2D position;
  friend bool operator==(const GpsRecord&, const GpsRecord&) = default;
};

struct LogRecord {
  double t = 0.0;
  std::variant<ControlRecord, ScanRecord, GpsRecord> payload;

  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

inline std::string format_record(const LogRecord& r) {
  std::string line;
  text::append_double(line, r.t);
  if (const auto* c = std::get_if<ControlRecord>(&r.payload)) {
    line += " control v_e=";
    text::append_double(line, c->control.v_e);
    line += " omega=";
    text::append_double(line, c->control.omega);
  } else if (const auto* s = std::get_if<ScanRecord>(&r.payload)) {
    line += " scan ranges=";
    for (std::size_t i = 0; i < s->ranges.size(); ++i) {
      if (i) line += ',';
      text::append_double(line, s->ranges[i]);
    }
  } else {
    const auto& g = std::get<GpsRecord>(r.payload);
    line += " gps x=";
    text::append_double(line, g.position.x);
    line += " y=";
    text::append_double(line, g.position.y);
  }
  return line;
}

inline void write_log(std::ostream& os, const std::vector<LogRecord>& records) {
  for (const LogRecord& r : records) os << format_record(r) << '\n';
}

inline void write_log(const std::vector<LogRecord>& records, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  write_log(os, records);
  os.flush();
  if (!os) throw Error("write failed: '" + path + "'");
}

namespace detail {

struct Token {
  std::string_view text;
  std::size_t column = 0;  // 1-based
};

inline std::vector<Token> split_ws(std::string_view line) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t b = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > b) out.push_back({line.substr(b, i - b), b + 1});
  }
  return out;
}

inline double field_double(const Token& tok, std::string_view name, std::size_t line) {
  const auto eq = tok.text.find('=');
  if (eq == std::string_view::npos || tok.text.substr(0, eq) != name)
    throw ParseError(line, tok.column, "expected field '" + std::string(name) + "='");
  const auto v = text::parse_double(tok.text.substr(eq + 1));
  if (!v || !std::isfinite(*v)) throw ParseError(line, tok.column + eq + 1, "bad number for '" + std::string(name) + "'");
  return *v;
}

}  // namespace detail

/// Parses a log stream. When `beam_count` is given every scan must have that
/// many ranges; otherwise all scans must match the first one.
inline std::vector<LogRecord> read_log(std::istream& is, std::optional<std::size_t> beam_count = std::nullopt) {
  std::vector<LogRecord> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    const std::string_view line = raw;
    const std::string_view trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const auto toks = detail::split_ws(line);
    if (toks.size() < 2) throw ParseError(line_no, toks.empty() ? 1 : toks[0].column, "expected '<t> <kind> ...'");

    LogRecord r;
    const auto t = text::parse_double(toks[0].text);
    if (!t || !std::isfinite(*t)) throw ParseError(line_no, toks[0].column, "bad timestamp");
    r.t = *t;
    const std::string_view kind = toks[1].text;
    if (kind == "control") {
      if (toks.size() != 4) throw ParseError(line_no, toks[1].column, "control needs v_e= and omega=");
      r.payload = ControlRecord{{detail::field_double(toks[2], "v_e", line_no), detail::field_double(toks[3], "omega", line_no)}};
    } else if (kind == "gps") {
      if (toks.size() != 4) throw ParseError(line_no, toks[1].column, "gps needs x= and y=");
      r.payload = GpsRecord{{detail::field_double(toks[2], "x", line_no), detail::field_double(toks[3], "y", line_no)}};
    } else if (kind == "scan") {
      if (toks.size() != 3) throw ParseError(line_no, toks[1].column, "scan needs ranges=");
      const detail::Token& f = toks[2];
      if (f.text.substr(0, 7) != "ranges=") throw ParseError(line_no, f.column, "expected field 'ranges='");
      ScanRecord s;
      std::size_t pos = 7;
      while (pos <= f.text.size()) {
        const std::size_t comma = std::min(f.text.find(',', pos), f.text.size());
        const auto v = text::parse_double(f.text.substr(pos, comma - pos));
        if (!v || !std::isfinite(*v) || *v < 0.0) throw ParseError(line_no, f.column + pos, "bad range value");
        s.ranges.push_back(*v);
        pos = comma + 1;
      }
      if (!beam_count) beam_count = s.ranges.size();
      if (s.ranges.size() != *beam_count)
        throw ParseError(line_no, f.column,
                         "scan has " + std::to_string(s.ranges.size()) + " ranges, expected " + std::to_string(*beam_count));
      r.payload = std::move(s);
    } else {
      throw ParseError(line_no, toks[1].column, "unknown record kind '" + std::string(kind) + "'");
    }
    if (!out.empty() && r.t < out.back().t) throw ParseError(line_no, toks[0].column, "timestamp goes backwards");
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<LogRecord> read_log(const std::string& path, std::optional<std::size_t> beam_count = std::nullopt) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return read_log(is, beam_count);
}

/// Control, scan and 1 Hz GPS records of a simulated run, in time order.
inline std::vector<LogRecord> to_log_records(const GroundTruthLog& log) {
  std::vector<LogRecord> out;
  std::size_t g = 0;
  const auto flush_gps = [&](double upto) {
    while (g < log.gps.size() && log.gps[g].t <= upto) {
      out.push_back({log.gps[g].t, GpsRecord{log.gps[g].position}});
      ++g;
    }
  };
  flush_gps(log.t0);
  for (const SimRecord& r : log.records) {
    out.push_back({r.t, ControlRecord{r.control}});
    out.push_back({r.t, ScanRecord{r.scan.ranges}});
    flush_gps(r.t);
  }
  flush_gps(std::numeric_limits<double>::infinity());
  return out;
}

// ---------------------------------------------------------------------------
// Run configuration: flat "section.key = value" lines, '#' comments.

enum class EstimateKind { max_weight, mean };

struct SimOptions {
  std::string world = "default";
  std::uint64_t seed = 7;
  double noise_scale = 1.0;
  double dt = 0.25;
  std::size_t steps = 200;
  double speed = 2.6;
  double gps_period = 1.0;
};

struct MetricsOptions {
  double radius = 0.5;       // "near an obstacle"
  double free_margin = 1.0;  // farther than this from every obstacle is free space
};

struct RunConfig {
  VehicleParams vehicle;
  double control_std_v = 0.1;
  double control_std_omega = 0.01;
  double control_correlation = 0.0;
  SensorSpec sensor;
  double sensor_std_range = 0.05;
  double sensor_std_bearing = 0.005;
  double sensor_correlation = 0.0;
  FilterConfig filter;
  EstimateKind estimate = EstimateKind::max_weight;
  WeightRule weight = WeightRule::evidence;
  std::optional<Pose2D> initial_pose;  // default: the simulated world's start pose
  InterpConfig interp;
  GateConfig gate;
  GridParams grid;
  SimOptions sim;
  MetricsOptions metrics;

  ControlNoise control_noise() const {
    return ControlNoise::from_std(control_std_v, control_std_omega, control_correlation);
  }
  Cov2 sensor_noise() const { return Cov2::from_std(sensor_std_range, sensor_std_bearing, sensor_correlation); }

  SensorSpec sensor_spec() const {
    SensorSpec s = sensor;
    s.noise = sensor_noise();
    return s;
  }

  GSlamParams gslam_params() const {
    GSlamParams p;
    p.sensor = sensor_spec();
    p.gate = gate;
    p.interp = interp;
    p.gen_points = filter.gen_points;
    p.p_thr_rel = filter.p_thr_rel;
    p.beam_stride = filter.beam_stride;
    p.weight = weight;
    return p;
  }

  GridParams grid_params() const {
    GridParams g = grid;
    g.beam_stride = filter.beam_stride;
    return g;
  }

  MotionSetup motion() const { return {vehicle, control_noise()}; }
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

namespace detail {

inline double to_double(std::string_view key, std::string_view v) {
  const auto d = text::parse_double(text::trim(v));
  if (!d || !std::isfinite(*d)) throw ConfigError(std::string(key), "expected a number, got '" + std::string(v) + "'");
  return *d;
}

template <class Int>
Int to_int(std::string_view key, std::string_view v) {
  const auto d = text::parse_int<Int>(text::trim(v));
  if (!d) throw ConfigError(std::string(key), "expected an integer, got '" + std::string(v) + "'");
  return *d;
}

template <class Member>
ConfigKey real_key(std::string name, std::string help, Member member) {
  return {name, std::move(help),
          [member, name](RunConfig& c, std::string_view v) { std::invoke(member, c) = to_double(name, v); },
          [member](const RunConfig& c) { return text::format_double(std::invoke(member, c)); }};
}

template <class Int, class Member>
ConfigKey int_key(std::string name, std::string help, Member member) {
  return {name, std::move(help),
          [member, name](RunConfig& c, std::string_view v) { std::invoke(member, c) = to_int<Int>(name, v); },
          [member](const RunConfig& c) { return std::to_string(std::invoke(member, c)); }};
}

inline Pose2D& initial(RunConfig& c) {
  if (!c.initial_pose) c.initial_pose = Pose2D{};
  return *c.initial_pose;
}

inline ConfigKey initial_key(std::string name, std::string help, int which) {
  return {name, std::move(help),
          [name, which](RunConfig& c, std::string_view v) {
            const double d = to_double(name, v);
            Pose2D& p = initial(c);
            p = Pose2D(which == 0 ? d : p.x(), which == 1 ? d : p.y(), which == 2 ? d : p.phi());
          },
          [which](const RunConfig& c) {
            if (!c.initial_pose) return std::string("auto");
            const Pose2D& p = *c.initial_pose;
            return text::format_double(which == 0 ? p.x() : which == 1 ? p.y() : p.phi());
          }};
}

}  // namespace detail

/// Every configuration key, in documentation order.
inline const std::vector<ConfigKey>& config_keys() {
  using namespace detail;
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back(real_key("vehicle.L", "axle distance (m)", [](auto& c) -> auto& { return c.vehicle.L; }));
    k.push_back(real_key("vehicle.H", "rear-axle centre to rear wheel (m)", [](auto& c) -> auto& { return c.vehicle.H; }));
    k.push_back(real_key("vehicle.a", "laser x offset in the vehicle frame (m)", [](auto& c) -> auto& { return c.vehicle.a; }));
    k.push_back(real_key("vehicle.b", "laser y offset in the vehicle frame (m)", [](auto& c) -> auto& { return c.vehicle.b; }));
    k.push_back(real_key("control_noise.std_v", "wheel velocity noise (m/s)", [](auto& c) -> auto& { return c.control_std_v; }));
    k.push_back(real_key("control_noise.std_omega", "steering noise (rad)", [](auto& c) -> auto& { return c.control_std_omega; }));
    k.push_back(real_key("control_noise.correlation", "velocity/steering correlation", [](auto& c) -> auto& { return c.control_correlation; }));
    k.push_back(real_key("sensor.max_range", "laser range limit (m)", [](auto& c) -> auto& { return c.sensor.max_range; }));
    k.push_back(real_key("sensor.fov", "field of view (rad)", [](auto& c) -> auto& { return c.sensor.fov; }));
    k.push_back(int_key<std::size_t>("sensor.beam_count", "beams per scan", [](auto& c) -> auto& { return c.sensor.beam_count; }));
    k.push_back(real_key("sensor.std_range", "range noise (m)", [](auto& c) -> auto& { return c.sensor_std_range; }));
    k.push_back(real_key("sensor.std_bearing", "bearing noise (rad)", [](auto& c) -> auto& { return c.sensor_std_bearing; }));
    k.push_back(real_key("sensor.correlation", "range/bearing correlation", [](auto& c) -> auto& { return c.sensor_correlation; }));
    k.push_back(int_key<std::size_t>("filter.particles", "number of particles N", [](auto& c) -> auto& { return c.filter.particles; }));
    k.push_back(int_key<std::size_t>("filter.gen_points", "points generated per processed beam M", [](auto& c) -> auto& { return c.filter.gen_points; }));
    k.push_back(real_key("filter.p_thr_rel", "pruning threshold relative to uniform mass", [](auto& c) -> auto& { return c.filter.p_thr_rel; }));
    k.push_back(real_key("filter.ess_threshold", "resample when ESS < ess_threshold * N", [](auto& c) -> auto& { return c.filter.ess_threshold; }));
    k.push_back(int_key<std::size_t>("filter.beam_stride", "process every k-th beam", [](auto& c) -> auto& { return c.filter.beam_stride; }));
    k.push_back(int_key<std::uint64_t>("filter.seed", "filter random seed", [](auto& c) -> auto& { return c.filter.seed; }));
    k.push_back(int_key<std::size_t>("filter.threads", "worker threads for per-particle work", [](auto& c) -> auto& { return c.filter.threads; }));
    k.push_back({"filter.estimate", "trajectory estimate: max_weight or mean",
                 [](RunConfig& c, std::string_view v) {
                   v = text::trim(v);
                   if (v == "max_weight")
                     c.estimate = EstimateKind::max_weight;
                   else if (v == "mean")
                     c.estimate = EstimateKind::mean;
                   else
                     throw ConfigError("filter.estimate", "expected max_weight or mean");
                 },
                 [](const RunConfig& c) { return std::string(c.estimate == EstimateKind::mean ? "mean" : "max_weight"); }});
    k.push_back({"filter.weight", "per-beam importance factor: evidence or neutral",
                 [](RunConfig& c, std::string_view v) {
                   v = text::trim(v);
                   if (v == "evidence")
                     c.weight = WeightRule::evidence;
                   else if (v == "neutral")
                     c.weight = WeightRule::neutral;
                   else
                     throw ConfigError("filter.weight", "expected evidence or neutral");
                 },
                 [](const RunConfig& c) { return std::string(c.weight == WeightRule::neutral ? "neutral" : "evidence"); }});
    k.push_back(initial_key("filter.initial_x", "initial x (m); default: world start", 0));
    k.push_back(initial_key("filter.initial_y", "initial y (m); default: world start", 1));
    k.push_back(initial_key("filter.initial_phi", "initial heading (rad); default: world start", 2));
    k.push_back(int_key<std::size_t>("interp.k", "neighbours used for the prior of a new point", [](auto& c) -> auto& { return c.interp.k; }));
    k.push_back(real_key("interp.radius", "neighbour radius (m)", [](auto& c) -> auto& { return c.interp.radius; }));
    k.push_back(real_key("interp.power", "inverse-distance power", [](auto& c) -> auto& { return c.interp.power; }));
    k.push_back(real_key("gate.n_sigma", "gate half-width in standard deviations", [](auto& c) -> auto& { return c.gate.n_sigma; }));
    k.push_back(real_key("gate.floor_ratio", "likelihood floor relative to the neutral value", [](auto& c) -> auto& { return c.gate.floor_ratio; }));
    k.push_back(real_key("grid.resolution", "occupancy cell size (m)", [](auto& c) -> auto& { return c.grid.resolution; }));
    k.push_back(real_key("grid.x_min", "grid extent", [](auto& c) -> auto& { return c.grid.extent.x_min; }));
    k.push_back(real_key("grid.y_min", "grid extent", [](auto& c) -> auto& { return c.grid.extent.y_min; }));
    k.push_back(real_key("grid.x_max", "grid extent", [](auto& c) -> auto& { return c.grid.extent.x_max; }));
    k.push_back(real_key("grid.y_max", "grid extent", [](auto& c) -> auto& { return c.grid.extent.y_max; }));
    k.push_back(real_key("grid.l_occ", "log-odds increment for a hit", [](auto& c) -> auto& { return c.grid.l_occ; }));
    k.push_back(real_key("grid.l_free", "log-odds increment for a pass-through", [](auto& c) -> auto& { return c.grid.l_free; }));
    k.push_back(real_key("grid.clamp", "log-odds clamp", [](auto& c) -> auto& { return c.grid.clamp; }));
    k.push_back(real_key("grid.p_hit", "beam likelihood weight of occupancy", [](auto& c) -> auto& { return c.grid.p_hit; }));
    k.push_back(real_key("grid.p_rand", "beam likelihood floor", [](auto& c) -> auto& { return c.grid.p_rand; }));
    k.push_back({"sim.world", "simulated world name",
                 [](RunConfig& c, std::string_view v) { c.sim.world = std::string(text::trim(v)); },
                 [](const RunConfig& c) { return c.sim.world; }});
    k.push_back(int_key<std::uint64_t>("sim.seed", "simulation random seed", [](auto& c) -> auto& { return c.sim.seed; }));
    k.push_back(real_key("sim.noise_scale", "multiplier on simulated noise std", [](auto& c) -> auto& { return c.sim.noise_scale; }));
    k.push_back(real_key("sim.dt", "step length (s)", [](auto& c) -> auto& { return c.sim.dt; }));
    k.push_back(int_key<std::size_t>("sim.steps", "number of steps", [](auto& c) -> auto& { return c.sim.steps; }));
    k.push_back(real_key("sim.speed", "rear-wheel speed (m/s)", [](auto& c) -> auto& { return c.sim.speed; }));
    k.push_back(real_key("sim.gps_period", "GPS fix period (s)", [](auto& c) -> auto& { return c.sim.gps_period; }));
    k.push_back(real_key("metrics.radius", "distance counted as on an obstacle (m)", [](auto& c) -> auto& { return c.metrics.radius; }));
    k.push_back(real_key("metrics.free_margin", "distance beyond which space is free (m)", [](auto& c) -> auto& { return c.metrics.free_margin; }));
    return k;
  }();
  return keys;
}

inline const ConfigKey& find_config_key(std::string_view name) {
  for (const ConfigKey& k : config_keys())
    if (k.name == name) return k;
  throw ConfigError(std::string(name), "unknown configuration key");
}

inline void set_config_value(RunConfig& cfg, std::string_view key, std::string_view value) {
  find_config_key(key).set(cfg, value);
}

/// Checks every component invariant and names the first offending field.
inline void validate(const RunConfig& c) {
  const auto require = [](bool ok, const char* field, const char* why) {
    if (!ok) throw ConfigError(field, why);
  };
  require(c.vehicle.L > 0.0, "vehicle.L", "must be > 0");
  require(c.vehicle.H >= 0.0, "vehicle.H", "must be >= 0");
  require(c.control_std_v >= 0.0, "control_noise.std_v", "must be >= 0");
  require(c.control_std_omega >= 0.0, "control_noise.std_omega", "must be >= 0");
  require(c.control_correlation >= -1.0 && c.control_correlation <= 1.0, "control_noise.correlation", "must lie in [-1, 1]");
  require(c.sensor.max_range > 0.0, "sensor.max_range", "must be > 0");
  require(c.sensor.fov > 0.0 && c.sensor.fov <= kTwoPi, "sensor.fov", "must lie in (0, 2pi]");
  require(c.sensor.beam_count >= 1, "sensor.beam_count", "must be >= 1");
  require(c.sensor_std_range > 0.0, "sensor.std_range", "must be > 0 (the filter needs an invertible noise model)");
  require(c.sensor_std_bearing > 0.0, "sensor.std_bearing", "must be > 0 (the filter needs an invertible noise model)");
  require(c.sensor_correlation > -1.0 && c.sensor_correlation < 1.0, "sensor.correlation", "must lie in (-1, 1)");
  require(c.filter.particles >= 1, "filter.particles", "must be >= 1");
  require(c.filter.p_thr_rel >= 0.0, "filter.p_thr_rel", "must be >= 0");
  require(c.filter.ess_threshold > 0.0 && c.filter.ess_threshold <= 1.0, "filter.ess_threshold", "must lie in (0, 1]");
  require(c.filter.beam_stride >= 1, "filter.beam_stride", "must be >= 1");
  require(c.filter.threads >= 1, "filter.threads", "must be >= 1");
  require(c.interp.radius > 0.0, "interp.radius", "must be > 0");
  require(c.interp.power > 0.0, "interp.power", "must be > 0");
  require(c.gate.n_sigma > 0.0, "gate.n_sigma", "must be > 0");
  require(c.gate.floor_ratio >= 0.0 && c.gate.floor_ratio <= 1.0, "gate.floor_ratio", "must lie in [0, 1]");
  require(c.grid.resolution > 0.0, "grid.resolution", "must be > 0");
  require(!c.grid.extent.empty(), "grid.x_max", "grid extent is empty");
  require(c.grid.clamp > 0.0, "grid.clamp", "must be > 0");
  require(c.grid.p_hit >= 0.0, "grid.p_hit", "must be >= 0");
  require(c.grid.p_rand > 0.0, "grid.p_rand", "must be > 0");
  require(c.sim.noise_scale >= 0.0, "sim.noise_scale", "must be >= 0");
  require(c.sim.dt > 0.0, "sim.dt", "must be > 0");
  require(c.sim.steps >= 1, "sim.steps", "must be >= 1");
  require(c.sim.gps_period > 0.0, "sim.gps_period", "must be > 0");
  require(c.metrics.radius > 0.0, "metrics.radius", "must be > 0");
  require(c.metrics.free_margin >= 0.0, "metrics.free_margin", "must be >= 0");
}

inline RunConfig parse_config(std::istream& is, RunConfig cfg = {}) {
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = text::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, 1, "expected 'key = value'");
    const std::string_view key = text::trim(line.substr(0, eq));
    set_config_value(cfg, key, text::trim(line.substr(eq + 1)));
  }
  validate(cfg);
  return cfg;
}

inline RunConfig read_config(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open '" + path + "'");
  return parse_config(is);
}

inline void write_config(std::ostream& os, const RunConfig& cfg) {
  for (const ConfigKey& k : config_keys()) {
    const std::string v = k.get(cfg);
    if (v == "auto") continue;
    os << k.name << " = " << v << "  # " << k.help << '\n';
  }
}

}  // namespace gslam
