#pragma once

// Run configuration: a flat "key = value" format with [section] headers and
// '#' comments. Every key lives in a fixed schema; unknown keys are rejected
// with the nearest valid spelling.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bohmwg/errors.hpp"
#include "bohmwg/grid.hpp"
#include "bohmwg/potentials.hpp"
#include "bohmwg/tdse2d.hpp"

namespace bohmwg {

enum class RunMode { dw1d, sim2d, traj, equivariance };

inline std::string_view to_string(RunMode m) {
  switch (m) {
    case RunMode::dw1d: return "dw1d";
    case RunMode::sim2d: return "sim2d";
    case RunMode::traj: return "traj";
    case RunMode::equivariance: return "equivariance";
  }
  return "unknown";
}

inline std::optional<RunMode> parse_run_mode(std::string_view s) {
  if (s == "dw1d") return RunMode::dw1d;
  if (s == "sim2d") return RunMode::sim2d;
  if (s == "traj") return RunMode::traj;
  if (s == "equivariance" || s == "equiv") return RunMode::equivariance;
  return std::nullopt;
}

enum class Preset { desk, paper };

inline std::optional<Preset> parse_preset(std::string_view s) {
  if (s == "desk") return Preset::desk;
  if (s == "paper") return Preset::paper;
  return std::nullopt;
}

/// Simulation rectangle and resolution.
struct GridSpec {
  std::size_t nx = 3072;
  std::size_t ny = 1024;
  double x_min = -60.0;
  double x_max = 60.0;
  double y_min = -13.0;
  double y_max = 35.0;

  Grid2D make() const { return make_grid(nx, ny, x_max - x_min, y_max - y_min, x_min, y_min); }
  bool operator==(const GridSpec&) const = default;
};

struct TrajectorySettings {
  std::filesystem::path source;  // sim2d output directory; empty means the run's own output
  std::size_t forward_count = 50;
  std::vector<double> stations{5.0, 12.5, 20.0};  // x positions of the backward seed columns
  std::size_t seeds_per_station = 8;
  double dt = 1e-3;
  double rho_floor = 1e-12;
  double backward_rho_floor = 1e-16;
  std::size_t refine_x = 1;
  std::size_t refine_y = 1;

  bool operator==(const TrajectorySettings&) const = default;
};

struct EquivarianceSettings {
  std::size_t particles = 10000;
  double t_check = 2.0;
  std::size_t coarse_bins = 16;

  bool operator==(const EquivarianceSettings&) const = default;
};

struct Dw1dSettings {
  std::size_t grid_points = 4096;
  double half_width = 0.0;  // 0 picks outer edge + 40 decay lengths
  double periods = 1.0;     // time span in tunnel periods
  std::size_t table_points = 201;
  std::size_t trajectories = 20;
  std::size_t trajectory_samples = 2000;

  bool operator==(const Dw1dSettings&) const = default;
};

struct RunConfig {
  RunMode mode = RunMode::sim2d;
  std::filesystem::path output = "out";
  std::uint64_t seed = 1;
  UnitsConfig units;
  WaveguideGeometry geometry;
  GridSpec grid;
  WavepacketParams packet;
  PropagationConfig propagation;
  TrajectorySettings trajectory;
  EquivarianceSettings equivariance;
  DoubleWellParams well;
  Dw1dSettings dw1d;

  /// Directory holding the sim2d snapshots that traj and equivariance runs read.
  std::filesystem::path source_dir() const { return trajectory.source.empty() ? output : trajectory.source; }

  bool operator==(const RunConfig&) const = default;
};

/// Overrides the resolution-dependent keys. The physics keys are left alone.
inline void apply_preset(RunConfig& c, Preset p) {
  c.grid.x_min = -60.0;
  c.grid.x_max = 60.0;
  c.grid.y_min = -13.0;
  c.grid.y_max = 35.0;
  c.propagation.t_final = 5.0;
  if (p == Preset::desk) {
    c.grid.nx = 768;
    c.grid.ny = 256;
    c.propagation.dt = 5e-4;
    c.propagation.snapshot_stride = 20;
    c.trajectory.refine_x = 4;
    c.trajectory.refine_y = 1;
  } else {
    c.grid.nx = 3072;
    c.grid.ny = 1024;
    c.propagation.dt = 1e-4;
    c.propagation.snapshot_stride = 100;
    c.trajectory.refine_x = 1;
    c.trajectory.refine_y = 1;
  }
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_real(std::string_view s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size() || !std::isfinite(v))
    throw InvalidArgument("expected a finite real number, got '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_unsigned(std::string_view s) {
  std::uint64_t v = 0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size())
    throw InvalidArgument("expected a non-negative integer, got '" + std::string(s) + "'");
  return v;
}

inline std::vector<double> parse_real_list(std::string_view s) {
  std::vector<double> out;
  while (true) {
    const auto comma = s.find(',');
    out.push_back(parse_real(trim(s.substr(0, comma))));
    if (comma == std::string_view::npos) break;
    s.remove_prefix(comma + 1);
  }
  return out;
}

/// Shortest "%.*g" spelling that reads back to the same double.
inline std::string format_shortest(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

struct ConfigField {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
  bool empty_ok = false;  // an empty value is meaningful (paths)

  std::string name() const { return section + "." + key; }
};

enum class Bound { any, positive, non_negative };

inline void check_bound(double v, Bound b) {
  if (b == Bound::positive && !(v > 0.0)) throw InvalidArgument("must be positive");
  if (b == Bound::non_negative && !(v >= 0.0)) throw InvalidArgument("must be non-negative");
}

template <class Ref>
ConfigField real_field(std::string section, std::string key, Ref ref, Bound bound = Bound::any) {
  return {std::move(section), std::move(key),
          [ref, bound](RunConfig& c, std::string_view v) {
            const double x = parse_real(v);
            check_bound(x, bound);
            ref(c) = x;
          },
          [ref](const RunConfig& c) { return format_shortest(ref(c)); }};
}

template <class Ref>
ConfigField count_field(std::string section, std::string key, Ref ref, std::uint64_t min_value) {
  return {std::move(section), std::move(key),
          [ref, min_value](RunConfig& c, std::string_view v) {
            const std::uint64_t n = parse_unsigned(v);
            if (n < min_value) throw InvalidArgument("must be at least " + std::to_string(min_value));
            ref(c) = static_cast<std::size_t>(n);
          },
          [ref](const RunConfig& c) { return std::to_string(ref(c)); }};
}

template <class Ref>
ConfigField path_field(std::string section, std::string key, Ref ref) {
  return {std::move(section), std::move(key), [ref](RunConfig& c, std::string_view v) { ref(c) = std::string(v); },
          [ref](const RunConfig& c) { return ref(c).string(); }, true};
}

#define BOHMWG_REF(expr) [](auto& c) -> auto& { return c.expr; }

inline const std::vector<ConfigField>& config_schema() {
  static const std::vector<ConfigField> fields = [] {
    std::vector<ConfigField> f;
    f.push_back({"run", "mode",
                 [](RunConfig& c, std::string_view v) {
                   const auto m = parse_run_mode(v);
                   if (!m) throw InvalidArgument("expected one of dw1d, sim2d, traj, equivariance");
                   c.mode = *m;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.mode)); }});
    f.push_back(path_field("run", "output", BOHMWG_REF(output)));
    f.push_back({"run", "seed", [](RunConfig& c, std::string_view v) { c.seed = parse_unsigned(v); },
                 [](const RunConfig& c) { return std::to_string(c.seed); }});

    f.push_back(real_field("units", "hbar", BOHMWG_REF(units.hbar), Bound::positive));
    f.push_back(real_field("units", "mass", BOHMWG_REF(units.mass), Bound::positive));

    f.push_back(real_field("geometry", "length", BOHMWG_REF(geometry.length), Bound::positive));
    f.push_back(real_field("geometry", "main_width", BOHMWG_REF(geometry.main_width), Bound::positive));
    f.push_back(real_field("geometry", "aux_width", BOHMWG_REF(geometry.aux_width), Bound::positive));
    f.push_back(real_field("geometry", "barrier_width", BOHMWG_REF(geometry.barrier_width), Bound::positive));
    f.push_back(real_field("geometry", "v_step", BOHMWG_REF(geometry.v_step), Bound::positive));
    f.push_back(real_field("geometry", "v_barrier", BOHMWG_REF(geometry.v_barrier), Bound::positive));
    f.push_back(real_field("geometry", "v_wall", BOHMWG_REF(geometry.v_wall), Bound::positive));
    f.push_back(real_field("geometry", "eps", BOHMWG_REF(geometry.eps), Bound::positive));

    f.push_back(count_field("grid", "nx", BOHMWG_REF(grid.nx), 8));
    f.push_back(count_field("grid", "ny", BOHMWG_REF(grid.ny), 8));
    f.push_back(real_field("grid", "x_min", BOHMWG_REF(grid.x_min)));
    f.push_back(real_field("grid", "x_max", BOHMWG_REF(grid.x_max)));
    f.push_back(real_field("grid", "y_min", BOHMWG_REF(grid.y_min)));
    f.push_back(real_field("grid", "y_max", BOHMWG_REF(grid.y_max)));

    f.push_back(real_field("packet", "x0", BOHMWG_REF(packet.x0)));
    f.push_back(real_field("packet", "y0", BOHMWG_REF(packet.y0)));
    f.push_back(real_field("packet", "sigma", BOHMWG_REF(packet.sigma), Bound::positive));
    f.push_back(real_field("packet", "p0", BOHMWG_REF(packet.p0)));

    f.push_back(real_field("propagation", "dt", BOHMWG_REF(propagation.dt), Bound::positive));
    f.push_back(real_field("propagation", "t_final", BOHMWG_REF(propagation.t_final), Bound::positive));
    f.push_back(count_field("propagation", "snapshot_stride", BOHMWG_REF(propagation.snapshot_stride), 1));
    f.push_back(real_field("propagation", "norm_tolerance", BOHMWG_REF(propagation.norm_tolerance), Bound::positive));

    f.push_back(path_field("trajectory", "source", BOHMWG_REF(trajectory.source)));
    f.push_back(count_field("trajectory", "forward_count", BOHMWG_REF(trajectory.forward_count), 0));
    f.push_back({"trajectory", "stations",
                 [](RunConfig& c, std::string_view v) { c.trajectory.stations = parse_real_list(v); },
                 [](const RunConfig& c) {
                   std::string s;
                   for (double x : c.trajectory.stations) s += (s.empty() ? "" : ", ") + format_shortest(x);
                   return s;
                 }});
    f.push_back(count_field("trajectory", "seeds_per_station", BOHMWG_REF(trajectory.seeds_per_station), 1));
    f.push_back(real_field("trajectory", "dt", BOHMWG_REF(trajectory.dt), Bound::positive));
    f.push_back(real_field("trajectory", "rho_floor", BOHMWG_REF(trajectory.rho_floor), Bound::non_negative));
    f.push_back(real_field("trajectory", "backward_rho_floor", BOHMWG_REF(trajectory.backward_rho_floor),
                           Bound::non_negative));
    f.push_back(count_field("trajectory", "refine_x", BOHMWG_REF(trajectory.refine_x), 1));
    f.push_back(count_field("trajectory", "refine_y", BOHMWG_REF(trajectory.refine_y), 1));

    f.push_back(count_field("equivariance", "particles", BOHMWG_REF(equivariance.particles), 1));
    f.push_back(real_field("equivariance", "t_check", BOHMWG_REF(equivariance.t_check), Bound::non_negative));
    f.push_back(count_field("equivariance", "coarse_bins", BOHMWG_REF(equivariance.coarse_bins), 2));

    f.push_back(real_field("well", "v0", BOHMWG_REF(well.v0), Bound::positive));
    f.push_back(real_field("well", "width", BOHMWG_REF(well.width), Bound::positive));
    f.push_back(real_field("well", "separation", BOHMWG_REF(well.separation), Bound::positive));

    f.push_back(count_field("dw1d", "grid_points", BOHMWG_REF(dw1d.grid_points), 16));
    f.push_back(real_field("dw1d", "half_width", BOHMWG_REF(dw1d.half_width), Bound::non_negative));
    f.push_back(real_field("dw1d", "periods", BOHMWG_REF(dw1d.periods), Bound::positive));
    f.push_back(count_field("dw1d", "table_points", BOHMWG_REF(dw1d.table_points), 2));
    f.push_back(count_field("dw1d", "trajectories", BOHMWG_REF(dw1d.trajectories), 0));
    f.push_back(count_field("dw1d", "trajectory_samples", BOHMWG_REF(dw1d.trajectory_samples), 1));
    return f;
  }();
  return fields;
}

#undef BOHMWG_REF

inline const ConfigField* find_field(std::string_view name) {
  for (const ConfigField& f : config_schema())
    if (f.name() == name) return &f;
  return nullptr;
}

inline std::string nearest_key(std::string_view name) {
  std::string best;
  std::size_t best_d = std::string::npos;
  for (const ConfigField& f : config_schema()) {
    const std::size_t d = std::min(edit_distance(name, f.name()), edit_distance(name, f.key) + 1);
    if (d < best_d) {
      best_d = d;
      best = f.name();
    }
  }
  return best;
}

struct ConfigIssue {
  std::string key;
  std::string message;
};

inline std::vector<ConfigIssue> config_issues(const RunConfig& c) {
  std::vector<ConfigIssue> out;
  const GridSpec& g = c.grid;
  const WaveguideGeometry& geo = c.geometry;
  if (!(g.x_max > g.x_min)) out.push_back({"grid.x_max", "x_max must exceed x_min"});
  if (!(g.y_max > g.y_min)) out.push_back({"grid.y_max", "y_max must exceed y_min"});
  if (!(geo.v_wall > geo.v_step)) out.push_back({"geometry.v_wall", "v_wall must exceed v_step"});
  if (g.x_min > -geo.length / 2.0 || g.x_max < geo.length / 2.0)
    out.push_back({"grid.x_min", "grid must cover the guides in x"});
  if (g.y_min > geo.aux_y_min() || g.y_max < geo.main_y_max())
    out.push_back({"grid.y_min", "grid must cover the guides in y"});
  if (!(c.packet.x0 > g.x_min && c.packet.x0 < g.x_max && c.packet.y0 > g.y_min && c.packet.y0 < g.y_max))
    out.push_back({"packet.x0", "packet centre lies outside the grid"});
  if (!(c.propagation.t_final >= c.propagation.dt))
    out.push_back({"propagation.t_final", "t_final must be at least dt"});
  for (double x : c.trajectory.stations)
    if (!(x > 0.0 && x < geo.length / 2.0))
      out.push_back({"trajectory.stations", "stations must lie along the auxiliary guide, 0 < x < length/2"});
  if (c.output.empty()) out.push_back({"run.output", "output directory must be set"});
  return out;
}

}  // namespace detail

/// Throws InvalidArgument describing the first violated invariant.
inline void validate(const RunConfig& c) {
  const auto issues = detail::config_issues(c);
  if (!issues.empty()) throw InvalidArgument(issues.front().key + ": " + issues.front().message);
}

/**
 * Parses config text on top of `base` (defaults, possibly with a preset
 * applied). Keys given before any section header must be fully qualified,
 * as in "grid.nx = 512". Errors carry the 1-based line number.
 */
inline RunConfig parse_config(std::string_view text, RunConfig base = {}) {
  RunConfig cfg = std::move(base);
  std::map<std::string, int> seen;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    const auto nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError("unterminated section header", line_no);
      const std::string name(detail::trim(line.substr(1, line.size() - 2)));
      const auto& schema = detail::config_schema();
      if (std::none_of(schema.begin(), schema.end(), [&](const auto& f) { return f.section == name; }))
        throw ParseError("unknown section [" + name + "]", line_no);
      section = name;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string_view key = detail::trim(line.substr(0, eq));
    const std::string_view value = detail::trim(line.substr(eq + 1));
    if (key.empty()) throw ParseError("missing key before '='", line_no);
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    const detail::ConfigField* field = detail::find_field(full);
    if (field == nullptr)
      throw ParseError("unknown key '" + full + "'; did you mean '" + detail::nearest_key(full) + "'?", line_no);
    if (value.empty() && !field->empty_ok) throw ParseError("missing value for '" + full + "'", line_no);
    if (seen.count(full) != 0)
      throw ParseError("duplicate key '" + full + "' (first set on line " + std::to_string(seen[full]) + ")",
                       line_no);
    try {
      field->set(cfg, value);
    } catch (const InvalidArgument& e) {
      throw ParseError(full + ": " + e.what(), line_no);
    }
    seen[full] = line_no;
  }
  const auto issues = detail::config_issues(cfg);
  if (!issues.empty()) {
    const auto it = seen.find(issues.front().key);
    throw ParseError(issues.front().key + ": " + issues.front().message, it == seen.end() ? 0 : it->second);
  }
  return cfg;
}

inline RunConfig load_config_file(const std::filesystem::path& path, RunConfig base = {}) {
  std::ifstream is(path);
  if (!is) throw IoError("config: cannot open " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  try {
    return parse_config(ss.str(), std::move(base));
  } catch (const ParseError& e) {
    throw ParseError(e.detail(), e.line(), path.string());
  }
}

/// Every schema key with its current value, in a form parse_config reads back exactly.
inline std::string echo_config(const RunConfig& c) {
  std::string out, section;
  for (const detail::ConfigField& f : detail::config_schema()) {
    if (f.section != section) {
      if (!section.empty()) out += '\n';
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

/// All fully qualified key names, in schema order.
inline std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const detail::ConfigField& f : detail::config_schema()) keys.push_back(f.name());
  return keys;
}

}  // namespace bohmwg
