#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bohmwg/bohm.hpp"
#include "bohmwg/cf2d.hpp"
#include "bohmwg/config.hpp"
#include "bohmwg/doublewell1d.hpp"
#include "bohmwg/errors.hpp"
#include "bohmwg/fft.hpp"
#include "bohmwg/potentials.hpp"
#include "bohmwg/stats.hpp"
#include "bohmwg/tdse2d.hpp"
#include "bohmwg/version.hpp"

namespace bohmwg {

/// Record of one run: what was asked for, what came out, and where it went.
struct RunManifest {
  std::string mode;
  std::string version{kVersion};
  std::string started;
  std::string finished;
  std::string status = "ok";  // ok, aborted or failed
  std::vector<std::string> diagnostics;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string config_echo;
  std::vector<std::pair<std::string, std::string>> results;
  std::vector<std::string> files;  // relative to the output directory

  void add_result(std::string key, double value) { results.emplace_back(std::move(key), detail::format_shortest(value)); }
  void add_result(std::string key, std::size_t value) { results.emplace_back(std::move(key), std::to_string(value)); }
  void add_result(std::string key, std::string value) { results.emplace_back(std::move(key), std::move(value)); }

  std::optional<std::string> result(std::string_view key) const {
    for (const auto& [k, v] : results)
      if (k == key) return v;
    return std::nullopt;
  }
  std::optional<double> numeric(std::string_view key) const {
    const auto v = result(key);
    if (!v) return std::nullopt;
    try {
      return detail::parse_real(*v);
    } catch (const InvalidArgument&) {
      return std::nullopt;
    }
  }

  int exit_code() const { return status == "ok" ? 0 : status == "aborted" ? 2 : 3; }
  std::string file_name() const { return "manifest_" + mode + ".txt"; }
};

namespace detail {

inline std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline std::string csv_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/**
 * Output directory that writes every file through a temporary sibling and a
 * rename, and remembers each name for the manifest.
 */
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root) : root_(std::move(root)) {
    std::error_code ec;
    std::filesystem::create_directories(root_, ec);
    if (ec) throw IoError("output: cannot create " + root_.string() + ": " + ec.message());
    const std::filesystem::path probe = root_ / ".write_probe";
    {
      std::ofstream os(probe);
      if (!os) throw IoError("output: " + root_.string() + " is not writable");
    }
    std::filesystem::remove(probe, ec);
  }

  const std::filesystem::path& root() const { return root_; }
  const std::vector<std::string>& files() const { return files_; }

  std::filesystem::path path(std::string_view rel) const { return root_ / std::filesystem::path(rel); }

  void write(std::string_view rel, const std::function<void(std::ostream&)>& writer) {
    const std::filesystem::path target = path(rel);
    std::filesystem::create_directories(target.parent_path());
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) throw IoError("output: cannot open " + tmp.string());
      writer(os);
      os.close();
      if (!os) throw IoError("output: write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) throw IoError("output: cannot rename " + tmp.string() + ": " + ec.message());
    record(rel);
  }

  void write_text(std::string_view rel, std::string_view text) {
    write(rel, [&](std::ostream& os) { os << text; });
  }

  /// For files produced by someone else inside the directory.
  void record(std::string_view rel) {
    if (std::find(files_.begin(), files_.end(), rel) == files_.end()) files_.emplace_back(rel);
  }

 private:
  std::filesystem::path root_;
  std::vector<std::string> files_;
};

inline std::string format_manifest(const RunManifest& m) {
  std::ostringstream os;
  os << "[run]\n"
     << "mode = " << m.mode << "\n"
     << "version = " << m.version << "\n"
     << "started = " << m.started << "\n"
     << "finished = " << m.finished << "\n"
     << "status = " << m.status << "\n"
     << "seed = " << m.seed << "\n"
     << "threads = " << m.threads << "\n";
  for (const std::string& d : m.diagnostics) os << "diagnostic = " << d << "\n";
  os << "\n[results]\n";
  for (const auto& [k, v] : m.results) os << k << " = " << v << "\n";
  os << "\n[files]\n";
  for (const std::string& f : m.files) os << f << "\n";
  os << "\n[config]\n" << m.config_echo;
  return os.str();
}

/// Lists the manifest itself among the files and writes it last.
inline void write_manifest(OutputDir& out, RunManifest& m) {
  m.finished = detail::utc_timestamp();
  m.files = out.files();
  m.files.push_back(m.file_name());
  out.write_text(m.file_name(), format_manifest(m));
}

namespace detail {

inline RunManifest begin_manifest(const RunConfig& cfg, std::string mode) {
  RunManifest m;
  m.mode = std::move(mode);
  m.started = utc_timestamp();
  m.seed = cfg.seed;
  m.threads = configured_threads();
  m.config_echo = echo_config(cfg);
  return m;
}

struct SnapshotIndex {
  std::vector<double> times;
  std::vector<std::filesystem::path> files;
};

inline SnapshotIndex read_snapshot_index(const std::filesystem::path& source) {
  const std::filesystem::path index = source / "snapshots" / "index.csv";
  std::ifstream is(index);
  if (!is) throw IoError("snapshot index: cannot open " + index.string() + " (run sim2d first)");
  SnapshotIndex out;
  std::string line;
  std::getline(is, line);
  if (trim(line) != "t,file") throw IoError("snapshot index: unexpected header in " + index.string());
  int line_no = 1;
  while (std::getline(is, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw IoError("snapshot index: malformed line " + std::to_string(line_no));
    try {
      out.times.push_back(parse_real(trim(std::string_view(line).substr(0, comma))));
    } catch (const InvalidArgument& e) {
      throw IoError("snapshot index: line " + std::to_string(line_no) + ": " + e.what());
    }
    out.files.push_back(source / "snapshots" / std::string(trim(std::string_view(line).substr(comma + 1))));
  }
  if (out.times.empty()) throw IoError("snapshot index: no snapshots listed in " + index.string());
  return out;
}

inline VelocityFieldSeries open_series(const RunConfig& cfg, double rho_floor) {
  const SnapshotIndex idx = read_snapshot_index(cfg.source_dir());
  FrameOptions opt;
  opt.units = cfg.units;
  opt.rho_floor = rho_floor;
  opt.refine_x = cfg.trajectory.refine_x;
  opt.refine_y = cfg.trajectory.refine_y;
  return VelocityFieldSeries::from_files(idx.files, idx.times, opt);
}

inline std::string numbered(std::string_view stem, std::size_t k, std::size_t total) {
  const int width = std::max<int>(3, static_cast<int>(std::to_string(total > 0 ? total - 1 : 0).size()));
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*zu", width, k);
  return std::string(stem) + buf + ".csv";
}

inline std::string trajectory_csv(const Trajectory& tr) {
  std::ostringstream os;
  write_trajectory_csv(os, tr);
  return os.str();
}

}  // namespace detail

/// Levels, tunnelling table, barrier profile and trajectories of the 1D double well.
inline RunManifest run_dw1d(const RunConfig& cfg) {
  validate(cfg);
  RunManifest m = detail::begin_manifest(cfg, "dw1d");
  OutputDir out(cfg.output);
  Warnings warnings;
  const TwoLevelState s = solve_two_levels(cfg.well, cfg.units);
  const DoubleWellParams& p = cfg.well;
  const double half = cfg.dw1d.half_width > 0.0 ? cfg.dw1d.half_width
                                                : p.outer_edge() + 40.0 * std::max(s.l0, s.l1);
  const Grid1D grid = make_symmetric_grid(cfg.dw1d.grid_points, half);
  const double period = s.tunnel_period();
  if (!std::isfinite(period)) throw NumericalFailure("dw1d: level splitting is not resolved in double precision");
  const double t_end = cfg.dw1d.periods * period;
  const BarrierCentreDensity rho00 = barrier_centre_density(s);
  const double j_peak = barrier_current_estimate(s, rho00.eigenstate, s.quarter_time(), &warnings);

  {
    std::ostringstream os;
    auto kv = [&](std::string_view k, double v) { os << k << " = " << detail::format_shortest(v) << "\n"; };
    kv("e0", s.e0);
    kv("e1", s.e1);
    kv("l0", s.l0);
    kv("l1", s.l1);
    kv("omega_tunnel", s.omega_tunnel);
    kv("tunnel_period", period);
    kv("transfer_time", s.transfer_time());
    kv("depth_ratio", p.depth_ratio(cfg.units));
    os << "deep = " << (p.is_deep(cfg.units) ? "true" : "false") << "\n";
    kv("barrier_current_estimate_peak", j_peak);
    out.write_text("levels.txt", os.str());
  }

  const auto [left, right] = left_right_states(s, grid);
  out.write("population.csv", [&](std::ostream& os) {
    os << "t,p_left,p_right,left_well,right_well\n";
    const std::size_t n = cfg.dw1d.table_points;
    for (std::size_t k = 0; k < n; ++k) {
      const double t = t_end * static_cast<double>(k) / static_cast<double>(n - 1);
      const ComplexField1D psi = evolve_two_level(s, grid, t);
      const RegionProbabilities1D r = region_probabilities(psi, p);
      os << detail::csv_real(t) << ',' << detail::csv_real(population_left(s, t)) << ','
         << detail::csv_real(projection_probability(right, psi)) << ',' << detail::csv_real(r.left_well) << ','
         << detail::csv_real(r.right_well) << '\n';
    }
  });

  out.write("barrier_current.csv", [&](std::ostream& os) {
    const double t = s.quarter_time();
    const ComplexField1D psi = evolve_two_level(s, grid, t);
    const std::vector<double> j = current_1d(psi, cfg.units);
    const Velocity1D v = dbb_velocity_1d(psi, cfg.units);
    os << "y,density,current,velocity,estimate\n";
    for (std::size_t i = 0; i < grid.size(); ++i) {
      os << detail::csv_real(grid.y(i)) << ',' << detail::csv_real(abs2(psi[i])) << ',' << detail::csv_real(j[i])
         << ',' << (v.masked[i] ? std::string("masked") : detail::csv_real(v.v[i])) << ','
         << detail::csv_real(j_peak) << '\n';
    }
  });

  std::size_t completed = 0;
  if (cfg.dw1d.trajectories > 0) {
    std::vector<double> weights(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) weights[i] = abs2(left[i]);
    const CellDistribution1D dist(weights, grid.y_min(), grid.dy());
    const std::vector<double> seeds = quantile_points(dist, cfg.dw1d.trajectories);
    const double dt = t_end / static_cast<double>(cfg.dw1d.trajectory_samples);
    Trajectory1DOptions opt;
    opt.half_width = half;
    const std::vector<Trajectory1D> trs = integrate_trajectories_1d(s, seeds, t_end, dt, opt);
    std::ostringstream index;
    index << "index,seed,final,termination\n";
    for (std::size_t k = 0; k < trs.size(); ++k) {
      const Trajectory1D& tr = trs[k];
      completed += tr.termination == Termination::completed ? 1 : 0;
      const std::string name = detail::numbered("traj_", k, trs.size());
      out.write("trajectories/" + name, [&](std::ostream& os) {
        os << "t,y\n";
        for (std::size_t n = 0; n < tr.t.size(); ++n) os << detail::csv_real(tr.t[n]) << ',' << detail::csv_real(tr.y[n]) << '\n';
      });
      index << k << ',' << detail::csv_real(tr.seed) << ',' << detail::csv_real(tr.final_position()) << ','
            << to_string(tr.termination) << '\n';
    }
    out.write_text("trajectories/index.csv", index.str());
  }

  m.add_result("e0", s.e0);
  m.add_result("e1", s.e1);
  m.add_result("tunnel_period", period);
  m.add_result("barrier_current_estimate_peak", j_peak);
  m.add_result("trajectories", cfg.dw1d.trajectories);
  m.add_result("trajectories_completed", completed);
  for (std::string& w : warnings) m.diagnostics.push_back("warning: " + w);
  write_manifest(out, m);
  return m;
}

/**
 * Waveguide propagation: potential dump, snapshot series with its index and
 * the region-probability time series. An invariant abort keeps everything
 * written so far and marks the manifest "aborted".
 */
inline RunManifest run_sim2d(const RunConfig& cfg) {
  validate(cfg);
  RunManifest m = detail::begin_manifest(cfg, "sim2d");
  OutputDir out(cfg.output);
  const auto clock0 = std::chrono::steady_clock::now();
  const Grid2D grid = cfg.grid.make();
  const RealField2D potential = rasterize_potential(cfg.geometry, grid);
  out.write("potential.cf2d", [&](std::ostream& os) { write_cf2d(os, potential); });

  Warnings warnings;
  ComplexField2D psi = initial_wavepacket(cfg.packet, grid, cfg.units, &warnings);
  NormMonitor norms;
  EdgeMonitor edges;
  RegionMonitor regions(cfg.geometry);
  SnapshotWriter snapshots(out.root() / "snapshots");
  const Observer observers[] = {std::ref(norms), std::ref(edges), std::ref(regions), std::ref(snapshots)};
  PropagationConfig pc = cfg.propagation;
  std::size_t steps = 0;
  try {
    steps = propagate(std::move(psi), potential, pc, observers, cfg.units).steps;
  } catch (const PropagationAbort& e) {
    m.status = "aborted";
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s at t = %.6g (step %zu)", e.what(), e.time(), e.step());
    m.diagnostics.emplace_back(buf);
  }
  for (const auto& f : snapshots.files) out.record("snapshots/" + f.filename().string());

  std::ostringstream index;
  index << "t,file\n";
  for (std::size_t k = 0; k < snapshots.files.size(); ++k)
    index << detail::csv_real(snapshots.times[k]) << ',' << snapshots.files[k].filename().string() << '\n';
  out.write_text("snapshots/index.csv", index.str());

  double aux_drop = 0.0;
  out.write("regions.csv", [&](std::ostream& os) {
    os << "t,norm,main,aux,other,main_left,main_right\n";
    for (std::size_t k = 0; k < regions.times.size(); ++k) {
      const WaveguideRegions& r = regions.values[k];
      os << detail::csv_real(regions.times[k]) << ',' << detail::csv_real(norms.norms[k]) << ','
         << detail::csv_real(r.main) << ',' << detail::csv_real(r.aux) << ',' << detail::csv_real(r.other) << ','
         << detail::csv_real(regions.left_of_step[k]) << ',' << detail::csv_real(regions.right_of_step[k]) << '\n';
      if (k > 0) aux_drop = std::max(aux_drop, regions.values[k - 1].aux - r.aux);
    }
  });

  m.add_result("steps", steps);
  m.add_result("snapshots", snapshots.files.size());
  m.add_result("max_norm_drift", norms.max_drift);
  m.add_result("max_edge_ratio", edges.max_ratio);
  if (!regions.values.empty()) {
    m.add_result("t_last", regions.times.back());
    m.add_result("p_main_final", regions.values.back().main);
    m.add_result("p_aux_final", regions.values.back().aux);
    m.add_result("p_aux_max_decrease", aux_drop);
  }
  m.add_result("wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - clock0).count());
  for (std::string& w : warnings) m.diagnostics.push_back("warning: " + w);
  write_manifest(out, m);
  return m;
}

/**
 * Trajectory batches over a stored sim2d run. The forward set starts from
 * |psi|^2 at the first snapshot; the backward set starts on columns across the
 * auxiliary guide at the last snapshot. The backward set has its own density
 * floor because the auxiliary guide can be many decades dimmer than the peak.
 */
inline RunManifest run_traj(const RunConfig& cfg) {
  validate(cfg);
  RunManifest m = detail::begin_manifest(cfg, "traj");
  OutputDir out(cfg.output);
  const TrajectorySettings& ts = cfg.trajectory;
  const double d_half = cfg.geometry.barrier_width / 2.0;

  std::ostringstream index;
  index << "set,index,x0,y0,t_end,x_end,y_end,termination,reflected,crossed\n";
  auto log_row = [&](std::string_view set, std::size_t k, const Trajectory& tr, const TrajectorySample& last,
                     bool reflected, bool crossed, double x0, double y0) {
    index << set << ',' << k << ',' << detail::csv_real(x0) << ',' << detail::csv_real(y0) << ','
          << detail::csv_real(last.t) << ',' << detail::csv_real(last.x) << ',' << detail::csv_real(last.y) << ','
          << to_string(tr.termination) << ',' << (reflected ? 1 : 0) << ',' << (crossed ? 1 : 0) << '\n';
  };

  std::size_t fw_completed = 0, fw_reflected = 0;
  if (ts.forward_count > 0) {
    const VelocityFieldSeries series = detail::open_series(cfg, ts.rho_floor);
    const std::vector<Seed> seeds =
        sample_density(density_at(series, series.t_first()), ts.forward_count, cfg.seed);
    const std::vector<Trajectory> trs = integrate_ensemble(series, seeds, series.t_first(), series.t_last(), ts.dt);
    for (std::size_t k = 0; k < trs.size(); ++k) {
      const bool done = trs[k].termination == Termination::completed;
      const bool reflected = done && trs[k].samples.back().x < 0.0;
      fw_completed += done ? 1 : 0;
      fw_reflected += reflected ? 1 : 0;
      out.write_text("trajectories/" + detail::numbered("forward_", k, trs.size()), detail::trajectory_csv(trs[k]));
      log_row("forward", k, trs[k], trs[k].samples.back(), reflected, false, seeds[k].x, seeds[k].y);
    }
  }

  std::size_t bw_total = 0, bw_crossed = 0, bw_masked_early = 0;
  if (!ts.stations.empty() && ts.seeds_per_station > 0) {
    const VelocityFieldSeries series = detail::open_series(cfg, ts.backward_rho_floor);
    std::vector<Seed> seeds;
    const double y_lo = cfg.geometry.aux_y_min(), width = cfg.geometry.aux_width;
    for (double x : ts.stations)
      for (std::size_t k = 0; k < ts.seeds_per_station; ++k)
        seeds.push_back({x, y_lo + (static_cast<double>(k) + 0.5) * width / static_cast<double>(ts.seeds_per_station)});
    const std::vector<Trajectory> trs = integrate_ensemble(series, seeds, series.t_last(), series.t_first(), ts.dt);
    bw_total = trs.size();
    for (std::size_t k = 0; k < trs.size(); ++k) {
      const bool crossed = std::any_of(trs[k].samples.begin(), trs[k].samples.end(),
                                       [&](const TrajectorySample& s) { return s.y > d_half; });
      bw_crossed += crossed ? 1 : 0;
      bw_masked_early += (!crossed && trs[k].termination == Termination::entered_masked_region) ? 1 : 0;
      out.write_text("trajectories/" + detail::numbered("backward_", k, trs.size()), detail::trajectory_csv(trs[k]));
      // Backward paths are stored in increasing time, so the earliest sample is the end point.
      log_row("backward", k, trs[k], trs[k].samples.front(), false, crossed, seeds[k].x, seeds[k].y);
    }
  }
  out.write_text("trajectories/index.csv", index.str());

  m.add_result("forward_count", ts.forward_count);
  m.add_result("forward_completed", fw_completed);
  m.add_result("forward_reflected", fw_reflected);
  m.add_result("backward_count", bw_total);
  m.add_result("backward_crossed", bw_crossed);
  m.add_result("backward_masked_before_crossing", bw_masked_early);
  write_manifest(out, m);
  return m;
}

/// Born-rule check on a stored sim2d run.
inline RunManifest run_equivariance(const RunConfig& cfg) {
  validate(cfg);
  RunManifest m = detail::begin_manifest(cfg, "equivariance");
  OutputDir out(cfg.output);
  const VelocityFieldSeries series = detail::open_series(cfg, cfg.trajectory.rho_floor);
  EquivarianceOptions opt;
  opt.seed = cfg.seed;
  opt.dt_traj = cfg.trajectory.dt;
  opt.coarse_bins = cfg.equivariance.coarse_bins;
  opt.t_start = series.t_first();
  const EquivarianceReport r = equivariance_test(series, cfg.equivariance.particles, cfg.equivariance.t_check, opt);
  m.add_result("n_particles", r.n_particles);
  m.add_result("n_tracked", r.n_tracked);
  m.add_result("n_left_domain", r.n_left_domain);
  m.add_result("n_masked", r.n_masked);
  m.add_result("t_check", r.t_check);
  m.add_result("ks_x", r.ks_x);
  m.add_result("ks_y", r.ks_y);
  m.add_result("ks_critical_95", ks_critical_95(r.n_tracked));
  m.add_result("chi2", r.chi2);
  m.add_result("chi2_dof", r.chi2_dof);
  std::string report;
  for (const auto& [k, v] : m.results) report += k + " = " + v + "\n";
  out.write_text("equivariance.txt", report);
  write_manifest(out, m);
  return m;
}

/// Dispatches on cfg.mode.
inline RunManifest run(const RunConfig& cfg) {
  switch (cfg.mode) {
    case RunMode::dw1d: return run_dw1d(cfg);
    case RunMode::sim2d: return run_sim2d(cfg);
    case RunMode::traj: return run_traj(cfg);
    case RunMode::equivariance: return run_equivariance(cfg);
  }
  throw InvalidArgument("run: unknown mode");
}

}  // namespace bohmwg
