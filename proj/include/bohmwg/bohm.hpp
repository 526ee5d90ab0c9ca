#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include "bohmwg/cf2d.hpp"
#include "bohmwg/errors.hpp"
#include "bohmwg/fft.hpp"
#include "bohmwg/field.hpp"
#include "bohmwg/grid.hpp"
#include "bohmwg/stats.hpp"
#include "bohmwg/tdse2d.hpp"
#include "bohmwg/trajectory.hpp"

namespace bohmwg {

/// Velocity field of one snapshot. Masked nodes hold NaN velocity.
struct VelocityFrame {
  double t = 0.0;
  RealField2D vx;
  RealField2D vy;
  RealField2D density;
  std::vector<std::uint8_t> mask;  // 1 where density < rho_floor * max density
  std::size_t masked_count = 0;

  const Grid2D& grid() const { return density.grid(); }
  bool masked(std::size_t i, std::size_t j) const { return mask[density.grid().index(i, j)] != 0; }
};

namespace detail {

// True when psi = exp(i phi) f with f real, to rounding, for one constant phi.
inline bool is_real_up_to_phase(const ComplexField2D& psi) {
  cplx s{0.0, 0.0};
  for (const cplx& z : psi.values()) s += z * z;
  if (std::abs(s) == 0.0) return false;
  const cplx rot = std::polar(1.0, -0.5 * std::arg(s));
  for (const cplx& z : psi.values()) {
    const cplx w = z * rot;
    if (std::abs(w.imag()) > 1e-13 * std::abs(w)) return false;
  }
  return true;
}

}  // namespace detail

/**
 * v = J / |psi|^2 with J from current_density_2d. Nodes whose density is below
 * rho_floor times the frame maximum are masked.
 *
 * A field with constant phase carries no current; it gets exactly zero
 * velocity instead of the rounding noise a global spectral derivative leaves
 * in its far tails.
 */
inline VelocityFrame velocity_from_snapshot(const ComplexField2D& psi, const UnitsConfig& u = {},
                                            double rho_floor = 1e-12,
                                            GradientMethod method = GradientMethod::spectral,
                                            const FftPlan* plan = nullptr) {
  if (!(rho_floor >= 0.0)) throw InvalidArgument("velocity_from_snapshot: rho_floor must be non-negative");
  const Grid2D& g = psi.grid();
  VelocityFrame f{0.0, RealField2D(g), RealField2D(g), density(psi), std::vector<std::uint8_t>(g.size(), 0), 0};
  double peak = 0.0;
  for (double r : f.density.values()) peak = std::max(peak, r);
  const double floor = rho_floor * peak;
  const bool still = detail::is_real_up_to_phase(psi);
  VectorField2D j;
  if (!still) j = current_density_2d(psi, u, method, plan);
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (std::size_t k = 0; k < g.size(); ++k) {
    const double rho = f.density[k];
    if (rho < floor || rho == 0.0) {
      f.mask[k] = 1;
      ++f.masked_count;
      f.vx[k] = nan;
      f.vy[k] = nan;
    } else if (still) {
      f.vx[k] = 0.0;
      f.vy[k] = 0.0;
    } else {
      f.vx[k] = j.x[k] / rho;
      f.vy[k] = j.y[k] / rho;
    }
  }
  return f;
}

enum class SampleStatus { ok, masked, outside };

struct VelocitySample {
  double vx = 0.0;
  double vy = 0.0;
  SampleStatus status = SampleStatus::ok;
};

namespace detail {

struct CellWeights {
  std::size_t i = 0;
  std::size_t j = 0;
  double wx = 0.0;
  double wy = 0.0;
};

inline std::optional<CellWeights> locate(const Grid2D& g, double x, double y) {
  const double fx = (x - g.x_min()) / g.dx();
  const double fy = (y - g.y_min()) / g.dy();
  const auto lastx = static_cast<double>(g.nx() - 1);
  const auto lasty = static_cast<double>(g.ny() - 1);
  if (!(fx >= 0.0 && fx <= lastx && fy >= 0.0 && fy <= lasty)) return std::nullopt;
  CellWeights c;
  c.i = std::min(static_cast<std::size_t>(fx), g.nx() - 2);
  c.j = std::min(static_cast<std::size_t>(fy), g.ny() - 2);
  c.wx = fx - static_cast<double>(c.i);
  c.wy = fy - static_cast<double>(c.j);
  return c;
}

}  // namespace detail

/// Bilinear velocity inside one frame. A cell with any masked corner is masked.
inline VelocitySample sample_frame(const VelocityFrame& f, double x, double y) {
  const auto c = detail::locate(f.grid(), x, y);
  if (!c) return {0.0, 0.0, SampleStatus::outside};
  const Grid2D& g = f.grid();
  // exact node hits read only that node
  const bool on_x = c->wx == 0.0, on_y = c->wy == 0.0;
  double vx = 0.0, vy = 0.0;
  for (int di = 0; di <= (on_x ? 0 : 1); ++di) {
    for (int dj = 0; dj <= (on_y ? 0 : 1); ++dj) {
      const std::size_t k = g.index(c->i + di, c->j + dj);
      if (f.mask[k]) return {0.0, 0.0, SampleStatus::masked};
      const double w = (di ? c->wx : 1.0 - c->wx) * (dj ? c->wy : 1.0 - c->wy);
      vx += w * f.vx[k];
      vy += w * f.vy[k];
    }
  }
  return {vx, vy, SampleStatus::ok};
}

/// Linear blend in time of two frames, a.t <= t <= b.t.
inline VelocitySample sample_between(const VelocityFrame& a, const VelocityFrame& b, double t, double x, double y) {
  const double span = b.t - a.t;
  const double w = span > 0.0 ? (t - a.t) / span : 0.0;
  if (w <= 0.0) return sample_frame(a, x, y);
  if (w >= 1.0) return sample_frame(b, x, y);
  const VelocitySample sa = sample_frame(a, x, y);
  if (sa.status != SampleStatus::ok) return sa;
  const VelocitySample sb = sample_frame(b, x, y);
  if (sb.status != SampleStatus::ok) return sb;
  return {(1.0 - w) * sa.vx + w * sb.vx, (1.0 - w) * sa.vy + w * sb.vy, SampleStatus::ok};
}

/// How snapshots become velocity frames.
struct FrameOptions {
  UnitsConfig units;
  double rho_floor = 1e-12;  // relative to each frame's peak density
  // Band-limited refinement factors. The solver resolves psi, but the
  // interference fringes of |psi|^2 and v can sit above the grid's Nyquist
  // limit; refining first keeps the bilinear interpolation honest.
  std::size_t refine_x = 1;
  std::size_t refine_y = 1;
};

/**
 * Time-indexed velocity frames. Frames are either resident or produced on
 * demand by a loader and kept in a small least-recently-used cache, so long
 * runs can stream from disk. Safe for concurrent reads.
 */
class VelocityFieldSeries {
  // Turns snapshots into frames, refining them first when asked. Plans are
  // shared by all loads; FFTW allows concurrent execution of one plan.
  struct FrameMaker {
    Grid2D coarse;
    Grid2D fine;
    FrameOptions opt;
    std::unique_ptr<FftPlan> coarse_plan;
    std::unique_ptr<FftPlan> fine_plan;

    FrameMaker(const Grid2D& g, const FrameOptions& o) : coarse(g), opt(o) {
      if (o.refine_x < 1 || o.refine_y < 1) throw InvalidArgument("velocity series: refinement must be at least 1");
      fine = Grid2D(g.nx() * o.refine_x, g.ny() * o.refine_y, g.dx() / static_cast<double>(o.refine_x),
                    g.dy() / static_cast<double>(o.refine_y), g.x_min(), g.y_min());
      fine_plan = std::make_unique<FftPlan>(fine);
      if (o.refine_x > 1 || o.refine_y > 1) coarse_plan = std::make_unique<FftPlan>(g);
    }

    VelocityFrame make(const ComplexField2D& psi, double t) const {
      VelocityFrame f = coarse_plan
                            ? velocity_from_snapshot(
                                  refine_spectral(psi, opt.refine_x, opt.refine_y, coarse_plan.get(), fine_plan.get()),
                                  opt.units, opt.rho_floor, GradientMethod::spectral, fine_plan.get())
                            : velocity_from_snapshot(psi, opt.units, opt.rho_floor, GradientMethod::spectral,
                                                     fine_plan.get());
      f.t = t;
      return f;
    }
  };

 public:
  using Loader = std::function<VelocityFrame(std::size_t)>;

  VelocityFieldSeries(Grid2D grid, std::vector<double> timestamps, Loader loader, std::size_t cache_frames = 3)
      : state_(std::make_shared<State>()) {
    state_->grid = grid;
    state_->times = std::move(timestamps);
    state_->loader = std::move(loader);
    state_->capacity = std::max<std::size_t>(cache_frames, 2);
    validate_times();
  }

  static VelocityFieldSeries from_frames(std::vector<VelocityFrame> frames) {
    if (frames.empty()) throw InvalidArgument("velocity series: no frames");
    std::vector<double> times;
    auto shared = std::make_shared<std::vector<std::shared_ptr<const VelocityFrame>>>();
    const Grid2D grid = frames.front().grid();
    for (VelocityFrame& f : frames) {
      if (!(f.grid() == grid)) throw InvalidArgument("velocity series: frames must share one grid");
      times.push_back(f.t);
      shared->push_back(std::make_shared<const VelocityFrame>(std::move(f)));
    }
    VelocityFieldSeries s(grid, std::move(times), {});
    s.state_->resident = std::move(shared);
    return s;
  }

  /// Frames computed lazily from in-memory snapshots.
  static VelocityFieldSeries from_snapshots(std::shared_ptr<const std::vector<ComplexField2D>> snapshots,
                                            std::vector<double> times, const FrameOptions& opt = {}) {
    if (!snapshots || snapshots->empty()) throw InvalidArgument("velocity series: no snapshots");
    if (snapshots->size() != times.size()) throw InvalidArgument("velocity series: snapshot/time count mismatch");
    auto maker = std::make_shared<FrameMaker>(snapshots->front().grid(), opt);
    auto loader = [snapshots, times, maker](std::size_t k) { return maker->make((*snapshots)[k], times[k]); };
    return VelocityFieldSeries(maker->fine, std::move(times), loader);
  }

  /// Frames computed lazily from CF2D snapshot files.
  static VelocityFieldSeries from_files(std::vector<std::filesystem::path> files, std::vector<double> times,
                                        const FrameOptions& opt = {}) {
    if (files.empty()) throw InvalidArgument("velocity series: no files");
    if (files.size() != times.size()) throw InvalidArgument("velocity series: file/time count mismatch");
    const Grid2D grid = read_cf2d_file(files.front()).grid();
    auto maker = std::make_shared<FrameMaker>(grid, opt);
    auto loader = [files, times, maker, grid](std::size_t k) {
      const ComplexField2D psi = read_cf2d_file(files[k]);
      if (!(psi.grid() == grid)) throw IoError("velocity series: " + files[k].string() + " has a different grid");
      return maker->make(psi, times[k]);
    };
    return VelocityFieldSeries(maker->fine, std::move(times), loader);
  }

  const Grid2D& grid() const { return state_->grid; }
  const std::vector<double>& timestamps() const { return state_->times; }
  std::size_t size() const { return state_->times.size(); }
  double t_first() const { return state_->times.front(); }
  double t_last() const { return state_->times.back(); }

  std::shared_ptr<const VelocityFrame> frame(std::size_t k) const {
    if (k >= size()) throw RangeError("velocity series: frame index out of range");
    State& st = *state_;
    if (st.resident) return (*st.resident)[k];
    std::lock_guard lock(st.mutex);
    for (auto it = st.cache.begin(); it != st.cache.end(); ++it) {
      if (it->first == k) {
        st.cache.splice(st.cache.begin(), st.cache, it);
        return st.cache.front().second;
      }
    }
    auto f = std::make_shared<const VelocityFrame>(st.loader(k));
    st.cache.emplace_front(k, f);
    if (st.cache.size() > st.capacity) st.cache.pop_back();
    return f;
  }

  /// Index k of the frame interval [t_k, t_k+1] holding t (the last interval for t == t_last).
  std::size_t interval(double t) const {
    const auto& ts = state_->times;
    if (!(t >= ts.front() && t <= ts.back())) throw RangeError("velocity series: time outside the stored range");
    if (ts.size() == 1) return 0;
    auto it = std::upper_bound(ts.begin(), ts.end(), t);
    auto k = static_cast<std::size_t>(it - ts.begin());
    return std::min(k == 0 ? 0 : k - 1, ts.size() - 2);
  }

 private:
  struct State {
    Grid2D grid;
    std::vector<double> times;
    Loader loader;
    std::shared_ptr<std::vector<std::shared_ptr<const VelocityFrame>>> resident;
    std::size_t capacity = 3;
    std::mutex mutex;
    std::list<std::pair<std::size_t, std::shared_ptr<const VelocityFrame>>> cache;
  };

  void validate_times() const {
    const auto& ts = state_->times;
    if (ts.empty()) throw InvalidArgument("velocity series: no timestamps");
    for (std::size_t k = 1; k < ts.size(); ++k)
      if (!(ts[k] > ts[k - 1])) throw InvalidArgument("velocity series: timestamps must increase strictly");
  }

  std::shared_ptr<State> state_;
};

/// Velocity at (t, x, y); masked cells come back with status masked.
inline VelocitySample sample_velocity(const VelocityFieldSeries& s, double t, double x, double y) {
  if (!s.grid().contains(x, y)) throw RangeError("sample_velocity: point outside the grid");
  const std::size_t k = s.interval(t);
  if (s.size() == 1) return sample_frame(*s.frame(0), x, y);
  const auto a = s.frame(k);
  if (t == a->t) return sample_frame(*a, x, y);
  return sample_between(*a, *s.frame(k + 1), t, x, y);
}

/**
 * Step times from t_from to t_to (either direction). Every breakpoint strictly
 * between them is hit exactly, and each piece is cut into equal steps no
 * longer than dt_max.
 */
inline std::vector<double> step_schedule(std::span<const double> breaks, double t_from, double t_to, double dt_max) {
  if (!(dt_max > 0.0)) throw InvalidArgument("step_schedule: dt must be positive");
  const double lo = std::min(t_from, t_to), hi = std::max(t_from, t_to);
  std::vector<double> inner;
  for (double b : breaks)
    if (b > lo && b < hi) inner.push_back(b);
  if (t_to < t_from) std::reverse(inner.begin(), inner.end());
  inner.push_back(t_to);
  std::vector<double> out{t_from};
  double a = t_from;
  for (double b : inner) {
    const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(std::abs(b - a) / dt_max - 1e-9)));
    for (std::size_t m = 1; m < n; ++m) out.push_back(a + (b - a) * static_cast<double>(m) / static_cast<double>(n));
    out.push_back(b);
    a = b;
  }
  return out;
}

/**
 * Classical RK4 along a fixed list of times. `field(t, x, y)` returns a
 * VelocitySample; a masked or outside stage ends the trajectory at the last
 * completed step with the matching flag.
 */
template <class Field>
Trajectory integrate_rk4(Field&& field, double x0, double y0, std::span<const double> times) {
  Trajectory tr;
  if (times.empty()) return tr;
  tr.samples.reserve(times.size());
  tr.samples.push_back({times[0], x0, y0});
  double x = x0, y = y0;
  auto fail = [](SampleStatus st) {
    return st == SampleStatus::masked ? Termination::entered_masked_region : Termination::left_domain;
  };
  for (std::size_t n = 1; n < times.size(); ++n) {
    const double t = times[n - 1];
    const double h = times[n] - t;
    const VelocitySample k1 = field(t, x, y);
    VelocitySample k2, k3, k4;
    SampleStatus bad = k1.status;
    if (bad == SampleStatus::ok) bad = (k2 = field(t + h / 2, x + h / 2 * k1.vx, y + h / 2 * k1.vy)).status;
    if (bad == SampleStatus::ok) bad = (k3 = field(t + h / 2, x + h / 2 * k2.vx, y + h / 2 * k2.vy)).status;
    if (bad == SampleStatus::ok) bad = (k4 = field(t + h, x + h * k3.vx, y + h * k3.vy)).status;
    if (bad != SampleStatus::ok) {
      tr.termination = fail(bad);
      return tr;
    }
    x += h / 6 * (k1.vx + 2 * k2.vx + 2 * k3.vx + k4.vx);
    y += h / 6 * (k1.vy + 2 * k2.vy + 2 * k3.vy + k4.vy);
    tr.samples.push_back({times[n], x, y});
  }
  return tr;
}

struct Seed {
  double x = 0.0;
  double y = 0.0;
};

struct EnsembleOptions {
  bool record = true;  // keep every step; otherwise only the first and last samples
};

/**
 * Integrates all seeds together from t_start to t_end (t_end < t_start runs
 * backward). Steps are aligned to frame times, so each step touches only the
 * two frames bracketing it and the series streams through its cache once.
 * Returned trajectories are in increasing time order.
 */
inline std::vector<Trajectory> integrate_ensemble(const VelocityFieldSeries& series, std::span<const Seed> seeds,
                                                  double t_start, double t_end, double dt_traj,
                                                  const EnsembleOptions& opt = {}) {
  const double lo = std::min(t_start, t_end), hi = std::max(t_start, t_end);
  if (!(lo >= series.t_first() && hi <= series.t_last()))
    throw RangeError("integrate: time span outside the velocity series");
  const std::vector<double> times = step_schedule(series.timestamps(), t_start, t_end, dt_traj);
  if (seeds.empty()) return {};

  struct Particle {
    double x, y;
    bool active = true;
  };
  std::vector<Particle> ps;
  std::vector<Trajectory> out(seeds.size());
  for (std::size_t p = 0; p < seeds.size(); ++p) {
    ps.push_back({seeds[p].x, seeds[p].y});
    out[p].samples.push_back({t_start, seeds[p].x, seeds[p].y});
  }

  std::size_t cur = static_cast<std::size_t>(-1);
  std::shared_ptr<const VelocityFrame> fa, fb;
  auto bind = [&](double ta, double tb) {
    const std::size_t k = series.interval(0.5 * (ta + tb));
    if (k != cur) {
      fa = series.frame(k);
      fb = series.size() > 1 ? series.frame(k + 1) : fa;
      cur = k;
    }
  };
  auto field = [&](double t, double x, double y) { return sample_between(*fa, *fb, t, x, y); };
  auto fail = [](SampleStatus st) {
    return st == SampleStatus::masked ? Termination::entered_masked_region : Termination::left_domain;
  };

  for (std::size_t n = 1; n < times.size(); ++n) {
    const double t = times[n - 1];
    const double h = times[n] - t;
    bind(t, times[n]);
    for (std::size_t p = 0; p < ps.size(); ++p) {
      Particle& q = ps[p];
      if (!q.active) continue;
      const VelocitySample k1 = field(t, q.x, q.y);
      VelocitySample k2, k3, k4;
      SampleStatus bad = k1.status;
      if (bad == SampleStatus::ok) {
        k2 = field(t + h / 2, q.x + h / 2 * k1.vx, q.y + h / 2 * k1.vy);
        bad = k2.status;
      }
      if (bad == SampleStatus::ok) {
        k3 = field(t + h / 2, q.x + h / 2 * k2.vx, q.y + h / 2 * k2.vy);
        bad = k3.status;
      }
      if (bad == SampleStatus::ok) {
        k4 = field(t + h, q.x + h * k3.vx, q.y + h * k3.vy);
        bad = k4.status;
      }
      if (bad != SampleStatus::ok) {
        q.active = false;
        out[p].termination = fail(bad);
        if (!opt.record && out[p].samples.back().t != t) out[p].samples.push_back({t, q.x, q.y});
        continue;
      }
      q.x += h / 6 * (k1.vx + 2 * k2.vx + 2 * k3.vx + k4.vx);
      q.y += h / 6 * (k1.vy + 2 * k2.vy + 2 * k3.vy + k4.vy);
      if (opt.record || n + 1 == times.size()) out[p].samples.push_back({times[n], q.x, q.y});
    }
  }
  if (t_end < t_start)
    for (Trajectory& tr : out) std::reverse(tr.samples.begin(), tr.samples.end());
  return out;
}

namespace detail {

inline void require_unmasked(const VelocityFieldSeries& s, double t, const Seed& seed) {
  if (!s.grid().contains(seed.x, seed.y)) throw InvalidArgument("integrate: seed outside the grid");
  if (sample_velocity(s, t, seed.x, seed.y).status != SampleStatus::ok)
    throw InvalidArgument("integrate: seed lies in a masked cell");
}

}  // namespace detail

inline Trajectory integrate_forward(const VelocityFieldSeries& s, Seed seed, double t_start, double t_end,
                                    double dt_traj) {
  if (!(t_end >= t_start)) throw InvalidArgument("integrate_forward: t_end must not precede t_start");
  detail::require_unmasked(s, t_start, seed);
  return integrate_ensemble(s, std::span<const Seed>(&seed, 1), t_start, t_end, dt_traj).front();
}

/// Runs time from t_end down to t_start; samples are returned in increasing time.
inline Trajectory integrate_backward(const VelocityFieldSeries& s, Seed seed, double t_end, double t_start,
                                     double dt_traj) {
  if (!(t_end >= t_start)) throw InvalidArgument("integrate_backward: t_end must not precede t_start");
  detail::require_unmasked(s, t_end, seed);
  return integrate_ensemble(s, std::span<const Seed>(&seed, 1), t_end, t_start, dt_traj).front();
}

/// Default trajectory step: a tenth of the smallest frame spacing.
inline double default_dt_traj(const VelocityFieldSeries& s) {
  double m = std::numeric_limits<double>::infinity();
  const auto& ts = s.timestamps();
  for (std::size_t k = 1; k < ts.size(); ++k) m = std::min(m, ts[k] - ts[k - 1]);
  return std::isfinite(m) ? m / 10.0 : 1e-3;
}

/// Density interpolated linearly in time from the series frames.
inline RealField2D density_at(const VelocityFieldSeries& s, double t) {
  const std::size_t k = s.interval(t);
  const auto a = s.frame(k);
  if (s.size() == 1 || t == a->t) return a->density;
  const auto b = s.frame(k + 1);
  const double w = (t - a->t) / (b->t - a->t);
  RealField2D out(s.grid());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 - w) * a->density[i] + w * b->density[i];
  return out;
}

/// Node-cell distributions of the x and y marginals of a density.
inline std::pair<CellDistribution1D, CellDistribution1D> marginals(const RealField2D& rho) {
  const Grid2D& g = rho.grid();
  std::vector<double> mx(g.nx(), 0.0), my(g.ny(), 0.0);
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) {
      mx[i] += rho(i, j);
      my[j] += rho(i, j);
    }
  return {CellDistribution1D(mx, g.x_min(), g.dx()), CellDistribution1D(my, g.y_min(), g.dy())};
}

/**
 * n points distributed as the density: a node is drawn by inverse CDF over
 * the flattened field, then the point is spread uniformly over that node's
 * cell and clipped to the grid hull.
 */
inline std::vector<Seed> sample_density(const RealField2D& rho, std::size_t n, std::uint64_t seed) {
  const Grid2D& g = rho.grid();
  std::vector<double> cdf(rho.size() + 1, 0.0);
  for (std::size_t k = 0; k < rho.size(); ++k) cdf[k + 1] = cdf[k] + std::max(0.0, rho[k]);
  if (!(cdf.back() > 0.0)) throw InvalidArgument("sample_density: density has zero mass");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Seed> out;
  out.reserve(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double target = u(rng) * cdf.back();
    auto it = std::upper_bound(cdf.begin() + 1, cdf.end(), target);
    if (it == cdf.end()) --it;
    const auto k = static_cast<std::size_t>(it - cdf.begin() - 1);
    const std::size_t i = k / g.ny(), j = k % g.ny();
    const double x = std::clamp(g.x(i) + (u(rng) - 0.5) * g.dx(), g.x_min(), g.x_last());
    const double y = std::clamp(g.y(j) + (u(rng) - 0.5) * g.dy(), g.y_min(), g.y_last());
    out.push_back({x, y});
  }
  return out;
}

struct EquivarianceReport {
  std::size_t n_particles = 0;
  std::size_t n_tracked = 0;  // particles that reached t_check
  std::size_t n_left_domain = 0;
  std::size_t n_masked = 0;
  double t_check = 0.0;
  double ks_x = 0.0;
  double ks_y = 0.0;
  double chi2 = 0.0;
  std::size_t chi2_dof = 0;
};

struct EquivarianceOptions {
  std::uint64_t seed = 1;
  double dt_traj = 0.0;        // 0 selects default_dt_traj
  std::size_t coarse_bins = 16;  // per axis, for the chi-square
  double t_start = 0.0;
};

/**
 * Samples n particles from the density at opt.t_start, moves them to t_check
 * and compares the result with the density there: per-axis KS distances of the
 * marginals and a chi-square over coarse bins with expected count >= 5.
 */
inline EquivarianceReport equivariance_test(const VelocityFieldSeries& series, std::size_t n, double t_check,
                                            const EquivarianceOptions& opt = {}) {
  if (n == 0) throw InvalidArgument("equivariance_test: need at least one particle");
  const RealField2D rho0 = density_at(series, opt.t_start);
  const std::vector<Seed> seeds = sample_density(rho0, n, opt.seed);
  const double dt = opt.dt_traj > 0.0 ? opt.dt_traj : default_dt_traj(series);
  std::vector<Trajectory> trs;
  if (t_check > opt.t_start) {
    trs = integrate_ensemble(series, seeds, opt.t_start, t_check, dt, EnsembleOptions{false});
  } else {
    for (const Seed& s : seeds) trs.push_back(Trajectory{{{t_check, s.x, s.y}}, Termination::completed});
  }

  EquivarianceReport r;
  r.n_particles = n;
  r.t_check = t_check;
  std::vector<double> xs, ys;
  for (const Trajectory& tr : trs) {
    if (tr.termination == Termination::left_domain) {
      ++r.n_left_domain;
    } else if (tr.termination == Termination::entered_masked_region) {
      ++r.n_masked;
    } else {
      xs.push_back(tr.samples.back().x);
      ys.push_back(tr.samples.back().y);
    }
  }
  r.n_tracked = xs.size();
  if (xs.empty()) return r;
  const RealField2D rho = density_at(series, t_check);
  const auto [mx, my] = marginals(rho);
  r.ks_x = ks_distance(xs, mx);
  r.ks_y = ks_distance(ys, my);

  const Grid2D& g = rho.grid();
  const std::size_t nb = std::max<std::size_t>(opt.coarse_bins, 1);
  auto bin_of = [&](double x, double y) {
    const double fx = (x - (g.x_min() - g.dx() / 2)) / g.lx();
    const double fy = (y - (g.y_min() - g.dy() / 2)) / g.ly();
    const auto bx = std::min(nb - 1, static_cast<std::size_t>(std::clamp(fx, 0.0, 1.0) * static_cast<double>(nb)));
    const auto by = std::min(nb - 1, static_cast<std::size_t>(std::clamp(fy, 0.0, 1.0) * static_cast<double>(nb)));
    return bx * nb + by;
  };
  std::vector<double> expected(nb * nb, 0.0), observed(nb * nb, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) {
      expected[bin_of(g.x(i), g.y(j))] += rho(i, j);
      total += rho(i, j);
    }
  for (std::size_t p = 0; p < xs.size(); ++p) observed[bin_of(xs[p], ys[p])] += 1.0;
  const auto nt = static_cast<double>(xs.size());
  double rest_e = 0.0, rest_o = 0.0;
  std::size_t used = 0;
  for (std::size_t b = 0; b < expected.size(); ++b) {
    const double e = expected[b] / total * nt;
    if (e >= 5.0) {
      r.chi2 += (observed[b] - e) * (observed[b] - e) / e;
      ++used;
    } else {
      rest_e += e;
      rest_o += observed[b];
    }
  }
  if (rest_e >= 5.0) {
    r.chi2 += (rest_o - rest_e) * (rest_o - rest_e) / rest_e;
    ++used;
  }
  r.chi2_dof = used > 0 ? used - 1 : 0;
  return r;
}

/// CSV with header t,x,y,flag. The flag is "ok" on every row but the last, which carries the termination.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr) {
  os << "t,x,y,flag\n";
  char buf[128];
  for (std::size_t n = 0; n < tr.samples.size(); ++n) {
    const TrajectorySample& s = tr.samples[n];
    const bool last = n + 1 == tr.samples.size();
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,", s.t, s.x, s.y);
    os << buf << (last ? to_string(tr.termination) : std::string_view("ok")) << '\n';
  }
  if (!os) throw IoError("trajectory csv: write failed");
}

inline void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& tr) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("trajectory csv: cannot open " + path.string());
  write_trajectory_csv(os, tr);
}

}  // namespace bohmwg
