#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bohmwg/cf2d.hpp"
#include "bohmwg/errors.hpp"
#include "bohmwg/fft.hpp"
#include "bohmwg/field.hpp"
#include "bohmwg/grid.hpp"
#include "bohmwg/potentials.hpp"

namespace bohmwg {

struct WavepacketParams {
  double x0 = -12.5;
  double y0 = 10.5;
  double sigma = 0.5;
  double p0 = 12.0;

  bool operator==(const WavepacketParams&) const = default;

  void validate() const {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("wavepacket: sigma must be positive");
    if (!std::isfinite(x0) || !std::isfinite(y0) || !std::isfinite(p0))
      throw InvalidArgument("wavepacket: centre and momentum must be finite");
  }
};

struct PropagationConfig {
  double dt = 1e-4;
  double t_final = 5.0;
  std::size_t snapshot_stride = 100;
  double norm_tolerance = 1e-6;  // abort threshold on |norm - initial norm|

  bool operator==(const PropagationConfig&) const = default;

  void validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("propagation: dt must be positive");
    if (!(t_final >= dt)) throw InvalidArgument("propagation: t_final must be at least dt");
    if (snapshot_stride < 1) throw InvalidArgument("propagation: snapshot_stride must be at least 1");
    if (!(norm_tolerance > 0.0)) throw InvalidArgument("propagation: norm_tolerance must be positive");
  }

  std::size_t step_count() const { return static_cast<std::size_t>(std::ceil(t_final / dt - 1e-9)); }
};

/// Normalized Gaussian with momentum p0 along x.
inline ComplexField2D initial_wavepacket(const WavepacketParams& w, const Grid2D& grid, const UnitsConfig& u = {},
                                         Warnings* warnings = nullptr) {
  w.validate();
  u.validate();
  const double margin = 5.0 * w.sigma;
  if (w.x0 - margin < grid.x_min() || w.x0 + margin > grid.x_last() || w.y0 - margin < grid.y_min() ||
      w.y0 + margin > grid.y_last())
    warn(warnings, "initial_wavepacket: packet centre is within 5 sigma of the grid boundary");
  ComplexField2D psi(grid);
  const double s2 = 2.0 * w.sigma * w.sigma;
  for (std::size_t i = 0; i < grid.nx(); ++i) {
    const double dx = grid.x(i) - w.x0;
    const cplx fx = std::polar(std::exp(-dx * dx / s2), w.p0 * dx / u.hbar);
    for (std::size_t j = 0; j < grid.ny(); ++j) {
      const double dy = grid.y(j) - w.y0;
      psi(i, j) = fx * std::exp(-dy * dy / s2);
    }
  }
  normalize(psi);
  return psi;
}

/// Strang split-operator stepper with the potential half-steps outermost.
class SplitOperator2D {
 public:
  SplitOperator2D(const RealField2D& potential, double dt, const UnitsConfig& u = {})
      : grid_(potential.grid()), dt_(dt), plan_(grid_), half_v_(grid_), kinetic_(grid_) {
    u.validate();
    if (!(dt > 0.0)) throw InvalidArgument("split operator: dt must be positive");
    for (std::size_t k = 0; k < grid_.size(); ++k) half_v_[k] = std::polar(1.0, -potential[k] * dt / (2.0 * u.hbar));
    const double inv_n = 1.0 / static_cast<double>(grid_.size());
    for (std::size_t i = 0; i < grid_.nx(); ++i) {
      const double kx = grid_.kx(i);
      for (std::size_t j = 0; j < grid_.ny(); ++j) {
        const double ky = grid_.ky(j);
        kinetic_(i, j) = std::polar(inv_n, -u.hbar * (kx * kx + ky * ky) * dt / (2.0 * u.mass));
      }
    }
  }

  const Grid2D& grid() const { return grid_; }
  double dt() const { return dt_; }

  void step(ComplexField2D& psi) const {
    if (!(psi.grid() == grid_)) throw InvalidArgument("split_step: field and potential grids differ");
    cplx* p = psi.data();
    const cplx* hv = half_v_.data();
    const cplx* kin = kinetic_.data();
    const std::size_t n = grid_.size();
    for (std::size_t k = 0; k < n; ++k) p[k] *= hv[k];
    plan_.forward(p);
    for (std::size_t k = 0; k < n; ++k) p[k] *= kin[k];
    plan_.backward(p);
    for (std::size_t k = 0; k < n; ++k) p[k] *= hv[k];
  }

 private:
  Grid2D grid_;
  double dt_;
  FftPlan plan_;
  ComplexField2D half_v_;
  ComplexField2D kinetic_;
};

/// One Strang step. Builds the stepper each call; loops should hold a SplitOperator2D.
inline ComplexField2D split_step(ComplexField2D psi, const RealField2D& potential, double dt,
                                 const UnitsConfig& u = {}) {
  if (!(psi.grid() == potential.grid())) throw InvalidArgument("split_step: field and potential grids differ");
  SplitOperator2D(potential, dt, u).step(psi);
  return psi;
}

/// Axis-aligned rectangle, half-open: [x_min, x_max) x [y_min, y_max).
struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;

  bool contains(double x, double y) const { return x >= x_min && x < x_max && y >= y_min && y < y_max; }
};

inline double region_probability(const ComplexField2D& psi, const Rect& r) {
  const Grid2D& g = psi.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const double x = g.x(i);
    if (x < r.x_min || x >= r.x_max) continue;
    for (std::size_t j = 0; j < g.ny(); ++j) {
      const double y = g.y(j);
      if (y >= r.y_min && y < r.y_max) s += abs2(psi(i, j));
    }
  }
  return s * g.cell_area();
}

inline Rect main_guide_rect(const WaveguideGeometry& g) {
  return {-g.length / 2.0, g.length / 2.0, g.main_y_min(), g.main_y_max()};
}
inline Rect aux_guide_rect(const WaveguideGeometry& g) {
  return {0.0, g.length / 2.0, g.aux_y_min(), g.aux_y_max()};
}

struct WaveguideRegions {
  double main = 0.0;
  double aux = 0.0;
  double other = 0.0;  // walls and the barrier strip

  double total() const { return main + aux + other; }
};

/// Disjoint split of the grid norm into main guide, auxiliary guide and the rest.
inline WaveguideRegions waveguide_region_probabilities(const ComplexField2D& psi, const WaveguideGeometry& geo) {
  const Rect m = main_guide_rect(geo);
  const Rect a = aux_guide_rect(geo);
  const Grid2D& g = psi.grid();
  WaveguideRegions r;
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const double x = g.x(i);
    for (std::size_t j = 0; j < g.ny(); ++j) {
      const double y = g.y(j);
      const double w = abs2(psi(i, j));
      if (m.contains(x, y))
        r.main += w;
      else if (a.contains(x, y))
        r.aux += w;
      else
        r.other += w;
    }
  }
  r.main *= g.cell_area();
  r.aux *= g.cell_area();
  r.other *= g.cell_area();
  return r;
}

enum class GradientMethod { spectral, fd4 };

namespace detail {

// d/dx and d/dy of a periodic field. Spectral derivatives drop the Nyquist bin
// so the derivative of a real field stays real.
inline std::pair<ComplexField2D, ComplexField2D> gradient(const ComplexField2D& psi, GradientMethod method,
                                                          const FftPlan* plan_in = nullptr) {
  const Grid2D& g = psi.grid();
  ComplexField2D gx(g), gy(g);
  if (method == GradientMethod::spectral) {
    std::unique_ptr<FftPlan> own;
    if (plan_in == nullptr) own = std::make_unique<FftPlan>(g);
    const FftPlan& plan = plan_in != nullptr ? *plan_in : *own;
    ComplexField2D spec = psi;
    plan.forward(spec.data());
    const double inv_n = 1.0 / static_cast<double>(g.size());
    const bool nyq_x = g.nx() % 2 == 0;
    const bool nyq_y = g.ny() % 2 == 0;
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double kx = (nyq_x && i == g.nx() / 2) ? 0.0 : g.kx(i);
      for (std::size_t j = 0; j < g.ny(); ++j) {
        const double ky = (nyq_y && j == g.ny() / 2) ? 0.0 : g.ky(j);
        const cplx v = spec(i, j) * inv_n;
        gx(i, j) = cplx{-v.imag() * kx, v.real() * kx};
        gy(i, j) = cplx{-v.imag() * ky, v.real() * ky};
      }
    }
    plan.backward(gx.data());
    plan.backward(gy.data());
    return {std::move(gx), std::move(gy)};
  }
  const std::size_t nx = g.nx(), ny = g.ny();
  if (nx < 5 || ny < 5) throw InvalidArgument("gradient: fd4 needs at least 5 points per axis");
  const double ix = 1.0 / (12.0 * g.dx());
  const double iy = 1.0 / (12.0 * g.dy());
  auto wrap = [](std::size_t i, std::ptrdiff_t off, std::size_t n) {
    return static_cast<std::size_t>((static_cast<std::ptrdiff_t>(i) + off + static_cast<std::ptrdiff_t>(n)) %
                                    static_cast<std::ptrdiff_t>(n));
  };
  for (std::size_t i = 0; i < nx; ++i) {
    const std::size_t im2 = wrap(i, -2, nx), im1 = wrap(i, -1, nx), ip1 = wrap(i, 1, nx), ip2 = wrap(i, 2, nx);
    for (std::size_t j = 0; j < ny; ++j) {
      gx(i, j) = (psi(im2, j) - 8.0 * psi(im1, j) + 8.0 * psi(ip1, j) - psi(ip2, j)) * ix;
      gy(i, j) = (psi(i, wrap(j, -2, ny)) - 8.0 * psi(i, wrap(j, -1, ny)) + 8.0 * psi(i, wrap(j, 1, ny)) -
                  psi(i, wrap(j, 2, ny))) *
                 iy;
    }
  }
  return {std::move(gx), std::move(gy)};
}

}  // namespace detail

/// J = (hbar/m) Im(conj(psi) grad psi).
inline VectorField2D current_density_2d(const ComplexField2D& psi, const UnitsConfig& u = {},
                                        GradientMethod method = GradientMethod::spectral,
                                        const FftPlan* plan = nullptr) {
  u.validate();
  auto [gx, gy] = detail::gradient(psi, method, plan);
  const double c = u.hbar / u.mass;
  VectorField2D j{RealField2D(psi.grid()), RealField2D(psi.grid())};
  for (std::size_t k = 0; k < psi.size(); ++k) {
    const cplx z = std::conj(psi[k]);
    j.x[k] = c * std::imag(z * gx[k]);
    j.y[k] = c * std::imag(z * gy[k]);
  }
  return j;
}

/// (<p_x>, <p_y>) from the momentum-space density.
inline std::pair<double, double> momentum_expectation(const ComplexField2D& psi, const UnitsConfig& u = {}) {
  const SpectralField2D s = forward_transform(psi);
  const Grid2D& g = psi.grid();
  double px = 0.0, py = 0.0, n = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) {
      const double w = abs2(s(i, j));
      px += w * g.kx(i);
      py += w * g.ky(j);
      n += w;
    }
  return {u.hbar * px / n, u.hbar * py / n};
}

struct Moments2D {
  double mean_x = 0.0;
  double mean_y = 0.0;
  double var_x = 0.0;
  double var_y = 0.0;
};

inline Moments2D position_moments(const ComplexField2D& psi) {
  const Grid2D& g = psi.grid();
  double n = 0.0, sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const double x = g.x(i);
    for (std::size_t j = 0; j < g.ny(); ++j) {
      const double y = g.y(j);
      const double w = abs2(psi(i, j));
      n += w;
      sx += w * x;
      sy += w * y;
      sxx += w * x * x;
      syy += w * y * y;
    }
  }
  Moments2D m;
  m.mean_x = sx / n;
  m.mean_y = sy / n;
  m.var_x = sxx / n - m.mean_x * m.mean_x;
  m.var_y = syy / n - m.mean_y * m.mean_y;
  return m;
}

/// What an observer sees at a snapshot point. The field is only valid during the call.
struct SnapshotView {
  std::size_t step;
  double t;
  const ComplexField2D& psi;
};

using Observer = std::function<void(const SnapshotView&)>;

/// Records |norm - 1| at every snapshot.
struct NormMonitor {
  double max_drift = 0.0;
  std::vector<double> norms;

  void operator()(const SnapshotView& v) {
    const double n = norm2(v.psi);
    norms.push_back(n);
    max_drift = std::max(max_drift, std::abs(n - 1.0));
  }
};

/// Tracks the largest edge-to-peak density ratio seen.
struct EdgeMonitor {
  double max_ratio = 0.0;
  void operator()(const SnapshotView& v) { max_ratio = std::max(max_ratio, edge_density_ratio(v.psi)); }
};

/// Region-probability time series for the waveguide partition.
struct RegionMonitor {
  WaveguideGeometry geometry;
  std::vector<double> times;
  std::vector<WaveguideRegions> values;
  std::vector<double> left_of_step;   // main guide, x < 0
  std::vector<double> right_of_step;  // main guide, x >= 0

  explicit RegionMonitor(WaveguideGeometry g) : geometry(g) {}

  void operator()(const SnapshotView& v) {
    times.push_back(v.t);
    values.push_back(waveguide_region_probabilities(v.psi, geometry));
    Rect m = main_guide_rect(geometry);
    Rect left = m, right = m;
    left.x_max = 0.0;
    right.x_min = 0.0;
    left_of_step.push_back(region_probability(v.psi, left));
    right_of_step.push_back(region_probability(v.psi, right));
  }
};

/// Writes each snapshot as psi_<step>.cf2d into a directory.
struct SnapshotWriter {
  std::filesystem::path directory;
  std::vector<std::filesystem::path> files;
  std::vector<double> times;

  explicit SnapshotWriter(std::filesystem::path dir) : directory(std::move(dir)) {
    std::filesystem::create_directories(directory);
  }

  static std::string file_name(std::size_t step) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "psi_%08zu.cf2d", step);
    return buf;
  }

  void operator()(const SnapshotView& v) {
    const std::filesystem::path p = directory / file_name(v.step);
    write_cf2d_file(p, v.psi);
    files.push_back(p);
    times.push_back(v.t);
  }
};

/// Keeps an in-memory copy of every snapshot.
struct SnapshotCollector {
  std::vector<double> times;
  std::vector<std::size_t> steps;
  std::vector<ComplexField2D> frames;

  void operator()(const SnapshotView& v) {
    times.push_back(v.t);
    steps.push_back(v.step);
    frames.push_back(v.psi);
  }
};

struct PropagationResult {
  ComplexField2D final_state;
  std::size_t steps = 0;
  std::vector<double> snapshot_times;
  double max_norm_drift = 0.0;
};

/**
 * Runs cfg.step_count() Strang steps. Observers run at step 0, every
 * snapshot_stride steps and at the last step, in the order given. The norm is
 * checked at the same points; drift beyond cfg.norm_tolerance or a non-finite
 * value throws PropagationAbort.
 */
inline PropagationResult propagate(ComplexField2D psi, const RealField2D& potential, const PropagationConfig& cfg,
                                   std::span<const Observer> observers = {}, const UnitsConfig& u = {}) {
  cfg.validate();
  if (!(psi.grid() == potential.grid())) throw InvalidArgument("propagate: field and potential grids differ");
  const SplitOperator2D op(potential, cfg.dt, u);
  const double n0 = norm2(psi);
  const std::size_t n_steps = cfg.step_count();
  PropagationResult res;
  auto checkpoint = [&](std::size_t step) {
    const double t = static_cast<double>(step) * cfg.dt;
    const double n = norm2(psi);
    if (!std::isfinite(n)) throw PropagationAbort("propagate: non-finite wavefunction", t, step);
    const double drift = std::abs(n - n0);
    res.max_norm_drift = std::max(res.max_norm_drift, drift);
    if (drift > cfg.norm_tolerance) throw PropagationAbort("propagate: norm drift exceeds tolerance", t, step);
    res.snapshot_times.push_back(t);
    const SnapshotView view{step, t, psi};
    for (const Observer& ob : observers) ob(view);
  };
  checkpoint(0);
  for (std::size_t s = 1; s <= n_steps; ++s) {
    op.step(psi);
    if (s % cfg.snapshot_stride == 0 || s == n_steps) checkpoint(s);
  }
  res.steps = n_steps;
  res.final_state = std::move(psi);
  return res;
}

}  // namespace bohmwg
