#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>

#include "bohmwg/errors.hpp"

namespace bohmwg {

/// Physical constants of the simulation. Atomic units by default.
struct UnitsConfig {
  double hbar = 1.0;
  double mass = 1.0;

  bool operator==(const UnitsConfig&) const = default;

  void validate() const {
    if (!(hbar > 0.0) || !(mass > 0.0) || !std::isfinite(hbar) || !std::isfinite(mass))
      throw InvalidArgument("units: hbar and mass must be finite and strictly positive");
  }
};

/// Angular wavenumber of DFT bin `i` on a periodic axis of `n` points and length `length`.
/// Standard ordering: 0, 1, ..., ceil(n/2)-1, -floor(n/2), ..., -1 (times 2*pi/length).
inline double fft_wavenumber(std::size_t i, std::size_t n, double length) {
  const auto half = static_cast<std::ptrdiff_t>((n - 1) / 2);
  auto m = static_cast<std::ptrdiff_t>(i);
  if (m > half) m -= static_cast<std::ptrdiff_t>(n);
  return 2.0 * std::numbers::pi * static_cast<double>(m) / length;
}

/**
 * Uniform rectangular grid. Node (i, j) sits at (x_min + i*dx, y_min + j*dy).
 *
 * Storage convention shared by every field in the library: row-major with y
 * fastest, flat index = i*ny + j. Files declare it with the token "yfast".
 * The grid is periodic for spectral purposes: its extent is nx*dx, one
 * spacing beyond the last node.
 */
class Grid2D {
 public:
  Grid2D() = default;
  Grid2D(std::size_t nx, std::size_t ny, double dx, double dy, double x_min, double y_min)
      : nx_(nx), ny_(ny), dx_(dx), dy_(dy), x_min_(x_min), y_min_(y_min) {
    if (nx < 2 || ny < 2) throw InvalidArgument("grid: nx and ny must be at least 2");
    if (!(dx > 0.0) || !(dy > 0.0) || !std::isfinite(dx) || !std::isfinite(dy))
      throw InvalidArgument("grid: spacings must be finite and positive");
    if (!std::isfinite(x_min) || !std::isfinite(y_min))
      throw InvalidArgument("grid: origin must be finite");
  }

  std::size_t nx() const { return nx_; }
  std::size_t ny() const { return ny_; }
  std::size_t size() const { return nx_ * ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double lx() const { return dx_ * static_cast<double>(nx_); }
  double ly() const { return dy_ * static_cast<double>(ny_); }
  double x_min() const { return x_min_; }
  double y_min() const { return y_min_; }
  double x_last() const { return x(nx_ - 1); }
  double y_last() const { return y(ny_ - 1); }
  double cell_area() const { return dx_ * dy_; }

  double x(std::size_t i) const { return x_min_ + static_cast<double>(i) * dx_; }
  double y(std::size_t j) const { return y_min_ + static_cast<double>(j) * dy_; }
  double kx(std::size_t i) const { return fft_wavenumber(i, nx_, lx()); }
  double ky(std::size_t j) const { return fft_wavenumber(j, ny_, ly()); }
  double dkx() const { return 2.0 * std::numbers::pi / lx(); }
  double dky() const { return 2.0 * std::numbers::pi / ly(); }

  std::size_t index(std::size_t i, std::size_t j) const { return i * ny_ + j; }

  /// True when (x, y) lies inside the hull of the grid nodes.
  bool contains(double px, double py) const {
    return px >= x_min_ && px <= x_last() && py >= y_min_ && py <= y_last();
  }

  friend bool operator==(const Grid2D&, const Grid2D&) = default;

 private:
  std::size_t nx_ = 0;
  std::size_t ny_ = 0;
  double dx_ = 0.0;
  double dy_ = 0.0;
  double x_min_ = 0.0;
  double y_min_ = 0.0;
};

inline Grid2D make_grid(std::size_t nx, std::size_t ny, double lx, double ly, double x_min,
                        double y_min) {
  if (nx < 2 || ny < 2) throw InvalidArgument("make_grid: nx and ny must be at least 2");
  if (!(lx > 0.0) || !(ly > 0.0)) throw InvalidArgument("make_grid: extents must be positive");
  return Grid2D(nx, ny, lx / static_cast<double>(nx), ly / static_cast<double>(ny), x_min, y_min);
}

/// Uniform periodic 1D grid; node i at y_min + i*dy.
class Grid1D {
 public:
  Grid1D() = default;
  Grid1D(std::size_t n, double dy, double y_min) : n_(n), dy_(dy), y_min_(y_min) {
    if (n < 2) throw InvalidArgument("grid1d: need at least 2 points");
    if (!(dy > 0.0) || !std::isfinite(dy)) throw InvalidArgument("grid1d: spacing must be positive");
  }

  std::size_t size() const { return n_; }
  double dy() const { return dy_; }
  double y_min() const { return y_min_; }
  double y_last() const { return y(n_ - 1); }
  double length() const { return dy_ * static_cast<double>(n_); }
  double y(std::size_t i) const { return y_min_ + static_cast<double>(i) * dy_; }
  double k(std::size_t i) const { return fft_wavenumber(i, n_, length()); }

  friend bool operator==(const Grid1D&, const Grid1D&) = default;

 private:
  std::size_t n_ = 0;
  double dy_ = 0.0;
  double y_min_ = 0.0;
};

/// Periodic grid of n points covering [-half_width, half_width).
inline Grid1D make_symmetric_grid(std::size_t n, double half_width) {
  if (!(half_width > 0.0)) throw InvalidArgument("grid1d: half width must be positive");
  return Grid1D(n, 2.0 * half_width / static_cast<double>(n), -half_width);
}

}  // namespace bohmwg
