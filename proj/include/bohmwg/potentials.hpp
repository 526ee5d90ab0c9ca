#pragma once

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "bohmwg/errors.hpp"
#include "bohmwg/field.hpp"
#include "bohmwg/grid.hpp"

namespace bohmwg {

/**
 * Coupled-waveguide geometry. The main guide occupies d/2 < y < d/2 + a for
 * -L/2 < x < L/2; the auxiliary guide occupies -d/2 - b < y < -d/2 for
 * 0 < x < L/2. For x > 0 a step of height v_step applies, and the strip
 * |y| < d/2 between the guides carries an extra v_barrier.
 */
struct WaveguideGeometry {
  double length = 100.0;      // L
  double main_width = 20.0;   // a
  double aux_width = 5.0;     // b
  double barrier_width = 1.0; // d
  double v_step = 162.0;
  double v_barrier = 18.0;
  double v_wall = 1.0e4;
  double eps = 0.05;

  bool operator==(const WaveguideGeometry&) const = default;

  void validate() const {
    if (!(length > 0.0) || !(main_width > 0.0) || !(aux_width > 0.0) || !(barrier_width > 0.0))
      throw InvalidArgument("geometry: all lengths must be positive");
    if (!(v_step > 0.0) || !(v_wall > v_step)) throw InvalidArgument("geometry: need v_wall > v_step > 0");
    if (!(v_barrier > 0.0)) throw InvalidArgument("geometry: v_barrier must be positive");
    if (!(eps > 0.0)) throw InvalidArgument("geometry: eps must be positive");
  }

  double main_y_min() const { return barrier_width / 2.0; }
  double main_y_max() const { return barrier_width / 2.0 + main_width; }
  double aux_y_min() const { return -barrier_width / 2.0 - aux_width; }
  double aux_y_max() const { return -barrier_width / 2.0; }
};

/// Symmetric square double well: -v0 on d/2 <= |y| <= d/2 + a, zero elsewhere.
struct DoubleWellParams {
  double v0 = 50.0;
  double width = 2.0;       // a
  double separation = 1.0;  // d

  bool operator==(const DoubleWellParams&) const = default;

  void validate() const {
    if (!(v0 > 0.0) || !(width > 0.0) || !(separation > 0.0))
      throw InvalidArgument("double well: v0, width and separation must be positive");
  }

  double inner_edge() const { return separation / 2.0; }
  double outer_edge() const { return separation / 2.0 + width; }

  /// Ratio of the infinite-well ground energy to the well depth.
  double depth_ratio(const UnitsConfig& u = {}) const {
    return u.hbar * u.hbar * std::numbers::pi * std::numbers::pi / (2.0 * u.mass * width * width) / v0;
  }
  bool is_deep(const UnitsConfig& u = {}) const { return depth_ratio(u) < 0.1; }
};

/// (1 + tanh(x/eps))/2, evaluated so that s(x) + s(-x) == 1 exactly.
inline double smoothed_theta(double x, double eps) {
  if (!(eps > 0.0)) throw InvalidArgument("smoothed_theta: eps must be positive");
  if (std::isinf(x)) return x > 0 ? 1.0 : 0.0;
  const double upper = 0.5 * (1.0 + std::tanh(std::abs(x) / eps));  // in [1/2, 1]
  return x >= 0.0 ? upper : 1.0 - upper;  // 1 - upper is exact for upper in [1/2, 1]
}

/// Smoothed indicator of the region where V_out vanishes (guides plus the barrier strip).
inline double guide_indicator(const WaveguideGeometry& g, double x, double y) {
  const double e = g.eps;
  const double half = g.length / 2.0;
  const double y_top = g.main_y_max();
  // left half: main guide only
  const double left = smoothed_theta(x + half, e) * smoothed_theta(-x, e) *
                      smoothed_theta(y - g.main_y_min(), e) * smoothed_theta(y_top - y, e);
  // right half: auxiliary guide, barrier strip and main guide stacked
  const double right = smoothed_theta(x, e) * smoothed_theta(half - x, e) *
                       smoothed_theta(y - g.aux_y_min(), e) * smoothed_theta(y_top - y, e);
  return left + right;
}

inline double waveguide_inner_potential(const WaveguideGeometry& g, double x, double y) {
  return smoothed_theta(x, g.eps) *
         (g.v_step + smoothed_theta(g.barrier_width / 2.0 - std::abs(y), g.eps) * g.v_barrier);
}

/// V_in + V_out with every step replaced by smoothed_theta. Outside the guides
/// V_out tops the total up to exactly v_wall.
inline double waveguide_potential(const WaveguideGeometry& g, double x, double y) {
  const double inside = guide_indicator(g, x, y);
  const double v_in = waveguide_inner_potential(g, x, y);
  const double v_out = (g.v_wall - v_in) * (1.0 - inside);
  return v_in + v_out;
}

/// Sharp double-well potential. Exactly at a step edge the value is the midpoint -v0/2.
inline double double_well_potential(const DoubleWellParams& p, double y) {
  const double r = std::abs(y);
  const double lo = p.inner_edge();
  const double hi = p.outer_edge();
  if (r == lo || r == hi) return -p.v0 / 2.0;
  return (r > lo && r < hi) ? -p.v0 : 0.0;
}

/// Smoothed variant with the same factor-wise tanh replacement used in 2D.
inline double double_well_potential_smoothed(const DoubleWellParams& p, double y, double eps) {
  const double r = std::abs(y);
  return -p.v0 * smoothed_theta(r - p.inner_edge(), eps) * smoothed_theta(p.outer_edge() - r, eps);
}

inline RealField2D rasterize_potential(const WaveguideGeometry& g, const Grid2D& grid,
                                       Warnings* warnings = nullptr) {
  g.validate();
  const double half = g.length / 2.0;
  if (grid.x_min() > -half || grid.x_last() < half || grid.y_min() > g.aux_y_min() ||
      grid.y_last() < g.main_y_max()) {
    warn(warnings, "rasterize_potential: grid does not cover the waveguide geometry");
  }
  RealField2D v(grid);
  for (std::size_t i = 0; i < grid.nx(); ++i)
    for (std::size_t j = 0; j < grid.ny(); ++j) v(i, j) = waveguide_potential(g, grid.x(i), grid.y(j));
  return v;
}

inline std::vector<double> rasterize_potential(const DoubleWellParams& p, const Grid1D& grid,
                                               Warnings* warnings = nullptr) {
  p.validate();
  if (grid.y_min() > -p.outer_edge() || grid.y_last() < p.outer_edge())
    warn(warnings, "rasterize_potential: grid does not cover both wells");
  std::vector<double> v(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) v[i] = double_well_potential(p, grid.y(i));
  return v;
}

}  // namespace bohmwg
