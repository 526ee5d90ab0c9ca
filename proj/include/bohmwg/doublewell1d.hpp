#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "bohmwg/errors.hpp"
#include "bohmwg/field.hpp"
#include "bohmwg/grid.hpp"
#include "bohmwg/potentials.hpp"
#include "bohmwg/trajectory.hpp"

namespace bohmwg {

enum class Parity { even, odd };

namespace detail {

// Half-line profile h(r), r >= 0, of a double-well bound state, scaled so that
// h = 1 at the inner well edge r = d/2:
//   barrier  r < d/2       : f(kappa r) / f(kappa d/2), f = cosh (even) or sinh (odd)
//   well     d/2..d/2+a    : B sin(k u) + cos(k u), u = r - d/2
//   outside  r > d/2+a     : D exp(-kappa (r - d/2 - a))
struct HalfLineProfile {
  Parity parity = Parity::even;
  double half_sep = 0.0;  // d/2
  double width = 0.0;     // a
  double kappa = 0.0;
  double k = 0.0;
  double b = 0.0;
  double d_outer = 0.0;
  double exp_kd = 0.0;  // exp(-kappa d)

  HalfLineProfile(Parity par, const DoubleWellParams& p, const UnitsConfig& u, double energy)
      : parity(par), half_sep(p.separation / 2.0), width(p.width) {
    kappa = std::sqrt(-2.0 * u.mass * energy) / u.hbar;
    k = std::sqrt(2.0 * u.mass * (energy + p.v0)) / u.hbar;
    exp_kd = std::exp(-kappa * p.separation);
    // tanh and coth of kappa d/2 written through exp(-kappa d) to stay finite for wide barriers
    const double th = (1.0 - exp_kd) / (1.0 + exp_kd);
    b = (kappa / k) * (parity == Parity::even ? th : 1.0 / th);
    d_outer = b * std::sin(k * width) + std::cos(k * width);
  }

  /// Mismatch of the logarithmic derivative at the outer edge; zero at an eigenvalue.
  double matching() const {
    const double ka = k * width;
    const double value = b * std::sin(ka) + std::cos(ka);
    const double slope = k * (b * std::cos(ka) - std::sin(ka));
    return slope + kappa * value;
  }

  /// h(r) and h'(r) for r >= 0.
  std::pair<double, double> eval(double r) const {
    if (r < half_sep) {
      // f(kappa r)/f(kappa d/2) = exp(kappa (r - d/2)) (1 +- exp(-2 kappa r)) / (1 +- exp(-kappa d))
      const double g = std::exp(kappa * (r - half_sep));
      const double e2 = std::exp(-2.0 * kappa * r);
      const double sgn = parity == Parity::even ? 1.0 : -1.0;
      const double den = 1.0 + sgn * exp_kd;
      return {g * (1.0 + sgn * e2) / den, kappa * g * (1.0 - sgn * e2) / den};
    }
    const double uu = r - half_sep;
    if (uu <= width) {
      const double s = std::sin(k * uu);
      const double c = std::cos(k * uu);
      return {b * s + c, k * (b * c - s)};
    }
    const double e = std::exp(-kappa * (uu - width));
    return {d_outer * e, -kappa * d_outer * e};
  }

  /// Integral of h^2 over [0, inf).
  double half_norm2() const {
    const double d = 2.0 * half_sep;
    double barrier = 0.0;
    if (parity == Parity::even) {
      const double sech2 = 4.0 * exp_kd / ((1.0 + exp_kd) * (1.0 + exp_kd));
      const double th = (1.0 - exp_kd) / (1.0 + exp_kd);
      barrier = d * sech2 / 4.0 + th / (2.0 * kappa);
    } else {
      const double csch2 = 4.0 * exp_kd / ((1.0 - exp_kd) * (1.0 - exp_kd));
      const double coth = (1.0 + exp_kd) / (1.0 - exp_kd);
      barrier = coth / (2.0 * kappa) - d * csch2 / 4.0;
    }
    const double s2 = std::sin(2.0 * k * width) / (4.0 * k);
    const double sa = std::sin(k * width);
    const double well = b * b * (width / 2.0 - s2) + (width / 2.0 + s2) + b * sa * sa / k;
    const double outer = d_outer * d_outer / (2.0 * kappa);
    return barrier + well + outer;
  }
};

}  // namespace detail

/**
 * Normalized real bound state of the sharp symmetric double well.
 *
 * Sign convention: the even state is positive everywhere near the wells; the
 * odd state is positive in the left well (y < 0) and negative in the right.
 */
class BoundState {
 public:
  BoundState(const DoubleWellParams& p, const UnitsConfig& u, Parity parity, double energy)
      : profile_(parity, p, u, energy), energy_(energy) {
    const double n2 = 2.0 * profile_.half_norm2();
    if (!(n2 > 0.0) || !std::isfinite(n2)) throw NumericalFailure("bound state: normalization failed");
    scale_ = 1.0 / std::sqrt(n2);
    if (parity == Parity::odd) scale_ = -scale_;
  }

  Parity parity() const { return profile_.parity; }
  double energy() const { return energy_; }
  double kappa() const { return profile_.kappa; }
  double wavenumber() const { return profile_.k; }

  /// (psi(y), psi'(y)).
  std::pair<double, double> eval(double y) const {
    const double r = std::abs(y);
    auto [h, dh] = profile_.eval(r);
    const double sy = y < 0.0 ? -1.0 : 1.0;
    if (profile_.parity == Parity::even) return {scale_ * h, scale_ * dh * sy};
    return {scale_ * sy * h, scale_ * dh};
  }
  double operator()(double y) const { return eval(y).first; }
  double derivative(double y) const { return eval(y).second; }

 private:
  detail::HalfLineProfile profile_;
  double energy_;
  double scale_ = 1.0;
};

/// Lowest even/odd pair of the sharp double well and the derived tunnelling quantities.
struct TwoLevelState {
  DoubleWellParams params;
  UnitsConfig units;
  double e0 = 0.0;
  double e1 = 0.0;
  double l0 = 0.0;
  double l1 = 0.0;
  double omega_tunnel = 0.0;  // (e0 - e1) / (2 hbar), negative when e0 < e1
  BoundState psi0;
  BoundState psi1;
  double peak_density = 0.0;  // max over y of |psi_L|^2, the reference for velocity masking

  /// Period of P_left(t) = cos^2(omega t). Infinite when the splitting is unresolved.
  double tunnel_period() const {
    return omega_tunnel == 0.0 ? std::numeric_limits<double>::infinity()
                               : std::numbers::pi / std::abs(omega_tunnel);
  }
  /// Time of complete transfer to the right well.
  double transfer_time() const { return tunnel_period() / 2.0; }
  /// Time at which the barrier current is extremal.
  double quarter_time() const { return tunnel_period() / 4.0; }
  double mean_decay_length() const { return 0.5 * (l0 + l1); }
};

struct LevelSolverOptions {
  std::size_t scan_points = 4000;
  int max_bisections = 400;
};

namespace detail {

inline std::optional<double> lowest_root(const DoubleWellParams& p, const UnitsConfig& u, Parity par,
                                         const LevelSolverOptions& opt, std::vector<std::string>& trace) {
  auto f = [&](double e) { return HalfLineProfile(par, p, u, e).matching(); };
  // Scan points cluster toward E = 0, where shallow levels sit close to the continuum.
  const auto n = static_cast<double>(opt.scan_points);
  auto energy_at = [&](std::size_t j) {
    const double q = (static_cast<double>(j) + 0.5) / (n + 1.0);
    return -p.v0 * (1.0 - q) * (1.0 - q);
  };
  double e_prev = energy_at(0);
  double f_prev = f(e_prev);
  const char* name = par == Parity::even ? "even" : "odd";
  for (std::size_t j = 1; j <= opt.scan_points; ++j) {
    const double e = energy_at(j);
    const double fe = f(e);
    if (!std::isfinite(fe)) {
      std::ostringstream os;
      os << name << " scan: non-finite matching value at E=" << e;
      trace.push_back(os.str());
      throw NumericalFailure("level solver: non-finite matching function", trace);
    }
    if (fe == 0.0) return e;
    if ((fe > 0.0) != (f_prev > 0.0)) {
      std::ostringstream os;
      os.precision(17);
      os << name << " bracket [" << e_prev << ", " << e << "] F=(" << f_prev << ", " << fe << ")";
      trace.push_back(os.str());
      double lo = e_prev, hi = e, flo = f_prev;
      for (int it = 0; it < opt.max_bisections; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) return mid;
        const double fm = f(mid);
        if (fm == 0.0) return mid;
        if ((fm > 0.0) == (flo > 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      throw NumericalFailure("level solver: bisection did not converge", trace);
    }
    e_prev = e;
    f_prev = fe;
  }
  std::ostringstream os;
  os << name << " scan: no sign change over " << opt.scan_points << " points in (-V0, 0)";
  trace.push_back(os.str());
  return std::nullopt;
}

}  // namespace detail

inline TwoLevelState solve_two_levels(const DoubleWellParams& p, const UnitsConfig& u = {},
                                      const LevelSolverOptions& opt = {}) {
  p.validate();
  u.validate();
  if (opt.scan_points < 2) throw InvalidArgument("level solver: need at least two scan points");
  std::vector<std::string> trace;
  const auto e_even = detail::lowest_root(p, u, Parity::even, opt, trace);
  const auto e_odd = detail::lowest_root(p, u, Parity::odd, opt, trace);
  if (!e_even || !e_odd) {
    const int found = (e_even ? 1 : 0) + (e_odd ? 1 : 0);
    throw InsufficientLevels("double well holds fewer than two bound states", found);
  }
  const double e0 = *e_even;
  const double e1 = *e_odd;
  BoundState s0(p, u, Parity::even, e0);
  BoundState s1(p, u, Parity::odd, e1);

  double peak = 0.0;
  const double reach = p.outer_edge();
  constexpr int samples = 4001;
  for (int i = 0; i < samples; ++i) {
    const double y = -reach + 2.0 * reach * i / (samples - 1);
    const double l = (s0(y) + s1(y)) / std::numbers::sqrt2;
    peak = std::max(peak, l * l);
  }
  return TwoLevelState{p,
                       u,
                       e0,
                       e1,
                       u.hbar / std::sqrt(-2.0 * u.mass * e0),
                       u.hbar / std::sqrt(-2.0 * u.mass * e1),
                       (e0 - e1) / (2.0 * u.hbar),
                       s0,
                       s1,
                       peak};
}

namespace detail {

// exp(-i e t / hbar) with the phase reduced in extended precision, so long
// evolution times do not lose the phase to rounding.
inline cplx energy_phase(double e, double t, double hbar) {
  constexpr long double two_pi = 6.283185307179586476925286766559L;
  long double a = static_cast<long double>(e) * static_cast<long double>(t) / static_cast<long double>(hbar);
  a = std::fmod(a, two_pi);
  return std::polar(1.0, -static_cast<double>(a));
}

inline std::pair<double, double> cos_sin(double omega, double t) {
  constexpr long double two_pi = 6.283185307179586476925286766559L;
  long double a = static_cast<long double>(omega) * static_cast<long double>(t);
  a = std::fmod(a, two_pi);
  return {static_cast<double>(std::cos(a)), static_cast<double>(std::sin(a))};
}

}  // namespace detail

/// psi0 and psi1 sampled on a grid and normalized there.
struct GridEigenstates {
  ComplexField1D psi0;
  ComplexField1D psi1;
};

inline GridEigenstates sample_eigenstates(const TwoLevelState& s, const Grid1D& grid) {
  GridEigenstates out{ComplexField1D(grid), ComplexField1D(grid)};
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.psi0[i] = s.psi0(grid.y(i));
    out.psi1[i] = s.psi1(grid.y(i));
  }
  normalize(out.psi0);
  normalize(out.psi1);
  return out;
}

/// psi_L = (psi0 + psi1)/sqrt2 and psi_R = (psi0 - psi1)/sqrt2 on the grid.
inline std::pair<ComplexField1D, ComplexField1D> left_right_states(const TwoLevelState& s, const Grid1D& grid) {
  const GridEigenstates eig = sample_eigenstates(s, grid);
  ComplexField1D left(grid), right(grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    left[i] = (eig.psi0[i] + eig.psi1[i]) / std::numbers::sqrt2;
    right[i] = (eig.psi0[i] - eig.psi1[i]) / std::numbers::sqrt2;
  }
  return {std::move(left), std::move(right)};
}

/// Two-level state started in psi_L, written in the left/right basis.
inline ComplexField1D evolve_two_level(const TwoLevelState& s, const Grid1D& grid, double t) {
  auto [left, right] = left_right_states(s, grid);
  const double hbar = s.units.hbar;
  const cplx global = detail::energy_phase(0.5 * (s.e0 + s.e1), t, hbar);
  const auto [c, sn] = detail::cos_sin(s.omega_tunnel, t);
  ComplexField1D out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    out[i] = global * (c * left[i] - cplx{0.0, sn} * right[i]);
  return out;
}

/// The same state written as a phase-evolved sum of eigenstates.
inline ComplexField1D evolve_two_level_eigenbasis(const TwoLevelState& s, const Grid1D& grid, double t) {
  const GridEigenstates eig = sample_eigenstates(s, grid);
  const cplx p0 = detail::energy_phase(s.e0, t, s.units.hbar);
  const cplx p1 = detail::energy_phase(s.e1, t, s.units.hbar);
  ComplexField1D out(grid);
  for (std::size_t i = 0; i < grid.size(); ++i)
    out[i] = (p0 * eig.psi0[i] + p1 * eig.psi1[i]) / std::numbers::sqrt2;
  return out;
}

/// Analytic left-well population cos^2(omega t) of the two-level model.
inline double population_left(const TwoLevelState& s, double t) {
  const auto c = detail::cos_sin(s.omega_tunnel, t).first;
  return c * c;
}

/// |<target|psi>|^2.
inline double projection_probability(const ComplexField1D& target, const ComplexField1D& psi) {
  return std::norm(inner_product(target, psi));
}

struct RegionProbabilities1D {
  double left_well = 0.0;
  double right_well = 0.0;
  double barrier = 0.0;
  double outside = 0.0;

  double total() const { return left_well + right_well + barrier + outside; }
};

/// Partition of the grid norm into the wells (edges included), the barrier and the rest.
inline RegionProbabilities1D region_probabilities(const ComplexField1D& psi, const DoubleWellParams& p) {
  RegionProbabilities1D r;
  const double lo = p.inner_edge();
  const double hi = p.outer_edge();
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double y = psi.grid.y(i);
    const double w = abs2(psi[i]) * psi.grid.dy();
    const double a = std::abs(y);
    if (a < lo)
      r.barrier += w;
    else if (a <= hi)
      (y < 0.0 ? r.left_well : r.right_well) += w;
    else
      r.outside += w;
  }
  return r;
}

namespace detail {

// Fourth-order first derivative on a non-periodic uniform grid: centred in the
// interior, one-sided five-point stencils on the two outermost nodes at each end.
template <class T>
std::vector<T> derivative_fd4(std::span<const T> f, double h) {
  const std::size_t n = f.size();
  if (n < 5) throw InvalidArgument("derivative: need at least 5 grid points");
  std::vector<T> d(n);
  const double inv = 1.0 / (12.0 * h);
  d[0] = (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) * inv;
  d[1] = (-3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]) * inv;
  for (std::size_t i = 2; i + 2 < n; ++i) d[i] = (f[i - 2] - 8.0 * f[i - 1] + 8.0 * f[i + 1] - f[i + 2]) * inv;
  d[n - 2] = (3.0 * f[n - 1] + 10.0 * f[n - 2] - 18.0 * f[n - 3] + 6.0 * f[n - 4] - f[n - 5]) * inv;
  d[n - 1] = (25.0 * f[n - 1] - 48.0 * f[n - 2] + 36.0 * f[n - 3] - 16.0 * f[n - 4] + 3.0 * f[n - 5]) * inv;
  return d;
}

}  // namespace detail

/// J = (hbar/m) Im(conj(psi) dpsi/dy).
inline std::vector<double> current_1d(const ComplexField1D& psi, const UnitsConfig& u = {}) {
  u.validate();
  const auto d = detail::derivative_fd4<cplx>(std::span<const cplx>(psi.values.data(), psi.size()), psi.grid.dy());
  std::vector<double> j(psi.size());
  for (std::size_t i = 0; i < psi.size(); ++i) j[i] = u.hbar / u.mass * std::imag(std::conj(psi[i]) * d[i]);
  return j;
}

struct Velocity1D {
  std::vector<double> v;             // NaN where masked
  std::vector<std::uint8_t> masked;  // 1 where |psi|^2 < rho_floor * max|psi|^2
  std::size_t masked_count = 0;
};

inline Velocity1D dbb_velocity_1d(const ComplexField1D& psi, const UnitsConfig& u = {},
                                  double rho_floor = 1e-12) {
  const std::vector<double> j = current_1d(psi, u);
  double peak = 0.0;
  for (const cplx& z : psi.values) peak = std::max(peak, abs2(z));
  Velocity1D out{std::vector<double>(psi.size()), std::vector<std::uint8_t>(psi.size(), 0), 0};
  const double floor = rho_floor * peak;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double rho = abs2(psi[i]);
    if (rho < floor || rho == 0.0) {
      out.v[i] = std::numeric_limits<double>::quiet_NaN();
      out.masked[i] = 1;
      ++out.masked_count;
    } else {
      out.v[i] = j[i] / rho;
    }
  }
  return out;
}

/// Two readings of the barrier-centre density that enters the closed-form current.
struct BarrierCentreDensity {
  double initial_state = 0.0;  // |psi_L(0)|^2 = psi0(0)^2 / 2
  double eigenstate = 0.0;     // psi0(0)^2, the amplitude of the even profile itself
};

inline BarrierCentreDensity barrier_centre_density(const TwoLevelState& s) {
  const double a0 = s.psi0(0.0);
  return {0.5 * a0 * a0, a0 * a0};
}

/// Closed-form barrier current of two deep, distant wells:
/// rho00 (hbar/m) sin((e1 - e0) t / hbar) / (2 L), L the mean decay length.
inline double barrier_current_estimate(const TwoLevelState& s, double rho00, double t,
                                       Warnings* warnings = nullptr) {
  if (!s.params.is_deep(s.units))
    warn(warnings, "barrier_current_estimate: wells are not in the deep regime; estimate is unreliable");
  const auto sn = -detail::cos_sin(2.0 * s.omega_tunnel, t).second;  // sin((e1-e0) t / hbar)
  return rho00 * (s.units.hbar / s.units.mass) * sn / (2.0 * s.mean_decay_length());
}

/// Exact velocity of the two-level state at (y, t), or nothing when the density
/// there is below rho_floor * peak_density.
inline std::optional<double> two_level_velocity(const TwoLevelState& s, double y, double t,
                                                double rho_floor = 1e-12) {
  const auto [f0, d0] = s.psi0.eval(y);
  const auto [f1, d1] = s.psi1.eval(y);
  const double l = (f0 + f1) / std::numbers::sqrt2;
  const double r = (f0 - f1) / std::numbers::sqrt2;
  const auto [c, sn] = detail::cos_sin(s.omega_tunnel, t);
  const double rho = c * c * l * l + sn * sn * r * r;
  if (rho < rho_floor * s.peak_density || rho == 0.0) return std::nullopt;
  const double wronskian = f0 * d1 - f1 * d0;  // r l' - l r'
  return s.units.hbar / s.units.mass * c * sn * wronskian / rho;
}

/// |psi(y, t)|^2 of the two-level state, evaluated analytically.
inline double two_level_density(const TwoLevelState& s, double y, double t) {
  const double f0 = s.psi0(y);
  const double f1 = s.psi1(y);
  const double l = (f0 + f1) / std::numbers::sqrt2;
  const double r = (f0 - f1) / std::numbers::sqrt2;
  const auto [c, sn] = detail::cos_sin(s.omega_tunnel, t);
  return c * c * l * l + sn * sn * r * r;
}

struct Trajectory1DOptions {
  double tolerance = 1e-10;   // absolute local error per adaptive step
  double rho_floor = 1e-12;   // relative to the peak density
  double half_width = 0.0;    // domain is [-half_width, half_width]; 0 picks a default
  bool record = true;         // keep the samples at each output time
};

/**
 * Integrates dy/dt = v(y, t) of the two-level state for every seed from t = 0
 * to t_end. Samples are recorded at the common times k*dt; between them an
 * adaptive step-doubling RK4 with steps no longer than dt keeps the local error
 * below the tolerance.
 */
inline std::vector<Trajectory1D> integrate_trajectories_1d(const TwoLevelState& s, std::span<const double> seeds,
                                                           double t_end, double dt,
                                                           const Trajectory1DOptions& opt = {}) {
  if (!(dt > 0.0)) throw InvalidArgument("integrate_trajectories_1d: dt must be positive");
  if (!(t_end >= 0.0)) throw InvalidArgument("integrate_trajectories_1d: t_end must be non-negative");
  const double half = opt.half_width > 0.0
                          ? opt.half_width
                          : s.params.outer_edge() + 40.0 * std::max(s.l0, s.l1);
  for (double y0 : seeds)
    if (!(std::abs(y0) <= half)) throw InvalidArgument("integrate_trajectories_1d: seed outside the domain");

  const auto n_out = static_cast<std::size_t>(std::ceil(t_end / dt - 1e-9));
  std::vector<Trajectory1D> result;
  result.reserve(seeds.size());

  // A stage that lands where the density is below the floor rejects the step;
  // only the accepted position itself entering such a region ends the path.
  auto vel = [&](double t, double y) { return two_level_velocity(s, y, t, opt.rho_floor); };
  auto rk4 = [&](double t, double y, double h) -> std::optional<double> {
    const auto k1 = vel(t, y);
    if (!k1) return std::nullopt;
    const auto k2 = vel(t + h / 2, y + h / 2 * *k1);
    if (!k2) return std::nullopt;
    const auto k3 = vel(t + h / 2, y + h / 2 * *k2);
    if (!k3) return std::nullopt;
    const auto k4 = vel(t + h, y + h * *k3);
    if (!k4) return std::nullopt;
    return y + h / 6 * (*k1 + 2 * *k2 + 2 * *k3 + *k4);
  };

  for (double y0 : seeds) {
    Trajectory1D tr;
    tr.seed = y0;
    if (opt.record) {
      tr.t.reserve(n_out + 1);
      tr.y.reserve(n_out + 1);
      tr.t.push_back(0.0);
      tr.y.push_back(y0);
    }
    double t = 0.0, y = y0, h = dt;
    if (!vel(t, y)) tr.termination = Termination::entered_masked_region;
    for (std::size_t k = 1; k <= n_out && tr.termination == Termination::completed; ++k) {
      const double t_next = std::min(t_end, static_cast<double>(k) * dt);
      while (t < t_next && tr.termination == Termination::completed) {
        h = std::min(h, t_next - t);
        const double h_min = 1e-12 * dt;
        const auto full = rk4(t, y, h);
        const auto halfstep = full ? rk4(t, y, h / 2) : std::nullopt;
        const auto two = halfstep ? rk4(t + h / 2, *halfstep, h / 2) : std::nullopt;
        if (!two) {
          if (h <= h_min) tr.termination = Termination::entered_masked_region;
          h = std::max(h_min, h / 4);
          continue;
        }
        const double err = std::abs(*two - *full) / 15.0;
        if (err <= opt.tolerance || h <= h_min) {
          y = *two + (*two - *full) / 15.0;
          t = (t_next - t <= h) ? t_next : t + h;
          const double grow = err > 0.0 ? 0.9 * std::pow(opt.tolerance / err, 0.2) : 2.0;
          h = std::min(dt, h * std::clamp(grow, 0.2, 2.0));
          if (std::abs(y) > half)
            tr.termination = Termination::left_domain;
          else if (!vel(t, y))
            tr.termination = Termination::entered_masked_region;
        } else {
          h = std::max(h_min, h * std::max(0.2, 0.9 * std::pow(opt.tolerance / err, 0.2)));
        }
      }
      if (opt.record) {
        tr.t.push_back(t);
        tr.y.push_back(y);
      }
    }
    if (!opt.record) {
      tr.t.push_back(t);
      tr.y.push_back(y);
    }
    result.push_back(std::move(tr));
  }
  return result;
}

}  // namespace bohmwg
