#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "bohmwg/errors.hpp"
#include "bohmwg/fft.hpp"
#include "bohmwg/field.hpp"
#include "bohmwg/grid.hpp"

namespace bohmwg {

// Strang split-operator step for a 1D periodic grid:
// exp(-i V dt/2hbar) F^-1 exp(-i hbar k^2 dt/2m) F exp(-i V dt/2hbar).
class SplitOperator1D {
 public:
  SplitOperator1D(const Grid1D& grid, std::span<const double> potential, double dt, const UnitsConfig& u = {})
      : grid_(grid), dt_(dt), plan_(grid.size(), 1), half_v_(grid.size()), kinetic_(grid.size()) {
    u.validate();
    if (potential.size() != grid.size()) throw InvalidArgument("split operator: potential/grid size mismatch");
    if (!(dt > 0.0)) throw InvalidArgument("split operator: dt must be positive");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      half_v_[i] = std::polar(1.0, -potential[i] * dt / (2.0 * u.hbar));
      const double k = grid.k(i);
      kinetic_[i] = std::polar(1.0 / static_cast<double>(grid.size()), -u.hbar * k * k * dt / (2.0 * u.mass));
    }
  }

  const Grid1D& grid() const { return grid_; }
  double dt() const { return dt_; }

  void step(ComplexField1D& psi) {
    if (!(psi.grid == grid_)) throw InvalidArgument("split operator: field grid mismatch");
    step_raw(psi.values.data());
  }

  void run(ComplexField1D& psi, std::uint64_t steps) {
    for (std::uint64_t s = 0; s < steps; ++s) step(psi);
  }

  /// Dense matrix of one step, column j being the image of the j-th unit vector.
  Eigen::MatrixXcd matrix() {
    const std::size_t n = grid_.size();
    Eigen::MatrixXcd m(n, n);
    AlignedVector<cplx> col(n);
    for (std::size_t j = 0; j < n; ++j) {
      std::fill(col.begin(), col.end(), cplx{0.0, 0.0});
      col[j] = 1.0;
      step_raw(col.data());
      for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    return m;
  }

 private:
  void step_raw(cplx* p) {
    const std::size_t n = grid_.size();
    for (std::size_t i = 0; i < n; ++i) p[i] *= half_v_[i];
    plan_.forward(p);
    for (std::size_t i = 0; i < n; ++i) p[i] *= kinetic_[i];
    plan_.backward(p);
    for (std::size_t i = 0; i < n; ++i) p[i] *= half_v_[i];
  }

  Grid1D grid_;
  double dt_;
  FftPlan plan_;
  AlignedVector<cplx> half_v_;
  AlignedVector<cplx> kinetic_;
};

/// m-th power of a square matrix by repeated squaring.
inline Eigen::MatrixXcd matrix_power(const Eigen::MatrixXcd& a, std::uint64_t m) {
  if (a.rows() != a.cols()) throw InvalidArgument("matrix_power: matrix must be square");
  Eigen::MatrixXcd result = Eigen::MatrixXcd::Identity(a.rows(), a.cols());
  Eigen::MatrixXcd base = a;
  while (m > 0) {
    if (m & 1u) result = result * base;
    m >>= 1u;
    if (m > 0) base = base * base;
  }
  return result;
}

/**
 * Exact repeated application of a split-operator step for step counts far
 * beyond direct stepping: the step is assembled into a dense matrix U, U^m is
 * formed once, and states are advanced m steps at a time by one product.
 */
class StepPowerPropagator {
 public:
  StepPowerPropagator(SplitOperator1D& op, std::uint64_t steps_per_call)
      : grid_(op.grid()), steps_(steps_per_call), power_(matrix_power(op.matrix(), steps_per_call)) {}

  std::uint64_t steps_per_call() const { return steps_; }

  void advance(ComplexField1D& psi) const {
    if (!(psi.grid == grid_)) throw InvalidArgument("step power: field grid mismatch");
    Eigen::Map<const Eigen::VectorXcd> in(psi.values.data(), static_cast<Eigen::Index>(psi.size()));
    Eigen::VectorXcd out = power_ * in;
    for (std::size_t i = 0; i < psi.size(); ++i) psi[i] = out(static_cast<Eigen::Index>(i));
  }

 private:
  Grid1D grid_;
  std::uint64_t steps_;
  Eigen::MatrixXcd power_;
};

}  // namespace bohmwg
