#pragma once

#include <fftw3.h>

#include <cstdlib>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "bohmwg/field.hpp"
#include "bohmwg/grid.hpp"

namespace bohmwg {

namespace detail {

// The FFTW planner is not re-entrant; plan creation and destruction go through this lock.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

inline int fftw_thread_count() {
  static const int n = [] {
    const char* env = std::getenv("BOHMWG_THREADS");
    int v = env != nullptr ? std::atoi(env) : 1;
    if (v > 1) {
      fftw_init_threads();
      return v;
    }
    return 1;
  }();
  return n;
}

inline fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Threads used by the transforms and by trajectory batches. Set from BOHMWG_THREADS.
inline int configured_threads() { return detail::fftw_thread_count(); }

/**
 * In-place, unnormalized complex DFT pair over an n0 x n1 row-major array
 * (n1 == 1 gives a 1D transform). Plans use FFTW_ESTIMATE so the chosen
 * algorithm, and therefore every output bit, is reproducible run to run.
 */
class FftPlan {
 public:
  FftPlan(std::size_t n0, std::size_t n1) : n0_(n0), n1_(n1) {
    AlignedVector<cplx> scratch(n0 * n1);
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_plan_with_nthreads(detail::fftw_thread_count());
    auto* buf = detail::as_fftw(scratch.data());
    if (n1 == 1) {
      fwd_ = fftw_plan_dft_1d(static_cast<int>(n0), buf, buf, FFTW_FORWARD, FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_1d(static_cast<int>(n0), buf, buf, FFTW_BACKWARD, FFTW_ESTIMATE);
    } else {
      fwd_ = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1), buf, buf, FFTW_FORWARD,
                              FFTW_ESTIMATE);
      bwd_ = fftw_plan_dft_2d(static_cast<int>(n0), static_cast<int>(n1), buf, buf, FFTW_BACKWARD,
                              FFTW_ESTIMATE);
    }
    if (fwd_ == nullptr || bwd_ == nullptr) throw InvalidArgument("fft: planner failed");
  }
  explicit FftPlan(const Grid2D& g) : FftPlan(g.nx(), g.ny()) {}

  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  ~FftPlan() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
  }

  std::size_t size() const { return n0_ * n1_; }

  /// data must hold size() elements and come from an AlignedVector.
  void forward(cplx* data) const { fftw_execute_dft(fwd_, detail::as_fftw(data), detail::as_fftw(data)); }
  void backward(cplx* data) const { fftw_execute_dft(bwd_, detail::as_fftw(data), detail::as_fftw(data)); }

 private:
  std::size_t n0_;
  std::size_t n1_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

/**
 * Momentum-space representation of a ComplexField2D.
 *
 * Bin (i, j) holds (dx dy / 2 pi) * sum_r psi(r) exp(-i k.(r - r_min)), the
 * discrete approximation of the continuous Fourier transform, so that
 * sum |phi|^2 dkx dky equals norm2 of the spatial field.
 */
class SpectralField2D {
 public:
  SpectralField2D() = default;
  explicit SpectralField2D(const Grid2D& grid) : values_(grid) {}

  const Grid2D& grid() const { return values_.grid(); }
  cplx& operator()(std::size_t i, std::size_t j) { return values_(i, j); }
  const cplx& operator()(std::size_t i, std::size_t j) const { return values_(i, j); }
  ComplexField2D& raw() { return values_; }
  const ComplexField2D& raw() const { return values_; }

 private:
  ComplexField2D values_;
};

inline double spectral_norm2(const SpectralField2D& s) {
  double sum = 0.0;
  for (const cplx& v : s.raw().values()) sum += abs2(v);
  return sum * s.grid().dkx() * s.grid().dky();
}

inline SpectralField2D forward_transform(const ComplexField2D& f, const FftPlan& plan) {
  if (plan.size() != f.size()) throw InvalidArgument("forward_transform: plan/field size mismatch");
  SpectralField2D out(f.grid());
  std::copy(f.values().begin(), f.values().end(), out.raw().data());
  plan.forward(out.raw().data());
  const double scale = f.grid().cell_area() / (2.0 * std::numbers::pi);
  for (cplx& v : out.raw().values()) v *= scale;
  return out;
}

inline ComplexField2D inverse_transform(const SpectralField2D& s, const FftPlan& plan) {
  if (plan.size() != s.raw().size()) throw InvalidArgument("inverse_transform: plan/field size mismatch");
  ComplexField2D out = s.raw();
  plan.backward(out.data());
  const Grid2D& g = s.grid();
  const double scale = 2.0 * std::numbers::pi / (g.cell_area() * static_cast<double>(g.size()));
  for (cplx& v : out.values()) v *= scale;
  return out;
}

/**
 * Band-limited interpolation onto a grid rx times finer in x and ry times
 * finer in y with the same origin: the spectrum is zero-padded and the Nyquist
 * coefficient of an even axis is split evenly between +k and -k, so a real
 * field stays real and the original nodes are reproduced to rounding.
 */
inline ComplexField2D refine_spectral(const ComplexField2D& f, std::size_t rx, std::size_t ry,
                                      const FftPlan* coarse_plan = nullptr, const FftPlan* fine_plan = nullptr) {
  if (rx < 1 || ry < 1) throw InvalidArgument("refine_spectral: factors must be at least 1");
  if (rx == 1 && ry == 1) return f;
  const Grid2D& g = f.grid();
  const Grid2D fine(g.nx() * rx, g.ny() * ry, g.dx() / static_cast<double>(rx), g.dy() / static_cast<double>(ry),
                    g.x_min(), g.y_min());
  std::unique_ptr<FftPlan> own_coarse, own_fine;
  if (coarse_plan == nullptr) coarse_plan = (own_coarse = std::make_unique<FftPlan>(g)).get();
  if (fine_plan == nullptr) fine_plan = (own_fine = std::make_unique<FftPlan>(fine)).get();
  if (coarse_plan->size() != g.size() || fine_plan->size() != fine.size())
    throw InvalidArgument("refine_spectral: plan size mismatch");

  ComplexField2D spec = f;
  coarse_plan->forward(spec.data());
  // Each coarse bin maps to one or two fine bins with a weight of 1 or 1/2.
  auto targets = [](std::size_t i, std::size_t n, std::size_t r) {
    std::vector<std::pair<std::size_t, double>> out;
    const std::size_t nf = n * r;
    if (n % 2 == 0 && i == n / 2 && r > 1) {
      out.emplace_back(n / 2, 0.5);
      out.emplace_back(nf - n / 2, 0.5);
    } else if (i <= (n - 1) / 2 || r == 1) {
      out.emplace_back(i, 1.0);
    } else {
      out.emplace_back(nf - (n - i), 1.0);
    }
    return out;
  };
  ComplexField2D out(fine, cplx{0.0, 0.0});
  const double inv_n = 1.0 / static_cast<double>(g.size());
  std::vector<std::vector<std::pair<std::size_t, double>>> ty(g.ny());
  for (std::size_t j = 0; j < g.ny(); ++j) ty[j] = targets(j, g.ny(), ry);
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const auto tx = targets(i, g.nx(), rx);
    for (std::size_t j = 0; j < g.ny(); ++j) {
      const cplx v = spec(i, j) * inv_n;
      for (const auto& [fj, wy] : ty[j])
        for (const auto& [fi, wx] : tx) out(fi, fj) += v * (wx * wy);
    }
  }
  fine_plan->backward(out.data());
  return out;
}

inline SpectralField2D forward_transform(const ComplexField2D& f) {
  const FftPlan plan(f.grid());
  return forward_transform(f, plan);
}

inline ComplexField2D inverse_transform(const SpectralField2D& s) {
  const FftPlan plan(s.grid());
  return inverse_transform(s, plan);
}

}  // namespace bohmwg
