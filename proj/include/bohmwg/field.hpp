#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <new>
#include <span>
#include <vector>

#include "bohmwg/errors.hpp"
#include "bohmwg/grid.hpp"

namespace bohmwg {

using cplx = std::complex<double>;

/// 64-byte aligned storage so FFTW plans made on one buffer can execute on any field.
template <class T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() noexcept = default;
  template <class U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, alignment); }

  template <class U>
  bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

template <class T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

/// Scalar field sampled on the nodes of a Grid2D, stored y-fastest.
template <class T>
class Field2D {
 public:
  using value_type = T;

  Field2D() = default;
  explicit Field2D(const Grid2D& grid, T fill = T{}) : grid_(grid), values_(grid.size(), fill) {}

  const Grid2D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  T& operator()(std::size_t i, std::size_t j) { return values_[grid_.index(i, j)]; }
  const T& operator()(std::size_t i, std::size_t j) const { return values_[grid_.index(i, j)]; }
  T& operator[](std::size_t k) { return values_[k]; }
  const T& operator[](std::size_t k) const { return values_[k]; }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }

 private:
  Grid2D grid_;
  AlignedVector<T> values_;
};

using ComplexField2D = Field2D<cplx>;
using RealField2D = Field2D<double>;

struct VectorField2D {
  RealField2D x;
  RealField2D y;
};

inline double abs2(cplx z) { return z.real() * z.real() + z.imag() * z.imag(); }

template <class T>
bool all_finite(const Field2D<T>& f) {
  return std::all_of(f.values().begin(), f.values().end(), [](const T& v) {
    if constexpr (std::is_same_v<T, cplx>)
      return std::isfinite(v.real()) && std::isfinite(v.imag());
    else
      return std::isfinite(v);
  });
}

/// Sum of |psi|^2 dx dy over the grid.
inline double norm2(const ComplexField2D& f) {
  double s = 0.0;
  for (const cplx& v : f.values()) s += abs2(v);
  return s * f.grid().cell_area();
}

inline void normalize(ComplexField2D& f) {
  const double n = norm2(f);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("normalize: field has zero or non-finite norm");
  const double scale = 1.0 / std::sqrt(n);
  for (cplx& v : f.values()) v *= scale;
}

inline RealField2D density(const ComplexField2D& f) {
  RealField2D out(f.grid());
  for (std::size_t k = 0; k < f.size(); ++k) out[k] = abs2(f[k]);
  return out;
}

inline double max_density(const ComplexField2D& f) {
  double m = 0.0;
  for (const cplx& v : f.values()) m = std::max(m, abs2(v));
  return m;
}

/// max |psi|^2 over the outermost `width` rows and columns divided by the peak |psi|^2.
inline double edge_density_ratio(const ComplexField2D& f, std::size_t width = 2) {
  const Grid2D& g = f.grid();
  const double peak = max_density(f);
  if (peak == 0.0) return 0.0;
  double edge = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i) {
    const bool x_edge = i < width || i + width >= g.nx();
    for (std::size_t j = 0; j < g.ny(); ++j) {
      if (x_edge || j < width || j + width >= g.ny()) edge = std::max(edge, abs2(f(i, j)));
    }
  }
  return edge / peak;
}

/// Inner product <a|b> = sum conj(a) b dx dy.
inline cplx inner_product(const ComplexField2D& a, const ComplexField2D& b) {
  if (!(a.grid() == b.grid())) throw InvalidArgument("inner_product: grid mismatch");
  cplx s{0.0, 0.0};
  for (std::size_t k = 0; k < a.size(); ++k) s += std::conj(a[k]) * b[k];
  return s * a.grid().cell_area();
}

/// Complex amplitude on a Grid1D.
struct ComplexField1D {
  Grid1D grid;
  AlignedVector<cplx> values;

  ComplexField1D() = default;
  explicit ComplexField1D(const Grid1D& g) : grid(g), values(g.size()) {}
  std::size_t size() const { return values.size(); }
  cplx& operator[](std::size_t i) { return values[i]; }
  const cplx& operator[](std::size_t i) const { return values[i]; }
};

inline double norm2(const ComplexField1D& f) {
  double s = 0.0;
  for (const cplx& v : f.values) s += abs2(v);
  return s * f.grid.dy();
}

inline void normalize(ComplexField1D& f) {
  const double n = norm2(f);
  if (!(n > 0.0) || !std::isfinite(n)) throw InvalidArgument("normalize: field has zero or non-finite norm");
  const double scale = 1.0 / std::sqrt(n);
  for (cplx& v : f.values) v *= scale;
}

inline cplx inner_product(const ComplexField1D& a, const ComplexField1D& b) {
  if (!(a.grid == b.grid)) throw InvalidArgument("inner_product: grid mismatch");
  cplx s{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) s += std::conj(a[i]) * b[i];
  return s * a.grid.dy();
}

}  // namespace bohmwg
