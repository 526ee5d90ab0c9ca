#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "bohmwg/cf2d.hpp"
#include "bohmwg/fft.hpp"
#include "bohmwg/field.hpp"
#include "bohmwg/grid.hpp"

using namespace bohmwg;

namespace {

ComplexField2D random_field(const Grid2D& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  ComplexField2D f(g);
  for (cplx& v : f.values()) v = {n(rng), n(rng)};
  return f;
}

double max_abs_diff(const ComplexField2D& a, const ComplexField2D& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

}  // namespace

TEST(Grid, TwoByTwoUnitSpacing) {
  const Grid2D g = make_grid(2, 2, 1.0, 1.0, 0.0, 0.0);
  EXPECT_DOUBLE_EQ(g.dx(), 0.5);
  EXPECT_DOUBLE_EQ(g.dy(), 0.5);
  EXPECT_DOUBLE_EQ(g.lx(), 1.0);
}

TEST(Grid, MomentumOrderingFollowsDft) {
  const Grid2D g = make_grid(4, 4, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 0.0, 0.0);
  const double expect[] = {0.0, 1.0, -2.0, -1.0};
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(g.kx(i), expect[i], 1e-15);
    EXPECT_NEAR(g.ky(i), expect[i], 1e-15);
  }
}

TEST(Grid, OddSizeMomentumOrdering) {
  const Grid1D g(5, 2.0 * std::numbers::pi / 5.0, 0.0);
  const double expect[] = {0.0, 1.0, 2.0, -2.0, -1.0};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_NEAR(g.k(i), expect[i], 1e-14);
}

TEST(Grid, FullScaleSpacingNearThreeHundredths) {
  const Grid2D g = make_grid(3072, 1024, 120.0, 48.0, -60.0, -13.0);
  EXPECT_NEAR(g.dx(), 0.039, 1e-3);
  EXPECT_NEAR(g.dy(), 0.047, 1e-3);
  EXPECT_LT(g.dx(), 0.05);
}

TEST(Grid, RejectsInvalidArguments) {
  EXPECT_THROW(make_grid(1, 4, 1.0, 1.0, 0.0, 0.0), InvalidArgument);
  EXPECT_THROW(make_grid(4, 4, 0.0, 1.0, 0.0, 0.0), InvalidArgument);
  EXPECT_THROW(make_grid(4, 4, 1.0, -1.0, 0.0, 0.0), InvalidArgument);
  EXPECT_THROW(Grid1D(1, 0.1, 0.0), InvalidArgument);
}

TEST(Grid, IndexIsYFastest) {
  const Grid2D g = make_grid(3, 5, 3.0, 5.0, 0.0, 0.0);
  EXPECT_EQ(g.index(0, 1), 1u);
  EXPECT_EQ(g.index(1, 0), 5u);
  EXPECT_EQ(g.index(2, 4), 14u);
}

TEST(Units, RejectNonPositive) {
  EXPECT_THROW((UnitsConfig{0.0, 1.0}.validate()), InvalidArgument);
  EXPECT_THROW((UnitsConfig{1.0, -1.0}.validate()), InvalidArgument);
  EXPECT_NO_THROW(UnitsConfig{}.validate());
}

TEST(Norm, ZeroFieldIsZero) {
  const ComplexField2D f(make_grid(8, 8, 1.0, 1.0, 0.0, 0.0));
  EXPECT_EQ(norm2(f), 0.0);
  ComplexField2D g = f;
  EXPECT_THROW(normalize(g), InvalidArgument);
}

TEST(Norm, QuadraticScaling) {
  ComplexField2D f = random_field(make_grid(16, 12, 2.0, 3.0, -1.0, 0.5), 3);
  const double n = norm2(f);
  for (cplx& v : f.values()) v *= 2.0;
  EXPECT_NEAR(norm2(f), 4.0 * n, 1e-12 * n);
}

TEST(Norm, NormalizedGaussianHasUnitNorm) {
  const Grid2D g = make_grid(128, 96, 12.0, 10.0, -6.0, -5.0);
  ComplexField2D f(g);
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      f(i, j) = std::exp(-(g.x(i) * g.x(i) + g.y(j) * g.y(j)) / 0.5) * std::polar(1.0, 3.0 * g.x(i));
  normalize(f);
  EXPECT_NEAR(norm2(f), 1.0, 1e-12);
}

TEST(Transform, ConstantFieldHasOnlyZeroMode) {
  const Grid2D g = make_grid(16, 8, 4.0, 2.0, 0.0, 0.0);
  const ComplexField2D f(g, cplx{1.5, -0.5});
  const SpectralField2D s = forward_transform(f);
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      if (i != 0 || j != 0) {
        EXPECT_LT(std::abs(s(i, j)), 1e-13);
      }
  EXPECT_GT(std::abs(s(0, 0)), 1.0);
}

TEST(Transform, PlaneWaveLandsInOneBin) {
  const Grid2D g = make_grid(32, 16, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 0.0, 0.0);
  ComplexField2D f(g);
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) f(i, j) = std::polar(1.0, 3.0 * g.x(i) - 2.0 * g.y(j));
  const SpectralField2D s = forward_transform(f);
  std::size_t nonzero = 0;
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      if (std::abs(s(i, j)) > 1e-10) {
        ++nonzero;
        EXPECT_NEAR(g.kx(i), 3.0, 1e-12);
        EXPECT_NEAR(g.ky(j), -2.0, 1e-12);
      }
  EXPECT_EQ(nonzero, 1u);
}

TEST(Transform, RoundTripIsIdentity) {
  for (auto [nx, ny] : {std::pair<std::size_t, std::size_t>{16, 16}, {64, 48}, {256, 128}, {30, 17}}) {
    const Grid2D g = make_grid(nx, ny, 3.0, 7.0, -1.0, 2.0);
    const ComplexField2D f = random_field(g, nx * 31 + ny);
    const FftPlan plan(g);
    const ComplexField2D back = inverse_transform(forward_transform(f, plan), plan);
    double scale = 0.0;
    for (const cplx& v : f.values()) scale = std::max(scale, std::abs(v));
    EXPECT_LT(max_abs_diff(f, back) / scale, 1e-13) << nx << "x" << ny;
  }
}

TEST(Transform, ParsevalHoldsForRandomFields) {
  // Property: position- and momentum-space norms agree for arbitrary fields and grids.
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> size(2, 200);
  std::uniform_real_distribution<double> ext(0.1, 50.0);
  for (int trial = 0; trial < 25; ++trial) {
    const Grid2D g = make_grid(size(rng), size(rng), ext(rng), ext(rng), -ext(rng), ext(rng));
    const ComplexField2D f = random_field(g, static_cast<std::uint64_t>(trial));
    const double n = norm2(f);
    EXPECT_NEAR(spectral_norm2(forward_transform(f)), n, 1e-12 * n) << "trial " << trial;
  }
}

TEST(Transform, LargeRoundTrip) {
  const Grid2D g = make_grid(4096, 4096, 1.0, 1.0, 0.0, 0.0);
  const ComplexField2D f = random_field(g, 11);
  const FftPlan plan(g);
  const ComplexField2D back = inverse_transform(forward_transform(f, plan), plan);
  double scale = 0.0;
  for (const cplx& v : f.values()) scale = std::max(scale, std::abs(v));
  EXPECT_LT(max_abs_diff(f, back) / scale, 1e-13);
}

TEST(Transform, SizeMismatchIsRejected) {
  const Grid2D a = make_grid(8, 8, 1.0, 1.0, 0.0, 0.0);
  const Grid2D b = make_grid(16, 8, 1.0, 1.0, 0.0, 0.0);
  const FftPlan plan(a);
  EXPECT_THROW(forward_transform(ComplexField2D(b), plan), InvalidArgument);
  EXPECT_THROW(inverse_transform(SpectralField2D(b), plan), InvalidArgument);
}

TEST(Field, EdgeDensityRatio) {
  const Grid2D g = make_grid(10, 10, 1.0, 1.0, 0.0, 0.0);
  ComplexField2D f(g);
  f(5, 5) = 2.0;
  EXPECT_EQ(edge_density_ratio(f), 0.0);
  f(1, 5) = 1.0;
  EXPECT_DOUBLE_EQ(edge_density_ratio(f), 0.25);
  f(1, 5) = 0.0;
  f(5, 2) = 1.0;  // third row from the edge is interior
  EXPECT_EQ(edge_density_ratio(f), 0.0);
}

TEST(Field, AllFiniteDetectsNan) {
  ComplexField2D f(make_grid(4, 4, 1.0, 1.0, 0.0, 0.0));
  EXPECT_TRUE(all_finite(f));
  f(2, 3) = cplx{std::nan(""), 0.0};
  EXPECT_FALSE(all_finite(f));
}

TEST(Cf2d, BitExactRoundTrip) {
  const Grid2D g = make_grid(37, 19, 1.234567890123, 0.1, -0.3333333333333333, 1e-7);
  ComplexField2D f = random_field(g, 5);
  f(0, 0) = cplx{-0.0, std::numeric_limits<double>::denorm_min()};
  std::stringstream ss;
  write_cf2d(ss, f);
  const ComplexField2D r = read_cf2d(ss);
  ASSERT_TRUE(r.grid() == g);
  for (std::size_t k = 0; k < f.size(); ++k) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(f[k].real()), std::bit_cast<std::uint64_t>(r[k].real()));
    EXPECT_EQ(std::bit_cast<std::uint64_t>(f[k].imag()), std::bit_cast<std::uint64_t>(r[k].imag()));
  }
}

TEST(Cf2d, HeaderDeclaresLayout) {
  std::stringstream ss;
  write_cf2d(ss, ComplexField2D(make_grid(2, 3, 1.0, 1.5, 0.0, 0.0)));
  std::string header;
  std::getline(ss, header);
  EXPECT_EQ(header, "CF2D 1 2 3 0.5 0.5 0 0 yfast");
}

TEST(Cf2d, RejectsBadInput) {
  std::stringstream bad_magic("CFXX 1 2 2 1 1 0 0 yfast\n");
  EXPECT_THROW(read_cf2d(bad_magic), IoError);
  std::stringstream bad_layout("CF2D 1 2 2 1 1 0 0 xfast\n");
  EXPECT_THROW(read_cf2d(bad_layout), IoError);
  std::stringstream truncated("CF2D 1 2 2 1 1 0 0 yfast\nabc");
  EXPECT_THROW(read_cf2d(truncated), IoError);
  EXPECT_THROW(read_cf2d_file("/nonexistent/psi.cf2d"), IoError);
}

TEST(Cf2d, RealFieldHasZeroImaginaryPart) {
  RealField2D v(make_grid(3, 3, 1.0, 1.0, 0.0, 0.0), 7.5);
  std::stringstream ss;
  write_cf2d(ss, v);
  const ComplexField2D r = read_cf2d(ss);
  for (const cplx& z : r.values()) {
    EXPECT_EQ(z.real(), 7.5);
    EXPECT_EQ(z.imag(), 0.0);
  }
}

TEST(Refine, KeepsOriginalNodes) {
  const Grid2D g = make_grid(24, 16, 3.0, 2.0, -1.0, 0.5);
  const ComplexField2D f = random_field(g, 11);
  const ComplexField2D fine = refine_spectral(f, 3, 2);
  ASSERT_EQ(fine.grid().nx(), 72u);
  ASSERT_EQ(fine.grid().ny(), 32u);
  EXPECT_DOUBLE_EQ(fine.grid().x_min(), -1.0);
  EXPECT_NEAR(fine.grid().lx(), g.lx(), 1e-14);
  double worst = 0.0;
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) worst = std::max(worst, std::abs(fine(3 * i, 2 * j) - f(i, j)));
  EXPECT_LT(worst, 1e-12);
}

TEST(Refine, BandLimitedFieldIsExactBetweenNodes) {
  const Grid2D g = make_grid(16, 12, 2.0 * std::numbers::pi, 2.0 * std::numbers::pi, 0.0, 0.0);
  auto wave = [](double x, double y) { return std::polar(1.0, 5.0 * x - 3.0 * y) + 0.5 * std::cos(7.0 * x); };
  ComplexField2D f(g);
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) f(i, j) = wave(g.x(i), g.y(j));
  const ComplexField2D fine = refine_spectral(f, 4, 4);
  const Grid2D& h = fine.grid();
  double worst = 0.0;
  for (std::size_t i = 0; i < h.nx(); ++i)
    for (std::size_t j = 0; j < h.ny(); ++j) worst = std::max(worst, std::abs(fine(i, j) - wave(h.x(i), h.y(j))));
  EXPECT_LT(worst, 1e-12);
}

TEST(Refine, RealFieldStaysRealAndNormIsKept) {
  // An even axis carries a Nyquist term; splitting it keeps the result real.
  const Grid2D g = make_grid(8, 6, 1.0, 1.0, 0.0, 0.0);
  ComplexField2D f(g);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0.0, 1.0);
  for (cplx& v : f.values()) v = {n(rng), 0.0};
  const ComplexField2D fine = refine_spectral(f, 2, 3);
  for (const cplx& v : fine.values()) ASSERT_LT(std::abs(v.imag()), 1e-13);
  // Band-limited interpolation keeps the discrete norm except for the split
  // Nyquist terms, so compare against a field without them.
  ComplexField2D smooth(g);
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j)
      smooth(i, j) = std::cos(2.0 * std::numbers::pi * g.x(i)) + std::sin(2.0 * std::numbers::pi * 2.0 * g.y(j));
  EXPECT_NEAR(norm2(refine_spectral(smooth, 2, 3)), norm2(smooth), 1e-12);
}

TEST(Refine, FactorOneIsIdentityAndZeroIsRejected) {
  const Grid2D g = make_grid(8, 8, 1.0, 1.0, 0.0, 0.0);
  const ComplexField2D f = random_field(g, 2);
  EXPECT_EQ(max_abs_diff(refine_spectral(f, 1, 1), f), 0.0);
  EXPECT_THROW(refine_spectral(f, 0, 2), InvalidArgument);
}
