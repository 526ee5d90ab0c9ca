#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "bohmwg/cf2d.hpp"
#include "bohmwg/errors.hpp"
#include "bohmwg/field.hpp"
#include "bohmwg/potentials.hpp"

namespace bohmwg {

enum class Colormap { gray, heat };

inline std::optional<Colormap> parse_colormap(std::string_view s) {
  if (s == "gray" || s == "grey") return Colormap::gray;
  if (s == "heat") return Colormap::heat;
  return std::nullopt;
}

struct RenderOptions {
  Colormap colormap = Colormap::heat;
  bool log_scale = true;
  double log_floor = 1e-12;                    // relative to the maximum
  std::optional<WaveguideGeometry> outline;    // draw the guide boundaries when set
};

/// 8-bit RGB raster, rows top to bottom.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;

  std::array<std::uint8_t, 3> pixel(std::size_t col, std::size_t row) const {
    const std::size_t k = 3 * (row * width + col);
    return {rgb[k], rgb[k + 1], rgb[k + 2]};
  }
  void set(std::size_t col, std::size_t row, std::array<std::uint8_t, 3> c) {
    const std::size_t k = 3 * (row * width + col);
    rgb[k] = c[0];
    rgb[k + 1] = c[1];
    rgb[k + 2] = c[2];
  }
};

inline std::array<std::uint8_t, 3> colour(Colormap map, double t) {
  t = std::isfinite(t) ? std::clamp(t, 0.0, 1.0) : 0.0;
  auto byte = [](double v) { return static_cast<std::uint8_t>(std::lround(255.0 * std::clamp(v, 0.0, 1.0))); };
  if (map == Colormap::gray) return {byte(t), byte(t), byte(t)};
  // black, red, yellow, white
  return {byte(3.0 * t), byte(3.0 * t - 1.0), byte(3.0 * t - 2.0)};
}

/**
 * Complex fields are drawn as |psi|^2; fields whose imaginary parts are all
 * zero are drawn as their real values (magnitudes on a log scale). Column i is
 * x(i); the top row is the largest y. Non-finite samples render as the floor.
 */
inline Image render_heatmap(const ComplexField2D& f, const RenderOptions& opt = {}) {
  if (!(opt.log_floor > 0.0 && opt.log_floor < 1.0)) throw InvalidArgument("render: log_floor must be in (0, 1)");
  const Grid2D& g = f.grid();
  const bool real = std::all_of(f.values().begin(), f.values().end(), [](const cplx& z) { return z.imag() == 0.0; });
  std::vector<double> q(f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    const double v = real ? f[k].real() : abs2(f[k]);
    q[k] = std::isfinite(v) ? v : 0.0;
  }
  if (opt.log_scale)
    for (double& v : q) v = std::abs(v);
  const auto [lo_it, hi_it] = std::minmax_element(q.begin(), q.end());
  const double lo = *lo_it, hi = *hi_it;

  std::vector<double> t(q.size(), 0.0);
  if (opt.log_scale) {
    if (hi > 0.0) {
      const double floor = hi * opt.log_floor;
      const double span = -std::log10(opt.log_floor);
      for (std::size_t k = 0; k < q.size(); ++k) t[k] = (std::log10(std::max(q[k], floor)) - std::log10(floor)) / span;
    }
  } else if (hi > lo) {
    for (std::size_t k = 0; k < q.size(); ++k) t[k] = (q[k] - lo) / (hi - lo);
  } else if (hi != 0.0) {
    std::fill(t.begin(), t.end(), 1.0);
  }

  Image img{g.nx(), g.ny(), std::vector<std::uint8_t>(3 * g.size())};
  for (std::size_t i = 0; i < g.nx(); ++i)
    for (std::size_t j = 0; j < g.ny(); ++j) img.set(i, g.ny() - 1 - j, colour(opt.colormap, t[g.index(i, j)]));

  if (opt.outline) {
    const WaveguideGeometry& geo = *opt.outline;
    const std::array<std::uint8_t, 3> ink{0, 255, 255};
    auto col_of = [&](double x) { return std::lround((x - g.x_min()) / g.dx()); };
    auto row_of = [&](double y) { return static_cast<long>(g.ny()) - 1 - std::lround((y - g.y_min()) / g.dy()); };
    auto plot = [&](long c, long r) {
      if (c >= 0 && r >= 0 && c < static_cast<long>(g.nx()) && r < static_cast<long>(g.ny()))
        img.set(static_cast<std::size_t>(c), static_cast<std::size_t>(r), ink);
    };
    auto rect = [&](double x0, double x1, double y0, double y1) {
      const long c0 = col_of(x0), c1 = col_of(x1), r0 = row_of(y1), r1 = row_of(y0);
      for (long c = c0; c <= c1; ++c) {
        plot(c, r0);
        plot(c, r1);
      }
      for (long r = r0; r <= r1; ++r) {
        plot(c0, r);
        plot(c1, r);
      }
    };
    rect(-geo.length / 2.0, geo.length / 2.0, geo.main_y_min(), geo.main_y_max());
    rect(0.0, geo.length / 2.0, geo.aux_y_min(), geo.aux_y_max());
  }
  return img;
}

/// Binary PPM (P6, maxval 255).
inline void write_ppm(std::ostream& os, const Image& img) {
  os << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  os.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!os) throw IoError("ppm: write failed");
}

/// Reads a CF2D file and writes its heatmap, replacing `out` atomically.
inline void render_heatmap_file(const std::filesystem::path& in, const std::filesystem::path& out,
                                const RenderOptions& opt = {}) {
  const Image img = render_heatmap(read_cf2d_file(in), opt);
  std::filesystem::path tmp = out;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("ppm: cannot open " + tmp.string());
    write_ppm(os, img);
    os.close();
    if (!os) throw IoError("ppm: write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, out, ec);
  if (ec) throw IoError("ppm: cannot rename " + tmp.string() + ": " + ec.message());
}

}  // namespace bohmwg
