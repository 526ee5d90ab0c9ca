#pragma once

// "CF2D v1" field dump:
//   CF2D 1 <nx> <ny> <dx> <dy> <x_min> <y_min> <layout>\n
// followed by nx*ny little-endian float64 (re, im) pairs in the declared layout.
// Reals in the header are printed with 17 significant digits so they round-trip.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "bohmwg/field.hpp"

namespace bohmwg {

inline constexpr const char* kLayoutToken = "yfast";

namespace detail {

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::uint64_t to_little_endian(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) return __builtin_bswap64(v);
  return v;
}

}  // namespace detail

inline void write_cf2d(std::ostream& os, const ComplexField2D& f) {
  const Grid2D& g = f.grid();
  os << "CF2D 1 " << g.nx() << ' ' << g.ny() << ' ' << detail::format_real(g.dx()) << ' '
     << detail::format_real(g.dy()) << ' ' << detail::format_real(g.x_min()) << ' '
     << detail::format_real(g.y_min()) << ' ' << kLayoutToken << '\n';
  std::vector<std::uint64_t> words(2 * f.size());
  for (std::size_t k = 0; k < f.size(); ++k) {
    words[2 * k] = detail::to_little_endian(std::bit_cast<std::uint64_t>(f[k].real()));
    words[2 * k + 1] = detail::to_little_endian(std::bit_cast<std::uint64_t>(f[k].imag()));
  }
  os.write(reinterpret_cast<const char*>(words.data()),
           static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
  if (!os) throw IoError("cf2d: write failed");
}

inline void write_cf2d(std::ostream& os, const RealField2D& f) {
  ComplexField2D c(f.grid());
  for (std::size_t k = 0; k < f.size(); ++k) c[k] = cplx{f[k], 0.0};
  write_cf2d(os, c);
}

/// Writes next to the target and renames, so readers never see a partial file.
template <class Field>
void write_cf2d_file(const std::filesystem::path& path, const Field& f) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cf2d: cannot open " + tmp.string() + " for writing");
    write_cf2d(os, f);
    os.close();
    if (!os) throw IoError("cf2d: write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cf2d: cannot rename " + tmp.string() + ": " + ec.message());
}

inline ComplexField2D read_cf2d(std::istream& is) {
  std::string header;
  if (!std::getline(is, header)) throw IoError("cf2d: missing header");
  std::istringstream hs(header);
  std::string magic, layout;
  int version = 0;
  std::size_t nx = 0, ny = 0;
  std::string sdx, sdy, sx0, sy0;
  hs >> magic >> version >> nx >> ny >> sdx >> sdy >> sx0 >> sy0 >> layout;
  if (!hs || magic != "CF2D" || version != 1) throw IoError("cf2d: bad header '" + header + "'");
  if (layout != kLayoutToken) throw IoError("cf2d: unsupported layout '" + layout + "'");
  Grid2D grid;
  try {
    grid = Grid2D(nx, ny, std::stod(sdx), std::stod(sdy), std::stod(sx0), std::stod(sy0));
  } catch (const std::exception& e) {
    throw IoError(std::string("cf2d: invalid grid in header: ") + e.what());
  }
  std::vector<std::uint64_t> words(2 * grid.size());
  is.read(reinterpret_cast<char*>(words.data()),
          static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
  if (is.gcount() != static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)))
    throw IoError("cf2d: truncated payload");
  ComplexField2D f(grid);
  for (std::size_t k = 0; k < f.size(); ++k) {
    f[k] = cplx{std::bit_cast<double>(detail::to_little_endian(words[2 * k])),
                std::bit_cast<double>(detail::to_little_endian(words[2 * k + 1]))};
  }
  return f;
}

inline ComplexField2D read_cf2d_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cf2d: cannot open " + path.string());
  return read_cf2d(is);
}

}  // namespace bohmwg
