#pragma once

// Chaos-game sampling and rasterization of 1D/2D clouds to grayscale PGM.
// The random orbit is a heuristic approximation of the attractor (uniform
// symbol probabilities); it is cross-validated against the deterministic
// engine; it carries no convergence guarantee of its own.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <vector>

#include "cvxifs/errors.hpp"
#include "cvxifs/geometry.hpp"
#include "cvxifs/system.hpp"

namespace cvxifs {

// Seeded random orbit from the box center; the first burn_in points are
// discarded.  Deterministic for a fixed seed.
template <typename Scalar>
PointCloud<Scalar> chaos_game(const IFSSystem<Scalar>& sys, long long iters, long long burn_in,
                              std::uint64_t seed) {
  if (burn_in < 0 || iters <= burn_in)
    throw ValidationError("chaos_game: need iters > burn_in >= 0");
  std::mt19937_64 rng(seed);
  const auto next_symbol = [&]() -> Index {
    // multiply-shift keeps the draw deterministic across platforms
    return static_cast<Index>((static_cast<unsigned __int128>(rng()) *
                               static_cast<unsigned __int128>(sys.size())) >> 64);
  };
  Point<Scalar> x = sys.box().center();
  PointCloud<Scalar> out(iters - burn_in, sys.dim());
  for (long long k = 0; k < iters; ++k) {
    x = eval(sys.map(next_symbol()), x);
    if (k >= burn_in) out.row(k - burn_in) = x.transpose();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Raster: row-major counts with (0,0) the bottom-left cell of the viewport.

struct Raster {
  int width = 0, height = 0;
  std::vector<std::uint64_t> counts;      // counts[iy * width + ix], iy from bottom
  Eigen::Vector2d view_lo, view_hi;
  std::uint64_t dropped = 0;              // points outside the viewport

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (auto c : counts) t += c;
    return t;
  }
};

inline constexpr std::int64_t kMaxRasterPixels = 16'000'000;

// Floor-to-cell binning over half-open cells [lo + k*pitch, lo + (k+1)*pitch);
// 1D clouds sit on the y = 0 line of the viewport.
template <typename Scalar>
Raster rasterize(const PointCloud<Scalar>& points, int width, int height,
                 const Eigen::Vector2d& view_lo, const Eigen::Vector2d& view_hi) {
  require_cloud(points, "rasterize");
  if (points.cols() > 2) throw ValidationError("rasterize: only 1D and 2D clouds can be plotted");
  if (width < 1 || height < 1) throw ValidationError("rasterize: raster must be at least 1x1");
  if (static_cast<std::int64_t>(width) * height > kMaxRasterPixels)
    throw ValidationError("rasterize: raster exceeds " + std::to_string(kMaxRasterPixels) + " pixels");
  if (!(view_lo.x() < view_hi.x()) || !(view_lo.y() < view_hi.y()))
    throw ValidationError("rasterize: degenerate viewport");

  Raster r;
  r.width = width;
  r.height = height;
  r.view_lo = view_lo;
  r.view_hi = view_hi;
  r.counts.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0);

  const double sx = width / (view_hi.x() - view_lo.x());
  const double sy = height / (view_hi.y() - view_lo.y());
  for (Index i = 0; i < points.rows(); ++i) {
    const double px = static_cast<double>(points(i, 0));
    const double py = points.cols() == 2 ? static_cast<double>(points(i, 1)) : 0.0;
    const double fx = std::floor((px - view_lo.x()) * sx);
    const double fy = std::floor((py - view_lo.y()) * sy);
    if (fx < 0 || fx >= width || fy < 0 || fy >= height) {
      ++r.dropped;
      continue;
    }
    ++r.counts[static_cast<std::size_t>(fy) * static_cast<std::size_t>(width) +
               static_cast<std::size_t>(fx)];
  }
  return r;
}

// Binary PGM (P5, maxval 255), rows written top to bottom.  Counts are
// log-scaled: visit counts are heavy-tailed.
inline void write_pgm(const Raster& r, std::ostream& out) {
  out << "P5\n" << r.width << " " << r.height << "\n255\n";
  std::uint64_t cmax = 0;
  for (auto c : r.counts) cmax = std::max(cmax, c);
  const double denom = cmax > 0 ? std::log1p(static_cast<double>(cmax)) : 1.0;
  std::vector<unsigned char> row(static_cast<std::size_t>(r.width));
  for (int y = r.height - 1; y >= 0; --y) {
    for (int x = 0; x < r.width; ++x) {
      const std::uint64_t c =
          r.counts[static_cast<std::size_t>(y) * static_cast<std::size_t>(r.width) +
                   static_cast<std::size_t>(x)];
      row[static_cast<std::size_t>(x)] =
          c == 0 ? 0
                 : static_cast<unsigned char>(
                       std::lround(255.0 * std::log1p(static_cast<double>(c)) / denom));
    }
    out.write(reinterpret_cast<const char*>(row.data()), r.width);
  }
}

}  // namespace cvxifs
