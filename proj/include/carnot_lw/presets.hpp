#pragma once

// Seeded test inputs: functions on R^{d+2n}, densities on R^{d+2n+1}, and set rasters.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "carnot_lw/error.hpp"
#include "carnot_lw/grid.hpp"
#include "carnot_lw/group.hpp"
#include "carnot_lw/lw.hpp"
#include "carnot_lw/sobolev.hpp"

namespace carnot_lw {

/// Sum of compact bumps w (1 - |z - c|^2 / r^2)^3_+.
struct BumpSum {
  std::vector<std::vector<double>> centers;
  std::vector<double> radii, weights;

  double operator()(std::span<const double> z) const {
    double v = 0.0;
    for (std::size_t b = 0; b < centers.size(); ++b) {
      double q = 0.0;
      for (std::size_t i = 0; i < z.size(); ++i) q += (z[i] - centers[b][i]) * (z[i] - centers[b][i]);
      q /= radii[b] * radii[b];
      if (q < 1.0) v += weights[b] * (1.0 - q) * (1.0 - q) * (1.0 - q);
    }
    return v;
  }
};

/// 1-3 bumps with centers in [-0.35, 0.35]^k and radii in [0.3, 0.6], so the support
/// stays inside [-0.95, 0.95]^k.
inline BumpSum random_bump_sum(std::size_t k, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(1, 3);
  std::uniform_real_distribution<double> cen(-0.35, 0.35), rad(0.3, 0.6), wt(0.5, 1.5);
  BumpSum s;
  const int m = count(rng);
  for (int b = 0; b < m; ++b) {
    std::vector<double> c(k);
    for (auto& v : c) v = cen(rng);
    s.centers.push_back(std::move(c));
    s.radii.push_back(rad(rng));
    s.weights.push_back(wt(rng));
  }
  return s;
}

inline const std::vector<std::string>& function_preset_names() {
  static const std::vector<std::string> names{"gauss", "bumps", "cube"};
  return names;
}

/// One function on R^k sampled on [-1, 1]^k (cube: [0, 1]^k, all ones).
///   gauss: exp(-|z|^2 / (2 * 0.25^2)); bumps: random_bump_sum; cube: indicator.
inline GridDensity preset_function(const std::string& preset, std::size_t k, std::size_t res, std::mt19937_64& rng) {
  const std::size_t r = grid_resolution(k, res);
  if (preset == "cube") {
    auto unit = GridGeometry::cube(k, 0.0, 1.0, r);
    const std::size_t cells = unit.size();
    return GridDensity(std::move(unit), std::vector<double>(cells, 1.0));
  }
  const auto geom = GridGeometry::cube(k, -1.0, 1.0, r);
  if (preset == "gauss")
    return GridDensity::sample(geom, [](std::span<const double> z) {
      double q = 0.0;
      for (double v : z) q += v * v;
      return std::exp(-q / (2 * 0.0625));
    });
  if (preset == "bumps") return GridDensity::sample(geom, random_bump_sum(k, rng));
  throw InvalidArgument("unknown function preset '" + preset + "' (expected gauss, bumps or cube)");
}

/// Inputs for verify_lw (d+2n functions) or verify_nonlinear_lw (d+2n+1 functions).
inline std::vector<GridDensity> lw_inputs(const CorankGroup& g, const std::string& preset, std::size_t res,
                                          std::uint64_t seed, bool include_last) {
  std::mt19937_64 rng(seed);
  std::vector<GridDensity> fs;
  const std::size_t m = g.horizontal_dim() + (include_last ? 1 : 0);
  for (std::size_t j = 0; j < m; ++j) fs.push_back(preset_function(preset, g.horizontal_dim(), res, rng));
  return fs;
}

inline const std::vector<std::string>& density_preset_names() {
  static const std::vector<std::string> names{"gauss", "gaussian", "bumps", "uniform-box", "product", "triangle"};
  return names;
}

/// Normalized density on R^{d+2n+1} sampled on [-1, 1]^{d+2n+1}.
///   gauss (or gaussian): isotropic with standard deviation `width`;
///   bumps: random_bump_sum;
///   uniform-box: uniform on [-width, width]^k;
///   product: prod_i (1 - |z_i| / width)_+, a tent in every coordinate;
///   triangle: uniform on {-width <= z_0 <= z_1 <= width} x [-width, width]^{k-2}.
inline GridDensity preset_density(const CorankGroup& g, const std::string& preset, std::size_t res,
                                  std::uint64_t seed, double width = 0.25) {
  const std::size_t k = g.topo_dim();
  const auto geom = GridGeometry::cube(k, -1.0, 1.0, grid_resolution(k, res));
  require(width > 0.0 && width <= 1.0, "density width must lie in (0, 1]");
  std::mt19937_64 rng(seed);
  auto in_box = [width](std::span<const double> z) {
    for (double v : z)
      if (std::abs(v) > width) return false;
    return true;
  };
  if (preset == "gauss" || preset == "gaussian")
    return normalize(GridDensity::sample(geom, [width](std::span<const double> z) {
      double q = 0.0;
      for (double v : z) q += v * v;
      return std::exp(-q / (2 * width * width));
    }));
  if (preset == "bumps") return normalize(GridDensity::sample(geom, random_bump_sum(k, rng)));
  if (preset == "uniform-box")
    return normalize(GridDensity::sample(geom, [&](std::span<const double> z) { return in_box(z) ? 1.0 : 0.0; }));
  if (preset == "product")
    return normalize(GridDensity::sample(geom, [width](std::span<const double> z) {
      double v = 1.0;
      for (double x : z) v *= std::max(0.0, 1.0 - std::abs(x) / width);
      return v;
    }));
  if (preset == "triangle")
    return normalize(GridDensity::sample(geom, [&](std::span<const double> z) {
      return in_box(z) && z[0] <= z[1] ? 1.0 : 0.0;
    }));
  throw InvalidArgument("unknown density preset '" + preset +
                        "' (expected gauss, gaussian, bumps, uniform-box, product or triangle)");
}

inline const std::vector<std::string>& set_preset_names() {
  static const std::vector<std::string> names{"cube", "ball", "random"};
  return names;
}

/// Set raster on R^{d+2n+1}.
///   cube: [0, 1]^k on a grid over [-0.25, 1.25]^k; ball: unit ball in [-1.5, 1.5]^k;
///   random: union of 1-3 axis-aligned boxes and balls inside [-1, 1]^k.
inline GridDensity preset_set(const CorankGroup& g, const std::string& preset, std::size_t res, std::uint64_t seed) {
  const std::size_t k = g.topo_dim();
  const std::size_t r = grid_resolution(k, res);
  auto indicator = [](bool b) { return b ? 1.0 : 0.0; };
  if (preset == "cube")
    return GridDensity::sample(GridGeometry::cube(k, -0.25, 1.25, r), [&](std::span<const double> z) {
      bool in = true;
      for (double v : z) in = in && v >= 0.0 && v <= 1.0;
      return indicator(in);
    });
  if (preset == "ball")
    return GridDensity::sample(GridGeometry::cube(k, -1.5, 1.5, r), [&](std::span<const double> z) {
      double q = 0.0;
      for (double v : z) q += v * v;
      return indicator(q <= 1.0);
    });
  if (preset == "random") {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> count(1, 3);
    std::uniform_real_distribution<double> cen(-0.4, 0.4), half(0.2, 0.55);
    struct Piece {
      bool ball;
      std::vector<double> c, h;
    };
    std::vector<Piece> pieces;
    const int m = count(rng);
    for (int p = 0; p < m; ++p) {
      Piece pc{(rng() & 1U) != 0, std::vector<double>(k), std::vector<double>(k)};
      for (auto& v : pc.c) v = cen(rng);
      for (auto& v : pc.h) v = half(rng);
      pieces.push_back(std::move(pc));
    }
    return GridDensity::sample(GridGeometry::cube(k, -1.0, 1.0, r), [&](std::span<const double> z) {
      for (const auto& pc : pieces) {
        bool in = true;
        double q = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
          const double u = (z[i] - pc.c[i]) / pc.h[i];
          in = in && std::abs(u) <= 1.0;
          q += u * u;
        }
        if (pc.ball ? q <= 1.0 : in) return 1.0;
      }
      return 0.0;
    });
  }
  throw InvalidArgument("unknown set preset '" + preset + "' (expected cube, ball or random)");
}

/// 3 exp(-|x|^2 / (2 * 0.25^2) - t^2 / (2 * 0.15^2)) on H(d, alpha).
inline double smooth_bump(const GroupPoint& p) {
  double q = 0.0;
  for (double v : p.x) q += v * v;
  return 3.0 * std::exp(-q / (2 * 0.0625) - p.t * p.t / (2 * 0.0225));
}

/// smooth_bump o delta_r with its horizontal gradient, on [-2, 2]^k shrunk by delta_{1/r}.
/// r = 1 gives the bump itself.
inline SampledFunction sampled_bump(const CorankGroup& g, std::size_t res, double r = 1.0) {
  require(r > 0.0, "dilation factor must be positive");
  const std::size_t k = g.topo_dim();
  std::vector<double> factors(k, 1.0 / r);
  factors.back() = 1.0 / (r * r);
  const auto geom = GridGeometry::cube(k, -2.0, 2.0, grid_resolution(k, res)).scaled(factors);
  return sample_with_gradient(g, geom, [&](const GroupPoint& p) { return smooth_bump(dilate(g, r, p)); });
}

}  // namespace carnot_lw
