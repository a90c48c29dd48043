#pragma once

// Planar X-ray transform Rf(sigma, s) = int_{<x,sigma> = s} f, its L^3(S^1 x R) norm
// against the L^{3/2}(R^2) norm of f, and a lower-bound estimator for the operator
// norm over families of test functions.

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot_lw/error.hpp"
#include "carnot_lw/grid.hpp"

namespace carnot_lw {

struct SinogramGrid {
  std::size_t n_angles = 0;   // sigma_a = (cos theta_a, sin theta_a), theta_a = 2 pi a / n_angles
  std::size_t n_offsets = 0;  // s_i = -s_max + (i + 1/2) ds
  double s_max = 0.0;
  std::vector<double> values;  // angle-major

  double ds() const { return 2.0 * s_max / static_cast<double>(n_offsets); }
  double dtheta() const { return 2.0 * std::numbers::pi / static_cast<double>(n_angles); }
  double angle(std::size_t a) const { return dtheta() * static_cast<double>(a); }
  double offset(std::size_t i) const { return -s_max + (static_cast<double>(i) + 0.5) * ds(); }
  double at(std::size_t a, std::size_t i) const { return values[a * n_offsets + i]; }
};

namespace detail {

// Bilinear interpolant of cell-midpoint samples with zero extension.
struct Bilinear {
  const GridDensity& f;
  double x0, y0, hx, hy;
  std::size_t nx, ny;

  explicit Bilinear(const GridDensity& g)
      : f(g),
        x0(g.geometry().lower(0)),
        y0(g.geometry().lower(1)),
        hx(g.geometry().cell_size(0)),
        hy(g.geometry().cell_size(1)),
        nx(g.geometry().res(0)),
        ny(g.geometry().res(1)) {}

  double value(long i, long j) const {
    if (i < 0 || j < 0 || i >= static_cast<long>(nx) || j >= static_cast<long>(ny)) return 0.0;
    return f[static_cast<std::size_t>(i) * ny + static_cast<std::size_t>(j)];
  }

  double operator()(double x, double y) const {
    const double u = (x - x0) / hx - 0.5, v = (y - y0) / hy - 0.5;
    const double fu = std::floor(u), fv = std::floor(v);
    const long i = static_cast<long>(fu), j = static_cast<long>(fv);
    const double a = u - fu, b = v - fv;
    return (1 - a) * ((1 - b) * value(i, j) + b * value(i, j + 1)) + a * ((1 - b) * value(i + 1, j) + b * value(i + 1, j + 1));
  }
};

// Clips the line p + u d to the rectangle [xl, xh] x [yl, yh]; returns false if it misses.
inline bool clip_line(double px, double py, double dx, double dy, double xl, double xh, double yl, double yh,
                      double& u0, double& u1) {
  u0 = -std::numeric_limits<double>::infinity();
  u1 = std::numeric_limits<double>::infinity();
  auto slab = [&](double p, double d, double lo, double hi) {
    if (std::abs(d) < 1e-300) return p >= lo && p <= hi;
    double a = (lo - p) / d, b = (hi - p) / d;
    if (a > b) std::swap(a, b);
    u0 = std::max(u0, a);
    u1 = std::min(u1, b);
    return u0 < u1;
  };
  return slab(px, dx, xl, xh) && slab(py, dy, yl, yh);
}

}  // namespace detail

/// Largest |x| over cells carrying mass, plus half a cell diagonal.
inline double support_radius(const GridDensity& f) {
  const auto& g = f.geometry();
  require(g.dim() == 2, "planar density required");
  const double half_diag = 0.5 * std::hypot(g.cell_size(0), g.cell_size(1));
  double r = 0.0;
  for (std::size_t i = 0; i < g.res(0); ++i)
    for (std::size_t j = 0; j < g.res(1); ++j)
      if (f[i * g.res(1) + j] > 0.0) r = std::max(r, std::hypot(g.midpoint(0, i), g.midpoint(1, j)));
  return r + half_diag;
}

/// Rf sampled on a uniform (angle, offset) grid. Each line is integrated with the midpoint
/// rule at spacing at most half the smaller cell side. s_max <= 0 picks the radius of the box
/// (enlarged by half a cell) about the origin.
inline SinogramGrid radon_transform(const GridDensity& f, std::size_t n_angles, std::size_t n_offsets,
                                    double s_max = 0.0) {
  const auto& g = f.geometry();
  require(g.dim() == 2, "radon_transform needs a planar density");
  require(n_angles >= 1 && n_offsets >= 1, "sinogram needs at least one angle and one offset");
  const double xl = g.lower(0) - 0.5 * g.cell_size(0), xh = g.upper(0) + 0.5 * g.cell_size(0);
  const double yl = g.lower(1) - 0.5 * g.cell_size(1), yh = g.upper(1) + 0.5 * g.cell_size(1);
  if (s_max <= 0.0)
    s_max = std::max({std::hypot(xl, yl), std::hypot(xl, yh), std::hypot(xh, yl), std::hypot(xh, yh)});
  else if (support_radius(f) > s_max)
    throw InvalidArgument("density support exceeds the sinogram offset range");

  SinogramGrid out{n_angles, n_offsets, s_max, std::vector<double>(n_angles * n_offsets, 0.0)};
  const detail::Bilinear interp(f);
  const double step = 0.5 * std::min(g.cell_size(0), g.cell_size(1));
  for (std::size_t a = 0; a < n_angles; ++a) {
    const double th = out.angle(a);
    const double cx = std::cos(th), cy = std::sin(th);
    for (std::size_t i = 0; i < n_offsets; ++i) {
      const double s = out.offset(i);
      double u0, u1;
      if (!detail::clip_line(s * cx, s * cy, -cy, cx, xl, xh, yl, yh, u0, u1)) continue;
      const auto n = static_cast<std::size_t>(std::ceil((u1 - u0) / step));
      if (n == 0) continue;
      const double du = (u1 - u0) / static_cast<double>(n);
      double acc = 0.0;
      for (std::size_t q = 0; q < n; ++q) {
        const double u = u0 + (static_cast<double>(q) + 0.5) * du;
        acc += interp(s * cx - u * cy, s * cy + u * cx);
      }
      out.values[a * n_offsets + i] = acc * du;
    }
  }
  return out;
}

/// (int int |Rf|^p dsigma ds)^{1/p} with dsigma of total mass 2 pi.
inline double sinogram_norm(const SinogramGrid& s, double p) {
  require(p >= 1.0, "L^p norm requires p >= 1");
  double acc = 0.0;
  for (double v : s.values) acc += std::pow(std::abs(v), p);
  return std::pow(acc * s.dtheta() * s.ds(), 1.0 / p);
}

inline double density_norm(const GridDensity& f, double p) { return lp_norm(f, p); }

/// int Rf(sigma, s) ds for each angle.
inline std::vector<double> projected_masses(const SinogramGrid& s) {
  std::vector<double> m(s.n_angles, 0.0);
  for (std::size_t a = 0; a < s.n_angles; ++a)
    for (std::size_t i = 0; i < s.n_offsets; ++i) m[a] += s.at(a, i) * s.ds();
  return m;
}

struct RadonSampling {
  std::size_t n_angles = 0;   // 0: res / 2
  std::size_t n_offsets = 0;  // 0: res
};

/// ||Rf||_3 / ||f||_{3/2}.
inline double radon_ratio(const GridDensity& f, RadonSampling sampling = {}) {
  const auto& g = f.geometry();
  require(g.dim() == 2, "radon_ratio needs a planar density");
  const double denom = density_norm(f, 1.5);
  if (!(denom > 0.0)) throw InvalidArgument("radon_ratio needs a nonzero input");
  const std::size_t res = std::max(g.res(0), g.res(1));
  const std::size_t na = sampling.n_angles ? sampling.n_angles : std::max<std::size_t>(8, res / 2);
  const std::size_t no = sampling.n_offsets ? sampling.n_offsets : res;
  return sinogram_norm(radon_transform(f, na, no), 3.0) / denom;
}

// ---------------------------------------------------------------------------
// Test families.

/// Planar test function: a name for reports plus a sampler at a resolution.
struct RadonTestFunction {
  std::string descriptor;
  std::function<GridDensity(std::size_t res)> sample;
};

namespace detail {

// Fraction of the cell covered by {inside(x) true}, by s x s supersampling.
template <class Inside>
GridDensity coverage(const GridGeometry& g, Inside inside, int s = 4) {
  return GridDensity::sample(g, [&](std::span<const double> c) {
    int hits = 0;
    for (int a = 0; a < s; ++a)
      for (int b = 0; b < s; ++b) {
        const double x = c[0] + ((a + 0.5) / s - 0.5) * g.cell_size(0);
        const double y = c[1] + ((b + 0.5) / s - 0.5) * g.cell_size(1);
        hits += inside(x, y) ? 1 : 0;
      }
    return static_cast<double>(hits) / (s * s);
  });
}

}  // namespace detail

inline RadonTestFunction disk_function(double radius, double cx = 0.0, double cy = 0.0) {
  nlohmann::json d = {{"family", "disks"}, {"radius", radius}, {"center", {cx, cy}}};
  return {d.dump(), [=](std::size_t res) {
            const double half = radius * 1.1 + std::max(std::abs(cx), std::abs(cy));
            auto g = GridGeometry::cube(2, -half, half, res);
            return detail::coverage(g, [=](double x, double y) {
              return (x - cx) * (x - cx) + (y - cy) * (y - cy) < radius * radius;
            });
          }};
}

/// exp(-1/2 z^T S^{-1} z) for the covariance with axes (s1, s2) rotated by theta, cut at 8 sigma.
inline RadonTestFunction gaussian_function(double s1, double s2, double theta, const std::string& family) {
  nlohmann::json d = {{"family", family}, {"sigma", {s1, s2}}, {"theta", theta}};
  return {d.dump(), [=](std::size_t res) {
            const double half = 8.0 * std::max(s1, s2);
            auto g = GridGeometry::cube(2, -half, half, res);
            const double c = std::cos(theta), s = std::sin(theta);
            return GridDensity::sample(g, [=](std::span<const double> x) {
              const double u = c * x[0] + s * x[1], v = -s * x[0] + c * x[1];
              return std::exp(-0.5 * (u * u / (s1 * s1) + v * v / (s2 * s2)));
            });
          }};
}

/// (1 + |x|^2 / rho^2)^{-1} cut off smoothly between 0.8 and 1 times `cutoff` radii rho.
inline RadonTestFunction poisson_function(double rho, double cutoff) {
  nlohmann::json d = {{"family", "poisson"}, {"rho", rho}, {"cutoff", cutoff}};
  return {d.dump(), [=](std::size_t res) {
            const double half = rho * cutoff;
            auto g = GridGeometry::cube(2, -half, half, res);
            return GridDensity::sample(g, [=](std::span<const double> x) {
              const double r = std::hypot(x[0], x[1]) / rho;
              const double w = std::clamp((cutoff - r) / (0.2 * cutoff), 0.0, 1.0);
              return w * w * (3 - 2 * w) / (1.0 + r * r);
            });
          }};
}

/// Sum of `count` Gaussian bumps with seeded centers, widths and weights.
inline RadonTestFunction random_bumps(std::uint64_t seed, int count = 5) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> center(-1.0, 1.0), width(0.25, 0.8), weight(0.2, 1.0);
  std::vector<std::array<double, 4>> bumps;
  for (int i = 0; i < count; ++i) bumps.push_back({center(rng), center(rng), width(rng), weight(rng)});
  nlohmann::json d = {{"family", "random"}, {"seed", seed}, {"bumps", count}};
  return {d.dump(), [=](std::size_t res) {
            auto g = GridGeometry::cube(2, -1.0 - 8 * 0.8, 1.0 + 8 * 0.8, res);
            return GridDensity::sample(g, [&](std::span<const double> x) {
              double v = 0.0;
              for (const auto& b : bumps) {
                const double dx = x[0] - b[0], dy = x[1] - b[1];
                v += b[3] * std::exp(-0.5 * (dx * dx + dy * dy) / (b[2] * b[2]));
              }
              return v;
            });
          }};
}

inline const std::vector<std::string>& radon_family_names() {
  static const std::vector<std::string> names{"disks", "gauss", "aniso", "random", "poisson"};
  return names;
}

/// Members of the named family; `seed` drives the random family.
inline std::vector<RadonTestFunction> radon_family(const std::string& name, std::uint64_t seed = 0) {
  if (name == "disks") return {disk_function(1.0), disk_function(0.5, 0.3, -0.2)};
  if (name == "gauss") return {gaussian_function(1.0, 1.0, 0.0, "gauss")};
  if (name == "aniso") return {gaussian_function(1.0, 0.4, 0.0, "aniso"), gaussian_function(0.7, 0.2, 0.6, "aniso")};
  if (name == "random") return {random_bumps(seed), random_bumps(seed + 1, 3)};
  if (name == "poisson") return {poisson_function(1.0, 12.0)};
  throw InvalidArgument("unknown radon test family '" + name + "'");
}

struct RadonEstimate {
  double lb = 0.0;
  std::string best;  // descriptor of the maximizing test function
  std::vector<std::pair<std::string, double>> ratios;  // per member, min over resolutions
};

/// Lower bound on ||R||_{3/2 -> 3}: each member's ratio is the minimum over `resolutions`
/// (discretization can inflate a ratio), the bound is the maximum over members.
inline RadonEstimate estimate_radon_norm_lb(const std::vector<RadonTestFunction>& members,
                                            const std::vector<std::size_t>& resolutions) {
  require(!members.empty(), "radon estimate needs a nonempty family");
  require(!resolutions.empty(), "radon estimate needs at least one resolution");
  RadonEstimate est;
  for (const auto& m : members) {
    double r = std::numeric_limits<double>::infinity();
    for (auto res : resolutions) r = std::min(r, radon_ratio(m.sample(res)));
    est.ratios.emplace_back(m.descriptor, r);
    if (r > est.lb) {
      est.lb = r;
      est.best = m.descriptor;
    }
  }
  return est;
}

inline RadonEstimate estimate_radon_norm_lb(const std::vector<std::string>& families,
                                            const std::vector<std::size_t>& resolutions, std::uint64_t seed = 0) {
  std::vector<RadonTestFunction> members;
  for (const auto& f : families)
    for (auto& m : radon_family(f, seed)) members.push_back(std::move(m));
  return estimate_radon_norm_lb(members, resolutions);
}

}  // namespace carnot_lw
