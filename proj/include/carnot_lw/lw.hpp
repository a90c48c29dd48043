#pragma once

// Multilinear Loomis-Whitney checks on H(d, alpha) and on R^k.
//
// The left side int prod_j f_j(pi_j(z)) dz is a tensor midpoint rule over a box that
// covers every pullback support; each f_j is evaluated by multilinear interpolation
// with zero extension. Right sides use sample-sum L^p norms, which dominate the norms
// of the interpolants, so a pass is never an artifact of the norm computation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "carnot_lw/constants.hpp"
#include "carnot_lw/density.hpp"
#include "carnot_lw/error.hpp"
#include "carnot_lw/grid.hpp"
#include "carnot_lw/group.hpp"
#include "carnot_lw/report.hpp"

namespace carnot_lw {

/// tol = kQuadratureConstant * (max relative cell side)^2 * max(|lhs|, |rhs|).
inline constexpr double kQuadratureConstant = 25.0;
/// First-order analogue for rasterized sets: tol = kRasterConstant * h_rel * max(lhs, rhs).
inline constexpr double kRasterConstant = 4.0;

/// Per-axis resolution for a k-dimensional tensor grid given a nominal resolution:
/// res itself up to three dimensions, otherwise about res^3 points in total.
inline std::size_t grid_resolution(std::size_t k, std::size_t res) {
  if (k <= 3) return res;
  return std::max<std::size_t>(8, static_cast<std::size_t>(std::lround(std::pow(static_cast<double>(res), 3.0 / static_cast<double>(k)))));
}

inline double quadrature_tolerance(std::size_t n_min, double lhs, double rhs) {
  const double h = 1.0 / static_cast<double>(n_min);
  return kQuadratureConstant * h * h * std::max(std::abs(lhs), std::abs(rhs));
}

/// Box [lo, hi] per axis containing the support of the interpolant; nullopt if f == 0.
inline std::optional<std::pair<std::vector<double>, std::vector<double>>> support_box(const GridDensity& f) {
  const auto& g = f.geometry();
  const std::size_t k = g.dim();
  std::vector<std::size_t> lo(k, std::numeric_limits<std::size_t>::max()), hi(k, 0), idx(k);
  bool any = false;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (f[c] == 0.0) continue;
    any = true;
    g.unravel(c, idx);
    for (std::size_t i = 0; i < k; ++i) {
      lo[i] = std::min(lo[i], idx[i]);
      hi[i] = std::max(hi[i], idx[i]);
    }
  }
  if (!any) return std::nullopt;
  std::vector<double> a(k), b(k);
  for (std::size_t i = 0; i < k; ++i) {
    a[i] = g.midpoint(i, lo[i]) - g.cell_size(i);
    b[i] = g.midpoint(i, hi[i]) + g.cell_size(i);
  }
  return std::make_pair(std::move(a), std::move(b));
}

/// One factor f(P z) of a pullback product: P deletes z-axis `deleted` and, when shear != 0,
/// adds shear * z_a * z_b to the last coordinate.
struct Pullback {
  const GridDensity* f = nullptr;
  std::size_t deleted = 0;
  double shear = 0.0;
  std::size_t a = 0, b = 0;

  void map(std::span<const double> z, std::span<double> y) const {
    std::size_t p = 0;
    for (std::size_t i = 0; i < z.size(); ++i)
      if (i != deleted) y[p++] = z[i];
    if (shear != 0.0) y[p - 1] += shear * z[a] * z[b];
  }
};

/// The projections of H(d, alpha) as pullback factors (j = d+2n only if include_last).
inline std::vector<Pullback> group_pullbacks(const CorankGroup& g, std::span<const GridDensity> fs, bool include_last) {
  const std::size_t m = g.horizontal_dim() + (include_last ? 1 : 0);
  require(fs.size() == m, "expected " + std::to_string(m) + " functions, got " + std::to_string(fs.size()));
  std::vector<Pullback> out;
  for (std::size_t j = 0; j < m; ++j) {
    require(fs[j].dim() == g.horizontal_dim(), "every f_j must live on R^{d+2n}");
    Pullback p{&fs[j], j, 0.0, 0, 0};
    const auto kind = g.axis_kind(j);
    if (kind == AxisKind::kPairFirst || kind == AxisKind::kPairSecond) {
      p.a = g.d() + 2 * g.pair_index(j);
      p.b = p.a + 1;
      p.shear = g.shear_coefficient(j);
    }
    out.push_back(p);
  }
  return out;
}

/// Coordinate deletions on R^k.
inline std::vector<Pullback> euclidean_pullbacks(std::span<const GridDensity> fs) {
  const std::size_t k = fs.size();
  require(k >= 2, "Euclidean Loomis-Whitney needs k >= 2 functions");
  std::vector<Pullback> out;
  for (std::size_t j = 0; j < k; ++j) {
    require(fs[j].dim() == k - 1, "every f_j must live on R^{k-1}");
    out.push_back({&fs[j], j, 0.0, 0, 0});
  }
  return out;
}

struct PullbackIntegral {
  double value = 0.0;
  std::optional<GridGeometry> box;  // empty when some factor vanishes identically
  std::size_t min_res = 0;
};

/// Smallest box on R^k outside of which the pullback product vanishes, from the factor
/// supports. Sheared last coordinates are bounded through the ranges of z_a z_b, and two
/// factors with opposite shears on the same pair bound the last axis by their average.
inline std::optional<std::pair<std::vector<double>, std::vector<double>>> pullback_box(std::size_t k,
                                                                                       std::span<const Pullback> ps) {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> lo(k, -inf), hi(k, inf);
  std::vector<std::pair<std::vector<double>, std::vector<double>>> sup;
  for (const auto& p : ps) {
    auto s = support_box(*p.f);
    if (!s) return std::nullopt;
    sup.push_back(std::move(*s));
  }
  auto clamp_axis = [&](std::size_t i, double a, double b) {
    lo[i] = std::max(lo[i], a);
    hi[i] = std::min(hi[i], b);
  };
  for (std::size_t q = 0; q < ps.size(); ++q) {
    std::size_t p = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (i == ps[q].deleted) continue;
      const bool sheared_last = ps[q].shear != 0.0 && i == k - 1;
      if (!sheared_last) clamp_axis(i, sup[q].first[p], sup[q].second[p]);
      ++p;
    }
  }
  for (std::size_t i = 0; i + 1 < k; ++i)
    require(std::isfinite(lo[i]) && std::isfinite(hi[i]), "pullback product is not compactly supported");
  for (std::size_t i = 0; i < k; ++i)
    if (lo[i] >= hi[i]) return std::nullopt;

  auto product_range = [&](std::size_t a, std::size_t b, double c) {
    double mn = inf, mx = -inf;
    for (double u : {lo[a], hi[a]})
      for (double w : {lo[b], hi[b]}) {
        mn = std::min(mn, c * u * w);
        mx = std::max(mx, c * u * w);
      }
    // the product of two intervals attains its extremes at corners
    return std::make_pair(mn, mx);
  };
  for (std::size_t q = 0; q < ps.size(); ++q) {
    if (ps[q].shear == 0.0 || ps[q].deleted == k - 1) continue;
    const auto [mn, mx] = product_range(ps[q].a, ps[q].b, ps[q].shear);
    clamp_axis(k - 1, sup[q].first.back() - mx, sup[q].second.back() - mn);
    for (std::size_t r = q + 1; r < ps.size(); ++r)
      if (ps[r].a == ps[q].a && ps[r].b == ps[q].b && ps[r].shear == -ps[q].shear && ps[r].deleted != k - 1)
        clamp_axis(k - 1, 0.5 * (sup[q].first.back() + sup[r].first.back()),
                   0.5 * (sup[q].second.back() + sup[r].second.back()));
  }
  require(std::isfinite(lo[k - 1]) && std::isfinite(hi[k - 1]), "pullback product is not compactly supported");
  if (lo[k - 1] >= hi[k - 1]) return std::nullopt;
  return std::make_pair(std::move(lo), std::move(hi));
}

/// Midpoint rule for int_{R^k} prod_q f_q(P_q z) dz with per-axis resolution n.
inline PullbackIntegral pullback_integral(std::size_t k, std::span<const Pullback> ps, std::size_t n) {
  require(n >= 2, "quadrature resolution must be at least 2");
  auto box = pullback_box(k, ps);
  PullbackIntegral out;
  out.min_res = n;
  if (!box) return out;
  GridGeometry geom(box->first, box->second, std::vector<std::size_t>(k, n));
  std::vector<std::size_t> idx(k);
  std::vector<double> z(k);
  std::vector<double> y(k);
  double acc = 0.0;
  for (std::size_t c = 0; c < geom.size(); ++c) {
    geom.unravel(c, idx);
    geom.cell_center(idx, z);
    double v = 1.0;
    for (const auto& p : ps) {
      p.map(z, std::span<double>(y.data(), k - 1));
      v *= p.f->interpolate(std::span<const double>(y.data(), k - 1));
      if (v == 0.0) break;
    }
    acc += v;
  }
  out.value = acc * geom.cell_volume();
  out.box = std::move(geom);
  return out;
}

/// int prod_j f_j(pi_j(x, t)) dx dt on H(d, alpha); fs has d+2n entries (d+2n+1 with include_last).
inline PullbackIntegral multilinear_lhs(const CorankGroup& g, std::span<const GridDensity> fs, bool include_last,
                                        std::size_t res) {
  const auto ps = group_pullbacks(g, fs, include_last);
  return pullback_integral(g.topo_dim(), ps, grid_resolution(g.topo_dim(), res));
}

/// Samples F = prod_j f_j o pi_j at the cell midpoints of `geom`.
inline GridDensity pullback_product(const CorankGroup& g, std::span<const GridDensity> fs, bool include_last,
                                    const GridGeometry& geom) {
  require(geom.dim() == g.topo_dim(), "grid dimension does not match the group");
  const auto ps = group_pullbacks(g, fs, include_last);
  std::vector<double> y(geom.dim());
  return GridDensity::sample(geom, [&](std::span<const double> z) {
    double v = 1.0;
    for (const auto& p : ps) {
      p.map(z, std::span<double>(y.data(), z.size() - 1));
      v *= p.f->interpolate(std::span<const double>(y.data(), z.size() - 1));
      if (v == 0.0) break;
    }
    return v;
  });
}

namespace detail {

inline nlohmann::json lhs_metadata(const PullbackIntegral& lhs) {
  nlohmann::json m = {{"quadrature_res", lhs.min_res}};
  if (lhs.box) m["box"] = {{"lower", lhs.box->lowers()}, {"upper", lhs.box->uppers()}};
  return m;
}

}  // namespace detail

/// int prod f_j o pi_j <= C(d, alpha) prod_{j<d} ||f_j||_{d+2n+1} prod_{j>=d} ||f_j||_{n(d+2n+1)/(n+1)}.
inline Report verify_lw(const CorankGroup& g, std::span<const GridDensity> fs, double r_norm, std::size_t res) {
  const auto lhs = multilinear_lhs(g, fs, false, res);
  const auto sd = corank_constants(g);
  const auto p = sd.exponents();
  const double C = std::exp(sd.D.value(r_norm));
  double rhs = C;
  nlohmann::json norms = nlohmann::json::array();
  for (std::size_t j = 0; j < fs.size(); ++j) {
    const double nj = lp_norm(fs[j], to_double(p[j]));
    norms.push_back(nj);
    rhs *= nj;
  }
  auto meta = detail::lhs_metadata(lhs);
  meta["group"] = to_json(g);
  meta["r_norm"] = r_norm;
  meta["constant"] = C;
  meta["norms"] = norms;
  return make_report("lw", lhs.value, rhs, quadrature_tolerance(lhs.min_res, lhs.value, rhs), std::move(meta));
}

/// int prod_{j=0}^{d+2n} f_j o pi_j <= prod ||f_j||_{d+2n}.
inline Report verify_nonlinear_lw(const CorankGroup& g, std::span<const GridDensity> fs, std::size_t res) {
  const auto lhs = multilinear_lhs(g, fs, true, res);
  const double p = static_cast<double>(g.horizontal_dim());
  double rhs = 1.0;
  nlohmann::json norms = nlohmann::json::array();
  for (const auto& f : fs) {
    norms.push_back(lp_norm(f, p));
    rhs *= norms.back().get<double>();
  }
  auto meta = detail::lhs_metadata(lhs);
  meta["group"] = to_json(g);
  meta["norms"] = norms;
  return make_report("nonlinear_lw", lhs.value, rhs, quadrature_tolerance(lhs.min_res, lhs.value, rhs),
                     std::move(meta));
}

/// Classical Loomis-Whitney on R^k: int prod f_j(P_j z) dz <= prod ||f_j||_{k-1}.
inline Report verify_lw_euclidean(std::span<const GridDensity> fs, std::size_t res) {
  const auto ps = euclidean_pullbacks(fs);
  const std::size_t k = fs.size();
  const auto lhs = pullback_integral(k, ps, grid_resolution(k, res));
  double rhs = 1.0;
  for (const auto& f : fs) rhs *= lp_norm(f, static_cast<double>(k - 1));
  return make_report("lw_euclidean", lhs.value, rhs, quadrature_tolerance(lhs.min_res, lhs.value, rhs),
                     detail::lhs_metadata(lhs));
}

// ---------------------------------------------------------------------------
// Sets. A set is a raster: cells whose value exceeds 1/2 belong to it.

inline bool in_set(double v) { return v > 0.5; }

inline double set_measure(const GridDensity& e) {
  std::size_t n = 0;
  for (double v : e.values()) n += in_set(v) ? 1 : 0;
  return static_cast<double>(n) * e.geometry().cell_volume();
}

/// 1 / (smallest number of cells spanned by the set's bounding box along any axis); 0 for empty sets.
inline double set_relative_cell(const GridDensity& e) {
  const auto& g = e.geometry();
  std::vector<std::size_t> lo(g.dim(), std::numeric_limits<std::size_t>::max()), hi(g.dim(), 0), idx(g.dim());
  bool any = false;
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (!in_set(e[c])) continue;
    any = true;
    g.unravel(c, idx);
    for (std::size_t i = 0; i < g.dim(); ++i) {
      lo[i] = std::min(lo[i], idx[i]);
      hi[i] = std::max(hi[i], idx[i]);
    }
  }
  if (!any) return 0.0;
  std::size_t span = std::numeric_limits<std::size_t>::max();
  for (std::size_t i = 0; i < g.dim(); ++i) span = std::min(span, hi[i] - lo[i] + 1);
  return 1.0 / static_cast<double>(span);
}

/// Measure of pi_j(E), rasterized by forward-mapping the centers of the cells of E.
/// Sheared projections use the output grid of the sheared pushforward, whose t-cells
/// have the input width, so the image of each t-run stays contiguous.
inline double projected_set_measure(const CorankGroup& g, std::size_t j, const GridDensity& e) {
  const auto& geom = e.geometry();
  require(geom.dim() == g.topo_dim(), "set raster dimension does not match the group");
  require(j < g.num_projections(), "projection index out of range");
  const auto kind = g.axis_kind(j);
  const bool sheared = kind == AxisKind::kPairFirst || kind == AxisKind::kPairSecond;
  const std::size_t drop[1] = {j};
  const GridGeometry og = sheared ? sheared_geometry(g, j, geom) : geom.without_axes(drop);
  std::vector<std::uint8_t> hit(og.size(), 0);
  const std::size_t k = geom.dim();
  std::vector<std::size_t> idx(k), oidx(k - 1);
  const std::size_t a = sheared ? g.d() + 2 * g.pair_index(j) : 0;
  const double c = sheared ? g.shear_coefficient(j) : 0.0;
  for (std::size_t cell = 0; cell < geom.size(); ++cell) {
    if (!in_set(e[cell])) continue;
    geom.unravel(cell, idx);
    std::size_t p = 0;
    for (std::size_t i = 0; i < k; ++i)
      if (i != j) oidx[p++] = idx[i];
    if (sheared) {
      const double s = geom.midpoint(k - 1, idx[k - 1]) + c * geom.midpoint(a, idx[a]) * geom.midpoint(a + 1, idx[a + 1]);
      const double u = std::floor((s - og.lower(k - 2)) / og.cell_size(k - 2));
      oidx[k - 2] = static_cast<std::size_t>(std::clamp(u, 0.0, static_cast<double>(og.res(k - 2) - 1)));
    }
    hit[og.ravel(oidx)] = 1;
  }
  std::size_t n = 0;
  for (auto h : hit) n += h;
  return static_cast<double>(n) * og.cell_volume();
}

/// m(E) <= C(d, alpha) prod_j m(pi_j E)^{c_j}.
inline Report verify_set_lw(const CorankGroup& g, const GridDensity& e, double r_norm) {
  const double m = set_measure(e);
  const auto sd = corank_constants(g);
  const double C = std::exp(sd.D.value(r_norm));
  nlohmann::json meta = {{"group", to_json(g)}, {"r_norm", r_norm}, {"constant", C}};
  if (m == 0.0) return make_report("set_lw", 0.0, 0.0, 0.0, std::move(meta));
  double rhs = C;
  nlohmann::json proj = nlohmann::json::array();
  for (std::size_t j = 0; j < g.horizontal_dim(); ++j) {
    const double mj = projected_set_measure(g, j, e);
    proj.push_back(mj);
    rhs *= std::pow(mj, to_double(sd.c[j]));
  }
  meta["projected_measures"] = proj;
  return make_report("set_lw", m, rhs, kRasterConstant * set_relative_cell(e) * std::max(m, rhs), std::move(meta));
}

/// m(E) <= prod_j m(P_j E)^{1/(k-1)} on R^k.
inline Report verify_set_lw_euclidean(const GridDensity& e) {
  const auto& geom = e.geometry();
  const std::size_t k = geom.dim();
  require(k >= 2, "Euclidean set inequality needs k >= 2");
  const double m = set_measure(e);
  if (m == 0.0) return make_report("set_lw_euclidean", 0.0, 0.0, 0.0);
  double rhs = 1.0;
  nlohmann::json proj = nlohmann::json::array();
  std::vector<std::size_t> idx(k), oidx(k - 1);
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t drop[1] = {j};
    const GridGeometry og = geom.without_axes(drop);
    std::vector<std::uint8_t> hit(og.size(), 0);
    for (std::size_t cell = 0; cell < geom.size(); ++cell) {
      if (!in_set(e[cell])) continue;
      geom.unravel(cell, idx);
      std::size_t p = 0;
      for (std::size_t i = 0; i < k; ++i)
        if (i != j) oidx[p++] = idx[i];
      hit[og.ravel(oidx)] = 1;
    }
    std::size_t n = 0;
    for (auto h : hit) n += h;
    const double mj = static_cast<double>(n) * og.cell_volume();
    proj.push_back(mj);
    rhs *= std::pow(mj, 1.0 / static_cast<double>(k - 1));
  }
  return make_report("set_lw_euclidean", m, rhs, kRasterConstant * set_relative_cell(e) * std::max(m, rhs),
                     {{"projected_measures", proj}});
}

}  // namespace carnot_lw
