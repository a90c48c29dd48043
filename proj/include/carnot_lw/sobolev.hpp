#pragma once

// L^1 Sobolev and isoperimetric consequences of the set inequality:
//   ||f||_{Q/(Q-1)} <= C_chain ||grad_H f||_1,  C_chain = (C(d, alpha) 2^{2Q/(Q-1)})^{(Q-1)/Q},
// checked together with the dyadic level-set estimate it is built from,
//   m(pi_j F_k) <= 2^{2-k} int_{F_{k-1}} |X_j f|,  F_k = {2^{k-1} <= |f| < 2^k}.

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot_lw/constants.hpp"
#include "carnot_lw/error.hpp"
#include "carnot_lw/grid.hpp"
#include "carnot_lw/group.hpp"
#include "carnot_lw/lw.hpp"
#include "carnot_lw/report.hpp"

namespace carnot_lw {

/// Nonnegative samples of f together with X_0 f .. X_{d+2n-1} f at the same cell midpoints.
struct SampledFunction {
  GridDensity values;
  std::vector<std::vector<double>> xgrad;
};

/// Samples f(GroupPoint) and its horizontal derivatives (central differences on f itself).
template <class F>
SampledFunction sample_with_gradient(const CorankGroup& g, const GridGeometry& geom, const F& f) {
  require(geom.dim() == g.topo_dim(), "grid dimension does not match the group");
  const std::size_t k = geom.dim();
  SampledFunction out{GridDensity(geom), std::vector<std::vector<double>>(g.horizontal_dim(), std::vector<double>(geom.size()))};
  auto vals = out.values.mutable_values();
  std::vector<std::size_t> idx(k);
  std::vector<double> z(k);
  GroupPoint p{std::vector<double>(k - 1), 0.0};
  for (std::size_t c = 0; c < geom.size(); ++c) {
    geom.unravel(c, idx);
    geom.cell_center(idx, z);
    std::copy(z.begin(), z.end() - 1, p.x.begin());
    p.t = z.back();
    const double v = f(p);
    require(std::isfinite(v) && v >= 0.0, "sampled function must be finite and nonnegative");
    vals[c] = v;
    const auto grad = horizontal_gradient(g, f, p, default_step(p));
    for (std::size_t j = 0; j < grad.horizontal.size(); ++j) out.xgrad[j][c] = grad.horizontal[j];
  }
  return out;
}

/// Horizontal derivatives of grid samples by central differences (one-sided on the faces).
inline std::vector<std::vector<double>> grid_horizontal_gradient(const CorankGroup& g, const GridDensity& u) {
  const auto& geom = u.geometry();
  require(geom.dim() == g.topo_dim(), "grid dimension does not match the group");
  const std::size_t k = geom.dim(), t = k - 1;
  std::vector<std::size_t> idx(k);
  auto partial = [&](std::size_t c, std::size_t axis) {
    const std::size_t s = geom.stride(axis);
    const std::size_t i = idx[axis], r = geom.res(axis);
    const double h = geom.cell_size(axis);
    if (r < 2) return 0.0;
    if (i == 0) return (u[c + s] - u[c]) / h;
    if (i + 1 == r) return (u[c] - u[c - s]) / h;
    return (u[c + s] - u[c - s]) / (2.0 * h);
  };
  std::vector<std::vector<double>> out(g.horizontal_dim(), std::vector<double>(geom.size()));
  for (std::size_t c = 0; c < geom.size(); ++c) {
    geom.unravel(c, idx);
    const double dt = partial(c, t);
    for (std::size_t j = 0; j < g.horizontal_dim(); ++j) {
      double v = partial(c, j);
      switch (g.axis_kind(j)) {
        case AxisKind::kPairFirst:
          v -= 0.5 * g.alpha()[g.pair_index(j)] * geom.midpoint(j + 1, idx[j + 1]) * dt;
          break;
        case AxisKind::kPairSecond:
          v += 0.5 * g.alpha()[g.pair_index(j)] * geom.midpoint(j - 1, idx[j - 1]) * dt;
          break;
        default: break;
      }
      out[j][c] = v;
    }
  }
  return out;
}

/// f o delta_r: the same samples on the box shrunk by delta_{1/r}, derivatives times r.
inline SampledFunction dilated(const SampledFunction& f, double r) {
  require(r > 0.0, "dilation factor must be positive");
  const auto& geom = f.values.geometry();
  std::vector<double> factors(geom.dim(), 1.0 / r);
  factors.back() = 1.0 / (r * r);
  SampledFunction out{GridDensity(geom.scaled(factors), std::vector<double>(f.values.values().begin(), f.values.values().end())),
                      f.xgrad};
  for (auto& col : out.xgrad)
    for (auto& v : col) v *= r;
  return out;
}

/// ||grad_H f||_1 with |grad_H f| the Euclidean norm of (X_j f)_j.
inline double horizontal_gradient_l1(const SampledFunction& f) {
  const std::size_t cells = f.values.geometry().size();
  double s = 0.0;
  for (std::size_t c = 0; c < cells; ++c) {
    double q = 0.0;
    for (const auto& col : f.xgrad) q += col[c] * col[c];
    s += std::sqrt(q);
  }
  return s * f.values.geometry().cell_volume();
}

inline double horizontal_derivative_l1(const SampledFunction& f, std::size_t j) {
  double s = 0.0;
  for (double v : f.xgrad[j]) s += std::abs(v);
  return s * f.values.geometry().cell_volume();
}

/// (C(d, alpha) 2^{2Q/(Q-1)})^{(Q-1)/Q}.
inline double sobolev_chain_constant(const CorankGroup& g, double r_norm) {
  const double Q = static_cast<double>(g.homogeneous_dim());
  return std::pow(lw_constant(g, r_norm) * std::pow(2.0, 2.0 * Q / (Q - 1.0)), (Q - 1.0) / Q);
}

/// Largest sample on the outer faces of the box.
inline double boundary_max(const GridDensity& f) {
  const auto& g = f.geometry();
  std::vector<std::size_t> idx(g.dim());
  double m = 0.0;
  for (std::size_t c = 0; c < g.size(); ++c) {
    g.unravel(c, idx);
    for (std::size_t i = 0; i < g.dim(); ++i)
      if (idx[i] == 0 || idx[i] + 1 == g.res(i)) {
        m = std::max(m, f[c]);
        break;
      }
  }
  return m;
}

/// Worst ratio m(pi_j F_k) / (2^{2-k} int_{F_{k-1}} |X_j f|) over horizontal j and bands k
/// whose lower band sits above the boundary values and whose F_k has at least min_cells cells.
/// Report: lhs = worst ratio, rhs = 1.
inline Report level_set_check(const CorankGroup& g, const SampledFunction& f, std::size_t min_cells = 64) {
  const auto& geom = f.values.geometry();
  require(geom.dim() == g.topo_dim(), "grid dimension does not match the group");
  require(f.xgrad.size() == g.horizontal_dim(), "need one derivative array per horizontal direction");
  const double vmax = f.values.max_value();
  nlohmann::json bands = nlohmann::json::array();
  if (vmax == 0.0) return make_report("level_sets", 0.0, 0.0, 0.0, {{"bands", bands}});
  const double edge = boundary_max(f.values);
  double vmin = vmax;
  for (double v : f.values.values())
    if (v > 0.0) vmin = std::min(vmin, v);
  const double dv = geom.cell_volume();
  const int k_hi = static_cast<int>(std::floor(std::log2(vmax))) + 1;
  double worst = 0.0, worst_tol = 0.0;
  for (int k = k_hi; k > -60; --k) {
    const double lo = std::ldexp(1.0, k - 1), hi = std::ldexp(1.0, k);
    if (std::ldexp(1.0, k - 2) <= edge || hi <= vmin) break;
    GridDensity band(geom);
    auto bv = band.mutable_values();
    std::size_t count = 0;
    for (std::size_t c = 0; c < geom.size(); ++c)
      if (f.values[c] >= lo && f.values[c] < hi) {
        bv[c] = 1.0;
        ++count;
      }
    if (count < min_cells) continue;
    const double tol = kRasterConstant * set_relative_cell(band);
    for (std::size_t j = 0; j < g.horizontal_dim(); ++j) {
      const double m = projected_set_measure(g, j, band);
      double integral = 0.0;
      for (std::size_t c = 0; c < geom.size(); ++c)
        if (f.values[c] >= lo / 2 && f.values[c] < lo) integral += std::abs(f.xgrad[j][c]);
      const double rhs = std::ldexp(1.0, 2 - k) * integral * dv;
      const double ratio = rhs > 0.0 ? m / rhs : std::numeric_limits<double>::infinity();
      bands.push_back({{"k", k}, {"j", j}, {"projected_measure", m}, {"bound", rhs}});
      if (ratio - tol > worst - worst_tol) {
        worst = ratio;
        worst_tol = tol;
      }
    }
  }
  return make_report("level_sets", worst, 1.0, worst_tol, {{"bands", bands}, {"group", to_json(g)}});
}

/// ||f||_{Q/(Q-1)} <= C_chain ||grad_H f||_1.
inline Report sobolev_check(const CorankGroup& g, const SampledFunction& f, double r_norm) {
  const auto& geom = f.values.geometry();
  require(geom.dim() == g.topo_dim(), "grid dimension does not match the group");
  if (support_touches_boundary(f.values, 1e-9)) throw InvalidArgument("function support touches the grid boundary");
  const double Q = static_cast<double>(g.homogeneous_dim());
  const double lhs = lp_norm(f.values, Q / (Q - 1.0));
  const double grad = horizontal_gradient_l1(f);
  const double C = sobolev_chain_constant(g, r_norm);
  const double rhs = C * grad;
  // the intermediate product form prod_j ||X_j f||_1^{c_j (Q-1)/Q}, never larger than ||grad f||_1
  const auto sd = corank_constants(g);
  double prod = C;
  for (std::size_t j = 0; j < g.horizontal_dim(); ++j)
    prod *= std::pow(horizontal_derivative_l1(f, j), to_double(sd.c[j]) * (Q - 1.0) / Q);
  return make_report("sobolev", lhs, rhs, quadrature_tolerance(static_cast<std::size_t>(1.0 / geom.relative_cell()), lhs, rhs),
                     {{"group", to_json(g)},
                      {"r_norm", r_norm},
                      {"chain_constant", C},
                      {"gradient_l1", grad},
                      {"ratio", lhs / grad},
                      {"product_form_rhs", prod}});
}

/// u = phi_w * chi_E with (phi * g)(p) = int phi(q) g(q^{-1} p) dq and phi_w the delta_w-rescaled
/// bump (1 - |z|^2)^2_+, discretized on a points^k tensor rule. Left-invariant derivatives
/// commute with this convolution, so ||grad_H u||_1 never exceeds the perimeter of E.
inline GridDensity mollify_set(const CorankGroup& g, const GridDensity& e, double width, std::size_t points = 7) {
  const auto& geom = e.geometry();
  require(geom.dim() == g.topo_dim(), "set raster dimension does not match the group");
  require(width > 0.0, "mollifier width must be positive");
  require(points >= 2, "mollifier needs at least 2 points per axis");
  const std::size_t k = geom.dim();
  struct Node {
    std::vector<double> x;
    double t, w;
  };
  std::vector<Node> nodes;
  {
    const auto ref = GridGeometry::cube(k, -1.0, 1.0, points);
    std::vector<std::size_t> idx(k);
    std::vector<double> z(k);
    double total = 0.0;
    for (std::size_t c = 0; c < ref.size(); ++c) {
      ref.unravel(c, idx);
      ref.cell_center(idx, z);
      double q = 0.0;
      for (double v : z) q += v * v;
      if (q >= 1.0) continue;
      Node nd{std::vector<double>(k - 1), width * width * z.back(), (1.0 - q) * (1.0 - q)};
      for (std::size_t i = 0; i + 1 < k; ++i) nd.x[i] = width * z[i];
      total += nd.w;
      nodes.push_back(std::move(nd));
    }
    for (auto& nd : nodes) nd.w /= total;
  }
  auto lookup = [&](std::span<const double> y) {
    std::size_t flat = 0;
    for (std::size_t i = 0; i < k; ++i) {
      const double u = std::floor((y[i] - geom.lower(i)) / geom.cell_size(i));
      if (u < 0.0 || u >= static_cast<double>(geom.res(i))) return 0.0;
      flat += static_cast<std::size_t>(u) * geom.stride(i);
    }
    return in_set(e[flat]) ? 1.0 : 0.0;
  };
  GridDensity u(geom);
  auto uv = u.mutable_values();
  std::vector<std::size_t> idx(k);
  std::vector<double> p(k), y(k), negx(k - 1);
  for (std::size_t c = 0; c < geom.size(); ++c) {
    geom.unravel(c, idx);
    geom.cell_center(idx, p);
    const std::span<const double> px(p.data(), k - 1);
    double acc = 0.0;
    for (const auto& nd : nodes) {
      // q^{-1} p = (x_p - x_q, t_p - t_q + twist(-x_q, x_p))
      for (std::size_t i = 0; i + 1 < k; ++i) {
        negx[i] = -nd.x[i];
        y[i] = p[i] - nd.x[i];
      }
      y[k - 1] = p[k - 1] - nd.t + twist(g, negx, px);
      acc += nd.w * lookup(y);
    }
    uv[c] = acc;
  }
  return u;
}

/// m(E)^{(Q-1)/Q} <= C_chain P(E), with P(E) estimated by ||grad_H (phi_w * chi_E)||_1.
inline Report isoperimetric_check(const CorankGroup& g, const GridDensity& e, double width, double r_norm,
                                  std::size_t points = 7) {
  const double m = set_measure(e);
  const double Q = static_cast<double>(g.homogeneous_dim());
  nlohmann::json meta = {{"group", to_json(g)}, {"r_norm", r_norm}, {"width", width}};
  if (m == 0.0) return make_report("isoperimetric", 0.0, 0.0, 0.0, std::move(meta));
  const GridDensity u = mollify_set(g, e, width, points);
  if (support_touches_boundary(u, 1e-9)) throw InvalidArgument("mollified set touches the grid boundary");
  SampledFunction sf{u, grid_horizontal_gradient(g, u)};
  const double perimeter = horizontal_gradient_l1(sf);
  const double lhs = std::pow(m, (Q - 1.0) / Q);
  const double rhs = sobolev_chain_constant(g, r_norm) * perimeter;
  meta["measure"] = m;
  meta["perimeter"] = perimeter;
  meta["mollified_norm"] = lp_norm(u, Q / (Q - 1.0));
  return make_report("isoperimetric", lhs, rhs, kRasterConstant * set_relative_cell(e) * std::max(lhs, rhs),
                     std::move(meta));
}

}  // namespace carnot_lw
