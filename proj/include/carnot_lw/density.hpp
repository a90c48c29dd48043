#pragma once

// Entropy calculus on grid densities: S(f) = sum f ln f dV (0 ln 0 = 0),
// marginals, coordinate and corank pushforwards, conditional entropy profiles
// and the Gibbs variational gap.

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "carnot_lw/error.hpp"
#include "carnot_lw/grid.hpp"
#include "carnot_lw/group.hpp"

namespace carnot_lw {

inline constexpr double kMassTolerance = 1e-6;
inline constexpr double kConditionalMassFloor = 1e-12;

inline double xlogx(double v) { return v > 0.0 ? v * std::log(v) : 0.0; }

struct MassAndEntropy {
  double mass = 0.0;
  double entropy_sum = 0.0;  // sum v ln v dV
};

template <LineSource S>
MassAndEntropy mass_and_entropy(const S& f) {
  double m = 0.0, e = 0.0;
  for_each_line(f, [&](std::size_t, std::span<const double> v) {
    for (double x : v) {
      m += x;
      e += xlogx(x);
    }
  });
  const double dv = f.geometry().cell_volume();
  return {m * dv, e * dv};
}

/// Differential entropy of a probability density; throws if the mass is not 1 within 1e-6.
template <LineSource S>
double entropy(const S& f) {
  const auto me = mass_and_entropy(f);
  if (std::abs(me.mass - 1.0) > kMassTolerance)
    throw NumericalError("entropy needs a normalized density (mass = " + std::to_string(me.mass) + ")");
  return me.entropy_sum;
}

/// Integrates out every axis not listed in `kept` (kept keeps its original order).
template <LineSource S>
GridDensity marginal(const S& f, std::vector<std::size_t> kept) {
  const GridGeometry& g = f.geometry();
  const std::size_t k = g.dim();
  require(!kept.empty(), "marginal needs at least one kept axis");
  std::sort(kept.begin(), kept.end());
  kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
  for (auto a : kept) require(a < k, "marginal axis out of range");
  if (kept.size() == k) return GridDensity::materialize(f);

  std::vector<std::size_t> dropped;
  double dropped_volume = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    if (!std::binary_search(kept.begin(), kept.end(), i)) {
      dropped.push_back(i);
      dropped_volume *= g.cell_size(i);
    }
  GridDensity out(g.without_axes(dropped));
  const GridGeometry& og = out.geometry();
  auto dst = out.mutable_values();

  // output stride contributed by each input axis (0 when integrated out)
  std::vector<std::size_t> ostride(k, 0);
  for (std::size_t p = 0; p < kept.size(); ++p) ostride[kept[p]] = og.stride(p);
  const std::size_t last_stride = ostride[k - 1];

  std::vector<std::size_t> idx(k);
  for_each_line(f, [&](std::size_t l, std::span<const double> v) {
    g.unravel(l * g.line_length(), idx);
    std::size_t base = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) base += idx[i] * ostride[i];
    if (last_stride == 0) {
      double s = 0.0;
      for (double x : v) s += x;
      dst[base] += s * dropped_volume;
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) dst[base + i * last_stride] += v[i] * dropped_volume;
    }
  });
  return out;
}

/// Pushforward under the coordinate-deletion map P that drops `deleted`.
template <LineSource S>
GridDensity coordinate_pushforward(const S& f, std::span<const std::size_t> deleted) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < f.geometry().dim(); ++i)
    if (std::find(deleted.begin(), deleted.end(), i) == deleted.end()) kept.push_back(i);
  require(!kept.empty(), "cannot delete every axis");
  return marginal(f, std::move(kept));
}

inline constexpr double kMaxShearedCells = 1 << 24;

/// Output geometry of the sheared pushforward along projection j: the t-axis keeps
/// its cell width and grows to cover every shifted input cell plus one cell of margin.
inline GridGeometry sheared_geometry(const CorankGroup& grp, std::size_t j, const GridGeometry& g) {
  const std::size_t a = grp.d() + 2 * grp.pair_index(j);
  const std::size_t t_axis = grp.horizontal_dim();
  const double c = grp.shear_coefficient(j);
  const double xa[2] = {g.midpoint(a, 0), g.midpoint(a, g.res(a) - 1)};
  const double xb[2] = {g.midpoint(a + 1, 0), g.midpoint(a + 1, g.res(a + 1) - 1)};
  double smin = std::numeric_limits<double>::infinity(), smax = -smin;
  for (double u : xa)
    for (double w : xb) {
      smin = std::min(smin, c * u * w);
      smax = std::max(smax, c * u * w);
    }
  const double dt = g.cell_size(t_axis);
  const double lo = g.lower(t_axis) + smin - dt;
  const double span = (g.upper(t_axis) + smax + dt) - lo;
  const double want = std::ceil(span / dt - 1e-9);
  if (!(want <= kMaxShearedCells))
    throw NumericalError("sheared image needs " + std::to_string(want) + " t-cells; the shear is too strong for this grid");
  const auto cells = static_cast<std::size_t>(want);

  const std::size_t drop[1] = {j};
  GridGeometry base = g.without_axes(drop);
  auto lows = base.lowers(), highs = base.uppers();
  auto res = base.resolutions();
  lows.back() = lo;
  highs.back() = lo + static_cast<double>(cells) * dt;
  res.back() = cells;
  return {std::move(lows), std::move(highs), std::move(res)};
}

/// Density of (pi_j)_#(f dm) for f on R^{d+2n+1} (t last).
///
/// Commuting j and the vertical projection are plain marginals. For paired j the
/// fiber integral f_(pi_j)(x^_j, s) = int f(x, s - c x_a x_b) dx_j is evaluated by
/// shifting each t-line by c x_a x_b and splitting every cell between the two output
/// cells it overlaps (linear interpolation in t), which conserves mass exactly.
template <LineSource S>
GridDensity corank_pushforward(const CorankGroup& grp, std::size_t j, const S& f) {
  const GridGeometry& g = f.geometry();
  require(g.dim() == grp.topo_dim(), "density dimension does not match the group");
  require(j < grp.num_projections(), "projection index out of range");
  const AxisKind kind = grp.axis_kind(j);
  if (kind == AxisKind::kVertical || kind == AxisKind::kCommuting) {
    const std::size_t drop[1] = {j};
    return coordinate_pushforward(f, drop);
  }

  const std::size_t k = g.dim();
  const std::size_t a = grp.d() + 2 * grp.pair_index(j);
  const double c = grp.shear_coefficient(j);
  GridDensity out(sheared_geometry(grp, j, g));
  const GridGeometry& og = out.geometry();
  auto dst = out.mutable_values();
  const double dt = g.cell_size(k - 1);
  const double dxj = g.cell_size(j);
  const std::size_t out_len = og.line_length();

  std::vector<std::size_t> idx(k), oidx(k - 1);
  for_each_line(f, [&](std::size_t l, std::span<const double> v) {
    g.unravel(l * g.line_length(), idx);
    const double shift = c * g.midpoint(a, idx[a]) * g.midpoint(a + 1, idx[a + 1]);
    std::size_t p = 0;
    for (std::size_t i = 0; i + 1 < k; ++i)
      if (i != j) oidx[p++] = idx[i];
    oidx[k - 2] = 0;
    double* row = dst.data() + og.ravel(oidx);
    // continuous output index of input cell 0's shifted midpoint
    const double u0 = (g.midpoint(k - 1, 0) + shift - og.lower(k - 2)) / dt - 0.5;
    const double fl = std::floor(u0);
    const double w = u0 - fl;
    const auto off = static_cast<long long>(fl);
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (v[i] == 0.0) continue;
      const auto o = static_cast<std::size_t>(off + static_cast<long long>(i));
      const double m = v[i] * dxj;
      row[o] += m * (1.0 - w);
      if (o + 1 < out_len) row[o + 1] += m * w;
    }
  });
  return out;
}

/// Streamed view of the sheared pushforward for a paired projection j: each output
/// t-line is assembled from the res(j) input lines that feed it, so the pushforward of
/// a streamed source never has to be stored. Values agree with corank_pushforward.
template <LineSource S>
class ShearedPushforward {
 public:
  ShearedPushforward(const CorankGroup& grp, std::size_t j, const S& src)
      : src_(src), j_(j), a_(0), c_(0.0), geom_(check(grp, j, src)) {
    a_ = grp.d() + 2 * grp.pair_index(j);
    c_ = grp.shear_coefficient(j);
  }

  const GridGeometry& geometry() const { return geom_; }

  void read_line(std::size_t line, std::span<double> buf) const {
    const GridGeometry& g = src_.geometry();
    const std::size_t k = g.dim();
    std::vector<std::size_t> oidx(k - 1), idx(k);
    geom_.unravel(line * geom_.line_length(), oidx);
    std::size_t p = 0;
    for (std::size_t i = 0; i + 1 < k; ++i)
      if (i != j_) idx[i] = oidx[p++];
    idx[k - 1] = 0;
    std::fill(buf.begin(), buf.end(), 0.0);
    std::vector<double> in(g.line_length());
    const double dt = g.cell_size(k - 1), dxj = g.cell_size(j_);
    for (std::size_t r = 0; r < g.res(j_); ++r) {
      idx[j_] = r;
      src_.read_line(g.ravel(idx) / g.line_length(), in);
      const double shift = c_ * g.midpoint(a_, idx[a_]) * g.midpoint(a_ + 1, idx[a_ + 1]);
      const double u0 = (g.midpoint(k - 1, 0) + shift - geom_.lower(k - 2)) / dt - 0.5;
      const double fl = std::floor(u0);
      const double w = u0 - fl;
      const auto off = static_cast<long long>(fl);
      for (std::size_t i = 0; i < in.size(); ++i) {
        if (in[i] == 0.0) continue;
        const auto o = static_cast<std::size_t>(off + static_cast<long long>(i));
        const double m = in[i] * dxj;
        buf[o] += m * (1.0 - w);
        if (o + 1 < buf.size()) buf[o + 1] += m * w;
      }
    }
  }

 private:
  static GridGeometry check(const CorankGroup& grp, std::size_t j, const S& src) {
    require(src.geometry().dim() == grp.topo_dim(), "density dimension does not match the group");
    require(j < grp.horizontal_dim(), "projection index out of range");
    const AxisKind kind = grp.axis_kind(j);
    require(kind == AxisKind::kPairFirst || kind == AxisKind::kPairSecond,
            "streamed pushforward is only needed for paired projections");
    return sheared_geometry(grp, j, src.geometry());
  }

  const S& src_;
  std::size_t j_, a_;
  double c_;
  GridGeometry geom_;
};

struct ConditionalProfile {
  GridDensity marginal;            // f_Y on the conditioning axes
  std::vector<double> entropy;     // S(X | Y = y) per y-cell, NaN where absent
  std::vector<bool> present;       // f_Y(y) >= mass floor
};

/// Conditional entropy of the remaining axes given `cond_axes` (the Y block), per Y-cell.
template <LineSource S>
ConditionalProfile conditional_entropy_profile(const S& f, std::vector<std::size_t> cond_axes,
                                               double mass_floor = kConditionalMassFloor) {
  const GridGeometry& g = f.geometry();
  const std::size_t k = g.dim();
  require(!cond_axes.empty() && cond_axes.size() < k, "conditioning block must be a proper nonempty subset");
  std::sort(cond_axes.begin(), cond_axes.end());
  for (auto a : cond_axes) require(a < k, "conditioning axis out of range");
  const auto me = mass_and_entropy(f);
  if (std::abs(me.mass - 1.0) > kMassTolerance)
    throw NumericalError("conditional entropy needs a normalized density");

  std::vector<std::size_t> free_axes;
  double free_volume = 1.0;
  for (std::size_t i = 0; i < k; ++i)
    if (!std::binary_search(cond_axes.begin(), cond_axes.end(), i)) {
      free_axes.push_back(i);
      free_volume *= g.cell_size(i);
    }
  GridDensity fy(g.without_axes(free_axes));
  const GridGeometry& yg = fy.geometry();
  std::vector<double> ent_sum(yg.size(), 0.0);
  auto mass = fy.mutable_values();

  std::vector<std::size_t> ystride(k, 0);
  for (std::size_t p = 0; p < cond_axes.size(); ++p) ystride[cond_axes[p]] = yg.stride(p);
  const std::size_t last_stride = ystride[k - 1];
  std::vector<std::size_t> idx(k);
  for_each_line(f, [&](std::size_t l, std::span<const double> v) {
    g.unravel(l * g.line_length(), idx);
    std::size_t base = 0;
    for (std::size_t i = 0; i + 1 < k; ++i) base += idx[i] * ystride[i];
    for (std::size_t i = 0; i < v.size(); ++i) {
      const std::size_t y = base + i * last_stride;
      mass[y] += v[i] * free_volume;
      ent_sum[y] += xlogx(v[i]) * free_volume;
    }
  });

  ConditionalProfile out{std::move(fy), std::vector<double>(yg.size()), std::vector<bool>(yg.size())};
  const auto fyv = out.marginal.values();
  for (std::size_t y = 0; y < yg.size(); ++y) {
    out.present[y] = fyv[y] >= mass_floor;
    out.entropy[y] = out.present[y] ? ent_sum[y] / fyv[y] - std::log(fyv[y])
                                    : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

/// Integral of S(X|Y=y) f_Y(y) dy over the present cells.
inline double averaged_conditional_entropy(const ConditionalProfile& p) {
  const auto fy = p.marginal.values();
  double s = 0.0;
  for (std::size_t y = 0; y < fy.size(); ++y)
    if (p.present[y]) s += p.entropy[y] * fy[y];
  return s * p.marginal.geometry().cell_volume();
}

/// |S(X,Y) - S(Y) - int S(X|Y=y) f_Y(y) dy| with Y the block `cond_axes`.
template <LineSource S>
double chain_rule_residual(const S& f, std::vector<std::size_t> cond_axes) {
  const auto prof = conditional_entropy_profile(f, std::move(cond_axes));
  return std::abs(entropy(f) - entropy(prof.marginal) - averaged_conditional_entropy(prof));
}

/// S(f) + ln int e^phi - int f phi, which is >= 0 with equality iff e^phi = f.
/// phi lives on the same grid as f; cells with f = 0 contribute nothing to int f phi.
inline double gibbs_gap(const GridDensity& f, std::span<const double> phi) {
  const auto& g = f.geometry();
  require(phi.size() == g.size(), "potential must live on the density's grid");
  const double dv = g.cell_volume();
  double pmax = -std::numeric_limits<double>::infinity();
  for (double p : phi) pmax = std::max(pmax, p);
  if (!std::isfinite(pmax)) throw NumericalError("potential must have a finite maximum");
  double se = 0.0, fphi = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    se += std::exp(phi[i] - pmax);
    if (f[i] > 0.0) fphi += f[i] * phi[i];
  }
  const double log_z = pmax + std::log(se * dv);
  return entropy(f) + log_z - fphi * dv;
}

}  // namespace carnot_lw
