#pragma once

// Uniform axis-aligned grids and the densities sampled on them.
//
// Values are cell-midpoint samples stored row-major (last axis fastest). Where a
// grid is read as a function on R^k it is the multilinear interpolant of the
// midpoint samples, extended by zero: virtual cells outside the box hold 0.
// With that convention the integral of the interpolant equals the cell sum.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "carnot_lw/error.hpp"

namespace carnot_lw {

class GridGeometry {
 public:
  GridGeometry() = default;
  GridGeometry(std::vector<double> lower, std::vector<double> upper, std::vector<std::size_t> res)
      : lower_(std::move(lower)), upper_(std::move(upper)), res_(std::move(res)) {
    require(!res_.empty(), "grid must have at least one axis");
    require(lower_.size() == res_.size() && upper_.size() == res_.size(),
            "grid corner and resolution vectors must have equal length");
    for (std::size_t i = 0; i < res_.size(); ++i) {
      require(std::isfinite(lower_[i]) && std::isfinite(upper_[i]) && lower_[i] < upper_[i],
              "grid box must satisfy lower < upper on every axis");
      require(res_[i] > 0, "grid resolution must be positive on every axis");
    }
    strides_.assign(res_.size(), 1);
    for (std::size_t i = res_.size() - 1; i > 0; --i) strides_[i - 1] = strides_[i] * res_[i];
    size_ = strides_[0] * res_[0];
  }

  /// Cube [lo, hi]^k with `res` cells per axis.
  static GridGeometry cube(std::size_t k, double lo, double hi, std::size_t res) {
    return {std::vector<double>(k, lo), std::vector<double>(k, hi), std::vector<std::size_t>(k, res)};
  }

  std::size_t dim() const { return res_.size(); }
  std::size_t size() const { return size_; }
  double lower(std::size_t i) const { return lower_[i]; }
  double upper(std::size_t i) const { return upper_[i]; }
  std::size_t res(std::size_t i) const { return res_[i]; }
  const std::vector<double>& lowers() const { return lower_; }
  const std::vector<double>& uppers() const { return upper_; }
  const std::vector<std::size_t>& resolutions() const { return res_; }
  std::size_t stride(std::size_t i) const { return strides_[i]; }

  double cell_size(std::size_t i) const { return (upper_[i] - lower_[i]) / static_cast<double>(res_[i]); }
  double cell_volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= cell_size(i);
    return v;
  }
  double box_volume() const {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) v *= upper_[i] - lower_[i];
    return v;
  }
  double midpoint(std::size_t axis, std::size_t i) const {
    return lower_[axis] + (static_cast<double>(i) + 0.5) * cell_size(axis);
  }
  /// Largest cell side relative to its box side (1 / smallest resolution).
  double relative_cell() const {
    return 1.0 / static_cast<double>(*std::min_element(res_.begin(), res_.end()));
  }

  /// Lines run along the last axis.
  std::size_t line_length() const { return res_.back(); }
  std::size_t num_lines() const { return size_ / res_.back(); }

  void unravel(std::size_t flat, std::span<std::size_t> idx) const {
    for (std::size_t i = 0; i < dim(); ++i) {
      idx[i] = flat / strides_[i];
      flat -= idx[i] * strides_[i];
    }
  }
  std::size_t ravel(std::span<const std::size_t> idx) const {
    std::size_t f = 0;
    for (std::size_t i = 0; i < dim(); ++i) f += idx[i] * strides_[i];
    return f;
  }
  void cell_center(std::span<const std::size_t> idx, std::span<double> x) const {
    for (std::size_t i = 0; i < dim(); ++i) x[i] = midpoint(i, idx[i]);
  }

  GridGeometry without_axes(std::span<const std::size_t> axes) const {
    std::vector<double> lo, hi;
    std::vector<std::size_t> r;
    for (std::size_t i = 0; i < dim(); ++i) {
      if (std::find(axes.begin(), axes.end(), i) != axes.end()) continue;
      lo.push_back(lower_[i]);
      hi.push_back(upper_[i]);
      r.push_back(res_[i]);
    }
    return {std::move(lo), std::move(hi), std::move(r)};
  }

  /// Same box scaled per axis, same resolution.
  GridGeometry scaled(std::span<const double> factors) const {
    auto lo = lower_, hi = upper_;
    for (std::size_t i = 0; i < dim(); ++i) {
      lo[i] *= factors[i];
      hi[i] *= factors[i];
      if (lo[i] > hi[i]) std::swap(lo[i], hi[i]);
    }
    return {std::move(lo), std::move(hi), res_};
  }

  friend bool operator==(const GridGeometry& a, const GridGeometry& b) {
    return a.lower_ == b.lower_ && a.upper_ == b.upper_ && a.res_ == b.res_;
  }

 private:
  std::vector<double> lower_, upper_;
  std::vector<std::size_t> res_, strides_;
  std::size_t size_ = 0;
};

/// Anything that can stream its samples one last-axis line at a time.
template <class S>
concept LineSource = requires(const S& s, std::size_t line, std::span<double> buf) {
  { s.geometry() } -> std::convertible_to<const GridGeometry&>;
  s.read_line(line, buf);
};

class GridDensity {
 public:
  GridDensity() = default;
  explicit GridDensity(GridGeometry geom) : geom_(std::move(geom)), values_(geom_.size(), 0.0) {}
  GridDensity(GridGeometry geom, std::vector<double> values)
      : geom_(std::move(geom)), values_(std::move(values)) {
    require(values_.size() == geom_.size(), "value array size does not match grid");
    for (double v : values_)
      require(std::isfinite(v) && v >= 0.0, "density values must be finite and nonnegative");
  }

  /// Samples f at every cell midpoint; f receives a span of coordinates.
  template <class F>
  static GridDensity sample(const GridGeometry& geom, F&& f) {
    GridDensity out(geom);
    std::vector<std::size_t> idx(geom.dim());
    std::vector<double> x(geom.dim());
    for (std::size_t c = 0; c < geom.size(); ++c) {
      geom.unravel(c, idx);
      geom.cell_center(idx, x);
      const double v = f(std::span<const double>(x));
      require(std::isfinite(v) && v >= 0.0, "sampled density must be finite and nonnegative");
      out.values_[c] = v;
    }
    return out;
  }

  template <LineSource S>
  static GridDensity materialize(const S& src) {
    GridDensity out(src.geometry());
    const std::size_t len = out.geom_.line_length();
    for (std::size_t l = 0; l < out.geom_.num_lines(); ++l)
      src.read_line(l, std::span<double>(out.values_.data() + l * len, len));
    return out;
  }

  const GridGeometry& geometry() const { return geom_; }
  std::size_t dim() const { return geom_.dim(); }
  std::span<const double> values() const { return values_; }
  /// Direct write access for algorithms that fill a grid; callers keep values finite and >= 0.
  std::span<double> mutable_values() { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }

  void read_line(std::size_t line, std::span<double> buf) const {
    const std::size_t len = geom_.line_length();
    std::copy_n(values_.data() + line * len, len, buf.data());
  }
  std::span<const double> line(std::size_t l) const {
    return {values_.data() + l * geom_.line_length(), geom_.line_length()};
  }

  double max_value() const {
    return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end());
  }

  GridDensity scaled(double s) const {
    require(std::isfinite(s) && s >= 0.0, "scale factor must be finite and nonnegative");
    GridDensity out = *this;
    for (double& v : out.values_) v *= s;
    return out;
  }

  /// Multilinear interpolant with zero extension beyond the box.
  double interpolate(std::span<const double> x) const {
    const std::size_t k = dim();
    require(k <= 8, "interpolation supports at most 8 dimensions");
    std::size_t base[8];
    double frac[8];
    bool lo_valid[8], hi_valid[8];
    for (std::size_t i = 0; i < k; ++i) {
      const double u = (x[i] - geom_.lower(i)) / geom_.cell_size(i) - 0.5;
      const double fl = std::floor(u);
      if (fl < -1.0 || fl > static_cast<double>(geom_.res(i)) - 1.0) return 0.0;
      const auto i0 = static_cast<long long>(fl);
      frac[i] = u - fl;
      lo_valid[i] = i0 >= 0;
      hi_valid[i] = i0 + 1 < static_cast<long long>(geom_.res(i));
      base[i] = lo_valid[i] ? static_cast<std::size_t>(i0) : 0;
    }
    double acc = 0.0;
    const std::size_t corners = std::size_t{1} << k;
    for (std::size_t c = 0; c < corners; ++c) {
      double w = 1.0;
      std::size_t flat = 0;
      bool valid = true;
      for (std::size_t i = 0; i < k; ++i) {
        const bool hi = (c >> i) & 1U;
        if (hi ? !hi_valid[i] : !lo_valid[i]) {
          valid = false;
          break;
        }
        w *= hi ? frac[i] : 1.0 - frac[i];
        flat += (hi ? (lo_valid[i] ? base[i] + 1 : 0) : base[i]) * geom_.stride(i);
      }
      if (valid && w != 0.0) acc += w * values_[flat];
    }
    return acc;
  }

  friend bool operator==(const GridDensity&, const GridDensity&) = default;

 private:
  GridGeometry geom_;
  std::vector<double> values_;
};

static_assert(LineSource<GridDensity>);

/// A density given by a callable, sampled lazily at cell midpoints and multiplied by `scale`.
/// Used for grids too large to store.
template <class F>
class SampledField {
 public:
  SampledField(GridGeometry geom, F f, double scale = 1.0)
      : geom_(std::move(geom)), f_(std::move(f)), scale_(scale) {}

  const GridGeometry& geometry() const { return geom_; }

  void read_line(std::size_t line, std::span<double> buf) const {
    const std::size_t k = geom_.dim();
    std::vector<std::size_t> idx(k);
    std::vector<double> x(k);
    geom_.unravel(line * geom_.line_length(), idx);
    geom_.cell_center(idx, x);
    for (std::size_t i = 0; i < geom_.line_length(); ++i) {
      x[k - 1] = geom_.midpoint(k - 1, i);
      buf[i] = scale_ * f_(std::span<const double>(x));
    }
  }

  SampledField with_scale(double s) const { return SampledField(geom_, f_, s); }

 private:
  GridGeometry geom_;
  F f_;
  double scale_;
};

/// Centered-or-shifted Gaussian exp(-1/2 (z-m)^T P (z-m)) times `scale`, streamed by lines.
/// Each line costs one exponential per cell.
class GaussianField {
 public:
  GaussianField(GridGeometry geom, std::vector<double> mean, std::vector<double> precision,
                double scale = 1.0)
      : geom_(std::move(geom)), mean_(std::move(mean)), prec_(std::move(precision)), scale_(scale) {
    const std::size_t k = geom_.dim();
    require(mean_.size() == k, "gaussian mean has wrong dimension");
    require(prec_.size() == k * k, "gaussian precision matrix has wrong size");
  }

  /// Independent coordinates with the given standard deviations.
  static GaussianField diagonal(GridGeometry geom, std::span<const double> sigma) {
    const std::size_t k = geom.dim();
    require(sigma.size() == k, "need one standard deviation per axis");
    std::vector<double> p(k * k, 0.0);
    for (std::size_t i = 0; i < k; ++i) {
      require(sigma[i] > 0.0, "standard deviations must be positive");
      p[i * k + i] = 1.0 / (sigma[i] * sigma[i]);
    }
    return GaussianField(std::move(geom), std::vector<double>(k, 0.0), std::move(p));
  }

  const GridGeometry& geometry() const { return geom_; }
  double scale() const { return scale_; }
  GaussianField with_scale(double s) const { return GaussianField(geom_, mean_, prec_, s); }

  void read_line(std::size_t line, std::span<double> buf) const {
    const std::size_t k = geom_.dim();
    const std::size_t last = k - 1;
    std::vector<std::size_t> idx(k);
    std::vector<double> z(k);
    geom_.unravel(line * geom_.line_length(), idx);
    for (std::size_t i = 0; i < last; ++i) z[i] = geom_.midpoint(i, idx[i]) - mean_[i];
    // q(s) = a + 2 b s + c s^2 with s = t - mean_t
    double a = 0.0, b = 0.0;
    for (std::size_t i = 0; i < last; ++i) {
      b += prec_[last * k + i] * z[i];
      for (std::size_t j = 0; j < last; ++j) a += z[i] * prec_[i * k + j] * z[j];
    }
    const double c = prec_[last * k + last];
    for (std::size_t i = 0; i < geom_.line_length(); ++i) {
      const double s = geom_.midpoint(last, i) - mean_[last];
      buf[i] = scale_ * std::exp(-0.5 * (a + 2.0 * b * s + c * s * s));
    }
  }

 private:
  GridGeometry geom_;
  std::vector<double> mean_, prec_;
  double scale_;
};

static_assert(LineSource<GaussianField>);

/// Calls fn(line_index, span<const double> values) for every line.
template <LineSource S, class Fn>
void for_each_line(const S& src, Fn&& fn) {
  const GridGeometry& g = src.geometry();
  if constexpr (std::same_as<S, GridDensity>) {
    for (std::size_t l = 0; l < g.num_lines(); ++l) fn(l, src.line(l));
  } else {
    std::vector<double> buf(g.line_length());
    for (std::size_t l = 0; l < g.num_lines(); ++l) {
      src.read_line(l, buf);
      fn(l, std::span<const double>(buf));
    }
  }
}

template <LineSource S>
double total_mass(const S& f) {
  double s = 0.0;
  for_each_line(f, [&](std::size_t, std::span<const double> v) {
    for (double x : v) s += x;
  });
  return s * f.geometry().cell_volume();
}

/// Lebesgue L^p norm of the interpolated function's midpoint samples, (sum |v|^p dV)^{1/p}.
template <LineSource S>
double lp_norm(const S& f, double p) {
  require(p >= 1.0, "L^p norm requires p >= 1");
  double s = 0.0;
  for_each_line(f, [&](std::size_t, std::span<const double> v) {
    for (double x : v) s += std::pow(std::abs(x), p);
  });
  return std::pow(s * f.geometry().cell_volume(), 1.0 / p);
}

inline GridDensity normalize(const GridDensity& f) {
  const double m = total_mass(f);
  if (!(m > 0.0)) throw NumericalError("cannot normalize a density with zero mass");
  return f.scaled(1.0 / m);
}

inline GaussianField normalize(const GaussianField& f) {
  const double m = total_mass(f);
  if (!(m > 0.0)) throw NumericalError("cannot normalize a density with zero mass");
  return f.with_scale(f.scale() / m);
}

template <class F>
SampledField<F> normalize(const SampledField<F>& f) {
  const double m = total_mass(f);
  if (!(m > 0.0)) throw NumericalError("cannot normalize a density with zero mass");
  return f.with_scale(1.0 / m);
}

/// True if any sample on the outer faces of the box exceeds rel * max.
inline bool support_touches_boundary(const GridDensity& f, double rel = 1e-12) {
  const auto& g = f.geometry();
  const double thr = rel * f.max_value();
  std::vector<std::size_t> idx(g.dim());
  for (std::size_t c = 0; c < g.size(); ++c) {
    if (f[c] <= thr) continue;
    g.unravel(c, idx);
    for (std::size_t i = 0; i < g.dim(); ++i)
      if (idx[i] == 0 || idx[i] + 1 == g.res(i)) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Serialization. Text: first line "k lower... upper... res...", then the
// values whitespace separated. Binary: "CLWG" magic, uint32 k, k doubles lower,
// k doubles upper, k uint64 res, then size() doubles (little endian host order).

inline void write_text(std::ostream& os, const GridDensity& f) {
  const auto& g = f.geometry();
  os.precision(17);
  os << g.dim();
  for (double v : g.lowers()) os << ' ' << v;
  for (double v : g.uppers()) os << ' ' << v;
  for (auto r : g.resolutions()) os << ' ' << r;
  os << '\n';
  for (std::size_t i = 0; i < g.size(); ++i) os << f[i] << (i + 1 == g.size() ? '\n' : ' ');
}

inline GridDensity read_text(std::istream& is) {
  std::size_t k = 0;
  if (!(is >> k) || k == 0) throw InvalidArgument("grid text header: bad dimension");
  std::vector<double> lo(k), hi(k);
  std::vector<std::size_t> res(k);
  for (auto& v : lo) is >> v;
  for (auto& v : hi) is >> v;
  for (auto& v : res) is >> v;
  if (!is) throw InvalidArgument("grid text header: truncated");
  GridGeometry g(lo, hi, res);
  std::vector<double> vals(g.size());
  for (auto& v : vals)
    if (!(is >> v)) throw InvalidArgument("grid text body: expected " + std::to_string(g.size()) + " values");
  return {std::move(g), std::move(vals)};
}

inline void write_binary(std::ostream& os, const GridDensity& f) {
  const auto& g = f.geometry();
  os.write("CLWG", 4);
  const auto k = static_cast<std::uint32_t>(g.dim());
  os.write(reinterpret_cast<const char*>(&k), sizeof k);
  os.write(reinterpret_cast<const char*>(g.lowers().data()), static_cast<std::streamsize>(k * sizeof(double)));
  os.write(reinterpret_cast<const char*>(g.uppers().data()), static_cast<std::streamsize>(k * sizeof(double)));
  for (auto r : g.resolutions()) {
    const auto r64 = static_cast<std::uint64_t>(r);
    os.write(reinterpret_cast<const char*>(&r64), sizeof r64);
  }
  os.write(reinterpret_cast<const char*>(f.values().data()),
           static_cast<std::streamsize>(g.size() * sizeof(double)));
}

inline GridDensity read_binary(std::istream& is) {
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, "CLWG", 4) != 0) throw InvalidArgument("grid binary: bad magic");
  std::uint32_t k = 0;
  is.read(reinterpret_cast<char*>(&k), sizeof k);
  if (!is || k == 0 || k > 16) throw InvalidArgument("grid binary: bad dimension");
  std::vector<double> lo(k), hi(k);
  std::vector<std::size_t> res(k);
  is.read(reinterpret_cast<char*>(lo.data()), static_cast<std::streamsize>(k * sizeof(double)));
  is.read(reinterpret_cast<char*>(hi.data()), static_cast<std::streamsize>(k * sizeof(double)));
  for (auto& r : res) {
    std::uint64_t r64 = 0;
    is.read(reinterpret_cast<char*>(&r64), sizeof r64);
    r = static_cast<std::size_t>(r64);
  }
  if (!is) throw InvalidArgument("grid binary: truncated header");
  GridGeometry g(lo, hi, res);
  std::vector<double> vals(g.size());
  is.read(reinterpret_cast<char*>(vals.data()), static_cast<std::streamsize>(vals.size() * sizeof(double)));
  if (!is) throw InvalidArgument("grid binary: truncated body");
  return {std::move(g), std::move(vals)};
}

/// Reads either format, sniffing the binary magic.
inline GridDensity load_grid(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open grid file " + path);
  char magic[4] = {};
  in.read(magic, 4);
  in.clear();
  in.seekg(0);
  if (std::memcmp(magic, "CLWG", 4) == 0) return read_binary(in);
  return read_text(in);
}

}  // namespace carnot_lw
