#pragma once

// Corank-1 Carnot groups H(d, alpha) realized on R^{d+2n} x R.
//
// Coordinates are ordered (x_0 .. x_{d-1}, then n pairs (x_{d+2i}, x_{d+2i+1}),
// then t). Projections are indexed 0 .. d+2n: index j < d+2n deletes x_j (and
// shears t when x_j belongs to a pair), index d+2n drops t.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "carnot_lw/error.hpp"

namespace carnot_lw {

struct GroupPoint {
  std::vector<double> x;
  double t = 0.0;

  friend bool operator==(const GroupPoint&, const GroupPoint&) = default;
};

/// Role of a coordinate direction in the horizontal layer.
enum class AxisKind {
  kCommuting,   // x_j, j < d
  kPairFirst,   // x_{d+2i}
  kPairSecond,  // x_{d+2i+1}
  kVertical,    // t
};

class CorankGroup {
 public:
  CorankGroup(std::size_t d, std::vector<double> alpha) : d_(d), alpha_(std::move(alpha)) {
    require(!alpha_.empty(), "corank group needs n >= 1 (alpha must be non-empty)");
    for (std::size_t i = 0; i < alpha_.size(); ++i) {
      require(std::isfinite(alpha_[i]) && alpha_[i] > 0.0,
              "alpha must satisfy 0 < alpha_1 <= ... <= alpha_n < inf (alpha[" + std::to_string(i) +
                  "] is not a positive finite number)");
      if (i > 0)
        require(alpha_[i - 1] <= alpha_[i],
                "alpha must satisfy 0 < alpha_1 <= ... <= alpha_n < inf (sequence is decreasing)");
    }
  }

  /// The first Heisenberg group H^1 = H(0, (1)).
  static CorankGroup heisenberg(std::size_t n = 1) { return CorankGroup(0, std::vector<double>(n, 1.0)); }

  std::size_t d() const { return d_; }
  std::size_t n() const { return alpha_.size(); }
  const std::vector<double>& alpha() const { return alpha_; }

  /// Dimension of the horizontal layer, d + 2n (also the dimension of every projection image).
  std::size_t horizontal_dim() const { return d_ + 2 * n(); }
  std::size_t topo_dim() const { return horizontal_dim() + 1; }
  /// Homogeneous dimension: Lebesgue measure scales by r^Q under dilation.
  std::size_t homogeneous_dim() const { return horizontal_dim() + 2; }
  /// Number of projections including the vertical one.
  std::size_t num_projections() const { return topo_dim(); }

  AxisKind axis_kind(std::size_t j) const {
    require(j < topo_dim(), "axis index out of range");
    if (j < d_) return AxisKind::kCommuting;
    if (j == horizontal_dim()) return AxisKind::kVertical;
    return ((j - d_) % 2 == 0) ? AxisKind::kPairFirst : AxisKind::kPairSecond;
  }

  /// Pair index i for a paired axis (x_{d+2i} or x_{d+2i+1}).
  std::size_t pair_index(std::size_t j) const { return (j - d_) / 2; }
  /// The other member of a pair.
  std::size_t partner(std::size_t j) const {
    return axis_kind(j) == AxisKind::kPairFirst ? j + 1 : j - 1;
  }

  /// Vertical shear coefficient of projection j: the projected t-coordinate is
  /// t + shear_coefficient(j) * x_{first} * x_{second} (zero for unpaired j).
  double shear_coefficient(std::size_t j) const {
    switch (axis_kind(j)) {
      case AxisKind::kPairFirst: return 0.5 * alpha_[pair_index(j)];
      case AxisKind::kPairSecond: return -0.5 * alpha_[pair_index(j)];
      default: return 0.0;
    }
  }

  GroupPoint identity() const { return {std::vector<double>(horizontal_dim(), 0.0), 0.0}; }

  void check(const GroupPoint& p) const {
    require(p.x.size() == horizontal_dim(), "point dimension " + std::to_string(p.x.size()) +
                                                " does not match group horizontal dimension " +
                                                std::to_string(horizontal_dim()));
  }

  friend bool operator==(const CorankGroup&, const CorankGroup&) = default;

 private:
  std::size_t d_;
  std::vector<double> alpha_;
};

inline CorankGroup group_from_json(const nlohmann::json& j) {
  try {
    const auto d = j.at("d").get<long long>();
    const auto n = j.at("n").get<long long>();
    auto alpha = j.at("alpha").get<std::vector<double>>();
    require(d >= 0, "group field d must be a nonnegative integer");
    require(n >= 1, "group field n must be a positive integer");
    require(alpha.size() == static_cast<std::size_t>(n),
            "group field alpha must have exactly n entries");
    return CorankGroup(static_cast<std::size_t>(d), std::move(alpha));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed group spec: ") + e.what());
  }
}

/// Parses `{"d":1,"n":2,"alpha":[1.0,2.0]}`.
inline CorankGroup parse_group(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("group spec is not valid JSON: ") + e.what());
  }
  return group_from_json(j);
}

inline nlohmann::json to_json(const CorankGroup& g) {
  return {{"d", g.d()}, {"n", g.n()}, {"alpha", g.alpha()}};
}

/// Symplectic part of the group law: 1/2 sum_i alpha_i (x_a x'_b - x_b x'_a).
inline double twist(const CorankGroup& g, std::span<const double> x, std::span<const double> y) {
  double s = 0.0;
  for (std::size_t i = 0; i < g.n(); ++i) {
    const std::size_t a = g.d() + 2 * i;
    s += g.alpha()[i] * (x[a] * y[a + 1] - x[a + 1] * y[a]);
  }
  return 0.5 * s;
}

inline GroupPoint multiply(const CorankGroup& g, const GroupPoint& p, const GroupPoint& q) {
  g.check(p);
  g.check(q);
  GroupPoint r{std::vector<double>(p.x.size()), p.t + q.t + twist(g, p.x, q.x)};
  for (std::size_t i = 0; i < p.x.size(); ++i) r.x[i] = p.x[i] + q.x[i];
  return r;
}

inline GroupPoint inverse(const CorankGroup& g, const GroupPoint& p) {
  g.check(p);
  GroupPoint r{p.x, -p.t};
  for (auto& v : r.x) v = -v;
  return r;
}

inline GroupPoint dilate(const CorankGroup& g, double r, const GroupPoint& p) {
  g.check(p);
  require(r > 0.0, "dilation factor must be positive");
  GroupPoint out{p.x, r * r * p.t};
  for (auto& v : out.x) v *= r;
  return out;
}

/// The one-parameter subgroup element l * e_j (j == d+2n is the t-axis).
inline GroupPoint axis_element(const CorankGroup& g, std::size_t j, double ell) {
  GroupPoint e = g.identity();
  if (g.axis_kind(j) == AxisKind::kVertical)
    e.t = ell;
  else
    e.x[j] = ell;
  return e;
}

/// Projection pi_j onto R^{d+2n}. For j < d+2n the image is (x with x_j deleted,
/// sheared t); for j == d+2n the image is x.
inline std::vector<double> project(const CorankGroup& g, std::size_t j, const GroupPoint& p) {
  g.check(p);
  require(j < g.num_projections(), "projection index out of range");
  if (g.axis_kind(j) == AxisKind::kVertical) return p.x;
  std::vector<double> y;
  y.reserve(g.horizontal_dim());
  for (std::size_t i = 0; i < p.x.size(); ++i)
    if (i != j) y.push_back(p.x[i]);
  double s = p.t;
  if (g.axis_kind(j) != AxisKind::kCommuting) {
    const std::size_t a = g.d() + 2 * g.pair_index(j);
    s += g.shear_coefficient(j) * p.x[a] * p.x[a + 1];
  }
  y.push_back(s);
  return y;
}

struct FiberDecomposition {
  GroupPoint base;  // element of the hyperplane subgroup J_j
  double ell = 0.0; // coordinate along L_j
};

/// Unique factorization p = base * (ell e_j) with base in J_j.
inline FiberDecomposition decompose(const CorankGroup& g, std::size_t j, const GroupPoint& p) {
  g.check(p);
  require(j < g.num_projections(), "projection index out of range");
  FiberDecomposition out{p, 0.0};
  if (g.axis_kind(j) == AxisKind::kVertical) {
    out.ell = p.t;
    out.base.t = 0.0;
    return out;
  }
  out.ell = p.x[j];
  out.base.x[j] = 0.0;
  if (g.axis_kind(j) != AxisKind::kCommuting) {
    const std::size_t a = g.d() + 2 * g.pair_index(j);
    out.base.t = p.t + g.shear_coefficient(j) * p.x[a] * p.x[a + 1];
  }
  return out;
}

/// Dilation induced on the image of pi_j: inherited x-coordinates scale by r,
/// the inherited t-coordinate (if any) by r^2.
inline std::vector<double> projected_dilate(const CorankGroup& g, std::size_t j, double r,
                                            std::span<const double> y) {
  require(j < g.num_projections(), "projection index out of range");
  require(r > 0.0, "dilation factor must be positive");
  require(y.size() == g.horizontal_dim(), "projected point has wrong dimension");
  std::vector<double> out(y.begin(), y.end());
  const bool has_t = g.axis_kind(j) != AxisKind::kVertical;
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] *= (has_t && i + 1 == out.size()) ? r * r : r;
  return out;
}

using GroupFunction = std::function<double(const GroupPoint&)>;

struct HorizontalGradient {
  std::vector<double> horizontal;  // X_0 f .. X_{d+2n-1} f
  double vertical = 0.0;           // T f = df/dt
};

/// Central-difference horizontal derivatives. X_j f = d_j f for commuting axes;
/// X_a f = d_a f - (alpha/2) x_b d_t f and X_b f = d_b f + (alpha/2) x_a d_t f on a pair.
template <class F>
HorizontalGradient horizontal_gradient(const CorankGroup& g, const F& f, const GroupPoint& p,
                                       double h) {
  g.check(p);
  require(h > 0.0, "finite-difference step must be positive");
  GroupPoint q = p;
  auto partial_x = [&](std::size_t i) {
    q.x[i] = p.x[i] + h;
    const double fp = f(q);
    q.x[i] = p.x[i] - h;
    const double fm = f(q);
    q.x[i] = p.x[i];
    return (fp - fm) / (2.0 * h);
  };
  q.t = p.t + h;
  const double tp = f(q);
  q.t = p.t - h;
  const double tm = f(q);
  q.t = p.t;
  HorizontalGradient out;
  out.vertical = (tp - tm) / (2.0 * h);
  out.horizontal.resize(g.horizontal_dim());
  for (std::size_t j = 0; j < g.horizontal_dim(); ++j) {
    double v = partial_x(j);
    switch (g.axis_kind(j)) {
      case AxisKind::kPairFirst:
        v -= 0.5 * g.alpha()[g.pair_index(j)] * p.x[j + 1] * out.vertical;
        break;
      case AxisKind::kPairSecond:
        v += 0.5 * g.alpha()[g.pair_index(j)] * p.x[j - 1] * out.vertical;
        break;
      default: break;
    }
    out.horizontal[j] = v;
  }
  return out;
}

/// Default finite-difference step: 1e-5 times the scale of p (at least 1e-5).
inline double default_step(const GroupPoint& p) {
  double s = std::abs(p.t);
  for (double v : p.x) s = std::max(s, std::abs(v));
  return 1e-5 * std::max(1.0, s);
}

}  // namespace carnot_lw
