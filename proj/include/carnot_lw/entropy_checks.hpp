#pragma once

// Entropy forms of the inequalities: subadditivity sum_j c_j S(f_(pi_j)) <= S(f) + D,
// the duality identity behind it, and the intermediate entropy inequalities used to
// derive the corank-1 case from the Heisenberg case.

#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot_lw/constants.hpp"
#include "carnot_lw/density.hpp"
#include "carnot_lw/error.hpp"
#include "carnot_lw/grid.hpp"
#include "carnot_lw/group.hpp"
#include "carnot_lw/lw.hpp"
#include "carnot_lw/report.hpp"

namespace carnot_lw {

/// Absolute tolerance for entropy comparisons on a grid with relative cell size h:
/// kQuadratureConstant * h^2 * max(1, |lhs|, |rhs|).
inline double entropy_tolerance(const GridGeometry& g, double lhs, double rhs) {
  const double h = g.relative_cell();
  return kQuadratureConstant * h * h * std::max({1.0, std::abs(lhs), std::abs(rhs)});
}

template <LineSource S>
void require_normalized(const S& f) {
  const double m = total_mass(f);
  if (std::abs(m - 1.0) > kMassTolerance)
    throw InvalidArgument("density must be normalized (mass = " + std::to_string(m) + ")");
}

/// S(f_(pi_j)); sheared projections are streamed so the pushforward is never stored.
template <LineSource S>
double projected_entropy(const CorankGroup& g, std::size_t j, const S& f) {
  const auto kind = g.axis_kind(j);
  if (kind == AxisKind::kPairFirst || kind == AxisKind::kPairSecond) return entropy(ShearedPushforward<S>(g, j, f));
  return entropy(corank_pushforward(g, j, f));
}

/// sum_j c_j S(f_(pi_j)) <= S(f) + D over j = 0 .. d+2n-1.
template <LineSource S>
Report subadditivity_check(const CorankGroup& g, const S& f, const ScaledData& sd, double r_norm) {
  require(f.geometry().dim() == g.topo_dim(), "density dimension does not match the group");
  require(sd.c.size() == g.horizontal_dim(), "scaled data needs one weight per horizontal projection");
  require_normalized(f);
  const double s = entropy(f);
  double lhs = 0.0;
  nlohmann::json ent = nlohmann::json::array();
  for (std::size_t j = 0; j < g.horizontal_dim(); ++j) {
    const double sj = projected_entropy(g, j, f);
    ent.push_back(sj);
    lhs += to_double(sd.c[j]) * sj;
  }
  const double D = sd.D.value(r_norm);
  const double rhs = s + D;
  return make_report("subadditivity", lhs, rhs, entropy_tolerance(f.geometry(), lhs, rhs),
                     {{"group", to_json(g)}, {"r_norm", r_norm}, {"entropy", s}, {"D", D}, {"projected_entropies", ent},
                      {"res", f.geometry().resolutions()}});
}

/// Classical dual on R^k: sum_j S(P_j f) / (k-1) <= S(f).
inline Report euclidean_subadditivity_check(const GridDensity& f) {
  const std::size_t k = f.dim();
  require(k >= 2, "Euclidean subadditivity needs k >= 2");
  require_normalized(f);
  const double s = entropy(f);
  double lhs = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t drop[1] = {j};
    lhs += entropy(coordinate_pushforward(f, drop)) / static_cast<double>(k - 1);
  }
  return make_report("subadditivity_euclidean", lhs, s, entropy_tolerance(f.geometry(), lhs, s));
}

/// For f = F / int F: |int f ln F - S(f) - ln int F|. Cells with F = 0 carry no mass.
inline double duality_residual(const GridDensity& F) {
  const double z = total_mass(F);
  if (!(z > 0.0)) throw NumericalError("duality identity needs a nonzero F");
  const auto f = F.scaled(1.0 / z);
  const double dv = F.geometry().cell_volume();
  double flnF = 0.0;
  for (std::size_t i = 0; i < F.geometry().size(); ++i)
    if (F[i] > 0.0) flnF += f[i] * std::log(F[i]);
  return std::abs(flnF * dv - entropy(f) - std::log(z));
}

// ---------------------------------------------------------------------------
// Intermediate inequalities on H(0, alpha) with C0 = ln ||R||, X = (x_0 .. x_{2n-1}),
// T = t, and X^j = X with the pair (x_{2j}, x_{2j+1}) deleted:
//   pair j:    S(pi_{2j}) + S(pi_{2j+1}) <= S(X^j)/2 + 3/2 S(X,T) + 3/2 C0 - 1/2 ln alpha_j
//   summed:    sum_{i<2n} S(pi_i) <= 1/2 sum_j S(X^j) + 3n/2 S(X,T) + 3n/2 C0 - 1/2 sum_j ln alpha_j
//   geometric: sum_j S(X^j) <= (n-1) S(X)                                    (n >= 2)
//   nonlinear: sum_{i<=2n} S(pi_i(X,T)) <= 2n S(X,T)
// The pair step also holds fiberwise given X^j = y; that version is reported as
// information only, since conditional entropies on light fibers are noisy.

struct ProofChainOptions {
  bool per_fiber = true;
  double fiber_tolerance = 1e-2;
};

template <LineSource S>
std::vector<Report> proof_chain_checks(const CorankGroup& g, const S& f, double r_norm,
                                       const ProofChainOptions& opt = {}) {
  require(g.d() == 0, "the proof-chain checks run on H(0, alpha)");
  require(f.geometry().dim() == g.topo_dim(), "density dimension does not match the group");
  require_normalized(f);
  const std::size_t n = g.n();
  const double c0 = std::log(r_norm);
  const GridGeometry& geom = f.geometry();
  const nlohmann::json base = {{"group", to_json(g)}, {"r_norm", r_norm}, {"res", geom.resolutions()}};

  const double s_xt = entropy(f);
  std::vector<std::size_t> x_axes(2 * n);
  std::iota(x_axes.begin(), x_axes.end(), std::size_t{0});
  const GridDensity xm = marginal(f, x_axes);
  const double s_x = entropy(xm);

  std::vector<double> s_xj(n, 0.0), s_pi(2 * n, 0.0);
  std::vector<Report> out;
  for (std::size_t j = 0; j < n; ++j) {
    if (n >= 2) {
      const std::size_t pair[2] = {2 * j, 2 * j + 1};
      s_xj[j] = entropy(coordinate_pushforward(xm, pair));
    }
    std::vector<std::size_t> cond;  // X^j axes, same positions in f and in both images
    for (std::size_t i = 0; i < 2 * n; ++i)
      if (i < 2 * j) cond.push_back(i);
      else if (i > 2 * j + 1) cond.push_back(i - 1);
    std::vector<std::size_t> cond_f;
    for (std::size_t i = 0; i < 2 * n; ++i)
      if (i != 2 * j && i != 2 * j + 1) cond_f.push_back(i);

    if (n >= 2 && opt.per_fiber) {
      const ShearedPushforward<S> pa(g, 2 * j, f), pb(g, 2 * j + 1, f);
      const auto prof_a = conditional_entropy_profile(pa, cond);
      const auto prof_b = conditional_entropy_profile(pb, cond);
      const auto prof_f = conditional_entropy_profile(f, cond_f);
      s_pi[2 * j] = entropy(prof_a.marginal) + averaged_conditional_entropy(prof_a);
      s_pi[2 * j + 1] = entropy(prof_b.marginal) + averaged_conditional_entropy(prof_b);
      std::size_t fibers = 0, ok = 0;
      double worst = std::numeric_limits<double>::infinity(), worst_l = 0.0, worst_r = 0.0;
      for (std::size_t y = 0; y < prof_f.present.size(); ++y) {
        if (!(prof_a.present[y] && prof_b.present[y] && prof_f.present[y])) continue;
        ++fibers;
        const double l = prof_a.entropy[y] + prof_b.entropy[y];
        const double r = 1.5 * (prof_f.entropy[y] + c0) - 0.5 * std::log(g.alpha()[j]);
        if (r - l >= -opt.fiber_tolerance) ++ok;
        if (r - l < worst) {
          worst = r - l;
          worst_l = l;
          worst_r = r;
        }
      }
      auto meta = base;
      meta["pair"] = j;
      meta["fibers"] = fibers;
      meta["fraction_pass"] = fibers ? static_cast<double>(ok) / static_cast<double>(fibers) : 1.0;
      meta["note"] = "worst fiber shown";
      auto r = make_report("pair_step_fiber[" + std::to_string(j) + "]", worst_l, worst_r, opt.fiber_tolerance, meta);
      r.informational = true;
      out.push_back(std::move(r));
    } else {
      s_pi[2 * j] = projected_entropy(g, 2 * j, f);
      s_pi[2 * j + 1] = projected_entropy(g, 2 * j + 1, f);
    }
  }

  double sum_pi = 0.0, sum_xj = 0.0, sum_log_alpha = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double lhs = s_pi[2 * j] + s_pi[2 * j + 1];
    const double rhs = 0.5 * s_xj[j] + 1.5 * s_xt + 1.5 * c0 - 0.5 * std::log(g.alpha()[j]);
    auto meta = base;
    meta["pair"] = j;
    meta["entropies"] = {{"pi_a", s_pi[2 * j]}, {"pi_b", s_pi[2 * j + 1]}, {"X^j", s_xj[j]}, {"XT", s_xt}};
    out.push_back(make_report("pair_step[" + std::to_string(j) + "]", lhs, rhs, entropy_tolerance(geom, lhs, rhs), meta));
    sum_pi += lhs;
    sum_xj += s_xj[j];
    sum_log_alpha += std::log(g.alpha()[j]);
  }
  const double nn = static_cast<double>(n);
  {
    const double rhs = 0.5 * sum_xj + 1.5 * nn * s_xt + 1.5 * nn * c0 - 0.5 * sum_log_alpha;
    out.push_back(make_report("pair_sum", sum_pi, rhs, entropy_tolerance(geom, sum_pi, rhs), base));
  }
  if (n >= 2) {
    const double rhs = (nn - 1.0) * s_x;
    auto meta = base;
    meta["S_X"] = s_x;
    out.push_back(make_report("pair_deletion", sum_xj, rhs, entropy_tolerance(geom, sum_xj, rhs), meta));
  } else {
    auto meta = base;
    meta["note"] = "skipped: needs n >= 2";
    auto r = make_report("pair_deletion", 0.0, 0.0, 0.0, meta);
    r.informational = true;
    out.push_back(std::move(r));
  }
  {
    const double lhs = sum_pi + s_x;
    const double rhs = 2.0 * nn * s_xt;
    out.push_back(make_report("nonlinear_entropy", lhs, rhs, entropy_tolerance(geom, lhs, rhs), base));
  }
  return out;
}

}  // namespace carnot_lw
