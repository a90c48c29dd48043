#pragma once

// Pinned verification bundles shared by the command-line tool and the acceptance run.
// Every bundle is deterministic given its arguments.

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "carnot_lw/brascamp_lieb.hpp"
#include "carnot_lw/constants.hpp"
#include "carnot_lw/density.hpp"
#include "carnot_lw/entropy_checks.hpp"
#include "carnot_lw/lw.hpp"
#include "carnot_lw/presets.hpp"
#include "carnot_lw/radon.hpp"
#include "carnot_lw/report.hpp"
#include "carnot_lw/sobolev.hpp"

namespace carnot_lw {

/// "H(d,(a_1,...,a_n))".
inline std::string group_label(const CorankGroup& g) {
  std::ostringstream os;
  os << "H(" << g.d() << ",(";
  for (std::size_t i = 0; i < g.n(); ++i) os << (i ? "," : "") << format_double(g.alpha()[i]);
  os << "))";
  return os.str();
}

/// Pass iff `ok`; lhs counts the mismatch.
inline Report exact_report(std::string name, bool ok, nlohmann::json meta = nlohmann::json::object()) {
  return make_report(std::move(name), ok ? 0.0 : 1.0, 0.0, 0.0, std::move(meta));
}

/// Pass iff |value - target| <= tol; lhs is the distance.
inline Report closeness_report(std::string name, double value, double target, double tol,
                               nlohmann::json meta = nlohmann::json::object()) {
  meta["value"] = value;
  meta["target"] = target;
  return make_report(std::move(name), std::abs(value - target), 0.0, tol, std::move(meta));
}

/// The groups exercised by the inequality bundles.
inline std::vector<CorankGroup> standard_groups() {
  return {CorankGroup::heisenberg(), CorankGroup(1, {1.0}), CorankGroup(0, {1.0, 2.0})};
}

// ---------------------------------------------------------------------------

/// Geometric data whose constant is exactly 1.
inline std::vector<Report> bl_bundle() {
  const std::vector<std::pair<std::string, BLDatum>> data{{"bl[lw3]", lw_datum(3)},
                                                          {"bl[pair_deletion2]", pair_deletion_datum(2)},
                                                          {"bl[corank_linearized_h1]", corank_linearized_datum(3)}};
  std::vector<Report> out;
  for (const auto& [name, d] : data) {
    const auto res = bl_constant(d);
    out.push_back(closeness_report(name, res.estimate, 1.0, 1e-6,
                                   {{"converged", res.converged}, {"geometric", check_geometric(d)}}));
  }
  return out;
}

inline bool same_rationals(const std::vector<Rational>& a, const std::vector<Rational>& b) { return a == b; }

inline nlohmann::json rationals_json(const std::vector<Rational>& v) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& r : v) j.push_back(to_string(r));
  return j;
}

/// Lebesgue exponents of the main inequality and of the product of two Heisenberg groups.
inline std::vector<Report> exponent_bundle() {
  std::vector<Report> out;
  auto check = [&](const CorankGroup& g, std::vector<Rational> want) {
    const auto p = corank_constants(g).exponents();
    out.push_back(exact_report("exponents[" + group_label(g) + "]", same_rationals(p, want),
                               {{"exponents", rationals_json(p)}, {"expected", rationals_json(want)}}));
  };
  check(CorankGroup::heisenberg(), {Rational(3, 2), Rational(3, 2)});
  check(CorankGroup(1, {1.0}), {Rational(4), Rational(2), Rational(2)});
  check(CorankGroup(0, {1.0, 2.0}), std::vector<Rational>(4, Rational(10, 3)));
  const auto h = corank_constants(CorankGroup::heisenberg());
  const auto p = product_combine(h, h);
  out.push_back(exact_report("product_r_exponent[H1xH1]", p.D.log_r == Rational(6, 7),
                             {{"log_r", to_string(p.D.log_r)}, {"expected", "6/7"}}));
  return out;
}

/// verify_lw, verify_nonlinear_lw and verify_set_lw on seeded random inputs.
inline std::vector<Report> inequality_bundle(const std::vector<CorankGroup>& groups, std::uint64_t seeds,
                                             std::size_t res, double r_norm) {
  std::vector<Report> out;
  for (const auto& g : groups)
    for (std::uint64_t s = 0; s < seeds; ++s) {
      const std::string tag = "[" + group_label(g) + ",seed=" + std::to_string(s) + "]";
      auto lw = verify_lw(g, lw_inputs(g, "bumps", res, s, false), r_norm, res);
      auto nl = verify_nonlinear_lw(g, lw_inputs(g, "bumps", res, s, true), res);
      auto st = verify_set_lw(g, preset_set(g, "random", res, s), r_norm);
      for (auto* r : {&lw, &nl, &st}) {
        r->name += tag;
        r->metadata["seed"] = s;
        r->metadata["res"] = res;
        out.push_back(std::move(*r));
      }
    }
  return out;
}

inline std::vector<Report> radon_bundle(std::size_t res) {
  std::vector<Report> out;
  const double disk = radon_ratio(disk_function(1.0).sample(res));
  out.push_back(closeness_report("radon_disk_ratio", disk / std::cbrt(6.0), 1.0, 2e-2, {{"ratio", disk}, {"res", res}}));
  double worst = 0.0;
  for (const auto& m : {disk_function(0.5, 0.3, -0.2), random_bumps(3), gaussian_function(1.0, 0.3, 0.4, "aniso")}) {
    auto f = m.sample(res / 2);
    const double mass = total_mass(f);
    for (double pm : projected_masses(radon_transform(f, 24, res / 2))) worst = std::max(worst, std::abs(pm / mass - 1.0));
  }
  out.push_back(make_report("radon_projected_mass", worst, 0.0, 1e-3));
  std::vector<std::string> names;
  double prev = 0.0;
  bool monotone = true;
  nlohmann::json lbs = nlohmann::json::array();
  for (const auto& n : radon_family_names()) {
    names.push_back(n);
    const double lb = estimate_radon_norm_lb(names, {res / 4}, 0).lb;
    monotone = monotone && lb >= prev;
    lbs.push_back(lb);
    prev = lb;
  }
  out.push_back(exact_report("radon_lb_monotone", monotone, {{"lower_bounds", lbs}}));
  return out;
}

// ---------------------------------------------------------------------------

namespace detail {

inline GridDensity random_grid(const GridGeometry& g, std::mt19937_64& rng, double zero_fraction) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(g.size());
  for (auto& x : v) x = u(rng) < zero_fraction ? 0.0 : u(rng) + 0.01;
  return normalize(GridDensity(g, std::move(v)));
}

}  // namespace detail

/// Closed-form entropies and the Gibbs inequality.
inline std::vector<Report> entropy_engine_bundle(std::size_t res_1d, std::size_t res_triangle, std::size_t gibbs_cases) {
  std::vector<Report> out;
  const double gauss = -0.5 * std::log(2 * std::numbers::pi * std::numbers::e);
  auto g1 = normalize(GridDensity::sample(GridGeometry::cube(1, -6, 6, res_1d), [](std::span<const double> x) {
    return std::exp(-0.5 * x[0] * x[0]);
  }));
  out.push_back(closeness_report("entropy_gaussian_1d", entropy(g1), gauss, 1e-3, {{"res", res_1d}}));

  // f = 2 on {x <= y} in [0,1]^2: S(f) = ln 2, S(f_Y) = ln 2 - 1/2, S(X | Y = y) = -ln y averages to 1/2
  auto tri = normalize(GridDensity::sample(GridGeometry::cube(2, 0, 1, res_triangle),
                                           [](std::span<const double> p) { return p[0] <= p[1] ? 2.0 : 0.0; }));
  const auto prof = conditional_entropy_profile(tri, {1});
  const nlohmann::json meta = {{"res", res_triangle}};
  out.push_back(closeness_report("triangle_entropy", entropy(tri), std::log(2.0), 5e-3, meta));
  out.push_back(closeness_report("triangle_marginal_entropy", entropy(prof.marginal), std::log(2.0) - 0.5, 5e-3, meta));
  out.push_back(closeness_report("triangle_conditional_entropy", averaged_conditional_entropy(prof), 0.5, 5e-3, meta));
  out.push_back(make_report("triangle_chain_rule", chain_rule_residual(tri, {1}), 0.0, 5e-3, meta));

  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd(0.0, 3.0);
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < gibbs_cases; ++c) {
    auto f = detail::random_grid(GridGeometry::cube(2, -1, 1, 6), rng, 0.25);
    std::vector<double> phi(f.values().size());
    for (auto& p : phi) p = nd(rng);
    worst = std::min(worst, gibbs_gap(f, phi));
  }
  out.push_back(make_report("gibbs", 0.0, worst, 1e-9, {{"cases", gibbs_cases}}));
  return out;
}

/// The identity linking the multilinear and entropy forms, and subadditivity on random H^1 densities.
inline std::vector<Report> duality_bundle(std::uint64_t identity_cases, std::uint64_t sub_cases, std::size_t res,
                                          double r_norm) {
  std::vector<Report> out;
  const auto h = CorankGroup::heisenberg();
  const auto groups = standard_groups();
  double worst = 0.0;
  for (std::uint64_t s = 0; s < identity_cases; ++s) {
    const auto& g = groups[s % groups.size()];
    const auto geom = GridGeometry::cube(g.topo_dim(), -1.5, 1.5, grid_resolution(g.topo_dim(), 32));
    const bool last = s % 2 == 1;
    // bumps plus a small Gaussian floor, so the product never vanishes identically
    auto fs = lw_inputs(g, "bumps", 32, s, last);
    const auto floor = lw_inputs(g, "gauss", 32, s, last);
    for (std::size_t j = 0; j < fs.size(); ++j) {
      std::vector<double> v(fs[j].values().begin(), fs[j].values().end());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] += 0.1 * floor[j][i];
      fs[j] = GridDensity(fs[j].geometry(), std::move(v));
    }
    worst = std::max(worst, duality_residual(pullback_product(g, fs, last, geom)));
  }
  out.push_back(make_report("duality_identity", worst, 0.0, 1e-10, {{"cases", identity_cases}}));
  const auto sd = corank_constants(h);
  for (std::uint64_t s = 0; s < sub_cases; ++s) {
    auto r = subadditivity_check(h, preset_density(h, "bumps", res, s), sd, r_norm);
    r.name += "[seed=" + std::to_string(s) + "]";
    r.metadata["seed"] = s;
    out.push_back(std::move(r));
  }
  const double sig[3] = {0.3, 0.45, 0.6};
  auto e = normalize(GridDensity::materialize(GaussianField::diagonal(GridGeometry::cube(3, -2, 2, 64), sig)));
  out.push_back(euclidean_subadditivity_check(e));
  return out;
}

/// Intermediate entropy inequalities on H(0, (1, 1)) for the isotropic Gaussian, res cells per axis.
inline std::vector<Report> proof_chain_bundle(std::size_t res, double r_norm) {
  const CorankGroup g(0, {1.0, 1.0});
  const double sig[5] = {0.5, 0.5, 0.5, 0.5, 0.5};
  const auto f = normalize(GaussianField::diagonal(GridGeometry::cube(5, -2, 2, res), sig));
  return proof_chain_checks(g, f, r_norm);
}

// ---------------------------------------------------------------------------

inline nlohmann::json log_terms_json(const LogConstant& d) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [c, l] : d.log_terms) j.push_back({to_string(c), l});
  return j;
}

inline bool same_log_constant(const LogConstant& a, const LogConstant& b) {
  if (a.log_r != b.log_r || a.log_terms.size() != b.log_terms.size()) return false;
  for (std::size_t i = 0; i < a.log_terms.size(); ++i)
    if (a.log_terms[i].first != b.log_terms[i].first || a.log_terms[i].second != b.log_terms[i].second) return false;
  return std::abs(a.offset - b.offset) <= 1e-15;
}

/// Product constants in exact arithmetic.
inline std::vector<Report> product_bundle(double r_norm) {
  std::vector<Report> out;
  const auto h = corank_constants(CorankGroup::heisenberg());
  const auto hh = product_combine(h, h);
  out.push_back(exact_report("product[H1xH1]",
                             hh.c == std::vector<Rational>(4, Rational(2, 7)) && hh.D.log_r == Rational(6, 7) && hh.Q == 8,
                             {{"c", rationals_json(hh.c)}, {"D", to_json(hh.D, r_norm)}}));

  // general pair of corank-1 groups with m = d+2n+1: commuting weights 1/(m+m'+1), paired
  // weights (n+1)/(n(m+m'+1)), ln||R|| coefficient 6/(m+m'+1), ln alpha_i coefficient -1/(n(m+m'+1))
  const std::vector<CorankGroup> gs{CorankGroup::heisenberg(), CorankGroup(1, {1.0}), CorankGroup(0, {1.0, 2.0}),
                                    CorankGroup(2, {0.5, 3.0})};
  for (const auto& a : gs)
    for (const auto& b : gs) {
      const auto p = product_combine(corank_constants(a), corank_constants(b));
      const auto m = static_cast<std::int64_t>(a.topo_dim()), mb = static_cast<std::int64_t>(b.topo_dim());
      const std::int64_t total = m + mb + 1;
      std::vector<Rational> want;
      for (const auto* g : {&a, &b}) {
        const auto n = static_cast<std::int64_t>(g->n());
        for (std::size_t j = 0; j < g->d(); ++j) want.emplace_back(1, total);
        for (std::size_t j = 0; j < 2 * g->n(); ++j) want.emplace_back(n + 1, n * total);
      }
      bool alpha_ok = p.D.log_terms.size() == a.n() + b.n();
      for (std::size_t i = 0; alpha_ok && i < p.D.log_terms.size(); ++i) {
        const auto n = static_cast<std::int64_t>(i < a.n() ? a.n() : b.n());
        alpha_ok = p.D.log_terms[i].first == Rational(-1, n * total);
      }
      out.push_back(exact_report("product_exponents[" + group_label(a) + "x" + group_label(b) + "]",
                                 p.c == want && p.D.log_r == Rational(6, total) && alpha_ok,
                                 {{"c", rationals_json(p.c)}, {"log_r", to_string(p.D.log_r)}}));
    }

  // symmetry: swapping the factors permutes the weights and keeps D
  {
    const auto a = corank_constants(CorankGroup(1, {1.0})), b = corank_constants(CorankGroup(0, {1.0, 2.0}));
    const auto ab = product_combine(a, b), ba = product_combine(b, a);
    std::vector<Rational> swapped(ab.c.begin() + static_cast<std::ptrdiff_t>(a.c.size()), ab.c.end());
    swapped.insert(swapped.end(), ab.c.begin(), ab.c.begin() + static_cast<std::ptrdiff_t>(a.c.size()));
    const double dab = ab.D.value(r_norm), dba = ba.D.value(r_norm);
    out.push_back(exact_report("product_symmetry", swapped == ba.c && std::abs(dab - dba) <= 1e-12,
                               {{"D_ab", dab}, {"D_ba", dba}}));
  }

  // d line factors on H(0, alpha) reproduce the constants of H(d, alpha)
  for (std::size_t d = 1; d <= 3; ++d) {
    const std::vector<double> alpha{1.0, 2.0};
    auto s = corank_constants(CorankGroup(0, alpha));
    for (std::size_t i = 0; i < d; ++i) s = product_combine_line(s);
    const auto want = corank_constants(CorankGroup(d, alpha));
    out.push_back(exact_report("line_products[d=" + std::to_string(d) + "]",
                               s.c == want.c && same_log_constant(s.D, want.D) && s.Q == want.Q,
                               {{"c", rationals_json(s.c)}, {"alpha_terms", log_terms_json(s.D)}}));
  }
  const auto h1 = h1_entropy_constant(1.0);
  out.push_back(exact_report("h1_entropy_constant", h1.c == h.c && h1.D.log_r == h.D.log_r &&
                                                        std::abs(h1.D.value(r_norm) - h.D.value(r_norm)) < 1e-15));
  return out;
}

// ---------------------------------------------------------------------------

/// Sobolev ratio of the bump against a resampled dilate: the two ratios agree within 2%.
inline std::vector<Report> sobolev_bundle(const CorankGroup& g, std::size_t res, double r_norm) {
  std::vector<Report> out;
  const auto f = sampled_bump(g, res);
  out.push_back(level_set_check(g, f));
  out.push_back(sobolev_check(g, f, r_norm));
  const double base = out.back().metadata["ratio"].get<double>();
  for (double r : {0.5, 2.0}) {
    // a different resolution so the comparison is not between identical samples
    const auto fr = sampled_bump(g, res * 3 / 4, r);
    const double ratio = sobolev_check(g, fr, r_norm).metadata["ratio"].get<double>();
    out.push_back(closeness_report("sobolev_dilation[r=" + format_double(r) + "]", ratio / base, 1.0, 2e-2,
                                   {{"ratio", ratio}, {"base_ratio", base}}));
  }
  return out;
}

/// Isoperimetric check on the unit ball for shrinking mollifier widths; the perimeter
/// estimates must increase as the width shrinks.
inline std::vector<Report> isoperimetric_bundle(const CorankGroup& g, std::size_t res, double r_norm) {
  std::vector<Report> out;
  const auto e = preset_set(g, "ball", res, 0);
  double prev = 0.0;
  bool monotone = true;
  nlohmann::json ps = nlohmann::json::array();
  for (double w : {0.4, 0.25, 0.15}) {
    auto r = isoperimetric_check(g, e, w, r_norm);
    const double p = r.metadata["perimeter"].get<double>();
    monotone = monotone && p > prev;
    prev = p;
    ps.push_back(p);
    r.name += "[width=" + format_double(w) + "]";
    out.push_back(std::move(r));
  }
  out.push_back(exact_report("perimeter_monotone", monotone, {{"perimeters", ps}}));
  return out;
}

// ---------------------------------------------------------------------------

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"core", "entropy", "products", "sobolev"};
  return names;
}

/// Reduced versions of the acceptance bundles; throws InvalidArgument for an unknown name.
inline std::vector<Report> run_suite(const std::string& name, double r_norm) {
  std::vector<Report> out;
  auto append = [&](std::vector<Report> rs) {
    for (auto& r : rs) out.push_back(std::move(r));
  };
  if (name == "core" || name == "paper-core") {
    append(bl_bundle());
    append(exponent_bundle());
    append(inequality_bundle(standard_groups(), 2, 96, r_norm));
    append(radon_bundle(256));
  } else if (name == "entropy") {
    append(entropy_engine_bundle(4096, 256, 100));
    append(duality_bundle(10, 3, 96, r_norm));
    append(proof_chain_bundle(20, r_norm));
  } else if (name == "products") {
    append(product_bundle(r_norm));
  } else if (name == "sobolev") {
    const auto h = CorankGroup::heisenberg();
    append(sobolev_bundle(h, 64, r_norm));
    append(isoperimetric_bundle(h, 64, r_norm));
  } else {
    throw InvalidArgument("unknown suite '" + name + "' (expected core, entropy, products or sobolev)");
  }
  return out;
}

}  // namespace carnot_lw
