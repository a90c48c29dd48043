#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "carnot_lw/entropy_checks.hpp"
#include "carnot_lw/presets.hpp"
#include "carnot_lw/sobolev.hpp"

using namespace carnot_lw;

namespace {

const double kR = 2.2;

const Report& find(const std::vector<Report>& rs, const std::string& name) {
  for (const auto& r : rs)
    if (r.name == name) return r;
  throw std::runtime_error("no report " + name);
}

double gaussian_bump(const GroupPoint& p) {
  double q = 0.0;
  for (double v : p.x) q += v * v;
  return 3.0 * std::exp(-q / (2 * 0.0625) - p.t * p.t / (2 * 0.0225));
}

}  // namespace

TEST(ProofChain, IsotropicGaussianOnSecondHeisenbergType) {
  CorankGroup g(0, {1.0, 1.0});
  const double sig[5] = {0.5, 0.5, 0.5, 0.5, 0.5};
  auto f = normalize(GaussianField::diagonal(GridGeometry::cube(5, -2, 2, 16), sig));
  auto rs = proof_chain_checks(g, f, kR);
  EXPECT_TRUE(all_pass(rs));
  for (const auto& r : rs) EXPECT_TRUE(r.pass) << r.name;
  // product density: pair deletion is an equality
  EXPECT_NEAR(find(rs, "pair_deletion").deficit, 0.0, 1e-9);
  EXPECT_NEAR(find(rs, "pair_sum").lhs, find(rs, "pair_step[0]").lhs + find(rs, "pair_step[1]").lhs, 1e-12);
  EXPECT_TRUE(find(rs, "pair_step_fiber[0]").informational);
  // entropies assembled from conditional profiles equal the direct ones
  const auto& m = find(rs, "pair_step[1]").metadata["entropies"];
  EXPECT_NEAR(m["pi_a"].get<double>(), projected_entropy(g, 2, f), 1e-10);
}

TEST(ProofChain, CorrelatedGaussianAndAlpha) {
  CorankGroup g(0, {0.7, 2.0});
  const std::size_t k = 5;
  std::vector<double> prec(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) prec[i * k + i] = 4.0;
  prec[0 * k + 2] = prec[2 * k + 0] = 1.5;  // couples the two pairs
  prec[1 * k + 4] = prec[4 * k + 1] = -1.0;
  auto f = normalize(GaussianField(GridGeometry::cube(k, -2, 2, 16), std::vector<double>(k, 0.0), prec));
  auto rs = proof_chain_checks(g, f, kR);
  for (const auto& r : rs) EXPECT_TRUE(r.pass) << r.name;
  EXPECT_GT(find(rs, "pair_deletion").deficit, 1e-3);
}

TEST(ProofChain, ConcentratedDensity) {
  CorankGroup g(0, {1.0, 1.0});
  const double sig[5] = {0.08, 0.08, 0.08, 0.08, 0.05};
  auto f = normalize(GaussianField::diagonal(GridGeometry::cube(5, -0.4, 0.4, 16), sig));
  auto rs = proof_chain_checks(g, f, kR, {false, 1e-2});
  EXPECT_TRUE(find(rs, "nonlinear_entropy").pass);
  EXPECT_TRUE(all_pass(rs));
}

TEST(ProofChain, HeisenbergCaseMatchesSubadditivity) {
  auto g = CorankGroup::heisenberg();
  auto f = preset_density(g, "bumps", 48, 2);
  auto rs = proof_chain_checks(g, f, kR);
  EXPECT_TRUE(find(rs, "pair_deletion").informational);
  auto sub = subadditivity_check(g, f, corank_constants(g), kR);
  const auto& step = find(rs, "pair_step[0]");
  EXPECT_NEAR(step.lhs * 2.0 / 3.0, sub.lhs, 1e-10);
  EXPECT_NEAR(step.rhs * 2.0 / 3.0, sub.rhs, 1e-10);
  EXPECT_THROW(proof_chain_checks(CorankGroup(1, {1.0}), preset_density(CorankGroup(1, {1.0}), "gauss", 8, 0), kR),
               InvalidArgument);
}

TEST(LevelSets, GaussianBumpPasses) {
  auto g = CorankGroup::heisenberg();
  auto f = sample_with_gradient(g, GridGeometry::cube(3, -2, 2, 64), gaussian_bump);
  auto r = level_set_check(g, f);
  EXPECT_TRUE(r.pass);
  EXPECT_GT(r.metadata["bands"].size(), 10u);
}

TEST(LevelSets, ZeroFunctionIsVacuous) {
  auto g = CorankGroup::heisenberg();
  SampledFunction z{GridDensity(GridGeometry::cube(3, -1, 1, 8)),
                    std::vector<std::vector<double>>(2, std::vector<double>(512, 0.0))};
  auto r = level_set_check(g, z);
  EXPECT_TRUE(r.pass);
  EXPECT_EQ(r.lhs, 0.0);
}

TEST(LevelSets, ConstructedSingleBand) {
  // f = phi(x) psi(y, t + xy/2): phi a trapezoid of height 3/2 with slopes 3 on [-1,-1/2], [1/2,1],
  // psi the indicator of [-1/2,1/2]^2. Along pi_0 fibers f = phi(x) psi, so X_0 f = phi'(x) psi and
  // m(pi_0 F_1) = 1 while 2^{2-1} int_{F_0} |X_0 f| = 2 * (2 * 1/6 * 3) = 2.
  auto g = CorankGroup::heisenberg();
  auto phi = [](double x) { return std::clamp(3.0 * (1.0 - std::abs(x)), 0.0, 1.5); };
  auto dphi = [](double x) {
    const double a = std::abs(x);
    return (a > 0.5 && a < 1.0) ? (x > 0 ? -3.0 : 3.0) : 0.0;
  };
  auto psi = [](double y, double s) { return (std::abs(y) <= 0.5 && std::abs(s) <= 0.5) ? 1.0 : 0.0; };
  // x cells of width 1/48 so the band edges 2/3 and 5/6 fall on cell boundaries
  GridGeometry geom({-1.25, -1.2, -1.3}, {1.25, 1.2, 1.3}, {120, 96, 104});
  SampledFunction f{GridDensity(geom), std::vector<std::vector<double>>(2, std::vector<double>(geom.size(), 0.0))};
  auto vals = f.values.mutable_values();
  std::vector<std::size_t> idx(3);
  std::vector<double> z(3);
  for (std::size_t c = 0; c < geom.size(); ++c) {
    geom.unravel(c, idx);
    geom.cell_center(idx, z);
    const double s = z[2] + 0.5 * z[0] * z[1];
    vals[c] = phi(z[0]) * psi(z[1], s);
    f.xgrad[0][c] = dphi(z[0]) * psi(z[1], s);
  }
  auto r = level_set_check(g, f);
  bool seen = false;
  for (const auto& b : r.metadata["bands"])
    if (b["k"] == 1 && b["j"] == 0) {
      seen = true;
      EXPECT_NEAR(b["projected_measure"].get<double>(), 1.0, 0.06);
      EXPECT_NEAR(b["bound"].get<double>(), 2.0, 0.1);
    }
  EXPECT_TRUE(seen);
}

TEST(Sobolev, ChainConstantOnHeisenberg) {
  // (R * 2^{8/3})^{3/4} = 4 R^{3/4}
  EXPECT_NEAR(sobolev_chain_constant(CorankGroup::heisenberg(), kR), 4.0 * std::pow(kR, 0.75), 1e-12);
}

TEST(Sobolev, GaussianBumpPassesAndRatioIsDilationInvariant) {
  auto g = CorankGroup::heisenberg();
  auto f = sample_with_gradient(g, GridGeometry::cube(3, -2, 2, 64), gaussian_bump);
  auto r = sobolev_check(g, f, kR);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.metadata["product_form_rhs"].get<double>(), r.rhs * (1 + 1e-12));
  // resample f o delta_2 on its own grid
  auto fr = sample_with_gradient(g, GridGeometry({-1, -1, -0.5}, {1, 1, 0.5}, {48, 48, 48}), [](const GroupPoint& p) {
    return gaussian_bump(dilate(CorankGroup::heisenberg(), 2.0, p));
  });
  auto s = sobolev_check(g, fr, kR);
  EXPECT_NEAR(s.metadata["ratio"].get<double>() / r.metadata["ratio"].get<double>(), 1.0, 2e-2);
  auto exact = sobolev_check(g, dilated(f, 3.0), kR);
  EXPECT_NEAR(exact.metadata["ratio"].get<double>(), r.metadata["ratio"].get<double>(), 1e-12);
}

TEST(Sobolev, SupportTouchingBoxIsRejected) {
  auto g = CorankGroup::heisenberg();
  auto f = sample_with_gradient(g, GridGeometry::cube(3, -0.5, 0.5, 16), gaussian_bump);
  EXPECT_THROW(sobolev_check(g, f, kR), InvalidArgument);
}

TEST(Sobolev, GridGradientMatchesPointwiseGradient) {
  CorankGroup g(0, {1.5});
  auto geom = GridGeometry::cube(3, -2, 2, 96);
  auto f = sample_with_gradient(g, geom, gaussian_bump);
  auto grid = grid_horizontal_gradient(g, f.values);
  double err = 0.0, scale = 0.0;
  for (std::size_t j = 0; j < 2; ++j)
    for (std::size_t c = 0; c < geom.size(); ++c) {
      err = std::max(err, std::abs(grid[j][c] - f.xgrad[j][c]));
      scale = std::max(scale, std::abs(f.xgrad[j][c]));
    }
  EXPECT_LT(err, 2e-2 * scale);
}

TEST(Isoperimetric, PerimeterIncreasesTowardTheBallPerimeter) {
  // horizontal perimeter of the unit ball: 2 pi int_0^pi sin^2(th) sqrt(1 + cos^2(th)/4) dth
  double limit = 0.0;
  const int m = 20000;
  for (int i = 0; i < m; ++i) {
    const double th = (i + 0.5) * std::numbers::pi / m;
    limit += std::sin(th) * std::sin(th) * std::sqrt(1 + std::cos(th) * std::cos(th) / 4);
  }
  limit *= 2 * std::numbers::pi * std::numbers::pi / m;

  auto g = CorankGroup::heisenberg();
  auto e = preset_set(g, "ball", 96, 0);
  double prev = 0.0;
  for (double w : {0.4, 0.25, 0.15}) {
    auto r = isoperimetric_check(g, e, w, kR);
    EXPECT_TRUE(r.pass);
    const double p = r.metadata["perimeter"].get<double>();
    EXPECT_GT(p, prev) << w;
    EXPECT_LT(p, limit * 1.03);
    prev = p;
  }
  EXPECT_NEAR(prev / limit, 1.0, 3e-2);
}

TEST(Isoperimetric, EmptySetAndBoundaryContact) {
  auto g = CorankGroup::heisenberg();
  EXPECT_TRUE(isoperimetric_check(g, GridDensity(GridGeometry::cube(3, -1, 1, 8)), 0.2, kR).pass);
  auto full = GridDensity(GridGeometry::cube(3, -1, 1, 8), std::vector<double>(512, 1.0));
  EXPECT_THROW(isoperimetric_check(g, full, 0.2, kR), InvalidArgument);
}
