#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "carnot_lw/density.hpp"

using namespace carnot_lw;

namespace {

GridDensity random_grid(const GridGeometry& g, std::mt19937_64& rng, double zero_fraction = 0.0) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> v(g.size());
  for (auto& x : v) x = u(rng) < zero_fraction ? 0.0 : u(rng) + 0.01;
  return normalize(GridDensity(g, std::move(v)));
}

GridDensity triangle(std::size_t n) {
  auto g = GridGeometry::cube(2, 0.0, 1.0, n);
  return normalize(GridDensity::sample(g, [](std::span<const double> p) { return p[0] <= p[1] ? 2.0 : 0.0; }));
}

double gaussian_density(std::span<const double> x, double sigma = 1.0) {
  double q = 0.0;
  for (double v : x) q += v * v;
  return std::exp(-0.5 * q / (sigma * sigma));
}

}  // namespace

TEST(Entropy, UniformBoxes) {
  auto unit = GridDensity::sample(GridGeometry::cube(3, 0, 1, 8), [](auto) { return 1.0; });
  EXPECT_NEAR(entropy(unit), 0.0, 1e-14);
  auto wide = GridDensity::sample(GridGeometry::cube(1, 0, 2, 100), [](auto) { return 0.5; });
  EXPECT_NEAR(entropy(wide), -std::log(2.0), 1e-14);
  GridGeometry g({0.0, 0.0}, {3.0, 0.5}, {30, 10});
  EXPECT_NEAR(entropy(normalize(GridDensity::sample(g, [](auto) { return 1.0; }))), -std::log(1.5), 1e-13);
}

TEST(Entropy, RequiresNormalizedInput) {
  auto two = GridDensity::sample(GridGeometry::cube(1, 0, 1, 8), [](auto) { return 2.0; });
  EXPECT_THROW(entropy(two), NumericalError);
}

TEST(Entropy, TruncatedGaussianMatchesClosedForm) {
  auto f = normalize(GridDensity::sample(GridGeometry::cube(1, -6, 6, 4096),
                                         [](std::span<const double> x) { return gaussian_density(x); }));
  EXPECT_NEAR(entropy(f), -0.5 * std::log(2 * std::numbers::pi * std::numbers::e), 1e-3);
}

TEST(Entropy, ZeroCellsContributeNothing) {
  auto g = GridGeometry::cube(1, 0, 2, 4);
  GridDensity f(g, {1.0, 1.0, 0.0, 0.0});
  EXPECT_NEAR(entropy(f), 0.0, 1e-15);
}

TEST(Marginal, ProductAndUniform) {
  GridGeometry g({-3.0, 0.0}, {3.0, 2.0}, {60, 40});
  auto f = GridDensity::sample(g, [](std::span<const double> x) { return std::exp(-x[0] * x[0]) * (1.0 + x[1]); });
  f = normalize(f);
  auto m0 = marginal(f, {0});
  auto expect = normalize(GridDensity::sample(GridGeometry::cube(1, -3, 3, 60),
                                              [](std::span<const double> x) { return std::exp(-x[0] * x[0]); }));
  for (std::size_t i = 0; i < 60; ++i) EXPECT_NEAR(m0[i], expect[i], 1e-12);

  auto u = GridDensity::sample(GridGeometry::cube(2, 0, 1, 16), [](auto) { return 1.0; });
  auto mu = marginal(u, {0});
  for (double v : mu.values()) EXPECT_NEAR(v, 1.0, 1e-14);
  EXPECT_THROW(marginal(u, {}), InvalidArgument);
  EXPECT_THROW(marginal(u, {2}), InvalidArgument);
}

TEST(Marginal, MassPreservedAndMatchesCoordinatePushforward) {
  std::mt19937_64 rng(21);
  GridGeometry g({0.0, -1.0, 2.0, 0.0}, {1.0, 1.0, 5.0, 0.3}, {5, 6, 7, 4});
  for (int trial = 0; trial < 10; ++trial) {
    auto f = random_grid(g, rng, 0.3);
    for (std::vector<std::size_t> kept : {std::vector<std::size_t>{0}, {1, 3}, {0, 2, 3}, {3}, {0, 1, 2}}) {
      auto m = marginal(f, kept);
      EXPECT_NEAR(total_mass(m), 1.0, 1e-12);
      std::vector<std::size_t> deleted;
      for (std::size_t i = 0; i < 4; ++i)
        if (std::find(kept.begin(), kept.end(), i) == kept.end()) deleted.push_back(i);
      EXPECT_EQ(coordinate_pushforward(f, deleted), m);
      // brute-force oracle on the first kept cell pattern
      std::vector<std::size_t> idx(4);
      std::vector<double> brute(m.geometry().size(), 0.0);
      std::vector<std::size_t> oidx(kept.size());
      double dv = 1.0;
      for (auto a : deleted) dv *= g.cell_size(a);
      for (std::size_t c = 0; c < g.size(); ++c) {
        g.unravel(c, idx);
        for (std::size_t p = 0; p < kept.size(); ++p) oidx[p] = idx[kept[p]];
        brute[m.geometry().ravel(oidx)] += f[c] * dv;
      }
      for (std::size_t c = 0; c < brute.size(); ++c) EXPECT_NEAR(m[c], brute[c], 1e-12);
    }
  }
}

TEST(Marginal, DeletingPairLeavesOtherFactor) {
  auto g = GridGeometry::cube(4, -2, 2, 12);
  auto f = normalize(GridDensity::sample(g, [](std::span<const double> x) {
    return std::exp(-x[0] * x[0] - 2 * x[1] * x[1]) * (1.0 + 0.1 * x[2]) * (2.0 + x[3]);
  }));
  std::size_t del[2] = {0, 1};
  auto m = coordinate_pushforward(f, del);
  auto other = normalize(GridDensity::sample(GridGeometry::cube(2, -2, 2, 12),
                                             [](std::span<const double> x) { return (1.0 + 0.1 * x[0]) * (2.0 + x[1]); }));
  for (std::size_t c = 0; c < m.geometry().size(); ++c) EXPECT_NEAR(m[c], other[c], 1e-12);
}

TEST(CorankPushforward, VerticalIsCoordinateDeletion) {
  std::mt19937_64 rng(22);
  auto h = CorankGroup::heisenberg();
  auto f = random_grid(GridGeometry::cube(3, -1, 1, 10), rng);
  std::size_t del[1] = {2};
  EXPECT_EQ(corank_pushforward(h, 2, f), coordinate_pushforward(f, del));
  CorankGroup g(1, {1.0});
  auto f4 = random_grid(GridGeometry::cube(4, -1, 1, 6), rng);
  std::size_t del0[1] = {0};
  EXPECT_EQ(corank_pushforward(g, 0, f4), coordinate_pushforward(f4, del0));
  EXPECT_THROW(corank_pushforward(h, 3, f), InvalidArgument);
}

TEST(CorankPushforward, UniformCubeValueAtUnshearedPoint) {
  auto h = CorankGroup::heisenberg();
  auto f = GridDensity::sample(GridGeometry::cube(3, 0, 1, 128), [](auto) { return 1.0; });
  for (std::size_t j : {0u, 1u}) {
    auto out = corank_pushforward(h, j, f);
    EXPECT_NEAR(total_mass(out), 1.0, 1e-12);
    const double first_y = out.geometry().midpoint(0, 0);
    double p[2] = {first_y, 0.5};
    EXPECT_NEAR(out.interpolate(p), 1.0, 1e-9);
  }
}

TEST(CorankPushforward, MatchesFiberIntegral) {
  CorankGroup h(0, {1.5});
  const double s2 = 0.4;
  auto dens = [&](double x, double y, double t) { return std::exp(-(x * x + y * y) / 2.0 - t * t / (2 * s2)); };
  auto f = GridDensity::sample(GridGeometry::cube(3, -5, 5, 96),
                               [&](std::span<const double> p) { return dens(p[0], p[1], p[2]); });
  for (std::size_t j : {0u, 1u}) {
    auto out = corank_pushforward(h, j, f);
    EXPECT_NEAR(total_mass(out), total_mass(f), 1e-10);
    const double c = h.shear_coefficient(j);
    for (double y : {-1.3, 0.2, 0.9}) {
      for (double s : {-0.7, 0.0, 0.45}) {
        // image point (y, s) where y is the surviving x-coordinate; base t = s - c * x_a * x_b
        double brute = 0.0;
        const int m = 4000;
        for (int i = 0; i < m; ++i) {
          const double x = -5 + (i + 0.5) * 10.0 / m;
          const double xa = (j == 0) ? x : y, xb = (j == 0) ? y : x;
          brute += dens(xa, xb, s - c * xa * xb) * 10.0 / m;
        }
        double p[2] = {y, s};
        EXPECT_NEAR(out.interpolate(p), brute, 2e-2 * std::max(1.0, brute));
      }
    }
  }
}

TEST(CorankPushforward, PushforwardIdentityForPolynomials) {
  // int phi(pi_j(x,t)) f = int phi f_(pi_j): first moments exact, second moments up to O(dt^2).
  CorankGroup g(0, {1.0});
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.5, 1.5);
  const double a = u(rng), b = u(rng);
  auto f = normalize(GridDensity::sample(GridGeometry::cube(3, -4, 4, 64), [&](std::span<const double> p) {
    return std::exp(-a * p[0] * p[0] - b * p[1] * p[1] - (p[2] - 0.3 * p[0]) * (p[2] - 0.3 * p[0]));
  }));
  for (std::size_t j : {0u, 1u}) {
    auto out = corank_pushforward(g, j, f);
    auto phis = std::vector<std::function<double(double, double)>>{
        [](double, double s) { return s; }, [](double y, double s) { return y * s + 2 * s; },
        [](double y, double s) { return y * y + s * s; }};
    for (std::size_t q = 0; q < phis.size(); ++q) {
      double lhs = 0.0, rhs = 0.0;
      const auto& fg = f.geometry();
      std::vector<std::size_t> idx(3);
      for (std::size_t c = 0; c < fg.size(); ++c) {
        fg.unravel(c, idx);
        GroupPoint p{{fg.midpoint(0, idx[0]), fg.midpoint(1, idx[1])}, fg.midpoint(2, idx[2])};
        auto y = project(g, j, p);
        lhs += phis[q](y[0], y[1]) * f[c] * fg.cell_volume();
      }
      const auto& og = out.geometry();
      std::vector<std::size_t> oi(2);
      for (std::size_t c = 0; c < og.size(); ++c) {
        og.unravel(c, oi);
        rhs += phis[q](og.midpoint(0, oi[0]), og.midpoint(1, oi[1])) * out[c] * og.cell_volume();
      }
      const double tol = q < 2 ? 1e-10 : 1e-2;
      EXPECT_NEAR(lhs, rhs, tol) << "j=" << j << " q=" << q;
    }
  }
}

TEST(CorankPushforward, CommutesWithConditioningOnCommutingAxis) {
  // On H(1,(1)) the paired projections keep x_0; conditioning on x_0 then pushing forward
  // through the H^1 projection must equal pushing forward then conditioning.
  CorankGroup big(1, {1.0});
  auto h = CorankGroup::heisenberg();
  std::mt19937_64 rng(24);
  GridGeometry g({0.0, -1.0, -1.0, -1.0}, {1.0, 1.0, 1.0, 1.0}, {4, 8, 8, 10});
  auto f = random_grid(g, rng, 0.2);
  for (std::size_t j : {1u, 2u}) {
    auto pushed = corank_pushforward(big, j, f);
    auto prof_geom = pushed.geometry();
    for (std::size_t y = 0; y < 4; ++y) {
      GridGeometry sg({-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}, {8, 8, 10});
      std::vector<double> slice(sg.size());
      for (std::size_t c = 0; c < sg.size(); ++c) slice[c] = f[y * sg.size() + c];
      GridDensity fs(sg, slice);
      const double fy = total_mass(fs);
      auto sub = corank_pushforward(h, j - 1, fs.scaled(1.0 / fy));
      const std::size_t inner = sub.geometry().size();
      ASSERT_EQ(prof_geom.size(), 4 * inner);
      const double pushed_fy = [&] {
        double s = 0.0;
        for (std::size_t c = 0; c < inner; ++c) s += pushed[y * inner + c];
        return s * sub.geometry().cell_volume();
      }();
      for (std::size_t c = 0; c < inner; ++c) EXPECT_NEAR(pushed[y * inner + c] / pushed_fy, sub[c], 1e-12);
    }
  }
}

TEST(CorankPushforward, MassConservedOnRandomInputs) {
  std::mt19937_64 rng(25);
  CorankGroup g(1, {0.5, 2.0});
  auto f = random_grid(GridGeometry::cube(6, -1, 1, 5), rng);
  for (std::size_t j = 0; j < g.num_projections(); ++j) EXPECT_NEAR(total_mass(corank_pushforward(g, j, f)), 1.0, 1e-12);
}

TEST(Conditional, ProductProfileIsConstant) {
  GridGeometry g({-3.0, 0.0}, {3.0, 1.0}, {64, 32});
  auto f = normalize(GridDensity::sample(g, [](std::span<const double> x) { return std::exp(-x[0] * x[0]) * (1 + x[1]); }));
  auto prof = conditional_entropy_profile(f, {1});
  auto gx = normalize(GridDensity::sample(GridGeometry::cube(1, -3, 3, 64), [](std::span<const double> x) { return std::exp(-x[0] * x[0]); }));
  for (std::size_t y = 0; y < 32; ++y) {
    ASSERT_TRUE(prof.present[y]);
    EXPECT_NEAR(prof.entropy[y], entropy(gx), 1e-12);
  }
  EXPECT_LT(chain_rule_residual(f, {1}), 1e-12);
  EXPECT_LT(chain_rule_residual(f, {0}), 1e-12);
}

TEST(Conditional, TriangleMatchesClosedForms) {
  const std::size_t n = 256;
  auto f = triangle(n);
  auto prof = conditional_entropy_profile(f, {1});
  for (std::size_t i = n / 8; i < n; i += 7) {
    const double y = prof.marginal.geometry().midpoint(0, i);
    EXPECT_NEAR(prof.entropy[i], -std::log(y), 1.0 / (n * y));
  }
  EXPECT_LT(chain_rule_residual(f, {1}), 1e-12);
  EXPECT_NEAR(entropy(f), std::log(2.0), 5e-3);
  EXPECT_NEAR(entropy(prof.marginal), std::log(2.0) - 0.5, 5e-3);
  EXPECT_NEAR(averaged_conditional_entropy(prof), 0.5, 5e-3);
}

TEST(Conditional, AbsentCellsMarked) {
  GridDensity f(GridGeometry::cube(2, 0, 1, 2), {2.0, 2.0, 0.0, 0.0});
  auto prof = conditional_entropy_profile(f, {0});
  EXPECT_TRUE(prof.present[0]);
  EXPECT_FALSE(prof.present[1]);
  EXPECT_TRUE(std::isnan(prof.entropy[1]));
  EXPECT_THROW(conditional_entropy_profile(f.scaled(2.0), {0}), NumericalError);
}

TEST(Conditional, ChainRuleOnRandomSmoothDensity) {
  std::mt19937_64 rng(26);
  std::normal_distribution<double> nd;
  double c[6];
  for (auto& v : c) v = nd(rng);
  auto g = GridGeometry::cube(2, -1, 1, 256);
  auto f = normalize(GridDensity::sample(g, [&](std::span<const double> x) {
    return std::exp(c[0] * x[0] + c[1] * x[1] + 0.5 * c[2] * x[0] * x[1] - 1.5 * x[0] * x[0] - x[1] * x[1]) *
           (1.2 + std::sin(3 * x[0] + c[3]));
  }));
  EXPECT_LE(chain_rule_residual(f, {1}), 5e-3);
  EXPECT_LE(chain_rule_residual(f, {0}), 5e-3);
}

TEST(Subadditivity, TwoBlockProperty) {
  std::mt19937_64 rng(27);
  GridGeometry g({0.0, 0.0, 0.0}, {1.0, 2.0, 1.0}, {6, 5, 4});
  for (int trial = 0; trial < 50; ++trial) {
    auto f = random_grid(g, rng, 0.2);
    const double sxy = entropy(f);
    const double sx = entropy(marginal(f, {0})), sy = entropy(marginal(f, {1, 2}));
    EXPECT_GE(sxy, sx + sy - 1e-12);
  }
  auto px = normalize(GridDensity::sample(GridGeometry::cube(1, 0, 1, 6), [](std::span<const double> x) { return 1 + x[0]; }));
  auto prod = normalize(GridDensity::sample(g, [](std::span<const double> x) { return (1 + x[0]) * (3 - x[1] + x[2]); }));
  EXPECT_NEAR(entropy(prod), entropy(marginal(prod, {0})) + entropy(marginal(prod, {1, 2})), 1e-12);
  EXPECT_NEAR(entropy(marginal(prod, {0})), entropy(px), 1e-12);
}

TEST(Subadditivity, DilationShiftsEntropyByHomogeneousDimension) {
  // f_r = r^{-Q} f o delta_{1/r} lives on the box scaled by (r, r, r^2).
  std::mt19937_64 rng(28);
  auto f = random_grid(GridGeometry::cube(3, -1, 1, 8), rng);
  for (double r : {0.5, 2.0, 3.7}) {
    const double Q = 4.0;
    double factors[3] = {r, r, r * r};
    std::vector<double> v(f.values().begin(), f.values().end());
    for (auto& x : v) x *= std::pow(r, -Q);
    GridDensity fr(f.geometry().scaled(factors), v);
    EXPECT_NEAR(total_mass(fr), 1.0, 1e-12);
    EXPECT_NEAR(entropy(fr), entropy(f) - Q * std::log(r), 1e-12);
  }
}

TEST(Gibbs, EqualityAtLogDensity) {
  std::mt19937_64 rng(29);
  auto f = random_grid(GridGeometry::cube(2, 0, 3, 12), rng);
  std::vector<double> phi(f.values().size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi[i] = std::log(f[i]);
  EXPECT_NEAR(gibbs_gap(f, phi), 0.0, 1e-12);
}

TEST(Gibbs, ConstantPotentialGivesRelativeEntropyToUniform) {
  std::mt19937_64 rng(30);
  auto f = random_grid(GridGeometry::cube(2, 0, 3, 12), rng, 0.3);
  std::vector<double> phi(f.values().size(), 1.7);
  const double dv = f.geometry().cell_volume(), vol = f.geometry().box_volume();
  double kl = 0.0;
  for (double v : f.values())
    if (v > 0) kl += v * std::log(v * vol) * dv;
  EXPECT_NEAR(gibbs_gap(f, phi), kl, 1e-12);
  EXPECT_GE(kl, 0.0);
}

TEST(Gibbs, NonnegativeOnRandomCases) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> nd(0.0, 3.0);
  for (int trial = 0; trial < 1000; ++trial) {
    auto f = random_grid(GridGeometry::cube(2, -1, 1, 6), rng, 0.25);
    std::vector<double> phi(f.values().size());
    for (auto& p : phi) p = nd(rng);
    EXPECT_GE(gibbs_gap(f, phi), -1e-9);
  }
}

TEST(CorankPushforward, StreamedViewMatchesStoredPushforward) {
  std::mt19937_64 rng(32);
  CorankGroup g(1, {0.5, 2.0});
  GridGeometry geom({-1.0, -1.0, -2.0, -1.0, -1.5, -1.0}, {1.0, 1.0, 1.0, 1.0, 2.0, 1.0}, {3, 4, 3, 5, 4, 6});
  auto f = random_grid(geom, rng, 0.1);
  for (std::size_t j = 1; j < 5; ++j) {
    auto stored = corank_pushforward(g, j, f);
    auto streamed = GridDensity::materialize(ShearedPushforward(g, j, f));
    ASSERT_EQ(stored.geometry(), streamed.geometry());
    for (std::size_t c = 0; c < stored.geometry().size(); ++c) EXPECT_NEAR(stored[c], streamed[c], 1e-14);
    EXPECT_NEAR(entropy(streamed), entropy(stored), 1e-12);
  }
  auto gauss = normalize(GaussianField::diagonal(GridGeometry::cube(3, -4, 4, 24), std::vector<double>{1.0, 0.8, 1.2}));
  auto h = CorankGroup::heisenberg();
  EXPECT_NEAR(entropy(ShearedPushforward(h, 0, gauss)), entropy(corank_pushforward(h, 0, GridDensity::materialize(gauss))), 1e-12);
  EXPECT_THROW(ShearedPushforward(h, 2, gauss), InvalidArgument);
}
