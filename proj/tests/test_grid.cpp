#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "carnot_lw/grid.hpp"
#include "carnot_lw/group.hpp"

using namespace carnot_lw;

TEST(Grid, GeometryBasics) {
  GridGeometry g({0.0, -1.0, 2.0}, {1.0, 1.0, 3.0}, {4, 8, 2});
  EXPECT_EQ(g.size(), 64u);
  EXPECT_DOUBLE_EQ(g.cell_volume(), 0.25 * 0.25 * 0.5);
  EXPECT_DOUBLE_EQ(g.box_volume(), 2.0);
  EXPECT_DOUBLE_EQ(g.midpoint(1, 0), -0.875);
  std::vector<std::size_t> idx(3);
  for (std::size_t c = 0; c < g.size(); ++c) {
    g.unravel(c, idx);
    EXPECT_EQ(g.ravel(idx), c);
  }
  EXPECT_THROW(GridGeometry({0.0}, {0.0}, {4}), InvalidArgument);
  EXPECT_THROW(GridGeometry({0.0}, {1.0}, {0}), InvalidArgument);
}

TEST(Grid, RejectsNegativeValues) {
  auto g = GridGeometry::cube(1, 0, 1, 2);
  EXPECT_THROW(GridDensity(g, {1.0, -1.0}), InvalidArgument);
  EXPECT_THROW(GridDensity(g, {1.0, NAN}), InvalidArgument);
  EXPECT_THROW(GridDensity(g, {1.0}), InvalidArgument);
}

TEST(Grid, MassAndNormalize) {
  auto one = GridDensity::sample(GridGeometry::cube(2, 0, 1, 16), [](auto) { return 1.0; });
  EXPECT_NEAR(total_mass(one), 1.0, 1e-14);
  auto two = GridDensity::sample(GridGeometry::cube(3, 0, 1, 8), [](auto) { return 2.0; });
  EXPECT_NEAR(total_mass(two), 2.0, 1e-14);
  auto n = normalize(two);
  for (double v : n.values()) EXPECT_NEAR(v, 1.0, 1e-14);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  for (int trial = 0; trial < 20; ++trial) {
    GridGeometry g({-1.0, 0.0}, {2.0, 0.5}, {13, 7});
    std::vector<double> v(g.size());
    for (auto& x : v) x = u(rng);
    EXPECT_NEAR(total_mass(normalize(GridDensity(g, v))), 1.0, 1e-12);
  }
  EXPECT_THROW(normalize(GridDensity(GridGeometry::cube(1, 0, 1, 4))), NumericalError);
}

TEST(Grid, InterpolationReproducesSamplesAndLinearFunctions) {
  GridGeometry g({0.0, 0.0}, {1.0, 2.0}, {10, 20});
  auto f = GridDensity::sample(g, [](std::span<const double> x) { return 1.0 + 2.0 * x[0] + 0.5 * x[1]; });
  std::vector<std::size_t> idx(2);
  std::vector<double> x(2);
  for (std::size_t c = 0; c < g.size(); ++c) {
    g.unravel(c, idx);
    g.cell_center(idx, x);
    EXPECT_NEAR(f.interpolate(x), f[c], 1e-13);
  }
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u0(0.05, 0.95), u1(0.05, 1.95);
  for (int i = 0; i < 100; ++i) {
    double p[2] = {u0(rng), u1(rng)};
    EXPECT_NEAR(f.interpolate(p), 1.0 + 2.0 * p[0] + 0.5 * p[1], 1e-12);
  }
  double outside[2] = {1.2, 0.5};
  EXPECT_EQ(f.interpolate(outside), 0.0);
}

TEST(Grid, StreamedFieldsMatchStoredSamples) {
  GridGeometry g({-2.0, -1.0, -3.0}, {2.0, 1.0, 3.0}, {6, 5, 9});
  std::vector<double> sigma{0.7, 1.1, 1.5};
  auto gauss = GaussianField::diagonal(g, sigma);
  auto stored = GridDensity::sample(g, [&](std::span<const double> x) {
    double q = 0.0;
    for (int i = 0; i < 3; ++i) q += x[i] * x[i] / (sigma[i] * sigma[i]);
    return std::exp(-0.5 * q);
  });
  auto mat = GridDensity::materialize(gauss);
  for (std::size_t c = 0; c < g.size(); ++c) EXPECT_NEAR(mat[c], stored[c], 1e-15);

  auto via_sample = GridDensity::sample(g, [](std::span<const double> x) { return x[0] * x[0] + x[2] + 3.0; });
  auto lazy_mat = GridDensity::materialize(SampledField(g, [](std::span<const double> x) { return x[0] * x[0] + x[2] + 3.0; }));
  EXPECT_EQ(lazy_mat, via_sample);
  EXPECT_NEAR(total_mass(normalize(gauss)), 1.0, 1e-12);
}

TEST(Grid, LpNorms) {
  auto one = GridDensity::sample(GridGeometry::cube(2, 0, 1, 32), [](auto) { return 1.0; });
  EXPECT_NEAR(lp_norm(one, 1.5), 1.0, 1e-13);
  auto half = GridDensity::sample(GridGeometry::cube(1, 0, 2, 64), [](auto) { return 0.5; });
  EXPECT_NEAR(lp_norm(half, 3.0), std::pow(0.125 * 2.0, 1.0 / 3.0), 1e-13);
  EXPECT_THROW(lp_norm(one, 0.5), InvalidArgument);
}

TEST(Grid, TextAndBinaryRoundTrip) {
  GridGeometry g({-1.0, 0.25}, {1.5, 3.0}, {3, 4});
  std::vector<double> v(g.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.1 * static_cast<double>(i) + 1.0 / 3.0;
  GridDensity f(g, v);
  std::stringstream text;
  write_text(text, f);
  EXPECT_EQ(read_text(text), f);
  std::stringstream bin;
  write_binary(bin, f);
  EXPECT_EQ(read_binary(bin), f);
  std::stringstream bad("2 0 0 1");
  EXPECT_THROW(read_text(bad), InvalidArgument);
}

TEST(Grid, SupportBoundaryFlag) {
  auto g = GridGeometry::cube(2, -1, 1, 16);
  auto inner = GridDensity::sample(g, [](std::span<const double> x) { return x[0] * x[0] + x[1] * x[1] < 0.5 ? 1.0 : 0.0; });
  EXPECT_FALSE(support_touches_boundary(inner));
  auto full = GridDensity::sample(g, [](auto) { return 1.0; });
  EXPECT_TRUE(support_touches_boundary(full));
}

TEST(Grid, DilationScalesVolumeByHomogeneousDimension) {
  // Rasterize delta_r([0,1]^3) on H^1 by pulling cell centers back through delta_{1/r}.
  auto h = CorankGroup::heisenberg();
  for (double r : {0.5, 1.5, 2.0}) {
    const double lo = -0.05 * r, hx = 1.05 * r, ht = 1.05 * r * r;
    GridGeometry g({lo, lo, lo * r}, {hx, hx, ht}, {160, 160, 160});
    double vol = 0.0;
    std::vector<std::size_t> idx(3);
    std::vector<double> x(3);
    for (std::size_t c = 0; c < g.size(); ++c) {
      g.unravel(c, idx);
      g.cell_center(idx, x);
      auto p = dilate(h, 1.0 / r, {{x[0], x[1]}, x[2]});
      if (p.x[0] >= 0 && p.x[0] < 1 && p.x[1] >= 0 && p.x[1] < 1 && p.t >= 0 && p.t < 1) vol += g.cell_volume();
    }
    EXPECT_NEAR(vol / std::pow(r, 4.0), 1.0, 0.03) << "r = " << r;
  }
}
