#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace nf = nestfrac;
using nf::Vector;

namespace {

double point_segment(const Vector& p, const Vector& a, const Vector& b) {
  const Vector d = b - a;
  const double t = std::clamp((p - a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (p - (a + t * d)).norm();
}

bool inside_triangle(const Vector& p, const std::vector<Vector>& t) {
  const auto cross = [](const Vector& u, const Vector& v) { return u[0] * v[1] - u[1] * v[0]; };
  const double s0 = cross(t[1] - t[0], p - t[0]), s1 = cross(t[2] - t[1], p - t[1]), s2 = cross(t[0] - t[2], p - t[2]);
  return (s0 >= 0 && s1 >= 0 && s2 >= 0) || (s0 <= 0 && s1 <= 0 && s2 <= 0);
}

bool segments_cross(const Vector& p, const Vector& q, const Vector& u, const Vector& v) {
  const auto orient = [](const Vector& a, const Vector& b, const Vector& c) {
    return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
  };
  return orient(p, q, u) * orient(p, q, v) < 0 && orient(u, v, p) * orient(u, v, q) < 0;
}

// Distance between two planar triangles from containment, edge crossings and vertex-edge distances.
double triangle_distance(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  for (const auto& p : a)
    if (inside_triangle(p, b)) return 0.0;
  for (const auto& p : b)
    if (inside_triangle(p, a)) return 0.0;
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      if (segments_cross(a[i], a[(i + 1) % 3], b[j], b[(j + 1) % 3])) return 0.0;
  double d = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      d = std::min(d, point_segment(a[static_cast<std::size_t>(i)], b[static_cast<std::size_t>(j)], b[static_cast<std::size_t>((j + 1) % 3)]));
      d = std::min(d, point_segment(b[static_cast<std::size_t>(i)], a[static_cast<std::size_t>(j)], a[static_cast<std::size_t>((j + 1) % 3)]));
    }
  return d;
}

}  // namespace

TEST(ConvexHullDistance, MatchesTriangleOracle) {
  nf::Rng rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 200; ++k) {
    std::vector<Vector> a, b;
    for (int i = 0; i < 3; ++i) a.push_back(Vector{{u(rng), u(rng)}});
    for (int i = 0; i < 3; ++i) b.push_back(Vector{{u(rng) + 1.5, u(rng)}});
    EXPECT_NEAR(nf::convex_hull_distance(a, b), triangle_distance(a, b), 1e-10);
  }
}

TEST(ConvexHullDistance, PointAndSegment) {
  EXPECT_NEAR(nf::convex_hull_distance({Vector{{0.0, 1.0}}}, {Vector{{-1.0, 0.0}}, Vector{{1.0, 0.0}}}), 1.0, 1e-14);
  EXPECT_NEAR(nf::convex_hull_distance({Vector{{0.0, 0.0, 0.0}}}, {Vector{{1.0, 1.0, 1.0}}}), std::sqrt(3.0), 1e-14);
}

// Exhaustive oracle over level-2 pairs of the gasket: cells are filled triangles
// for the purpose of a lower bound; the attained minimum is sqrt(3)/8.
TEST(PropertyP, GasketConstantMatchesExhaustiveOracle) {
  const auto g = nf::sierpinski_gasket();
  double oracle = std::numeric_limits<double>::infinity();
  for (std::size_t a = 0; a < 9; ++a)
    for (std::size_t b = a + 1; b < 9; ++b) {
      const auto wa = nf::Word::from_index(a, 2, 3), wb = nf::Word::from_index(b, 2, 3);
      if (nf::cells_touch(g, wa, wb)) continue;
      oracle = std::min(oracle, triangle_distance(g.cell_vertices(wa), g.cell_vertices(wb)));
    }
  EXPECT_NEAR(oracle, std::sqrt(3.0) / 8.0, 1e-12);
  nf::PropertyPOptions opt;
  opt.samples_per_level = 2000;
  const auto rep = nf::property_p_constant(g, opt);
  EXPECT_NEAR(rep.alpha0, oracle, 1e-9);
  EXPECT_NEAR(rep.alpha, 2.0 * oracle, 1e-9);
  EXPECT_TRUE(rep.hull_bounds);
  EXPECT_EQ(rep.total_violations(), 0);
}

TEST(PropertyP, VicsekPositiveWithoutViolations) {
  nf::PropertyPOptions opt;
  opt.samples_per_level = 2000;
  const auto rep = nf::property_p_constant(nf::vicsek(), opt);
  EXPECT_GT(rep.alpha, 0.0);
  EXPECT_LE(rep.alpha0, rep.alpha0_upper + 1e-12);
  EXPECT_EQ(rep.total_violations(), 0);
}

TEST(PropertyP, GasketThreeDimensional) {
  nf::PropertyPOptions opt;
  opt.samples_per_level = 500;
  opt.n_check = 3;
  const auto rep = nf::property_p_constant(nf::sierpinski_gasket_3d(), opt);
  EXPECT_GT(rep.alpha, 0.0);
  EXPECT_EQ(rep.total_violations(), 0);
}
