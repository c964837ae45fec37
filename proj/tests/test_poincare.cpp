#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace nf = nestfrac;
using nf::Address;
using nf::Vector;
using nf::Word;

TEST(SafeRatio, ZeroOverZeroIsZero) {
  EXPECT_EQ(nf::safe_ratio(0.0, 0.0), 0.0);
  EXPECT_TRUE(std::isinf(nf::safe_ratio(1.0, 0.0)));
  EXPECT_EQ(nf::safe_ratio(1.0, 4.0), 0.25);
}

TEST(Quadrature, MeanOfHarmonicFunctionConverges) {
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{1.0, 0.0, 0.0}});
  // By symmetry the mean over K is the mean of the boundary values.
  const auto q = nf::mean_over_simplex(hs, f, Word(), 8);
  EXPECT_NEAR(q.value, 1.0 / 3.0, 1e-12);
  EXPECT_LT(q.error_estimate, 1e-12);
}

TEST(LocalPair, RatioBoundedAndInvariant) {
  nf::Rng rng(21);
  const auto& b = nf::testing::basis_for("sierpinski-gasket");
  const auto fns = nf::testing::random_harmonics(rng, 3, 20);
  const auto rep = nf::local_pair_sweep(b, fns, 3);
  EXPECT_TRUE(std::isfinite(rep.estimated_C));
  EXPECT_GT(rep.estimated_C, 0.0);
  const auto s1 = nf::local_pair_check(b, fns[0], Word{1, 2}, 0, 2);
  const auto s2 = nf::local_pair_check(b, fns[0].scaled(5.0).shifted(3.0), Word{1, 2}, 0, 2);
  EXPECT_NEAR(s1.ratio, s2.ratio, 1e-10 * std::max(1.0, s1.ratio));
  EXPECT_THROW(nf::local_pair_check(b, fns[0], Word{1}, 1, 1), nf::InvalidArgument);
  // Lattice-index form agrees with the word form.
  const auto lat = nf::vertex_lattice(b.structure().system(), 1);
  const auto x = lat.cell_vertex(0, 0), y = lat.cell_vertex(0, 1);
  EXPECT_NEAR(nf::local_pair_check(b, fns[0], lat, x, y).ratio, nf::local_pair_check(b, fns[0], Word{0}, 0, 1).ratio, 1e-14);
}

TEST(Simplex, ConstantFunctionHasZeroRatio) {
  const auto& b = nf::testing::basis_for("sierpinski-gasket");
  const auto c = nf::PiecewiseHarmonicFunction::harmonic(Vector::Constant(3, 2.0));
  const auto s = nf::simplex_poincare_check(b, c, Word{1}, 6);
  EXPECT_NEAR(s.lhs, 0.0, 1e-14);
  EXPECT_EQ(s.ratio, 0.0);
}

TEST(Simplex, SweepStableUnderQuadratureRefinement) {
  nf::Rng rng(22);
  for (const std::string name : {"sierpinski-gasket", "vicsek"}) {
    const auto& b = nf::testing::basis_for(name);
    const auto fns = nf::testing::random_harmonics(rng, b.dim() + 1, 10);
    const auto a = nf::simplex_sweep(b, fns, 2, 5);
    const auto c = nf::simplex_sweep(b, fns, 2, 6);
    EXPECT_TRUE(std::isfinite(c.estimated_C)) << name;
    EXPECT_LT(std::abs(c.estimated_C - a.estimated_C) / c.estimated_C, 0.2) << name;
    // The sweep agrees sample-by-sample with the single-simplex check.
    const auto single = nf::simplex_poincare_check(b, fns[0], Word{1, 0}, 6);
    bool found = false;
    for (const auto& smp : c.samples)
      if (smp.descriptor == "f0:" + Word{1, 0}.to_string()) {
        EXPECT_NEAR(smp.ratio, single.ratio, 1e-10);
        found = true;
      }
    EXPECT_TRUE(found);
  }
}

TEST(Pointwise, FiniteAndScaleInvariant) {
  nf::Rng rng(23);
  const auto& b = nf::testing::basis_for("sierpinski-gasket");
  const auto fns = nf::testing::random_harmonics(rng, 3, 5);
  std::vector<std::pair<Address, Address>> pairs;
  for (int k = 0; k < 20; ++k) {
    const auto x = nf::random_address(rng, 3, 6);
    pairs.emplace_back(x, nf::random_address(rng, 3, 6, x.head(static_cast<std::size_t>(k % 3))));
  }
  const auto rep = nf::pointwise_sweep(b, fns, pairs);
  EXPECT_TRUE(std::isfinite(rep.estimated_C));
  const auto s1 = nf::pointwise_poincare_check(b, fns[1], pairs[0].first, pairs[0].second);
  const auto s2 = nf::pointwise_poincare_check(b, fns[1].scaled(-2.0).shifted(1.0), pairs[0].first, pairs[0].second);
  EXPECT_NEAR(s1.ratio, s2.ratio, 1e-10 * std::max(1.0, s1.ratio));
}

TEST(Ball, CellsNestAndSweepIsFinite) {
  nf::Rng rng(24);
  const auto& b = nf::testing::basis_for("sierpinski-gasket");
  const auto& s = b.structure().system();
  const Vector x0 = s.point(Address(Word(), Word{0, 1}));
  const auto small = nf::cells_in_ball(s, x0, 0.1, 5);
  const auto large = nf::cells_in_ball(s, x0, 0.3, 5);
  EXPECT_FALSE(small.empty());
  EXPECT_TRUE(std::includes(large.begin(), large.end(), small.begin(), small.end()));
  const auto fns = nf::testing::random_harmonics(rng, 3, 10);
  const std::vector<double> radii{0.05, 0.1, 0.2, 0.4};
  const double alpha = std::sqrt(3.0) / 4.0;
  const auto rep = nf::ball_sweep(b, fns, Address(Word(), Word{0, 1}), radii, 6, alpha);
  EXPECT_TRUE(std::isfinite(rep.estimated_C));
  EXPECT_NEAR(rep.dilation_A, 2.0 * 2.0 / alpha, 1e-12);
  EXPECT_THROW(nf::ball_sweep(b, fns, Address(Word(), Word{0, 1}), radii, 6, 0.0), nf::InvalidArgument);
}
