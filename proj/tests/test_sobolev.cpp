#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace nf = nestfrac;
using nf::Address;
using nf::Vector;
using nf::Word;

namespace {

double gasket_alpha() { return std::sqrt(3.0) / 4.0; }

}  // namespace

TEST(Besov, HomogeneousAndBlindToConstants) {
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{1.0, -0.4, -0.6}});
  const double sigma = hs.walk_dim() / 2.0;
  const double a = nf::besov_seminorm(hs, f, 2.0, sigma, 2, 6, gasket_alpha());
  EXPECT_GT(a, 0.0);
  EXPECT_NEAR(nf::besov_seminorm(hs, f.scaled(3.0), 2.0, sigma, 2, 6, gasket_alpha()), 3.0 * a, 1e-10 * a);
  EXPECT_NEAR(nf::besov_seminorm(hs, f.shifted(7.0), 2.0, sigma, 2, 6, gasket_alpha()), a, 1e-10 * a);
  const auto c = nf::PiecewiseHarmonicFunction::harmonic(Vector::Constant(3, 1.0));
  EXPECT_NEAR(nf::besov_seminorm(hs, c, 2.0, sigma, 2, 6, gasket_alpha()), 0.0, 1e-12);
  EXPECT_THROW(nf::besov_seminorm(hs, f, 0.5, sigma, 2, 6, gasket_alpha()), nf::InvalidArgument);
  EXPECT_THROW(nf::besov_seminorm(hs, f, 2.0, sigma, 2, 3, gasket_alpha()), nf::InvalidArgument);
}

// Independent quadrature: O(N^2) double loop over level-n cell centers.
TEST(Besov, BatchMatchesBruteForcePairs) {
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const auto& s = hs.system();
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{0.2, 0.5, -0.7}});
  const int m = 1, n = 4;
  // Away from the lattice of center distances, so the proximity test has no ties.
  const double c0 = 0.41, sigma = 1.3, p = 2.0;
  const auto fine = nf::extend_to_level(hs, f, n);
  const auto cells = nf::ipow(3, n);
  std::vector<Vector> centers;
  std::vector<double> means;
  for (std::size_t k = 0; k < cells; ++k) {
    const auto w = Word::from_index(k, n, 3);
    Vector c = Vector::Zero(2);
    for (const auto& v : s.cell_vertices(w)) c += v / 3.0;
    centers.push_back(c);
    means.push_back(fine.cell(k).mean());
  }
  double acc = 0.0;
  for (std::size_t a = 0; a < cells; ++a)
    for (std::size_t b = 0; b < cells; ++b)
      if (a != b && (centers[a] - centers[b]).norm() <= c0 * std::pow(2.0, -m)) acc += std::pow(std::abs(means[a] - means[b]), p);
  const double mu = std::pow(3.0, -n);
  const double expected = std::pow(2.0, m * sigma) * std::sqrt(std::pow(2.0, m * s.hausdorff_dim()) * acc * mu * mu);
  EXPECT_NEAR(nf::besov_seminorm(hs, f, p, sigma, m, n, c0), expected, 1e-10 * expected);
}

TEST(Besov, HarmonicProfileStaysBoundedAtCriticalSmoothness) {
  nf::Rng rng(31);
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const auto fns = nf::testing::random_harmonics(rng, 3, 4);
  const auto profiles = nf::besov_profiles(hs, fns, 2.0, hs.walk_dim() / 2.0, 3, gasket_alpha(), 3);
  for (const auto& prof : profiles) {
    ASSERT_EQ(prof.values.size(), 4u);
    double lo = 1e300, hi = 0.0;
    for (const auto& [m, a] : prof.values) lo = std::min(lo, a), hi = std::max(hi, a);
    EXPECT_LT(hi / lo, 3.0);
    EXPECT_LE(prof.tail_sup(), prof.sup_value);
  }
}

TEST(Density, EnergyDensityIntegratesToEnergy) {
  const auto& b = nf::testing::basis_for("sierpinski-gasket");
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{1.0, 0.0, -1.0}});
  const nf::DensityIntegrator g(b, nf::energy_density(b, f, 3), 2.0);
  EXPECT_NEAR(g.total(), nf::graph_energy(b.structure(), f), 1e-10);
  // Refining below the density level splits mass additively.
  double children = 0.0;
  for (int i = 0; i < 3; ++i) children += g.over_cell(Word{1, 2, 0, i});
  EXPECT_NEAR(children, g.over_cell(Word{1, 2, 0}), 1e-12);
  EXPECT_THROW(nf::DensityIntegrator(b, nf::DensityOnCells{1, {1.0, -1.0, 0.0}}, 2.0), nf::InvalidArgument);
}

TEST(Riesz, TruncationWithinTailBoundAndMaximalDomination) {
  nf::Rng rng(32);
  const auto& b = nf::testing::basis_for("sierpinski-gasket");
  const auto& hs = b.structure();
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{0.4, 0.6, -1.0}});
  const nf::DensityIntegrator g(b, nf::energy_density(b, f, 2), 2.0);
  const double sigma = hs.walk_dim() / 2.0;
  EXPECT_LT(nf::riesz_decay_factor(b, 2.0, sigma), 1.0);
  const double C = nf::maximal_bound_constant(2.0, sigma);
  for (int k = 0; k < 10; ++k) {
    const auto x = nf::random_address(rng, 3, 10);
    const auto shallow = nf::riesz_potential(g, sigma, 1, x, 3);
    const auto deep = nf::riesz_potential(g, sigma, 1, x, 7);
    EXPECT_EQ(shallow.terms.size(), 4u);
    EXPECT_LE(deep.value - shallow.value, shallow.tail_bound + 1e-12);
    EXPECT_LE(deep.value, C * std::pow(2.0, -sigma) * nf::maximal_function(g, x, 8) + 1e-12);
  }
  EXPECT_THROW(nf::riesz_potential(g, sigma, 1, Address::periodic(Word{0}), 3), nf::AmbiguousAddress);
}

TEST(Riesz, LocalEstimateRatiosFinite) {
  const auto& b = nf::testing::basis_for("sierpinski-gasket");
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{0.4, 0.6, -1.0}});
  const nf::DensityIntegrator g(b, nf::energy_density(b, f, 2), 2.0);
  const auto res = nf::riesz_star_bound(g, b.structure().walk_dim() / 2.0, 2, Address(Word{0, 1}, Word{2, 1}), 3);
  EXPECT_TRUE(res.within_hypothesis);
  EXPECT_TRUE(std::isfinite(res.ratio_local));
  EXPECT_TRUE(std::isfinite(res.ratio_global));
  EXPECT_GT(res.lhs_global, 0.0);
  EXPECT_LE(res.lhs_local, res.lhs_global + 1e-15);
}

TEST(WeakType, TailsBoundedByIntegral) {
  nf::Rng rng(33);
  const auto& b = nf::testing::basis_for("sierpinski-gasket");
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{0.4, 0.6, -1.0}});
  const nf::DensityIntegrator g(b, nf::energy_density(b, f, 2), 2.0);
  const auto diag = nf::weak_type_diagnostic(g, 4, 200, 10, rng);
  EXPECT_EQ(diag.tails.size(), 10u);
  EXPECT_TRUE(std::isfinite(diag.max_ratio));
  EXPECT_GT(diag.integral, 0.0);
}

TEST(Hajlasz, SupNormWitnessAtZeroSmoothness) {
  nf::Rng rng(34);
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{1.0, -0.5, -0.5}});
  std::vector<std::pair<Address, Address>> pairs;
  for (int k = 0; k < 40; ++k) pairs.emplace_back(nf::random_address(rng, 3, 6), nf::random_address(rng, 3, 6));
  const auto ok = nf::hajlasz_pair_check(hs, f, [](const Address&) { return 1.0; }, 0.0, pairs);
  EXPECT_EQ(ok.violations, 0u);
  EXPECT_EQ(ok.pairs, 40u);
  const auto bad = nf::hajlasz_pair_check(hs, f, [](const Address&) { return 1e-3; }, 0.0, pairs);
  EXPECT_GT(bad.violations, 0u);
}

TEST(Stars, EnlargementIndex) {
  EXPECT_EQ(nf::star_enlargement_index(1.0, 1.0, 2.0), 0);
  EXPECT_EQ(nf::star_enlargement_index(0.25, 1.0, 2.0), 2);
  EXPECT_EQ(nf::star_enlargement_index(0.3, 1.0, 3.0), 2);
}
