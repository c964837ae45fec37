#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace nf = nestfrac;
using nf::Matrix;
using nf::Vector;
using nf::Word;

namespace {

std::vector<std::string> planar() { return {"sierpinski-gasket", "vicsek"}; }

// Values of g on V^(m) restricted to the points of V^(k), k <= m.
Vector restrict_values(const nf::VertexLattice& fine, const nf::VertexLattice& coarse, const Vector& g) {
  Vector out(static_cast<Eigen::Index>(coarse.size()));
  for (std::size_t i = 0; i < coarse.size(); ++i) out[static_cast<Eigen::Index>(i)] = g[static_cast<Eigen::Index>(*fine.find(coarse.point(i)))];
  return out;
}

}  // namespace

TEST(Basis, OrthonormalInEnergyProduct) {
  for (const auto& name : nf::catalog_names()) {
    const auto& b = nf::testing::basis_for(name);
    const Matrix gram = b.basis().transpose() * b.energy_matrix() * b.basis();
    EXPECT_LT((gram - Matrix::Identity(b.dim(), b.dim())).cwiseAbs().maxCoeff(), 1e-12) << name;
    // Basis vectors have mean zero and their energy equals the squared coordinate norm.
    EXPECT_LT(b.basis().colwise().sum().cwiseAbs().maxCoeff(), 1e-12) << name;
  }
}

TEST(Basis, CoordinatesRecoverEnergy) {
  nf::Rng rng(2);
  const auto& b = nf::testing::basis_for("vicsek");
  for (int k = 0; k < 20; ++k) {
    const Vector f = nf::random_boundary_values(rng, 4);
    EXPECT_NEAR(b.coordinates(f).squaredNorm(), b.structure().boundary_energy(f), 1e-12);
    EXPECT_LT((b.boundary_values(b.coordinates(f)) - f).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Basis, ScalingIdentityOfCellMaps) {
  for (const auto& name : planar()) {
    const auto& b = nf::testing::basis_for(name);
    for (int m = 0; m <= 3; ++m) {
      Matrix sum = Matrix::Zero(b.dim(), b.dim());
      for (const auto& W : nf::cell_map_table(b, m)) sum += W.transpose() * W;
      EXPECT_LT((std::pow(b.rho(), m) * sum - Matrix::Identity(b.dim(), b.dim())).cwiseAbs().maxCoeff(), 1e-10) << name;
    }
  }
}

TEST(Basis, SeededBasisDiffersButTracesAgree) {
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const auto a = nf::build_basis(hs);
  const auto c = nf::build_basis(hs, 99);
  EXPECT_GT((a.basis() - c.basis()).cwiseAbs().maxCoeff(), 1e-3);
  const Word w{1, 2, 0};
  EXPECT_NEAR(a.word_map(w).squaredNorm(), c.word_map(w).squaredNorm(), 1e-14);
}

TEST(PiecewiseHarmonic, LatticeRoundTripAndRestriction) {
  nf::Rng rng(4);
  for (const auto& name : planar()) {
    const auto& hs = nf::testing::structure_for(name);
    const auto f = nf::testing::random_piecewise(rng, hs.system(), 2);
    const auto lat = nf::vertex_lattice(hs.system(), 2);
    const auto back = nf::PiecewiseHarmonicFunction::from_lattice(lat, f.lattice_values(lat));
    EXPECT_LT((back.cell_values() - f.cell_values()).cwiseAbs().maxCoeff(), 0.0 + 1e-15);
    // Restriction by column slicing and by walking the extension agree after extension.
    const Word w{1};
    const auto sliced = nf::restrict_to_cell(hs, f, w);
    EXPECT_EQ(sliced.level(), 1);
    const auto fine = nf::extend_to_level(hs, f, 3);
    const auto deep = nf::restrict_to_cell(hs, fine, Word{1, 0, 2});
    const auto walked = nf::restrict_to_cell(hs, f, Word{1, 0, 2});
    EXPECT_LT((deep.cell_values() - walked.cell_values()).cwiseAbs().maxCoeff(), 1e-14) << name;
  }
}

TEST(PiecewiseHarmonic, ExtensionPreservesEnergy) {
  nf::Rng rng(6);
  for (const auto& name : planar()) {
    const auto& hs = nf::testing::structure_for(name);
    const auto f = nf::testing::random_piecewise(rng, hs.system(), 1);
    const double e = nf::graph_energy(hs, f);
    for (int n = 2; n <= 4; ++n) EXPECT_NEAR(nf::graph_energy(hs, nf::extend_to_level(hs, f, n)), e, 1e-10 * std::max(1.0, e)) << name;
  }
}

// Nondecreasing energies of restrictions, with equality exactly when the
// values on V^(m+1) are the harmonic extension of those on V^(m).
TEST(GraphEnergy, MonotoneWithEqualityForHarmonicSteps) {
  nf::Rng rng(8);
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const auto& s = hs.system();
  std::vector<nf::VertexLattice> lats;
  for (int m = 0; m <= 4; ++m) lats.push_back(nf::vertex_lattice(s, m));
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 30; ++k) {
    Vector g(static_cast<Eigen::Index>(lats[4].size()));
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] = u(rng);
    double prev = -1.0;
    for (int m = 0; m <= 4; ++m) {
      const double e = nf::graph_energy(hs, lats[static_cast<std::size_t>(m)], restrict_values(lats[4], lats[static_cast<std::size_t>(m)], g));
      EXPECT_GE(e, prev - 1e-10);
      prev = e;
    }
  }
  // A 2-harmonic function: equality from level 2 on, strict increase below (generically).
  const auto f = nf::testing::random_piecewise(rng, s, 2);
  const Vector g = nf::extend_to_level(hs, f, 4).lattice_values(lats[4]);
  std::vector<double> e;
  for (int m = 0; m <= 4; ++m) e.push_back(nf::graph_energy(hs, lats[static_cast<std::size_t>(m)], restrict_values(lats[4], lats[static_cast<std::size_t>(m)], g)));
  EXPECT_NEAR(e[2], e[3], 1e-10);
  EXPECT_NEAR(e[3], e[4], 1e-10);
  EXPECT_GT(e[2] - e[1], 1e-10);
}

TEST(Evaluate, MatchesLatticeValuesAndCellBounds) {
  nf::Rng rng(10);
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const Vector b = nf::random_boundary_values(rng, 3);
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(b);
  // Eventually constant addresses land on lattice points.
  for (int i = 0; i < 3; ++i)
    EXPECT_NEAR(nf::evaluate(hs, f, nf::Address::periodic(Word{i})), b[hs.system().boundary_fixed_by(i)], 1e-12);
  const auto f3 = nf::extend_to_level(hs, f, 3);
  for (int k = 0; k < 50; ++k) {
    const auto x = nf::random_address(rng, 3, 5);
    const double val = nf::evaluate(hs, f, x);
    const Vector cell = f3.cell(x.head(3).index(3));
    EXPECT_GE(val, cell.minCoeff() - 1e-12);
    EXPECT_LE(val, cell.maxCoeff() + 1e-12);
    EXPECT_NEAR(nf::evaluate(hs, f3, x), val, 1e-12);
  }
}

TEST(PiecewiseHarmonic, RejectsBadInput) {
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const auto f = nf::PiecewiseHarmonicFunction::harmonic(Vector{{1.0, 0.0, 0.0}});
  EXPECT_THROW(nf::extend_to_level(hs, nf::extend_to_level(hs, f, 2), 1), nf::InvalidArgument);
  EXPECT_THROW(nf::extend_to_level(hs, f, hs.system().max_depth() + 1), nf::DepthExceeded);
  EXPECT_THROW(nf::harmonic_extension(hs, Vector{{1.0, 0.0}}), nf::InvalidArgument);
  EXPECT_THROW(nf::restrict_to_cell(hs, f, Word{5}), nf::InvalidArgument);
}
