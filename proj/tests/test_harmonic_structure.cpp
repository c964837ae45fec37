#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

namespace nf = nestfrac;
using nf::Matrix;
using nf::Vector;

namespace {

// One reproduction + decimation step built directly from the maps: V1 by linear
// search over images of V0, network from copies of A, dense Schur complement.
Matrix schur_step(const nf::FractalSystem& s, const Matrix& A) {
  std::vector<Vector> pts;
  std::vector<std::vector<std::size_t>> cells;
  const auto index_of = [&](const Vector& p) {
    for (std::size_t k = 0; k < pts.size(); ++k)
      if ((pts[k] - p).norm() < 1e-9) return k;
    pts.push_back(p);
    return pts.size() - 1;
  };
  for (const auto& v : s.boundary()) index_of(v);  // boundary first
  for (const auto& phi : s.maps()) {
    std::vector<std::size_t> cell;
    for (const auto& v : s.boundary()) cell.push_back(index_of(phi(v)));
    cells.push_back(cell);
  }
  const auto n = static_cast<Eigen::Index>(pts.size());
  const Eigen::Index r = s.num_boundary();
  Matrix net = Matrix::Zero(n, n);
  for (const auto& c : cells)
    for (Eigen::Index i = 0; i < r; ++i)
      for (Eigen::Index j = 0; j < r; ++j) net(static_cast<Eigen::Index>(c[static_cast<std::size_t>(i)]), static_cast<Eigen::Index>(c[static_cast<std::size_t>(j)])) += A(i, j);
  const Matrix bb = net.topLeftCorner(r, r), bi = net.topRightCorner(r, n - r), ii = net.bottomRightCorner(n - r, n - r);
  return bb - bi * ii.inverse() * bi.transpose();
}

}  // namespace

TEST(Renormalization, GasketRhoAndWalkDimension) {
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  EXPECT_NEAR(hs.rho(), 5.0 / 3.0, 1e-10);
  EXPECT_NEAR(hs.walk_dim(), std::log(5.0) / std::log(2.0), 1e-10);
  EXPECT_LT(hs.residual(), 1e-12);
  const Matrix once = schur_step(hs.system(), hs.conductivity());
  EXPECT_LT((hs.rho() * once - hs.conductivity()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Renormalization, VicsekRhoAgainstDirectSchurComplement) {
  const auto& hs = nf::testing::structure_for("vicsek");
  EXPECT_NEAR(hs.rho(), 3.0, 1e-10);
  const Matrix once = schur_step(hs.system(), hs.conductivity());
  EXPECT_LT((3.0 * once - hs.conductivity()).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_TRUE(hs.base_form().is_conductivity());
  EXPECT_LT(hs.symmetry_defect(), 1e-12);
}

// The n-dimensional gasket has rho = (n + 3) / (n + 1).
TEST(Renormalization, ThreeDimensionalGasket) {
  const auto& hs = nf::testing::structure_for("sierpinski-gasket-3d");
  EXPECT_NEAR(hs.rho(), 1.5, 1e-10);
  EXPECT_NEAR(hs.rho(), std::pow(hs.system().scale_L(), hs.walk_dim() - hs.hausdorff_dim()), 1e-12);
}

TEST(Renormalization, FixedPointIsNormalizedAndIdempotent) {
  for (const auto& name : nf::catalog_names()) {
    const auto& hs = nf::testing::structure_for(name);
    EXPECT_NEAR(nf::offdiagonal_norm(hs.conductivity()), 1.0, 1e-12) << name;
    nf::RenormalizationOptions opt;
    opt.init = hs.conductivity();
    EXPECT_LT((nf::solve_renormalization(hs.system(), opt).conductivity() - hs.conductivity()).cwiseAbs().maxCoeff(), 1e-12);
    const auto again = nf::harmonic_structure_from(hs.system(), hs.conductivity());
    EXPECT_NEAR(again.rho(), hs.rho(), 1e-12) << name;
  }
}

TEST(Renormalization, IterationCapRaisesWithHistory) {
  nf::RenormalizationOptions opt;
  opt.max_iter = 1;
  opt.tol = 0.0;
  try {
    nf::solve_renormalization(nf::vicsek(), opt);
    FAIL() << "expected NotConverged";
  } catch (const nf::NotConverged& e) {
    EXPECT_EQ(e.residual_history.size(), 1u);
  }
}

// Dense solve of the three midpoint unknowns: each midpoint has four neighbors.
TEST(HarmonicExtension, GasketMidpointsOracle) {
  const auto& hs = nf::testing::structure_for("sierpinski-gasket");
  const Vector b{{1.0, 0.0, 0.0}};
  // Unknowns: m01, m02, m12 (midpoints between sorted boundary points).
  Matrix K{{4.0, -1.0, -1.0}, {-1.0, 4.0, -1.0}, {-1.0, -1.0, 4.0}};
  Vector rhs{{b[0] + b[1], b[0] + b[2], b[1] + b[2]}};
  const Vector mid = K.lu().solve(rhs);
  EXPECT_NEAR(mid[0], 0.4, 1e-12);
  EXPECT_NEAR(mid[1], 0.4, 1e-12);
  EXPECT_NEAR(mid[2], 0.2, 1e-12);

  const Vector ext = nf::harmonic_extension(hs, b);
  const auto& v1 = hs.v1_lattice();
  const auto& p = hs.system().boundary();
  const Vector ours{{ext[static_cast<Eigen::Index>(*v1.find(0.5 * (p[0] + p[1])))],
                     ext[static_cast<Eigen::Index>(*v1.find(0.5 * (p[0] + p[2])))],
                     ext[static_cast<Eigen::Index>(*v1.find(0.5 * (p[1] + p[2])))]}};
  EXPECT_LT((ours - mid).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(HarmonicExtension, ReproducesConstantsAndMinimizesEnergy) {
  nf::Rng rng(5);
  for (const auto& name : nf::catalog_names()) {
    const auto& hs = nf::testing::structure_for(name);
    const int r = hs.num_boundary();
    const Vector ones = Vector::Ones(r);
    EXPECT_LT((nf::harmonic_extension(hs, ones).array() - 1.0).abs().maxCoeff(), 1e-12) << name;
    const nf::GraphForm net{hs.v1_lattice().points(), nf::assemble(hs.conductivity(), hs.v1_lattice())};
    for (int k = 0; k < 10; ++k) {
      const Vector f = nf::random_boundary_values(rng, r);
      const Vector h = nf::harmonic_extension(hs, f);
      EXPECT_NEAR(net.energy(h), hs.boundary_energy(f) / hs.rho(), 1e-12) << name;
    }
  }
}

TEST(Decimation, SchurComplementOnPath) {
  // Path 0 - 2 - 1 with unit conductances: effective conductance 1/2.
  nf::GraphForm path{{}, Matrix{{-1.0, 0.0, 1.0}, {0.0, -1.0, 1.0}, {1.0, 1.0, -2.0}}};
  const std::vector<std::size_t> b{0, 1};
  const auto t = nf::decimate(path, b);
  EXPECT_NEAR(t.matrix(0, 1), 0.5, 1e-15);
  EXPECT_NEAR(t.matrix(0, 0), -0.5, 1e-15);
}

TEST(Decimation, DetachedInteriorIsDropped) {
  nf::GraphForm form{{}, Matrix{{-1.0, 1.0, 0.0}, {1.0, -1.0, 0.0}, {0.0, 0.0, 0.0}}};
  const std::vector<std::size_t> b{0, 1};
  EXPECT_NEAR(nf::decimate(form, b).matrix(0, 1), 1.0, 1e-15);
}

TEST(Decimation, SingularInteriorBlockThrows) {
  // A dangling interior chain is fine; an interior component cut off from the boundary is not.
  nf::GraphForm form{{}, Matrix{{-1.0, 0.0, 1.0, 0.0}, {0.0, 0.0, 0.0, 0.0}, {1.0, 0.0, -2.0, 1.0}, {0.0, 0.0, 1.0, -1.0}}};
  const std::vector<std::size_t> b{0, 1};
  EXPECT_NO_THROW(nf::decimate(form, b));
  nf::GraphForm split{{}, Matrix{{-1.0, 0.0, 1.0, 0.0, 0.0}, {0.0, 0.0, 0.0, 0.0, 0.0}, {1.0, 0.0, -1.0, 0.0, 0.0},
                                 {0.0, 0.0, 0.0, -1.0, 1.0}, {0.0, 0.0, 0.0, 1.0, -1.0}}};
  EXPECT_THROW(nf::decimate(split, b), nf::DegenerateNetwork);
}

TEST(Symmetry, GroupClosureSizes) {
  EXPECT_EQ(nf::permutation_group(3, nf::sierpinski_gasket().symmetry_generators()).size(), 6u);
  EXPECT_EQ(nf::permutation_group(4, nf::vicsek().symmetry_generators()).size(), 8u);
  EXPECT_EQ(nf::permutation_group(4, nf::sierpinski_gasket_3d().symmetry_generators()).size(), 24u);
}

TEST(Energy, GraphFormEnergyFormula) {
  const nf::GraphForm form{{}, nf::complete_graph(3)};
  EXPECT_NEAR(form.energy(Vector{{1.0, 0.0, 0.0}}), 2.0, 1e-15);
  EXPECT_TRUE(form.is_conductivity());
  EXPECT_THROW(form.energy(Vector{{1.0, 0.0}}), nf::InvalidArgument);
}
