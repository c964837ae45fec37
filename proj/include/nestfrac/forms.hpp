#pragma once

// Piecewise harmonic functions, graph energies, and the orthonormal basis of
// mean-zero harmonic functions with its cell maps.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "nestfrac/geometry.hpp"
#include "nestfrac/harmonic_structure.hpp"
#include "nestfrac/random.hpp"

namespace nestfrac {

inline std::size_t ipow(std::size_t base, std::size_t e) {
  std::size_t out = 1;
  while (e--) out *= base;
  return out;
}

/// An m-harmonic function stored cell by cell: column c holds the values on the
/// vertices of the c-th level-m cell (lexicographic order), in V^(0) order.
class PiecewiseHarmonicFunction {
 public:
  PiecewiseHarmonicFunction(int level, Matrix cell_values) : level_(level), values_(std::move(cell_values)) {
    if (level < 0) throw InvalidArgument("level must be nonnegative");
  }

  /// The harmonic function with the given boundary values.
  static PiecewiseHarmonicFunction harmonic(const Vector& boundary) {
    return PiecewiseHarmonicFunction(0, Matrix(boundary));
  }

  static PiecewiseHarmonicFunction from_lattice(const VertexLattice& lattice, const Vector& values) {
    if (static_cast<std::size_t>(values.size()) != lattice.size())
      throw InvalidArgument("values do not match the size of V^(" + std::to_string(lattice.level()) + ")");
    Matrix cells(lattice.num_boundary(), static_cast<Eigen::Index>(lattice.num_cells()));
    for (std::size_t c = 0; c < lattice.num_cells(); ++c)
      for (int v = 0; v < lattice.num_boundary(); ++v)
        cells(v, static_cast<Eigen::Index>(c)) = values[static_cast<Eigen::Index>(lattice.cell_vertex(c, v))];
    return PiecewiseHarmonicFunction(lattice.level(), std::move(cells));
  }

  int level() const { return level_; }
  const Matrix& cell_values() const { return values_; }
  Vector cell(std::size_t index) const { return values_.col(static_cast<Eigen::Index>(index)); }
  std::size_t num_cells() const { return static_cast<std::size_t>(values_.cols()); }

  Vector lattice_values(const VertexLattice& lattice) const {
    if (lattice.level() != level_ || lattice.num_cells() != num_cells())
      throw InvalidArgument("lattice level does not match the function level");
    Vector out(static_cast<Eigen::Index>(lattice.size()));
    for (std::size_t i = 0; i < lattice.size(); ++i) {
      const auto& p = lattice.provenance(i).front();
      out[static_cast<Eigen::Index>(i)] = values_(p.vertex, static_cast<Eigen::Index>(p.cell));
    }
    return out;
  }

  PiecewiseHarmonicFunction scaled(double c) const { return {level_, c * values_}; }
  PiecewiseHarmonicFunction shifted(double c) const { return {level_, (values_.array() + c).matrix()}; }

 private:
  int level_;
  Matrix values_;
};

/// The same function written at level n >= fn.level().
inline PiecewiseHarmonicFunction extend_to_level(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn, int n) {
  if (n < fn.level()) throw InvalidArgument("cannot extend to a coarser level");
  if (n > hs.system().max_depth()) throw DepthExceeded("level " + std::to_string(n) + " exceeds max depth");
  const auto& E = hs.extension_matrices();
  const auto M = static_cast<Eigen::Index>(E.size());
  Matrix cur = fn.cell_values();
  for (int k = fn.level(); k < n; ++k) {
    Matrix next(cur.rows(), cur.cols() * M);
    for (Eigen::Index c = 0; c < cur.cols(); ++c)
      for (Eigen::Index i = 0; i < M; ++i) next.col(c * M + i) = E[static_cast<std::size_t>(i)] * cur.col(c);
    cur = std::move(next);
  }
  return {n, std::move(cur)};
}

/// f∘phi_w as a piecewise harmonic function of level max(0, fn.level() - |w|).
inline PiecewiseHarmonicFunction restrict_to_cell(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn,
                                                  const Word& w) {
  const int M = hs.system().num_maps();
  if (!w.valid_for(M)) throw InvalidArgument("word letter out of range: " + w.to_string());
  const auto m = static_cast<int>(w.size());
  if (m >= fn.level()) {
    const auto lvl = static_cast<std::size_t>(fn.level());
    Vector v = fn.cell(w.head(lvl).index(M));
    for (std::size_t k = lvl; k < w.size(); ++k) v = hs.extension_matrices()[static_cast<std::size_t>(w[k])] * v;
    return PiecewiseHarmonicFunction::harmonic(v);
  }
  const std::size_t span = ipow(static_cast<std::size_t>(M), static_cast<std::size_t>(fn.level() - m));
  const auto first = static_cast<Eigen::Index>(w.index(M) * span);
  return {fn.level() - m, fn.cell_values().middleCols(first, static_cast<Eigen::Index>(span))};
}

/// Level-m graph energy rho^m Σ_{|w|=m} E0(f∘phi_w) of values on V^(m).
inline double graph_energy(const HarmonicStructure& hs, const VertexLattice& lattice, const Vector& values) {
  if (static_cast<std::size_t>(values.size()) != lattice.size()) throw InvalidArgument("values do not match V^(m)");
  const auto& form = hs.base_form();
  double e = 0.0;
  Vector local(hs.num_boundary());
  for (std::size_t c = 0; c < lattice.num_cells(); ++c) {
    for (int v = 0; v < hs.num_boundary(); ++v) local[v] = values[static_cast<Eigen::Index>(lattice.cell_vertex(c, v))];
    e += form.energy(local);
  }
  return std::pow(hs.rho(), lattice.level()) * e;
}

/// Energy of an m-harmonic function, computed at its own level.
inline double graph_energy(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn) {
  double e = 0.0;
  for (std::size_t c = 0; c < fn.num_cells(); ++c) e += hs.boundary_energy(fn.cell(c));
  return std::pow(hs.rho(), fn.level()) * e;
}

/// Harmonic extension of boundary values to V^(1) (indexed like hs.v1_lattice()).
inline Vector harmonic_extension(const HarmonicStructure& hs, const Vector& boundary) {
  if (boundary.size() != hs.num_boundary()) throw InvalidArgument("boundary values must have r entries");
  return hs.extension_operator() * boundary;
}

inline Vector project_meanzero(const Vector& f) {
  Vector out = f;
  out.array() -= f.mean();
  return out;
}

/// Value at an eventually periodic address: the cell values along the prefix,
/// then the limit of the period's extension matrix applied to them.
inline double evaluate(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn, const Address& x) {
  const auto k = std::max(static_cast<std::size_t>(fn.level()), x.prefix().size());
  const Word head = x.head(k);
  Vector vals;
  if (static_cast<int>(k) == fn.level()) {
    vals = fn.cell(head.index(hs.system().num_maps()));
  } else {
    vals = restrict_to_cell(hs, fn, head).cell(0);
  }
  const Address rest = x.shifted(k);
  const auto& E = hs.extension_matrices();
  const int r = hs.num_boundary();
  Matrix P = Matrix::Identity(r, r);
  for (int l : rest.period().letters()) P = E[static_cast<std::size_t>(l)] * P;
  // Rows sum to one; renormalizing keeps rounding from compounding under squaring.
  for (int it = 0; it < 64; ++it) {
    Matrix next = P * P;
    next = next.array().colwise() / next.rowwise().sum().array();
    const double diff = (next - P).cwiseAbs().maxCoeff();
    P = std::move(next);
    if (diff < 1e-14) break;
  }
  return P.row(0).dot(vals);
}

/// Orthonormal basis of the mean-zero harmonic functions under the energy inner
/// product, and the cell maps in that basis.
class HarmonicSpaceBasis {
 public:
  HarmonicSpaceBasis(HarmonicStructure hs, Matrix basis) : hs_(std::move(hs)), basis_(std::move(basis)) {
    gram_ = -hs_.conductivity();
    for (const auto& E : hs_.extension_matrices()) cell_maps_.push_back(basis_.transpose() * gram_ * E * basis_);
  }

  const HarmonicStructure& structure() const { return hs_; }
  /// r x (r-1); column k is the boundary data of h_k.
  const Matrix& basis() const { return basis_; }
  const std::vector<Matrix>& cell_maps() const { return cell_maps_; }
  const std::vector<Matrix>& extension_matrices() const { return hs_.extension_matrices(); }
  /// Matrix of the energy inner product on boundary values.
  const Matrix& energy_matrix() const { return gram_; }
  double rho() const { return hs_.rho(); }
  int dim() const { return static_cast<int>(basis_.cols()); }
  int num_maps() const { return hs_.system().num_maps(); }

  /// Coordinates of the projection of the harmonic extension onto the mean-zero part.
  Vector coordinates(const Vector& boundary) const { return basis_.transpose() * (gram_ * boundary); }
  Vector boundary_values(const Vector& coords) const { return basis_ * coords; }

  /// M_w = M_{w_m} ... M_{w_1}
  Matrix word_map(const Word& w) const {
    Matrix out = Matrix::Identity(dim(), dim());
    for (int l : w.letters()) out = cell_maps_[static_cast<std::size_t>(l)] * out;
    return out;
  }

 private:
  HarmonicStructure hs_;
  Matrix basis_;
  Matrix gram_;
  std::vector<Matrix> cell_maps_;
};

/// Gram-Schmidt in the energy inner product. Canonical start vectors e_k - mean,
/// or random mean-zero vectors when a seed is given.
inline HarmonicSpaceBasis build_basis(const HarmonicStructure& hs, std::optional<std::uint64_t> seed = std::nullopt) {
  const int r = hs.num_boundary();
  const Matrix G = -hs.conductivity();
  Rng rng(seed.value_or(0));
  Matrix B(r, r - 1);
  for (int k = 0; k < r - 1; ++k) {
    Vector v = seed ? random_boundary_values(rng, r) : project_meanzero(Vector::Unit(r, k));
    for (int pass = 0; pass < 2; ++pass)
      for (int j = 0; j < k; ++j) v -= B.col(j).dot(G * v) * B.col(j);
    const double n2 = v.dot(G * v);
    if (!(n2 > 1e-12)) throw DegenerateStructure("structure not nondegenerate: energy vanishes on a mean-zero function");
    B.col(k) = v / std::sqrt(n2);
  }
  return HarmonicSpaceBasis(hs, std::move(B));
}

}  // namespace nestfrac
