#pragma once

// Conductivity networks on vertex lattices, the reproduction and decimation
// maps, and the renormalization fixed point giving the harmonic structure.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "nestfrac/error.hpp"
#include "nestfrac/geometry.hpp"

namespace nestfrac {

/// A symmetric energy form on a finite vertex set in conductivity-matrix form:
/// nonnegative off-diagonal entries, zero row sums.
struct GraphForm {
  std::vector<Vector> vertices;
  Matrix matrix;

  Eigen::Index size() const { return matrix.rows(); }

  /// ½ Σ a_xy (f(x) - f(y))²
  double energy(const Vector& f) const {
    if (f.size() != matrix.rows()) throw InvalidArgument("function size does not match the form");
    double e = 0.0;
    for (Eigen::Index x = 0; x < matrix.rows(); ++x)
      for (Eigen::Index y = x + 1; y < matrix.cols(); ++y) {
        const double d = f[x] - f[y];
        e += matrix(x, y) * d * d;
      }
    return e;
  }

  bool is_conductivity(double tol = 1e-10) const {
    const double scale = std::max(1.0, matrix.cwiseAbs().maxCoeff());
    if ((matrix - matrix.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
    for (Eigen::Index x = 0; x < matrix.rows(); ++x) {
      if (std::abs(matrix.row(x).sum()) > tol * scale) return false;
      for (Eigen::Index y = 0; y < matrix.cols(); ++y)
        if (x != y && matrix(x, y) < -tol * scale) return false;
    }
    return true;
  }
};

/// Unit conductance between every pair of vertices.
inline Matrix complete_graph(int r) {
  Matrix A = Matrix::Ones(r, r);
  A.diagonal().setConstant(-(r - 1.0));
  return A;
}

/// Σ over level-m cells of `weight` times a copy of A placed on the cell's vertices.
inline Matrix assemble(const Matrix& A, const VertexLattice& lattice, double weight = 1.0) {
  const auto n = static_cast<Eigen::Index>(lattice.size());
  const int r = lattice.num_boundary();
  Matrix out = Matrix::Zero(n, n);
  for (std::size_t c = 0; c < lattice.num_cells(); ++c)
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < r; ++j)
        out(static_cast<Eigen::Index>(lattice.cell_vertex(c, i)), static_cast<Eigen::Index>(lattice.cell_vertex(c, j))) +=
            weight * A(i, j);
  return out;
}

/// Reproduction map: the form on V^(1) whose energy is Σ_i E_A(f∘phi_i).
inline GraphForm reproduce(const GraphForm& base, const FractalSystem& s) {
  if (base.size() != s.num_boundary()) throw InvalidArgument("reproduction needs a form on V0");
  const VertexLattice v1(s, 1);
  return {v1.points(), assemble(base.matrix, v1)};
}

/// Trace of the form on `boundary` (Schur complement of the remaining vertices).
inline GraphForm decimate(const GraphForm& form, std::span<const std::size_t> boundary) {
  const auto n = form.size();
  std::vector<char> is_boundary(static_cast<std::size_t>(n), 0);
  for (auto b : boundary) {
    if (b >= static_cast<std::size_t>(n)) throw InvalidArgument("boundary index out of range");
    is_boundary[b] = 1;
  }
  std::vector<Eigen::Index> B, I;
  for (auto b : boundary) B.push_back(static_cast<Eigen::Index>(b));
  for (Eigen::Index k = 0; k < n; ++k)
    if (!is_boundary[static_cast<std::size_t>(k)]) I.push_back(k);

  const Matrix mbb = form.matrix(B, B);
  GraphForm out;
  for (auto b : B) out.vertices.push_back(form.vertices.empty() ? Vector() : form.vertices[static_cast<std::size_t>(b)]);
  if (I.empty()) {
    out.matrix = mbb;
  } else {
    const Matrix mbi = form.matrix(B, I);
    if (mbi.cwiseAbs().maxCoeff() == 0.0) {
      out.matrix = mbb;
    } else {
      const Matrix mii = form.matrix(I, I);
      const Eigen::FullPivLU<Matrix> lu(mii);
      if (!lu.isInvertible()) throw DegenerateNetwork("disconnected or degenerate network: singular interior block");
      out.matrix = mbb - mbi * lu.solve(mbi.transpose());
      out.matrix = 0.5 * (out.matrix + out.matrix.transpose());
    }
  }
  if (!out.is_conductivity(1e-9)) throw DegenerateNetwork("decimated form is not a conductivity matrix");
  return out;
}

/// Decimation of a form on V^(1) back to V^(0) (in V^(0) order).
inline GraphForm decimate(const GraphForm& form_on_v1, const FractalSystem& s) {
  const VertexLattice v1(s, 1);
  if (static_cast<std::size_t>(form_on_v1.size()) != v1.size()) throw InvalidArgument("decimation needs a form on V1");
  std::vector<std::size_t> boundary;
  for (const auto& v : s.boundary()) boundary.push_back(*v1.find(v));
  return decimate(form_on_v1, boundary);
}

/// Closure of the generators under composition, identity first.
inline std::vector<Permutation> permutation_group(int r, const std::vector<Permutation>& generators) {
  Permutation id(static_cast<std::size_t>(r));
  for (int i = 0; i < r; ++i) id[static_cast<std::size_t>(i)] = i;
  std::set<Permutation> seen{id};
  std::vector<Permutation> group{id};
  for (std::size_t k = 0; k < group.size(); ++k)
    for (const auto& g : generators) {
      Permutation p(static_cast<std::size_t>(r));
      for (int i = 0; i < r; ++i) p[static_cast<std::size_t>(i)] = g[static_cast<std::size_t>(group[k][static_cast<std::size_t>(i)])];
      if (seen.insert(p).second) group.push_back(p);
    }
  return group;
}

/// (P_g A P_g^T)[g(x), g(y)] = A[x, y]
inline Matrix permute(const Matrix& A, const Permutation& g) {
  Matrix out(A.rows(), A.cols());
  for (Eigen::Index x = 0; x < A.rows(); ++x)
    for (Eigen::Index y = 0; y < A.cols(); ++y)
      out(g[static_cast<std::size_t>(x)], g[static_cast<std::size_t>(y)]) = A(x, y);
  return out;
}

inline Matrix symmetrize(const Matrix& A, const std::vector<Permutation>& group) {
  if (group.empty()) return A;
  Matrix out = Matrix::Zero(A.rows(), A.cols());
  for (const auto& g : group) out += permute(A, g);
  return out / static_cast<double>(group.size());
}

inline double offdiagonal_norm(const Matrix& A) {
  return std::sqrt(A.squaredNorm() - A.diagonal().squaredNorm());
}

struct RenormalizationOptions {
  double tol = 1e-13;
  int max_iter = 10000;
  std::optional<Matrix> init;
};

/// The G-invariant harmonic structure (A, rho) with its V^(1) extension data.
class HarmonicStructure {
 public:
  HarmonicStructure(FractalSystem system, Matrix A, double rho, int iterations, double residual)
      : system_(std::move(system)), v1_(system_, 1), rho_(rho), iterations_(iterations), residual_(residual) {
    base_.vertices = system_.boundary();
    base_.matrix = std::move(A);
    group_ = permutation_group(system_.num_boundary(), system_.symmetry_generators());
    build_extension();
  }

  const FractalSystem& system() const { return system_; }
  const GraphForm& base_form() const { return base_; }
  const Matrix& conductivity() const { return base_.matrix; }
  double rho() const { return rho_; }
  double walk_dim() const { return std::log(system_.num_maps() * rho_) / std::log(system_.scale_L()); }
  double hausdorff_dim() const { return system_.hausdorff_dim(); }
  int iterations() const { return iterations_; }
  /// ‖T(A) - A / rho‖_∞
  double residual() const { return residual_; }
  const std::vector<Permutation>& symmetry_group() const { return group_; }
  const VertexLattice& v1_lattice() const { return v1_; }
  int num_boundary() const { return system_.num_boundary(); }

  /// E_i: values of h∘phi_i on V^(0) = E_i (values of h on V^(0)).
  const std::vector<Matrix>& extension_matrices() const { return extension_; }
  /// |V^(1)| x r operator taking boundary values to the harmonic extension on V^(1).
  const Matrix& extension_operator() const { return extension_operator_; }

  double boundary_energy(const Vector& f) const { return base_.energy(f); }

  /// max over generators of |P_g A P_g^T - A|
  double symmetry_defect() const {
    double d = 0.0;
    for (const auto& g : system_.symmetry_generators())
      d = std::max(d, (permute(base_.matrix, g) - base_.matrix).cwiseAbs().maxCoeff());
    return d;
  }

 private:
  void build_extension() {
    const int r = system_.num_boundary();
    const Matrix net = assemble(base_.matrix, v1_);
    std::vector<Eigen::Index> B, I;
    std::vector<char> is_b(v1_.size(), 0);
    for (const auto& v : system_.boundary()) {
      const auto idx = *v1_.find(v);
      B.push_back(static_cast<Eigen::Index>(idx));
      is_b[idx] = 1;
    }
    for (std::size_t k = 0; k < v1_.size(); ++k)
      if (!is_b[k]) I.push_back(static_cast<Eigen::Index>(k));

    extension_operator_ = Matrix::Zero(static_cast<Eigen::Index>(v1_.size()), r);
    for (int j = 0; j < r; ++j) extension_operator_(B[static_cast<std::size_t>(j)], j) = 1.0;
    if (!I.empty()) {
      const Matrix mii = net(I, I);
      const Eigen::FullPivLU<Matrix> lu(mii);
      if (!lu.isInvertible()) throw DegenerateNetwork("disconnected or degenerate network: singular interior block");
      const Matrix interior = -lu.solve(Matrix(net(I, B)));
      for (std::size_t k = 0; k < I.size(); ++k) extension_operator_.row(I[k]) = interior.row(static_cast<Eigen::Index>(k));
    }
    extension_.clear();
    for (int i = 0; i < system_.num_maps(); ++i) {
      Matrix E(r, r);
      const auto cell = static_cast<std::size_t>(i);
      for (int v = 0; v < r; ++v) E.row(v) = extension_operator_.row(static_cast<Eigen::Index>(v1_.cell_vertex(cell, v)));
      extension_.push_back(std::move(E));
    }
  }

  FractalSystem system_;
  VertexLattice v1_;
  GraphForm base_;
  double rho_;
  int iterations_;
  double residual_;
  std::vector<Permutation> group_;
  Matrix extension_operator_;
  std::vector<Matrix> extension_;
};

/// T(A) = decimate(reproduce(A)).
inline Matrix renormalize(const Matrix& A, const FractalSystem& s) {
  return decimate(reproduce(GraphForm{s.boundary(), A}, s), s).matrix;
}

/// Normalized power iteration A <- sym(T(A)) / ‖sym(T(A))‖ until successive iterates agree.
inline HarmonicStructure solve_renormalization(const FractalSystem& s, const RenormalizationOptions& opt = {}) {
  const int r = s.num_boundary();
  const auto group = permutation_group(r, s.symmetry_generators());
  Matrix A = opt.init ? *opt.init : complete_graph(r);
  if (A.rows() != r || A.cols() != r) throw InvalidArgument("initial matrix must be r x r");
  A = symmetrize(A, group);
  A /= offdiagonal_norm(A);

  const VertexLattice v1(s, 1);
  std::vector<std::size_t> boundary;
  for (const auto& v : s.boundary()) boundary.push_back(*v1.find(v));
  const auto T = [&](const Matrix& X) { return decimate(GraphForm{v1.points(), assemble(X, v1)}, boundary).matrix; };

  std::vector<double> history;
  int it = 0;
  bool converged = false;
  while (it < opt.max_iter) {
    ++it;
    Matrix next = symmetrize(T(A), group);
    next /= offdiagonal_norm(next);
    const double diff = (next - A).cwiseAbs().maxCoeff();
    history.push_back(diff);
    A = std::move(next);
    if (diff < opt.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw NotConverged("renormalization did not converge in " + std::to_string(opt.max_iter) + " iterations", history);

  const Matrix TA = T(A);
  const double rho = 1.0 / offdiagonal_norm(TA);
  const double residual = (TA - A / rho).cwiseAbs().maxCoeff();
  if (!(rho > 1.0)) throw NotResistanceFractal("not a resistance fractal: rho = " + std::to_string(rho));
  return HarmonicStructure(s, A, rho, it, residual);
}

/// Builds the structure from a known fixed point A, computing rho and the residual.
inline HarmonicStructure harmonic_structure_from(const FractalSystem& s, const Matrix& A) {
  const Matrix TA = renormalize(A, s);
  const double rho = offdiagonal_norm(A) / offdiagonal_norm(TA);
  const double residual = (TA - A / rho).cwiseAbs().maxCoeff();
  if (!(rho > 1.0)) throw NotResistanceFractal("not a resistance fractal: rho = " + std::to_string(rho));
  return HarmonicStructure(s, A, rho, 0, residual);
}

}  // namespace nestfrac
