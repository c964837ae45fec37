#pragma once

// Energy measures, the Kusuoka measure, the normalized matrices Z on cells,
// finite-level gradients, and the energy integral built from them.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "nestfrac/forms.hpp"
#include "nestfrac/geometry.hpp"

namespace nestfrac {

inline constexpr double kZeroTrace = 1e-14;
inline constexpr double kMaxConditionNumber = 1e12;

/// Mass per word of a fixed length, indexed by lexicographic rank.
struct MeasureTable {
  int level = 0;
  int alphabet = 1;
  std::vector<double> masses;

  double mass(const Word& w) const {
    if (static_cast<int>(w.size()) != level) throw InvalidArgument("word length does not match table level");
    return masses[w.index(alphabet)];
  }
  double total() const {
    double t = 0.0;
    for (double m : masses) t += m;
    return t;
  }
  /// Sums children into parents.
  MeasureTable coarsen() const {
    if (level == 0) throw InvalidArgument("cannot coarsen a level-0 table");
    MeasureTable out{level - 1, alphabet, std::vector<double>(masses.size() / static_cast<std::size_t>(alphabet), 0.0)};
    for (std::size_t k = 0; k < masses.size(); ++k) out.masses[k / static_cast<std::size_t>(alphabet)] += masses[k];
    return out;
  }
};

inline MeasureTable hausdorff_measure(const FractalSystem& s, int m) {
  const auto n = ipow(static_cast<std::size_t>(s.num_maps()), static_cast<std::size_t>(m));
  return {m, s.num_maps(), std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

/// nu_f(K_w) = rho^m E(f∘phi_w) for |w| = m, from the extension matrices.
inline MeasureTable energy_measure(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn, int m) {
  if (m < fn.level()) throw InvalidArgument("energy measure needs m >= level of the function");
  const auto ext = extend_to_level(hs, fn, m);
  MeasureTable out{m, hs.system().num_maps(), std::vector<double>(ext.num_cells())};
  const double scale = std::pow(hs.rho(), m);
  for (std::size_t c = 0; c < ext.num_cells(); ++c) out.masses[c] = scale * hs.boundary_energy(ext.cell(c));
  return out;
}

/// nu_f(K_w) = rho^m ‖M_w c‖², from the cell maps acting on basis coordinates.
inline MeasureTable energy_measure_from_coordinates(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn,
                                                    int m) {
  if (m < fn.level()) throw InvalidArgument("energy measure needs m >= level of the function");
  const int M = basis.num_maps();
  const auto k = static_cast<std::size_t>(m - fn.level());
  const std::size_t span = ipow(static_cast<std::size_t>(M), k);
  MeasureTable out{m, M, std::vector<double>(fn.num_cells() * span)};
  const double scale = std::pow(basis.rho(), m);
  for (std::size_t c = 0; c < fn.num_cells(); ++c) {
    const Vector coords = basis.coordinates(fn.cell(c));
    for (std::size_t j = 0; j < span; ++j)
      out.masses[c * span + j] = scale * (basis.word_map(Word::from_index(j, static_cast<int>(k), M)) * coords).squaredNorm();
  }
  return out;
}

/// M_w for every word of length m, in lexicographic order.
inline std::vector<Matrix> cell_map_table(const HarmonicSpaceBasis& basis, int m) {
  std::vector<Matrix> cur{Matrix::Identity(basis.dim(), basis.dim())};
  for (int k = 0; k < m; ++k) {
    std::vector<Matrix> next;
    next.reserve(cur.size() * basis.cell_maps().size());
    for (const auto& W : cur)
      for (const auto& Mi : basis.cell_maps()) next.push_back(Mi * W);
    cur = std::move(next);
  }
  return cur;
}

/// nu(K_w) = rho^m Tr(M_w^T M_w).
inline MeasureTable kusuoka_measure(const HarmonicSpaceBasis& basis, int m) {
  const auto maps = cell_map_table(basis, m);
  MeasureTable out{m, basis.num_maps(), std::vector<double>(maps.size())};
  const double scale = std::pow(basis.rho(), m);
  for (std::size_t k = 0; k < maps.size(); ++k) out.masses[k] = scale * maps[k].squaredNorm();
  return out;
}

/// M^T M / Tr(M^T M), or zero when the trace vanishes.
inline Matrix z_from_cell_map(const Matrix& Mw) {
  const double tr = Mw.squaredNorm();
  if (tr < kZeroTrace) return Matrix::Zero(Mw.cols(), Mw.cols());
  Matrix Z = Mw.transpose() * Mw / tr;
  return 0.5 * (Z + Z.transpose());
}

inline Matrix z_matrix(const HarmonicSpaceBasis& basis, const Word& w) { return z_from_cell_map(basis.word_map(w)); }

inline double condition_number(const Matrix& A) {
  const Eigen::JacobiSVD<Matrix> svd(A);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 1.0;
  const double smin = sv[sv.size() - 1];
  return smin > 0.0 ? sv[0] / smin : std::numeric_limits<double>::infinity();
}

/// grad_m f on K_w = M_w^{-1} (coordinates of f∘phi_w), |w| >= level of f.
inline Vector gradient_m(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn, const Word& w) {
  if (static_cast<int>(w.size()) < fn.level()) throw InvalidArgument("gradient needs a word at least as long as the function level");
  const Matrix Mw = basis.word_map(w);
  const double cond = condition_number(Mw);
  if (!(cond < kMaxConditionNumber))
    throw DegenerateCellMap("degenerate cell map on " + w.to_string(), cond);
  const Vector coords = basis.coordinates(restrict_to_cell(basis.structure(), fn, w).cell(0));
  return Mw.partialPivLu().solve(coords);
}

/// Per-cell contributions <grad, Z grad> nu(K_w) at a fixed level; cells whose
/// map cannot be inverted contribute nu_f(K_w) instead.
struct EnergyIntegrand {
  int level = 0;
  int alphabet = 1;
  std::vector<double> values;
  std::size_t degenerate_cells = 0;

  double total() const {
    double t = 0.0;
    for (double v : values) t += v;
    return t;
  }

  /// Sum over all descendants of the given words (all of one length <= level).
  double over(std::span<const Word> region) const {
    if (region.empty()) return 0.0;
    const auto m = region.front().size();
    for (const auto& w : region)
      if (w.size() != m) throw InvalidArgument("region words must share one length");
    if (m > static_cast<std::size_t>(level)) throw InvalidArgument("region is finer than the integrand");
    const std::size_t span = ipow(static_cast<std::size_t>(alphabet), static_cast<std::size_t>(level) - m);
    double t = 0.0;
    for (const auto& w : region) {
      const std::size_t first = w.index(alphabet) * span;
      for (std::size_t j = 0; j < span; ++j) t += values[first + j];
    }
    return t;
  }
};

inline EnergyIntegrand energy_integrand(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn, int q,
                                        const std::vector<Matrix>* maps = nullptr) {
  if (q < fn.level()) throw InvalidArgument("integration level must be >= level of the function");
  std::vector<Matrix> own;
  if (!maps) {
    own = cell_map_table(basis, q);
    maps = &own;
  }
  const auto ext = extend_to_level(basis.structure(), fn, q);
  const double scale = std::pow(basis.rho(), q);
  EnergyIntegrand out{q, basis.num_maps(), std::vector<double>(ext.num_cells()), 0};
  for (std::size_t c = 0; c < ext.num_cells(); ++c) {
    const Matrix& Mw = (*maps)[c];
    const double tr = Mw.squaredNorm();
    const Vector coords = basis.coordinates(ext.cell(c));
    if (tr < kZeroTrace || !(condition_number(Mw) < kMaxConditionNumber)) {
      out.values[c] = scale * coords.squaredNorm();
      ++out.degenerate_cells;
      continue;
    }
    const Vector grad = Mw.partialPivLu().solve(coords);
    const Matrix Z = z_from_cell_map(Mw);
    out.values[c] = grad.dot(Z * grad) * scale * tr;
  }
  return out;
}

/// ∫ <grad f, Z grad f> dnu evaluated with level-m gradients.
inline double energy_integral(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn, int m) {
  return energy_integrand(basis, fn, m).total();
}

/// The same integral restricted to the union of the cells in `region` (one word length).
inline double localized_energy_integral(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn,
                                        std::span<const Word> region) {
  if (region.empty()) return 0.0;
  const int q = std::max(fn.level(), static_cast<int>(region.front().size()));
  return energy_integrand(basis, fn, q).over(region);
}

/// Σ_{|w|=m+1} nu(K_w) ‖Z(w) - Z(parent w)‖_F for m = 0 .. m_max-1.
inline std::vector<double> z_cauchy_increments(const HarmonicSpaceBasis& basis, int m_max) {
  std::vector<double> out;
  auto parents = cell_map_table(basis, 0);
  for (int m = 0; m < m_max; ++m) {
    std::vector<Matrix> children;
    double inc = 0.0;
    const double scale = std::pow(basis.rho(), m + 1);
    for (const auto& W : parents) {
      const Matrix Zp = z_from_cell_map(W);
      for (const auto& Mi : basis.cell_maps()) {
        Matrix C = Mi * W;
        inc += scale * C.squaredNorm() * (z_from_cell_map(C) - Zp).norm();
        children.push_back(std::move(C));
      }
    }
    out.push_back(inc);
    parents = std::move(children);
  }
  return out;
}

/// max_w nu(K_w) for m = 0 .. m_max.
inline std::vector<double> max_cell_mass_sequence(const HarmonicSpaceBasis& basis, int m_max) {
  std::vector<double> out;
  for (int m = 0; m <= m_max; ++m) {
    const auto t = kusuoka_measure(basis, m);
    out.push_back(*std::max_element(t.masses.begin(), t.masses.end()));
  }
  return out;
}

}  // namespace nestfrac
