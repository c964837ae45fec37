#pragma once

// Both sides of the Poincare-type inequalities (adjacent lattice points,
// simplices, pairs of points, balls), with finite-sweep constant estimates.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "nestfrac/forms.hpp"
#include "nestfrac/geometry.hpp"
#include "nestfrac/measures.hpp"

namespace nestfrac {

enum class InequalityKind { local_pair, simplex, pointwise, ball };

inline std::string to_string(InequalityKind k) {
  switch (k) {
    case InequalityKind::local_pair: return "local";
    case InequalityKind::simplex: return "simplex";
    case InequalityKind::pointwise: return "pointwise";
    case InequalityKind::ball: return "ball";
  }
  return "?";
}

/// 0/0 counts as 0.
inline double safe_ratio(double lhs, double rhs) {
  if (lhs == 0.0) return 0.0;
  if (rhs == 0.0) return std::numeric_limits<double>::infinity();
  return lhs / rhs;
}

struct PoincareSample {
  std::string descriptor;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  double quad_error = 0.0;  // Richardson estimate on lhs; NaN when unavailable
};

struct PoincareReport {
  InequalityKind kind = InequalityKind::simplex;
  std::vector<PoincareSample> samples;
  double estimated_C = 0.0;
  double dilation_A = 1.0;
  int quadrature_level = 0;
  double max_quad_error = 0.0;
  bool property_p_verified = true;

  void add(PoincareSample s) {
    estimated_C = std::max(estimated_C, s.ratio);
    if (std::isfinite(s.quad_error)) max_quad_error = std::max(max_quad_error, s.quad_error);
    samples.push_back(std::move(s));
  }
};

struct QuadratureMean {
  double value = 0.0;
  double error_estimate = 0.0;
};

namespace detail {

/// Cell means (average of the r vertex values) of f∘phi_w at relative depth k.
inline Vector subtree_cell_means(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn, const Word& w, int k) {
  const auto local = restrict_to_cell(hs, fn, w);
  const auto ext = extend_to_level(hs, local, std::max(k, local.level()));
  return ext.cell_values().colwise().mean().transpose();
}

inline double mean_abs_deviation(const Vector& means) {
  const double avg = means.mean();
  return (means.array() - avg).abs().mean();
}

inline void check_quad_level(const HarmonicStructure& hs, int n) {
  if (n > hs.system().max_depth())
    throw DepthExceeded("quadrature level " + std::to_string(n) + " exceeds max depth " + std::to_string(hs.system().max_depth()));
}

}  // namespace detail

/// Average of f over K_w by level-n vertex quadrature, with |value_n - value_{n-1}| as error estimate.
inline QuadratureMean mean_over_simplex(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn, const Word& w, int n) {
  detail::check_quad_level(hs, n);
  const int m = static_cast<int>(w.size());
  if (n < fn.level() + 2 || n < m + 1) throw InvalidArgument("quadrature level too small for this function or simplex");
  const double fine = detail::subtree_cell_means(hs, fn, w, n - m).mean();
  const double coarse = detail::subtree_cell_means(hs, fn, w, n - m - 1).mean();
  return {fine, std::abs(fine - coarse)};
}

/// |f(x) - f(y)|² against L^{-m(d_w - d)} ∫_{K_w} <grad f, Z grad f> dnu for two vertices of K_w.
inline PoincareSample local_pair_check(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn, const Word& w,
                                       int vx, int vy) {
  const auto& hs = basis.structure();
  const int m = static_cast<int>(w.size());
  if (m < fn.level()) throw InvalidArgument("local pair check needs |w| >= level of the function");
  if (vx == vy || vx < 0 || vy < 0 || vx >= hs.num_boundary() || vy >= hs.num_boundary())
    throw InvalidArgument("points are not m-neighbors");
  const Vector vals = restrict_to_cell(hs, fn, w).cell(0);
  const double diff = vals[vx] - vals[vy];
  const std::vector<Word> region{w};
  const double energy = localized_energy_integral(basis, fn, region);
  const double scale = std::pow(hs.system().scale_L(), -m * (hs.walk_dim() - hs.hausdorff_dim()));
  PoincareSample s{w.to_string() + ":" + std::to_string(vx + 1) + "-" + std::to_string(vy + 1), diff * diff, scale * energy, 0.0, 0.0};
  s.ratio = safe_ratio(s.lhs, s.rhs);
  return s;
}

/// Same check for two lattice points of V^(m), given by lattice index.
inline PoincareSample local_pair_check(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn,
                                       const VertexLattice& lattice, std::size_t x, std::size_t y) {
  for (const auto& px : lattice.provenance(x))
    for (const auto& py : lattice.provenance(y))
      if (px.cell == py.cell && px.vertex != py.vertex)
        return local_pair_check(basis, fn, Word::from_index(px.cell, lattice.level(), lattice.num_maps()), px.vertex, py.vertex);
  throw InvalidArgument("points are not m-neighbors");
}

/// ⨍_Δ |f - f_Δ| dmu against (diam Δ)^{d_w/2} (mu(Δ*)^{-1} ∫_{Δ*} <grad f, Z grad f> dnu)^{1/2}.
inline PoincareSample simplex_poincare_check(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn,
                                             const Word& w, int n) {
  const auto& hs = basis.structure();
  const int m = static_cast<int>(w.size());
  detail::check_quad_level(hs, n);
  if (n < m + 2 || fn.level() > m) throw InvalidArgument("simplex check needs level(f) <= m and n >= m + 2");
  const double lhs = detail::mean_abs_deviation(detail::subtree_cell_means(hs, fn, w, n - m));
  const double coarse = detail::mean_abs_deviation(detail::subtree_cell_means(hs, fn, w, n - m - 1));
  const auto star = star_words(hs.system(), w);
  const double mu_star = static_cast<double>(star.size()) * hausdorff_mass(hs.system(), w);
  const double energy = localized_energy_integral(basis, fn, star);
  const double rhs = std::pow(hs.system().scale_L(), -m * hs.walk_dim() / 2.0) * std::sqrt(energy / mu_star);
  return {w.to_string(), lhs, rhs, safe_ratio(lhs, rhs), std::abs(lhs - coarse)};
}

/// |f(x) - f(y)|² against |x - y|^{d_w} mu(S)^{-1} ∫_S <grad f, Z grad f> dnu with S = S(x, y).
inline PoincareSample pointwise_poincare_check(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn,
                                               const Address& x, const Address& y) {
  const auto& hs = basis.structure();
  const auto& s = hs.system();
  const auto sep = separation_index(s, x, y);
  if (fn.level() > sep.index - 1) throw InvalidArgument("function level exceeds ind(x,y) - 1");
  const double diff = evaluate(hs, fn, x) - evaluate(hs, fn, y);
  std::vector<Word> region;
  for (const auto& simplex : sep.region) region.push_back(simplex.word);
  const double mu_s = static_cast<double>(region.size()) * hausdorff_mass(s, region.front());
  const double energy = localized_energy_integral(basis, fn, region);
  const double dist = (s.point(x) - s.point(y)).norm();
  PoincareSample out{x.to_string() + "|" + y.to_string(), diff * diff, std::pow(dist, hs.walk_dim()) * energy / mu_s, 0.0, 0.0};
  out.ratio = safe_ratio(out.lhs, out.rhs);
  return out;
}

/// Level-n cells whose center lies within `radius` of x, by lexicographic index.
inline std::vector<std::size_t> cells_in_ball(const FractalSystem& s, const Vector& x, double radius, int n) {
  std::vector<std::size_t> out;
  for (const auto& [w, phi] : cells_near(s, x, static_cast<std::size_t>(n), radius))
    if ((phi(s.center()) - x).norm() <= radius) out.push_back(w.index(s.num_maps()));
  std::sort(out.begin(), out.end());
  return out;
}

/// Precomputed cell sets for one ball at one quadrature level.
struct BallCells {
  double radius = 0.0;
  std::vector<std::size_t> inner;    // level-n cells approximating B(x0, r)
  std::vector<std::size_t> coarse;   // level-(n-1) cells approximating B(x0, r)
  std::vector<std::size_t> dilated;  // level-n cells approximating B(x0, A r)
};

inline BallCells ball_cells(const FractalSystem& s, const Vector& x0, double r, double A, int n) {
  BallCells b{r, cells_in_ball(s, x0, r, n), cells_in_ball(s, x0, r, n - 1), cells_in_ball(s, x0, A * r, n)};
  if (b.inner.empty()) throw InvalidArgument("ball captures no level-" + std::to_string(n) + " cell; increase the quadrature level");
  return b;
}

namespace detail {

inline double ball_deviation(const Vector& means, std::span<const std::size_t> cells) {
  double avg = 0.0;
  for (auto c : cells) avg += means[static_cast<Eigen::Index>(c)];
  avg /= static_cast<double>(cells.size());
  double dev = 0.0;
  for (auto c : cells) dev += std::abs(means[static_cast<Eigen::Index>(c)] - avg);
  return dev / static_cast<double>(cells.size());
}

inline PoincareSample ball_sample(const HarmonicStructure& hs, const BallCells& ball, const Vector& fine_means,
                                  const Vector& coarse_means, const EnergyIntegrand& integrand, const std::string& label) {
  const double lhs = ball_deviation(fine_means, ball.inner);
  const double err = ball.coarse.empty() ? std::numeric_limits<double>::quiet_NaN()
                                         : std::abs(lhs - ball_deviation(coarse_means, ball.coarse));
  double energy = 0.0;
  for (auto c : ball.dilated) energy += integrand.values[c];
  const double r = ball.radius;
  const double rhs = std::pow(r, hs.walk_dim() / 2.0) * std::sqrt(energy / std::pow(r, hs.hausdorff_dim()));
  return {label, lhs, rhs, safe_ratio(lhs, rhs), err};
}

}  // namespace detail

/// ⨍_B |f - f_B| dmu against r^{d_w/2} (r^{-d} ∫_{B(x0, A r)} <grad f, Z grad f> dnu)^{1/2} with A = 2L/alpha.
inline PoincareSample ball_poincare_check(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn,
                                          const Address& x0, double r, int n, double alpha) {
  const auto& hs = basis.structure();
  detail::check_quad_level(hs, n);
  if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("ball radius must lie in (0, 1)");
  if (!(alpha > 0.0)) throw InvalidArgument("Property (P) constant must be positive");
  if (n < fn.level() + 1) throw InvalidArgument("quadrature level must exceed the function level");
  const auto& s = hs.system();
  const double A = 2.0 * s.scale_L() / alpha;
  const auto ball = ball_cells(s, s.point(x0), r, A, n);
  const auto fine = extend_to_level(hs, fn, n).cell_values().colwise().mean().transpose();
  const auto coarse = extend_to_level(hs, fn, n - 1).cell_values().colwise().mean().transpose();
  const auto integrand = energy_integrand(basis, fn, n);
  return detail::ball_sample(hs, ball, fine, coarse, integrand, x0.to_string() + "@" + std::to_string(r));
}

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

/// Adjacent vertex pairs of every cell at levels level(f)..m_max.
inline PoincareReport local_pair_sweep(const HarmonicSpaceBasis& basis, std::span<const PiecewiseHarmonicFunction> fns, int m_max) {
  PoincareReport rep;
  rep.kind = InequalityKind::local_pair;
  const int M = basis.num_maps();
  const int r = basis.structure().num_boundary();
  for (std::size_t f = 0; f < fns.size(); ++f)
    for (int m = fns[f].level(); m <= m_max; ++m) {
      const auto integrand = energy_integrand(basis, fns[f], m);
      const auto ext = extend_to_level(basis.structure(), fns[f], m);
      const double scale = std::pow(basis.structure().system().scale_L(), -m * (basis.structure().walk_dim() - basis.structure().hausdorff_dim()));
      for (std::size_t c = 0; c < ext.num_cells(); ++c)
        for (int a = 0; a < r; ++a)
          for (int b = a + 1; b < r; ++b) {
            const double d = ext.cell_values()(a, static_cast<Eigen::Index>(c)) - ext.cell_values()(b, static_cast<Eigen::Index>(c));
            PoincareSample s{"f" + std::to_string(f) + ":" + Word::from_index(c, m, M).to_string() + ":" + std::to_string(a + 1) + "-" +
                                 std::to_string(b + 1),
                             d * d, scale * integrand.values[c], 0.0, 0.0};
            s.ratio = safe_ratio(s.lhs, s.rhs);
            rep.add(std::move(s));
          }
    }
  return rep;
}

/// Every simplex of levels level(f)..m_max for every function, at one quadrature level.
inline PoincareReport simplex_sweep(const HarmonicSpaceBasis& basis, std::span<const PiecewiseHarmonicFunction> fns, int m_max,
                                    int quad_level) {
  const auto& hs = basis.structure();
  const auto& s = hs.system();
  detail::check_quad_level(hs, quad_level);
  if (quad_level < m_max + 2) throw InvalidArgument("quadrature level must be at least m_max + 2");
  PoincareReport rep;
  rep.kind = InequalityKind::simplex;
  rep.quadrature_level = quad_level;
  const int M = s.num_maps();

  struct SimplexData {
    Word word;
    std::vector<Word> star;
    double mu_star;
  };
  std::vector<SimplexData> simplices;
  for (int m = 0; m <= m_max; ++m)
    for (std::size_t k = 0; k < ipow(static_cast<std::size_t>(M), static_cast<std::size_t>(m)); ++k) {
      Word w = Word::from_index(k, m, M);
      auto st = star_words(s, w);
      const double mu = static_cast<double>(st.size()) * hausdorff_mass(s, w);
      simplices.push_back({std::move(w), std::move(st), mu});
    }

  const auto maps = cell_map_table(basis, m_max);
  for (std::size_t f = 0; f < fns.size(); ++f) {
    if (fns[f].level() > m_max) throw InvalidArgument("function level exceeds the sweep depth");
    const auto integrand = energy_integrand(basis, fns[f], m_max, &maps);
    const Vector fine = extend_to_level(hs, fns[f], quad_level).cell_values().colwise().mean().transpose();
    const Vector coarse = extend_to_level(hs, fns[f], quad_level - 1).cell_values().colwise().mean().transpose();
    for (const auto& sd : simplices) {
      const int m = static_cast<int>(sd.word.size());
      if (m < fns[f].level()) continue;
      const auto span_f = ipow(static_cast<std::size_t>(M), static_cast<std::size_t>(quad_level - m));
      const auto span_c = span_f / static_cast<std::size_t>(M);
      const auto idx = sd.word.index(M);
      const double lhs = detail::mean_abs_deviation(fine.segment(static_cast<Eigen::Index>(idx * span_f), static_cast<Eigen::Index>(span_f)));
      const double lhs_c = detail::mean_abs_deviation(coarse.segment(static_cast<Eigen::Index>(idx * span_c), static_cast<Eigen::Index>(span_c)));
      const double energy = integrand.over(sd.star);
      const double rhs = std::pow(s.scale_L(), -m * hs.walk_dim() / 2.0) * std::sqrt(energy / sd.mu_star);
      rep.add({"f" + std::to_string(f) + ":" + sd.word.to_string(), lhs, rhs, safe_ratio(lhs, rhs), std::abs(lhs - lhs_c)});
    }
  }
  return rep;
}

inline PoincareReport pointwise_sweep(const HarmonicSpaceBasis& basis, std::span<const PiecewiseHarmonicFunction> fns,
                                      std::span<const std::pair<Address, Address>> pairs) {
  PoincareReport rep;
  rep.kind = InequalityKind::pointwise;
  for (std::size_t f = 0; f < fns.size(); ++f)
    for (const auto& [x, y] : pairs) {
      auto s = pointwise_poincare_check(basis, fns[f], x, y);
      s.descriptor = "f" + std::to_string(f) + ":" + s.descriptor;
      rep.add(std::move(s));
    }
  return rep;
}

inline PoincareReport ball_sweep(const HarmonicSpaceBasis& basis, std::span<const PiecewiseHarmonicFunction> fns,
                                 const Address& x0, std::span<const double> radii, int quad_level, double alpha) {
  const auto& hs = basis.structure();
  const auto& s = hs.system();
  detail::check_quad_level(hs, quad_level);
  if (!(alpha > 0.0)) throw InvalidArgument("Property (P) constant must be positive");
  PoincareReport rep;
  rep.kind = InequalityKind::ball;
  rep.quadrature_level = quad_level;
  rep.dilation_A = 2.0 * s.scale_L() / alpha;
  const Vector center = s.point(x0);
  std::vector<BallCells> balls;
  for (double r : radii) {
    if (!(r > 0.0 && r < 1.0)) throw InvalidArgument("ball radius must lie in (0, 1)");
    balls.push_back(ball_cells(s, center, r, rep.dilation_A, quad_level));
  }
  const auto maps = cell_map_table(basis, quad_level);
  for (std::size_t f = 0; f < fns.size(); ++f) {
    if (fns[f].level() >= quad_level) throw InvalidArgument("quadrature level must exceed the function level");
    const auto integrand = energy_integrand(basis, fns[f], quad_level, &maps);
    const Vector fine = extend_to_level(hs, fns[f], quad_level).cell_values().colwise().mean().transpose();
    const Vector coarse = extend_to_level(hs, fns[f], quad_level - 1).cell_values().colwise().mean().transpose();
    for (const auto& b : balls)
      rep.add(detail::ball_sample(hs, b, fine, coarse, integrand, "f" + std::to_string(f) + ":r=" + std::to_string(b.radius)));
  }
  return rep;
}

}  // namespace nestfrac
