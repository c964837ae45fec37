#pragma once

// Besov-Lipschitz seminorms, fractal Riesz potentials, the star maximal
// function, and the Hajlasz pair diagnostic.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "nestfrac/forms.hpp"
#include "nestfrac/geometry.hpp"
#include "nestfrac/measures.hpp"
#include "nestfrac/random.hpp"

namespace nestfrac {

struct SeminormProfile {
  double p = 2.0;
  double sigma = 1.0;
  double c0 = 1.0;
  std::vector<std::pair<int, double>> values;  // (m, a_m)
  double sup_value = 0.0;

  /// Tail supremum over the upper half of the computed levels, the finite stand-in for the limsup.
  double tail_sup() const {
    double t = 0.0;
    for (std::size_t k = values.size() / 2; k < values.size(); ++k) t = std::max(t, values[k].second);
    return t;
  }
};

namespace detail {

struct GridHash {
  std::size_t operator()(const std::vector<std::int64_t>& k) const {
    std::uint64_t h = 1469598103934665603ull;
    for (auto v : k) h = (h ^ static_cast<std::uint64_t>(v)) * 1099511628211ull;
    return static_cast<std::size_t>(h);
  }
};

/// For every cell in `centers` (one column per cell), the cells whose centers lie within `radius`.
template <class F>
void for_each_close_pair(const Matrix& centers, double radius, F&& f) {
  const auto dim = centers.rows();
  const auto n = centers.cols();
  std::unordered_map<std::vector<std::int64_t>, std::vector<Eigen::Index>, GridHash> grid;
  std::vector<std::int64_t> key(static_cast<std::size_t>(dim));
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index d = 0; d < dim; ++d) key[static_cast<std::size_t>(d)] = static_cast<std::int64_t>(std::floor(centers(d, c) / radius));
    grid[key].push_back(c);
  }
  const double r2 = radius * radius;
  std::vector<int> offset(static_cast<std::size_t>(dim));
  for (Eigen::Index c = 0; c < n; ++c) {
    std::vector<std::int64_t> base(static_cast<std::size_t>(dim));
    for (Eigen::Index d = 0; d < dim; ++d) base[static_cast<std::size_t>(d)] = static_cast<std::int64_t>(std::floor(centers(d, c) / radius));
    std::fill(offset.begin(), offset.end(), -1);
    while (true) {
      for (std::size_t d = 0; d < key.size(); ++d) key[d] = base[d] + offset[d];
      if (auto it = grid.find(key); it != grid.end())
        for (auto o : it->second)
          if ((centers.col(c) - centers.col(o)).squaredNorm() <= r2) f(c, o);
      std::size_t d = 0;
      while (d < offset.size() && ++offset[d] == 2) offset[d++] = -1;
      if (d == offset.size()) break;
    }
  }
}

inline Matrix cell_centers(const FractalSystem& s, int n) {
  const auto count = ipow(static_cast<std::size_t>(s.num_maps()), static_cast<std::size_t>(n));
  Matrix out(s.ambient_dim(), static_cast<Eigen::Index>(count));
  std::vector<AffineMap> cur{AffineMap::identity(s.ambient_dim())};
  for (int k = 0; k < n; ++k) {
    std::vector<AffineMap> next;
    next.reserve(cur.size() * static_cast<std::size_t>(s.num_maps()));
    for (const auto& phi : cur)
      for (int i = 0; i < s.num_maps(); ++i) next.push_back(phi.compose(s.map(i)));
    cur = std::move(next);
  }
  for (std::size_t c = 0; c < cur.size(); ++c) out.col(static_cast<Eigen::Index>(c)) = cur[c](s.center());
  return out;
}

}  // namespace detail

/// a_m^(p) for several functions at once: L^{m sigma} (L^{m d} ∬_{|x-y| <= c0 / L^m} |f(x) - f(y)|^p)^{1/p},
/// by level-n double cell quadrature on cell means with cell-center proximity.
inline std::vector<double> besov_seminorms(const HarmonicStructure& hs, std::span<const PiecewiseHarmonicFunction> fns,
                                           double p, double sigma, int m, int n, double c0) {
  const auto& s = hs.system();
  if (p < 1.0) throw InvalidArgument("p must be at least 1");
  if (n < m + 2) throw InvalidArgument("quadrature level must be at least m + 2");
  if (n > s.max_depth()) throw DepthExceeded("quadrature level " + std::to_string(n) + " exceeds max depth");
  if (!(c0 > 0.0)) throw InvalidArgument("proximity constant must be positive");
  const Matrix centers = detail::cell_centers(s, n);
  Matrix means(centers.cols(), static_cast<Eigen::Index>(fns.size()));
  for (std::size_t f = 0; f < fns.size(); ++f)
    means.col(static_cast<Eigen::Index>(f)) = extend_to_level(hs, fns[f], n).cell_values().colwise().mean().transpose();
  Vector acc = Vector::Zero(static_cast<Eigen::Index>(fns.size()));
  const double L = s.scale_L();
  detail::for_each_close_pair(centers, c0 * std::pow(L, -m), [&](Eigen::Index a, Eigen::Index b) {
    if (a == b) return;
    acc += (means.row(a) - means.row(b)).transpose().cwiseAbs().array().pow(p).matrix();
  });
  const double cell = std::pow(static_cast<double>(s.num_maps()), -n);
  std::vector<double> out(fns.size());
  for (std::size_t f = 0; f < fns.size(); ++f)
    out[f] = std::pow(L, m * sigma) * std::pow(std::pow(L, m * s.hausdorff_dim()) * acc[static_cast<Eigen::Index>(f)] * cell * cell, 1.0 / p);
  return out;
}

inline double besov_seminorm(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn, double p, double sigma, int m,
                             int n, double c0) {
  return besov_seminorms(hs, std::span<const PiecewiseHarmonicFunction>(&fn, 1), p, sigma, m, n, c0).front();
}

/// a_m^(p) for m = 0..m_max with quadrature level m + quad_offset.
inline std::vector<SeminormProfile> besov_profiles(const HarmonicStructure& hs, std::span<const PiecewiseHarmonicFunction> fns,
                                                   double p, double sigma, int m_max, double c0, int quad_offset = 4) {
  std::vector<SeminormProfile> out(fns.size(), SeminormProfile{p, sigma, c0, {}, 0.0});
  for (int m = 0; m <= m_max; ++m) {
    const auto vals = besov_seminorms(hs, fns, p, sigma, m, m + quad_offset, c0);
    for (std::size_t f = 0; f < fns.size(); ++f) {
      out[f].values.emplace_back(m, vals[f]);
      out[f].sup_value = std::max(out[f].sup_value, vals[f]);
    }
  }
  return out;
}

inline SeminormProfile besov_profile(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn, double p, double sigma,
                                     int m_max, double c0, int quad_offset = 4) {
  return besov_profiles(hs, std::span<const PiecewiseHarmonicFunction>(&fn, 1), p, sigma, m_max, c0, quad_offset).front();
}

/// A nu-density, constant on the cells of one level.
struct DensityOnCells {
  int level = 0;
  std::vector<double> values;

  static DensityOnCells constant(const FractalSystem& s, int level, double c) {
    return {level, std::vector<double>(ipow(static_cast<std::size_t>(s.num_maps()), static_cast<std::size_t>(level)), c)};
  }
  double sup() const { return values.empty() ? 0.0 : *std::max_element(values.begin(), values.end()); }
};

/// ∫ g^p dnu over star regions, with the Kusuoka masses of the density level cached.
class DensityIntegrator {
 public:
  DensityIntegrator(const HarmonicSpaceBasis& basis, DensityOnCells g, double p)
      : basis_(&basis), g_(std::move(g)), p_(p), nu_(kusuoka_measure(basis, g_.level)) {
    if (p < 1.0) throw InvalidArgument("p must be at least 1");
    for (double v : g_.values)
      if (v < 0.0) throw InvalidArgument("density values must be nonnegative");
    if (g_.values.size() != nu_.masses.size()) throw InvalidArgument("density has wrong number of cells");
  }

  double p() const { return p_; }
  const DensityOnCells& density() const { return g_; }
  const HarmonicSpaceBasis& basis() const { return *basis_; }

  /// ∫_{K_w} g^p dnu
  double over_cell(const Word& w) const {
    const int M = basis_->num_maps();
    const auto k = static_cast<std::size_t>(g_.level);
    if (w.size() >= k) {
      const double gv = g_.values[w.head(k).index(M)];
      if (gv == 0.0) return 0.0;
      return std::pow(gv, p_) * std::pow(basis_->rho(), static_cast<double>(w.size())) * basis_->word_map(w).squaredNorm();
    }
    const auto span = ipow(static_cast<std::size_t>(M), k - w.size());
    double t = 0.0;
    for (std::size_t j = 0; j < span; ++j) {
      const auto c = w.index(M) * span + j;
      t += std::pow(g_.values[c], p_) * nu_.masses[c];
    }
    return t;
  }

  double over(std::span<const Word> cells) const {
    double t = 0.0;
    for (const auto& w : cells) t += over_cell(w);
    return t;
  }

  double total() const { return over_cell(Word()); }

  /// (mu(Δ*_j(x))^{-1} ∫_{Δ*_j(x)} g^p dnu)^{1/p}
  double star_average(const Address& x, int j) const {
    const auto& s = basis_->structure().system();
    const auto star = star_words(s, x.head(static_cast<std::size_t>(j)));
    const double mu = static_cast<double>(star.size()) * std::pow(static_cast<double>(s.num_maps()), -j);
    return std::pow(over(star) / mu, 1.0 / p_);
  }

 private:
  const HarmonicSpaceBasis* basis_;
  DensityOnCells g_;
  double p_;
  MeasureTable nu_;
};

struct RieszResult {
  double value = 0.0;
  double tail_bound = 0.0;  // bound on the omitted terms m > m_max
  std::vector<double> terms;
};

/// Growth factor theta with term_j <= sup g (r-1)^{1/p} theta^j; the tail is geometric when theta < 1.
inline double riesz_decay_factor(const HarmonicSpaceBasis& basis, double p, double sigma) {
  double s2 = 0.0;
  for (const auto& Mi : basis.cell_maps()) {
    const Eigen::JacobiSVD<Matrix> svd(Mi);
    s2 = std::max(s2, svd.singularValues()[0] * svd.singularValues()[0]);
  }
  const double q = basis.num_maps() * basis.rho() * s2;
  return std::pow(basis.structure().system().scale_L(), -sigma) * std::pow(q, 1.0 / p);
}

/// J_p(g, n, x) = Σ_{m=0}^{m_max} L^{-(m+n) sigma} (star average of g^p at level n + m)^{1/p}.
inline RieszResult riesz_potential(const DensityIntegrator& g, double sigma, int n, const Address& x, int m_max) {
  if (x.eventually_constant()) throw AmbiguousAddress("Riesz potential needs a nonlattice point");
  if (n < 0 || m_max < 0) throw InvalidArgument("levels must be nonnegative");
  const auto& basis = g.basis();
  const double L = basis.structure().system().scale_L();
  RieszResult out;
  for (int m = 0; m <= m_max; ++m) {
    const double term = std::pow(L, -(m + n) * sigma) * g.star_average(x, n + m);
    out.terms.push_back(term);
    out.value += term;
  }
  const double theta = riesz_decay_factor(basis, g.p(), sigma);
  const double lead = g.density().sup() * std::pow(basis.dim(), 1.0 / g.p());
  out.tail_bound = theta < 1.0 ? lead * std::pow(theta, n + m_max + 1) / (1.0 - theta) : std::numeric_limits<double>::infinity();
  if (lead == 0.0) out.tail_bound = 0.0;
  return out;
}

/// max_{m=1..depth} of the star averages of g^p at x.
inline double maximal_function(const DensityIntegrator& g, const Address& x, int depth) {
  if (x.eventually_constant()) throw AmbiguousAddress("maximal function needs a nonlattice point");
  double best = 0.0;
  for (int m = 1; m <= depth; ++m) best = std::max(best, g.star_average(x, m));
  return best;
}

/// Σ_{m>=0} L^{-m sigma}: the constant with J_p(g, n, x) <= C L^{-n sigma} Mg(x).
inline double maximal_bound_constant(double L, double sigma) { return 1.0 / (1.0 - std::pow(L, -sigma)); }

struct WeakTypeDiagnostic {
  std::vector<double> thresholds;
  std::vector<double> tails;  // t^p mu{Mg > t}
  double integral = 0.0;      // ∫ g^p dnu
  double max_ratio = 0.0;     // max tail / integral
};

/// Empirical weak-type bound of the maximal function from uniformly sampled addresses.
inline WeakTypeDiagnostic weak_type_diagnostic(const DensityIntegrator& g, int depth, int samples, int grid_size, Rng& rng) {
  const auto& s = g.basis().structure().system();
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(samples));
  for (int k = 0; k < samples; ++k)
    values.push_back(maximal_function(g, random_address(rng, s.num_maps(), static_cast<std::size_t>(depth + 4)), depth));
  WeakTypeDiagnostic out;
  out.integral = g.total();
  const double vmax = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
  for (int k = 1; k <= grid_size; ++k) {
    const double t = vmax * k / (grid_size + 1.0);
    const auto above = std::count_if(values.begin(), values.end(), [&](double v) { return v > t; });
    const double tail = std::pow(t, g.p()) * static_cast<double>(above) / static_cast<double>(std::max(samples, 1));
    out.thresholds.push_back(t);
    out.tails.push_back(tail);
    if (out.integral > 0.0) out.max_ratio = std::max(out.max_ratio, tail / out.integral);
  }
  return out;
}

struct RieszStarBound {
  double lhs_local = 0.0, rhs_local = 0.0;
  double lhs_global = 0.0, rhs_global = 0.0;
  double ratio_local = 0.0, ratio_global = 0.0;
  bool within_hypothesis = true;  // sigma > d / p
};

/// ∫_{Δ*_N(x)} J_p^p dmu vs L^{-N sigma p} ∫_{Δ**_N(x)} g^p dnu, and the same over K.
/// J_p is sampled at one nonlattice point per cell of level N + quad_offset.
inline RieszStarBound riesz_star_bound(const DensityIntegrator& g, double sigma, int N, const Address& x, int m_max,
                                   int quad_offset = 2) {
  const auto& s = g.basis().structure().system();
  const int M = s.num_maps();
  const double p = g.p();
  RieszStarBound out;
  out.within_hypothesis = sigma > s.hausdorff_dim() / p;
  const int q = N + quad_offset;
  const auto cells = ipow(static_cast<std::size_t>(M), static_cast<std::size_t>(q));
  const double weight = std::pow(static_cast<double>(M), -q);
  const auto star = star_words(s, x.head(static_cast<std::size_t>(N)));
  const Word tail{0, 1};
  for (std::size_t c = 0; c < cells; ++c) {
    const Word w = Word::from_index(c, q, M);
    const double J = riesz_potential(g, sigma, N, Address(w, tail), m_max).value;
    const double contrib = std::pow(J, p) * weight;
    out.lhs_global += contrib;
    if (std::binary_search(star.begin(), star.end(), w.head(static_cast<std::size_t>(N)))) out.lhs_local += contrib;
  }
  const double scale = std::pow(s.scale_L(), -N * sigma * p);
  const auto star2 = star_words(s, x.head(static_cast<std::size_t>(N)), 2);
  out.rhs_local = scale * g.over(star2);
  out.rhs_global = scale * g.total();
  const auto ratio = [](double a, double b) { return a == 0.0 ? 0.0 : (b == 0.0 ? std::numeric_limits<double>::infinity() : a / b); };
  out.ratio_local = ratio(out.lhs_local, out.rhs_local);
  out.ratio_global = ratio(out.lhs_global, out.rhs_global);
  return out;
}

struct HajlaszReport {
  std::size_t pairs = 0;
  std::size_t violations = 0;
  double violation_fraction = 0.0;
  double max_ratio = 0.0;  // max |f(x)-f(y)| / (|x-y|^sigma (g(x)+g(y))): the minimal empirical constant
};

/// Tests |f(x) - f(y)| <= |x - y|^sigma (g(x) + g(y)) on the given pairs.
inline HajlaszReport hajlasz_pair_check(const HarmonicStructure& hs, const PiecewiseHarmonicFunction& fn,
                                        const std::function<double(const Address&)>& g, double sigma,
                                        std::span<const std::pair<Address, Address>> pairs) {
  HajlaszReport rep;
  const auto& s = hs.system();
  for (const auto& [x, y] : pairs) {
    const double lhs = std::abs(evaluate(hs, fn, x) - evaluate(hs, fn, y));
    const double rhs = std::pow((s.point(x) - s.point(y)).norm(), sigma) * (g(x) + g(y));
    const double ratio = lhs == 0.0 ? 0.0 : (rhs == 0.0 ? std::numeric_limits<double>::infinity() : lhs / rhs);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
    if (ratio > 1.0) ++rep.violations;
    ++rep.pairs;
  }
  rep.violation_fraction = rep.pairs ? static_cast<double>(rep.violations) / static_cast<double>(rep.pairs) : 0.0;
  return rep;
}

/// Energy density of f with respect to nu at level k: nu_f(K_w) / nu(K_w), square-rooted so that g^2 dnu = dnu_f.
inline DensityOnCells energy_density(const HarmonicSpaceBasis& basis, const PiecewiseHarmonicFunction& fn, int k) {
  const auto nu_f = energy_measure(basis.structure(), fn, k);
  const auto nu = kusuoka_measure(basis, k);
  DensityOnCells g{k, std::vector<double>(nu.masses.size(), 0.0)};
  for (std::size_t c = 0; c < g.values.size(); ++c)
    if (nu.masses[c] > kZeroTrace) g.values[c] = std::sqrt(nu_f.masses[c] / nu.masses[c]);
  return g;
}

/// Smallest k >= 0 with alpha L^k >= A: balls of radius A R sit in stars k levels coarser.
inline int star_enlargement_index(double alpha, double A, double L) {
  int k = 0;
  while (alpha * std::pow(L, k) < A) ++k;
  return k;
}

}  // namespace nestfrac
