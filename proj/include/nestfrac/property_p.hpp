#pragma once

// Property (P): a uniform lower bound alpha / L^n on |x - y| whenever y lies in
// the level-n star of x but outside the level-(n+1) star.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "nestfrac/geometry.hpp"
#include "nestfrac/random.hpp"

namespace nestfrac {

/// Euclidean distance between conv(a) and conv(b), by least squares over all
/// pairs of vertex subsets with a feasibility check on the barycentric weights.
inline double convex_hull_distance(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  const auto na = a.size();
  const auto nb = b.size();
  if (na == 0 || nb == 0 || na > 12 || nb > 12) throw InvalidArgument("hull distance needs 1..12 points per set");
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> ia, ib;
  for (unsigned sa = 1; sa < (1u << na); ++sa) {
    ia.clear();
    for (std::size_t i = 0; i < na; ++i)
      if (sa & (1u << i)) ia.push_back(i);
    for (unsigned sb = 1; sb < (1u << nb); ++sb) {
      ib.clear();
      for (std::size_t j = 0; j < nb; ++j)
        if (sb & (1u << j)) ib.push_back(j);
      const Vector d0 = a[ia[0]] - b[ib[0]];
      const auto k = static_cast<Eigen::Index>(ia.size() + ib.size() - 2);
      if (k == 0) {
        best = std::min(best, d0.norm());
        continue;
      }
      if (k > d0.size()) continue;  // affinely dependent; a smaller subset covers it
      Matrix D(d0.size(), k);
      Eigen::Index c = 0;
      for (std::size_t i = 1; i < ia.size(); ++i) D.col(c++) = a[ia[i]] - a[ia[0]];
      for (std::size_t j = 1; j < ib.size(); ++j) D.col(c++) = -(b[ib[j]] - b[ib[0]]);
      const Vector x = D.colPivHouseholderQr().solve(-d0);
      const auto nsa = static_cast<Eigen::Index>(ia.size() - 1);
      const double sum_a = x.head(nsa).sum();
      const double sum_b = x.tail(k - nsa).sum();
      constexpr double slack = 1e-12;
      if (x.minCoeff() < -slack || sum_a > 1.0 + slack || sum_b > 1.0 + slack) continue;
      best = std::min(best, (d0 + D * x).norm());
    }
  }
  return best;
}

struct PropertyPOptions {
  int n_check = 5;
  int samples_per_level = 10000;
  int samples_per_center = 100;
  std::uint64_t seed = kDefaultSeed;
  bool run_empirical = true;
  std::size_t max_nodes = 200000;
};

struct PropertyPLevel {
  int level = 0;
  int samples = 0;
  int violations = 0;
  double min_scaled_distance = std::numeric_limits<double>::infinity();  // min |x-y| L^n
};

struct PropertyPReport {
  double alpha0 = 0.0;        // certified lower bound on the minimal gap
  double alpha0_upper = 0.0;  // best attained distance found
  double alpha = 0.0;         // L * alpha0
  bool shares_unitary = false;
  bool hull_bounds = false;   // exact hull lower bounds were applicable
  std::vector<std::string> warnings;
  std::vector<PropertyPLevel> levels;
  int total_violations() const {
    int v = 0;
    for (const auto& l : levels) v += l.violations;
    return v;
  }
};

namespace detail {

inline bool attractor_in_hull(const FractalSystem& s) {
  if (s.num_boundary() > 12) return false;
  for (const auto& phi : s.maps())
    for (const auto& v : s.boundary())
      if (convex_hull_distance({phi(v)}, s.boundary()) > 1e-12) return false;
  return true;
}

struct CellPair {
  double lower;
  Word a;
  Word b;
  friend bool operator>(const CellPair& x, const CellPair& y) { return x.lower > y.lower; }
};

inline double min_vertex_distance(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  double d = std::numeric_limits<double>::infinity();
  for (const auto& p : a)
    for (const auto& q : b) d = std::min(d, (p - q).norm());
  return d;
}

/// Lower and upper bounds on dist(K_a, K_b) by branch and bound over sub-cell pairs.
inline std::pair<double, double> cell_distance(const FractalSystem& s, const Word& a, const Word& b, bool hull,
                                               std::size_t max_nodes) {
  const auto lower_bound = [&](const Word& u, const Word& v) {
    const auto pu = s.word_map(u);
    const auto pv = s.word_map(v);
    if (hull) return convex_hull_distance(s.cell_vertices(pu), s.cell_vertices(pv));
    const double centers = (pu(s.center()) - pv(s.center())).norm();
    return std::max(0.0, centers - s.cell_radius(u.size()) - s.cell_radius(v.size()));
  };
  double upper = min_vertex_distance(s.cell_vertices(a), s.cell_vertices(b));
  std::priority_queue<CellPair, std::vector<CellPair>, std::greater<>> heap;
  heap.push({lower_bound(a, b), a, b});
  std::size_t nodes = 0;
  constexpr double tol = 1e-12;
  while (!heap.empty()) {
    CellPair top = heap.top();
    if (top.lower >= upper - tol || ++nodes > max_nodes) return {std::min(top.lower, upper), upper};
    heap.pop();
    for (int i = 0; i < s.num_maps(); ++i)
      for (int j = 0; j < s.num_maps(); ++j) {
        Word u = top.a.child(i);
        Word v = top.b.child(j);
        upper = std::min(upper, min_vertex_distance(s.cell_vertices(u), s.cell_vertices(v)));
        const double lb = lower_bound(u, v);
        if (lb < upper - tol) heap.push({lb, std::move(u), std::move(v)});
      }
  }
  return {upper, upper};
}

}  // namespace detail

/// alpha_0 = min distance between disjoint 2-simplices and alpha = L alpha_0,
/// followed by an empirical check of |x - y| >= alpha / L^n on sampled pairs.
inline PropertyPReport property_p_constant(const FractalSystem& s, const PropertyPOptions& opt = {}) {
  PropertyPReport rep;
  rep.shares_unitary = s.shares_unitary();
  if (!rep.shares_unitary) rep.warnings.push_back("Property (P) not guaranteed: similitudes do not share a unitary part");
  rep.hull_bounds = detail::attractor_in_hull(s);

  const auto M = static_cast<std::size_t>(s.num_maps());
  std::vector<Word> level2;
  for (std::size_t k = 0; k < M * M; ++k) level2.push_back(Word::from_index(k, 2, s.num_maps()));
  rep.alpha0 = std::numeric_limits<double>::infinity();
  rep.alpha0_upper = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < level2.size(); ++i)
    for (std::size_t j = i + 1; j < level2.size(); ++j) {
      if (cells_touch(s, level2[i], level2[j])) continue;
      const auto [lo, hi] = detail::cell_distance(s, level2[i], level2[j], rep.hull_bounds, opt.max_nodes);
      rep.alpha0 = std::min(rep.alpha0, lo);
      rep.alpha0_upper = std::min(rep.alpha0_upper, hi);
    }
  if (!std::isfinite(rep.alpha0) || rep.alpha0 <= 1e-12)
    throw DegenerateSystem("Property (P) fails: two disjoint 2-simplices touch numerically");
  rep.alpha = s.scale_L() * rep.alpha0;

  if (!opt.run_empirical) return rep;
  Rng rng(opt.seed);
  constexpr std::size_t tail_depth = 24;
  for (int n = 1; n <= opt.n_check; ++n) {
    PropertyPLevel lvl;
    lvl.level = n;
    const double bound = rep.alpha * std::pow(s.scale_L(), -n);
    const double scale = std::pow(s.scale_L(), n);
    while (lvl.samples < opt.samples_per_level) {
      const Address x = random_address(rng, s.num_maps(), tail_depth);
      const Vector px = s.point(x);
      const auto outer = star_words(s, x.head(static_cast<std::size_t>(n)));
      const auto inner = star_words(s, x.head(static_cast<std::size_t>(n + 1)));
      for (int k = 0; k < opt.samples_per_center && lvl.samples < opt.samples_per_level;) {
        const Word& cell = outer[std::uniform_int_distribution<std::size_t>(0, outer.size() - 1)(rng)];
        const Address y = random_address(rng, s.num_maps(), tail_depth, cell);
        if (std::binary_search(inner.begin(), inner.end(), y.head(static_cast<std::size_t>(n + 1)))) continue;
        const double d = (s.point(y) - px).norm();
        lvl.min_scaled_distance = std::min(lvl.min_scaled_distance, d * scale);
        if (d < bound - 1e-12) ++lvl.violations;
        ++lvl.samples;
        ++k;
      }
    }
    rep.levels.push_back(lvl);
  }
  return rep;
}

}  // namespace nestfrac
