#pragma once

// Invariant suite over one fractal at desk scale, with a machine-readable report.

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "nestfrac/catalog.hpp"
#include "nestfrac/forms.hpp"
#include "nestfrac/geometry.hpp"
#include "nestfrac/harmonic_structure.hpp"
#include "nestfrac/measures.hpp"
#include "nestfrac/poincare.hpp"
#include "nestfrac/property_p.hpp"
#include "nestfrac/random.hpp"
#include "nestfrac/sobolev.hpp"

namespace nestfrac {

struct SelftestEntry {
  std::string module;
  std::string name;
  bool passed = false;
  double value = 0.0;  // observed deviation or statistic
  double tolerance = 0.0;
  std::string detail;
};

struct SelftestOptions {
  std::uint64_t seed = kDefaultSeed;
  int functions = 10;
  int samples = 200;
};

class SelftestReport {
 public:
  void add(SelftestEntry e) { entries_.push_back(std::move(e)); }
  const std::vector<SelftestEntry>& entries() const { return entries_; }
  bool all_passed() const {
    return std::all_of(entries_.begin(), entries_.end(), [](const SelftestEntry& e) { return e.passed; });
  }
  std::size_t failures() const {
    return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [](const SelftestEntry& e) { return !e.passed; }));
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& e : entries_) {
      nlohmann::ordered_json j;
      j["module"] = e.module;
      j["name"] = e.name;
      j["passed"] = e.passed;
      j["value"] = std::isfinite(e.value) ? nlohmann::ordered_json(e.value) : nlohmann::ordered_json(std::to_string(e.value));
      j["tolerance"] = e.tolerance;
      if (!e.detail.empty()) j["detail"] = e.detail;
      out.push_back(std::move(j));
    }
    return out;
  }

 private:
  std::vector<SelftestEntry> entries_;
};

namespace detail {

/// Runs `body`, which returns the observed deviation, and records deviation <= tol.
inline void check(SelftestReport& rep, const std::string& module, const std::string& name, double tol,
                  const std::function<double()>& body) {
  SelftestEntry e{module, name, false, 0.0, tol, {}};
  try {
    e.value = body();
    e.passed = std::isfinite(e.value) && e.value <= tol;
  } catch (const std::exception& ex) {
    e.detail = ex.what();
    e.value = std::numeric_limits<double>::infinity();
  }
  rep.add(std::move(e));
}

inline double rel(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace detail

namespace detail {

/// Structure, forms, measures, Poincare and Sobolev checks on a solved structure.
inline void run_analysis_checks(SelftestReport& rep, const HarmonicStructure& hs, Rng& rng, const SelftestOptions& opt) {
  const auto& s = hs.system();
  const int M = s.num_maps();
  const int r = s.num_boundary();
  const double L = s.scale_L();
  const int depth = std::min(3, s.max_depth());
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  PropertyPOptions popt;
  popt.run_empirical = false;
  const double alpha = property_p_constant(s, popt).alpha;
  const double dw = hs.walk_dim();
  const double d = hs.hausdorff_dim();
  check(rep, "harmonic_structure", "fixed-point residual", 1e-10, [&] { return hs.residual(); });
  check(rep, "harmonic_structure", "rho = L^(d_w - d)", 1e-12, [&] { return std::abs(hs.rho() - std::pow(L, dw - d)); });
  check(rep, "harmonic_structure", "rho M = L^d_w", 1e-12, [&] { return detail::rel(hs.rho() * M, std::pow(L, dw)); });
  check(rep, "harmonic_structure", "rho > 1", 0.0, [&] { return hs.rho() > 1.0 ? 0.0 : 1.0; });
  check(rep, "harmonic_structure", "conductivity matrix", 0.0, [&] { return hs.base_form().is_conductivity() ? 0.0 : 1.0; });
  check(rep, "harmonic_structure", "symmetry invariance", 1e-10, [&] { return hs.symmetry_defect(); });
  check(rep, "harmonic_structure", "energy symmetry invariance", 1e-10, [&] {
    double dd = 0.0;
    for (int k = 0; k < opt.samples; ++k) {
      const Vector f = random_boundary_values(rng, r);
      for (const auto& g : s.symmetry_generators()) {
        Vector fg(r);
        for (int i = 0; i < r; ++i) fg[i] = f[g[static_cast<std::size_t>(i)]];
        dd = std::max(dd, std::abs(hs.boundary_energy(fg) - hs.boundary_energy(f)));
      }
    }
    return dd;
  });
  check(rep, "harmonic_structure", "idempotent from fixed point", 1e-12, [&] {
    RenormalizationOptions ro;
    ro.init = hs.conductivity();
    return (solve_renormalization(s, ro).conductivity() - hs.conductivity()).cwiseAbs().maxCoeff();
  });
  check(rep, "harmonic_structure", "decimation minimizes over extensions", 1e-12, [&] {
    const auto v1 = hs.v1_lattice();
    const GraphForm net{v1.points(), assemble(hs.conductivity(), v1)};
    const double rho = hs.rho();
    std::vector<char> interior(v1.size(), 1);
    for (const auto& v : s.boundary()) interior[*v1.find(v)] = 0;
    double worst = 0.0;
    for (int k = 0; k < opt.samples; ++k) {
      const Vector f = random_boundary_values(rng, r);
      const Vector h = harmonic_extension(hs, f);
      const double trace = hs.boundary_energy(f) / rho;
      worst = std::max(worst, std::abs(net.energy(h) - trace));
      Vector g = h;
      for (Eigen::Index i = 0; i < g.size(); ++i)
        if (interior[static_cast<std::size_t>(i)]) g[i] += 0.1 * unit(rng);
      worst = std::max(worst, trace - net.energy(g));
    }
    return worst;
  });

  // ---- forms
  const auto basis = build_basis(hs);
  const auto alt = build_basis(hs, opt.seed);
  std::vector<PiecewiseHarmonicFunction> fns;
  for (int k = 0; k < opt.functions; ++k) fns.push_back(PiecewiseHarmonicFunction::harmonic(random_boundary_values(rng, r)));
  for (int k = 0; k < opt.functions; ++k) {
    Vector vals(static_cast<Eigen::Index>(hs.v1_lattice().size()));
    for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = unit(rng);
    fns.push_back(PiecewiseHarmonicFunction::from_lattice(hs.v1_lattice(), vals));
  }
  check(rep, "forms", "basis orthonormal", 1e-12, [&] {
    return (basis.basis().transpose() * basis.energy_matrix() * basis.basis() - Matrix::Identity(r - 1, r - 1)).cwiseAbs().maxCoeff();
  });
  check(rep, "forms", "scaling identity of cell maps, m <= 3", 1e-10, [&] {
    double dd = 0.0;
    for (int m = 0; m <= depth; ++m) {
      const auto maps = cell_map_table(basis, m);
      Matrix S = Matrix::Zero(r - 1, r - 1);
      for (const auto& W : maps) S += W.transpose() * W;
      dd = std::max(dd, (std::pow(hs.rho(), m) * S - Matrix::Identity(r - 1, r - 1)).cwiseAbs().maxCoeff());
    }
    return dd;
  });
  check(rep, "forms", "extension restricts to original values", 1e-12, [&] {
    double dd = 0.0;
    for (const auto& f : fns) {
      const auto ext = extend_to_level(hs, f, f.level() + 2);
      const auto lat = vertex_lattice(s, f.level());
      const auto fine = vertex_lattice(s, f.level() + 2);
      const Vector coarse_vals = f.lattice_values(lat);
      const Vector fine_vals = ext.lattice_values(fine);
      for (std::size_t i = 0; i < lat.size(); ++i)
        dd = std::max(dd, std::abs(fine_vals[static_cast<Eigen::Index>(*fine.find(lat.point(i)))] - coarse_vals[static_cast<Eigen::Index>(i)]));
    }
    return dd;
  });
  check(rep, "forms", "energy of m-harmonic function stable in n", 1e-12, [&] {
    double dd = 0.0;
    for (const auto& f : fns) {
      const double e = graph_energy(hs, f);
      for (int n = f.level() + 1; n <= depth; ++n) dd = std::max(dd, detail::rel(graph_energy(hs, extend_to_level(hs, f, n)), e));
    }
    return dd;
  });
  check(rep, "forms", "graph energies nondecreasing", 1e-10, [&] {
    double dd = 0.0;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<VertexLattice> lats;
    for (int m = 0; m <= depth; ++m) lats.push_back(vertex_lattice(s, m));
    for (int k = 0; k < opt.functions; ++k) {
      Vector vals(static_cast<Eigen::Index>(lats.back().size()));
      for (Eigen::Index i = 0; i < vals.size(); ++i) vals[i] = u(rng);
      double prev = -1.0;
      for (int m = 0; m <= depth; ++m) {
        Vector restricted(static_cast<Eigen::Index>(lats[static_cast<std::size_t>(m)].size()));
        for (std::size_t i = 0; i < lats[static_cast<std::size_t>(m)].size(); ++i)
          restricted[static_cast<Eigen::Index>(i)] = vals[static_cast<Eigen::Index>(*lats.back().find(lats[static_cast<std::size_t>(m)].point(i)))];
        const double e = graph_energy(hs, lats[static_cast<std::size_t>(m)], restricted);
        if (prev >= 0.0) dd = std::max(dd, (prev - e) / std::max(1.0, e));
        prev = e;
      }
    }
    return std::max(dd, 0.0);
  });
  check(rep, "forms", "traces independent of basis", 1e-12, [&] {
    const auto a = cell_map_table(basis, depth);
    const auto b = cell_map_table(alt, depth);
    double dd = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) dd = std::max(dd, std::abs(a[k].squaredNorm() - b[k].squaredNorm()));
    return dd;
  });

  // ---- measures
  check(rep, "measures", "energy measure additivity and dual path", 1e-12, [&] {
    double dd = 0.0;
    for (const auto& f : fns) {
      const auto t = energy_measure(hs, f, depth);
      const auto coarse = energy_measure(hs, f, depth - 1);
      const auto via = energy_measure_from_coordinates(basis, f, depth);
      const auto c2 = t.coarsen();
      for (std::size_t k = 0; k < coarse.masses.size(); ++k) dd = std::max(dd, std::abs(c2.masses[k] - coarse.masses[k]));
      for (std::size_t k = 0; k < t.masses.size(); ++k) dd = std::max(dd, std::abs(t.masses[k] - via.masses[k]));
    }
    return dd;
  });
  check(rep, "measures", "Kusuoka measure additivity and basis independence", 1e-12, [&] {
    double dd = 0.0;
    for (int m = 1; m <= depth; ++m) {
      const auto t = kusuoka_measure(basis, m);
      const auto u = kusuoka_measure(alt, m);
      const auto c = kusuoka_measure(basis, m - 1);
      const auto c2 = t.coarsen();
      for (std::size_t k = 0; k < c.masses.size(); ++k) dd = std::max(dd, std::abs(c2.masses[k] - c.masses[k]));
      for (std::size_t k = 0; k < t.masses.size(); ++k) dd = std::max(dd, std::abs(t.masses[k] - u.masses[k]));
    }
    return dd;
  });
  check(rep, "measures", "Z PSD with trace 1 or 0", 1e-12, [&] {
    double dd = 0.0;
    for (const auto& W : cell_map_table(basis, depth)) {
      const Matrix Z = z_from_cell_map(W);
      const double tr = Z.trace();
      dd = std::max(dd, std::min(std::abs(tr - 1.0), std::abs(tr)));
      const Eigen::SelfAdjointEigenSolver<Matrix> es(Z);
      dd = std::max(dd, -es.eigenvalues().minCoeff());
    }
    return dd;
  });
  check(rep, "measures", "Z martingale identity", 1e-10, [&] {
    double dd = 0.0;
    for (int m = 0; m < depth; ++m) {
      const auto parents = cell_map_table(basis, m);
      const auto children = cell_map_table(basis, m + 1);
      for (std::size_t k = 0; k < parents.size(); ++k) {
        Matrix lhs = Matrix::Zero(r - 1, r - 1);
        for (int i = 0; i < M; ++i) {
          const auto& C = children[k * static_cast<std::size_t>(M) + static_cast<std::size_t>(i)];
          lhs += std::pow(hs.rho(), m + 1) * C.squaredNorm() * z_from_cell_map(C);
        }
        const Matrix rhs = std::pow(hs.rho(), m) * parents[k].squaredNorm() * z_from_cell_map(parents[k]);
        dd = std::max(dd, (lhs - rhs).cwiseAbs().maxCoeff());
      }
    }
    return dd;
  });
  check(rep, "measures", "energy integral equals graph energy", 1e-9, [&] {
    double dd = 0.0;
    for (const auto& f : fns)
      for (int m = std::max(1, f.level()); m <= depth; ++m) dd = std::max(dd, detail::rel(energy_integral(basis, f, m), graph_energy(hs, f)));
    return dd;
  });
  check(rep, "measures", "scaling identity on cells", 1e-9, [&] {
    double dd = 0.0;
    for (const auto& f : fns)
      for (int m = 0; m <= std::min(2, depth); ++m)
        for (std::size_t k = 0; k < ipow(static_cast<std::size_t>(M), static_cast<std::size_t>(m)); ++k) {
          const Word w = Word::from_index(k, m, M);
          const auto local = restrict_to_cell(hs, f, w);
          const double lhs = energy_integral(basis, local, local.level());
          const std::vector<Word> region{w};
          const double rhs = std::pow(hs.rho(), -m) * localized_energy_integral(basis, f, region);
          dd = std::max(dd, detail::rel(lhs, rhs));
        }
    return dd;
  });
  check(rep, "measures", "max cell mass nonincreasing", 1e-12, [&] {
    const auto seq = max_cell_mass_sequence(basis, depth + 1);
    double dd = 0.0;
    for (std::size_t k = 1; k < seq.size(); ++k) dd = std::max(dd, seq[k] - seq[k - 1]);
    return dd;
  });
  check(rep, "measures", "gradient stable under refinement", 1e-9, [&] {
    double dd = 0.0;
    for (const auto& f : fns) {
      if (f.level() != 0) continue;
      for (int i = 0; i < M; ++i) {
        const Word w{i};
        if (condition_number(basis.word_map(w)) >= kMaxConditionNumber) continue;
        const Vector g = gradient_m(basis, f, w);
        for (int j = 0; j < M; ++j) {
          const Word c = w.child(j);
          if (condition_number(basis.word_map(c)) >= kMaxConditionNumber) continue;
          dd = std::max(dd, (gradient_m(basis, f, c) - g).cwiseAbs().maxCoeff() / std::max(1.0, g.cwiseAbs().maxCoeff()));
        }
      }
    }
    return dd;
  });

  // ---- poincare
  std::vector<PiecewiseHarmonicFunction> harmonic(fns.begin(), fns.begin() + opt.functions);
  const int quad = std::min(s.max_depth() - 1, depth + 3);
  check(rep, "poincare", "simplex ratios finite", 0.0, [&] {
    const auto a = simplex_sweep(basis, harmonic, depth - 1, quad);
    return std::isfinite(a.estimated_C) ? 0.0 : 1.0;
  });
  check(rep, "poincare", "simplex constant stable in quadrature level", 0.2, [&] {
    const auto a = simplex_sweep(basis, harmonic, depth - 1, quad - 1);
    const auto b = simplex_sweep(basis, harmonic, depth - 1, quad);
    return std::abs(b.estimated_C - a.estimated_C) / a.estimated_C;
  });
  check(rep, "poincare", "ratios invariant under scaling and shifts", 1e-9, [&] {
    double dd = 0.0;
    for (const auto& f : harmonic) {
      const Word w{0};
      const auto base = simplex_poincare_check(basis, f, w, quad);
      const auto sc = simplex_poincare_check(basis, f.scaled(-3.5), w, quad);
      const auto sh = simplex_poincare_check(basis, f.shifted(2.0), w, quad);
      dd = std::max({dd, detail::rel(sc.ratio, base.ratio), detail::rel(sh.ratio, base.ratio)});
      const auto lp = local_pair_check(basis, f, w, 0, 1);
      const auto lps = local_pair_check(basis, f.scaled(7.0).shifted(-1.0), w, 0, 1);
      dd = std::max(dd, detail::rel(lps.ratio, lp.ratio));
    }
    return dd;
  });
  check(rep, "poincare", "pointwise ratios finite", 0.0, [&] {
    double bad = 0.0;
    for (int k = 0; k < opt.samples / 4; ++k) {
      const auto x = random_address(rng, M, 8);
      const auto y = random_address(rng, M, 8, x.head(static_cast<std::size_t>(k % 3)));
      try {
        for (const auto& f : harmonic)
          if (!std::isfinite(pointwise_poincare_check(basis, f, x, y).ratio)) bad += 1.0;
      } catch (const Indistinguishable&) {
      }
    }
    return bad;
  });
  check(rep, "poincare", "ball ratios finite", 0.0, [&] {
    const std::vector<double> radii{0.1, 0.3, 0.5};
    const auto b = ball_sweep(basis, harmonic, Address(Word(), Word{0, 1}), radii, quad, alpha);
    return std::isfinite(b.estimated_C) ? 0.0 : 1.0;
  });

  // ---- sobolev
  const double sigma = dw / 2.0;
  check(rep, "sobolev", "seminorm homogeneity", 1e-10, [&] {
    double dd = 0.0;
    for (const auto& f : harmonic) {
      const double a = besov_seminorm(hs, f, 2.0, sigma, 1, 4, alpha);
      const double b = besov_seminorm(hs, f.scaled(-2.5), 2.0, sigma, 1, 4, alpha);
      dd = std::max(dd, detail::rel(b, 2.5 * a));
    }
    return dd;
  });
  check(rep, "sobolev", "harmonic profile bounded at sigma = d_w/2", 3.0, [&] {
    const auto profiles = besov_profiles(hs, harmonic, 2.0, sigma, depth, alpha, 3);
    double worst = 1.0;
    for (const auto& p : profiles) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (const auto& [m, a] : p.values) lo = std::min(lo, a), hi = std::max(hi, a);
      if (hi > 0.0) worst = std::max(worst, hi / lo);
    }
    return worst;
  });
  const DensityIntegrator g(basis, energy_density(basis, harmonic.front(), 2), 2.0);
  check(rep, "sobolev", "Riesz truncation within tail bound", 1e-12, [&] {
    double dd = 0.0;
    for (int k = 0; k < 10; ++k) {
      const auto x = random_address(rng, M, 10);
      const auto shallow = riesz_potential(g, sigma, 1, x, 3);
      const auto deep = riesz_potential(g, sigma, 1, x, 6);
      dd = std::max(dd, deep.value - shallow.value - shallow.tail_bound);
    }
    return std::max(dd, 0.0);
  });
  check(rep, "sobolev", "Riesz potential dominated by maximal function", 1e-12, [&] {
    double dd = 0.0;
    const double C = maximal_bound_constant(L, sigma);
    for (int k = 0; k < 10; ++k) {
      const auto x = random_address(rng, M, 10);
      const int n = 1 + k % 2;
      const double J = riesz_potential(g, sigma, n, x, 4).value;
      dd = std::max(dd, J - C * std::pow(L, -n * sigma) * maximal_function(g, x, n + 4));
    }
    return std::max(dd, 0.0);
  });
  check(rep, "sobolev", "Hajlasz trivial bound", 0.0, [&] {
    const auto& f = harmonic.front();
    const double sup = f.cell_values().cwiseAbs().maxCoeff();
    std::vector<std::pair<Address, Address>> pairs;
    for (int k = 0; k < 50; ++k) pairs.emplace_back(random_address(rng, M, 8), random_address(rng, M, 8));
    return static_cast<double>(hajlasz_pair_check(hs, f, [&](const Address&) { return sup; }, 0.0, pairs).violations);
  });
}

}  // namespace detail

inline SelftestReport run_selftest(const FractalSystem& s, const SelftestOptions& opt = {}) {
  SelftestReport rep;
  using detail::check;
  Rng rng(opt.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const int M = s.num_maps();
  const int r = s.num_boundary();
  const double L = s.scale_L();
  const int depth = std::min(3, s.max_depth());

  // ---- geometry
  check(rep, "geometry", "unitary parts orthogonal", 1e-12, [&] {
    double d = 0.0;
    for (const auto& phi : s.maps())
      d = std::max(d, (phi.unitary.transpose() * phi.unitary - Matrix::Identity(s.ambient_dim(), s.ambient_dim())).cwiseAbs().maxCoeff());
    return d;
  });
  check(rep, "geometry", "similitudes contract by 1/L", 1e-12, [&] {
    double d = 0.0;
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int k = 0; k < opt.samples; ++k) {
      Vector x(s.ambient_dim()), y(s.ambient_dim());
      for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = u(rng), y[i] = u(rng);
      for (const auto& phi : s.maps()) d = std::max(d, std::abs((phi(x) - phi(y)).norm() - (x - y).norm() / L));
    }
    return d;
  });
  check(rep, "geometry", "essential fixed point residual", 1e-12, [&] {
    double d = 0.0;
    for (int i = 0; i < M; ++i)
      if (int v = s.boundary_fixed_by(i); v >= 0) d = std::max(d, (s.map(i)(s.boundary()[static_cast<std::size_t>(v)]) - s.boundary()[static_cast<std::size_t>(v)]).norm());
    return d;
  });
  check(rep, "geometry", "boundary has at least two points", 0.0, [&] { return r >= 2 ? 0.0 : 1.0; });
  check(rep, "geometry", "diam V0 = 1", 1e-12, [&] { return std::abs(s.boundary_diameter() - 1.0); });
  check(rep, "geometry", "diam K_w = L^-|w|", 1e-10, [&] {
    double d = 0.0;
    for (int m = 0; m <= depth; ++m)
      for (std::size_t k = 0; k < ipow(static_cast<std::size_t>(M), static_cast<std::size_t>(m)); ++k)
        d = std::max(d, std::abs(make_simplex(s, Word::from_index(k, m, M)).diameter() - std::pow(L, -m)));
    return d;
  });
  check(rep, "geometry", "|V^(m)| < r M^m", 0.0, [&] {
    double bad = 0.0;
    for (int m = 1; m <= depth; ++m)
      if (vertex_lattice(s, m).size() >= static_cast<std::size_t>(r) * ipow(static_cast<std::size_t>(M), static_cast<std::size_t>(m))) bad += 1.0;
    return bad;
  });
  check(rep, "geometry", "star has at most M+1 simplices", 0.0, [&] {
    double bad = 0.0;
    for (int m = 1; m <= depth; ++m)
      for (std::size_t k = 0; k < ipow(static_cast<std::size_t>(M), static_cast<std::size_t>(m)); ++k)
        if (star_words(s, Word::from_index(k, m, M)).size() > static_cast<std::size_t>(M + 1)) bad += 1.0;
    return bad;
  });
  check(rep, "geometry", "address points lie in their simplices", 1e-9, [&] {
    double d = 0.0;
    for (int k = 0; k < opt.samples; ++k) {
      const auto x = random_address(rng, M, 8);
      const Vector p = s.point(x);
      for (std::size_t m = 0; m <= 6; ++m) {
        const auto phi = s.word_map(x.head(m));
        d = std::max(d, std::max(0.0, (phi(s.center()) - p).norm() - s.cell_radius(m)));
      }
    }
    return d;
  });

  // Later stages assume a well-formed system; a broken one only produces noise there.
  if (!rep.all_passed()) return rep;

  PropertyPOptions popt;
  popt.seed = opt.seed;
  popt.n_check = 4;
  popt.samples_per_level = opt.samples * 5;
  PropertyPReport prop;
  check(rep, "geometry", "Property (P) empirical violations", 0.0, [&] {
    prop = property_p_constant(s, popt);
    return static_cast<double>(prop.total_violations());
  });
  const double alpha = prop.alpha;
  check(rep, "geometry", "alpha in (0, 1]", 0.0, [&] { return alpha > 0.0 && alpha <= 1.0 ? 0.0 : 1.0; });
  check(rep, "geometry", "ind(x,y) matches star levels", 0.0, [&] {
    double bad = 0.0;
    for (int k = 0; k < opt.samples; ++k) {
      const auto x = random_address(rng, M, 10);
      const auto y = random_address(rng, M, 10, x.head(static_cast<std::size_t>(k % 4)));
      try {
        if (!index_matches_stars(s, x, y)) bad += 1.0;
      } catch (const Indistinguishable&) {
      }
    }
    return bad;
  });
  check(rep, "geometry", "alpha L^-n <= |x-y| <= 2 L^-(n-1)", 0.0, [&] {
    double bad = 0.0;
    for (int k = 0; k < opt.samples; ++k) {
      const auto x = random_address(rng, M, 10);
      const auto y = random_address(rng, M, 10, x.head(static_cast<std::size_t>(k % 4)));
      int n = 0;
      try {
        n = separation_index(s, x, y).index;
      } catch (const Indistinguishable&) {
        continue;  // closer than the working depth resolves
      }
      const double d = (s.point(x) - s.point(y)).norm();
      if (d < alpha * std::pow(L, -n) - 1e-12 || d > 2.0 * std::pow(L, -(n - 1)) + 1e-12) bad += 1.0;
    }
    return bad;
  });
  check(rep, "geometry", "star lies in B(x, 2 L^-m)", 1e-12, [&] {
    double d = 0.0;
    for (int k = 0; k < opt.samples / 4; ++k) {
      const auto x = random_address(rng, M, 10);
      const Vector p = s.point(x);
      for (int m = 1; m <= depth; ++m)
        for (const auto& w : star_words(s, x.head(static_cast<std::size_t>(m))))
          for (const auto& v : s.cell_vertices(w)) d = std::max(d, (v - p).norm() - 2.0 * std::pow(L, -m));
    }
    return std::max(d, 0.0);
  });

  // ---- harmonic_structure
  std::optional<HarmonicStructure> solved;
  check(rep, "harmonic_structure", "renormalization converges", 0.0, [&] {
    solved = solve_renormalization(s);
    return 0.0;
  });
  if (!solved) return rep;
  try {
    detail::run_analysis_checks(rep, *solved, rng, opt);
  } catch (const std::exception& ex) {
    rep.add({"selftest", "suite completed", false, std::numeric_limits<double>::infinity(), 0.0, ex.what()});
  }
  return rep;
}

}  // namespace nestfrac
