#pragma once

// Shared fixtures: each catalog structure is solved once per test binary.

#include <map>
#include <string>

#include "nestfrac/nestfrac.hpp"

namespace nestfrac::testing {

inline const HarmonicSpaceBasis& basis_for(const std::string& name) {
  static std::map<std::string, HarmonicSpaceBasis> cache;
  auto it = cache.find(name);
  if (it == cache.end()) it = cache.emplace(name, build_basis(solve_renormalization(load_fractal(name)))).first;
  return it->second;
}

inline const HarmonicStructure& structure_for(const std::string& name) { return basis_for(name).structure(); }
inline const FractalSystem& system_for(const std::string& name) { return structure_for(name).system(); }

inline std::vector<PiecewiseHarmonicFunction> random_harmonics(Rng& rng, int r, int count) {
  std::vector<PiecewiseHarmonicFunction> out;
  for (int k = 0; k < count; ++k) out.push_back(PiecewiseHarmonicFunction::harmonic(random_boundary_values(rng, r)));
  return out;
}

/// Random values on V^(m), as an m-harmonic function.
inline PiecewiseHarmonicFunction random_piecewise(Rng& rng, const FractalSystem& s, int m) {
  const auto lattice = vertex_lattice(s, m);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector v(static_cast<Eigen::Index>(lattice.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = u(rng);
  return PiecewiseHarmonicFunction::from_lattice(lattice, v);
}

}  // namespace nestfrac::testing
