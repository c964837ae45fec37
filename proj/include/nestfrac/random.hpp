#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>

#include "nestfrac/geometry.hpp"

namespace nestfrac {

using Rng = std::mt19937_64;

inline constexpr std::uint64_t kDefaultSeed = 20240531;

inline int random_letter(Rng& rng, int alphabet) {
  return std::uniform_int_distribution<int>(0, alphabet - 1)(rng);
}

inline Word random_word(Rng& rng, int alphabet, std::size_t length) {
  std::vector<int> v(length);
  for (auto& l : v) l = random_letter(rng, alphabet);
  return Word(std::move(v));
}

/// A random nonlattice address: `depth` random letters, then a two-letter
/// period with distinct letters (never eventually constant).
inline Address random_address(Rng& rng, int alphabet, std::size_t depth, const Word& start = Word()) {
  const int a = random_letter(rng, alphabet);
  int b = random_letter(rng, alphabet - 1);
  if (b >= a) ++b;
  return Address(start.concat(random_word(rng, alphabet, depth)), Word{a, b});
}

/// Uniform on [-1, 1]^r, then mean-subtracted.
inline Vector random_boundary_values(Rng& rng, int r) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Vector f(r);
  for (int i = 0; i < r; ++i) f[i] = u(rng);
  f.array() -= f.mean();
  return f;
}

}  // namespace nestfrac
