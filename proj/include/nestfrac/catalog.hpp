#pragma once

// Built-in fractals and the JSON fractal definition format.

#include <Eigen/Dense>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nestfrac/geometry.hpp"

namespace nestfrac {

namespace detail {

inline Similitude shrink_toward(const Vector& fixed, double L) {
  const auto n = fixed.size();
  return {1.0 / L, Matrix::Identity(n, n), (1.0 - 1.0 / L) * fixed};
}

}  // namespace detail

inline FractalSystem sierpinski_gasket() {
  const double h = std::sqrt(3.0) / 2.0;
  std::vector<Similitude> maps;
  for (const auto& v : {Vector{{0.0, 0.0}}, Vector{{1.0, 0.0}}, Vector{{0.5, h}}})
    maps.push_back(detail::shrink_toward(v, 2.0));
  // Sorted boundary: (0,0), (1/2,h), (1,0).
  return FractalSystem("sierpinski-gasket", std::move(maps), {{1, 0, 2}, {0, 2, 1}});
}

/// Vicsek cross on a square of diagonal 1: four corner maps, then the center map.
inline FractalSystem vicsek() {
  const double s = 1.0 / std::sqrt(2.0);
  std::vector<Similitude> maps;
  for (const auto& c : {Vector{{0.0, 0.0}}, Vector{{s, 0.0}}, Vector{{0.0, s}}, Vector{{s, s}}})
    maps.push_back(detail::shrink_toward(c, 3.0));
  maps.push_back(detail::shrink_toward(Vector{{s / 2.0, s / 2.0}}, 3.0));
  // Sorted boundary: (0,0), (0,s), (s,0), (s,s). Quarter turn and diagonal reflection.
  return FractalSystem("vicsek", std::move(maps), {{2, 0, 3, 1}, {0, 2, 1, 3}});
}

inline FractalSystem sierpinski_gasket_3d() {
  const std::vector<Vector> corners{Vector{{0.0, 0.0, 0.0}}, Vector{{1.0, 0.0, 0.0}},
                                    Vector{{0.5, std::sqrt(3.0) / 2.0, 0.0}},
                                    Vector{{0.5, std::sqrt(3.0) / 6.0, std::sqrt(2.0 / 3.0)}}};
  std::vector<Similitude> maps;
  for (const auto& c : corners) maps.push_back(detail::shrink_toward(c, 2.0));
  return FractalSystem("sierpinski-gasket-3d", std::move(maps), {{1, 0, 2, 3}, {0, 2, 1, 3}, {0, 1, 3, 2}});
}

inline std::vector<std::string> catalog_names() {
  return {"sierpinski-gasket", "vicsek", "sierpinski-gasket-3d"};
}

/// Parses a fractal definition:
///   { "name": ..., "ambient_dim": N, "scale_L": L,
///     "maps": [ { "unitary": [[...], ...] or flat row-major, "translation": [...] }, ... ],
///     "symmetry_generators": [[...], ...] }   (optional, 0-based permutations of sorted V0)
/// The result is rescaled so that diam V0 = 1.
inline FractalSystem parse_fractal(const nlohmann::json& j) {
  try {
    const auto n = j.at("ambient_dim").get<Eigen::Index>();
    const auto L = j.at("scale_L").get<double>();
    if (n < 1) throw InvalidArgument("ambient_dim must be positive");
    if (!(L > 1.0)) throw InvalidArgument("scale_L must exceed 1");
    std::vector<Similitude> maps;
    for (const auto& m : j.at("maps")) {
      Similitude phi{1.0 / L, Matrix(n, n), Vector(n)};
      const auto& u = m.at("unitary");
      std::vector<double> flat;
      if (u.size() == static_cast<std::size_t>(n) && u.front().is_array()) {
        for (const auto& row : u) {
          if (row.size() != static_cast<std::size_t>(n)) throw InvalidArgument("unitary row has wrong length");
          for (const auto& x : row) flat.push_back(x.get<double>());
        }
      } else {
        flat = u.get<std::vector<double>>();
      }
      if (flat.size() != static_cast<std::size_t>(n * n)) throw InvalidArgument("unitary has wrong size");
      for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c) phi.unitary(r, c) = flat[static_cast<std::size_t>(r * n + c)];
      const auto t = m.at("translation").get<std::vector<double>>();
      if (t.size() != static_cast<std::size_t>(n)) throw InvalidArgument("translation has wrong length");
      for (Eigen::Index r = 0; r < n; ++r) phi.translation[r] = t[static_cast<std::size_t>(r)];
      if ((phi.unitary.transpose() * phi.unitary - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() > 1e-9)
        throw InvalidArgument("map unitary part is not orthogonal");
      maps.push_back(std::move(phi));
    }
    std::vector<Permutation> gens;
    if (j.contains("symmetry_generators")) gens = j.at("symmetry_generators").get<std::vector<Permutation>>();
    return FractalSystem(j.value("name", std::string("custom")), std::move(maps), std::move(gens)).normalized();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed fractal definition: ") + e.what());
  }
}

inline FractalSystem load_fractal_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open fractal file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("malformed fractal file " + path.string() + ": " + e.what());
  }
  return parse_fractal(j);
}

/// Catalog name, path to a definition file, or <name>.json in $NESTFRAC_CATALOG_DIR.
inline FractalSystem load_fractal(const std::string& key) {
  if (key == "sierpinski-gasket") return sierpinski_gasket();
  if (key == "vicsek") return vicsek();
  if (key == "sierpinski-gasket-3d") return sierpinski_gasket_3d();
  if (std::filesystem::is_regular_file(key)) return load_fractal_file(key);
  if (const char* dir = std::getenv("NESTFRAC_CATALOG_DIR")) {
    const auto p = std::filesystem::path(dir) / (key + ".json");
    if (std::filesystem::is_regular_file(p)) return load_fractal_file(p);
  }
  throw InvalidArgument("unknown fractal '" + key + "'");
}

/// FNV-1a over the name and the map coefficients printed at full precision.
inline std::string fractal_hash(const FractalSystem& s) {
  std::ostringstream os;
  os.precision(17);
  os << s.name() << ';' << s.ambient_dim() << ';' << s.scale_L();
  for (const auto& phi : s.maps()) {
    for (Eigen::Index k = 0; k < phi.unitary.size(); ++k) os << ',' << phi.unitary.data()[k];
    for (Eigen::Index k = 0; k < phi.translation.size(); ++k) os << ',' << phi.translation[k];
  }
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : os.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace nestfrac
