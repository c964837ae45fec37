#pragma once

// Nested-fractal geometry: similitudes, words and addresses, vertex lattices,
// simplices and their stars, and the separation index of two points.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <limits>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "nestfrac/error.hpp"

namespace nestfrac {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// A permutation of boundary vertex indices; perm[i] is the image of i.
using Permutation = std::vector<int>;

/// Lattice-point and vertex-merging tolerance, relative to the level scale L^{-m}.
inline constexpr double kLatticeTolerance = 1e-9;

struct Similitude {
  double scale = 1.0;
  Matrix unitary;
  Vector translation;

  Vector operator()(const Vector& x) const { return scale * (unitary * x) + translation; }

  Vector fixed_point() const {
    const auto n = translation.size();
    const Matrix lhs = Matrix::Identity(n, n) - scale * unitary;
    return lhs.fullPivLu().solve(translation);
  }
};

/// x -> linear * x + offset.
struct AffineMap {
  Matrix linear;
  Vector offset;

  static AffineMap identity(Eigen::Index n) { return {Matrix::Identity(n, n), Vector::Zero(n)}; }

  Vector operator()(const Vector& x) const { return linear * x + offset; }

  /// this ∘ phi
  AffineMap compose(const Similitude& phi) const {
    return {linear * (phi.scale * phi.unitary), linear * phi.translation + offset};
  }

  Vector fixed_point() const {
    const auto n = offset.size();
    const Matrix lhs = Matrix::Identity(n, n) - linear;
    return lhs.fullPivLu().solve(offset);
  }
};

/// A finite word over the alphabet {0, ..., M-1}. Letters are zero-based in
/// code; `to_string` prints them one-based, dot separated ("1.3.2").
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<int> letters) : letters_(std::move(letters)) {}
  Word(std::initializer_list<int> letters) : letters_(letters) {}

  /// Builds a word from one-based letters, as they are written in the literature.
  static Word one_based(std::initializer_list<int> letters) {
    std::vector<int> v;
    v.reserve(letters.size());
    for (int l : letters) v.push_back(l - 1);
    return Word(std::move(v));
  }

  static Word from_index(std::size_t index, int length, int alphabet) {
    std::vector<int> v(static_cast<std::size_t>(length));
    for (int k = length - 1; k >= 0; --k) {
      v[static_cast<std::size_t>(k)] = static_cast<int>(index % static_cast<std::size_t>(alphabet));
      index /= static_cast<std::size_t>(alphabet);
    }
    return Word(std::move(v));
  }

  /// Parses "1.2.3" (one-based); "-" or "" is the empty word.
  static Word parse(const std::string& text) {
    std::vector<int> v;
    if (text.empty() || text == "-") return Word();
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, '.')) {
      if (item.empty()) throw InvalidArgument("malformed word '" + text + "'");
      v.push_back(std::stoi(item) - 1);
    }
    return Word(std::move(v));
  }

  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  int operator[](std::size_t k) const { return letters_[k]; }
  const std::vector<int>& letters() const { return letters_; }

  Word child(int letter) const {
    Word w = *this;
    w.letters_.push_back(letter);
    return w;
  }

  Word concat(const Word& other) const {
    Word w = *this;
    w.letters_.insert(w.letters_.end(), other.letters_.begin(), other.letters_.end());
    return w;
  }

  Word head(std::size_t m) const {
    return Word(std::vector<int>(letters_.begin(), letters_.begin() + static_cast<std::ptrdiff_t>(std::min(m, size()))));
  }

  Word tail(std::size_t from) const {
    if (from >= size()) return Word();
    return Word(std::vector<int>(letters_.begin() + static_cast<std::ptrdiff_t>(from), letters_.end()));
  }

  bool is_prefix_of(const Word& other) const {
    return size() <= other.size() && std::equal(letters_.begin(), letters_.end(), other.letters_.begin());
  }

  /// Rank among words of the same length in lexicographic order.
  std::size_t index(int alphabet) const {
    std::size_t idx = 0;
    for (int l : letters_) idx = idx * static_cast<std::size_t>(alphabet) + static_cast<std::size_t>(l);
    return idx;
  }

  bool valid_for(int alphabet) const {
    return std::all_of(letters_.begin(), letters_.end(), [&](int l) { return l >= 0 && l < alphabet; });
  }

  std::string to_string() const {
    if (letters_.empty()) return "-";
    std::string s;
    for (std::size_t k = 0; k < letters_.size(); ++k) {
      if (k) s += '.';
      s += std::to_string(letters_[k] + 1);
    }
    return s;
  }

  friend bool operator==(const Word&, const Word&) = default;
  friend auto operator<=>(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() <=> b.size();
    return a.letters_ <=> b.letters_;
  }

 private:
  std::vector<int> letters_;
};

/// Eventually periodic infinite word: prefix followed by period repeated forever.
class Address {
 public:
  Address(Word prefix, Word period) : prefix_(std::move(prefix)), period_(std::move(period)) {
    if (period_.empty()) throw InvalidArgument("address period must be nonempty");
  }

  static Address periodic(Word period) { return Address(Word(), std::move(period)); }

  /// Parses "1.2(3.4)" : prefix 1.2, period 3.4 (one-based letters).
  static Address parse(const std::string& text) {
    const auto open = text.find('(');
    const auto close = text.rfind(')');
    if (open == std::string::npos || close == std::string::npos || close < open + 2)
      throw InvalidArgument("malformed address '" + text + "' (expected prefix(period))");
    return Address(Word::parse(text.substr(0, open)), Word::parse(text.substr(open + 1, close - open - 1)));
  }

  const Word& prefix() const { return prefix_; }
  const Word& period() const { return period_; }

  int letter(std::size_t k) const {
    if (k < prefix_.size()) return prefix_[k];
    return period_[(k - prefix_.size()) % period_.size()];
  }

  /// [w]_m
  Word head(std::size_t m) const {
    std::vector<int> v(m);
    for (std::size_t k = 0; k < m; ++k) v[k] = letter(k);
    return Word(std::move(v));
  }

  /// Address of phi_{[w]_k}^{-1}(x).
  Address shifted(std::size_t k) const {
    if (k <= prefix_.size()) return Address(prefix_.tail(k), period_);
    const std::size_t p = period_.size();
    const std::size_t rot = (k - prefix_.size()) % p;
    return Address(Word(), period_.tail(rot).concat(period_.head(rot)));
  }

  /// Eventually constant in a single letter.
  bool eventually_constant() const {
    return std::all_of(period_.letters().begin(), period_.letters().end(),
                       [&](int l) { return l == period_[0]; });
  }

  std::string to_string() const {
    return (prefix_.empty() ? std::string() : prefix_.to_string()) + "(" + period_.to_string() + ")";
  }

  friend bool operator==(const Address& a, const Address& b) {
    const std::size_t n = std::max(a.prefix_.size(), b.prefix_.size()) + a.period_.size() * b.period_.size();
    for (std::size_t k = 0; k < n; ++k)
      if (a.letter(k) != b.letter(k)) return false;
    return true;
  }

 private:
  Word prefix_;
  Word period_;
};

namespace detail {

inline bool lex_less(const Vector& a, const Vector& b, double tol) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i] - tol) return true;
    if (a[i] > b[i] + tol) return false;
  }
  return false;
}

inline double max_pairwise_distance(std::span<const Vector> pts) {
  double d = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) d = std::max(d, (pts[i] - pts[j]).norm());
  return d;
}

}  // namespace detail

/// Fixed points v_i for which some other fixed point v_j and maps phi_k, phi_l
/// satisfy phi_k(v_i) = phi_l(v_j), sorted lexicographically by coordinates.
inline std::vector<Vector> essential_fixed_points(std::span<const Similitude> maps, double tol = 1e-9) {
  if (maps.size() < 2) throw DegenerateSystem("degenerate system: at least two similitudes are required");
  std::vector<Vector> fixed;
  fixed.reserve(maps.size());
  for (const auto& phi : maps) fixed.push_back(phi.fixed_point());

  std::vector<Vector> essential;
  for (std::size_t i = 0; i < fixed.size(); ++i) {
    bool is_essential = false;
    for (std::size_t j = 0; j < fixed.size() && !is_essential; ++j) {
      if ((fixed[i] - fixed[j]).norm() <= tol) continue;  // "another" fixed point
      for (std::size_t k = 0; k < maps.size() && !is_essential; ++k)
        for (std::size_t l = 0; l < maps.size() && !is_essential; ++l)
          if ((maps[k](fixed[i]) - maps[l](fixed[j])).norm() <= tol) is_essential = true;
    }
    if (is_essential) {
      const bool dup = std::any_of(essential.begin(), essential.end(),
                                   [&](const Vector& v) { return (v - fixed[i]).norm() <= tol; });
      if (!dup) essential.push_back(fixed[i]);
    }
  }
  if (essential.size() < 2)
    throw DegenerateSystem("degenerate system: fewer than two essential fixed points");
  std::sort(essential.begin(), essential.end(),
            [&](const Vector& a, const Vector& b) { return detail::lex_less(a, b, tol); });
  return essential;
}

/// An IFS of similitudes with a common ratio 1/L, together with its boundary V^(0).
/// Immutable after construction.
class FractalSystem {
 public:
  FractalSystem(std::string name, std::vector<Similitude> maps, std::vector<Permutation> symmetry_generators = {})
      : name_(std::move(name)), maps_(std::move(maps)), generators_(std::move(symmetry_generators)) {
    if (maps_.size() < 2) throw DegenerateSystem("degenerate system: at least two similitudes are required");
    n_ = maps_.front().translation.size();
    const double s = maps_.front().scale;
    for (const auto& phi : maps_) {
      if (phi.translation.size() != n_ || phi.unitary.rows() != n_ || phi.unitary.cols() != n_)
        throw InvalidArgument("similitude dimensions do not match the ambient dimension");
      if (std::abs(phi.scale - s) > 1e-12 * s)
        throw DegenerateSystem("all similitudes must share the same contraction ratio");
    }
    if (!(s > 0.0 && s < 1.0)) throw DegenerateSystem("contraction ratio must lie in (0, 1)");
    L_ = 1.0 / s;
    boundary_ = essential_fixed_points(maps_);

    fixes_.assign(maps_.size(), -1);
    for (std::size_t i = 0; i < maps_.size(); ++i) {
      const Vector p = maps_[i].fixed_point();
      for (std::size_t j = 0; j < boundary_.size(); ++j)
        if ((p - boundary_[j]).norm() <= 1e-9) fixes_[i] = static_cast<int>(j);
    }

    for (const auto& g : generators_) {
      if (g.size() != boundary_.size()) throw InvalidArgument("symmetry generator has wrong length");
      std::vector<int> sorted = g;
      std::sort(sorted.begin(), sorted.end());
      for (std::size_t k = 0; k < sorted.size(); ++k)
        if (sorted[k] != static_cast<int>(k)) throw InvalidArgument("symmetry generator is not a permutation");
    }

    shares_unitary_ = std::all_of(maps_.begin(), maps_.end(), [&](const Similitude& phi) {
      return (phi.unitary - maps_.front().unitary).cwiseAbs().maxCoeff() <= 1e-12;
    });

    center_ = Vector::Zero(n_);
    for (const auto& v : boundary_) center_ += v;
    center_ /= static_cast<double>(boundary_.size());
    double spread = 0.0;
    for (const auto& phi : maps_) spread = std::max(spread, (phi(center_) - center_).norm());
    radius_ = L_ / (L_ - 1.0) * spread;
    for (const auto& v : boundary_) radius_ = std::max(radius_, (v - center_).norm());

    // ~1e6 cells at the deepest level.
    max_depth_ = std::max(1, static_cast<int>(std::floor(std::log(1e6) / std::log(static_cast<double>(maps_.size())))));
  }

  const std::string& name() const { return name_; }
  const std::vector<Similitude>& maps() const { return maps_; }
  const Similitude& map(int i) const { return maps_[static_cast<std::size_t>(i)]; }
  int num_maps() const { return static_cast<int>(maps_.size()); }
  Eigen::Index ambient_dim() const { return n_; }
  double scale_L() const { return L_; }
  const std::vector<Vector>& boundary() const { return boundary_; }
  int num_boundary() const { return static_cast<int>(boundary_.size()); }
  double hausdorff_dim() const { return std::log(static_cast<double>(maps_.size())) / std::log(L_); }
  const std::vector<Permutation>& symmetry_generators() const { return generators_; }
  bool shares_unitary() const { return shares_unitary_; }
  /// The open set condition is assumed, never verified.
  bool open_set_condition_declared() const { return true; }
  int max_depth() const { return max_depth_; }

  /// Index in V^(0) of the fixed point of map i, or -1 if that fixed point is not essential.
  int boundary_fixed_by(int i) const { return fixes_[static_cast<std::size_t>(i)]; }

  FractalSystem with_max_depth(int depth) const {
    FractalSystem copy = *this;
    copy.max_depth_ = depth;
    return copy;
  }

  /// Conjugate by a dilation so that diam V^(0) = 1.
  FractalSystem normalized() const {
    const double diam = detail::max_pairwise_distance(boundary_);
    std::vector<Similitude> maps = maps_;
    for (auto& phi : maps) phi.translation /= diam;
    FractalSystem copy(name_, std::move(maps), generators_);
    copy.max_depth_ = max_depth_;
    return copy;
  }

  double boundary_diameter() const { return detail::max_pairwise_distance(boundary_); }

  /// phi_w = phi_{w_1} ∘ ... ∘ phi_{w_m}
  AffineMap word_map(const Word& w) const {
    AffineMap acc = AffineMap::identity(n_);
    for (int l : w.letters()) acc = acc.compose(maps_[static_cast<std::size_t>(l)]);
    return acc;
  }

  Vector point(const Word& w, int vertex) const {
    return word_map(w)(boundary_[static_cast<std::size_t>(vertex)]);
  }

  std::vector<Vector> cell_vertices(const Word& w) const { return cell_vertices(word_map(w)); }

  std::vector<Vector> cell_vertices(const AffineMap& phi) const {
    std::vector<Vector> out;
    out.reserve(boundary_.size());
    for (const auto& v : boundary_) out.push_back(phi(v));
    return out;
  }

  /// Coordinates of the point with the given address.
  Vector point(const Address& a) const {
    AffineMap period = AffineMap::identity(n_);
    for (int l : a.period().letters()) period = period.compose(maps_[static_cast<std::size_t>(l)]);
    return word_map(a.prefix())(period.fixed_point());
  }

  /// Centroid of V^(0); every cell K_w lies in the ball of radius
  /// `cell_radius(|w|)` about phi_w(center()).
  const Vector& center() const { return center_; }
  double cell_radius(std::size_t level) const { return radius_ * std::pow(L_, -static_cast<double>(level)); }
  double level_tolerance(std::size_t level) const {
    return kLatticeTolerance * std::pow(L_, -static_cast<double>(level));
  }

 private:
  std::string name_;
  std::vector<Similitude> maps_;
  std::vector<Permutation> generators_;
  Eigen::Index n_ = 0;
  double L_ = 1.0;
  std::vector<Vector> boundary_;
  std::vector<int> fixes_;
  bool shares_unitary_ = false;
  Vector center_;
  double radius_ = 0.0;
  int max_depth_ = 12;
};

/// mu(K_w) = M^{-|w|}
inline double hausdorff_mass(const FractalSystem& s, const Word& w) {
  return std::pow(static_cast<double>(s.num_maps()), -static_cast<double>(w.size()));
}

/// The m-simplex K_w with its vertex set phi_w(V^(0)).
struct Simplex {
  Word word;
  std::vector<Vector> vertices;

  std::size_t level() const { return word.size(); }
  double diameter() const { return detail::max_pairwise_distance(vertices); }
  friend bool operator==(const Simplex& a, const Simplex& b) { return a.word == b.word; }
};

inline Simplex make_simplex(const FractalSystem& s, const Word& w) {
  if (!w.valid_for(s.num_maps())) throw InvalidArgument("word letter out of range: " + w.to_string());
  return {w, s.cell_vertices(w)};
}

// ---------------------------------------------------------------------------
// Vertex lattice V^(m)
// ---------------------------------------------------------------------------

struct LatticeProvenance {
  std::size_t cell;  // lexicographic index of the word
  int vertex;        // index in V^(0)
};

/// V^(m) with duplicates merged; each point remembers every (word, vertex) producing it.
class VertexLattice {
 public:
  VertexLattice(const FractalSystem& s, int level)
      : level_(level), r_(s.num_boundary()), M_(s.num_maps()), tol_(s.level_tolerance(static_cast<std::size_t>(level))) {
    if (level < 0) throw InvalidArgument("lattice level must be nonnegative");
    if (level > s.max_depth()) throw DepthExceeded("level " + std::to_string(level) + " exceeds max depth " + std::to_string(s.max_depth()));
    bucket_ = 1e3 * tol_;
    std::size_t cells = 1;
    for (int k = 0; k < level; ++k) cells *= static_cast<std::size_t>(M_);
    cell_vertex_.resize(cells * static_cast<std::size_t>(r_));

    enumerate(s, AffineMap::identity(s.ambient_dim()), 0, 0);
  }

  int level() const { return level_; }
  std::size_t size() const { return points_.size(); }
  std::size_t num_cells() const { return cell_vertex_.size() / static_cast<std::size_t>(r_); }
  const Vector& point(std::size_t i) const { return points_[i]; }
  const std::vector<Vector>& points() const { return points_; }
  const std::vector<LatticeProvenance>& provenance(std::size_t i) const { return provenance_[i]; }
  std::size_t cell_vertex(std::size_t cell, int v) const {
    return cell_vertex_[cell * static_cast<std::size_t>(r_) + static_cast<std::size_t>(v)];
  }
  int num_maps() const { return M_; }
  int num_boundary() const { return r_; }

  std::optional<std::size_t> find(const Vector& x) const {
    std::optional<std::size_t> hit;
    visit_candidates(x, [&](std::size_t idx) {
      if (!hit && (points_[idx] - x).norm() <= tol_) hit = idx;
    });
    return hit;
  }

 private:
  struct KeyHash {
    std::size_t operator()(const std::vector<std::int64_t>& k) const {
      std::uint64_t h = 1469598103934665603ull;
      for (auto v : k) {
        h ^= static_cast<std::uint64_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
      }
      return static_cast<std::size_t>(h);
    }
  };

  void enumerate(const FractalSystem& s, const AffineMap& phi, int depth, std::size_t index) {
    if (depth == level_) {
      for (int v = 0; v < r_; ++v) {
        const Vector p = phi(s.boundary()[static_cast<std::size_t>(v)]);
        auto found = find(p);
        std::size_t idx;
        if (found) {
          idx = *found;
        } else {
          idx = points_.size();
          points_.push_back(p);
          provenance_.emplace_back();
          insert(p, idx);
        }
        provenance_[idx].push_back({index, v});
        cell_vertex_[index * static_cast<std::size_t>(r_) + static_cast<std::size_t>(v)] = idx;
      }
      return;
    }
    for (int i = 0; i < M_; ++i)
      enumerate(s, phi.compose(s.map(i)), depth + 1, index * static_cast<std::size_t>(M_) + static_cast<std::size_t>(i));
  }

  void insert(const Vector& x, std::size_t idx) {
    std::vector<std::int64_t> key(static_cast<std::size_t>(x.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) key[static_cast<std::size_t>(i)] = static_cast<std::int64_t>(std::floor(x[i] / bucket_));
    buckets_[key].push_back(idx);
  }

  template <class F>
  void visit_candidates(const Vector& x, F&& f) const {
    const auto n = static_cast<std::size_t>(x.size());
    std::vector<std::int64_t> base(n);
    std::vector<std::vector<std::int64_t>> options(n);
    const double slack = tol_ / bucket_;
    for (std::size_t i = 0; i < n; ++i) {
      const double q = x[static_cast<Eigen::Index>(i)] / bucket_;
      const double fl = std::floor(q);
      options[i].push_back(static_cast<std::int64_t>(fl));
      if (q - fl < slack) options[i].push_back(static_cast<std::int64_t>(fl) - 1);
      if (fl + 1.0 - q < slack) options[i].push_back(static_cast<std::int64_t>(fl) + 1);
    }
    std::vector<std::size_t> pick(n, 0);
    std::vector<std::int64_t> key(n);
    while (true) {
      for (std::size_t i = 0; i < n; ++i) key[i] = options[i][pick[i]];
      if (auto it = buckets_.find(key); it != buckets_.end())
        for (auto idx : it->second) f(idx);
      std::size_t i = 0;
      while (i < n && ++pick[i] == options[i].size()) pick[i++] = 0;
      if (i == n) break;
    }
  }

  int level_;
  int r_;
  int M_;
  double tol_;
  double bucket_;
  std::vector<Vector> points_;
  std::vector<std::vector<LatticeProvenance>> provenance_;
  std::vector<std::size_t> cell_vertex_;
  std::unordered_map<std::vector<std::int64_t>, std::vector<std::size_t>, KeyHash> buckets_;
};

/// V^(m) = Phi^m(V^(0)).
inline VertexLattice vertex_lattice(const FractalSystem& s, int m) { return VertexLattice(s, m); }

/// Lattice indices of the m-neighbors of lattice point x (points sharing an m-cell with x).
inline std::vector<std::size_t> neighbors(const VertexLattice& lattice, const Vector& x) {
  const auto idx = lattice.find(x);
  if (!idx) throw InvalidArgument("point is not in V^(" + std::to_string(lattice.level()) + ")");
  std::set<std::size_t> out;
  for (const auto& p : lattice.provenance(*idx))
    for (int v = 0; v < lattice.num_boundary(); ++v) {
      const auto y = lattice.cell_vertex(p.cell, v);
      if (y != *idx) out.insert(y);
    }
  return {out.begin(), out.end()};
}

// ---------------------------------------------------------------------------
// Cell search
// ---------------------------------------------------------------------------

/// Level-m words whose bounding ball comes within `tol` of x, found by descending
/// the word tree and pruning by bounding balls.
inline std::vector<std::pair<Word, AffineMap>> cells_near(const FractalSystem& s, const Vector& x, std::size_t m,
                                                          double tol, const Word& root = Word()) {
  std::vector<std::pair<Word, AffineMap>> frontier{{root, s.word_map(root)}};
  for (std::size_t k = root.size(); k < m; ++k) {
    std::vector<std::pair<Word, AffineMap>> next;
    const double rad = s.cell_radius(k + 1) + tol;
    for (const auto& [w, phi] : frontier)
      for (int i = 0; i < s.num_maps(); ++i) {
        AffineMap child = phi.compose(s.map(i));
        if ((child(s.center()) - x).norm() <= rad) next.emplace_back(w.child(i), std::move(child));
      }
    frontier = std::move(next);
  }
  return frontier;
}

/// Level-m cells having x as one of their vertices.
inline std::vector<Word> cells_with_vertex(const FractalSystem& s, const Vector& x, std::size_t m) {
  const double tol = s.level_tolerance(m);
  std::vector<Word> out;
  for (const auto& [w, phi] : cells_near(s, x, m, tol))
    for (const auto& v : s.boundary())
      if ((phi(v) - x).norm() <= tol) {
        out.push_back(w);
        break;
      }
  return out;
}

/// Two distinct same-level cells intersect iff they share a vertex (nesting axiom).
inline bool cells_touch(const FractalSystem& s, const Word& a, const Word& b) {
  if (a == b) return true;
  const double tol = s.level_tolerance(std::max(a.size(), b.size()));
  const auto va = s.cell_vertices(a);
  const auto vb = s.cell_vertices(b);
  for (const auto& p : va)
    for (const auto& q : vb)
      if ((p - q).norm() <= tol) return true;
  return false;
}

/// Delta_m(x) for an address: the simplex of the prefix [w]_m.
inline Simplex containing_simplex(const FractalSystem& s, std::size_t m, const Address& x) {
  return make_simplex(s, x.head(m));
}

/// Delta_m(x) for a point given by coordinates. Throws AmbiguousAddress when x is
/// (numerically) a lattice point of level <= m, OutsideAttractor when x is not in K.
inline Simplex containing_simplex(const FractalSystem& s, std::size_t m, const Vector& x) {
  if (m == 0) return make_simplex(s, Word());
  const double tol = s.level_tolerance(m);
  const auto candidates = cells_near(s, x, m, tol);
  for (const auto& [w, phi] : candidates)
    for (const auto& v : s.boundary())
      if ((phi(v) - x).norm() <= tol) throw AmbiguousAddress("point is a lattice point at level <= " + std::to_string(m));

  std::vector<Word> containing;
  for (const auto& [w, phi] : candidates) {
    std::size_t depth = m;
    while (s.cell_radius(depth) > tol) ++depth;
    if (!cells_near(s, x, depth, tol, w).empty()) containing.push_back(w);
  }
  if (containing.empty()) throw OutsideAttractor("point is farther than the tolerance from the attractor");
  if (containing.size() > 1) throw AmbiguousAddress("point lies within tolerance of several " + std::to_string(m) + "-simplices");
  return make_simplex(s, containing.front());
}

/// Words of the simplices in the star of K_w: order 1 is Delta*, order 2 is Delta**.
inline std::vector<Word> star_words(const FractalSystem& s, const Word& w, int order = 1) {
  if (order != 1 && order != 2) throw InvalidArgument("star order must be 1 or 2");
  std::set<Word> out{w};
  if (!w.empty())
    for (const auto& v : s.cell_vertices(w))
      for (auto& u : cells_with_vertex(s, v, w.size())) out.insert(std::move(u));
  if (order == 2) {
    std::set<Word> wider;
    for (const auto& u : out)
      for (auto& z : star_words(s, u, 1)) wider.insert(std::move(z));
    out = std::move(wider);
  }
  return {out.begin(), out.end()};
}

inline std::vector<Simplex> star(const FractalSystem& s, const Simplex& delta, int order = 1) {
  std::vector<Simplex> out;
  for (const auto& w : star_words(s, delta.word, order)) out.push_back(make_simplex(s, w));
  return out;
}

// ---------------------------------------------------------------------------
// Separation index
// ---------------------------------------------------------------------------

struct Separation {
  int index = 0;                // ind(x, y)
  std::vector<Simplex> region;  // S(x, y): one simplex or two adjacent ones
};

/// ind(x,y) = min{m >= 1 : Delta_m(x) ∩ Delta_m(y) = ∅} and S(x,y) = Delta_{n-1}(x) ∪ Delta_{n-1}(y).
inline Separation separation_index(const FractalSystem& s, const Address& x, const Address& y) {
  if (x == y) throw InvalidArgument("separation index needs two distinct points");
  for (int m = 1; m <= s.max_depth(); ++m) {
    const Word wx = x.head(static_cast<std::size_t>(m));
    const Word wy = y.head(static_cast<std::size_t>(m));
    if (cells_touch(s, wx, wy)) continue;
    Separation out;
    out.index = m;
    const Word px = x.head(static_cast<std::size_t>(m - 1));
    const Word py = y.head(static_cast<std::size_t>(m - 1));
    out.region.push_back(make_simplex(s, px));
    if (py != px) out.region.push_back(make_simplex(s, py));
    return out;
  }
  throw Indistinguishable("points are indistinguishable at working depth " + std::to_string(s.max_depth()));
}

/// Checks {y : ind(x,y) = n} = Delta*_{n-1}(x) \ Delta*_n(x) for one pair.
inline bool index_matches_stars(const FractalSystem& s, const Address& x, const Address& y) {
  const int n = separation_index(s, x, y).index;
  const auto in_star = [&](std::size_t level) {
    const auto st = star_words(s, x.head(level));
    return std::binary_search(st.begin(), st.end(), y.head(level));
  };
  return in_star(static_cast<std::size_t>(n - 1)) && !in_star(static_cast<std::size_t>(n));
}

}  // namespace nestfrac
