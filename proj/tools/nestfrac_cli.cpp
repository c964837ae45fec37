// nestfrac command-line tool: one subcommand per analysis, JSON for summaries,
// CSV for per-cell and per-sample tables.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nestfrac/nestfrac.hpp"

namespace {

using nlohmann::ordered_json;
using namespace nestfrac;

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Common {
  std::string fractal = "sierpinski-gasket";
  std::string output;  // file prefix; empty means stdout
  std::uint64_t seed = kDefaultSeed;
};

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(17);
  os << x;
  return os.str();
}

ordered_json json_number(double x) { return std::isfinite(x) ? ordered_json(x) : ordered_json(fmt(x)); }

ordered_json matrix_json(const Matrix& A) {
  ordered_json rows = ordered_json::array();
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Eigen::Index j = 0; j < A.cols(); ++j) row.push_back(json_number(A(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

/// Resolved configuration echoed into every output.
class RunContext {
 public:
  RunContext(std::string command, const Common& common, const FractalSystem& s)
      : command_(std::move(command)), common_(common) {
    config_["tool"] = "nestfrac";
    config_["version"] = NESTFRAC_VERSION;
    config_["command"] = command_;
    config_["fractal"] = s.name();
    config_["fractal_hash"] = fractal_hash(s);
    config_["seed"] = common.seed;
    config_["tolerances"] = {{"lattice", kLatticeTolerance}, {"zero_trace", kZeroTrace}, {"max_condition_number", kMaxConditionNumber}};
  }

  ordered_json& params() { return config_["parameters"]; }
  const ordered_json& config() const { return config_; }

  void emit_json(ordered_json body, const std::string& suffix = ".json") const {
    ordered_json doc;
    doc["config"] = config_;
    for (auto& [k, v] : body.items()) doc[k] = v;
    write(doc.dump(2) + "\n", suffix);
  }

  /// Header lines start with '#', one JSON config object per file.
  void emit_csv(const std::string& header, const std::vector<std::string>& rows, const std::string& suffix = ".csv") const {
    std::string out = "# " + config_.dump() + "\n" + header + "\n";
    for (const auto& r : rows) out += r + "\n";
    write(out, suffix);
  }

 private:
  void write(const std::string& text, const std::string& suffix) const {
    if (common_.output.empty()) {
      std::cout << text;
      return;
    }
    const std::string path = common_.output + suffix;
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path);
    f << text;
  }

  std::string command_;
  Common common_;
  ordered_json config_;
};

Vector parse_values(const std::string& text) {
  std::string t = text;
  for (char& c : t)
    if (c == ',' || c == '[' || c == ']') c = ' ';
  std::istringstream is(t);
  std::vector<double> vals;
  std::string tok;
  while (is >> tok) {
    try {
      std::size_t used = 0;
      vals.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw InvalidArgument("malformed number '" + tok + "'");
    }
  }
  return Eigen::Map<const Vector>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

Vector boundary_values(const std::string& inline_values, const std::string& file, int r) {
  std::string text = inline_values;
  if (!file.empty()) {
    std::ifstream f(file);
    if (!f) throw InvalidArgument("cannot read boundary file " + file);
    std::stringstream ss;
    ss << f.rdbuf();
    text = ss.str();
  }
  if (text.empty()) throw InvalidArgument("boundary values required (--boundary or --boundary-file)");
  Vector v = parse_values(text);
  if (v.size() != r) throw InvalidArgument("expected " + std::to_string(r) + " boundary values, got " + std::to_string(v.size()));
  return v;
}

std::string coords_header(Eigen::Index dim) {
  static const char* names[] = {"x", "y", "z"};
  std::string h;
  for (Eigen::Index i = 0; i < dim; ++i) h += std::string(",") + (i < 3 ? names[i] : ("x" + std::to_string(i + 1)).c_str());
  return h;
}

std::string coords_row(const Vector& p) {
  std::string out;
  for (Eigen::Index i = 0; i < p.size(); ++i) out += "," + fmt(p[i]);
  return out;
}

ordered_json samples_summary(const PoincareReport& rep) {
  ordered_json j;
  j["kind"] = to_string(rep.kind);
  j["samples"] = rep.samples.size();
  j["estimated_C"] = json_number(rep.estimated_C);
  j["dilation_A"] = json_number(rep.dilation_A);
  j["quadrature_level"] = rep.quadrature_level;
  j["max_quad_error"] = json_number(rep.max_quad_error);
  j["property_p_verified"] = rep.property_p_verified;
  j["flags"] = ordered_json::array();
  if (!rep.property_p_verified) j["flags"].push_back("Property (P) unverified");
  return j;
}

// ---- subcommands

int cmd_structure(const Common& c, double tol, int max_iter) {
  const auto s = load_fractal(c.fractal);
  RunContext ctx("structure", c, s);
  ctx.params() = {{"tol", tol}, {"max_iter", max_iter}};
  RenormalizationOptions opt;
  opt.tol = tol;
  opt.max_iter = max_iter;
  const auto hs = solve_renormalization(s, opt);
  ordered_json body;
  body["A"] = matrix_json(hs.conductivity());
  body["rho"] = hs.rho();
  body["d_w"] = hs.walk_dim();
  body["d"] = hs.hausdorff_dim();
  body["residual"] = hs.residual();
  body["iterations"] = hs.iterations();
  ctx.emit_json(body);
  return kExitOk;
}

int cmd_harmonic(const Common& c, const std::string& values, const std::string& file, int level) {
  const auto s = load_fractal(c.fractal);
  if (level > s.max_depth()) throw InvalidArgument("level exceeds max depth " + std::to_string(s.max_depth()));
  RunContext ctx("harmonic", c, s);
  const auto hs = solve_renormalization(s);
  const Vector b = boundary_values(values, file, s.num_boundary());
  ctx.params() = {{"level", level}, {"boundary", std::vector<double>(b.data(), b.data() + b.size())}};
  const auto fn = extend_to_level(hs, PiecewiseHarmonicFunction::harmonic(b), level);
  const auto lattice = vertex_lattice(s, level);
  const Vector vals = fn.lattice_values(lattice);
  std::vector<std::string> rows;
  for (std::size_t i = 0; i < lattice.size(); ++i) {
    const auto& p = lattice.provenance(i).front();
    rows.push_back(Word::from_index(p.cell, level, s.num_maps()).to_string() + "," + std::to_string(p.vertex + 1) +
                   coords_row(lattice.point(i)) + "," + fmt(vals[static_cast<Eigen::Index>(i)]));
  }
  ctx.emit_csv("word,vertex_index" + coords_header(s.ambient_dim()) + ",value", rows);
  return kExitOk;
}

int cmd_kusuoka(const Common& c, int level) {
  const auto s = load_fractal(c.fractal);
  if (level > s.max_depth()) throw InvalidArgument("level exceeds max depth " + std::to_string(s.max_depth()));
  RunContext ctx("kusuoka", c, s);
  ctx.params() = {{"level", level}};
  const auto basis = build_basis(solve_renormalization(s));
  const auto maps = cell_map_table(basis, level);
  const double scale = std::pow(basis.rho(), level);
  const double mu = std::pow(static_cast<double>(s.num_maps()), -level);
  std::vector<std::string> rows;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    const Matrix Z = z_from_cell_map(maps[k]);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(Z);
    const double tr = Z.trace();
    const double gap = std::abs(tr) < 0.5 ? std::abs(tr) : std::abs(tr - 1.0);
    rows.push_back(Word::from_index(k, level, s.num_maps()).to_string() + "," + fmt(scale * maps[k].squaredNorm()) + "," + fmt(mu) +
                   "," + fmt(gap) + "," + fmt(es.eigenvalues().minCoeff()) + "," + fmt(es.eigenvalues().maxCoeff()));
  }
  ctx.emit_csv("word,nu_mass,mu_mass,trace_gap,z_eigen_min,z_eigen_max", rows);
  return kExitOk;
}

int cmd_gradient(const Common& c, const std::string& values, const std::string& file, int level) {
  const auto s = load_fractal(c.fractal);
  if (level > s.max_depth()) throw InvalidArgument("level exceeds max depth " + std::to_string(s.max_depth()));
  RunContext ctx("gradient", c, s);
  const auto basis = build_basis(solve_renormalization(s));
  const Vector b = boundary_values(values, file, s.num_boundary());
  ctx.params() = {{"level", level}, {"boundary", std::vector<double>(b.data(), b.data() + b.size())}};
  const auto fn = PiecewiseHarmonicFunction::harmonic(b);
  std::string header = "word";
  for (int k = 0; k < basis.dim(); ++k) header += ",grad_" + std::to_string(k + 1);
  header += ",condition_number";
  std::vector<std::string> rows;
  const auto n = ipow(static_cast<std::size_t>(s.num_maps()), static_cast<std::size_t>(level));
  for (std::size_t k = 0; k < n; ++k) {
    const Word w = Word::from_index(k, level, s.num_maps());
    std::string row = w.to_string();
    try {
      const Vector g = gradient_m(basis, fn, w);
      for (Eigen::Index i = 0; i < g.size(); ++i) row += "," + fmt(g[i]);
      row += "," + fmt(condition_number(basis.word_map(w)));
    } catch (const DegenerateCellMap& e) {
      for (int i = 0; i < basis.dim(); ++i) row += ",nan";
      row += "," + fmt(e.condition_number);
    }
    rows.push_back(std::move(row));
  }
  ctx.emit_csv(header, rows);
  return kExitOk;
}

struct PoincareArgs {
  std::string kind = "simplex";
  int level = 3;
  int quad_level = 7;
  int samples = 50;
  int radii = 10;
};

int cmd_poincare(const Common& c, const PoincareArgs& a) {
  const auto s = load_fractal(c.fractal);
  if (a.quad_level > s.max_depth()) throw InvalidArgument("quad-level exceeds max depth " + std::to_string(s.max_depth()));
  RunContext ctx("poincare", c, s);
  ctx.params() = {{"kind", a.kind}, {"level", a.level}, {"quad_level", a.quad_level}, {"samples", a.samples}, {"radii", a.radii}};
  const auto basis = build_basis(solve_renormalization(s));
  Rng rng(c.seed);
  std::vector<PiecewiseHarmonicFunction> fns;
  for (int k = 0; k < a.samples; ++k) fns.push_back(PiecewiseHarmonicFunction::harmonic(random_boundary_values(rng, s.num_boundary())));

  PropertyPReport prop;
  if (a.kind == "pointwise" || a.kind == "ball") {
    PropertyPOptions popt;
    popt.seed = c.seed;
    popt.samples_per_level = 1000;
    prop = property_p_constant(s, popt);
  }

  PoincareReport rep;
  if (a.kind == "local") {
    rep = local_pair_sweep(basis, fns, a.level);
  } else if (a.kind == "simplex") {
    rep = simplex_sweep(basis, fns, a.level, a.quad_level);
  } else if (a.kind == "pointwise") {
    std::vector<std::pair<Address, Address>> pairs;
    while (static_cast<int>(pairs.size()) < a.samples) {
      const auto x = random_address(rng, s.num_maps(), 8);
      const auto y = random_address(rng, s.num_maps(), 8, x.head(pairs.size() % static_cast<std::size_t>(a.level + 1)));
      try {
        if (separation_index(s, x, y).index >= 1) pairs.emplace_back(x, y);
      } catch (const Indistinguishable&) {
      }
    }
    rep = pointwise_sweep(basis, fns, pairs);
  } else {
    std::vector<double> radii;
    for (int k = 0; k < a.radii; ++k)
      radii.push_back(a.radii == 1 ? 0.1 : 0.05 * std::pow(10.0, static_cast<double>(k) / (a.radii - 1)));
    rep = ball_sweep(basis, fns, Address(Word(), Word{0, 1}), radii, a.quad_level, prop.alpha);
    ctx.params()["alpha"] = prop.alpha;
  }
  // Pointwise and ball bounds rely on Property (P); the shared-unitary test is the only certificate.
  if (a.kind == "pointwise" || a.kind == "ball") rep.property_p_verified = prop.shares_unitary && prop.total_violations() == 0;

  std::vector<std::string> rows;
  for (const auto& smp : rep.samples)
    rows.push_back(smp.descriptor + "," + fmt(smp.lhs) + "," + fmt(smp.rhs) + "," + fmt(smp.ratio) + "," + fmt(smp.quad_error));
  ctx.emit_json({{"report", samples_summary(rep)}});
  if (!c.output.empty()) ctx.emit_csv("descriptor,lhs,rhs,ratio,quad_error", rows);
  return kExitOk;
}

struct SobolevArgs {
  double p = 2.0;
  std::optional<double> sigma;
  int m_max = 5;
  std::optional<double> c0;
  int quad_offset = 4;
  std::string boundary;
};

int cmd_sobolev(const Common& c, const SobolevArgs& a) {
  const auto s = load_fractal(c.fractal);
  if (a.m_max + a.quad_offset > s.max_depth())
    throw InvalidArgument("m-max + quad-offset exceeds max depth " + std::to_string(s.max_depth()));
  RunContext ctx("sobolev", c, s);
  const auto hs = solve_renormalization(s);
  Rng rng(c.seed);
  const Vector b = a.boundary.empty() ? random_boundary_values(rng, s.num_boundary()) : boundary_values(a.boundary, "", s.num_boundary());
  double c0 = 0.0;
  if (a.c0) {
    c0 = *a.c0;
  } else {
    PropertyPOptions popt;
    popt.run_empirical = false;
    c0 = property_p_constant(s, popt).alpha;
  }
  const double sigma = a.sigma.value_or(hs.walk_dim() / 2.0);
  ctx.params() = {{"p", a.p}, {"sigma", sigma}, {"m_max", a.m_max}, {"c0", c0}, {"quad_offset", a.quad_offset},
                  {"boundary", std::vector<double>(b.data(), b.data() + b.size())}};
  const auto prof = besov_profile(hs, PiecewiseHarmonicFunction::harmonic(b), a.p, sigma, a.m_max, c0, a.quad_offset);
  std::vector<std::string> rows;
  for (const auto& [m, v] : prof.values) rows.push_back(std::to_string(m) + "," + fmt(v));
  ctx.emit_csv("m,a_m", rows);
  if (!c.output.empty())
    ctx.emit_json({{"summary", {{"sup", json_number(prof.sup_value)}, {"tail_sup", json_number(prof.tail_sup())}, {"d_w", hs.walk_dim()}}}});
  return kExitOk;
}

int cmd_property_p(const Common& c, int n_check, int samples) {
  const auto s = load_fractal(c.fractal);
  RunContext ctx("check-property-p", c, s);
  PropertyPOptions opt;
  opt.seed = c.seed;
  opt.n_check = n_check;
  opt.samples_per_level = samples;
  ctx.params() = {{"n_check", n_check}, {"samples_per_level", samples}};
  const auto rep = property_p_constant(s, opt);
  ordered_json levels = ordered_json::array();
  for (const auto& l : rep.levels)
    levels.push_back({{"level", l.level}, {"samples", l.samples}, {"violations", l.violations}, {"min_scaled_distance", json_number(l.min_scaled_distance)}});
  ctx.emit_json({{"alpha0", rep.alpha0}, {"alpha0_upper", rep.alpha0_upper}, {"alpha", rep.alpha}, {"shares_unitary", rep.shares_unitary},
                 {"hull_bounds", rep.hull_bounds}, {"warnings", rep.warnings}, {"levels", levels},
                 {"violations", rep.total_violations()}});
  return rep.total_violations() == 0 ? kExitOk : kExitFailure;
}

int cmd_selftest(const Common& c, bool fractal_given, const SelftestOptions& opt) {
  const std::vector<std::string> names = fractal_given ? std::vector<std::string>{c.fractal} : catalog_names();
  ordered_json runs = ordered_json::array();
  bool ok = true;
  ordered_json config;
  for (const auto& name : names) {
    const auto s = load_fractal(name);
    RunContext ctx("selftest", c, s);
    const auto rep = run_selftest(s, opt);
    ok = ok && rep.all_passed();
    runs.push_back({{"fractal", s.name()}, {"fractal_hash", fractal_hash(s)}, {"passed", rep.all_passed()}, {"failures", rep.failures()},
                    {"checks", rep.to_json()}});
    config = ctx.config();
  }
  config["fractal"] = fractal_given ? c.fractal : "catalog";
  config.erase("fractal_hash");
  config["parameters"] = {{"functions", opt.functions}, {"samples", opt.samples}};
  ordered_json doc;
  doc["config"] = config;
  doc["passed"] = ok;
  doc["runs"] = runs;
  const std::string text = doc.dump(2) + "\n";
  if (c.output.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(c.output + ".json", std::ios::binary);
    if (!f) throw Error("cannot write " + c.output + ".json");
    f << text;
  }
  for (const auto& run : runs)
    std::cerr << run["fractal"].get<std::string>() << ": " << (run["passed"].get<bool>() ? "pass" : "FAIL") << " ("
              << run["failures"].get<std::size_t>() << " failures)\n";
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Analysis on nested fractals: harmonic structures, energy measures, Poincare and Sobolev diagnostics"};
  app.set_version_flag("--version", std::string(NESTFRAC_VERSION));
  app.require_subcommand(1);

  Common common;
  const auto add_common = [&](CLI::App* sub) {
    return sub->add_option("fractal,--fractal", common.fractal, "catalog name or JSON file (also looked up in $NESTFRAC_CATALOG_DIR)");
  };
  const auto add_io = [&](CLI::App* sub) {
    sub->add_option("-o,--output", common.output, "output file prefix; stdout when omitted");
    sub->add_option("--seed", common.seed, "random seed");
  };

  double tol = 1e-13;
  int max_iter = 10000;
  auto* structure = app.add_subcommand("structure", "solve the renormalization problem");
  add_common(structure);
  add_io(structure);
  structure->add_option("--tol", tol, "fixed-point tolerance")->check(CLI::PositiveNumber);
  structure->add_option("--max-iter", max_iter, "iteration cap")->check(CLI::Range(1, 10000000));

  std::string boundary, boundary_file;
  int level = 2;
  auto* harmonic = app.add_subcommand("harmonic", "harmonic extension of boundary values to V^(n)");
  add_common(harmonic);
  add_io(harmonic);
  harmonic->add_option("--boundary", boundary, "comma-separated values on V0 (sorted order)");
  harmonic->add_option("--boundary-file", boundary_file, "file with the values on V0");
  harmonic->add_option("--level", level, "lattice level n")->check(CLI::Range(0, 12));

  auto* kusuoka = app.add_subcommand("kusuoka", "Kusuoka masses and Z spectra per cell");
  add_common(kusuoka);
  add_io(kusuoka);
  kusuoka->add_option("--level", level, "cell level m")->check(CLI::Range(0, 12));

  auto* gradient = app.add_subcommand("gradient", "level-m gradients of a harmonic function");
  add_common(gradient);
  add_io(gradient);
  gradient->add_option("--boundary", boundary, "comma-separated values on V0 (sorted order)");
  gradient->add_option("--boundary-file", boundary_file, "file with the values on V0");
  gradient->add_option("--level", level, "cell level m")->check(CLI::Range(0, 12));

  PoincareArgs pa;
  auto* poincare = app.add_subcommand("poincare", "Poincare ratio sweep over random harmonic functions");
  add_common(poincare);
  add_io(poincare);
  poincare->add_option("--kind", pa.kind, "inequality")->check(CLI::IsMember({"local", "simplex", "pointwise", "ball"}));
  poincare->add_option("--level", pa.level, "largest simplex level")->check(CLI::Range(0, 10));
  poincare->add_option("--quad-level", pa.quad_level, "quadrature level")->check(CLI::Range(1, 12));
  poincare->add_option("--samples", pa.samples, "number of random functions (and pairs)")->check(CLI::Range(1, 100000));
  poincare->add_option("--radii", pa.radii, "number of ball radii in [0.05, 0.5]")->check(CLI::Range(1, 1000));

  SobolevArgs sa;
  auto* sobolev = app.add_subcommand("sobolev", "Besov-type seminorm profile a_m");
  add_common(sobolev);
  add_io(sobolev);
  sobolev->add_option("--p", sa.p, "integrability exponent")->check(CLI::Range(1.0, 1e6));
  sobolev->add_option("--sigma", sa.sigma, "smoothness (default d_w/2)")->check(CLI::NonNegativeNumber);
  sobolev->add_option("--m-max", sa.m_max, "largest scale index")->check(CLI::Range(0, 10));
  sobolev->add_option("--c0", sa.c0, "proximity constant (default: Property (P) alpha)")->check(CLI::PositiveNumber);
  sobolev->add_option("--quad-offset", sa.quad_offset, "quadrature level minus m")->check(CLI::Range(2, 10));
  sobolev->add_option("--boundary", sa.boundary, "harmonic function boundary values (default: random from seed)");

  int n_check = 5, pp_samples = 10000;
  auto* propp = app.add_subcommand("check-property-p", "Property (P) constant and empirical check");
  add_common(propp);
  add_io(propp);
  propp->add_option("--n-check", n_check, "largest level checked")->check(CLI::Range(1, 12));
  propp->add_option("--samples", pp_samples, "sampled pairs per level")->check(CLI::Range(0, 10000000));

  SelftestOptions so;
  auto* selftest = app.add_subcommand("selftest", "run the invariant suite");
  auto* selftest_fractal = add_common(selftest);
  add_io(selftest);
  selftest->add_option("--functions", so.functions, "random functions per family")->check(CLI::Range(1, 1000));
  selftest->add_option("--samples", so.samples, "sampled points per check")->check(CLI::Range(4, 100000));

  if (argc <= 1) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  so.seed = common.seed;

  try {
    if (*structure) return cmd_structure(common, tol, max_iter);
    if (*harmonic) return cmd_harmonic(common, boundary, boundary_file, level);
    if (*kusuoka) return cmd_kusuoka(common, level);
    if (*gradient) return cmd_gradient(common, boundary, boundary_file, level);
    if (*poincare) return cmd_poincare(common, pa);
    if (*sobolev) return cmd_sobolev(common, sa);
    if (*propp) return cmd_property_p(common, n_check, pp_samples);
    if (*selftest) return cmd_selftest(common, selftest_fractal->count() > 0, so);
  } catch (const InvalidArgument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const DepthExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
