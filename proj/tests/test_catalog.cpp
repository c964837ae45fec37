#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "support.hpp"

namespace nf = nestfrac;

namespace {

const char* kGasketJson = R"({
  "name": "gasket-from-file",
  "ambient_dim": 2,
  "scale_L": 2,
  "maps": [
    {"unitary": [[1, 0], [0, 1]], "translation": [0, 0]},
    {"unitary": [1, 0, 0, 1], "translation": [1, 0]},
    {"unitary": [[1, 0], [0, 1]], "translation": [0.5, 0.8660254037844386]}
  ],
  "symmetry_generators": [[1, 0, 2], [0, 2, 1]]
})";

}  // namespace

TEST(Catalog, NamesResolve) {
  for (const auto& name : nf::catalog_names()) EXPECT_EQ(nf::load_fractal(name).name(), name);
  EXPECT_THROW(nf::load_fractal("no-such-fractal"), nf::InvalidArgument);
}

TEST(Catalog, JsonDefinitionMatchesBuiltInGasket) {
  // Translations are given for side 2 and normalized on load.
  const auto s = nf::parse_fractal(nlohmann::json::parse(kGasketJson));
  EXPECT_EQ(s.name(), "gasket-from-file");
  EXPECT_NEAR(s.boundary_diameter(), 1.0, 1e-12);
  const auto g = nf::sierpinski_gasket();
  for (int i = 0; i < 3; ++i) EXPECT_LT((s.boundary()[static_cast<std::size_t>(i)] - g.boundary()[static_cast<std::size_t>(i)]).norm(), 1e-12);
  EXPECT_NEAR(nf::solve_renormalization(s).rho(), 5.0 / 3.0, 1e-10);
}

TEST(Catalog, FileAndEnvironmentLookup) {
  const auto dir = std::filesystem::temp_directory_path() / "nestfrac_catalog_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "custom-gasket.json") << kGasketJson;
  }
  EXPECT_EQ(nf::load_fractal((dir / "custom-gasket.json").string()).name(), "gasket-from-file");
  ::setenv("NESTFRAC_CATALOG_DIR", dir.c_str(), 1);
  EXPECT_EQ(nf::load_fractal("custom-gasket").name(), "gasket-from-file");
  ::unsetenv("NESTFRAC_CATALOG_DIR");
  std::filesystem::remove_all(dir);
}

TEST(Catalog, MalformedDefinitionsRejected) {
  EXPECT_THROW(nf::parse_fractal(nlohmann::json::parse(R"({"ambient_dim": 2})")), nf::InvalidArgument);
  auto j = nlohmann::json::parse(kGasketJson);
  j["maps"][0]["unitary"] = {{1.1, 0}, {0, 1}};
  EXPECT_THROW(nf::parse_fractal(j), nf::InvalidArgument);
}

TEST(Catalog, HashIsStableAndDistinguishes) {
  EXPECT_EQ(nf::fractal_hash(nf::vicsek()), nf::fractal_hash(nf::vicsek()));
  EXPECT_NE(nf::fractal_hash(nf::vicsek()), nf::fractal_hash(nf::sierpinski_gasket()));
  EXPECT_EQ(nf::fractal_hash(nf::vicsek()).size(), 16u);
}
