#include <gtest/gtest.h>

#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include "eptrecon/phantom.hpp"
#include "support.hpp"

using namespace eptrecon;
using namespace eptrecon::testing;

namespace {

const Material kBackground{0.5, 60};
const Material kA{1.0, 80};

Shape cylinder(double cx, double cy, double r, Material m) {
  Shape s;
  s.kind = ShapeKind::cylinder;
  s.center = {cx, cy, 0};
  s.radius = r;
  s.material = m;
  return s;
}

Model1Config model1_with(std::vector<Shape> shapes, const Grid3D& g) {
  Model1Config c;
  c.domain = domain_of(g);
  c.background = kBackground;
  c.anomalies = std::move(shapes);
  return c;
}

std::string read_file(const std::string& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool slices_equal(const RealField& f, std::size_t k1, std::size_t k2) {
  const Grid3D& g = f.grid();
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i)
      if (f.at(i, j, k1) != f.at(i, j, k2)) return false;
  return true;
}

}  // namespace

TEST(Phantom, HomogeneousSamplesConstant) {
  const Grid3D g = cube(9);
  const Physics ph;
  const Admittivity a = sample(build_model1(model1_with({}, g)), g, ph);
  EXPECT_EQ(max_diff(a.sigma, RealField(g, 0.5)), 0.0);
  EXPECT_LT(max_diff(a.eps, RealField(g, 60 * ph.eps_free)), 1e-25);
  const ComplexField gam = a.gamma();
  EXPECT_LT(max_diff(gam, ComplexField(g, kBackground.admittivity(ph))), 1e-15);
}

TEST(Phantom, Model1IsZInvariant) {
  const Grid3D g = cube(17);
  const Phantom p = build_model1(model1_with({cylinder(0.03, 0.02, 0.025, kA)}, g));
  const Admittivity a = sample(p, g);
  for (std::size_t k = 1; k < g.nz(); ++k) EXPECT_TRUE(slices_equal(a.sigma, 0, k));
}

TEST(Phantom, Model1RejectsZDependentAnomaly) {
  const Grid3D g = cube(9);
  Shape s = cylinder(0.0, 0.0, 0.02, kA);
  s.z_range = ZRange{-0.02, 0.02};
  EXPECT_THROW(build_model1(model1_with({s}, g)), ConfigError);
}

TEST(Phantom, SharpSliceCarriesConfiguredValues) {
  const Grid3D g = cube(33);
  const Phantom p = build_model1(
      model1_with({cylinder(0.04, 0.03, 0.02, kA), cylinder(-0.04, -0.02, 0.02, Material{0.2, 40})}, g));
  const Admittivity a = sample(p, g);
  std::set<double> values(a.sigma.data().begin(), a.sigma.data().end());
  EXPECT_EQ(values, (std::set<double>{0.2, 0.5, 1.0}));
}

TEST(Phantom, CollarCarriesBackground) {
  const Grid3D g = cube(17);
  Model1Config c = model1_with({cylinder(0.0, 0.0, 0.08, kA)}, g);
  c.collar_d = 2 * g.h(Axis::x);
  // A cylinder reaching into the collar is rejected; shrink it to sit inside.
  EXPECT_THROW(build_model1(c), ConfigError);
  c.anomalies[0].radius = 0.07;
  const Admittivity a = sample(build_model1(c), g);
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.face_distance(n) <= 2) EXPECT_EQ(a.sigma[n], 0.5);
}

TEST(Phantom, CylinderVolumeFraction) {
  const Grid3D g = cube(65);
  const double r = 0.04;
  const Phantom p = build_model1(model1_with({cylinder(0.01, -0.01, r, kA)}, g));
  const auto S = anomaly_support(p, g);
  double count = 0;
  for (auto v : S) count += v;
  const double frac = count / static_cast<double>(g.size());
  const double analytic = std::numbers::pi * r * r / (0.2 * 0.2);
  EXPECT_NEAR(frac / analytic, 1.0, 0.05);
}

TEST(Phantom, Model2IdenticalHalvesIsModel1) {
  const Grid3D g = cube(17);
  const std::vector<Shape> shapes{cylinder(0.03, 0.02, 0.025, kA)};
  Model2Config m2;
  m2.domain = domain_of(g);
  m2.background = kBackground;
  m2.lower = shapes;
  m2.upper = shapes;
  EXPECT_EQ(sample(build_model2(m2), g).sigma.data(), sample(build_model1(model1_with(shapes, g)), g).sigma.data());
}

TEST(Phantom, Model2UpperOnlyLeavesLowerHalfUntouched) {
  const Grid3D g = cube(17);
  const std::vector<Shape> lower{cylinder(0.03, 0.02, 0.025, kA)};
  Shape up;
  up.kind = ShapeKind::sphere;
  up.center = {-0.03, -0.03, 0.04};
  up.radius = 0.02;
  up.material = Material{1.5, 50};
  Model2Config m2;
  m2.domain = domain_of(g);
  m2.background = kBackground;
  m2.lower = lower;
  m2.upper = lower;
  m2.upper.push_back(up);
  const RealField s2 = sample(build_model2(m2), g).sigma;
  const RealField s1 = sample(build_model1(model1_with(lower, g)), g).sigma;
  for (std::size_t k = 0; k < g.nz() / 2; ++k)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) EXPECT_EQ(s2.at(i, j, k), s1.at(i, j, k));
}

TEST(Phantom, StockModel2DiffersAcrossMidplane) {
  const PhantomDocument doc = load_phantom_document(EPTRECON_SOURCE_DIR "/configs/model2.json");
  ASSERT_EQ(doc.model, "model2");
  const Grid3D g = doc.grid.grid();
  const ComplexField gam = sample(doc.phantom, g, doc.physics).gamma();
  const std::size_t k0 = g.nz() / 2;
  double jump = 0;
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) jump = std::max(jump, std::abs(gam.at(i, j, k0 - 1) - gam.at(i, j, k0)));
  EXPECT_GT(jump, 0.0);
}

TEST(Phantom, StockConfigsAdmissibleAndRoundTrip) {
  for (const char* name : {"/configs/model1.json", "/configs/model2.json"}) {
    const PhantomDocument doc = load_phantom_document(std::string(EPTRECON_SOURCE_DIR) + name);
    const Admittivity a = sample(doc.phantom, doc.grid.grid(), doc.physics);
    EXPECT_NO_THROW(check_admissible(a));
    const PhantomDocument again = parse_phantom_document(phantom_document_to_json(doc));
    EXPECT_EQ(sample(again.phantom, again.grid.grid(), again.physics).sigma.data(), a.sigma.data());
  }
}

TEST(Phantom, StockModel1SharpHistogramMatchesTable) {
  PhantomDocument doc = load_phantom_document(EPTRECON_SOURCE_DIR "/configs/model1.json");
  doc.phantom.smoothing = 0.0;
  const Admittivity a = sample(doc.phantom, doc.grid.grid(), doc.physics);
  std::set<double> values(a.sigma.data().begin(), a.sigma.data().end());
  std::set<double> table{doc.phantom.background.sigma};
  for (const Shape& s : doc.phantom.shapes) table.insert(s.material.sigma);
  EXPECT_EQ(values, table);
}

TEST(PhantomConfig, SyntaxErrorReportsLine) {
  try {
    parse_phantom_document("{\n  \"model\": \"model1\",\n  \"grid\": [1,\n}");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(PhantomConfig, SchemaViolationsNamed) {
  std::string text = read_file(EPTRECON_SOURCE_DIR "/configs/model1.json");
  const auto at = text.find("\"sigma\": 1.0");
  ASSERT_NE(at, std::string::npos);
  std::string bad = text;
  bad.replace(at, 12, "\"sigma\": -1.0");
  EXPECT_THROW(parse_phantom_document(bad), ConfigError);
  std::string unknown = text;
  unknown.replace(unknown.find("\"model\""), 7, "\"modell\"");
  EXPECT_THROW(parse_phantom_document(unknown), ConfigError);
}

TEST(PhantomConfig, InadmissibleMaterialRejected) {
  EXPECT_THROW(Material({-0.1, 60}).validate("m"), ConfigError);
  EXPECT_THROW(Material({0.5, 0.5}).validate("m"), ConfigError);
}
