#include <gtest/gtest.h>

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "eptrecon/metrics.hpp"
#include "eptrecon/phantom.hpp"
#include "support.hpp"

using namespace eptrecon;
using namespace eptrecon::testing;

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("eptrecon_metrics_" + name);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Pixel bytes of a P5 file written by export_slice.
std::string pgm_pixels(const fs::path& p, std::size_t& w, std::size_t& h) {
  std::ifstream in(p, std::ios::binary);
  std::string magic;
  int maxval = 0;
  in >> magic >> w >> h >> maxval;
  in.get();
  EXPECT_EQ(magic, "P5");
  EXPECT_EQ(maxval, 255);
  std::string px(w * h, '\0');
  in.read(px.data(), static_cast<std::streamsize>(px.size()));
  return px;
}

}  // namespace

TEST(L2Error, Cases) {
  const Grid3D g = cube(9);
  const ComplexField a = random_smooth(g, 1);
  EXPECT_EQ(l2_error(a, a), 0.0);
  const Grid3D unit(3, 3, 3, {1.0, 1.0, 1.0}, {0.0, 0.0, 0.0});
  EXPECT_DOUBLE_EQ(l2_error(ComplexField(unit, cplx(3.0, 4.0)), ComplexField(unit)), std::sqrt(25.0 * 27));
  const ComplexField b = random_smooth(g, 2);
  long double s = 0;
  for (std::size_t n = 0; n < g.size(); ++n) s += std::norm(a[n] - b[n]);
  EXPECT_NEAR(l2_error(a, b), std::sqrt(static_cast<double>(s * g.node_volume())), 1e-14);
  EXPECT_DOUBLE_EQ(l2_error(a, b), l2_error(b, a));
}

TEST(L2Error, RegionAndEmptyRegion) {
  const Grid3D g = cube(5);
  ComplexField a(g), b(g);
  a[g.index(2, 2, 2)] = 1.0;
  Mask m(g.size(), 0);
  EXPECT_THROW(l2_error(a, b, &m), std::invalid_argument);
  m[g.index(1, 1, 1)] = 1;
  EXPECT_EQ(l2_error(a, b, &m), 0.0);
  m[g.index(2, 2, 2)] = 1;
  EXPECT_DOUBLE_EQ(l2_error(a, b, &m), std::sqrt(g.node_volume()));
  EXPECT_DOUBLE_EQ(l2_error(real_part(a), real_part(b), &m), std::sqrt(g.node_volume()));
}

TEST(AnomalyAccuracy, Cases) {
  const Grid3D g = cube(7);
  const ComplexField truth = zip(random_smooth(g, 3), random_smooth(g, 3), [](cplx a, cplx) { return a + 2.0; });
  Mask S(g.size(), 0);
  for (std::size_t n = 0; n < g.size(); n += 3) S[n] = 1;
  EXPECT_NEAR(anomaly_accuracy(truth, truth, S), 0.0, 1e-15);
  const ComplexField scaled = zip(truth, truth, [](cplx a, cplx) { return 1.1 * a; });
  EXPECT_NEAR(anomaly_accuracy(scaled, truth, S), 0.1, 1e-14);
  EXPECT_THROW(anomaly_accuracy(truth, truth, Mask(g.size(), 0)), std::invalid_argument);
}

TEST(Slice, ConstantFieldIsUniformGray) {
  const fs::path d = scratch("const");
  const Grid3D g = cube(9);
  export_slice(RealField(g, 0.7), 4, d / "c.pgm", SliceFormat::pgm);
  std::size_t w = 0, h = 0;
  const std::string px = pgm_pixels(d / "c.pgm", w, h);
  EXPECT_EQ(w, 9u);
  EXPECT_EQ(h, 9u);
  for (char c : px) EXPECT_EQ(static_cast<unsigned char>(c), 128);
  EXPECT_TRUE(fs::exists(d / "c.pgm.json"));
}

TEST(Slice, WindowAndNonFinite) {
  const fs::path d = scratch("window");
  const Grid3D g = cube(5);
  RealField f = sample_fn<double>(g, [](double x, double, double) { return x; });
  f[g.index(0, 0, 2)] = std::numeric_limits<double>::quiet_NaN();
  const SliceWindow w = export_slice(f, 2, d / "s.pgm", SliceFormat::pgm);
  EXPECT_DOUBLE_EQ(w.lo, -0.1);
  EXPECT_DOUBLE_EQ(w.hi, 0.1);
  std::size_t nx = 0, ny = 0;
  const std::string px = pgm_pixels(d / "s.pgm", nx, ny);
  // Bottom-left pixel is (i, j) = (0, 0); the top row is the largest y.
  EXPECT_EQ(static_cast<unsigned char>(px[(ny - 1) * nx]), 0);
  EXPECT_EQ(static_cast<unsigned char>(px[0]), 1);
  EXPECT_EQ(static_cast<unsigned char>(px[nx - 1]), 255);
  // A fixed window clamps.
  export_slice(f, 2, d / "t.pgm", SliceFormat::pgm, SliceWindow{0.0, 0.05});
  const std::string pt = pgm_pixels(d / "t.pgm", nx, ny);
  EXPECT_EQ(static_cast<unsigned char>(pt[0]), 1);
  EXPECT_EQ(static_cast<unsigned char>(pt[nx - 1]), 255);
  EXPECT_THROW(export_slice(f, 5, d / "u.pgm", SliceFormat::pgm), std::out_of_range);
}

TEST(Slice, CsvRoundTripIsExact) {
  const fs::path d = scratch("csv");
  const Grid3D g = cube(7);
  const RealField f = real_part(random_smooth(g, 5));
  export_slice(f, 3, d / "s.csv", SliceFormat::csv);
  const auto rows = read_slice_csv(d / "s.csv");
  ASSERT_EQ(rows.size(), g.ny());
  for (std::size_t j = 0; j < g.ny(); ++j) {
    ASSERT_EQ(rows[j].size(), g.nx());
    for (std::size_t i = 0; i < g.nx(); ++i) EXPECT_EQ(rows[j][i], f.at(i, j, 3));
  }
}

TEST(Slice, ExportIsDeterministic) {
  const fs::path d = scratch("det");
  const Grid3D g = cube(17);
  const RealField f = real_part(random_smooth(g, 6));
  export_slice(f, 8, d / "a.pgm", SliceFormat::pgm);
  export_slice(f, 8, d / "b.pgm", SliceFormat::pgm);
  EXPECT_EQ(slurp(d / "a.pgm"), slurp(d / "b.pgm"));
  EXPECT_EQ(slurp(d / "a.pgm.json"), slurp(d / "b.pgm.json"));
}

TEST(Slice, Model1SliceCarriesTableValues) {
  const fs::path d = scratch("model1");
  PhantomDocument doc = load_phantom_document(EPTRECON_SOURCE_DIR "/configs/model1.json");
  doc.phantom.smoothing = 0.0;
  const Grid3D g = doc.grid.grid();
  const Admittivity a = sample(doc.phantom, g, doc.physics);
  export_slice(a.sigma, g.nz() / 2, d / "s.csv", SliceFormat::csv);
  std::set<double> seen;
  for (const auto& row : read_slice_csv(d / "s.csv")) seen.insert(row.begin(), row.end());
  std::set<double> table{doc.phantom.background.sigma};
  for (const Shape& s : doc.phantom.shapes) table.insert(s.material.sigma);
  EXPECT_EQ(seen, table);
}

TEST(ConvergenceCsv, HeaderOnlyAndRoundTrip) {
  const fs::path d = scratch("conv");
  write_convergence_csv(d / "empty.csv", {});
  EXPECT_EQ(slurp(d / "empty.csv"), std::string(kConvergenceHeader) + "\n");
  EXPECT_TRUE(read_convergence_csv(d / "empty.csv").empty());

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const std::vector<ConvergenceRow> rows{{0, nan, 0.1234567890123456, 2.5e-7, 0.3},
                                         {1, 1.0 / 3.0, 0.1, 1e-300, nan},
                                         {2, 0.0, nan, 0.0, 0.05}};
  write_convergence_csv(d / "c.csv", rows);
  const auto back = read_convergence_csv(d / "c.csv");
  ASSERT_EQ(back.size(), rows.size());
  const auto same = [](double a, double b) { return (std::isnan(a) && std::isnan(b)) || a == b; };
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(back[i].n, rows[i].n);
    EXPECT_TRUE(same(back[i].step, rows[i].step));
    EXPECT_TRUE(same(back[i].error, rows[i].error));
    EXPECT_TRUE(same(back[i].J, rows[i].J));
    EXPECT_TRUE(same(back[i].metric, rows[i].metric));
  }
  EXPECT_NE(slurp(d / "c.csv").find("nan"), std::string::npos);
}

TEST(ConvergenceCsv, BadHeaderIsIoError) {
  const fs::path d = scratch("bad");
  std::ofstream(d / "x.csv") << "n,J\n1,2\n";
  EXPECT_THROW(read_convergence_csv(d / "x.csv"), IoError);
  EXPECT_THROW(read_convergence_csv(d / "missing.csv"), IoError);
}
