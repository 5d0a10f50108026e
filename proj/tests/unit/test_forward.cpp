#include <gtest/gtest.h>

#include "eptrecon/forward.hpp"
#include "eptrecon/operators.hpp"
#include "eptrecon/phantom.hpp"
#include "support.hpp"

using namespace eptrecon;
using namespace eptrecon::testing;

namespace {

constexpr cplx I{0.0, 1.0};
const Physics kPhys{};

cplx background() { return Material{0.5, 60}.admittivity(kPhys); }

// Two overlapping Gaussian bumps on the background; smooth and admissible.
ComplexField smooth_gamma(const Grid3D& g) {
  return sample_fn<cplx>(g, [](double x, double y, double z) {
    const double b1 = std::exp(-((x - 0.03) * (x - 0.03) + (y - 0.02) * (y - 0.02) + z * z) / (2 * 0.025 * 0.025));
    const double b2 = std::exp(-((x + 0.03) * (x + 0.03) + (y + 0.01) * (y + 0.01) + (z - 0.02) * (z - 0.02)) /
                               (2 * 0.02 * 0.02));
    return cplx(0.5 + 0.5 * b1 - 0.2 * b2, kPhys.omega * (60 + 20 * b1 - 15 * b2) * kPhys.eps_free);
  });
}

ComplexField plane_wave(const Grid3D& g, cplx g0) {
  const cplx k = std::sqrt(-I * kPhys.omega_mu0() * g0);
  return sample_fn<cplx>(g, [&](double x, double, double) { return std::exp(I * k * x); });
}

// Compact bump vanishing near the faces.
ComplexField bump(const Grid3D& g, cplx amp) {
  return sample_fn<cplx>(g, [&](double x, double y, double z) {
    const double r2 = (x - 0.01) * (x - 0.01) + y * y + (z + 0.01) * (z + 0.01);
    return amp * std::exp(-r2 / (2 * 0.02 * 0.02));
  });
}

}  // namespace

TEST(Forward, PlaneWaveSecondOrder) {
  const cplx g0{1.0, kPhys.omega * 80 * kPhys.eps_free};
  double prev = 0;
  for (std::size_t n : {17, 33}) {
    const Grid3D g = cube(n);
    const ComplexField exact = plane_wave(g, g0);
    const ForwardSolution fs = solve_forward({ComplexField(g, g0), exact}, kPhys);
    const double e = max_diff(fs.hplus, exact);
    if (prev > 0) EXPECT_GE(prev / e, 3.5);
    prev = e;
  }
}

TEST(Forward, ZeroBoundaryGivesZero) {
  const Grid3D g = cube(9);
  const ForwardSolution fs = solve_forward({smooth_gamma(g), ComplexField(g)}, kPhys);
  EXPECT_EQ(max_abs(fs.hplus), 0.0);
}

TEST(Forward, BoundaryDataReproduced) {
  const Grid3D g = cube(11);
  const ComplexField bc = random_smooth(g, 5);
  const ForwardSolution fs = solve_forward({smooth_gamma(g), bc}, kPhys);
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.on_face(n)) EXPECT_EQ(fs.hplus[n], bc[n]);
}

// The discrete solution satisfies the first-order equation up to O(h²).
TEST(Forward, FirstOrderResidualOfSolution) {
  double prev = 0;
  for (std::size_t n : {17, 33}) {
    const Grid3D g = cube(n);
    const ComplexField gam = smooth_gamma(g);
    const ForwardSolution fs =
        solve_forward({gam, lateral_profile(background(), kPhys)(g)}, kPhys, SolveOptions{1e-12});
    const ComplexField r = first_order_residual(gam, fs.hplus, kPhys);
    const std::size_t f = (n - 1) / 16;
    double m = 0;
    for (std::size_t k = 2; k <= 14; ++k)
      for (std::size_t j = 2; j <= 14; ++j)
        for (std::size_t i = 2; i <= 14; ++i) m = std::max(m, std::abs(r.at(i * f, j * f, k * f)));
    if (prev > 0) EXPECT_GE(prev / m, 3.0);
    prev = m;
  }
}

TEST(Forward, RejectsInadmissibleGamma) {
  const Grid3D g = cube(7);
  ComplexField gam(g, background());
  gam[g.index(3, 3, 3)] = cplx(-0.1, 0.0);
  EXPECT_THROW(solve_forward({gam, ComplexField(g, 1.0)}, kPhys), NumericalError);
}

TEST(Profiles, LateralProfileShape) {
  const Grid3D g = cube(17);
  const ComplexField b = lateral_profile(background(), kPhys)(g);
  // Unit on the lateral faces, z-invariant, and not constant on the z faces.
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto [i, j, k] = g.ijk(n);
    if (i == 0 || j == 0 || i + 1 == g.nx() || j + 1 == g.ny()) EXPECT_EQ(b[n], cplx(1.0));
    EXPECT_EQ(b[n], b.at(i, j, 0));
  }
  EXPECT_GT(std::abs(b.at(8, 8, 0) - cplx(1.0)), 1e-3);
  const ComplexField c = constant_profile(cplx(2.0, 1.0))(g);
  EXPECT_EQ(max_diff(c, ComplexField(g, cplx(2.0, 1.0))), 0.0);
}

TEST(Synthesis, RefineOneMatchesDirectSolve) {
  const Grid3D g = cube(9);
  Model1Config c;
  c.domain = domain_of(g);
  c.background = {0.5, 60};
  const Phantom p = build_model1(c);
  SynthesisOptions so;
  so.refine = 1;
  const SynthesisResult s = synthesize_data(p, g, kPhys, constant_profile(), so);
  const ForwardSolution fs = solve_forward({sample(p, g, kPhys).gamma(), ComplexField(g, 1.0)}, kPhys);
  EXPECT_EQ(s.data.data(), fs.hplus.data());
  EXPECT_EQ(s.clean.data(), s.data.data());
}

// Injected fine-grid data differ from the coarse solve by O(h²).
TEST(Synthesis, RefinedHomogeneousDataCloseToCoarse) {
  double prev = 0;
  for (std::size_t n : {9, 17}) {
    const Grid3D g = cube(n);
    Model1Config c;
    c.domain = domain_of(g);
    c.background = {0.5, 60};
    const Phantom p = build_model1(c);
    SynthesisOptions one, two;
    one.refine = 1;
    two.refine = 2;
    const double d = max_diff(synthesize_data(p, g, kPhys, constant_profile(), one).data,
                              synthesize_data(p, g, kPhys, constant_profile(), two).data);
    if (prev > 0) EXPECT_GE(prev / d, 3.0);
    prev = d;
  }
}

TEST(Synthesis, NoiseLevelAndSeeding) {
  const Grid3D g = cube(17);
  const ComplexField clean = random_smooth(g, 1);
  double norm_clean = 0;
  for (const cplx& v : clean.data()) norm_clean += std::norm(v);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ComplexField noisy = add_noise(clean, 0.01, seed);
    double nd = 0;
    for (std::size_t n = 0; n < g.size(); ++n) nd += std::norm(noisy[n] - clean[n]);
    const double rel = std::sqrt(nd / norm_clean);
    EXPECT_GE(rel, 0.008);
    EXPECT_LE(rel, 0.012);
    EXPECT_EQ(add_noise(clean, 0.01, seed).data(), noisy.data());
  }
  EXPECT_NE(add_noise(clean, 0.01, 1).data(), add_noise(clean, 0.01, 2).data());
  EXPECT_EQ(add_noise(clean, 0.0, 3).data(), clean.data());
  EXPECT_THROW(add_noise(clean, -1.0, 0), ConfigError);
}

TEST(Frechet, ZeroAndLinear) {
  const Grid3D g = cube(11);
  const ComplexField gam = smooth_gamma(g);
  const ComplexField h = solve_forward({gam, ComplexField(g, 1.0)}, kPhys).hplus;
  EXPECT_EQ(max_abs(frechet_direction(gam, h, ComplexField(g), kPhys)), 0.0);
  const ComplexField d1 = bump(g, cplx(0.1, 0.05)), d2 = bump(g, cplx(-0.03, 0.2));
  const ComplexField u1 = frechet_direction(gam, h, d1, kPhys);
  const ComplexField u2 = frechet_direction(gam, h, d2, kPhys);
  const ComplexField u12 = frechet_direction(gam, h, zip(d1, d2, [](cplx a, cplx b) { return 2.0 * a + b; }), kPhys);
  const ComplexField sum = zip(u1, u2, [](cplx a, cplx b) { return 2.0 * a + b; });
  EXPECT_LT(max_diff(u12, sum), 1e-9 * max_abs(sum));
}

// ‖H[γ+tδ] - H[γ] - t u‖ shrinks like t².
TEST(Frechet, FiniteDifferenceOrder) {
  const Grid3D g = cube(11);
  const ComplexField gam = smooth_gamma(g);
  const ComplexField bc = lateral_profile(background(), kPhys)(g);
  const SolveOptions tight{1e-13};
  const ComplexField h = solve_forward({gam, bc}, kPhys, tight).hplus;
  const ComplexField d = bump(g, cplx(0.3, 0.2));
  const ComplexField u = frechet_direction(gam, h, d, kPhys, tight);
  double gnorm = 0;
  for (const cplx& v : gam.data()) gnorm = std::max(gnorm, std::abs(v));
  std::vector<double> ratio;
  for (double t : {1e-2, 1e-3, 1e-4}) {
    const double s = t * gnorm;
    const ComplexField gp = zip(gam, d, [&](cplx a, cplx b) { return a + s * b; });
    const ComplexField hp = solve_forward({gp, bc}, kPhys, tight).hplus;
    double rem = 0;
    for (std::size_t n = 0; n < g.size(); ++n) rem = std::max(rem, std::abs(hp[n] - h[n] - s * u[n]));
    ratio.push_back(rem / s);
  }
  EXPECT_LT(ratio[1], 0.2 * ratio[0]);
  EXPECT_LT(ratio[2], 0.2 * ratio[1]);
}
