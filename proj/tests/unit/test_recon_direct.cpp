#include <gtest/gtest.h>

#include "eptrecon/forward.hpp"
#include "eptrecon/phantom.hpp"
#include "eptrecon/recon_direct.hpp"
#include "support.hpp"

using namespace eptrecon;
using namespace eptrecon::testing;

namespace {

constexpr cplx I{0.0, 1.0};
const Physics kPhys{};

}  // namespace

TEST(Direct, PlaneWaveRecoversGammaSecondOrder) {
  const cplx g0{0.8, kPhys.omega * 70 * kPhys.eps_free};
  const cplx k = std::sqrt(-I * kPhys.omega_mu0() * g0);
  double prev = 0;
  for (std::size_t n : {17, 33, 65}) {
    const Grid3D g = cube(n);
    const ComplexField h = sample_fn<cplx>(g, [&](double x, double, double) { return std::exp(I * k * x); });
    const DirectResult d = direct_reconstruct(h, kPhys);
    const double e = max_diff(d.gamma, ComplexField(g, g0), 1) / std::abs(g0);
    if (prev > 0) EXPECT_GE(prev / e, 3.5);
    prev = e;
  }
}

TEST(Direct, HomogeneousPhantomWithinOnePercent) {
  const Grid3D g = cube(17);
  Model1Config c;
  c.domain = domain_of(g);
  c.background = {0.5, 60};
  const Phantom p = build_model1(c);
  const cplx g0 = c.background.admittivity(kPhys);
  const SynthesisResult s = synthesize_data(p, g, kPhys, lateral_profile(g0, kPhys));
  const DirectResult d = direct_reconstruct(s.data, kPhys);
  double worst = 0;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.face_distance(n) >= 2) worst = std::max(worst, std::abs(d.gamma[n] / g0 - 1.0));
  EXPECT_LE(worst, 0.01);
}

TEST(Direct, GuardMaskIsExactlyTheSmallNodes) {
  const Grid3D g = cube(9);
  ComplexField h = random_smooth(g, 2);
  h[g.index(4, 4, 4)] = 1e-6;
  h[g.index(2, 3, 5)] = cplx(0.0, 1e-5);
  double hmax = 0;
  for (const cplx& v : h.data()) hmax = std::max(hmax, std::abs(v));
  const double guard = 1e-3;
  const DirectResult d = direct_reconstruct(h, kPhys, guard);
  std::size_t masked = 0;
  for (std::size_t n = 0; n < g.size(); ++n) {
    const bool small = std::abs(h[n]) < guard * hmax;
    EXPECT_EQ(d.mask[n] != 0, small);
    EXPECT_EQ(std::isnan(d.gamma[n].real()), small);
    masked += d.mask[n];
  }
  EXPECT_EQ(masked, 2u);
}

TEST(Direct, SigmaEpsSplit) {
  const Grid3D g = cube(9);
  const DirectResult d = direct_reconstruct(random_smooth(g, 3), kPhys);
  for (std::size_t n = 0; n < g.size(); ++n) {
    EXPECT_EQ(d.sigma[n], d.gamma[n].real());
    EXPECT_DOUBLE_EQ(d.eps[n] * kPhys.omega, d.gamma[n].imag());
  }
}

TEST(Direct, RejectsNonFiniteData) {
  const Grid3D g = cube(5);
  ComplexField h(g, 1.0);
  h[7] = cplx(std::nan(""), 0);
  EXPECT_THROW(direct_reconstruct(h, kPhys), NumericalError);
}
