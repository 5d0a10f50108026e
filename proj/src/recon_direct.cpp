#include "eptrecon/recon_direct.hpp"

#include <cmath>
#include <limits>

namespace eptrecon {

DirectResult direct_reconstruct(const ComplexField& hplus, const Physics& phys, double guard) {
  if (!all_finite(hplus)) throw NumericalError("direct_reconstruct: H+ is not finite");
  const Grid3D& g = hplus.grid();
  double hmax = 0.0;
  for (const cplx& v : hplus.data()) hmax = std::max(hmax, std::abs(v));
  const ComplexField lap = laplacian(hplus);
  const cplx iwm{0.0, phys.omega_mu0()};
  const double nan = std::numeric_limits<double>::quiet_NaN();

  DirectResult out{ComplexField(g), std::vector<std::uint8_t>(g.size(), 0), RealField(g), RealField(g)};
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (!(std::abs(hplus[n]) >= guard * hmax) || hmax == 0.0) {
      out.mask[n] = 1;
      out.gamma[n] = {nan, nan};
    } else {
      out.gamma[n] = lap[n] / (iwm * hplus[n]);
    }
    out.sigma[n] = out.gamma[n].real();
    out.eps[n] = out.gamma[n].imag() / phys.omega;
  }
  return out;
}

}  // namespace eptrecon
