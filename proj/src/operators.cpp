#include "eptrecon/operators.hpp"

#include <cmath>
#include <sstream>

namespace eptrecon {

namespace {

constexpr cplx I{0.0, 1.0};

}  // namespace

PQFields compute_PQ(const ComplexField& hplus) {
  const Grid3D& g = hplus.grid();
  const ComplexField hx = ddx(hplus, Axis::x);
  const ComplexField hy = ddx(hplus, Axis::y);
  const ComplexField hz = ddx(hplus, Axis::z);
  PQFields pq{RealVectorField(g), RealVectorField(g)};
  for (std::size_t n = 0; n < g.size(); ++n) {
    const double rx = hx[n].real(), ix = hx[n].imag();
    const double ry = hy[n].real(), iy = hy[n].imag();
    pq.P.x()[n] = -rx - iy;
    pq.P.y()[n] = ix - ry;
    pq.P.z()[n] = -hz[n].real();
    pq.Q.x()[n] = ix - ry;
    pq.Q.y()[n] = rx + iy;
    pq.Q.z()[n] = hz[n].imag();
  }
  return pq;
}

Eigen::Matrix3d SymMatrixField::at(std::size_t n) const {
  Eigen::Matrix3d m;
  m << xx[n], xy[n], xz[n], xy[n], yy[n], yz[n], xz[n], yz[n], zz[n];
  return m;
}

double SymMatrixField::entry(std::size_t n, int r, int c) const {
  if (r > c) std::swap(r, c);
  switch (r * 3 + c) {
    case 0: return xx[n];
    case 1: return xy[n];
    case 2: return xz[n];
    case 4: return yy[n];
    case 5: return yz[n];
    case 8: return zz[n];
  }
  return 0.0;
}

SymMatrixField assemble_A(const RealVectorField& P, const RealVectorField& Q) {
  SymMatrixField A(P.grid());
  for (std::size_t n = 0; n < A.xx.size(); ++n) {
    const double px = P.x()[n], py = P.y()[n], pz = P.z()[n], qz = Q.z()[n];
    const double inplane = px * px + py * py;
    A.xx[n] = inplane;
    A.yy[n] = inplane;
    A.xy[n] = 0.0;
    A.xz[n] = px * pz + py * qz;
    A.yz[n] = py * pz - px * qz;
    A.zz[n] = pz * pz + qz * qz;
  }
  return A;
}

SymMatrixField assemble_A_unsimplified(const RealVectorField& P, const RealVectorField& Q) {
  SymMatrixField A(P.grid());
  for (std::size_t n = 0; n < A.xx.size(); ++n) {
    const double px = P.x()[n], py = P.y()[n], pz = P.z()[n];
    const double qx = Q.x()[n], qy = Q.y()[n], qz = Q.z()[n];
    A.xx[n] = px * px + qx * qx;
    A.xy[n] = px * py + qx * qy;
    A.xz[n] = px * pz + qx * qz;
    A.yy[n] = py * py + qy * qy;
    A.yz[n] = py * pz + qy * qz;
    A.zz[n] = pz * pz + qz * qz;
  }
  return A;
}

RealVectorField compute_F0(const RealVectorField& P, const RealVectorField& Q) {
  const RealField divP = divergence(P);
  const RealField divQ = divergence(Q);
  RealVectorField F0(P.grid());
  for (Axis a : kAxes)
    for (std::size_t n = 0; n < divP.size(); ++n) F0[a][n] = -(P[a][n] * divP[n] + Q[a][n] * divQ[n]);
  return F0;
}

namespace {

PhiPsi phi_psi_from(const RealField& sigma, const RealField& eps, const ComplexField& hplus,
                    const ComplexField& lap, const Physics& phys) {
  require_same_grid(sigma.grid(), hplus.grid(), "compute_phi_psi");
  require_same_grid(eps.grid(), hplus.grid(), "compute_phi_psi");
  const double w = phys.omega, wm = phys.omega_mu0();
  PhiPsi out{RealField(sigma.grid()), RealField(sigma.grid())};
  for (std::size_t n = 0; n < sigma.size(); ++n) {
    const double hr = hplus[n].real(), hi = hplus[n].imag();
    const double lr = lap[n].real(), li = lap[n].imag();
    const double s = sigma[n], ge = w * eps[n];  // ge = ωε
    out.phi[n] = wm * hi * s * s - wm * hi * ge * ge + 2.0 * wm * hr * s * ge + lr * s - li * ge;
    out.psi[n] = -wm * hr * s * s + wm * hr * ge * ge + 2.0 * wm * hi * s * ge + li * s + lr * ge;
  }
  return out;
}

}  // namespace

PhiPsi compute_phi_psi(const RealField& sigma, const RealField& eps, const ComplexField& hplus,
                       const Physics& phys) {
  return phi_psi_from(sigma, eps, hplus, laplacian(hplus), phys);
}

RealField directional(const RealVectorField& v, const RealField& f) {
  require_same_grid(v.grid(), f.grid(), "directional");
  RealField out(f.grid());
  for (Axis a : kAxes) {
    const RealField d = ddx(f, a);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += v[a][n] * d[n];
  }
  return out;
}

RealField compute_E(const RealField& eta, const RealVectorField& P, const RealVectorField& Q) {
  require_same_grid(P.grid(), eta.grid(), "compute_E");
  // The second-order part (QPᵀ - PQᵀ):∇²η is antisymmetric against a symmetric
  // Hessian and drops out, leaving Σⱼ (Q·∇Pⱼ - P·∇Qⱼ) ∂ⱼη.
  RealField out(eta.grid());
  for (Axis j : kAxes) {
    const RealField qp = directional(Q, P[j]);
    const RealField pq = directional(P, Q[j]);
    const RealField d = ddx(eta, j);
    for (std::size_t n = 0; n < out.size(); ++n) out[n] += (qp[n] - pq[n]) * d[n];
  }
  return out;
}

// Literal nested form, kept for cross-checks.
RealField compute_E_nested(const RealField& eta, const RealVectorField& P, const RealVectorField& Q) {
  const RealField p_eta = directional(P, eta);
  const RealField q_eta = directional(Q, eta);
  const RealField qp = directional(Q, p_eta);
  const RealField pq = directional(P, q_eta);
  return zip(qp, pq, [](double a, double b) { return a - b; });
}

F12 compute_F1_F2(const RealField& sigma, const RealField& eps, const ComplexField& hplus,
                  const PQFields& pq, const ComplexField& lap_hplus, const Physics& phys) {
  const PhiPsi pp = phi_psi_from(sigma, eps, hplus, lap_hplus, phys);
  const double w = phys.omega;
  const RealField omega_eps = map(eps, [w](double e) { return w * e; });
  const RealField p_phi = directional(pq.P, pp.phi);
  const RealField q_phi = directional(pq.Q, pp.phi);
  const RealField p_psi = directional(pq.P, pp.psi);
  const RealField q_psi = directional(pq.Q, pp.psi);
  const RealField e_we = compute_E(omega_eps, pq.P, pq.Q);
  const RealField e_s = compute_E(sigma, pq.P, pq.Q);
  F12 out{RealField(sigma.grid()), RealField(sigma.grid())};
  for (std::size_t n = 0; n < sigma.size(); ++n) {
    out.F1[n] = -p_phi[n] + q_psi[n] + e_we[n];
    out.F2[n] = -q_phi[n] - p_psi[n] - e_s[n];
  }
  return out;
}

F12 compute_F1_F2(const RealField& sigma, const RealField& eps, const ComplexField& hplus,
                  const Physics& phys) {
  return compute_F1_F2(sigma, eps, hplus, compute_PQ(hplus), laplacian(hplus), phys);
}

namespace {

void check_gamma(const ComplexField& gamma, double floor) {
  for (std::size_t n = 0; n < gamma.size(); ++n) {
    const cplx g = gamma[n];
    if (!(std::abs(g) >= floor) || !(g.real() > 0.0) || !std::isfinite(g.real()) ||
        !std::isfinite(g.imag())) {
      std::ostringstream msg;
      msg << "admittivity outside the admissible range at node " << n << ": gamma = " << g;
      throw NumericalError(msg.str());
    }
  }
}

}  // namespace

ComplexVectorField compute_G(const ComplexField& gamma, double floor) {
  check_gamma(gamma, floor);
  const ComplexField v = map(gamma, [](cplx g) { return std::log(g); });
  const ComplexField vx = ddx(v, Axis::x);
  const ComplexField vy = ddx(v, Axis::y);
  const ComplexField vz = ddx(v, Axis::z);
  ComplexVectorField G(gamma.grid());
  for (std::size_t n = 0; n < gamma.size(); ++n) {
    G.x()[n] = -(vx[n] + I * vy[n]);
    G.y()[n] = -(-I * vx[n] + vy[n]);
    G.z()[n] = -vz[n];
  }
  return G;
}

ComplexVectorField apply_L(const ComplexField& f) {
  const ComplexField fx = ddx(f, Axis::x);
  const ComplexField fy = ddx(f, Axis::y);
  const ComplexField fz = ddx(f, Axis::z);
  ComplexVectorField out(f.grid());
  for (std::size_t n = 0; n < f.size(); ++n) {
    out.x()[n] = -fx[n] + I * fy[n];
    out.y()[n] = -I * fx[n] - fy[n];
    out.z()[n] = -fz[n];
  }
  return out;
}

ComplexField first_order_residual(const ComplexField& gamma, const ComplexField& hplus,
                                  const Physics& phys, double floor) {
  require_same_grid(gamma.grid(), hplus.grid(), "first_order_residual");
  check_gamma(gamma, floor);
  const ComplexVectorField LH = apply_L(hplus);
  const ComplexVectorField dg = gradient(gamma);
  const ComplexField lap = laplacian(hplus);
  const double wm = phys.omega_mu0();
  ComplexField out(gamma.grid());
  for (std::size_t n = 0; n < out.size(); ++n) {
    const cplx dot = LH.x()[n] * dg.x()[n] + LH.y()[n] * dg.y()[n] + LH.z()[n] * dg.z()[n];
    out[n] = dot / gamma[n] - I * wm * gamma[n] * hplus[n] + lap[n];
  }
  return out;
}

EllipticResidual elliptic_residual(const RealField& sigma, const RealField& eps,
                                   const ComplexField& hplus, const Physics& phys) {
  const PQFields pq = compute_PQ(hplus);
  const SymMatrixField A = assemble_A(pq.P, pq.Q);
  const RealVectorField F0 = compute_F0(pq.P, pq.Q);
  const F12 rhs = compute_F1_F2(sigma, eps, hplus, pq, laplacian(hplus), phys);
  const double w = phys.omega;
  const RealField omega_eps = map(eps, [w](double e) { return w * e; });

  auto operator_of = [&](const RealField& u) {
    const RealVectorField du = gradient(u);
    RealVectorField flux(u.grid());
    for (std::size_t n = 0; n < u.size(); ++n) {
      const Eigen::Vector3d f = A.at(n) * Eigen::Vector3d(du.x()[n], du.y()[n], du.z()[n]);
      flux.x()[n] = f[0];
      flux.y()[n] = f[1];
      flux.z()[n] = f[2];
    }
    RealField out = divergence(flux);
    for (std::size_t n = 0; n < u.size(); ++n)
      out[n] += F0.x()[n] * du.x()[n] + F0.y()[n] * du.y()[n] + F0.z()[n] * du.z()[n];
    return out;
  };

  EllipticResidual r{operator_of(sigma), operator_of(omega_eps)};
  for (std::size_t n = 0; n < sigma.size(); ++n) {
    r.sigma_eq[n] -= rhs.F1[n];
    r.omega_eps_eq[n] -= rhs.F2[n];
  }
  return r;
}

}  // namespace eptrecon
