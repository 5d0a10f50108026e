#pragma once

#include <Eigen/Core>

#include "eptrecon/constants.hpp"
#include "eptrecon/grid.hpp"

namespace eptrecon {

// Real vector fields built from first derivatives of H⁺ = H_r + iH_i:
//   P = (-∂x H_r - ∂y H_i,  ∂x H_i - ∂y H_r, -∂z H_r)
//   Q = ( ∂x H_i - ∂y H_r,  ∂x H_r + ∂y H_i,  ∂z H_i)
// so that L H⁺ = P - iQ componentwise, and P_x = -Q_y, P_y = Q_x identically.
struct PQFields {
  RealVectorField P;
  RealVectorField Q;
};

PQFields compute_PQ(const ComplexField& hplus);

// Symmetric 3x3 matrix per node.
struct SymMatrixField {
  RealField xx, xy, xz, yy, yz, zz;

  explicit SymMatrixField(const Grid3D& g) : xx(g), xy(g), xz(g), yy(g), yz(g), zz(g) {}
  const Grid3D& grid() const { return xx.grid(); }
  Eigen::Matrix3d at(std::size_t n) const;
  double entry(std::size_t n, int r, int c) const;
};

// Diffusion matrix of the σ/ωε equation, in its simplified form
//   [Px²+Py²   0          PxPz+PyQz]
//   [0         Px²+Py²    PyPz-PxQz]
//   [PxPz+PyQz PyPz-PxQz  Pz²+Qz²  ]
SymMatrixField assemble_A(const RealVectorField& P, const RealVectorField& Q);

// The same matrix written as P Pᵀ + Q Qᵀ before the P/Q identities are used.
SymMatrixField assemble_A_unsimplified(const RealVectorField& P, const RealVectorField& Q);

// F₀ = -[(∇·P) P + (∇·Q) Q].
RealVectorField compute_F0(const RealVectorField& P, const RealVectorField& Q);

struct PhiPsi {
  RealField phi;
  RealField psi;
};

// φ, ψ: the zeroth-order terms of the real/imaginary split of the first-order
// H⁺ equation. `eps` is the permittivity in F/m.
PhiPsi compute_phi_psi(const RealField& sigma, const RealField& eps, const ComplexField& hplus,
                       const Physics& phys);

// E[η] = Q·∇(P·∇η) - P·∇(Q·∇η), evaluated in the first-order form
// Σⱼ (Q·∇Pⱼ - P·∇Qⱼ) ∂ⱼη.
RealField compute_E(const RealField& eta, const RealVectorField& P, const RealVectorField& Q);
// The same operator as nested first differences.
RealField compute_E_nested(const RealField& eta, const RealVectorField& P, const RealVectorField& Q);

struct F12 {
  RealField F1;
  RealField F2;
};

//   F₁ = -P·∇φ + Q·∇ψ + E[ωε]
//   F₂ = -Q·∇φ - P·∇ψ - E[σ]
F12 compute_F1_F2(const RealField& sigma, const RealField& eps, const ComplexField& hplus,
                  const Physics& phys);
F12 compute_F1_F2(const RealField& sigma, const RealField& eps, const ComplexField& hplus,
                  const PQFields& pq, const ComplexField& lap_hplus, const Physics& phys);

// G = -(∂x v + i∂y v, -i∂x v + ∂y v, ∂z v) with v = log γ on the principal
// branch. Throws NumericalError if |γ| < floor or Re γ <= 0 anywhere.
ComplexVectorField compute_G(const ComplexField& gamma, double floor = 1e-12);

// L f = (-∂x f + i∂y f, -i∂x f - ∂y f, -∂z f).
ComplexVectorField apply_L(const ComplexField& f);

// L H⁺·(∇γ/γ) - iωμ₀γH⁺ + ΔH⁺; vanishes for a consistent (γ, H⁺) pair.
ComplexField first_order_residual(const ComplexField& gamma, const ComplexField& hplus,
                                  const Physics& phys, double floor = 1e-12);

struct EllipticResidual {
  RealField sigma_eq;
  RealField omega_eps_eq;
};

// ∇·(A∇U) + F₀·∇U - (F₁, F₂) with U = (σ, ωε), all with grid stencils.
EllipticResidual elliptic_residual(const RealField& sigma, const RealField& eps,
                                   const ComplexField& hplus, const Physics& phys);

// Directional derivative v·∇f.
RealField directional(const RealVectorField& v, const RealField& f);

}  // namespace eptrecon
