#pragma once

#include <cstdint>
#include <functional>

#include "eptrecon/constants.hpp"
#include "eptrecon/grid.hpp"
#include "eptrecon/linsolve.hpp"
#include "eptrecon/phantom.hpp"

namespace eptrecon {

// Dirichlet problem ΔH + G[γ]·∇H - iωμ₀γH = 0 in Ω, H = boundary_data on ∂Ω.
// Only the face values of `boundary_data` are read.
struct ForwardProblem {
  ComplexField gamma;
  ComplexField boundary_data;
};

struct ForwardSolution {
  ComplexField hplus;
  SolveReport report;
};

// Interior rows of the discrete forward operator: 7-point Laplacian, central
// first differences, G from central differences of log γ. Face nodes are
// Dirichlet and carry `boundary_data`.
SparseSystem<cplx> assemble_forward(const ComplexField& gamma, const ComplexField& boundary_data,
                                    const Physics& phys, double gamma_floor = 1e-12);

// Throws NumericalError for an inadmissible γ and SolverError when the solve
// misses `opts.tol`.
ForwardSolution solve_forward(const ForwardProblem& fp, const Physics& phys,
                              const SolveOptions& opts = {});

// R_γ δ: derivative of the discrete forward residual with respect to γ, at a
// fixed field H. Zero on faces.
ComplexField forward_residual_derivative(const ComplexField& gamma, const ComplexField& hplus,
                                         const ComplexField& delta, const Physics& phys);

// u = DH⁺[γ](δ): solves R_H u = -R_γ δ with u = 0 on ∂Ω.
ComplexField frechet_direction(const ComplexField& gamma, const ComplexField& hplus,
                               const ComplexField& delta, const Physics& phys,
                               const SolveOptions& opts = {});

// Produces Dirichlet data for a grid; only face values matter.
using BoundaryProfile = std::function<ComplexField(const Grid3D&)>;

// H⁺ = value everywhere on ∂Ω.
BoundaryProfile constant_profile(cplx value = {1.0, 0.0});

// H⁺ = value on the lateral faces; the z faces carry the z-invariant field of
// an infinitely long homogeneous body (2D solve of ΔH - iωμ₀γ_b H = 0 with the
// same lateral value), as for a long birdcage coil.
BoundaryProfile lateral_profile(cplx gamma_background, const Physics& phys, cplx value = {1.0, 0.0});

struct SynthesisOptions {
  std::size_t refine = 2;
  double noise = 0.0;  // relative to the RMS of the clean field
  std::uint64_t seed = 0;
  SolveOptions solve{};
};

struct SynthesisResult {
  ComplexField data;   // restricted (and possibly noisy) field on the recon grid
  ComplexField clean;  // restriction before noise
  SolveReport report;
};

// Solves on the grid refined `refine` times, injects back onto `grid`, then adds
// seeded complex Gaussian noise.
SynthesisResult synthesize_data(const Phantom& phantom, const Grid3D& grid, const Physics& phys,
                                const BoundaryProfile& profile, const SynthesisOptions& opts = {});

// Restriction by injection from a grid refined `factor` times.
ComplexField restrict_injection(const ComplexField& fine, const Grid3D& coarse, std::size_t factor);

// Seeded complex Gaussian noise: level * rms(f) * (n1 + i n2) / sqrt(2).
ComplexField add_noise(const ComplexField& f, double level, std::uint64_t seed);

}  // namespace eptrecon
