#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "eptrecon/constants.hpp"
#include "eptrecon/grid.hpp"
#include "eptrecon/linsolve.hpp"
#include "eptrecon/operators.hpp"

namespace eptrecon {

struct InitConfig {
  double rho_fraction = 0.05;
  double tau_D = 0.05;
  std::size_t dilate = 1;          // nodes added around D
  double max_D_fraction = 0.5;
  std::size_t k_max = 10;
  std::size_t k_pick = 3;
  double eps1 = 0.0;               // stop when ||γᵏ - γᵏ⁻¹||₂ <= eps1 (0 disables)
  bool stop_on_truth = false;      // simulation only: stop when ||γᵏ - γ*||₂ <= eps1
  double sigma_boundary = 0.5;     // Dirichlet σ on ∂Ω, S/m
  double omega_eps_boundary = 0.0; // Dirichlet ωε on ∂Ω, S/m
  double sigma0 = 1.0;             // starting U₀
  double omega_eps0 = 0.0;
  std::size_t collar_nodes = 2;    // layers next to the faces held at the boundary values
  double direct_guard = 1e-3;
  double sigma_min = 1e-3;         // admissibility floors applied to the output
  double eps_rel_min = 1.0;
  bool keep_snapshots = false;
  SolveOptions solve{1e-10, 0, SolverKind::direct};

  void validate() const;
};

// A + ρ e₃e₃ᵀ with ρ = rho_fraction · max A₃₃. Throws NumericalError if
// max A₃₃ = 0. The chosen ρ is written to `rho_out` when given.
SymMatrixField regularized_matrix(const SymMatrixField& A, double rho_fraction,
                                  double* rho_out = nullptr);

// D = {P_x² + P_y² < tau · max over interior nodes}, grown by `dilate` nodes.
// Throws NumericalError if D covers more than `max_fraction` of the grid.
std::vector<std::uint8_t> segment_degenerate(const SymMatrixField& A, double tau,
                                             std::size_t dilate = 1, double max_fraction = 0.5);

// Raises Re γ and Im γ to the floors; returns how many nodes changed.
std::size_t clamp_admissible(ComplexField& gamma, double re_floor, double im_floor);

// Operator ∇·(M∇u) + F₀·∇u with Dirichlet nodes where `dirichlet` is set.
// Diagonal terms use coefficients averaged to half nodes, cross terms nested
// central differences.
SparseSystem<double> assemble_semielliptic(const SymMatrixField& M, const RealVectorField& F0,
                                           const std::vector<std::uint8_t>& dirichlet,
                                           const RealField& dirichlet_values);

struct InitIterate {
  std::size_t k = 0;
  double step = 0.0;   // ||γᵏ - γᵏ⁻¹||₂
  double error = 0.0;  // ||γᵏ - γ*||₂, NaN without truth
  std::size_t solver_iterations = 0;
};

struct InitResult {
  ComplexField gamma0;        // iterate k_pick (or the last one on early stop)
  std::size_t k_chosen = 0;
  std::vector<InitIterate> history;
  std::vector<ComplexField> snapshots;  // γ¹…γᵏ when requested
  std::vector<std::uint8_t> degenerate;  // D
  double rho = 0.0;
  std::size_t clamped = 0;
  std::string solver_method;
};

// One step of the σ/ωε iteration: solve with right-hand sides F₁, F₂ built
// from (sigma_prev, omega_eps_prev). Nodes in `fixed` keep `fixed_sigma` /
// `fixed_omega_eps`.
struct SemiellipticStepper {
  SemiellipticStepper(const ComplexField& hplus, const Physics& phys, const InitConfig& cfg,
                      const std::vector<std::uint8_t>& fixed, const RealField& fixed_sigma,
                      const RealField& fixed_omega_eps);

  std::pair<RealField, RealField> step(const RealField& sigma_prev, const RealField& omega_eps_prev,
                                       SolveReport* report = nullptr) const;

  const std::string& method() const { return solver_.method(); }
  double rho() const { return rho_; }

 private:
  ComplexField hplus_;
  Physics phys_;
  PQFields pq_;
  ComplexField lap_;
  double rho_ = 0.0;
  SymMatrixField M_;
  RealVectorField F0_;
  SparseSystem<double> sys_sigma_;
  SparseSystem<double> sys_omega_eps_;
  LinearSolver<double> solver_;
};

// Runs the iteration from U₀ for up to k_max steps, filling D with the direct
// formula. `truth` only feeds the error column and the simulation-only stop.
InitResult initial_guess(const ComplexField& hplus, const Physics& phys, const InitConfig& cfg,
                         const ComplexField* truth = nullptr);

}  // namespace eptrecon
