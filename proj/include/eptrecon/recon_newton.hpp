#pragma once

#include <cstdint>
#include <vector>

#include "eptrecon/constants.hpp"
#include "eptrecon/grid.hpp"
#include "eptrecon/linsolve.hpp"
#include "eptrecon/metrics.hpp"

namespace eptrecon {

struct NewtonConfig {
  std::size_t n_max = 10;
  double eps2 = 0.0;         // stop when ||γₙ - γₙ₋₁||₂ <= eps2 (0 disables)
  bool stop_on_truth = false;  // simulation only: stop when ||γₙ - γ*||₂ <= eps2
  double beta = 1.0;         // damping on the update, (0, 1]
  bool freeze_collar = true;
  std::size_t collar_nodes = 2;  // face distance, in nodes, of the frozen layer
  std::size_t stagnation = 3;    // consecutive J increases before giving up
  double sigma_min = 1e-3;
  double eps_rel_min = 1.0;
  bool keep_iterates = false;
  SolveOptions solve{};

  void validate() const;
};

struct NewtonRow {
  std::size_t n = 0;
  double J = 0.0;
  double step = 0.0;
  double error = 0.0;   // NaN without truth
  double metric = 0.0;  // NaN without truth and support
  double grad_norm = 0.0;
  std::size_t clamped = 0;
  std::size_t solver_iterations = 0;
};

struct ReconResult {
  ComplexField gamma;   // final iterate (best J when stagnation stopped the run)
  ComplexField hplus;   // H⁺[gamma]
  double J0 = 0.0;
  double error0 = 0.0;
  double metric0 = 0.0;
  std::vector<NewtonRow> history;  // rows n = 1, 2, ...
  std::vector<ComplexField> iterates;
  std::vector<SolveReport> reports;
  bool stagnated = false;
  std::size_t best_n = 0;
  std::string stop_reason;
};

// ½ Σ |h_model - h_meas|² hxhyhz.
double misfit(const ComplexField& h_model, const ComplexField& h_meas);

// Nodes the update may touch: face distance greater than `collar_nodes`.
Mask active_region(const Grid3D& grid, std::size_t collar_nodes);

// Adjoint state of the discrete forward operator: Rᵀp = conj(h_model - h_meas)
// at interior nodes, p = 0 on ∂Ω.
ComplexField solve_adjoint(const ComplexField& gamma, const ComplexField& h_model,
                           const ComplexField& h_meas, const Physics& phys,
                           const SolveOptions& opts = {});

// g = (1/γ) ∇·(p L H⁺) + iωμ₀ H⁺ p.
ComplexField compute_g(const ComplexField& gamma, const ComplexField& h_model, const ComplexField& p,
                       const Physics& phys, double floor = 1e-12);

// DJ[γ](δ) = Re Σ δ g hxhyhz.
double compute_DJ(const ComplexField& delta, const ComplexField& g);
double compute_DJ(const ComplexField& gamma, const ComplexField& delta, const ComplexField& p,
                  const ComplexField& h_model, const Physics& phys);

// Σ |g|² hxhyhz.
double g_norm2(const ComplexField& g);

// γ - β (J/||g||²) conj(g) on `active` nodes. Throws NumericalError when
// g vanishes on the active set while J > 0.
ComplexField newton_step(const ComplexField& gamma, const ComplexField& g, double J,
                         const Mask& active, double beta = 1.0);

// Forward → misfit → adjoint → g → update, n_max times. `truth` and `support`
// only feed the recorded metrics (and the simulation-only stop).
ReconResult run_newton(const ComplexField& gamma0, const ComplexField& h_meas, const Physics& phys,
                       const NewtonConfig& cfg, const ComplexField* truth = nullptr,
                       const Mask* support = nullptr);

}  // namespace eptrecon
