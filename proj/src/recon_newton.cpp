#include "eptrecon/recon_newton.hpp"

#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "eptrecon/forward.hpp"
#include "eptrecon/operators.hpp"
#include "eptrecon/recon_init.hpp"

namespace eptrecon {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

void NewtonConfig::validate() const {
  if (n_max < 1) throw ConfigError("newton: n_max must be >= 1");
  if (!(beta > 0.0 && beta <= 1.0)) throw ConfigError("newton: beta must lie in (0, 1]");
  if (!(eps2 >= 0.0)) throw ConfigError("newton: eps2 must be >= 0");
  if (stagnation < 1) throw ConfigError("newton: stagnation must be >= 1");
}

double misfit(const ComplexField& h_model, const ComplexField& h_meas) {
  require_same_grid(h_model.grid(), h_meas.grid(), "misfit");
  double s = 0.0;
  for (std::size_t n = 0; n < h_model.size(); ++n) s += std::norm(h_model[n] - h_meas[n]);
  return 0.5 * s * h_model.grid().node_volume();
}

Mask active_region(const Grid3D& grid, std::size_t collar_nodes) {
  Mask m(grid.size(), 0);
  for (std::size_t n = 0; n < grid.size(); ++n) m[n] = grid.face_distance(n) > collar_nodes ? 1 : 0;
  return m;
}

ComplexField solve_adjoint(const ComplexField& gamma, const ComplexField& h_model,
                           const ComplexField& h_meas, const Physics& phys, const SolveOptions& opts) {
  require_same_grid(gamma.grid(), h_model.grid(), "solve_adjoint");
  require_same_grid(gamma.grid(), h_meas.grid(), "solve_adjoint");
  const Grid3D& g = gamma.grid();
  const SparseSystem<cplx> sys = assemble_forward(gamma, ComplexField(g), phys);
  const Eigen::SparseMatrix<cplx> At = sys.matrix.transpose();
  DenseVector<cplx> b(static_cast<Eigen::Index>(sys.dimension()));
  for (std::size_t r = 0; r < sys.dimension(); ++r) {
    const std::size_t n = sys.node_of_unknown[r];
    b[static_cast<Eigen::Index>(r)] = std::conj(h_model[n] - h_meas[n]);
  }
  LinearSolver<cplx> solver(At, opts);
  return scatter(sys, solver.solve(b).x);
}

ComplexField compute_g(const ComplexField& gamma, const ComplexField& h_model, const ComplexField& p,
                       const Physics& phys, double floor) {
  require_same_grid(gamma.grid(), h_model.grid(), "compute_g");
  require_same_grid(gamma.grid(), p.grid(), "compute_g");
  const ComplexVectorField LH = apply_L(h_model);
  ComplexVectorField flux(gamma.grid());
  for (Axis a : kAxes)
    for (std::size_t n = 0; n < p.size(); ++n) flux[a][n] = p[n] * LH[a][n];
  const ComplexField div = divergence(flux);
  const double wm = phys.omega_mu0();
  ComplexField out(gamma.grid());
  for (std::size_t n = 0; n < out.size(); ++n) {
    if (!(std::abs(gamma[n]) >= floor))
      throw NumericalError("compute_g: |gamma| below floor at node " + std::to_string(n));
    out[n] = div[n] / gamma[n] + I * wm * h_model[n] * p[n];
  }
  return out;
}

double compute_DJ(const ComplexField& delta, const ComplexField& g) {
  require_same_grid(delta.grid(), g.grid(), "compute_DJ");
  double s = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n) s += (delta[n] * g[n]).real();
  return s * g.grid().node_volume();
}

double compute_DJ(const ComplexField& gamma, const ComplexField& delta, const ComplexField& p,
                  const ComplexField& h_model, const Physics& phys) {
  return compute_DJ(delta, compute_g(gamma, h_model, p, phys));
}

double g_norm2(const ComplexField& g) {
  double s = 0.0;
  for (const cplx& v : g.data()) s += std::norm(v);
  return s * g.grid().node_volume();
}

ComplexField newton_step(const ComplexField& gamma, const ComplexField& g, double J, const Mask& active,
                         double beta) {
  require_same_grid(gamma.grid(), g.grid(), "newton_step");
  if (active.size() != gamma.size()) throw std::invalid_argument("newton_step: mask size mismatch");
  ComplexField out = gamma;
  if (J == 0.0) return out;
  double s = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (active[n]) s += std::norm(g[n]);
  s *= g.grid().node_volume();
  if (!(s > 0.0)) {
    std::ostringstream msg;
    msg << "newton_step: gradient vanishes with J = " << J << " (stationary point)";
    throw NumericalError(msg.str());
  }
  const double scale = beta * J / s;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (active[n]) out[n] -= scale * std::conj(g[n]);
  return out;
}

ReconResult run_newton(const ComplexField& gamma0, const ComplexField& h_meas, const Physics& phys,
                       const NewtonConfig& cfg, const ComplexField* truth, const Mask* support) {
  cfg.validate();
  require_same_grid(gamma0.grid(), h_meas.grid(), "run_newton");
  if (truth) require_same_grid(gamma0.grid(), truth->grid(), "run_newton");
  const Grid3D& grid = gamma0.grid();
  const Mask active = active_region(grid, cfg.freeze_collar ? cfg.collar_nodes : 0);
  const double im_floor = phys.omega * cfg.eps_rel_min * phys.eps_free;

  auto error_of = [&](const ComplexField& g) { return truth ? l2_error(g, *truth) : kNaN; };
  auto metric_of = [&](const ComplexField& g) {
    return truth && support ? anomaly_accuracy(g, *truth, *support) : kNaN;
  };

  ReconResult res{gamma0, ComplexField(grid), 0.0, error_of(gamma0), metric_of(gamma0), {}, {}, {}, false, 0, "n_max"};
  ForwardSolution fwd = solve_forward({gamma0, h_meas}, phys, cfg.solve);
  res.reports.push_back(fwd.report);
  res.J0 = misfit(fwd.hplus, h_meas);
  res.hplus = fwd.hplus;

  ComplexField gamma = gamma0;
  double J = res.J0;
  double best_J = J;
  ComplexField best_gamma = gamma, best_h = fwd.hplus;
  std::size_t rises = 0;

  for (std::size_t n = 1; n <= cfg.n_max; ++n) {
    if (J == 0.0) {
      res.stop_reason = "zero misfit";
      break;
    }
    const ComplexField p = solve_adjoint(gamma, fwd.hplus, h_meas, phys, cfg.solve);
    ComplexField g = compute_g(gamma, fwd.hplus, p, phys);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (!active[k]) g[k] = 0.0;

    ComplexField next = newton_step(gamma, g, J, active, cfg.beta);
    NewtonRow row;
    row.n = n;
    row.grad_norm = std::sqrt(g_norm2(g));
    row.clamped = clamp_admissible(next, cfg.sigma_min, im_floor);
    if (row.clamped > 0)
      std::cerr << "warning: Newton iterate " << n << " clamped to admissible range at " << row.clamped
                << " nodes\n";
    row.step = l2_error(next, gamma);
    gamma = std::move(next);

    fwd = solve_forward({gamma, h_meas}, phys, cfg.solve);
    res.reports.push_back(fwd.report);
    const double J_next = misfit(fwd.hplus, h_meas);
    row.J = J_next;
    row.error = error_of(gamma);
    row.metric = metric_of(gamma);
    row.solver_iterations = fwd.report.iterations;
    res.history.push_back(row);
    if (cfg.keep_iterates) res.iterates.push_back(gamma);

    rises = J_next > J ? rises + 1 : 0;
    J = J_next;
    if (J < best_J) {
      best_J = J;
      best_gamma = gamma;
      best_h = fwd.hplus;
      res.best_n = n;
    }
    if (rises >= cfg.stagnation) {
      res.stagnated = true;
      res.stop_reason = "stagnation";
      std::cerr << "warning: misfit rose " << rises << " times in a row; returning iterate " << res.best_n
                << '\n';
      break;
    }
    if (cfg.stop_on_truth && truth && row.error <= cfg.eps2) {
      res.stop_reason = "truth tolerance";
      break;
    }
    if (!cfg.stop_on_truth && cfg.eps2 > 0.0 && row.step <= cfg.eps2) {
      res.stop_reason = "step tolerance";
      break;
    }
  }

  if (res.stagnated) {
    res.gamma = best_gamma;
    res.hplus = best_h;
  } else {
    res.gamma = gamma;
    res.hplus = fwd.hplus;
    res.best_n = res.history.empty() ? 0 : res.history.back().n;
  }
  return res;
}

}  // namespace eptrecon
