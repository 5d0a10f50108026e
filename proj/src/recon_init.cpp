#include "eptrecon/recon_init.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <sstream>

#include "eptrecon/recon_direct.hpp"

namespace eptrecon {

void InitConfig::validate() const {
  if (!(rho_fraction > 0.0)) throw ConfigError("init: rho_fraction must be > 0");
  if (!(tau_D >= 0.0)) throw ConfigError("init: tau_D must be >= 0");
  if (k_max < 1) throw ConfigError("init: k_max must be >= 1");
  if (k_pick < 1 || k_pick > k_max) throw ConfigError("init: k_pick must lie in [1, k_max]");
  if (!(max_D_fraction > 0.0 && max_D_fraction <= 1.0))
    throw ConfigError("init: max_D_fraction must lie in (0, 1]");
  if (!std::isfinite(sigma_boundary) || !std::isfinite(omega_eps_boundary) || !std::isfinite(sigma0) ||
      !std::isfinite(omega_eps0))
    throw ConfigError("init: boundary and starting values must be finite");
}

SymMatrixField regularized_matrix(const SymMatrixField& A, double rho_fraction, double* rho_out) {
  double amax = 0.0;
  for (double v : A.zz.data()) amax = std::max(amax, v);
  if (!(amax > 0.0))
    throw NumericalError("regularized_matrix: max A33 is zero, the data carry no z information");
  const double rho = rho_fraction * amax;
  SymMatrixField out = A;
  for (double& v : out.zz.data()) v += rho;
  if (rho_out) *rho_out = rho;
  return out;
}

std::vector<std::uint8_t> segment_degenerate(const SymMatrixField& A, double tau, std::size_t dilate,
                                             double max_fraction) {
  const Grid3D& g = A.grid();
  std::vector<std::uint8_t> D(g.size(), 0);
  if (tau <= 0.0) return D;
  double lmax = 0.0;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (!g.on_face(n)) lmax = std::max(lmax, A.xx[n]);
  for (std::size_t n = 0; n < g.size(); ++n) D[n] = A.xx[n] < tau * lmax ? 1 : 0;

  for (std::size_t pass = 0; pass < dilate; ++pass) {
    std::vector<std::uint8_t> grown = D;
    for (std::size_t n = 0; n < g.size(); ++n) {
      if (!D[n]) continue;
      const auto [i, j, k] = g.ijk(n);
      for (int dk = -1; dk <= 1; ++dk)
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            const long ii = static_cast<long>(i) + di, jj = static_cast<long>(j) + dj,
                       kk = static_cast<long>(k) + dk;
            if (ii < 0 || jj < 0 || kk < 0 || ii >= static_cast<long>(g.nx()) ||
                jj >= static_cast<long>(g.ny()) || kk >= static_cast<long>(g.nz()))
              continue;
            grown[g.index(ii, jj, kk)] = 1;
          }
    }
    D.swap(grown);
  }

  const auto count = static_cast<double>(std::count(D.begin(), D.end(), 1));
  if (count > max_fraction * static_cast<double>(g.size())) {
    std::ostringstream msg;
    msg << "degenerate region covers " << 100.0 * count / static_cast<double>(g.size())
        << "% of the grid; the data are too degenerate for the elliptic solve";
    throw NumericalError(msg.str());
  }
  return D;
}

std::size_t clamp_admissible(ComplexField& gamma, double re_floor, double im_floor) {
  std::size_t changed = 0;
  for (auto& v : gamma.data()) {
    const double re = std::max(v.real(), re_floor);
    const double im = std::max(v.imag(), im_floor);
    if (re != v.real() || im != v.imag()) {
      v = {re, im};
      ++changed;
    }
  }
  return changed;
}

SparseSystem<double> assemble_semielliptic(const SymMatrixField& M, const RealVectorField& F0,
                                           const std::vector<std::uint8_t>& dirichlet,
                                           const RealField& dirichlet_values) {
  const Grid3D& g = M.grid();
  std::vector<std::uint8_t> fixed = dirichlet;
  for (std::size_t n = 0; n < g.size(); ++n)
    if (g.on_face(n)) fixed[n] = 1;

  StencilRule<double> rule = [&](std::size_t n, StencilRow<double>& row) {
    double diag = 0.0;
    for (int a = 0; a < 3; ++a) {
      const Axis ax = kAxes[a];
      const std::size_t sa = g.stride(ax);
      const double ha = g.h(ax);
      const double cp = 0.5 * (M.entry(n, a, a) + M.entry(n + sa, a, a)) / (ha * ha);
      const double cm = 0.5 * (M.entry(n, a, a) + M.entry(n - sa, a, a)) / (ha * ha);
      row.add(n + sa, cp);
      row.add(n - sa, cm);
      diag -= cp + cm;

      const double f = F0[ax][n] / (2.0 * ha);
      row.add(n + sa, f);
      row.add(n - sa, -f);

      for (int b = 0; b < 3; ++b) {
        if (b == a) continue;
        const Axis bx = kAxes[b];
        const std::size_t sb = g.stride(bx);
        const double scale = 1.0 / (4.0 * ha * g.h(bx));
        const double mp = M.entry(n + sa, a, b) * scale;
        const double mm = M.entry(n - sa, a, b) * scale;
        if (mp != 0.0) {
          row.add(n + sa + sb, mp);
          row.add(n + sa - sb, -mp);
        }
        if (mm != 0.0) {
          row.add(n - sa + sb, -mm);
          row.add(n - sa - sb, mm);
        }
      }
    }
    row.add(n, diag);
  };
  return assemble<double>(g, fixed, dirichlet_values, rule);
}

SemiellipticStepper::SemiellipticStepper(const ComplexField& hplus, const Physics& phys,
                                         const InitConfig& cfg, const std::vector<std::uint8_t>& fixed,
                                         const RealField& fixed_sigma, const RealField& fixed_omega_eps)
    : hplus_(hplus),
      phys_(phys),
      pq_(compute_PQ(hplus)),
      lap_(laplacian(hplus)),
      M_(regularized_matrix(assemble_A(pq_.P, pq_.Q), cfg.rho_fraction, &rho_)),
      F0_(compute_F0(pq_.P, pq_.Q)),
      sys_sigma_(assemble_semielliptic(M_, F0_, fixed, fixed_sigma)),
      sys_omega_eps_(assemble_semielliptic(M_, F0_, fixed, fixed_omega_eps)),
      solver_(sys_sigma_.matrix, cfg.solve) {}

std::pair<RealField, RealField> SemiellipticStepper::step(const RealField& sigma_prev,
                                                          const RealField& omega_eps_prev,
                                                          SolveReport* report) const {
  const RealField eps_prev = map(omega_eps_prev, [w = phys_.omega](double v) { return v / w; });
  const F12 rhs = compute_F1_F2(sigma_prev, eps_prev, hplus_, pq_, lap_, phys_);
  const Solution<double> s = solver_.solve(rhs_from_source(sys_sigma_, rhs.F1));
  const Solution<double> e = solver_.solve(rhs_from_source(sys_omega_eps_, rhs.F2));
  if (report) {
    *report = s.report;
    report->iterations += e.report.iterations;
    report->seconds += e.report.seconds;
    report->relative_residual = std::max(s.report.relative_residual, e.report.relative_residual);
  }
  return {scatter(sys_sigma_, s.x), scatter(sys_omega_eps_, e.x)};
}

namespace {

double l2_diff(const ComplexField& a, const ComplexField& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += std::norm(a[n] - b[n]);
  return std::sqrt(s * a.grid().node_volume());
}

}  // namespace

InitResult initial_guess(const ComplexField& hplus, const Physics& phys, const InitConfig& cfg,
                         const ComplexField* truth) {
  cfg.validate();
  if (!all_finite(hplus)) throw NumericalError("initial_guess: H+ is not finite");
  if (truth) require_same_grid(hplus.grid(), truth->grid(), "initial_guess");
  const Grid3D& g = hplus.grid();

  const PQFields pq = compute_PQ(hplus);
  const SymMatrixField A = assemble_A(pq.P, pq.Q);
  InitResult out{ComplexField(g), 0, {}, {}, segment_degenerate(A, cfg.tau_D, cfg.dilate, cfg.max_D_fraction),
                 0.0, 0, {}};

  // Fixed nodes: faces, the optional collar, and D (direct-formula values).
  const DirectResult direct = direct_reconstruct(hplus, phys, cfg.direct_guard);
  std::vector<std::uint8_t> fixed(g.size(), 0);
  RealField fs(g, cfg.sigma_boundary), fe(g, cfg.omega_eps_boundary);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (g.face_distance(n) <= cfg.collar_nodes) {
      fixed[n] = 1;
    } else if (out.degenerate[n]) {
      fixed[n] = 1;
      if (!direct.mask[n]) {
        fs[n] = direct.gamma[n].real();
        fe[n] = direct.gamma[n].imag();
      }
    }
  }

  const SemiellipticStepper stepper(hplus, phys, cfg, fixed, fs, fe);
  out.rho = stepper.rho();
  out.solver_method = stepper.method();

  RealField sigma(g, cfg.sigma0), omega_eps(g, cfg.omega_eps0);
  ComplexField prev = make_complex(sigma, omega_eps);
  for (std::size_t k = 1; k <= cfg.k_max; ++k) {
    SolveReport rep;
    auto [s, e] = stepper.step(sigma, omega_eps, &rep);
    sigma = std::move(s);
    omega_eps = std::move(e);
    ComplexField gk = make_complex(sigma, omega_eps);

    InitIterate it;
    it.k = k;
    it.step = l2_diff(gk, prev);
    it.error = truth ? l2_diff(gk, *truth) : std::numeric_limits<double>::quiet_NaN();
    it.solver_iterations = rep.iterations;
    out.history.push_back(it);
    if (cfg.keep_snapshots) out.snapshots.push_back(gk);
    if (!all_finite(gk)) throw NumericalError("initial_guess: iterate " + std::to_string(k) + " is not finite");

    if (k <= cfg.k_pick) {
      out.gamma0 = gk;
      out.k_chosen = k;
    }
    prev = std::move(gk);
    const bool stop_step = !cfg.stop_on_truth && cfg.eps1 > 0.0 && it.step <= cfg.eps1;
    const bool stop_truth = cfg.stop_on_truth && truth && it.error <= cfg.eps1;
    if (stop_step || stop_truth) {
      if (k < cfg.k_pick) {
        out.gamma0 = prev;
        out.k_chosen = k;
      }
      break;
    }
  }

  out.clamped = clamp_admissible(out.gamma0, cfg.sigma_min, phys.omega * cfg.eps_rel_min * phys.eps_free);
  if (out.clamped > 0)
    std::cerr << "warning: initial guess clamped to admissible range at " << out.clamped << " nodes\n";
  return out;
}

}  // namespace eptrecon
