#include "eptrecon/forward.hpp"

#include <cmath>
#include <random>

#include "eptrecon/operators.hpp"

namespace eptrecon {

namespace {

constexpr cplx I{0.0, 1.0};

std::vector<std::uint8_t> face_mask(const Grid3D& g) {
  std::vector<std::uint8_t> m(g.size());
  for (std::size_t n = 0; n < g.size(); ++n) m[n] = g.on_face(n) ? 1 : 0;
  return m;
}

}  // namespace

SparseSystem<cplx> assemble_forward(const ComplexField& gamma, const ComplexField& boundary_data,
                                    const Physics& phys, double gamma_floor) {
  require_same_grid(gamma.grid(), boundary_data.grid(), "assemble_forward");
  const Grid3D& g = gamma.grid();
  const ComplexVectorField G = compute_G(gamma, gamma_floor);
  const double wm = phys.omega_mu0();

  StencilRule<cplx> rule = [&](std::size_t n, StencilRow<cplx>& row) {
    cplx diag = -I * wm * gamma[n];
    for (Axis a : kAxes) {
      const double h = g.h(a);
      const std::size_t s = g.stride(a);
      const cplx lap = 1.0 / (h * h);
      const cplx adv = G[a][n] / (2.0 * h);
      diag -= 2.0 * lap;
      row.add(n + s, lap + adv);
      row.add(n - s, lap - adv);
    }
    row.add(n, diag);
  };
  return assemble<cplx>(g, face_mask(g), boundary_data, rule);
}

ForwardSolution solve_forward(const ForwardProblem& fp, const Physics& phys, const SolveOptions& opts) {
  if (!all_finite(fp.boundary_data)) throw NumericalError("solve_forward: boundary data not finite");
  const SparseSystem<cplx> sys = assemble_forward(fp.gamma, fp.boundary_data, phys);
  Solution<cplx> sol = solve(sys, opts);
  return {scatter(sys, sol.x), sol.report};
}

ComplexField forward_residual_derivative(const ComplexField& gamma, const ComplexField& hplus,
                                         const ComplexField& delta, const Physics& phys) {
  require_same_grid(gamma.grid(), hplus.grid(), "forward_residual_derivative");
  require_same_grid(gamma.grid(), delta.grid(), "forward_residual_derivative");
  const Grid3D& g = gamma.grid();
  const ComplexVectorField LH = apply_L(hplus);
  const ComplexField ratio = zip(delta, gamma, [](cplx d, cplx gm) { return d / gm; });
  const ComplexVectorField dr = gradient(ratio);
  const double wm = phys.omega_mu0();
  ComplexField out(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    if (g.on_face(n)) continue;
    cplx v = -I * wm * delta[n] * hplus[n];
    for (Axis a : kAxes) v += LH[a][n] * dr[a][n];
    out[n] = v;
  }
  return out;
}

ComplexField frechet_direction(const ComplexField& gamma, const ComplexField& hplus,
                               const ComplexField& delta, const Physics& phys,
                               const SolveOptions& opts) {
  const Grid3D& g = gamma.grid();
  const SparseSystem<cplx> sys = assemble_forward(gamma, ComplexField(g), phys);
  ComplexField src = forward_residual_derivative(gamma, hplus, delta, phys);
  for (auto& v : src.data()) v = -v;
  LinearSolver<cplx> solver(sys.matrix, opts);
  const Solution<cplx> sol = solver.solve(rhs_from_source(sys, src));
  return scatter(sys, sol.x);
}

BoundaryProfile constant_profile(cplx value) {
  return [value](const Grid3D& g) { return ComplexField(g, value); };
}

BoundaryProfile lateral_profile(cplx gamma_background, const Physics& phys, cplx value) {
  return [=](const Grid3D& g) {
    const double wm = phys.omega_mu0();
    // One interior xy layer, everything else Dirichlet.
    std::vector<std::uint8_t> fixed(g.size(), 1);
    for (std::size_t j = 1; j + 1 < g.ny(); ++j)
      for (std::size_t i = 1; i + 1 < g.nx(); ++i) fixed[g.index(i, j, 1)] = 0;
    const ComplexField bc(g, value);
    StencilRule<cplx> rule = [&](std::size_t n, StencilRow<cplx>& row) {
      cplx diag = -I * wm * gamma_background;
      for (Axis a : {Axis::x, Axis::y}) {
        const double c = 1.0 / (g.h(a) * g.h(a));
        row.add(n + g.stride(a), c);
        row.add(n - g.stride(a), c);
        diag -= 2.0 * c;
      }
      row.add(n, diag);
    };
    const SparseSystem<cplx> sys = assemble<cplx>(g, fixed, bc, rule);
    const ComplexField layer = scatter(sys, solve(sys, SolveOptions{1e-12, 0, SolverKind::direct}).x);
    ComplexField out(g, value);
    for (std::size_t k = 0; k < g.nz(); ++k)
      for (std::size_t j = 0; j < g.ny(); ++j)
        for (std::size_t i = 0; i < g.nx(); ++i) out.at(i, j, k) = layer.at(i, j, 1);
    return out;
  };
}

ComplexField restrict_injection(const ComplexField& fine, const Grid3D& coarse, std::size_t factor) {
  const Grid3D expected = coarse.refined(factor);
  require_same_grid(expected, fine.grid(), "restrict_injection");
  ComplexField out(coarse);
  for (std::size_t k = 0; k < coarse.nz(); ++k)
    for (std::size_t j = 0; j < coarse.ny(); ++j)
      for (std::size_t i = 0; i < coarse.nx(); ++i)
        out.at(i, j, k) = fine.at(i * factor, j * factor, k * factor);
  return out;
}

ComplexField add_noise(const ComplexField& f, double level, std::uint64_t seed) {
  if (level < 0.0 || !std::isfinite(level)) throw ConfigError("noise level must be finite and >= 0");
  ComplexField out = f;
  if (level == 0.0) return out;
  double ss = 0.0;
  for (const cplx& v : f.data()) ss += std::norm(v);
  const double rms = std::sqrt(ss / static_cast<double>(f.size()));
  const double scale = level * rms / std::sqrt(2.0);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& v : out.data()) {
    const double re = normal(rng);
    const double im = normal(rng);
    v += scale * cplx(re, im);
  }
  return out;
}

SynthesisResult synthesize_data(const Phantom& phantom, const Grid3D& grid, const Physics& phys,
                                const BoundaryProfile& profile, const SynthesisOptions& opts) {
  if (opts.refine < 1) throw ConfigError("refine must be >= 1");
  const Grid3D fine = grid.refined(opts.refine);
  const Admittivity adm = sample(phantom, fine, phys);
  const ComplexField bc = profile(fine);
  require_same_grid(fine, bc.grid(), "synthesize_data");
  ForwardSolution fs = solve_forward({adm.gamma(), bc}, phys, opts.solve);
  SynthesisResult out{ComplexField(grid), restrict_injection(fs.hplus, grid, opts.refine), fs.report};
  out.data = add_noise(out.clean, opts.noise, opts.seed);
  return out;
}

}  // namespace eptrecon
