#include "eptrecon/linsolve.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <variant>

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/UmfPackSupport>

namespace eptrecon {

namespace {

bool finite(double v) { return std::isfinite(v); }
bool finite(cplx v) { return std::isfinite(v.real()) && std::isfinite(v.imag()); }

std::string node_name(const Grid3D& g, std::size_t n) {
  const auto [i, j, k] = g.ijk(n);
  std::ostringstream s;
  s << "node " << n << " (i=" << i << ", j=" << j << ", k=" << k << ")";
  return s.str();
}

}  // namespace

template <typename T>
SparseSystem<T> assemble(const Grid3D& grid, const std::vector<std::uint8_t>& is_dirichlet,
                         const Field<T>& dirichlet_values, const StencilRule<T>& rule) {
  if (is_dirichlet.size() != grid.size())
    throw std::invalid_argument("assemble: Dirichlet mask size does not match grid");
  require_same_grid(grid, dirichlet_values.grid(), "assemble");

  SparseSystem<T> sys{grid, std::vector<std::int64_t>(grid.size(), -1), {}, dirichlet_values, {}, {}, {}};
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (is_dirichlet[n]) {
      if (!finite(dirichlet_values[n]))
        throw AssemblyError("assemble: non-finite Dirichlet value at " + node_name(grid, n));
      continue;
    }
    sys.unknown_of_node[n] = static_cast<std::int64_t>(sys.node_of_unknown.size());
    sys.node_of_unknown.push_back(n);
  }

  const auto N = static_cast<Eigen::Index>(sys.node_of_unknown.size());
  sys.rhs = DenseVector<T>::Zero(N);
  sys.boundary_rhs = DenseVector<T>::Zero(N);
  std::vector<Eigen::Triplet<T>> triplets;
  triplets.reserve(static_cast<std::size_t>(N) * 19);
  StencilRow<T> row;
  for (Eigen::Index r = 0; r < N; ++r) {
    const std::size_t node = sys.node_of_unknown[static_cast<std::size_t>(r)];
    row.clear();
    rule(node, row);
    if (!finite(row.rhs)) throw AssemblyError("assemble: non-finite right-hand side at " + node_name(grid, node));
    T elim{};
    for (const auto& [col_node, coeff] : row.entries) {
      if (!finite(coeff))
        throw AssemblyError("assemble: non-finite coefficient at " + node_name(grid, node));
      if (col_node >= grid.size())
        throw AssemblyError("assemble: stencil leaves the grid at " + node_name(grid, node));
      const std::int64_t c = sys.unknown_of_node[col_node];
      if (c < 0) {
        elim -= coeff * dirichlet_values[col_node];
      } else {
        triplets.emplace_back(r, static_cast<Eigen::Index>(c), coeff);
      }
    }
    sys.boundary_rhs[r] = elim;
    sys.rhs[r] = row.rhs + elim;
  }
  sys.matrix.resize(N, N);
  sys.matrix.setFromTriplets(triplets.begin(), triplets.end());
  sys.matrix.makeCompressed();
  return sys;
}

template <typename T>
DenseVector<T> rhs_from_source(const SparseSystem<T>& sys, const Field<T>& source) {
  require_same_grid(sys.grid, source.grid(), "rhs_from_source");
  DenseVector<T> b = sys.boundary_rhs;
  for (std::size_t r = 0; r < sys.node_of_unknown.size(); ++r)
    b[static_cast<Eigen::Index>(r)] += source[sys.node_of_unknown[r]];
  return b;
}

template <typename T>
Field<T> scatter(const SparseSystem<T>& sys, const DenseVector<T>& x) {
  if (static_cast<std::size_t>(x.size()) != sys.dimension())
    throw std::invalid_argument("scatter: solution length does not match system");
  Field<T> out = sys.dirichlet;
  for (std::size_t r = 0; r < sys.node_of_unknown.size(); ++r)
    out[sys.node_of_unknown[r]] = x[static_cast<Eigen::Index>(r)];
  return out;
}

template <typename T>
double relative_residual(const Eigen::SparseMatrix<T>& A, const DenseVector<T>& x,
                         const DenseVector<T>& b) {
  const double bn = b.norm();
  const double rn = (b - A * x).norm();
  if (bn == 0.0) return rn == 0.0 ? 0.0 : rn;
  return rn / bn;
}

template <typename T>
struct LinearSolver<T>::Impl {
  using Matrix = Eigen::SparseMatrix<T>;
  using Direct = Eigen::UmfPackLU<Matrix>;
  using Iterative = Eigen::BiCGSTAB<Matrix, Eigen::IncompleteLUT<T>>;

  Matrix A;
  SolveOptions opts;
  std::string method;
  std::unique_ptr<Direct> direct;
  std::unique_ptr<Iterative> iterative;
  double setup_seconds = 0.0;
};

template <typename T>
LinearSolver<T>::LinearSolver(const Eigen::SparseMatrix<T>& matrix, SolveOptions opts)
    : impl_(std::make_unique<Impl>()) {
  const auto t0 = std::chrono::steady_clock::now();
  impl_->A = matrix;
  impl_->A.makeCompressed();
  impl_->opts = opts;
  const auto N = static_cast<std::size_t>(matrix.rows());
  if (impl_->opts.max_iter == 0) impl_->opts.max_iter = 10 * std::max<std::size_t>(N, 1);
  bool use_direct = opts.kind == SolverKind::direct ||
                    (opts.kind == SolverKind::automatic && N <= opts.direct_limit);
  if (N == 0) use_direct = true;

  if (use_direct) {
    impl_->method = "umfpack-lu";
    if (N > 0) {
      impl_->direct = std::make_unique<typename Impl::Direct>();
      impl_->direct->compute(impl_->A);
      if (impl_->direct->info() != Eigen::Success)
        throw SolverError("sparse LU factorization failed (singular or ill-conditioned operator)",
                          {impl_->method, 0, INFINITY, 0.0});
    }
  } else {
    impl_->method = "bicgstab-ilut";
    impl_->iterative = std::make_unique<typename Impl::Iterative>();
    impl_->iterative->preconditioner().setDroptol(opts.ilut_drop);
    impl_->iterative->preconditioner().setFillfactor(opts.ilut_fill);
    impl_->iterative->setTolerance(0.1 * opts.tol);
    impl_->iterative->setMaxIterations(static_cast<Eigen::Index>(impl_->opts.max_iter));
    impl_->iterative->compute(impl_->A);
    if (impl_->iterative->info() != Eigen::Success)
      throw SolverError("incomplete LU preconditioner setup failed", {impl_->method, 0, INFINITY, 0.0});
  }
  impl_->setup_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <typename T>
LinearSolver<T>::~LinearSolver() = default;
template <typename T>
LinearSolver<T>::LinearSolver(LinearSolver&&) noexcept = default;
template <typename T>
LinearSolver<T>& LinearSolver<T>::operator=(LinearSolver&&) noexcept = default;

template <typename T>
const std::string& LinearSolver<T>::method() const {
  return impl_->method;
}

template <typename T>
Solution<T> LinearSolver<T>::solve(const DenseVector<T>& b) const {
  const auto t0 = std::chrono::steady_clock::now();
  Solution<T> sol;
  sol.report.method = impl_->method;
  if (b.size() != impl_->A.rows()) throw std::invalid_argument("LinearSolver::solve: size mismatch");
  if (b.size() == 0 || b.norm() == 0.0) {
    sol.x = DenseVector<T>::Zero(b.size());
    sol.report.iterations = 0;
  } else if (impl_->direct) {
    sol.x = impl_->direct->solve(b);
    sol.report.iterations = 1;
    // One step of iterative refinement recovers digits lost to pivoting.
    if (relative_residual(impl_->A, sol.x, b) > impl_->opts.tol) {
      const DenseVector<T> r = b - impl_->A * sol.x;
      sol.x += impl_->direct->solve(r);
      sol.report.iterations = 2;
    }
  } else {
    sol.x = impl_->iterative->solve(b);
    sol.report.iterations = static_cast<std::size_t>(impl_->iterative->iterations());
  }
  sol.report.relative_residual = relative_residual(impl_->A, sol.x, b);
  sol.report.seconds =
      impl_->setup_seconds + std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!(sol.report.relative_residual <= impl_->opts.tol)) {
    std::ostringstream msg;
    msg << "linear solve did not converge: " << sol.report.method << " reached relative residual "
        << sol.report.relative_residual << " after " << sol.report.iterations
        << " iterations (tolerance " << impl_->opts.tol << ")";
    throw SolverError(msg.str(), sol.report);
  }
  return sol;
}

template <typename T>
Solution<T> solve(const SparseSystem<T>& sys, const SolveOptions& opts) {
  LinearSolver<T> solver(sys.matrix, opts);
  return solver.solve(sys.rhs);
}

namespace {

void write_value(std::ostream& os, double v) { os << v; }
void write_value(std::ostream& os, cplx v) { os << v.real() << ' ' << v.imag(); }

}  // namespace

template <typename T>
void write_matrix_market(const std::filesystem::path& path, const Eigen::SparseMatrix<T>& A) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  os << "%%MatrixMarket matrix coordinate " << (std::is_same_v<T, cplx> ? "complex" : "real")
     << " general\n";
  os << A.rows() << ' ' << A.cols() << ' ' << A.nonZeros() << '\n';
  os << std::setprecision(17);
  for (Eigen::Index c = 0; c < A.outerSize(); ++c) {
    for (typename Eigen::SparseMatrix<T>::InnerIterator it(A, c); it; ++it) {
      os << it.row() + 1 << ' ' << it.col() + 1 << ' ';
      write_value(os, it.value());
      os << '\n';
    }
  }
}

#define EPTRECON_INSTANTIATE(T)                                                                     \
  template SparseSystem<T> assemble(const Grid3D&, const std::vector<std::uint8_t>&, const Field<T>&, \
                                    const StencilRule<T>&);                                         \
  template DenseVector<T> rhs_from_source(const SparseSystem<T>&, const Field<T>&);                \
  template Field<T> scatter(const SparseSystem<T>&, const DenseVector<T>&);                        \
  template double relative_residual(const Eigen::SparseMatrix<T>&, const DenseVector<T>&,          \
                                    const DenseVector<T>&);                                         \
  template class LinearSolver<T>;                                                                   \
  template Solution<T> solve(const SparseSystem<T>&, const SolveOptions&);                         \
  template void write_matrix_market(const std::filesystem::path&, const Eigen::SparseMatrix<T>&);

EPTRECON_INSTANTIATE(double)
EPTRECON_INSTANTIATE(cplx)

#undef EPTRECON_INSTANTIATE

}  // namespace eptrecon
