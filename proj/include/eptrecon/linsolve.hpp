#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "eptrecon/grid.hpp"

namespace eptrecon {

template <typename T>
using DenseVector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

// One equation of a node-based stencil: Σ coeff·u[node] = rhs.
template <typename T>
struct StencilRow {
  std::vector<std::pair<std::size_t, T>> entries;
  T rhs{};

  void add(std::size_t node, T coeff) { entries.emplace_back(node, coeff); }
  void clear() {
    entries.clear();
    rhs = T{};
  }
};

template <typename T>
using StencilRule = std::function<void(std::size_t node, StencilRow<T>& row)>;

// Linear system over the non-Dirichlet nodes of a grid. Dirichlet columns are
// eliminated into the right-hand side.
template <typename T>
struct SparseSystem {
  Grid3D grid;
  std::vector<std::int64_t> unknown_of_node;  // -1 on Dirichlet nodes
  std::vector<std::size_t> node_of_unknown;
  Field<T> dirichlet;  // values used on Dirichlet nodes
  Eigen::SparseMatrix<T> matrix;
  DenseVector<T> rhs;
  DenseVector<T> boundary_rhs;  // part of `rhs` that comes from eliminated Dirichlet columns

  std::size_t dimension() const { return node_of_unknown.size(); }
};

// Thrown when a stencil produces a non-finite coefficient.
class AssemblyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
SparseSystem<T> assemble(const Grid3D& grid, const std::vector<std::uint8_t>& is_dirichlet,
                         const Field<T>& dirichlet_values, const StencilRule<T>& rule);

// Right-hand side for the same operator with a new per-node source term:
// source at each unknown plus the eliminated Dirichlet contributions.
template <typename T>
DenseVector<T> rhs_from_source(const SparseSystem<T>& sys, const Field<T>& source);

// Solution vector scattered back onto the grid; Dirichlet nodes take their
// prescribed values.
template <typename T>
Field<T> scatter(const SparseSystem<T>& sys, const DenseVector<T>& x);

enum class SolverKind { automatic, direct, bicgstab };

struct SolveOptions {
  double tol = 1e-10;          // relative residual ||b - Ax|| / ||b||
  std::size_t max_iter = 0;    // 0 selects 10 * dimension
  SolverKind kind = SolverKind::automatic;
  std::size_t direct_limit = 20 * 20 * 20;  // automatic picks direct up to this many unknowns
  double ilut_drop = 1e-4;
  int ilut_fill = 20;
};

struct SolveReport {
  std::string method;
  std::size_t iterations = 0;
  double relative_residual = 0.0;
  double seconds = 0.0;
};

class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, SolveReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const SolveReport& report() const { return report_; }

 private:
  SolveReport report_;
};

template <typename T>
struct Solution {
  DenseVector<T> x;
  SolveReport report;
};

// Factor (or precondition) a matrix once, then solve for many right-hand sides.
template <typename T>
class LinearSolver {
 public:
  LinearSolver(const Eigen::SparseMatrix<T>& matrix, SolveOptions opts);
  ~LinearSolver();
  LinearSolver(LinearSolver&&) noexcept;
  LinearSolver& operator=(LinearSolver&&) noexcept;

  // Throws SolverError if the verified residual exceeds the tolerance.
  Solution<T> solve(const DenseVector<T>& b) const;
  const std::string& method() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

template <typename T>
Solution<T> solve(const SparseSystem<T>& sys, const SolveOptions& opts = {});

// ||b - Ax|| / ||b|| (0 when b = 0 and x = 0).
template <typename T>
double relative_residual(const Eigen::SparseMatrix<T>& A, const DenseVector<T>& x,
                         const DenseVector<T>& b);

// Matrix Market coordinate dump for offline inspection.
template <typename T>
void write_matrix_market(const std::filesystem::path& path, const Eigen::SparseMatrix<T>& A);

}  // namespace eptrecon
