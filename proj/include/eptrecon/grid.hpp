#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "eptrecon/errors.hpp"

namespace eptrecon {

using cplx = std::complex<double>;
using Vec3 = std::array<double, 3>;

enum class Axis : int { x = 0, y = 1, z = 2 };
inline constexpr std::array<Axis, 3> kAxes{Axis::x, Axis::y, Axis::z};

// Regular node-centred grid. Node (i,j,k) sits at origin + (i*hx, j*hy, k*hz).
// Linear index is i + nx*(j + ny*k): x fastest, z slowest.
class Grid3D {
 public:
  Grid3D(std::size_t nx, std::size_t ny, std::size_t nz, Vec3 spacing, Vec3 origin);

  std::size_t nx() const { return n_[0]; }
  std::size_t ny() const { return n_[1]; }
  std::size_t nz() const { return n_[2]; }
  std::size_t count(Axis a) const { return n_[static_cast<int>(a)]; }
  std::size_t size() const { return n_[0] * n_[1] * n_[2]; }

  double h(Axis a) const { return h_[static_cast<int>(a)]; }
  const Vec3& spacing() const { return h_; }
  const Vec3& origin() const { return origin_; }
  double node_volume() const { return h_[0] * h_[1] * h_[2]; }

  std::size_t stride(Axis a) const;
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return i + n_[0] * (j + n_[1] * k);
  }
  std::array<std::size_t, 3> ijk(std::size_t idx) const;
  Vec3 position(std::size_t i, std::size_t j, std::size_t k) const;
  Vec3 position(std::size_t idx) const;

  // Number of nodes between idx and the closest face (0 on a face).
  std::size_t face_distance(std::size_t idx) const;
  bool on_face(std::size_t idx) const { return face_distance(idx) == 0; }

  // Same dimensions, spacing and origin (spacing/origin to 1e-12 relative).
  bool same_as(const Grid3D& other) const;

  // Grid with (n-1)*factor+1 nodes per axis covering the same box.
  Grid3D refined(std::size_t factor) const;

 private:
  std::array<std::size_t, 3> n_;
  Vec3 h_;
  Vec3 origin_;
};

Grid3D make_grid(std::size_t nx, std::size_t ny, std::size_t nz, Vec3 spacing, Vec3 origin);

// Grid-sampled scalar function (real or complex).
template <typename T>
class Field {
 public:
  explicit Field(const Grid3D& grid, T fill = T{}) : grid_(grid), values_(grid.size(), fill) {}
  Field(const Grid3D& grid, std::vector<T> values);

  const Grid3D& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }

  T& operator[](std::size_t idx) { return values_[idx]; }
  const T& operator[](std::size_t idx) const { return values_[idx]; }
  T& at(std::size_t i, std::size_t j, std::size_t k) { return values_[grid_.index(i, j, k)]; }
  const T& at(std::size_t i, std::size_t j, std::size_t k) const {
    return values_[grid_.index(i, j, k)];
  }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  std::vector<T>& data() { return values_; }
  const std::vector<T>& data() const { return values_; }

 private:
  Grid3D grid_;
  std::vector<T> values_;
};

using RealField = Field<double>;
using ComplexField = Field<cplx>;

template <typename T>
struct VectorField {
  std::array<Field<T>, 3> c;

  explicit VectorField(const Grid3D& grid) : c{Field<T>(grid), Field<T>(grid), Field<T>(grid)} {}
  VectorField(Field<T> x, Field<T> y, Field<T> z);

  const Grid3D& grid() const { return c[0].grid(); }
  Field<T>& operator[](Axis a) { return c[static_cast<int>(a)]; }
  const Field<T>& operator[](Axis a) const { return c[static_cast<int>(a)]; }
  Field<T>& x() { return c[0]; }
  Field<T>& y() { return c[1]; }
  Field<T>& z() { return c[2]; }
  const Field<T>& x() const { return c[0]; }
  const Field<T>& y() const { return c[1]; }
  const Field<T>& z() const { return c[2]; }
};

using RealVectorField = VectorField<double>;
using ComplexVectorField = VectorField<cplx>;

// Per-node interior/boundary flags. Boundary = grid faces plus an optional
// collar of `collar` nodes inward from every face.
struct BoundaryMask {
  std::vector<std::uint8_t> boundary;
  std::size_t collar = 0;

  bool is_boundary(std::size_t idx) const { return boundary[idx] != 0; }
  std::size_t count() const;
};

BoundaryMask make_boundary_mask(const Grid3D& grid, std::size_t collar_nodes = 0);

void require_same_grid(const Grid3D& a, const Grid3D& b, const char* where);

// ---- elementwise helpers ----------------------------------------------------

template <typename T, typename F>
auto map(const Field<T>& f, F&& fn) {
  using R = decltype(fn(f[0]));
  Field<R> out(f.grid());
  for (std::size_t n = 0; n < f.size(); ++n) out[n] = fn(f[n]);
  return out;
}

template <typename A, typename B, typename F>
auto zip(const Field<A>& a, const Field<B>& b, F&& fn) {
  require_same_grid(a.grid(), b.grid(), "zip");
  using R = decltype(fn(a[0], b[0]));
  Field<R> out(a.grid());
  for (std::size_t n = 0; n < a.size(); ++n) out[n] = fn(a[n], b[n]);
  return out;
}

ComplexField to_complex(const RealField& f);
RealField real_part(const ComplexField& f);
RealField imag_part(const ComplexField& f);
ComplexField make_complex(const RealField& re, const RealField& im);

bool all_finite(const RealField& f);
bool all_finite(const ComplexField& f);

// ---- finite differences ------------------------------------------------------
// Second-order central differences inside, second-order one-sided on faces.

template <typename T>
Field<T> ddx(const Field<T>& f, Axis axis);

// Second derivative along one axis: 3-point central inside, 4-point one-sided
// on faces (3-point when the axis only has three nodes).
template <typename T>
Field<T> d2dx2(const Field<T>& f, Axis axis);

// 7-point stencil inside; one-sided second differences on faces.
template <typename T>
Field<T> laplacian(const Field<T>& f);

template <typename T>
VectorField<T> gradient(const Field<T>& f);

template <typename T>
Field<T> divergence(const VectorField<T>& v);

}  // namespace eptrecon
