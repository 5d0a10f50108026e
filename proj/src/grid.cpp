#include "eptrecon/grid.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

namespace eptrecon {

Grid3D::Grid3D(std::size_t nx, std::size_t ny, std::size_t nz, Vec3 spacing, Vec3 origin)
    : n_{nx, ny, nz}, h_(spacing), origin_(origin) {
  for (int a = 0; a < 3; ++a) {
    if (n_[a] < 3) {
      std::ostringstream msg;
      msg << "Grid3D: node count along axis " << a << " is " << n_[a] << ", need >= 3";
      throw std::invalid_argument(msg.str());
    }
    if (!(h_[a] > 0.0) || !std::isfinite(h_[a])) {
      std::ostringstream msg;
      msg << "Grid3D: spacing along axis " << a << " must be positive, got " << h_[a];
      throw std::invalid_argument(msg.str());
    }
    if (!std::isfinite(origin_[a])) throw std::invalid_argument("Grid3D: non-finite origin");
  }
}

Grid3D make_grid(std::size_t nx, std::size_t ny, std::size_t nz, Vec3 spacing, Vec3 origin) {
  return Grid3D(nx, ny, nz, spacing, origin);
}

std::size_t Grid3D::stride(Axis a) const {
  switch (a) {
    case Axis::x: return 1;
    case Axis::y: return n_[0];
    case Axis::z: return n_[0] * n_[1];
  }
  return 0;
}

std::array<std::size_t, 3> Grid3D::ijk(std::size_t idx) const {
  const std::size_t i = idx % n_[0];
  const std::size_t rest = idx / n_[0];
  return {i, rest % n_[1], rest / n_[1]};
}

Vec3 Grid3D::position(std::size_t i, std::size_t j, std::size_t k) const {
  return {origin_[0] + static_cast<double>(i) * h_[0], origin_[1] + static_cast<double>(j) * h_[1],
          origin_[2] + static_cast<double>(k) * h_[2]};
}

Vec3 Grid3D::position(std::size_t idx) const {
  const auto [i, j, k] = ijk(idx);
  return position(i, j, k);
}

std::size_t Grid3D::face_distance(std::size_t idx) const {
  const auto c = ijk(idx);
  std::size_t d = c[0];
  for (int a = 0; a < 3; ++a) d = std::min({d, c[a], n_[a] - 1 - c[a]});
  return d;
}

bool Grid3D::same_as(const Grid3D& other) const {
  if (n_ != other.n_) return false;
  for (int a = 0; a < 3; ++a) {
    const double scale = std::max(std::abs(h_[a]), std::abs(other.h_[a]));
    if (std::abs(h_[a] - other.h_[a]) > 1e-12 * scale) return false;
    const double extent = scale * static_cast<double>(n_[a]);
    if (std::abs(origin_[a] - other.origin_[a]) > 1e-12 * std::max(extent, 1.0)) return false;
  }
  return true;
}

Grid3D Grid3D::refined(std::size_t factor) const {
  if (factor < 1) throw std::invalid_argument("Grid3D::refined: factor must be >= 1");
  const double f = static_cast<double>(factor);
  return Grid3D((n_[0] - 1) * factor + 1, (n_[1] - 1) * factor + 1, (n_[2] - 1) * factor + 1,
                {h_[0] / f, h_[1] / f, h_[2] / f}, origin_);
}

template <typename T>
Field<T>::Field(const Grid3D& grid, std::vector<T> values) : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.size()) {
    throw std::invalid_argument("Field: value count " + std::to_string(values_.size()) +
                                " does not match grid size " + std::to_string(grid_.size()));
  }
}

template <typename T>
VectorField<T>::VectorField(Field<T> x, Field<T> y, Field<T> z)
    : c{std::move(x), std::move(y), std::move(z)} {
  require_same_grid(c[0].grid(), c[1].grid(), "VectorField");
  require_same_grid(c[0].grid(), c[2].grid(), "VectorField");
}

std::size_t BoundaryMask::count() const {
  return static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), std::uint8_t{1}));
}

BoundaryMask make_boundary_mask(const Grid3D& grid, std::size_t collar_nodes) {
  BoundaryMask mask;
  mask.collar = collar_nodes;
  mask.boundary.resize(grid.size());
  for (std::size_t n = 0; n < grid.size(); ++n) {
    mask.boundary[n] = grid.face_distance(n) <= collar_nodes ? 1 : 0;
  }
  return mask;
}

void require_same_grid(const Grid3D& a, const Grid3D& b, const char* where) {
  if (!a.same_as(b)) throw GridMismatch(std::string(where) + ": fields live on different grids");
}

ComplexField to_complex(const RealField& f) {
  return map(f, [](double v) { return cplx(v, 0.0); });
}
RealField real_part(const ComplexField& f) {
  return map(f, [](cplx v) { return v.real(); });
}
RealField imag_part(const ComplexField& f) {
  return map(f, [](cplx v) { return v.imag(); });
}
ComplexField make_complex(const RealField& re, const RealField& im) {
  return zip(re, im, [](double a, double b) { return cplx(a, b); });
}

bool all_finite(const RealField& f) {
  return std::all_of(f.data().begin(), f.data().end(), [](double v) { return std::isfinite(v); });
}
bool all_finite(const ComplexField& f) {
  return std::all_of(f.data().begin(), f.data().end(), [](cplx v) {
    return std::isfinite(v.real()) && std::isfinite(v.imag());
  });
}

namespace {

// Visit every node, handing the functor the node index, its coordinate along
// `axis`, and the node count along `axis`.
template <typename Fn>
void for_each_along(const Grid3D& g, Axis axis, Fn&& fn) {
  const int a = static_cast<int>(axis);
  for (std::size_t k = 0; k < g.nz(); ++k)
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const std::array<std::size_t, 3> c{i, j, k};
        fn(g.index(i, j, k), c[a], g.count(axis));
      }
}

}  // namespace

template <typename T>
Field<T> ddx(const Field<T>& f, Axis axis) {
  const Grid3D& g = f.grid();
  const std::size_t s = g.stride(axis);
  const double inv2h = 1.0 / (2.0 * g.h(axis));
  Field<T> out(g);
  for_each_along(g, axis, [&](std::size_t n, std::size_t c, std::size_t count) {
    if (c == 0) {
      out[n] = (-3.0 * f[n] + 4.0 * f[n + s] - f[n + 2 * s]) * inv2h;
    } else if (c == count - 1) {
      out[n] = (3.0 * f[n] - 4.0 * f[n - s] + f[n - 2 * s]) * inv2h;
    } else {
      out[n] = (f[n + s] - f[n - s]) * inv2h;
    }
  });
  return out;
}

template <typename T>
Field<T> d2dx2(const Field<T>& f, Axis axis) {
  const Grid3D& g = f.grid();
  const std::size_t s = g.stride(axis);
  const double invh2 = 1.0 / (g.h(axis) * g.h(axis));
  Field<T> out(g);
  for_each_along(g, axis, [&](std::size_t n, std::size_t c, std::size_t count) {
    if (c == 0) {
      out[n] = count >= 4 ? (2.0 * f[n] - 5.0 * f[n + s] + 4.0 * f[n + 2 * s] - f[n + 3 * s]) * invh2
                          : (f[n] - 2.0 * f[n + s] + f[n + 2 * s]) * invh2;
    } else if (c == count - 1) {
      out[n] = count >= 4 ? (2.0 * f[n] - 5.0 * f[n - s] + 4.0 * f[n - 2 * s] - f[n - 3 * s]) * invh2
                          : (f[n] - 2.0 * f[n - s] + f[n - 2 * s]) * invh2;
    } else {
      out[n] = (f[n + s] - 2.0 * f[n] + f[n - s]) * invh2;
    }
  });
  return out;
}

template <typename T>
Field<T> laplacian(const Field<T>& f) {
  Field<T> out = d2dx2(f, Axis::x);
  const Field<T> dyy = d2dx2(f, Axis::y);
  const Field<T> dzz = d2dx2(f, Axis::z);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += dyy[n] + dzz[n];
  return out;
}

template <typename T>
VectorField<T> gradient(const Field<T>& f) {
  return VectorField<T>(ddx(f, Axis::x), ddx(f, Axis::y), ddx(f, Axis::z));
}

template <typename T>
Field<T> divergence(const VectorField<T>& v) {
  Field<T> out = ddx(v.x(), Axis::x);
  const Field<T> dy = ddx(v.y(), Axis::y);
  const Field<T> dz = ddx(v.z(), Axis::z);
  for (std::size_t n = 0; n < out.size(); ++n) out[n] += dy[n] + dz[n];
  return out;
}

template class Field<double>;
template class Field<cplx>;
template struct VectorField<double>;
template struct VectorField<cplx>;

template Field<double> ddx(const Field<double>&, Axis);
template Field<cplx> ddx(const Field<cplx>&, Axis);
template Field<double> d2dx2(const Field<double>&, Axis);
template Field<cplx> d2dx2(const Field<cplx>&, Axis);
template Field<double> laplacian(const Field<double>&);
template Field<cplx> laplacian(const Field<cplx>&);
template VectorField<double> gradient(const Field<double>&);
template VectorField<cplx> gradient(const Field<cplx>&);
template Field<double> divergence(const VectorField<double>&);
template Field<cplx> divergence(const VectorField<cplx>&);

}  // namespace eptrecon
