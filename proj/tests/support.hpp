#pragma once

#include <cmath>
#include <random>

#include "eptrecon/grid.hpp"

namespace eptrecon::testing {

// n³ nodes covering [-L/2, L/2]³.
inline Grid3D cube(std::size_t n, double L = 0.2) {
  const double h = L / static_cast<double>(n - 1);
  return Grid3D(n, n, n, {h, h, h}, {-L / 2, -L / 2, -L / 2});
}

template <typename T, typename F>
Field<T> sample_fn(const Grid3D& g, F&& fn) {
  Field<T> f(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const Vec3 p = g.position(n);
    f[n] = fn(p[0], p[1], p[2]);
  }
  return f;
}

// Smooth complex field: a few random plane waves with wavelengths comparable
// to the box, plus a unit offset.
inline ComplexField random_smooth(const Grid3D& g, std::uint64_t seed, double L = 0.2) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  struct Wave {
    Vec3 k;
    cplx a;
    double phase;
  };
  std::vector<Wave> waves;
  for (int w = 0; w < 4; ++w)
    waves.push_back({{u(rng) * 6.0 / L, u(rng) * 6.0 / L, u(rng) * 6.0 / L}, {u(rng), u(rng)}, 3.0 * u(rng)});
  return sample_fn<cplx>(g, [&](double x, double y, double z) {
    cplx v{1.0, 0.2};
    for (const Wave& w : waves) v += w.a * std::sin(w.k[0] * x + w.k[1] * y + w.k[2] * z + w.phase);
    return v;
  });
}

// Max |a - b| over nodes at least `margin` away from every face.
template <typename T>
double max_diff(const Field<T>& a, const Field<T>& b, std::size_t margin = 0) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n)
    if (a.grid().face_distance(n) >= margin) m = std::max(m, static_cast<double>(std::abs(a[n] - b[n])));
  return m;
}

template <typename T>
double max_abs(const Field<T>& a, std::size_t margin = 0) {
  return max_diff(a, Field<T>(a.grid()), margin);
}

}  // namespace eptrecon::testing
