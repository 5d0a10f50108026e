#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eptrecon/constants.hpp"
#include "eptrecon/grid.hpp"

namespace eptrecon {

struct Material {
  double sigma = 0.0;    // S/m
  double eps_rel = 1.0;  // relative to free space

  void validate(const std::string& where) const;
  cplx admittivity(const Physics& phys) const {
    return {sigma, phys.omega * eps_rel * phys.eps_free};
  }
};

enum class ShapeKind { cylinder, sphere, box };

// Half-open interval zmin <= z < zmax.
struct ZRange {
  double zmin;
  double zmax;
};

// Cylinders are z-aligned: `radius` about (center.x, center.y), spanning the
// whole domain unless `z_range` clips them. Boxes use `half_extent`.
struct Shape {
  ShapeKind kind = ShapeKind::cylinder;
  Vec3 center{};
  double radius = 0.0;
  Vec3 half_extent{};
  std::optional<ZRange> z_range;
  Material material;
  std::string label;

  bool contains(const Vec3& p) const;
  // True when membership does not depend on z within [zlo, zhi].
  bool z_invariant(double zlo, double zhi) const;
  // Bounding box, clipped to the given z interval.
  std::pair<Vec3, Vec3> bounds(double zlo, double zhi) const;
};

struct Phantom {
  Material background;
  std::vector<Shape> shapes;  // later shapes win
  double collar_d = 0.0;      // m; nodes this close to a grid face take the background (0: none)
  double smoothing = 0.0;     // m; Gaussian std applied after sampling (0 = sharp)
};

// Axis-aligned box the phantom lives in, centred on `center`.
struct Domain {
  Vec3 center{};
  Vec3 half_extent{};

  double lo(int a) const { return center[a] - half_extent[a]; }
  double hi(int a) const { return center[a] + half_extent[a]; }
};

Domain domain_of(const Grid3D& grid);

struct Model1Config {
  Domain domain;
  Material background;
  std::vector<Shape> anomalies;  // must be z-invariant
  double collar_d = 0.0;
  double smoothing = 0.0;
};

// Ω₋ = {z < 0} reuses the Model 1 layout in `lower`; Ω₊ = {z >= 0} carries its
// own shapes, which may vary with z.
struct Model2Config {
  Domain domain;
  Material background;
  std::vector<Shape> lower;
  std::vector<Shape> upper;
  double collar_d = 0.0;
  double smoothing = 0.0;
};

Phantom build_model1(const Model1Config& cfg);
Phantom build_model2(const Model2Config& cfg);

// Conductivity and permittivity sampled on a grid, plus the angular frequency
// needed to form γ = σ + iωε.
struct Admittivity {
  RealField sigma;  // S/m
  RealField eps;    // F/m
  double omega = kDefaultOmega;

  const Grid3D& grid() const { return sigma.grid(); }
  ComplexField gamma() const;
  RealField omega_eps() const;
  static Admittivity from_gamma(const ComplexField& gamma, double omega);
};

// Throws NumericalError unless σ > 0 and ε > 0 everywhere and all finite.
void check_admissible(const Admittivity& a);

Admittivity sample(const Phantom& phantom, const Grid3D& grid, const Physics& phys = {});

// Nodes covered by a shape whose material differs from the background and that
// lie outside the collar.
std::vector<std::uint8_t> anomaly_support(const Phantom& phantom, const Grid3D& grid);

// ---- JSON description ---------------------------------------------------------

inline constexpr const char* kPhantomSchema = "eptrecon.phantom/1";

struct GridHint {
  std::array<std::size_t, 3> dims{33, 33, 33};
  Vec3 extent{0.2, 0.2, 0.2};  // m, full edge lengths; the grid is centred on 0

  Grid3D grid() const;
};

struct PhantomDocument {
  std::string model;  // "model1" | "model2"
  GridHint grid;
  Physics physics;
  Phantom phantom;
  Model1Config model1;  // filled when model == "model1"
  Model2Config model2;  // filled when model == "model2"
};

// Parse and validate; throws ConfigError with a line/column or JSON-pointer
// location on failure.
PhantomDocument parse_phantom_document(const std::string& text);
PhantomDocument load_phantom_document(const std::filesystem::path& path);
std::string phantom_document_to_json(const PhantomDocument& doc);

}  // namespace eptrecon
