#include "eptrecon/phantom.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "json.hpp"

namespace eptrecon {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kZTol = 1e-9;  // m; absorbs round-off of node coordinates on z = 0

bool in_z_range(const std::optional<ZRange>& r, double z) {
  if (!r) return true;
  return z + kZTol >= r->zmin && z + kZTol < r->zmax;
}

ZRange intersect(const std::optional<ZRange>& r, double lo, double hi) {
  if (!r) return {lo, hi};
  return {std::max(r->zmin, lo), std::min(r->zmax, hi)};
}

std::string shape_name(const Shape& s, std::size_t i) {
  return s.label.empty() ? "shape #" + std::to_string(i) : "shape '" + s.label + "'";
}

void check_geometry(const Shape& s, const std::string& name) {
  switch (s.kind) {
    case ShapeKind::cylinder:
    case ShapeKind::sphere:
      if (!(s.radius > 0.0)) throw ConfigError(name + ": radius must be positive");
      break;
    case ShapeKind::box:
      for (double h : s.half_extent)
        if (!(h > 0.0)) throw ConfigError(name + ": half extents must be positive");
      break;
  }
  if (s.z_range && !(s.z_range->zmax > s.z_range->zmin))
    throw ConfigError(name + ": empty z range");
  s.material.validate(name);
}

// Shapes must stay clear of the collar in x and y; in z they must stay inside
// the domain (z-invariant shapes span it entirely).
void check_inside(const Shape& s, const std::string& name, const Domain& d, double collar) {
  const auto [lo, hi] = s.bounds(d.lo(2), d.hi(2));
  for (int a = 0; a < 2; ++a) {
    if (lo[a] < d.lo(a) + collar - 1e-12 || hi[a] > d.hi(a) - collar + 1e-12) {
      throw ConfigError(name + " extends outside the imaging domain (or into the boundary collar)");
    }
  }
  if (lo[2] < d.lo(2) - 1e-12 || hi[2] > d.hi(2) + 1e-12) {
    throw ConfigError(name + " extends outside the imaging domain along z");
  }
}

void check_domain(const Domain& d, double collar, double smoothing) {
  for (double h : d.half_extent)
    if (!(h > 0.0)) throw ConfigError("domain half extents must be positive");
  if (collar < 0.0) throw ConfigError("collar_d must be non-negative");
  if (smoothing < 0.0) throw ConfigError("smoothing must be non-negative");
}

}  // namespace

void Material::validate(const std::string& where) const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma))
    throw ConfigError(where + ": conductivity must be >= 0 S/m");
  if (!(eps_rel >= 1.0) || !std::isfinite(eps_rel))
    throw ConfigError(where + ": relative permittivity must be >= 1");
}

bool Shape::contains(const Vec3& p) const {
  if (!in_z_range(z_range, p[2])) return false;
  switch (kind) {
    case ShapeKind::cylinder: {
      const double dx = p[0] - center[0], dy = p[1] - center[1];
      return dx * dx + dy * dy <= radius * radius;
    }
    case ShapeKind::sphere: {
      const double dx = p[0] - center[0], dy = p[1] - center[1], dz = p[2] - center[2];
      return dx * dx + dy * dy + dz * dz <= radius * radius;
    }
    case ShapeKind::box:
      return std::abs(p[0] - center[0]) <= half_extent[0] &&
             std::abs(p[1] - center[1]) <= half_extent[1] &&
             std::abs(p[2] - center[2]) <= half_extent[2];
  }
  return false;
}

bool Shape::z_invariant(double zlo, double zhi) const {
  const bool range_ok = !z_range || (z_range->zmin <= zlo && z_range->zmax > zhi);
  switch (kind) {
    case ShapeKind::cylinder: return range_ok;
    case ShapeKind::box:
      return range_ok && center[2] - half_extent[2] <= zlo && center[2] + half_extent[2] >= zhi;
    case ShapeKind::sphere: return false;
  }
  return false;
}

std::pair<Vec3, Vec3> Shape::bounds(double zlo, double zhi) const {
  Vec3 lo{}, hi{};
  switch (kind) {
    case ShapeKind::cylinder:
      lo = {center[0] - radius, center[1] - radius, zlo};
      hi = {center[0] + radius, center[1] + radius, zhi};
      break;
    case ShapeKind::sphere:
      for (int a = 0; a < 3; ++a) {
        lo[a] = center[a] - radius;
        hi[a] = center[a] + radius;
      }
      break;
    case ShapeKind::box:
      for (int a = 0; a < 3; ++a) {
        lo[a] = center[a] - half_extent[a];
        hi[a] = center[a] + half_extent[a];
      }
      break;
  }
  const ZRange zr = intersect(z_range, zlo, zhi);
  lo[2] = std::max(lo[2], zr.zmin);
  hi[2] = std::min(hi[2], zr.zmax);
  return {lo, hi};
}

Domain domain_of(const Grid3D& grid) {
  Domain d;
  for (int a = 0; a < 3; ++a) {
    const double len = grid.spacing()[a] * static_cast<double>(grid.count(static_cast<Axis>(a)) - 1);
    d.half_extent[a] = 0.5 * len;
    d.center[a] = grid.origin()[a] + 0.5 * len;
  }
  return d;
}

Phantom build_model1(const Model1Config& cfg) {
  check_domain(cfg.domain, cfg.collar_d, cfg.smoothing);
  cfg.background.validate("background");
  Phantom p{cfg.background, {}, cfg.collar_d, cfg.smoothing};
  for (std::size_t i = 0; i < cfg.anomalies.size(); ++i) {
    const Shape& s = cfg.anomalies[i];
    const std::string name = shape_name(s, i);
    check_geometry(s, name);
    if (!s.z_invariant(cfg.domain.lo(2), cfg.domain.hi(2)))
      throw ConfigError(name + ": model 1 anomalies must not vary along z");
    check_inside(s, name, cfg.domain, cfg.collar_d);
    p.shapes.push_back(s);
  }
  return p;
}

Phantom build_model2(const Model2Config& cfg) {
  check_domain(cfg.domain, cfg.collar_d, cfg.smoothing);
  cfg.background.validate("background");
  Phantom p{cfg.background, {}, cfg.collar_d, cfg.smoothing};
  for (std::size_t i = 0; i < cfg.lower.size(); ++i) {
    Shape s = cfg.lower[i];
    const std::string name = "lower " + shape_name(s, i);
    check_geometry(s, name);
    if (!s.z_invariant(cfg.domain.lo(2), cfg.domain.hi(2)))
      throw ConfigError(name + ": lower-half anomalies follow model 1 and must not vary along z");
    check_inside(s, name, cfg.domain, cfg.collar_d);
    s.z_range = intersect(s.z_range, -kInf, 0.0);
    p.shapes.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < cfg.upper.size(); ++i) {
    Shape s = cfg.upper[i];
    const std::string name = "upper " + shape_name(s, i);
    check_geometry(s, name);
    check_inside(s, name, cfg.domain, cfg.collar_d);
    s.z_range = intersect(s.z_range, 0.0, kInf);
    p.shapes.push_back(std::move(s));
  }
  return p;
}

ComplexField Admittivity::gamma() const {
  require_same_grid(sigma.grid(), eps.grid(), "Admittivity::gamma");
  const double w = omega;
  return zip(sigma, eps, [w](double s, double e) { return cplx(s, w * e); });
}

RealField Admittivity::omega_eps() const {
  const double w = omega;
  return map(eps, [w](double e) { return w * e; });
}

Admittivity Admittivity::from_gamma(const ComplexField& gamma, double omega) {
  return {real_part(gamma), map(gamma, [omega](cplx g) { return g.imag() / omega; }), omega};
}

void check_admissible(const Admittivity& a) {
  for (std::size_t n = 0; n < a.sigma.size(); ++n) {
    if (!(a.sigma[n] > 0.0) || !(a.eps[n] > 0.0) || !std::isfinite(a.sigma[n]) ||
        !std::isfinite(a.eps[n])) {
      std::ostringstream msg;
      msg << "admittivity not admissible at node " << n << ": sigma=" << a.sigma[n]
          << " eps=" << a.eps[n];
      throw NumericalError(msg.str());
    }
  }
}

namespace {

std::vector<double> gaussian_kernel(double std_nodes) {
  const int half = std::max(1, static_cast<int>(std::ceil(3.0 * std_nodes)));
  std::vector<double> w(2 * half + 1);
  for (int t = -half; t <= half; ++t)
    w[t + half] = std::exp(-0.5 * (t * t) / (std_nodes * std_nodes));
  return w;
}

// Separable Gaussian blur; the kernel is renormalised where it leaves the grid.
void smooth_in_place(RealField& f, double std_m) {
  const Grid3D& g = f.grid();
  for (Axis axis : kAxes) {
    const auto w = gaussian_kernel(std_m / g.h(axis));
    const int half = static_cast<int>(w.size() / 2);
    const std::size_t s = g.stride(axis);
    const int count = static_cast<int>(g.count(axis));
    RealField out(g);
    for (std::size_t n = 0; n < g.size(); ++n) {
      const int c = static_cast<int>(g.ijk(n)[static_cast<int>(axis)]);
      double acc = 0.0, norm = 0.0;
      for (int t = -half; t <= half; ++t) {
        const int cc = c + t;
        if (cc < 0 || cc >= count) continue;
        const std::ptrdiff_t off = static_cast<std::ptrdiff_t>(t) * static_cast<std::ptrdiff_t>(s);
        acc += w[t + half] * f[static_cast<std::size_t>(static_cast<std::ptrdiff_t>(n) + off)];
        norm += w[t + half];
      }
      out[n] = acc / norm;
    }
    f = std::move(out);
  }
}

double face_distance_m(const Grid3D& g, const Vec3& p) {
  double d = kInf;
  for (int a = 0; a < 3; ++a) {
    const double lo = g.origin()[a];
    const double hi = lo + g.spacing()[a] * static_cast<double>(g.count(static_cast<Axis>(a)) - 1);
    d = std::min({d, p[a] - lo, hi - p[a]});
  }
  return d;
}

// Index of the winning shape at p, or -1 for background.
int winning_shape(const Phantom& ph, const Vec3& p) {
  int win = -1;
  for (std::size_t s = 0; s < ph.shapes.size(); ++s)
    if (ph.shapes[s].contains(p)) win = static_cast<int>(s);
  return win;
}

bool in_collar(const Phantom& ph, const Grid3D& g, const Vec3& p) {
  if (ph.collar_d <= 0.0) return false;
  const double tol = 1e-9 * *std::min_element(g.spacing().begin(), g.spacing().end());
  return face_distance_m(g, p) <= ph.collar_d + tol;
}

}  // namespace

Admittivity sample(const Phantom& phantom, const Grid3D& grid, const Physics& phys) {
  RealField sigma(grid, phantom.background.sigma);
  RealField eps_rel(grid, phantom.background.eps_rel);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Vec3 p = grid.position(n);
    const int s = winning_shape(phantom, p);
    if (s >= 0) {
      sigma[n] = phantom.shapes[s].material.sigma;
      eps_rel[n] = phantom.shapes[s].material.eps_rel;
    }
  }
  if (phantom.smoothing > 0.0) {
    smooth_in_place(sigma, phantom.smoothing);
    smooth_in_place(eps_rel, phantom.smoothing);
  }
  for (std::size_t n = 0; n < grid.size(); ++n) {
    if (in_collar(phantom, grid, grid.position(n))) {
      sigma[n] = phantom.background.sigma;
      eps_rel[n] = phantom.background.eps_rel;
    }
  }
  const double eps_free = phys.eps_free;
  return {std::move(sigma), map(eps_rel, [eps_free](double e) { return e * eps_free; }), phys.omega};
}

std::vector<std::uint8_t> anomaly_support(const Phantom& phantom, const Grid3D& grid) {
  std::vector<std::uint8_t> mask(grid.size(), 0);
  for (std::size_t n = 0; n < grid.size(); ++n) {
    const Vec3 p = grid.position(n);
    if (in_collar(phantom, grid, p)) continue;
    const int s = winning_shape(phantom, p);
    if (s < 0) continue;
    const Material& m = phantom.shapes[s].material;
    if (m.sigma != phantom.background.sigma || m.eps_rel != phantom.background.eps_rel) mask[n] = 1;
  }
  return mask;
}

Grid3D GridHint::grid() const {
  Vec3 h{}, origin{};
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 3) throw ConfigError("grid dims must be >= 3");
    if (!(extent[a] > 0.0)) throw ConfigError("grid extent must be positive");
    h[a] = extent[a] / static_cast<double>(dims[a] - 1);
    origin[a] = -0.5 * extent[a];
  }
  return Grid3D(dims[0], dims[1], dims[2], h, origin);
}

// ---- JSON --------------------------------------------------------------------

namespace {

using nlohmann::json;

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
  throw ConfigError("phantom config " + (path.empty() ? std::string("/") : path) + ": " + what);
}

const json& require(const json& j, const char* key, const std::string& path) {
  if (!j.is_object()) schema_error(path, "expected an object");
  auto it = j.find(key);
  if (it == j.end()) schema_error(path, std::string("missing required key '") + key + "'");
  return *it;
}

double number(const json& j, const std::string& path) {
  if (!j.is_number()) schema_error(path, "expected a number");
  return j.get<double>();
}

Vec3 vec3(const json& j, const std::string& path) {
  if (!j.is_array() || j.size() != 3) schema_error(path, "expected an array of 3 numbers");
  return {number(j[0], path + "/0"), number(j[1], path + "/1"), number(j[2], path + "/2")};
}

Material parse_material(const json& j, const std::string& path) {
  Material m{number(require(j, "sigma", path), path + "/sigma"),
             number(require(j, "eps_rel", path), path + "/eps_rel")};
  try {
    m.validate(path);
  } catch (const ConfigError& e) {
    schema_error(path, e.what());
  }
  return m;
}

Shape parse_shape(const json& j, const std::string& path) {
  Shape s;
  const json& kind = require(j, "kind", path);
  if (!kind.is_string()) schema_error(path + "/kind", "expected a string");
  const std::string k = kind.get<std::string>();
  if (k == "cylinder") {
    s.kind = ShapeKind::cylinder;
  } else if (k == "sphere") {
    s.kind = ShapeKind::sphere;
  } else if (k == "box") {
    s.kind = ShapeKind::box;
  } else {
    schema_error(path + "/kind", "unknown shape kind '" + k + "'");
  }
  const json& c = require(j, "center", path);
  if (c.is_array() && c.size() == 2 && s.kind == ShapeKind::cylinder) {
    s.center = {number(c[0], path + "/center/0"), number(c[1], path + "/center/1"), 0.0};
  } else {
    s.center = vec3(c, path + "/center");
  }
  if (s.kind == ShapeKind::box) {
    s.half_extent = vec3(require(j, "half_extent", path), path + "/half_extent");
  } else {
    s.radius = number(require(j, "radius", path), path + "/radius");
  }
  if (auto it = j.find("z_range"); it != j.end()) {
    if (!it->is_array() || it->size() != 2) schema_error(path + "/z_range", "expected [zmin, zmax]");
    s.z_range = ZRange{number((*it)[0], path + "/z_range/0"), number((*it)[1], path + "/z_range/1")};
  }
  s.material = parse_material(require(j, "material", path), path + "/material");
  if (auto it = j.find("label"); it != j.end() && it->is_string()) s.label = it->get<std::string>();
  return s;
}

std::vector<Shape> parse_shapes(const json& j, const std::string& path) {
  if (!j.is_array()) schema_error(path, "expected an array of shapes");
  std::vector<Shape> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(parse_shape(j[i], path + "/" + std::to_string(i)));
  return out;
}

json material_json(const Material& m) { return {{"sigma", m.sigma}, {"eps_rel", m.eps_rel}}; }

json shape_json(const Shape& s) {
  json j;
  switch (s.kind) {
    case ShapeKind::cylinder: j["kind"] = "cylinder"; break;
    case ShapeKind::sphere: j["kind"] = "sphere"; break;
    case ShapeKind::box: j["kind"] = "box"; break;
  }
  j["center"] = s.center;
  if (s.kind == ShapeKind::box) {
    j["half_extent"] = s.half_extent;
  } else {
    j["radius"] = s.radius;
  }
  if (s.z_range && std::isfinite(s.z_range->zmin) && std::isfinite(s.z_range->zmax))
    j["z_range"] = {s.z_range->zmin, s.z_range->zmax};
  j["material"] = material_json(s.material);
  if (!s.label.empty()) j["label"] = s.label;
  return j;
}

std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < std::min(byte, text.size()); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

}  // namespace

PhantomDocument parse_phantom_document(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = line_column(text, e.byte > 0 ? e.byte - 1 : 0);
    throw ConfigError("phantom config: JSON syntax error at line " + std::to_string(line) +
                      ", column " + std::to_string(col));
  }
  PhantomDocument doc;
  const json& schema = require(j, "schema", "");
  if (!schema.is_string() || schema.get<std::string>() != kPhantomSchema)
    schema_error("/schema", std::string("expected \"") + kPhantomSchema + "\"");
  const json& model = require(j, "model", "");
  if (!model.is_string()) schema_error("/model", "expected a string");
  doc.model = model.get<std::string>();
  if (doc.model != "model1" && doc.model != "model2")
    schema_error("/model", "must be \"model1\" or \"model2\"");

  if (auto it = j.find("grid"); it != j.end()) {
    const json& gj = *it;
    const json& dims = require(gj, "dims", "/grid");
    if (!dims.is_array() || dims.size() != 3) schema_error("/grid/dims", "expected 3 integers");
    for (int a = 0; a < 3; ++a) {
      if (!dims[a].is_number_integer() || dims[a].get<long long>() < 3)
        schema_error("/grid/dims/" + std::to_string(a), "expected an integer >= 3");
      doc.grid.dims[a] = dims[a].get<std::size_t>();
    }
    doc.grid.extent = vec3(require(gj, "extent", "/grid"), "/grid/extent");
    for (int a = 0; a < 3; ++a)
      if (!(doc.grid.extent[a] > 0.0)) schema_error("/grid/extent", "extents must be positive");
  }
  const Grid3D grid = doc.grid.grid();

  if (auto it = j.find("physics"); it != j.end()) {
    if (auto f = it->find("frequency_hz"); f != it->end())
      doc.physics.omega = 2.0 * std::numbers::pi * number(*f, "/physics/frequency_hz");
    if (auto m = it->find("mu0"); m != it->end()) doc.physics.mu0 = number(*m, "/physics/mu0");
    if (auto e = it->find("eps_free"); e != it->end()) doc.physics.eps_free = number(*e, "/physics/eps_free");
  }

  const Material background = parse_material(require(j, "background", ""), "/background");
  const double h = *std::min_element(grid.spacing().begin(), grid.spacing().end());
  const double collar = j.contains("collar_d") ? number(j["collar_d"], "/collar_d") : 2.0 * h;
  const double smoothing = j.contains("smoothing") ? number(j["smoothing"], "/smoothing") : 0.0;
  const Domain domain = domain_of(grid);

  try {
    if (doc.model == "model1") {
      doc.model1 = {domain, background, parse_shapes(require(j, "anomalies", ""), "/anomalies"), collar,
                    smoothing};
      doc.phantom = build_model1(doc.model1);
    } else {
      doc.model2 = {domain,
                    background,
                    parse_shapes(require(j, "lower", ""), "/lower"),
                    parse_shapes(require(j, "upper", ""), "/upper"),
                    collar,
                    smoothing};
      doc.phantom = build_model2(doc.model2);
    }
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    if (what.rfind("phantom config", 0) == 0) throw;
    throw ConfigError("phantom config: " + what);
  }
  return doc;
}

PhantomDocument load_phantom_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open phantom config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_phantom_document(buf.str());
}

std::string phantom_document_to_json(const PhantomDocument& doc) {
  json j;
  j["schema"] = kPhantomSchema;
  j["model"] = doc.model;
  j["grid"] = {{"dims", doc.grid.dims}, {"extent", doc.grid.extent}};
  j["physics"] = {{"frequency_hz", doc.physics.omega / (2.0 * std::numbers::pi)},
                  {"mu0", doc.physics.mu0},
                  {"eps_free", doc.physics.eps_free}};
  j["background"] = material_json(doc.phantom.background);
  j["collar_d"] = doc.phantom.collar_d;
  j["smoothing"] = doc.phantom.smoothing;
  auto shapes = [](const std::vector<Shape>& v) {
    json a = json::array();
    for (const auto& s : v) a.push_back(shape_json(s));
    return a;
  };
  if (doc.model == "model1") {
    j["anomalies"] = shapes(doc.model1.anomalies);
  } else {
    j["lower"] = shapes(doc.model2.lower);
    j["upper"] = shapes(doc.model2.upper);
  }
  return j.dump(2) + "\n";
}

}  // namespace eptrecon
