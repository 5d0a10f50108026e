#include "eptrecon/field_io.hpp"

#include <bit>
#include <fstream>

#include "json.hpp"

namespace eptrecon {

static_assert(std::endian::native == std::endian::little,
              "field dumps are written in host order; big-endian hosts need byte swapping");

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path with_suffix(const fs::path& base, const char* suffix) {
  fs::path p = base;
  p += suffix;
  return p;
}

void write_sidecar(const fs::path& base, const Grid3D& g, const char* kind, const std::string& name) {
  json j;
  j["dims"] = {g.nx(), g.ny(), g.nz()};
  j["spacing"] = g.spacing();
  j["origin"] = g.origin();
  j["kind"] = kind;
  j["name"] = name;
  std::ofstream out(with_suffix(base, ".json"));
  if (!out) throw IoError("cannot write " + with_suffix(base, ".json").string());
  out << j.dump(2) << "\n";
}

template <typename T>
void write_raw(const fs::path& base, const Field<T>& f) {
  const fs::path path = with_suffix(base, ".bin");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(f.data().data()),
            static_cast<std::streamsize>(f.size() * sizeof(T)));
  if (!out) throw IoError("short write on " + path.string());
}

template <typename T>
Field<T> read_raw(const fs::path& base, const FieldHeader& header) {
  Field<T> f(header.grid());
  const fs::path path = with_suffix(base, ".bin");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  const auto bytes = static_cast<std::streamsize>(f.size() * sizeof(T));
  in.read(reinterpret_cast<char*>(f.data().data()), bytes);
  if (in.gcount() != bytes) throw IoError("truncated field dump " + path.string());
  return f;
}

}  // namespace

void write_field(const fs::path& base, const RealField& f, const std::string& name) {
  write_raw(base, f);
  write_sidecar(base, f.grid(), "real", name);
}

void write_field(const fs::path& base, const ComplexField& f, const std::string& name) {
  write_raw(base, f);
  write_sidecar(base, f.grid(), "complex", name);
}

FieldHeader read_field_header(const fs::path& base) {
  const fs::path path = with_suffix(base, ".json");
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  FieldHeader h;
  try {
    const json j = json::parse(in);
    h.dims = j.at("dims").get<std::array<std::size_t, 3>>();
    h.spacing = j.at("spacing").get<Vec3>();
    h.origin = j.at("origin").get<Vec3>();
    h.kind = j.at("kind").get<std::string>();
    h.name = j.value("name", std::string{});
  } catch (const json::exception& e) {
    throw IoError(path.string() + ": malformed field sidecar (" + e.what() + ")");
  }
  return h;
}

RealField read_real_field(const fs::path& base) {
  const FieldHeader h = read_field_header(base);
  if (h.kind != "real") throw IoError(base.string() + ": expected a real field");
  return read_raw<double>(base, h);
}

ComplexField read_complex_field(const fs::path& base) {
  const FieldHeader h = read_field_header(base);
  if (h.kind != "complex") throw IoError(base.string() + ": expected a complex field");
  return read_raw<cplx>(base, h);
}

}  // namespace eptrecon
