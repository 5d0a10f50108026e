#pragma once

#include <filesystem>
#include <string>
#include <variant>

#include "eptrecon/grid.hpp"

namespace eptrecon {

// Field dump: `<base>.bin` holds raw little-endian float64 values in grid index
// order (x fastest, z slowest; complex values interleaved re, im). `<base>.json`
// is the sidecar {"dims", "spacing", "origin", "kind", "name"}.
struct FieldHeader {
  std::array<std::size_t, 3> dims{};
  Vec3 spacing{};
  Vec3 origin{};
  std::string kind;  // "real" | "complex"
  std::string name;

  Grid3D grid() const { return Grid3D(dims[0], dims[1], dims[2], spacing, origin); }
};

void write_field(const std::filesystem::path& base, const RealField& f, const std::string& name);
void write_field(const std::filesystem::path& base, const ComplexField& f, const std::string& name);

FieldHeader read_field_header(const std::filesystem::path& base);
RealField read_real_field(const std::filesystem::path& base);
ComplexField read_complex_field(const std::filesystem::path& base);

}  // namespace eptrecon
