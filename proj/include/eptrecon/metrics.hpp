#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "eptrecon/grid.hpp"

namespace eptrecon {

using Mask = std::vector<std::uint8_t>;

// sqrt(Σ_region |a - b|² · hxhyhz). Whole grid when `region` is null; throws
// std::invalid_argument on an empty region.
double l2_error(const ComplexField& a, const ComplexField& b, const Mask* region = nullptr);
double l2_error(const RealField& a, const RealField& b, const Mask* region = nullptr);

// (1/|S|) Σ_S |γ/γ* - 1|, the node-quadrature form of the integral mean.
double anomaly_accuracy(const ComplexField& gamma, const ComplexField& truth, const Mask& S);

enum class SliceFormat { pgm, csv };

struct SliceWindow {
  double lo = 0.0;
  double hi = 0.0;
};

// Writes the z = z_index plane. PGM is 8-bit P5, min-max windowed over the
// finite values (or over `window`), with `<path>.json` recording the window;
// non-finite pixels are written as 0. CSV holds the raw values, one row per y.
SliceWindow export_slice(const RealField& f, std::size_t z_index, const std::filesystem::path& path,
                         SliceFormat format, std::optional<SliceWindow> window = std::nullopt);

std::vector<std::vector<double>> read_slice_csv(const std::filesystem::path& path);

// One row per iteration. Missing quantities are NaN and written as "nan".
struct ConvergenceRow {
  std::size_t n = 0;
  double step = 0.0;    // ||γ - γ_prev||₂
  double error = 0.0;   // ||γ - γ*||₂
  double J = 0.0;
  double metric = 0.0;  // anomaly accuracy
};

inline constexpr const char* kConvergenceHeader = "n,step_l2,error_l2,J,anomaly_metric";

void write_convergence_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows);
std::vector<ConvergenceRow> read_convergence_csv(const std::filesystem::path& path);

}  // namespace eptrecon
