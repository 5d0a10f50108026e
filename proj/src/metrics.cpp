#include "eptrecon/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace eptrecon {

namespace {

template <typename T>
double l2_impl(const Field<T>& a, const Field<T>& b, const Mask* region) {
  require_same_grid(a.grid(), b.grid(), "l2_error");
  if (region && region->size() != a.size()) throw std::invalid_argument("l2_error: region size mismatch");
  double s = 0.0;
  std::size_t used = 0;
  for (std::size_t n = 0; n < a.size(); ++n) {
    if (region && !(*region)[n]) continue;
    s += std::norm(a[n] - b[n]);
    ++used;
  }
  if (used == 0) throw std::invalid_argument("l2_error: empty region");
  return std::sqrt(s * a.grid().node_volume());
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw IoError("cannot parse number '" + s + "'");
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  std::ofstream os(path, mode);
  if (!os) throw IoError("cannot write " + path.string());
  return os;
}

}  // namespace

double l2_error(const ComplexField& a, const ComplexField& b, const Mask* region) {
  return l2_impl(a, b, region);
}
double l2_error(const RealField& a, const RealField& b, const Mask* region) {
  return l2_impl(a, b, region);
}

double anomaly_accuracy(const ComplexField& gamma, const ComplexField& truth, const Mask& S) {
  require_same_grid(gamma.grid(), truth.grid(), "anomaly_accuracy");
  if (S.size() != gamma.size()) throw std::invalid_argument("anomaly_accuracy: mask size mismatch");
  double s = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < S.size(); ++n) {
    if (!S[n]) continue;
    if (truth[n] == cplx{}) throw std::invalid_argument("anomaly_accuracy: true admittivity vanishes on S");
    s += std::abs(gamma[n] / truth[n] - 1.0);
    ++count;
  }
  if (count == 0) throw std::invalid_argument("anomaly_accuracy: empty anomaly region");
  return s / static_cast<double>(count);
}

SliceWindow export_slice(const RealField& f, std::size_t z_index, const std::filesystem::path& path,
                         SliceFormat format, std::optional<SliceWindow> window) {
  const Grid3D& g = f.grid();
  if (z_index >= g.nz()) throw std::out_of_range("export_slice: z index outside the grid");
  SliceWindow w{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
  if (window) {
    w = *window;
  } else {
    for (std::size_t j = 0; j < g.ny(); ++j)
      for (std::size_t i = 0; i < g.nx(); ++i) {
        const double v = f.at(i, j, z_index);
        if (!std::isfinite(v)) continue;
        w.lo = std::min(w.lo, v);
        w.hi = std::max(w.hi, v);
      }
    if (!std::isfinite(w.lo)) w = {0.0, 0.0};
  }

  if (format == SliceFormat::csv) {
    auto os = open_out(path);
    for (std::size_t j = 0; j < g.ny(); ++j) {
      for (std::size_t i = 0; i < g.nx(); ++i) os << (i ? "," : "") << fmt(f.at(i, j, z_index));
      os << '\n';
    }
    return w;
  }

  // Row 0 of the image is the largest y so the picture reads with y upward.
  std::vector<unsigned char> pixels;
  pixels.reserve(g.nx() * g.ny());
  for (std::size_t jj = 0; jj < g.ny(); ++jj) {
    const std::size_t j = g.ny() - 1 - jj;
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double v = f.at(i, j, z_index);
      unsigned char p = 0;
      if (std::isfinite(v)) {
        if (w.hi > w.lo) {
          const double t = std::clamp((v - w.lo) / (w.hi - w.lo), 0.0, 1.0);
          p = static_cast<unsigned char>(std::lround(1.0 + 254.0 * t));
        } else {
          p = 128;
        }
      }
      pixels.push_back(p);
    }
  }
  {
    auto os = open_out(path, std::ios::binary);
    os << "P5\n" << g.nx() << ' ' << g.ny() << "\n255\n";
    os.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  }
  nlohmann::json side = {{"window_min", w.lo}, {"window_max", w.hi}, {"z_index", z_index},
                         {"width", g.nx()},    {"height", g.ny()},   {"zero_means", "not finite"}};
  auto os = open_out(path.string() + ".json");
  os << side.dump(2) << '\n';
  return w;
}

std::vector<std::vector<double>> read_slice_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    std::vector<double> row;
    for (const auto& c : split(line)) row.push_back(parse(c));
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_convergence_csv(const std::filesystem::path& path, const std::vector<ConvergenceRow>& rows) {
  auto os = open_out(path);
  os << kConvergenceHeader << '\n';
  for (const auto& r : rows)
    os << r.n << ',' << fmt(r.step) << ',' << fmt(r.error) << ',' << fmt(r.J) << ',' << fmt(r.metric) << '\n';
}

std::vector<ConvergenceRow> read_convergence_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(is, line) || line != kConvergenceHeader)
    throw IoError(path.string() + ": unexpected convergence header");
  std::vector<ConvergenceRow> rows;
  while (std::getline(is, line)) {
    const auto c = split(line);
    if (c.size() != 5) throw IoError(path.string() + ": malformed row '" + line + "'");
    rows.push_back({static_cast<std::size_t>(parse(c[0])), parse(c[1]), parse(c[2]), parse(c[3]), parse(c[4])});
  }
  return rows;
}

}  // namespace eptrecon
