// eptrecon: phantom -> simulate -> reconstruct -> report, one run directory.
//
// Run directory layout (all fields are <name>.bin + <name>.json):
//   manifest.json            stages, arguments, seeds, versions, artifact hashes
//   phantom.json             normalised phantom description
//   truth/{gamma,sigma,eps_rel,support}
//   data/{hplus,hplus_clean} + data/simulate.json
//   direct/gamma
//   init/{gamma0,gamma_k01..,degenerate} + init/convergence.csv
//   newton/{gamma,gamma_n01..} + newton/convergence.csv

#include <Eigen/Core>

#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "eptrecon/field_io.hpp"
#include "eptrecon/forward.hpp"
#include "eptrecon/metrics.hpp"
#include "eptrecon/phantom.hpp"
#include "eptrecon/recon_direct.hpp"
#include "eptrecon/recon_init.hpp"
#include "eptrecon/recon_newton.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace eptrecon;

namespace {

constexpr const char* kVersion = "0.1.0";
constexpr const char* kReconSchema = "eptrecon.recon/1";
constexpr const char* kManifestSchema = "eptrecon.manifest/1";

enum Exit : int { kOk = 0, kConfig = 2, kSolver = 3, kIo = 4 };

// Snapshot indices kept on disk for the report.
const std::vector<std::size_t> kInitKeep{1, 3, 5, 10};
const std::vector<std::size_t> kNewtonKeep{1, 2, 5, 10};

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + p.string());
  out << s;
  if (!out) throw IoError("short write on " + p.string());
}

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create " + p.string() + ": " + ec.message());
}

std::string fnv1a(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot hash " + p.string());
  std::uint64_t h = 1469598103934665603ull;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ull;
    }
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string zero_pad(std::size_t v) {
  std::ostringstream os;
  os << std::setw(2) << std::setfill('0') << v;
  return os.str();
}

// ---- manifest -----------------------------------------------------------------

class Manifest {
 public:
  explicit Manifest(fs::path run) : run_(std::move(run)) {
    const fs::path p = run_ / "manifest.json";
    if (fs::exists(p)) {
      try {
        doc_ = json::parse(read_text(p));
      } catch (const json::exception& e) {
        throw IoError(p.string() + ": malformed manifest (" + e.what() + ")");
      }
    } else {
      doc_ = {{"schema", kManifestSchema}};
    }
    doc_["version"] = kVersion;
    doc_["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                    std::to_string(EIGEN_MINOR_VERSION);
  }

  // Replaces the stage entry; `files` are relative to the run directory.
  void record(const std::string& stage, json args, const std::vector<std::string>& files) {
    json artifacts = json::object();
    for (const auto& f : files) artifacts[f] = fnv1a(run_ / f);
    doc_["stages"][stage] = {{"args", std::move(args)}, {"artifacts", std::move(artifacts)}};
    write_text(run_ / "manifest.json", doc_.dump(2) + "\n");
  }

  const json& doc() const { return doc_; }

 private:
  fs::path run_;
  json doc_;
};

// Field dump plus its sidecar, relative names for the manifest.
void dump(const fs::path& run, const std::string& rel, const ComplexField& f, std::vector<std::string>& files) {
  write_field(run / rel, f, fs::path(rel).filename().string());
  files.push_back(rel + ".bin");
  files.push_back(rel + ".json");
}

void dump(const fs::path& run, const std::string& rel, const RealField& f, std::vector<std::string>& files) {
  write_field(run / rel, f, fs::path(rel).filename().string());
  files.push_back(rel + ".bin");
  files.push_back(rel + ".json");
}

bool field_exists(const fs::path& base) {
  fs::path b = base, j = base;
  b += ".bin";
  j += ".json";
  return fs::exists(b) && fs::exists(j);
}

RealField mask_field(const Grid3D& g, const Mask& m) {
  RealField f(g);
  for (std::size_t n = 0; n < g.size(); ++n) f[n] = m[n] ? 1.0 : 0.0;
  return f;
}

Mask field_mask(const RealField& f) {
  Mask m(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) m[n] = f[n] > 0.5 ? 1 : 0;
  return m;
}

RealField rel_permittivity(const ComplexField& gamma, const Physics& phys) {
  return map(gamma, [&](cplx v) { return v.imag() / (phys.omega * phys.eps_free); });
}

PhantomDocument load_run_phantom(const fs::path& run) {
  const fs::path p = run / "phantom.json";
  if (!fs::exists(p)) throw IoError(p.string() + " missing; run `eptrecon phantom` first");
  return parse_phantom_document(read_text(p));
}

// ---- recon config -------------------------------------------------------------

struct ReconConfig {
  double direct_guard = 1e-3;
  InitConfig init;
  NewtonConfig newton;
  json echo;
};

template <typename T>
void take(const json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "/" + key + ": wrong type");
  }
}

void reject_unknown(const json& obj, const std::vector<std::string>& known, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw ConfigError(where + ": unknown key \"" + it.key() + "\"");
}

SolverKind solver_kind(const std::string& s, const std::string& where) {
  if (s == "auto") return SolverKind::automatic;
  if (s == "direct") return SolverKind::direct;
  if (s == "bicgstab") return SolverKind::bicgstab;
  throw ConfigError(where + ": solver must be auto, direct or bicgstab");
}

ReconConfig parse_recon_config(const std::string& text, const PhantomDocument& doc) {
  ReconConfig rc;
  const Physics& ph = doc.physics;
  rc.init.sigma_boundary = doc.phantom.background.sigma;
  rc.init.omega_eps_boundary = ph.omega * doc.phantom.background.eps_rel * ph.eps_free;
  if (text.empty()) {
    rc.echo = {{"schema", kReconSchema}};
    return rc;
  }
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("recon config: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("recon config: top level must be an object");
  reject_unknown(j, {"schema", "direct", "init", "newton", "solver"}, "recon config");
  if (j.value("schema", std::string(kReconSchema)) != kReconSchema)
    throw ConfigError(std::string("recon config: schema must be ") + kReconSchema);

  if (j.contains("solver")) {
    const json& s = j["solver"];
    reject_unknown(s, {"tol", "kind"}, "/solver");
    SolveOptions so;
    take(s, "tol", so.tol, "/solver");
    std::string kind = "auto";
    take(s, "kind", kind, "/solver");
    so.kind = solver_kind(kind, "/solver/kind");
    rc.newton.solve = so;
  }
  if (j.contains("direct")) {
    reject_unknown(j["direct"], {"guard"}, "/direct");
    take(j["direct"], "guard", rc.direct_guard, "/direct");
  }
  if (j.contains("init")) {
    const json& s = j["init"];
    const std::string w = "/init";
    reject_unknown(s,
                   {"rho_fraction", "tau_D", "dilate", "max_D_fraction", "k_max", "k_pick", "eps1", "stop_on_truth",
                    "sigma_boundary", "omega_eps_boundary", "sigma0", "omega_eps0", "collar_nodes", "direct_guard"},
                   w);
    InitConfig& c = rc.init;
    take(s, "rho_fraction", c.rho_fraction, w);
    take(s, "tau_D", c.tau_D, w);
    take(s, "dilate", c.dilate, w);
    take(s, "max_D_fraction", c.max_D_fraction, w);
    take(s, "k_max", c.k_max, w);
    take(s, "k_pick", c.k_pick, w);
    take(s, "eps1", c.eps1, w);
    take(s, "stop_on_truth", c.stop_on_truth, w);
    take(s, "sigma_boundary", c.sigma_boundary, w);
    take(s, "omega_eps_boundary", c.omega_eps_boundary, w);
    take(s, "sigma0", c.sigma0, w);
    take(s, "omega_eps0", c.omega_eps0, w);
    take(s, "collar_nodes", c.collar_nodes, w);
    take(s, "direct_guard", c.direct_guard, w);
  }
  if (j.contains("newton")) {
    const json& s = j["newton"];
    const std::string w = "/newton";
    reject_unknown(s, {"n_max", "eps2", "stop_on_truth", "beta", "freeze_collar", "collar_nodes", "stagnation"}, w);
    NewtonConfig& c = rc.newton;
    take(s, "n_max", c.n_max, w);
    take(s, "eps2", c.eps2, w);
    take(s, "stop_on_truth", c.stop_on_truth, w);
    take(s, "beta", c.beta, w);
    take(s, "freeze_collar", c.freeze_collar, w);
    take(s, "collar_nodes", c.collar_nodes, w);
    take(s, "stagnation", c.stagnation, w);
  }
  rc.init.validate();
  rc.newton.validate();
  rc.echo = j;
  return rc;
}

// ---- phantom ------------------------------------------------------------------

struct PhantomArgs {
  std::string config;
  std::string out;
};

int cmd_phantom(const PhantomArgs& a) {
  // Everything is validated before the first byte is written.
  const std::string text = read_text(a.config);
  const PhantomDocument doc = parse_phantom_document(text);
  const Grid3D g = doc.grid.grid();
  const Admittivity adm = sample(doc.phantom, g, doc.physics);
  check_admissible(adm);
  const Mask S = anomaly_support(doc.phantom, g);

  const fs::path run(a.out);
  ensure_dir(run / "truth");
  std::vector<std::string> files;
  write_text(run / "phantom.json", phantom_document_to_json(doc));
  files.push_back("phantom.json");
  dump(run, "truth/gamma", adm.gamma(), files);
  dump(run, "truth/sigma", adm.sigma, files);
  dump(run, "truth/eps_rel", rel_permittivity(adm.gamma(), doc.physics), files);
  dump(run, "truth/support", mask_field(g, S), files);
  Manifest(run).record("phantom", {{"config", fs::path(a.config).filename().string()}, {"config_text", text}},
                       files);
  std::cout << "phantom " << doc.model << " on " << g.nx() << "x" << g.ny() << "x" << g.nz() << " -> " << run
            << "\n";
  return kOk;
}

// ---- simulate -----------------------------------------------------------------

struct SimulateArgs {
  std::string run;
  std::size_t refine = 2;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string profile = "lateral";
};

int cmd_simulate(const SimulateArgs& a) {
  const fs::path run(a.run);
  const PhantomDocument doc = load_run_phantom(run);
  const Grid3D g = doc.grid.grid();
  BoundaryProfile profile;
  if (a.profile == "lateral")
    profile = lateral_profile(doc.phantom.background.admittivity(doc.physics), doc.physics);
  else if (a.profile == "constant")
    profile = constant_profile();
  else
    throw ConfigError("--profile must be lateral or constant");

  SynthesisOptions so;
  so.refine = a.refine;
  so.noise = a.noise;
  so.seed = a.seed;
  const SynthesisResult syn = synthesize_data(doc.phantom, g, doc.physics, profile, so);
  std::cerr << "forward: " << syn.report.method << ", " << syn.report.iterations << " iterations, residual "
            << syn.report.relative_residual << ", " << syn.report.seconds << " s\n";

  ensure_dir(run / "data");
  std::vector<std::string> files;
  dump(run, "data/hplus", syn.data, files);
  dump(run, "data/hplus_clean", syn.clean, files);
  const json prov = {{"refine", a.refine}, {"noise", a.noise}, {"seed", a.seed}, {"profile", a.profile},
                     {"solver", syn.report.method}};
  write_text(run / "data/simulate.json", prov.dump(2) + "\n");
  files.push_back("data/simulate.json");
  Manifest(run).record("simulate", prov, files);
  std::cout << "data -> " << run / "data/hplus" << "\n";
  return kOk;
}

// ---- reconstruct --------------------------------------------------------------

struct ReconstructArgs {
  std::string run;
  std::string method = "full";
  std::string config;
  std::string init;  // field base path, or "auto"
};

struct RunTruth {
  std::optional<ComplexField> gamma;
  std::optional<Mask> support;
};

RunTruth load_truth(const fs::path& run) {
  RunTruth t;
  if (field_exists(run / "truth/gamma")) t.gamma = read_complex_field(run / "truth/gamma");
  if (field_exists(run / "truth/support")) t.support = field_mask(read_real_field(run / "truth/support"));
  return t;
}

std::vector<std::string> run_direct(const fs::path& run, const ComplexField& data, const Physics& ph,
                                    const ReconConfig& rc) {
  std::vector<std::string> files;
  const DirectResult dr = direct_reconstruct(data, ph, rc.direct_guard);
  ensure_dir(run / "direct");
  dump(run, "direct/gamma", dr.gamma, files);
  std::size_t masked = 0;
  for (auto v : dr.mask) masked += v;
  std::cerr << "direct: " << masked << " nodes guarded\n";
  return files;
}

std::vector<std::string> run_init(const fs::path& run, const ComplexField& data, const Physics& ph,
                                  const ReconConfig& rc, const RunTruth& truth) {
  InitConfig cfg = rc.init;
  cfg.keep_snapshots = true;
  const ComplexField* tp = truth.gamma ? &*truth.gamma : nullptr;
  const InitResult ir = initial_guess(data, ph, cfg, tp);
  std::size_t nD = 0;
  for (auto v : ir.degenerate) nD += v;
  std::cerr << "init: " << ir.solver_method << ", |D| = " << nD << ", rho = " << ir.rho << ", picked k = "
            << ir.k_chosen << "\n";

  std::vector<std::string> files;
  ensure_dir(run / "init");
  dump(run, "init/gamma0", ir.gamma0, files);
  dump(run, "init/degenerate", mask_field(data.grid(), ir.degenerate), files);
  for (std::size_t k : kInitKeep)
    if (k <= ir.snapshots.size()) dump(run, "init/gamma_k" + zero_pad(k), ir.snapshots[k - 1], files);

  std::vector<ConvergenceRow> rows;
  for (const InitIterate& it : ir.history) {
    const double metric = truth.gamma && truth.support
                              ? anomaly_accuracy(ir.snapshots[it.k - 1], *truth.gamma, *truth.support)
                              : std::numeric_limits<double>::quiet_NaN();
    rows.push_back({it.k, it.step, it.error, std::numeric_limits<double>::quiet_NaN(), metric});
  }
  write_convergence_csv(run / "init/convergence.csv", rows);
  files.push_back("init/convergence.csv");
  return files;
}

std::vector<std::string> run_newton_stage(const fs::path& run, const ComplexField& data, const ComplexField& gamma0,
                                          const Physics& ph, const ReconConfig& rc, const RunTruth& truth) {
  NewtonConfig cfg = rc.newton;
  cfg.keep_iterates = true;
  const ComplexField* tp = truth.gamma ? &*truth.gamma : nullptr;
  const Mask* sp = truth.support ? &*truth.support : nullptr;
  const ReconResult rr = run_newton(gamma0, data, ph, cfg, tp, sp);
  std::cerr << "newton: J0 = " << rr.J0 << ", J = " << (rr.history.empty() ? rr.J0 : rr.history.back().J)
            << ", stop: " << rr.stop_reason << "\n";

  std::vector<std::string> files;
  ensure_dir(run / "newton");
  dump(run, "newton/gamma", rr.gamma, files);
  for (std::size_t n : kNewtonKeep)
    if (n <= rr.iterates.size()) dump(run, "newton/gamma_n" + zero_pad(n), rr.iterates[n - 1], files);

  std::vector<ConvergenceRow> rows;
  rows.push_back({0, std::numeric_limits<double>::quiet_NaN(), rr.error0, rr.J0, rr.metric0});
  for (const NewtonRow& r : rr.history) rows.push_back({r.n, r.step, r.error, r.J, r.metric});
  write_convergence_csv(run / "newton/convergence.csv", rows);
  files.push_back("newton/convergence.csv");
  return files;
}

int cmd_reconstruct(const ReconstructArgs& a) {
  const fs::path run(a.run);
  const PhantomDocument doc = load_run_phantom(run);
  const Physics& ph = doc.physics;
  const ReconConfig rc = parse_recon_config(a.config.empty() ? std::string{} : read_text(a.config), doc);
  if (!field_exists(run / "data/hplus")) throw IoError((run / "data/hplus").string() + " missing; run `eptrecon simulate` first");
  const ComplexField data = read_complex_field(run / "data/hplus");
  if (!data.grid().same_as(doc.grid.grid()))
    throw GridMismatch("data grid does not match the grid in phantom.json");
  const RunTruth truth = load_truth(run);

  const bool direct = a.method == "direct";
  const bool init = a.method == "init" || a.method == "full";
  const bool newton = a.method == "newton" || a.method == "full";
  if (!direct && !init && !newton) throw ConfigError("--method must be direct, init, newton or full");

  // Resolve the Newton seed before any work so a missing init fails fast.
  fs::path seed_path;
  if (newton && !init) {
    seed_path = (a.init.empty() || a.init == "auto") ? run / "init/gamma0" : fs::path(a.init);
    if (!field_exists(seed_path))
      throw ConfigError("newton needs an initial guess: run `eptrecon reconstruct --method init` first or pass "
                        "--init <field>");
  }

  Manifest manifest(run);
  json args = {{"method", a.method}, {"config", rc.echo}};
  auto stage = [&](const std::string& name, const std::vector<std::string>& files) {
    manifest.record("reconstruct." + name, args, files);
  };

  if (a.method == "direct" || a.method == "full") {
    try {
      stage("direct", run_direct(run, data, ph, rc));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("direct: ") + e.what());
    }
  }
  if (init) {
    try {
      stage("init", run_init(run, data, ph, rc, truth));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("init: ") + e.what());
    } catch (const SolverError& e) {
      throw SolverError(std::string("init: ") + e.what(), e.report());
    }
  }
  if (newton) {
    const ComplexField gamma0 = init ? read_complex_field(run / "init/gamma0") : read_complex_field(seed_path);
    if (!gamma0.grid().same_as(data.grid())) throw GridMismatch("initial guess grid does not match the data grid");
    if (!init) args["init"] = seed_path.string();
    try {
      stage("newton", run_newton_stage(run, data, gamma0, ph, rc, truth));
    } catch (const NumericalError& e) {
      throw NumericalError(std::string("newton: ") + e.what());
    } catch (const SolverError& e) {
      throw SolverError(std::string("newton: ") + e.what(), e.report());
    }
  }
  std::cout << "reconstruct " << a.method << " -> " << run << "\n";
  return kOk;
}

// ---- report -------------------------------------------------------------------

struct ReportArgs {
  std::string run;
  std::string out;
};

std::string fmt(double v) {
  if (!std::isfinite(v)) return "nan";
  std::ostringstream os;
  os << std::setprecision(10) << v;
  return os.str();
}

SliceWindow range_of(const RealField& f, std::size_t z) {
  const Grid3D& g = f.grid();
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (std::size_t j = 0; j < g.ny(); ++j)
    for (std::size_t i = 0; i < g.nx(); ++i) {
      const double v = f.at(i, j, z);
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (!(lo <= hi)) return {0.0, 1.0};
  return {lo, hi};
}

RealField abs_diff(const RealField& a, const RealField& b) {
  return zip(a, b, [](double x, double y) { return std::abs(x - y); });
}

RealField masked(const RealField& f, const Mask& m) {
  RealField out = f;
  for (std::size_t n = 0; n < f.size(); ++n)
    if (m[n]) out[n] = std::numeric_limits<double>::quiet_NaN();
  return out;
}

int cmd_report(const ReportArgs& a) {
  const fs::path run(a.run);
  const std::vector<std::string> required{"manifest.json", "phantom.json", "truth/gamma.bin", "truth/support.bin",
                                          "data/hplus.bin"};
  std::vector<std::string> missing;
  for (const auto& r : required)
    if (!fs::exists(run / r)) missing.push_back(r);
  if (!missing.empty()) {
    std::ostringstream msg;
    msg << run.string() << " is incomplete; missing:";
    for (const auto& m : missing) msg << "\n  " << m;
    throw IoError(msg.str());
  }

  const PhantomDocument doc = load_run_phantom(run);
  const Physics& ph = doc.physics;
  const ComplexField truth = read_complex_field(run / "truth/gamma");
  const Mask S = field_mask(read_real_field(run / "truth/support"));
  const Grid3D& g = truth.grid();

  // Ω₀ = {z = 0}; the second model also gets a slice through the upper half.
  std::vector<std::pair<std::string, std::size_t>> planes{{"z0", g.nz() / 2}};
  if (doc.model == "model2") planes.push_back({"zup", (3 * g.nz()) / 4});

  const fs::path out(a.out);
  ensure_dir(out);
  std::vector<std::string> produced;
  std::vector<std::string> absent;
  auto pgm = [&](const RealField& f, std::size_t z, const std::string& name, std::optional<SliceWindow> w) {
    export_slice(f, z, out / (name + ".pgm"), SliceFormat::pgm, w);
    produced.push_back(name + ".pgm");
  };

  const RealField sig_t = real_part(truth);
  const RealField epr_t = rel_permittivity(truth, ph);

  std::map<std::string, ComplexField> results;
  auto load = [&](const std::string& key, const std::string& rel) {
    if (field_exists(run / rel))
      results.emplace(key, read_complex_field(run / rel));
    else
      absent.push_back(rel);
  };
  load("direct", "direct/gamma");
  load("init", "init/gamma0");
  load("newton", "newton/gamma");
  std::optional<Mask> D;
  if (field_exists(run / "init/degenerate")) D = field_mask(read_real_field(run / "init/degenerate"));

  for (const auto& [tag, z] : planes) {
    const SliceWindow ws = range_of(sig_t, z), we = range_of(epr_t, z);
    pgm(sig_t, z, "true_sigma_" + tag, ws);
    pgm(epr_t, z, "true_eps_rel_" + tag, we);
    pgm(real_part(read_complex_field(run / "data/hplus")), z, "data_re_" + tag, std::nullopt);
    pgm(imag_part(read_complex_field(run / "data/hplus")), z, "data_im_" + tag, std::nullopt);

    // Initial-guess and Newton sequences.
    for (std::size_t k : kInitKeep) {
      const std::string rel = "init/gamma_k" + zero_pad(k);
      if (!field_exists(run / rel)) continue;
      const ComplexField gk = read_complex_field(run / rel);
      pgm(real_part(gk), z, "init_sigma_k" + zero_pad(k) + "_" + tag, ws);
      pgm(rel_permittivity(gk, ph), z, "init_eps_rel_k" + zero_pad(k) + "_" + tag, we);
    }
    for (std::size_t n : kNewtonKeep) {
      const std::string rel = "newton/gamma_n" + zero_pad(n);
      if (!field_exists(run / rel)) continue;
      const ComplexField gn = read_complex_field(run / rel);
      pgm(real_part(gn), z, "newton_sigma_n" + zero_pad(n) + "_" + tag, ws);
      pgm(rel_permittivity(gn, ph), z, "newton_eps_rel_n" + zero_pad(n) + "_" + tag, we);
    }

    // Error maps share one window per quantity so images compare directly.
    std::map<std::string, std::pair<RealField, RealField>> err;
    for (const auto& [key, gm] : results) {
      RealField es = abs_diff(real_part(gm), sig_t);
      RealField ee = abs_diff(rel_permittivity(gm, ph), epr_t);
      if (key == "init" && D) {
        es = masked(es, *D);
        ee = masked(ee, *D);
      }
      err.emplace(key, std::make_pair(std::move(es), std::move(ee)));
    }
    SliceWindow wes{0.0, 0.0}, wee{0.0, 0.0};
    for (const auto& [key, e] : err) {
      wes.hi = std::max(wes.hi, range_of(e.first, z).hi);
      wee.hi = std::max(wee.hi, range_of(e.second, z).hi);
    }
    if (wes.hi <= 0.0) wes.hi = 1.0;
    if (wee.hi <= 0.0) wee.hi = 1.0;

    // Comparison set: truth, init (outside D), Newton, and their error maps.
    if (results.count("init") && results.count("newton")) {
      RealField init_sig = real_part(results.at("init"));
      if (D) init_sig = masked(init_sig, *D);
      pgm(sig_t, z, "compare_a_true_sigma_" + tag, ws);
      pgm(init_sig, z, "compare_b_init_sigma_" + tag, ws);
      pgm(real_part(results.at("newton")), z, "compare_c_newton_sigma_" + tag, ws);
      pgm(err.at("init").first, z, "compare_d_init_error_" + tag, wes);
      pgm(err.at("newton").first, z, "compare_e_newton_error_" + tag, wes);
    }
    for (const auto& [key, e] : err) {
      pgm(real_part(results.at(key)), z, key + "_sigma_" + tag, ws);
      pgm(rel_permittivity(results.at(key), ph), z, key + "_eps_rel_" + tag, we);
      pgm(e.first, z, key + "_sigma_error_" + tag, wes);
      pgm(e.second, z, key + "_eps_rel_error_" + tag, wee);
    }
  }

  // Convergence tables are copied verbatim.
  for (const std::string stage : {"init", "newton"}) {
    const fs::path src = run / stage / "convergence.csv";
    if (!fs::exists(src)) {
      absent.push_back(stage + "/convergence.csv");
      continue;
    }
    write_text(out / (stage + "_convergence.csv"), read_text(src));
    produced.push_back(stage + "_convergence.csv");
  }

  std::ostringstream summary;
  summary << "method,l2_error,anomaly_metric,sigma_l2_error,eps_rel_l2_error\n";
  for (const auto& [key, gm] : results) {
    // NaNs from the guarded direct formula are left out of the norms.
    Mask finite(g.size(), 0);
    for (std::size_t n = 0; n < g.size(); ++n) finite[n] = std::isfinite(gm[n].real()) && std::isfinite(gm[n].imag());
    Mask S_fin(S);
    for (std::size_t n = 0; n < g.size(); ++n) S_fin[n] = S[n] && finite[n];
    summary << key << "," << fmt(l2_error(gm, truth, &finite)) << "," << fmt(anomaly_accuracy(gm, truth, S_fin))
            << "," << fmt(l2_error(real_part(gm), sig_t, &finite)) << ","
            << fmt(l2_error(rel_permittivity(gm, ph), epr_t, &finite)) << "\n";
  }
  write_text(out / "summary.csv", summary.str());
  produced.push_back("summary.csv");

  std::sort(produced.begin(), produced.end());
  std::ostringstream listing;
  for (const auto& p : produced) listing << p << "\n";
  write_text(out / "files.txt", listing.str());

  for (const auto& m : absent) std::cerr << "report: not available: " << m << "\n";
  std::cout << produced.size() << " report files -> " << out << "\n";
  return kOk;
}

void apply_thread_env() {
  if (const char* s = std::getenv("EPTRECON_THREADS")) {
    const int n = std::atoi(s);
    if (n > 0) Eigen::setNbThreads(n);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Admittivity reconstruction from H+ data: phantom, simulate, reconstruct, report.\n"
               "EPTRECON_THREADS sets the solver thread count."};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PhantomArgs pa;
  auto* ph = app.add_subcommand("phantom", "sample a phantom config into a run directory");
  ph->add_option("--config", pa.config, "phantom JSON (schema eptrecon.phantom/1)")->required();
  ph->add_option("--out", pa.out, "run directory")->required();

  SimulateArgs sa;
  auto* si = app.add_subcommand("simulate", "synthesise H+ data for the run's phantom");
  si->add_option("--run", sa.run, "run directory")->required();
  si->add_option("--refine", sa.refine, "fine-grid factor for data synthesis")->capture_default_str();
  si->add_option("--noise", sa.noise, "noise level relative to rms |H+|")->capture_default_str();
  si->add_option("--seed", sa.seed, "noise seed")->capture_default_str();
  si->add_option("--profile", sa.profile, "boundary profile: lateral | constant")->capture_default_str();

  ReconstructArgs ra;
  auto* re = app.add_subcommand("reconstruct", "reconstruct admittivity from the run's data");
  re->add_option("--run", ra.run, "run directory")->required();
  re->add_option("--method", ra.method, "direct | init | newton | full")->capture_default_str();
  re->add_option("--config", ra.config, "recon JSON (schema eptrecon.recon/1)");
  re->add_option("--init", ra.init, "initial guess field for newton, or auto");

  ReportArgs rp;
  auto* rep = app.add_subcommand("report", "write slices, error maps and convergence tables");
  rep->add_option("--run", rp.run, "run directory")->required();
  rep->add_option("--out", rp.out, "report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  apply_thread_env();
  try {
    if (*ph) return cmd_phantom(pa);
    if (*si) return cmd_simulate(sa);
    if (*re) return cmd_reconstruct(ra);
    if (*rep) return cmd_report(rp);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kSolver;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kSolver;
  } catch (const AssemblyError& e) {
    std::cerr << "assembly error: " << e.what() << "\n";
    return kSolver;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kIo;
  }
  return kOk;
}
