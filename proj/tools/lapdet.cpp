// lapdet: command-line front end.
// Exit codes: 0 success, 2 verdict FAIL, 1 error.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "lapdet/asymptotics.hpp"
#include "lapdet/builtin_surfaces.hpp"
#include "lapdet/constants.hpp"
#include "lapdet/continuum.hpp"
#include "lapdet/keyformula.hpp"
#include "lapdet/spectral.hpp"

using namespace lapdet;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr int kExitFail = 2;

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

json read_json(const fs::path& p) {
  std::ifstream is(p);
  if (!is) fail(ErrorKind::Io, "cannot read " + p.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    fail(ErrorKind::SchemaError, p.string() + ": " + e.what());
  }
}

// A readable file, or a builtin name with optional .json suffix.
SurfaceSpec load_surface(const std::string& arg) {
  if (fs::exists(arg)) return parse_surface_spec(read_json(arg));
  std::string stem = fs::path(arg).stem().string();
  for (const auto& n : builtin_surface_names())
    if (n == stem) return builtin_surface(n);
  fail(ErrorKind::Io, "no surface file or builtin named '" + arg + "'");
}

LatticeSpec load_lattice(const std::string& arg) {
  if (fs::exists(arg)) return normalize_weights(lattice_from_json(read_json(arg)));
  return normalized_lattice(arg);
}

// "pi/2", "3pi/2", "2*pi/3", "90deg", "1.5707963".
double parse_angle(std::string s) {
  s.erase(std::remove(s.begin(), s.end(), ' '), s.end());
  std::smatch m;
  static const std::regex re(R"(^([0-9.]*)\*?pi(?:/([0-9.]+))?$)");
  if (std::regex_match(s, m, re)) {
    const double num = m[1].str().empty() ? 1.0 : std::stod(m[1].str());
    const double den = m[2].str().empty() ? 1.0 : std::stod(m[2].str());
    return num * kPi / den;
  }
  if (s.size() > 3 && s.substr(s.size() - 3) == "deg") return std::stod(s.substr(0, s.size() - 3)) * kPi / 180.0;
  try {
    return std::stod(s);
  } catch (...) {
    fail(ErrorKind::Usage, "cannot parse angle '" + s + "'");
  }
}

BC parse_bc(char c) {
  if (c == 'D' || c == 'd') return BC::Dirichlet;
  if (c == 'N' || c == 'n') return BC::Neumann;
  fail(ErrorKind::Usage, std::string("boundary condition must be D or N, got '") + c + "'");
}

std::vector<SweepRecord> read_records_csv(const fs::path& p) {
  std::ifstream is(p);
  if (!is) fail(ErrorKind::Io, "cannot read " + p.string());
  std::string line;
  std::getline(is, line);
  if (line != records_csv_header()) fail(ErrorKind::SchemaError, p.string() + ": unexpected header '" + line + "'");
  std::vector<SweepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f;
    std::vector<std::string> v;
    while (std::getline(ss, f, ',')) v.push_back(f);
    if (v.size() != 8) fail(ErrorKind::SchemaError, p.string() + ": bad row '" + line + "'");
    SweepRecord r;
    r.N = std::stoi(v[0]);
    r.logdet = std::stod(v[1]);
    r.active = std::stoll(v[2]);
    r.dirichlet_length = std::stod(v[3]);
    r.neumann_length = std::stod(v[4]);
    r.volume_weighted = std::stod(v[5]);
    r.k = std::stoi(v[6]);
    r.d = std::stoi(v[7]);
    out.push_back(r);
  }
  return out;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream os(path);
  if (!os) fail(ErrorKind::Io, "cannot write " + path);
  os << text;
}

std::string records_csv(const std::vector<SweepRecord>& recs) {
  std::string s = records_csv_header() + "\n";
  for (const auto& r : recs) s += to_csv_row(r) + "\n";
  return s;
}

// Doubles inside JSON are printed with 17 significant digits by the library.
std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twisted Laplacian determinants on flat surfaces"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kCodeVersion);

  std::string surface_arg, lattice_arg = "square", out_arg, backend_arg = "auto", cache_arg, records_arg;
  int N = 8;
  std::vector<int> Ns = default_n_grid();
  int threads = 1;

  auto add_surface = [&](CLI::App* s) {
    s->add_option("--surface", surface_arg, "Surface JSON file or builtin name")->required();
    s->add_option("--lattice", lattice_arg, "Lattice name (square, shifted_square, triangular, hexagonal) or JSON file");
  };

  auto* c_lattice = app.add_subcommand("lattice", "Print a normalized lattice and its constant A");
  c_lattice->add_option("--lattice,--name", lattice_arg, "Lattice name or JSON file");

  auto* c_build = app.add_subcommand("build", "Discretize a surface; print the header, optionally write adjacency CSV");
  add_surface(c_build);
  c_build->add_option("--N", N)->required();
  c_build->add_option("--out", out_arg, "Adjacency CSV path");

  auto* c_det = app.add_subcommand("detstar", "log det* of the twisted Laplacian");
  add_surface(c_det);
  c_det->add_option("--N", N)->required();
  c_det->add_option("--backend", backend_arg, "auto, dense or sparse");

  std::vector<double> times{1.0};
  auto* c_theta = app.add_subcommand("theta", "Heat trace at walk times t");
  add_surface(c_theta);
  c_theta->add_option("--N", N)->required();
  c_theta->add_option("--t", times, "Walk times");

  KeyFormulaParams kp;
  auto* c_key = app.add_subcommand("keyformula", "Evaluate the six-term key formula");
  add_surface(c_key);
  c_key->add_option("--N", N)->required();
  c_key->add_option("--r", kp.r, "Assignment radius");
  c_key->add_option("--R", kp.R, "Model truncation radius");

  std::string corner_angle, corner_bc, cone_angle;
  std::vector<double> phases;
  auto* c_const = app.add_subcommand("constants", "Closed-form singularity and lattice constants");
  c_const->add_option("--corner", corner_angle, "Corner angle, e.g. pi/2")->expected(1);
  c_const->add_option("bc", corner_bc, "Corner boundary conditions, e.g. DD");
  c_const->add_option("--cone", cone_angle, "Cone angle");
  c_const->add_option("--puncture", phases, "Puncture holonomy eigenphases in units of 2 pi");
  c_const->add_option("--lattice", lattice_arg, "Print A for this lattice");

  SweepOptions sopt;
  auto* c_sweep = app.add_subcommand("sweep", "log det* over a list of N (CSV)");
  add_surface(c_sweep);
  c_sweep->add_option("--N", Ns, "Mesh sizes, ascending");
  c_sweep->add_option("--backend", backend_arg);
  c_sweep->add_option("--cache", cache_arg, "Cache directory (LAPDET_CACHE overrides)");
  c_sweep->add_option("--threads", threads);
  c_sweep->add_option("--out", out_arg, "CSV path");

  bool zero_log = false;
  auto* c_fit = app.add_subcommand("fit", "Fit sweep records in {N^2, N, log N, 1}");
  c_fit->add_option("--records", records_arg, "Sweep CSV")->required();
  c_fit->add_option("--lattice", lattice_arg, "Lattice (for delta0)");
  c_fit->add_flag("--assume-zero-log", zero_log, "Drop log N (caller asserts C = 0)");

  CompareTolerances tol;
  auto* c_cmp = app.add_subcommand("compare", "Fit records and judge C, A, D against closed forms");
  add_surface(c_cmp);
  c_cmp->add_option("--records", records_arg, "Sweep CSV")->required();
  c_cmp->add_option("--tol-C", tol.C);
  c_cmp->add_option("--tol-A", tol.A);
  c_cmp->add_option("--tol-D", tol.D);

  auto* c_report = app.add_subcommand("report", "Sweep, fit and compare in one run (JSON)");
  add_surface(c_report);
  c_report->add_option("--N", Ns, "Mesh sizes, ascending");
  c_report->add_option("--backend", backend_arg);
  c_report->add_option("--cache", cache_arg);
  c_report->add_option("--threads", threads);
  c_report->add_option("--out", out_arg, "JSON path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*c_lattice) {
      const auto lat = load_lattice(lattice_arg);
      json j = lattice_to_json(lat);
      j["A"] = lattice_constant_A(lat);
      j["delta0"] = lat.delta0();
      std::cout << dump(j);
      return 0;
    }
    if (*c_const) {
      bool any = false;
      if (!corner_angle.empty()) {
        if (corner_bc.size() != 2) fail(ErrorKind::Usage, "--corner needs an angle and a bc pair such as DD");
        std::cout << fmt(c_corner(parse_angle(corner_angle), parse_bc(corner_bc[0]), parse_bc(corner_bc[1]))) << "\n";
        any = true;
      }
      if (!cone_angle.empty()) {
        std::cout << fmt(c_cone(parse_angle(cone_angle))) << "\n";
        any = true;
      }
      if (!phases.empty()) {
        Mat M = Mat::Zero(static_cast<int>(phases.size()), static_cast<int>(phases.size()));
        for (std::size_t i = 0; i < phases.size(); ++i) M(i, i) = std::polar(1.0, 2.0 * kPi * phases[i]);
        std::cout << fmt(c_puncture(M)) << "\n";
        any = true;
      }
      if (!any || c_const->count("--lattice")) std::cout << fmt(lattice_constant_A(load_lattice(lattice_arg))) << "\n";
      return 0;
    }
    if (*c_fit) {
      const auto lat = load_lattice(lattice_arg);
      FitOptions fo;
      fo.assume_zero_log = zero_log;
      std::cout << dump(fit(read_records_csv(records_arg), lat.delta0(), fo).to_json());
      return 0;
    }

    const SurfaceSpec spec = load_surface(surface_arg);
    const LatticeSpec lat = load_lattice(lattice_arg);

    if (*c_build) {
      const auto ds = discretize(spec, lat, N);
      std::cout << dump(discrete_header_json(ds));
      if (!out_arg.empty()) {
        std::ofstream os(out_arg);
        if (!os) fail(ErrorKind::Io, "cannot write " + out_arg);
        write_adjacency_csv(ds, os);
      }
      return 0;
    }
    if (*c_det) {
      const auto ds = discretize(spec, lat, N);
      Backend b = parse_backend(backend_arg);
      if (b == Backend::Auto) b = ds.n_active() * ds.rank <= SweepOptions{}.dense_limit ? Backend::Dense : Backend::Sparse;
      std::cout << fmt(compute_record(ds, b).logdet) << "\n";
      return 0;
    }
    if (*c_theta) {
      const auto S = eigensolve(assemble(discretize(spec, lat, N)), false);
      std::cout << "t,theta\n";
      for (double t : times) std::cout << fmt(t) << ',' << fmt(theta(S, t)) << "\n";
      return 0;
    }
    if (*c_key) {
      const auto rep = evaluate(discretize(spec, lat, N), kp);
      std::cout << dump(rep.to_json());
      return std::abs(rep.residual) < rep.budget ? 0 : kExitFail;
    }
    if (*c_cmp) {
      const auto f = fit(read_records_csv(records_arg), lat.delta0());
      const auto v = compare(f, spec, lat, tol);
      std::cout << dump({{"fit", f.to_json()}, {"compare", v.to_json()}});
      return v.all_pass() ? 0 : kExitFail;
    }
    if (*c_sweep || *c_report) {
      sopt.backend = parse_backend(backend_arg);
      sopt.cache_dir = cache_dir_from_env(cache_arg);
      sopt.threads = threads;
      const auto recs = sweep(spec, lat, Ns, sopt);
      if (*c_sweep) {
        write_text(out_arg, records_csv(recs));
        return 0;
      }
      const auto f = fit(recs, lat.delta0());
      const auto v = compare(f, spec, lat, tol);
      json jr = json::array();
      for (const auto& r : recs) jr.push_back(r.to_json());
      write_text(out_arg, dump({{"records", jr}, {"fit", f.to_json()}, {"compare", v.to_json()}}));
      return v.all_pass() ? 0 : kExitFail;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
