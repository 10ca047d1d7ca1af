#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "pipeline.hpp"
#include "qrx/error.hpp"

using namespace qrx;
using namespace qrx::pipeline;

namespace {

enum Exit { ok = 0, suite_failed = 1, config_error = 2, numeric_error = 3 };

struct Options {
  std::string config_path;
  std::string map;
  std::string maps_dir;
  int grid_level = -1;
  int n_max = -1;
  std::vector<std::string> suites;
  std::string out;
  std::string cache;
  long long seed = -1;
  long long samples = -1;
  std::map<std::string, double> tol;
  // mesh
  std::vector<int> mesh_n;
  int mesh_level = -1;
  // orbit
  std::string z = "0.3,0.2";
  int level = -1;
  double t = 0.5;
  double depth = -1.0;
  int steps = 8;
  // report
  std::string report;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("--config", o.config_path, "JSON job config; flags override its fields");
  sub->add_option("--map", o.map, "map file, or a stem resolved in the maps directory");
  sub->add_option("--maps-dir", o.maps_dir, "directory of bundled maps");
  sub->add_option("--grid-level", o.grid_level, "icosphere subdivision level of the analysis grid");
  sub->add_option("--n-max", o.n_max, "largest composition index");
  sub->add_option("--cache", o.cache, "cache directory (QRX_CACHE overrides)");
  sub->add_option("--seed", o.seed, "RNG seed for sampling");
  for (auto& [name, v] : default_tolerances()) {
    std::string key = name;
    sub->add_option_function<double>(
        "--tol-" + name, [&o, key](double x) { o.tol[key] = x; }, "tolerance " + name);
  }
}

JobConfig make_config(const Options& o) {
  JobConfig c;
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) fail(ErrorKind::config, "cannot open config " + o.config_path);
    try {
      c = config_from_json(json::parse(in));
    } catch (const json::exception& e) {
      fail(ErrorKind::config, std::string("cannot parse config: ") + e.what());
    }
  }
  // The bundled chain map is the default when neither flag nor config names one.
  if (!o.map.empty() || c.map.numerator.empty())
    c.map = load_map(o.map.empty() ? "one_minus_two_over_zsq" : o.map,
                     o.maps_dir.empty() ? default_maps_dir() : std::filesystem::path(o.maps_dir));
  if (o.grid_level >= 0) c.grid_level = o.grid_level;
  if (o.n_max >= 0) c.n_max = o.n_max;
  if (!o.suites.empty()) c.suites = o.suites;
  if (!o.out.empty()) c.out = o.out;
  if (!o.cache.empty()) c.cache_dir = o.cache;
  if (o.seed >= 0) c.seed = static_cast<std::uint64_t>(o.seed);
  if (o.samples > 0) c.samples = static_cast<std::size_t>(o.samples);
  for (auto& [k, v] : o.tol) c.tol[k] = v;
  if (!o.mesh_n.empty()) c.mesh_n = o.mesh_n;
  if (o.mesh_level >= 0) c.mesh_level = o.mesh_level;
  c.validate();
  return c;
}

SpherePoint parse_point(const std::string& s) {
  if (s == "inf") return SpherePoint::infinity();
  std::istringstream in(s);
  double re = 0.0, im = 0.0;
  char comma = 0;
  if (!(in >> re)) fail(ErrorKind::config, "point must be 're,im' or 'inf'");
  if (in >> comma) {
    if (comma != ',' || !(in >> im)) fail(ErrorKind::config, "point must be 're,im' or 'inf'");
  }
  return SpherePoint(cplx(re, im));
}

int cmd_analyze(const Options& o) {
  JobConfig c = make_config(o);
  RationalFunction f = c.map.function();
  auto crit = find_critical_points(f);
  auto sched = classify_postcritical(f, crit);
  std::cout << "expanding: " << (sched.expanding ? "true" : "false")
            << "; postcritical: " << sched.describe() << '\n';
  std::cout << "map: " << c.map.name << " (hash " << hex(map_hash(c.map)) << "), degree "
            << f.degree() << ", case " << to_string(sched.tag) << '\n';
  for (auto& cd : crit) std::cout << "critical: " << format_point(cd.c) << " (local degree " << cd.local_degree << ")\n";
  return ok;
}

int cmd_build(const Options& o) {
  JobConfig c = make_config(o);
  Built b = build(c, &std::cerr);
  const auto& dom = *b.domain;
  std::cout << analyze_summary(b) << '\n';
  std::cout << "charts:";
  for (auto& k : b.family->atlas().koenig()) std::cout << " r0=" << k.r0();
  std::cout << "\ns = " << dom.field().s() << "\nN0 = " << dom.N0() << '\n';
  std::cout << (b.from_cache ? "loaded from cache\n" : "computed\n");
  return ok;
}

int cmd_verify(const Options& o) {
  JobConfig c = make_config(o);
  auto suites = expand_suites(c.suites);
  Built b{c.map.function(), {}, nullptr, {}, std::nullopt, false};
  bool needs_build = std::any_of(suites.begin(), suites.end(), [](auto& s) { return s != "winding"; });
  if (needs_build) b = build(c, &std::cerr);
  std::vector<SuiteResult> results;
  for (auto& s : suites) {
    std::cerr << "running " << s << '\n';
    results.push_back(run_suite(s, c, b));
    for (auto& f : results.back().failures) std::cerr << "FAIL " << f << '\n';
  }
  json report = make_report(c, results);
  std::string text = report.dump(2) + "\n";
  if (c.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(c.out);
    out << text;
    if (!out) fail(ErrorKind::config, "cannot write " + c.out);
    write_report_summary(std::cout, report);
  }
  return report["pass"].get<bool>() ? ok : suite_failed;
}

int cmd_mesh(const Options& o) {
  JobConfig c = make_config(o);
  Built b = build(c, &std::cerr);
  std::filesystem::path dir = c.out.empty() ? "." : c.out;
  std::filesystem::create_directories(dir);
  for (int n : c.mesh_n) {
    auto mesh = mesh_sphere(b.domain->field(), n, c.mesh_level);
    auto path = dir / ("sphere_n" + std::to_string(n) + ".obj");
    std::ofstream out(path);
    mesh.write_obj(out);
    if (!out) fail(ErrorKind::config, "cannot write " + path.string());
    std::cout << path.string() << ": " << mesh.vertices.size() << " vertices, " << mesh.faces.size()
              << " faces\n";
  }
  return ok;
}

int cmd_orbit(const Options& o) {
  JobConfig c = make_config(o);
  Built b = build(c, &std::cerr);
  const auto& dom = *b.domain;
  const auto& field = dom.field();
  SpherePoint z = parse_point(o.z);
  double depth = o.depth;
  if (depth < 0.0) {
    int n = o.level >= 0 ? o.level : dom.N0() + 4;
    if (n > field.n_max()) fail(ErrorKind::config, "level exceeds n_max");
    int m = field.consecutive_index(n, z);
    depth = (1.0 - o.t) * field.depth(n, z) + o.t * field.depth(m, z);
  }
  auto res = iterate_extension(dom, ExtensionPoint::from_depth(z, depth), o.steps, true);
  if (c.out.empty()) {
    write_orbit(std::cout, dom, res);
  } else {
    std::ofstream out(c.out);
    write_orbit(out, dom, res);
    if (!out) fail(ErrorKind::config, "cannot write " + c.out);
  }
  return ok;
}

int cmd_report(const Options& o) {
  std::ifstream in(o.report);
  if (!in) fail(ErrorKind::config, "cannot open report " + o.report);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("cannot parse report: ") + e.what());
  }
  write_report_summary(std::cout, j);
  return j.value("pass", false) ? ok : suite_failed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qrx: extensions of expanding rational Thurston maps to the ball"};
  app.require_subcommand(1);
  Options o;

  auto* analyze = app.add_subcommand("analyze", "classify the postcritical dynamics");
  add_common(analyze, o);
  auto* buildc = app.add_subcommand("build", "build charts, radius field, s and N0 (cached)");
  add_common(buildc, o);
  auto* verify = app.add_subcommand("verify", "run verification suites and write a JSON report");
  add_common(verify, o);
  verify->add_option("--suite", o.suites, "suite name or 'all' (repeatable)");
  verify->add_option("--out", o.out, "report path (stdout when absent)");
  verify->add_option("--samples", o.samples, "distortion samples");
  auto* mesh = app.add_subcommand("mesh", "write OBJ meshes of approximating spheres");
  add_common(mesh, o);
  mesh->add_option("--n", o.mesh_n, "sphere indices (repeatable)");
  mesh->add_option("--level", o.mesh_level, "icosphere subdivision level");
  mesh->add_option("--out", o.out, "output directory");
  auto* orbit = app.add_subcommand("orbit", "dump the orbit of a point under the extension");
  add_common(orbit, o);
  orbit->add_option("--z", o.z, "base point 're,im' or 'inf'");
  orbit->add_option("--level", o.level, "start between S_level and its consecutive sphere");
  orbit->add_option("--t", o.t, "fraction between the two spheres")->check(CLI::Range(0.0, 1.0));
  orbit->add_option("--depth", o.depth, "start at this depth 1 - r instead");
  orbit->add_option("--steps", o.steps, "number of iterations");
  orbit->add_option("--out", o.out, "output file (stdout when absent)");
  auto* report = app.add_subcommand("report", "summarize a JSON report");
  report->add_option("report", o.report, "report file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? ok : config_error;
  }

  try {
    if (*analyze) return cmd_analyze(o);
    if (*buildc) return cmd_build(o);
    if (*verify) return cmd_verify(o);
    if (*mesh) return cmd_mesh(o);
    if (*orbit) return cmd_orbit(o);
    if (*report) return cmd_report(o);
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return e.kind() == ErrorKind::config || e.kind() == ErrorKind::classification ? config_error
                                                                                   : numeric_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return numeric_error;
  }
  return config_error;
}
