#include "pipeline.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numbers>
#include <sstream>

#include "qrx/error.hpp"

namespace qrx::pipeline {

namespace fs = std::filesystem;

namespace {

json pairs(const std::vector<cplx>& v) {
  json out = json::array();
  for (auto& c : v) out.push_back({c.real(), c.imag()});
  return out;
}

std::vector<cplx> parse_pairs(const json& j, const char* what) {
  if (!j.is_array() || j.empty())
    fail(ErrorKind::config, std::string(what) + " must be a non-empty array of [re, im] pairs");
  std::vector<cplx> out;
  for (auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
      fail(ErrorKind::config, std::string(what) + " entries must be [re, im] pairs");
    out.emplace_back(e[0].get<double>(), e[1].get<double>());
  }
  return out;
}

std::uint64_t fnv1a(const std::string& s, std::uint64_t h = 14695981039346656037ull) {
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

std::string canonical(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x == 0.0 ? 0.0 : x);
  return buf;
}

template <class T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) fail(ErrorKind::config, "truncated chart grid file");
  return v;
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << text;
    if (!out) fail(ErrorKind::config, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

}  // namespace

RationalFunction MapSpec::function() const { return RationalFunction(numerator, denominator); }

json to_json(const MapSpec& m) {
  return {{"name", m.name},
          {"description", m.description},
          {"numerator", pairs(m.numerator)},
          {"denominator", pairs(m.denominator)}};
}

MapSpec map_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::config, "map must be a JSON object");
  MapSpec m;
  m.name = j.value("name", "");
  m.description = j.value("description", "");
  if (!j.contains("numerator") || !j.contains("denominator"))
    fail(ErrorKind::config, "map needs numerator and denominator");
  m.numerator = parse_pairs(j["numerator"], "numerator");
  m.denominator = parse_pairs(j["denominator"], "denominator");
  return m;
}

fs::path default_maps_dir() {
  if (const char* env = std::getenv("QRX_MAPS")) return env;
#ifdef QRX_MAPS_DIR
  return QRX_MAPS_DIR;
#else
  return "maps";
#endif
}

MapSpec load_map(const std::string& ref, const fs::path& maps_dir) {
  std::vector<fs::path> candidates{ref, ref + ".json"};
  fs::path stem = fs::path(ref).filename();
  candidates.push_back(maps_dir / stem);
  candidates.push_back(maps_dir / (stem.string() + ".json"));
  for (auto& p : candidates) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) continue;
    std::ifstream in(p);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      fail(ErrorKind::config, "cannot parse map " + p.string() + ": " + e.what());
    }
    MapSpec m = map_from_json(j);
    if (m.name.empty()) m.name = p.stem().string();
    return m;
  }
  fail(ErrorKind::config, "map not found: " + ref);
}

std::uint64_t map_hash(const MapSpec& m) {
  std::string s = "num";
  for (auto& c : m.numerator) s += " " + canonical(c.real()) + " " + canonical(c.imag());
  s += " den";
  for (auto& c : m.denominator) s += " " + canonical(c.real()) + " " + canonical(c.imag());
  return fnv1a(s);
}

std::string hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::map<std::string, double> default_tolerances() {
  return {
      {"winding", 1e-4},      // closed-form vs finite-difference expansion norms
      {"koenig", 1e-8},       // linearization and critical-chart residuals
      {"derivative", 1e-3},   // composed norm vs finite differences
      {"accumulation", 0.05}, // 1 - min r_N
      {"identity", 1e-9},     // d_{n-1}(f z) = f^#(z) d_n(z)
      {"continuity", 1e-6},   // branch mismatch on prism boundaries
      {"fault", 1e-4},        // residual a 1% error in mu must exceed
      {"slope", 0.05},        // log K against n
      {"control", 0.3},       // slope the non-uniform control must exceed
      {"sphere", 1e-7},       // radial error of S_n images
  };
}

double JobConfig::tolerance(const std::string& name) const {
  auto it = tol.find(name);
  if (it == tol.end()) fail(ErrorKind::config, "unknown tolerance " + name);
  return it->second;
}

void JobConfig::validate() const {
  if (map.numerator.empty() || map.denominator.empty()) fail(ErrorKind::config, "no map given");
  if (grid_level < 0 || grid_level > 8) fail(ErrorKind::config, "grid level must be in [0, 8]");
  if (n_max < 4) fail(ErrorKind::config, "n_max must be at least 4");
  for (auto& [k, v] : tol)
    if (!(v > 0.0)) fail(ErrorKind::config, "tolerance " + k + " must be positive");
  auto known = default_tolerances();
  for (auto& [k, v] : tol)
    if (!known.count(k)) fail(ErrorKind::config, "unknown tolerance " + k);
  expand_suites(suites);
  if (samples == 0) fail(ErrorKind::config, "sample count must be positive");
  if (mesh_level < 0 || mesh_level > 8) fail(ErrorKind::config, "mesh level must be in [0, 8]");
  for (int n : mesh_n)
    if (n < 0 || n > n_max) fail(ErrorKind::config, "mesh index outside [0, n_max]");
}

json to_json(const JobConfig& c) {
  return {{"map", to_json(c.map)},
          {"grid_level", c.grid_level},
          {"n_max", c.n_max},
          {"tolerances", c.tol},
          {"suites", c.suites},
          {"out", c.out},
          {"cache", c.cache_dir},
          {"seed", c.seed},
          {"samples", c.samples},
          {"mesh_n", c.mesh_n},
          {"mesh_level", c.mesh_level}};
}

JobConfig config_from_json(const json& j) {
  if (!j.is_object()) fail(ErrorKind::config, "config must be a JSON object");
  JobConfig c;
  try {
    if (j.contains("map")) c.map = map_from_json(j["map"]);
    c.grid_level = j.value("grid_level", c.grid_level);
    c.n_max = j.value("n_max", c.n_max);
    if (j.contains("tolerances"))
      for (auto& [k, v] : j["tolerances"].items()) c.tol[k] = v.get<double>();
    if (j.contains("suites")) c.suites = j["suites"].get<std::vector<std::string>>();
    c.out = j.value("out", c.out);
    c.cache_dir = j.value("cache", c.cache_dir);
    c.seed = j.value("seed", c.seed);
    c.samples = j.value("samples", c.samples);
    if (j.contains("mesh_n")) c.mesh_n = j["mesh_n"].get<std::vector<int>>();
    c.mesh_level = j.value("mesh_level", c.mesh_level);
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("malformed config: ") + e.what());
  }
  return c;
}

std::uint64_t cache_key(const JobConfig& c) {
  std::string s = hex(map_hash(c.map)) + " grid " + std::to_string(c.grid_level) + " n_max " +
                  std::to_string(c.n_max);
  for (auto& [k, v] : c.tol) s += " " + k + "=" + canonical(v);
  return fnv1a(s);
}

void write_chart_grid(const fs::path& path, const ChartGrid& g) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out.write("QRX1", 4);
    put(out, g.map_hash);
    put(out, g.chart_id);
    put(out, g.r0);
    put(out, g.lambda.real());
    put(out, g.lambda.imag());
    put(out, g.rows);
    put(out, g.cols);
    for (auto& v : g.values) {
      put(out, v.real());
      put(out, v.imag());
    }
    if (!out) fail(ErrorKind::config, "cannot write " + tmp.string());
  }
  fs::rename(tmp, path);
}

ChartGrid read_chart_grid(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::config, "cannot open " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "QRX1") fail(ErrorKind::config, "not a QRX1 chart grid");
  ChartGrid g;
  g.map_hash = get<std::uint64_t>(in);
  g.chart_id = get<std::int32_t>(in);
  g.r0 = get<double>(in);
  double re = get<double>(in), im = get<double>(in);
  g.lambda = {re, im};
  g.rows = get<std::uint32_t>(in);
  g.cols = get<std::uint32_t>(in);
  if (g.rows > 4096 || g.cols > 4096) fail(ErrorKind::config, "implausible chart grid size");
  g.values.resize(std::size_t(g.rows) * g.cols);
  for (auto& v : g.values) {
    double a = get<double>(in), b = get<double>(in);
    v = {a, b};
  }
  return g;
}

ChartGrid sample_chart_grid(const ChartAtlas& atlas, int node, std::uint64_t hash,
                            std::uint32_t rows, std::uint32_t cols) {
  const auto& nd = atlas.node(node);
  ChartGrid g;
  g.map_hash = hash;
  g.chart_id = node;
  g.r0 = atlas.koenig(nd.cycle).r0();
  g.lambda = atlas.koenig(nd.cycle).multiplier();
  g.rows = rows;
  g.cols = cols;
  double R = atlas.radius(node, 0);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      cplx w = std::polar(R * i / (rows - 1.0), 2.0 * std::numbers::pi * j / cols);
      g.values.push_back(atlas.inverse_local(node, w));
    }
  return g;
}

std::string effective_cache_dir(const JobConfig& c) {
  if (const char* env = std::getenv("QRX_CACHE"); env && *env) return env;
  return c.cache_dir;
}

namespace {

struct CacheEntry {
  std::vector<double> r0;
  double s = 0.0, field_r0 = 0.0;
  int window = 6, N0 = 0;
};

std::optional<CacheEntry> read_sidecar(const fs::path& path, const JobConfig& c) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) return std::nullopt;
  try {
    std::ifstream in(path);
    json j = json::parse(in);
    // The key is recomputed from the stored settings: a renamed or edited
    // file never matches a different job.
    if (j.at("key") != hex(cache_key(c)) || j.at("map_hash") != hex(map_hash(c.map)) ||
        j.at("grid_level") != c.grid_level || j.at("n_max") != c.n_max ||
        j.at("tolerances") != json(c.tol))
      return std::nullopt;
    CacheEntry e;
    e.r0 = j.at("r0").get<std::vector<double>>();
    e.s = j.at("s");
    e.field_r0 = j.at("field_r0");
    e.window = j.at("window");
    e.N0 = j.at("N0");
    return e;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

bool grids_match(const ChartAtlas& atlas, const fs::path& dir, const std::string& key,
                 std::uint64_t hash) {
  for (int x = 0; x < static_cast<int>(atlas.nodes().size()); ++x) {
    fs::path p = dir / (key + ".chart" + std::to_string(x) + ".qrx");
    ChartGrid g;
    try {
      g = read_chart_grid(p);
    } catch (const Error&) {
      return false;
    }
    if (g.map_hash != hash || g.chart_id != x) return false;
    ChartGrid now = sample_chart_grid(atlas, x, hash, g.rows, g.cols);
    if (now.values.size() != g.values.size()) return false;
    for (std::size_t i = 0; i < g.values.size(); ++i)
      if (std::abs(now.values[i] - g.values[i]) > 1e-9 * (1.0 + std::abs(g.values[i]))) return false;
  }
  return true;
}

}  // namespace

Built build(const JobConfig& c, std::ostream* log) {
  c.validate();
  Built b{c.map.function(), {}, nullptr, {}, std::nullopt, false};
  b.schedule = classify_postcritical(b.f, find_critical_points(b.f));
  const std::uint64_t hash = map_hash(c.map);
  const std::string key = hex(cache_key(c));
  const std::string dir = effective_cache_dir(c);
  fs::path sidecar = dir.empty() ? fs::path() : fs::path(dir) / (key + ".json");

  std::optional<CacheEntry> cached;
  if (!dir.empty()) cached = read_sidecar(sidecar, c);
  if (cached && cached->r0.size() == b.schedule.cycles.size()) {
    auto atlas = ChartAtlas(b.f, b.schedule, cached->r0);
    if (grids_match(atlas, dir, key, hash)) {
      b.family = std::make_shared<ModifiedMapFamily>(std::move(atlas), c.n_max);
      b.grid = analysis_grid(*b.family, c.grid_level);
      auto field = std::make_shared<RadiusField>(b.family, cached->s, cached->field_r0, cached->window);
      b.domain.emplace(field, cached->N0);
      b.from_cache = true;
      if (log) *log << "cache hit " << sidecar.string() << '\n';
      return b;
    }
    if (log) *log << "stale cache entry " << sidecar.string() << ", rebuilding\n";
  }

  b.family = std::make_shared<ModifiedMapFamily>(ChartAtlas::build(b.f, b.schedule), c.n_max);
  b.grid = analysis_grid(*b.family, c.grid_level);
  auto field = std::make_shared<RadiusField>(RadiusField::calibrate(b.family, b.grid));
  int N0 = compute_N0(*field, b.grid);
  b.domain.emplace(field, N0);

  if (!dir.empty()) {
    fs::create_directories(dir);
    const ChartAtlas& atlas = b.family->atlas();
    for (int x = 0; x < static_cast<int>(atlas.nodes().size()); ++x)
      write_chart_grid(fs::path(dir) / (key + ".chart" + std::to_string(x) + ".qrx"),
                       sample_chart_grid(atlas, x, hash));
    std::vector<double> r0;
    for (auto& k : atlas.koenig()) r0.push_back(k.r0());
    json j = {{"key", key},         {"map_hash", hex(hash)}, {"grid_level", c.grid_level},
              {"n_max", c.n_max},   {"tolerances", c.tol},   {"r0", r0},
              {"s", field->s()},    {"field_r0", field->r0()}, {"window", field->window()},
              {"N0", N0}};
    write_text_atomic(sidecar, j.dump(2) + "\n");
    if (log) *log << "cached " << sidecar.string() << '\n';
  }
  return b;
}

json make_report(const JobConfig& c, const std::vector<SuiteResult>& results) {
  json per = json::array();
  json agg = json::object();
  bool pass = true;
  for (auto& r : results) {
    for (auto& s : r.per_sample) {
      json e = s;
      e["suite"] = r.suite;
      per.push_back(std::move(e));
    }
    json a = r.aggregate;
    a["pass"] = r.pass;
    a["failures"] = r.failures;
    agg[r.suite] = std::move(a);
    pass = pass && r.pass;
  }
  return {{"map_hash", hex(map_hash(c.map))},
          {"map", c.map.name},
          {"suite", c.suites},
          {"seed", c.seed},
          {"per_sample", std::move(per)},
          {"aggregate", std::move(agg)},
          {"pass", pass}};
}

void write_report_summary(std::ostream& out, const json& report) {
  try {
    out << "map " << report.value("map", std::string("?")) << " (hash "
        << report.at("map_hash").get<std::string>() << ")\n";
    for (auto& [name, a] : report.at("aggregate").items()) {
      out << "  " << name << ": " << (a.value("pass", false) ? "pass" : "FAIL");
      for (auto& [k, v] : a.items()) {
        if (k == "pass" || k == "failures" || v.is_structured()) continue;
        out << "  " << k << "=" << v.dump();
      }
      out << '\n';
      for (auto& f : a.value("failures", json::array())) out << "    failed: " << f.get<std::string>() << '\n';
    }
    out << (report.at("pass").get<bool>() ? "all suites pass" : "some suites failed") << '\n';
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("malformed report: ") + e.what());
  }
}

std::string analyze_summary(const Built& b) {
  return std::string("expanding: ") + (b.schedule.expanding ? "true" : "false") +
         "; postcritical: " + b.schedule.describe();
}

}  // namespace qrx::pipeline
