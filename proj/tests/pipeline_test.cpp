#include <gtest/gtest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "qrx/error.hpp"
#include "support.hpp"

using namespace qrx;
using namespace qrx::pipeline;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("qrx_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

struct CommandResult {
  int code = -1;
  std::string out;
};

// Runs the CLI with stderr discarded; returns its exit code and stdout.
CommandResult run_cli(const std::string& args) {
  std::string cmd = std::string("QRX_CACHE= ") + QRX_CLI + " " + args + " 2>/dev/null";
  CommandResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST(JobConfig, JsonRoundTrip) {
  JobConfig c = test::config_for("lattes");
  c.grid_level = 3;
  c.n_max = 20;
  c.tol["winding"] = 2e-4;
  c.suites = {"winding", "radii"};
  c.out = "report.json";
  c.seed = 17;
  c.samples = 50;
  c.mesh_n = {4, 5};
  json j = to_json(c);
  JobConfig back = config_from_json(j);
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(map_hash(back.map), map_hash(c.map));
  EXPECT_EQ(cache_key(back), cache_key(c));
}

TEST(JobConfig, TolerancesArePositive) {
  JobConfig c = test::config_for("lattes");
  for (auto& [name, v] : c.tol) EXPECT_GT(v, 0.0) << name;
  EXPECT_NO_THROW(c.validate());
  c.tol["sphere"] = -1.0;
  try {
    c.validate();
    FAIL() << "negative tolerance accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::config);
  }
}

TEST(JobConfig, CacheKeyTracksSettings) {
  JobConfig a = test::config_for("lattes");
  JobConfig b = a;
  EXPECT_EQ(cache_key(a), cache_key(b));
  b.tol["koenig"] = 1e-7;
  EXPECT_NE(cache_key(a), cache_key(b));
  b = a;
  b.grid_level = 3;
  EXPECT_NE(cache_key(a), cache_key(b));
  b = a;
  b.map = load_map("one_minus_two_over_zsq", default_maps_dir());
  EXPECT_NE(cache_key(a), cache_key(b));
}

TEST(LoadMap, PathAndStemFallback) {
  auto by_stem = load_map("lattes", default_maps_dir());
  auto by_path = load_map((default_maps_dir() / "lattes.json").string(), "/nonexistent");
  auto by_dir_stem = load_map("examples/lattes", default_maps_dir());
  EXPECT_EQ(map_hash(by_stem), map_hash(by_path));
  EXPECT_EQ(map_hash(by_stem), map_hash(by_dir_stem));
  EXPECT_EQ(by_stem.function().degree(), 4);
  EXPECT_THROW(load_map("no_such_map", default_maps_dir()), Error);
}

TEST(ChartGrid, BinaryRoundTrip) {
  const auto& atlas = test::built("lattes").family->atlas();
  auto dir = scratch_dir("grid");
  auto g = sample_chart_grid(atlas, 0, 0xabcdefull, 5, 8);
  EXPECT_EQ(g.values.size(), 40u);
  write_chart_grid(dir / "g.qrx", g);
  EXPECT_EQ(slurp(dir / "g.qrx").substr(0, 4), "QRX1");
  auto back = read_chart_grid(dir / "g.qrx");
  EXPECT_EQ(back.map_hash, g.map_hash);
  EXPECT_EQ(back.chart_id, g.chart_id);
  EXPECT_EQ(back.r0, g.r0);
  EXPECT_EQ(back.lambda, g.lambda);
  EXPECT_EQ(back.values, g.values);
  // the centre row is the node itself
  EXPECT_EQ(std::abs(g.values[0]), 0.0);
  std::ofstream(dir / "bad.qrx") << "XXXX";
  EXPECT_THROW(read_chart_grid(dir / "bad.qrx"), Error);
}

TEST(Cache, HitAndStaleEntries) {
  unsetenv("QRX_CACHE");
  auto dir = scratch_dir("cache");
  JobConfig c = test::config_for("lattes");
  c.cache_dir = dir.string();
  Built first = build(c);
  EXPECT_FALSE(first.from_cache);
  Built second = build(c);
  EXPECT_TRUE(second.from_cache);
  EXPECT_EQ(second.domain->N0(), first.domain->N0());
  EXPECT_EQ(second.domain->field().s(), first.domain->field().s());
  EXPECT_EQ(second.family->atlas().koenig(0).r0(), first.family->atlas().koenig(0).r0());

  // a different tolerance set is a different key; the old entry is never read
  JobConfig other = c;
  other.tol["sphere"] = 2e-7;
  EXPECT_FALSE(build(other).from_cache);

  // a tampered sidecar under the right key is stale
  fs::path sidecar = dir / (hex(cache_key(c)) + ".json");
  json j = json::parse(slurp(sidecar));
  j["grid_level"] = 2;
  std::ofstream(sidecar) << j.dump();
  EXPECT_FALSE(build(c).from_cache);
  EXPECT_TRUE(build(c).from_cache);

  // a corrupted chart grid is stale too
  fs::path grid = dir / (hex(cache_key(c)) + ".chart0.qrx");
  auto g = read_chart_grid(grid);
  g.values[3] += 1e-3;
  write_chart_grid(grid, g);
  EXPECT_FALSE(build(c).from_cache);
}

TEST(Cache, EnvironmentOverride) {
  auto dir = scratch_dir("env");
  JobConfig c = test::config_for("lattes");
  c.cache_dir = "/somewhere/else";
  setenv("QRX_CACHE", dir.c_str(), 1);
  EXPECT_EQ(effective_cache_dir(c), dir.string());
  unsetenv("QRX_CACHE");
  EXPECT_EQ(effective_cache_dir(c), "/somewhere/else");
}

TEST(Suites, Expansion) {
  EXPECT_EQ(expand_suites({"all"}), suite_names());
  EXPECT_EQ(expand_suites({"radii", "winding", "radii"}), (std::vector<std::string>{"radii", "winding"}));
  EXPECT_THROW(expand_suites({"nope"}), Error);
}

TEST(Suites, ReportIsDeterministic) {
  JobConfig c = test::config_for("lattes");
  const auto& b = test::built("lattes");
  auto run = [&] {
    std::vector<SuiteResult> r;
    for (auto s : {"winding", "coordinates", "scaling"}) r.push_back(run_suite(s, c, b));
    return make_report(c, r).dump(2);
  };
  std::string a = run();
  EXPECT_EQ(a, run());
  json j = json::parse(a);
  for (auto key : {"map_hash", "suite", "per_sample", "aggregate", "pass"}) EXPECT_TRUE(j.contains(key)) << key;
  EXPECT_TRUE(j["pass"].get<bool>());
}

TEST(Cli, Analyze) {
  auto r = run_cli("analyze --map " + (default_maps_dir() / "one_minus_two_over_zsq").string());
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("expanding: true; postcritical: 0→∞→1→−1 (fixed, |λ|=4)"), std::string::npos) << r.out;
}

TEST(Cli, VerifyWindingPasses) {
  auto dir = scratch_dir("cli_verify");
  for (auto map : {"lattes", "one_minus_two_over_zsq"}) {
    auto out = dir / (std::string(map) + ".json");
    auto r = run_cli(std::string("verify --suite winding --map ") + map + " --out " + out.string());
    EXPECT_EQ(r.code, 0) << map;
    EXPECT_TRUE(json::parse(slurp(out))["pass"].get<bool>());
    EXPECT_EQ(run_cli("report " + out.string()).code, 0);
  }
}

TEST(Cli, MeshVertexCount) {
  auto dir = scratch_dir("cli_mesh");
  auto r = run_cli("mesh --map lattes --n 3 --level 4 --out " + dir.string());
  ASSERT_EQ(r.code, 0);
  std::istringstream in(slurp(dir / "sphere_n3.obj"));
  std::string line;
  int v = 0;
  while (std::getline(in, line)) v += line.rfind("v ", 0) == 0;
  EXPECT_EQ(v, 2562);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run_cli("verify --suite nope --map lattes").code, 2);
  EXPECT_EQ(run_cli("analyze --map no_such_map").code, 2);
  EXPECT_EQ(run_cli("analyze --map lattes --tol-winding -1").code, 2);
  EXPECT_EQ(run_cli("frobnicate").code, 2);
  // the basilica z^2 - 1 has a periodic critical point
  auto dir = scratch_dir("cli_basilica");
  std::ofstream(dir / "basilica.json")
      << R"({"name": "basilica", "numerator": [[-1, 0], [0, 0], [1, 0]], "denominator": [[1, 0]]})";
  EXPECT_EQ(run_cli("build --map " + (dir / "basilica.json").string()).code, 2);
}

TEST(Cli, OrbitDump) {
  auto r = run_cli("orbit --map lattes --z 0.3,0.7 --steps 3");
  EXPECT_EQ(r.code, 0);
  int lines = 0;
  std::istringstream in(r.out);
  std::string line;
  while (std::getline(in, line)) lines += !line.empty() && line[0] != '#';
  EXPECT_EQ(lines, 4);
}
