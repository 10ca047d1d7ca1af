#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qrx/distortion.hpp"

namespace qrx::pipeline {

using json = nlohmann::json;

struct MapSpec {
  std::string name;
  std::string description;
  std::vector<cplx> numerator;    // ascending powers
  std::vector<cplx> denominator;

  RationalFunction function() const;
};

json to_json(const MapSpec& m);
MapSpec map_from_json(const json& j);

// Resolves `ref` as a file path, as the path with ".json" appended, or as a
// stem looked up in `maps_dir` (only the file name of `ref` is used there).
MapSpec load_map(const std::string& ref, const std::filesystem::path& maps_dir);
std::filesystem::path default_maps_dir();

// FNV-1a over the canonical text of the coefficients.
std::uint64_t map_hash(const MapSpec& m);
std::string hex(std::uint64_t h);

std::map<std::string, double> default_tolerances();

struct JobConfig {
  MapSpec map;
  int grid_level = 4;
  int n_max = 32;
  std::map<std::string, double> tol = default_tolerances();
  std::vector<std::string> suites{"all"};
  std::string out;        // report path (verify) or output directory (mesh)
  std::string cache_dir;  // empty: no cache
  std::uint64_t seed = 0;
  std::size_t samples = 200;  // distortion samples
  std::vector<int> mesh_n{1, 2, 3};
  int mesh_level = 4;

  double tolerance(const std::string& name) const;
  void validate() const;
};

json to_json(const JobConfig& c);
JobConfig config_from_json(const json& j);

// Cache key: map hash plus every setting the cached quantities depend on.
std::uint64_t cache_key(const JobConfig& c);

// Everything `build` produces. The domain owns the field, which owns the family.
struct Built {
  RationalFunction f;
  OrbitSchedule schedule;
  std::shared_ptr<const ModifiedMapFamily> family;
  std::vector<SpherePoint> grid;
  std::optional<ExtensionDomain> domain;
  bool from_cache = false;
};

// Chart grid file: "QRX1", then map hash (u64), chart id (i32), r0 and
// lambda (3 doubles), rows and columns (2 u32), then rows x cols complex
// values (re, im) row-major. Row i, column j holds the local coordinate of
// chi^{-1}(w) for w = radius_0 * i / (rows - 1) * exp(2 pi i j / cols).
struct ChartGrid {
  std::uint64_t map_hash = 0;
  std::int32_t chart_id = 0;
  double r0 = 0.0;
  cplx lambda{0.0};
  std::uint32_t rows = 0, cols = 0;
  std::vector<cplx> values;
};
void write_chart_grid(const std::filesystem::path& path, const ChartGrid& g);
ChartGrid read_chart_grid(const std::filesystem::path& path);
ChartGrid sample_chart_grid(const ChartAtlas& atlas, int node, std::uint64_t map_hash,
                            std::uint32_t rows = 17, std::uint32_t cols = 32);

// Cache directory from the config, overridden by QRX_CACHE when set.
std::string effective_cache_dir(const JobConfig& c);

// Charts, radius field, s and N0; read from and written to the cache when
// a cache directory is configured. `log` may be null.
Built build(const JobConfig& c, std::ostream* log = nullptr);

struct SuiteResult {
  std::string suite;
  bool pass = false;
  json per_sample = json::array();
  json aggregate = json::object();
  std::vector<std::string> failures;  // names of the failing checks
};

const std::vector<std::string>& suite_names();  // every suite except "all"
std::vector<std::string> expand_suites(const std::vector<std::string>& requested);

SuiteResult run_suite(const std::string& name, const JobConfig& c, const Built& b);

// {map_hash, suite, per_sample[], aggregate, pass}; the suite entry is the
// requested list and per-suite results go into aggregate.
json make_report(const JobConfig& c, const std::vector<SuiteResult>& results);
void write_report_summary(std::ostream& out, const json& report);

std::string analyze_summary(const Built& b);

}  // namespace qrx::pipeline
