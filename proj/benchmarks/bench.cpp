#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <random>

#include "pipeline.hpp"
#include "qrx/error.hpp"

using namespace qrx;

namespace {

const char* const kStems[] = {"one_minus_two_over_zsq", "lattes"};

const pipeline::Built& built(int which) {
  static std::map<int, std::unique_ptr<pipeline::Built>> cache;
  auto& slot = cache[which];
  if (!slot) {
    pipeline::JobConfig c;
    c.map = pipeline::load_map(kStems[which], pipeline::default_maps_dir());
    slot = std::make_unique<pipeline::Built>(pipeline::build(c));
  }
  return *slot;
}

const std::vector<DistortionSample>& samples(int which) {
  static std::map<int, std::vector<DistortionSample>> cache;
  auto& slot = cache[which];
  if (slot.empty()) {
    UniformKSettings s;
    s.samples = 64;
    s.n_max = 2;
    slot = extension_samples(*built(which).domain, s).samples;
  }
  return slot;
}

std::vector<SpherePoint> sphere_points(std::size_t count) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> g;
  std::vector<SpherePoint> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(SpherePoint::from_unit_vector(Vec3(g(rng), g(rng), g(rng)).normalized()));
  return out;
}

void BM_Build(benchmark::State& state) {
  pipeline::JobConfig c;
  c.map = pipeline::load_map(kStems[state.range(0)], pipeline::default_maps_dir());
  for (auto _ : state) benchmark::DoNotOptimize(pipeline::build(c));
  state.SetLabel(kStems[state.range(0)]);
}
BENCHMARK(BM_Build)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_Extend(benchmark::State& state) {
  auto& dom = *built(state.range(0)).domain;
  auto& pts = samples(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    auto& s = pts[i++ % pts.size()];
    try {
      benchmark::DoNotOptimize(dom.extend_traced(s.p, s.hint));
    } catch (const Error&) {
    }
  }
  state.SetLabel(kStems[state.range(0)]);
}
BENCHMARK(BM_Extend)->Arg(0)->Arg(1);

void BM_Locate(benchmark::State& state) {
  auto& dom = *built(state.range(0)).domain;
  auto& pts = samples(state.range(0));
  std::size_t i = 0;
  for (auto _ : state) {
    auto& s = pts[i++ % pts.size()];
    benchmark::DoNotOptimize(dom.locate(s.p));
  }
  state.SetLabel(kStems[state.range(0)]);
}
BENCHMARK(BM_Locate)->Arg(0)->Arg(1);

void BM_ComposeNorms(benchmark::State& state) {
  auto& family = built(state.range(0)).family;
  auto pts = sphere_points(256);
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(family->compose_norms(pts[i++ % pts.size()], 1, 16));
  state.SetLabel(kStems[state.range(0)]);
}
BENCHMARK(BM_ComposeNorms)->Arg(0)->Arg(1);

void BM_KoenigRoundTrip(benchmark::State& state) {
  auto& chart = built(state.range(0)).family->atlas().koenig(0);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<cplx> ws;
  for (int i = 0; i < 256; ++i) ws.push_back(std::polar(0.9 * chart.r0() * u(rng), 2.0 * M_PI * u(rng)));
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(chart.forward(chart.inverse(ws[i++ % ws.size()])));
  state.SetLabel(kStems[state.range(0)]);
}
BENCHMARK(BM_KoenigRoundTrip)->Arg(0)->Arg(1);

void BM_UniformK(benchmark::State& state) {
  auto& dom = *built(state.range(0)).domain;
  UniformKSettings s;
  s.samples = 8;
  s.n_max = 3;
  for (auto _ : state) benchmark::DoNotOptimize(uniform_K_report(dom, s));
  state.SetLabel(kStems[state.range(0)]);
}
BENCHMARK(BM_UniformK)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(2);

}  // namespace
BENCHMARK_MAIN();
