#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "mfmo/evolution.hpp"
#include "mfmo/nas_encoding.hpp"
#include "mfmo/problems.hpp"
#include "mfmo/surrogate.hpp"

using namespace mfmo;

namespace {

std::vector<Objectives> random_objectives(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Objectives> f(n);
  for (auto& v : f) v = {uniform01(rng), uniform01(rng)};
  return f;
}

struct CoKrigingData {
  std::vector<Point> x_hf, x_lf;
  std::vector<double> y_hf, y_lf, lf_at_hf;
};

CoKrigingData zdt_data(std::size_t dim, std::size_t n_hf, std::size_t n_lf) {
  const problems::MfZdtProblem p(problems::ZdtVariant::ZDT1, dim);
  CoKrigingData d;
  d.x_lf = evo::maximin_lhd(n_lf, Bounds::unit(dim), 1);
  for (const auto& x : d.x_lf) d.y_lf.push_back(p.evaluate(x, Fidelity::LF)[1]);
  for (std::size_t i : evo::maximin_subset(d.x_lf, n_hf, Bounds::unit(dim))) {
    d.x_hf.push_back(d.x_lf[i]);
    d.y_hf.push_back(p.evaluate(d.x_lf[i], Fidelity::HF)[1]);
    d.lf_at_hf.push_back(d.y_lf[i]);
  }
  return d;
}

}  // namespace

static void BM_NondominatedSort(benchmark::State& state) {
  const auto f = random_objectives(static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(evo::nondominated_sort(f));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_NondominatedSort)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

static void BM_Hypervolume2d(benchmark::State& state) {
  const auto f = random_objectives(static_cast<std::size_t>(state.range(0)), 5);
  for (auto _ : state) benchmark::DoNotOptimize(evo::hypervolume_2d(f, {1.1, 1.1}));
}
BENCHMARK(BM_Hypervolume2d)->RangeMultiplier(4)->Range(16, 4096);

static void BM_CoKrigingFit(benchmark::State& state) {
  const auto d = zdt_data(4, static_cast<std::size_t>(state.range(0)), 2 * static_cast<std::size_t>(state.range(0)));
  surrogate::FitOptions opt;
  opt.search = {10, 20, 0.8, 0.9};
  for (auto _ : state) {
    benchmark::DoNotOptimize(surrogate::CoKrigingModel::fit(d.x_hf, d.y_hf, d.x_lf, d.y_lf, d.lf_at_hf, opt));
  }
}
BENCHMARK(BM_CoKrigingFit)->Arg(10)->Arg(30)->Unit(benchmark::kMillisecond);

static void BM_CoKrigingPredict(benchmark::State& state) {
  const auto d = zdt_data(4, 30, 60);
  surrogate::FitOptions opt;
  opt.search = {10, 20, 0.8, 0.9};
  const auto m = surrogate::CoKrigingModel::fit(d.x_hf, d.y_hf, d.x_lf, d.y_lf, d.lf_at_hf, opt);
  const Point x{0.3, 0.6, 0.2, 0.9};
  for (auto _ : state) benchmark::DoNotOptimize(m.predict(x));
}
BENCHMARK(BM_CoKrigingPredict);

static void BM_DecodeAssembleFlops(benchmark::State& state) {
  const nas::ArchitectureConfig cfg;
  const auto schema = nas::continuous_schema(cfg.encoding);
  Rng rng(9);
  Point x(schema.size());
  for (std::size_t k = 0; k < x.size(); ++k) x[k] = uniform(rng, schema.lower(k), schema.upper(k));
  for (auto _ : state) {
    const auto g = nas::decode_genotype(x, cfg.encoding, nas::Encoding::Continuous);
    const auto spec = nas::assemble_architecture(g, cfg);
    benchmark::DoNotOptimize(nas::estimate_flops(spec));
  }
}
BENCHMARK(BM_DecodeAssembleFlops);
BENCHMARK_MAIN();
