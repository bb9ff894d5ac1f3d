#include <benchmark/benchmark.h>

#include "dinozaur/metrics.hpp"
#include "dinozaur/rng.hpp"

using namespace dinozaur;

// Full report (RL2, NLL, MA on 100 levels, IS on 99 levels) for 64 elements. Arg: points per element.
static void BM_MetricReport(benchmark::State& state) {
  const int points = static_cast<int>(state.range(0));
  metrics::PredictionSet set;
  Rng rng(5);
  for (int e = 0; e < 64; ++e) {
    Field u({points}, 1), m({points}, 1), s({points}, 1);
    for (int i = 0; i < points; ++i) {
      u[i] = rng.normal();
      m[i] = u[i] + 0.1 * rng.normal();
      s[i] = 0.05 + 0.1 * rng.uniform();
    }
    set.truth.push_back(u);
    set.mean.push_back(m);
    set.stddev.push_back(s);
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::evaluate(set));
  state.SetItemsProcessed(state.iterations() * 64 * points);
}
BENCHMARK(BM_MetricReport)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);
