#include <benchmark/benchmark.h>

#include "dinozaur/rng.hpp"
#include "dinozaur/spectral.hpp"

using namespace dinozaur;

namespace {

Field noise(const std::vector<int>& n, int channels) {
  Field f(n, channels);
  Rng rng(1);
  for (double& v : f.data()) v = rng.normal();
  return f;
}

std::vector<int> extents(const benchmark::State& state) {
  std::vector<int> n(static_cast<std::size_t>(state.range(0)), static_cast<int>(state.range(1)));
  return n;
}

}  // namespace

// Args: dimension, points per dimension. 32 channels throughout.
static void BM_ForwardFft(benchmark::State& state) {
  const auto n = extents(state);
  const spectral::ModeSet modes(std::vector<int>(n.size(), n[0] / 4));
  const Field f = noise(n, 32);
  for (auto _ : state) benchmark::DoNotOptimize(spectral::forward_fft(f, modes));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}
BENCHMARK(BM_ForwardFft)->Args({1, 64})->Args({1, 1024})->Args({2, 32})->Args({2, 64})->Args({3, 16});

static void BM_DiffuseRoundTrip(benchmark::State& state) {
  const auto n = extents(state);
  const spectral::Grid grid(n);
  const spectral::ModeSet modes(std::vector<int>(n.size(), n[0] / 4));
  const Field f = noise(n, 32);
  const std::vector<double> tau(32, 0.01);
  for (auto _ : state)
    benchmark::DoNotOptimize(spectral::inverse_fft(spectral::diffuse(spectral::forward_fft(f, modes), tau), grid));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.size()));
}
BENCHMARK(BM_DiffuseRoundTrip)->Args({1, 64})->Args({2, 32})->Args({2, 64});
