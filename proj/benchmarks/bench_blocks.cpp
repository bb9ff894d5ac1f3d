#include <benchmark/benchmark.h>

#include "dinozaur/network.hpp"
#include "dinozaur/nn.hpp"

using namespace dinozaur;

namespace {

op::NetworkSpec spec_for(op::BlockKind kind, int dim, int n) {
  op::NetworkSpec s;
  s.n.assign(static_cast<std::size_t>(dim), n);
  s.kmax.assign(static_cast<std::size_t>(dim), n / 4);
  s.kind = kind;
  return s;
}

Field input(const op::NetworkSpec& s) {
  Field f(s.n, s.in_channels);
  Rng rng(2);
  for (double& v : f.data()) v = rng.normal();
  return f;
}

void forward_backward(benchmark::State& state, op::BlockKind kind) {
  const auto spec = spec_for(kind, static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  nn::ParamStore store;
  Rng rng(3);
  op::init_params(spec, store, rng);
  const Field x = input(spec);
  for (auto _ : state) {
    nn::Tape tape;
    nn::Var loss = nn::mse(op::network_forward(tape, spec, store, tape.constant(x)), x);
    tape.backward(loss, store);
  }
  store.zero_grad();
}

}  // namespace

// Full network (d_c = 32, M = 4) forward + backward on one sample. Args: dimension, n.
static void BM_DiffusionNetwork(benchmark::State& state) { forward_backward(state, op::BlockKind::Diffusion); }
static void BM_DiffusionNoGradNetwork(benchmark::State& state) {
  forward_backward(state, op::BlockKind::DiffusionNoGrad);
}
static void BM_FnoNetwork(benchmark::State& state) { forward_backward(state, op::BlockKind::Fno); }
BENCHMARK(BM_DiffusionNetwork)->Args({1, 64})->Args({2, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DiffusionNoGradNetwork)->Args({1, 64})->Args({2, 32})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FnoNetwork)->Args({1, 64})->Args({2, 32})->Unit(benchmark::kMillisecond);

static void BM_NetworkPredict(benchmark::State& state) {
  const auto spec = spec_for(op::BlockKind::Diffusion, 2, 32);
  nn::ParamStore store;
  Rng rng(4);
  op::init_params(spec, store, rng);
  const Field x = input(spec);
  for (auto _ : state) benchmark::DoNotOptimize(op::network_predict(spec, store, x));
}
BENCHMARK(BM_NetworkPredict)->Unit(benchmark::kMillisecond);
