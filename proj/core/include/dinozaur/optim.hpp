#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dinozaur/autodiff.hpp"

namespace dinozaur::nn {

struct AdamWConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
};

/// First/second moment accumulators keyed by parameter name.
struct OptimizerState {
  AdamWConfig config;
  std::uint64_t step = 0;
  std::map<std::string, std::vector<double>> first_moment;
  std::map<std::string, std::vector<double>> second_moment;
};

/// One AdamW update with bias correction and decoupled weight decay
/// (theta <- theta * (1 - lr * wd) before the adaptive step), using
/// state.config.lr unless `lr` is given. Gradients are zeroed afterwards.
/// Throws NumericError, leaving the store untouched, if any gradient is non-finite.
void adamw_step(ParamStore& store, OptimizerState& state);
void adamw_step(ParamStore& store, OptimizerState& state, double lr);

/// One-cycle schedule: linear warmup from max_lr/25 to max_lr over the first
/// 30% of steps, then cosine decay to max_lr/1e4 at step == total_steps.
double one_cycle_lr(std::uint64_t step, std::uint64_t total_steps, double max_lr);

}  // namespace dinozaur::nn
