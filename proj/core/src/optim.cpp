#include "dinozaur/optim.hpp"

#include <cmath>
#include <numbers>

#include "dinozaur/errors.hpp"

namespace dinozaur::nn {

void adamw_step(ParamStore& store, OptimizerState& state) { adamw_step(store, state, state.config.lr); }

void adamw_step(ParamStore& store, OptimizerState& state, double lr) {
  for (const auto& [name, p] : store) {
    for (double g : p.grad)
      if (!std::isfinite(g)) throw NumericError("adamw_step: non-finite gradient in '" + name + "'");
  }

  const AdamWConfig& cfg = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);

  for (auto& [name, p] : store) {
    auto& m = state.first_moment[name];
    auto& v = state.second_moment[name];
    if (m.size() != p.size()) m.assign(p.size(), 0.0);
    if (v.size() != p.size()) v.assign(p.size(), 0.0);
    const double decay = 1.0 - lr * cfg.weight_decay;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double g = p.grad[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p.value[i] = p.value[i] * decay - lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
  store.zero_grad();
}

double one_cycle_lr(std::uint64_t step, std::uint64_t total_steps, double max_lr) {
  const double initial = max_lr / 25.0;
  const double floor = max_lr / 1e4;
  if (total_steps == 0) return initial;
  const double s = static_cast<double>(std::min(step, total_steps));
  const double total = static_cast<double>(total_steps);
  const double warm = 0.3 * total;
  if (s <= warm) return warm > 0.0 ? initial + (max_lr - initial) * (s / warm) : max_lr;
  const double progress = (s - warm) / (total - warm);
  return floor + (max_lr - floor) * 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace dinozaur::nn
