#include "dinozaur/bayes.hpp"

#include <numbers>

#include "dinozaur/errors.hpp"
#include "dinozaur/nn.hpp"

namespace dinozaur::bayes {

using nn::Tape;

namespace {

int block_width(const nn::ParamStore& store, int block) {
  return static_cast<int>(store.at(mean_param(block)).size());
}

}  // namespace

std::string mean_param(int block) { return "bayes.block." + std::to_string(block) + ".mu"; }
std::string chol_param(int block) { return "bayes.block." + std::to_string(block) + ".chol"; }

std::size_t packed_index(int row, int col) {
  return static_cast<std::size_t>(row) * (row + 1) / 2 + static_cast<std::size_t>(col);
}

void make_bayesian(const op::NetworkSpec& spec, nn::ParamStore& store, const PosteriorInit& init,
                   double log_noise_var) {
  if (spec.kind == op::BlockKind::Fno) throw ConfigError("make_bayesian: FNO blocks have no diffusion times");
  if (!(init.stddev > 0.0)) throw DomainError("make_bayesian: posterior stddev must be positive");
  const int dc = spec.width;
  for (int i = 0; i < spec.blocks; ++i) {
    store.remove(op::block_param(i, "log_tau"));
    auto& mu = store.add(mean_param(i), {dc});
    for (double& v : mu.value) v = init.mean;
    auto& chol = store.add(chol_param(i), {dc * (dc + 1) / 2});
    for (int r = 0; r < dc; ++r) chol.value[packed_index(r, r)] = std::log(init.stddev);
  }
  auto& noise = store.add(kNoiseParam, {1});
  noise.value[0] = log_noise_var;
}

bool is_bayesian(const nn::ParamStore& store) { return store.contains(kNoiseParam); }

std::vector<double> cholesky_factor(const nn::ParamStore& store, int block) {
  const int dc = block_width(store, block);
  const auto& packed = store.at(chol_param(block)).value;
  std::vector<double> L(static_cast<std::size_t>(dc) * dc, 0.0);
  for (int r = 0; r < dc; ++r)
    for (int c = 0; c <= r; ++c) {
      const double v = packed[packed_index(r, c)];
      L[r * dc + c] = (r == c) ? std::exp(v) : v;
    }
  return L;
}

std::vector<double> covariance(const nn::ParamStore& store, int block) {
  const int dc = block_width(store, block);
  const auto L = cholesky_factor(store, block);
  std::vector<double> S(static_cast<std::size_t>(dc) * dc, 0.0);
  for (int r = 0; r < dc; ++r)
    for (int c = 0; c < dc; ++c) {
      double s = 0.0;
      for (int k = 0; k <= std::min(r, c); ++k) s += L[r * dc + k] * L[c * dc + k];
      S[r * dc + c] = s;
    }
  return S;
}

PosteriorSummary summarize_posterior(const nn::ParamStore& store, int blocks) {
  PosteriorSummary out;
  for (int i = 0; i < blocks; ++i) {
    if (is_bayesian(store)) {
      const int dc = block_width(store, i);
      const auto S = covariance(store, i);
      out.log_tau_mean.push_back(store.at(mean_param(i)).value);
      std::vector<double> sd(dc);
      for (int c = 0; c < dc; ++c) sd[c] = std::sqrt(S[c * dc + c]);
      out.log_tau_std.push_back(std::move(sd));
    } else {
      const auto& lt = store.at(op::block_param(i, "log_tau")).value;
      out.log_tau_mean.push_back(lt);
      out.log_tau_std.emplace_back(lt.size(), 0.0);
    }
  }
  return out;
}

std::vector<std::vector<double>> draw_standard_normal(int blocks, int width, Rng& rng) {
  std::vector<std::vector<double>> eps(blocks, std::vector<double>(width));
  for (auto& e : eps)
    for (double& v : e) v = rng.normal();
  return eps;
}

std::vector<double> sample_log_times(const nn::ParamStore& store, int block, std::span<const double> eps) {
  const int dc = block_width(store, block);
  if (static_cast<int>(eps.size()) != dc) throw ShapeError("sample_log_times: eps must have d_c entries");
  const auto L = cholesky_factor(store, block);
  std::vector<double> out = store.at(mean_param(block)).value;
  for (int r = 0; r < dc; ++r)
    for (int c = 0; c <= r; ++c) out[r] += L[r * dc + c] * eps[c];
  return out;
}

Var sample_log_times(Tape& tape, const nn::ParamStore& store, int block, std::span<const double> eps) {
  Var mu = tape.parameter(store, mean_param(block));
  Var chol = tape.parameter(store, chol_param(block));
  std::vector<double> e(eps.begin(), eps.end());
  std::vector<double> value = sample_log_times(store, block, eps);
  const int dc = static_cast<int>(value.size());
  const std::size_t mid = mu.id(), lid = chol.id();
  return tape.push(Field({}, dc, std::move(value)), {mu, chol}, [mid, lid, e, dc](Tape& t, std::size_t o) {
    const Field& g = t.grad(o);
    if (t.requires_grad(mid)) {
      auto& gm = t.grad_buffer(mid).data();
      for (int r = 0; r < dc; ++r) gm[r] += g[r];
    }
    if (t.requires_grad(lid)) {
      const auto& packed = t.value(lid).data();
      auto& gl = t.grad_buffer(lid).data();
      for (int r = 0; r < dc; ++r)
        for (int c = 0; c <= r; ++c) {
          const std::size_t k = packed_index(r, c);
          const double d = g[r] * e[c];
          gl[k] += (r == c) ? d * std::exp(packed[k]) : d;
        }
    }
  });
}

double kl_divergence(const nn::ParamStore& store, int blocks, const TimePrior& prior) {
  if (!(prior.stddev > 0.0)) throw DomainError("kl_divergence: prior stddev must be positive");
  const double var_p = prior.stddev * prior.stddev;
  double kl = 0.0;
  for (int i = 0; i < blocks; ++i) {
    const auto& mu = store.at(mean_param(i)).value;
    const auto& packed = store.at(chol_param(i)).value;
    const int dc = static_cast<int>(mu.size());
    double trace = 0.0, logdet = 0.0, dist = 0.0;
    for (int r = 0; r < dc; ++r) {
      for (int c = 0; c <= r; ++c) {
        const double v = packed[packed_index(r, c)];
        const double l = (r == c) ? std::exp(v) : v;
        trace += l * l;
      }
      logdet += 2.0 * packed[packed_index(r, r)];
      dist += (mu[r] - prior.mean) * (mu[r] - prior.mean);
    }
    kl += 0.5 * (trace / var_p + dist / var_p - dc + dc * std::log(var_p) - logdet);
  }
  return kl;
}

Var kl_divergence(Tape& tape, const nn::ParamStore& store, int blocks, const TimePrior& prior) {
  const double value = kl_divergence(store, blocks, prior);
  std::vector<Var> leaves;
  for (int i = 0; i < blocks; ++i) {
    leaves.push_back(tape.parameter(store, mean_param(i)));
    leaves.push_back(tape.parameter(store, chol_param(i)));
  }
  const double var_p = prior.stddev * prior.stddev;
  const double mean_p = prior.mean;
  std::vector<std::size_t> ids;
  for (const Var& v : leaves) ids.push_back(v.id());

  Field out({}, 1, {value});
  if (leaves.empty()) return tape.constant(std::move(out));
  return tape.push(std::move(out), std::span<const Var>(leaves), [ids, var_p, mean_p](Tape& t, std::size_t o) {
    const double g = t.grad(o)[0];
    for (std::size_t b = 0; b + 1 < ids.size(); b += 2) {
      const auto& mu = t.value(ids[b]).data();
      const auto& packed = t.value(ids[b + 1]).data();
      const int dc = static_cast<int>(mu.size());
      if (t.requires_grad(ids[b])) {
        auto& gm = t.grad_buffer(ids[b]).data();
        for (int r = 0; r < dc; ++r) gm[r] += g * (mu[r] - mean_p) / var_p;
      }
      if (t.requires_grad(ids[b + 1])) {
        auto& gl = t.grad_buffer(ids[b + 1]).data();
        for (int r = 0; r < dc; ++r)
          for (int c = 0; c <= r; ++c) {
            const std::size_t k = packed_index(r, c);
            if (r == c) {
              const double l2 = std::exp(2.0 * packed[k]);
              gl[k] += g * (l2 / var_p - 1.0);
            } else {
              gl[k] += g * packed[k] / var_p;
            }
          }
      }
    }
  });
}

Var gaussian_log_likelihood(Var prediction, const Field& target, Var log_noise_var) {
  const Field& pv = prediction.value();
  if (!pv.same_shape(target)) throw ShapeError("gaussian_log_likelihood: shape mismatch");
  const double lv = log_noise_var.value()[0];
  const double var = std::exp(lv);
  const double n = static_cast<double>(pv.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) sq += (target[i] - pv[i]) * (target[i] - pv[i]);
  const double value = -0.5 * n * (std::log(2.0 * std::numbers::pi) + lv) - sq / (2.0 * var);
  const std::size_t pid = prediction.id(), vid = log_noise_var.id();
  return prediction.tape().push(
      Field({}, 1, {value}), {prediction, log_noise_var}, [pid, vid, target, n](Tape& t, std::size_t o) {
        const double g = t.grad(o)[0];
        const Field& pv = t.value(pid);
        const double lv = t.value(vid)[0];
        const double var = std::exp(lv);
        if (t.requires_grad(pid)) {
          auto& gp = t.grad_buffer(pid).data();
          for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g * (target[i] - pv[i]) / var;
        }
        if (t.requires_grad(vid)) {
          double sq = 0.0;
          for (std::size_t i = 0; i < pv.size(); ++i) sq += (target[i] - pv[i]) * (target[i] - pv[i]);
          t.grad_buffer(vid)[0] += g * (-0.5 * n + sq / (2.0 * var));
        }
      });
}

ElboTerms elbo(const op::NetworkSpec& spec, nn::ParamStore& store, std::span<const Field> inputs,
               std::span<const Field> targets, std::size_t dataset_size,
               const std::vector<std::vector<double>>& eps, const TimePrior& prior, bool accumulate) {
  if (inputs.size() != targets.size() || inputs.empty())
    throw ShapeError("elbo: need matching, non-empty input and target batches");
  if (static_cast<int>(eps.size()) != spec.blocks) throw ShapeError("elbo: need one eps vector per block");
  const double scale = static_cast<double>(dataset_size) / static_cast<double>(inputs.size());

  ElboTerms terms;
  for (std::size_t b = 0; b < inputs.size(); ++b) {
    Tape tape(accumulate);
    std::vector<Var> tau;
    for (int i = 0; i < spec.blocks; ++i) tau.push_back(nn::exp(sample_log_times(tape, store, i, eps[i])));
    Var pred = op::network_forward(tape, spec, store, tape.constant(inputs[b]), tau);
    Var ll = gaussian_log_likelihood(pred, targets[b], tape.parameter(store, kNoiseParam));
    terms.expected_log_likelihood += scale * ll.value()[0];
    if (accumulate) tape.backward(ll, store, -scale);
  }

  Tape tape(accumulate);
  Var kl = kl_divergence(tape, store, spec.blocks, prior);
  terms.kl = kl.value()[0];
  if (accumulate) tape.backward(kl, store, 1.0);

  terms.elbo = terms.expected_log_likelihood - terms.kl;
  terms.noise_var = std::exp(store.at(kNoiseParam).value[0]);
  if (!std::isfinite(terms.elbo)) throw NumericError("elbo: non-finite objective");
  return terms;
}

Predictive posterior_predictive(const op::NetworkSpec& spec, const nn::ParamStore& store, const Field& input,
                                const PredictiveOptions& options) {
  if (options.samples < 1) throw ConfigError("posterior_predictive: need at least one sample");
  const bool bayesian = is_bayesian(store);
  const double sigma = bayesian ? std::exp(0.5 * store.at(kNoiseParam).value[0]) : 0.0;

  Predictive out;
  for (int s = 0; s < options.samples; ++s) {
    Rng rng(Rng::derive(options.seed, static_cast<std::uint64_t>(s)));
    std::vector<std::vector<double>> log_tau;
    if (bayesian) {
      const auto eps = draw_standard_normal(spec.blocks, spec.width, rng);
      for (int i = 0; i < spec.blocks; ++i) log_tau.push_back(sample_log_times(store, i, eps[i]));
    }
    Field y = op::network_predict(spec, store, input, log_tau);
    if (bayesian && options.aleatoric)
      for (double& v : y.data()) v += sigma * rng.normal();
    out.samples.push_back(std::move(y));
  }

  const Field& first = out.samples.front();
  out.mean = Field(first.extents(), first.channels());
  out.stddev = Field(first.extents(), first.channels());
  const double S = static_cast<double>(options.samples);
  for (const Field& y : out.samples)
    for (std::size_t i = 0; i < y.size(); ++i) out.mean[i] += y[i] / S;
  if (options.samples > 1) {
    for (const Field& y : out.samples)
      for (std::size_t i = 0; i < y.size(); ++i) {
        const double r = y[i] - out.mean[i];
        out.stddev[i] += r * r;
      }
    for (double& v : out.stddev.data()) v = std::sqrt(v / (S - 1.0));
  }
  return out;
}

}  // namespace dinozaur::bayes
