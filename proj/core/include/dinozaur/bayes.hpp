#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dinozaur/autodiff.hpp"
#include "dinozaur/network.hpp"
#include "dinozaur/rng.hpp"

namespace dinozaur::bayes {

using nn::Var;

/// Log-normal prior over diffusion times: ln tau ~ N(mean, stddev^2), shared by all blocks and channels.
struct TimePrior {
  double mean = std::log(0.01);
  double stddev = 1.0;
};

/// Initial variational factor N(mean * 1, (stddev I)^2) for every block.
struct PosteriorInit {
  double mean = -5.0;
  double stddev = 0.5;
};

// Store layout of the variational parameters. The Cholesky factor of block i
// is packed lower-triangular row by row (entry (r, c) at r(r+1)/2 + c) with
// the diagonal stored as its logarithm.
std::string mean_param(int block);
std::string chol_param(int block);
inline const std::string kNoiseParam = "noise.log_var";
std::size_t packed_index(int row, int col);

/// Replaces block.<i>.log_tau by the variational factors and adds ln sigma^2.
void make_bayesian(const op::NetworkSpec& spec, nn::ParamStore& store, const PosteriorInit& init = {},
                   double log_noise_var = -4.0);
bool is_bayesian(const nn::ParamStore& store);

/// Dense row-major Cholesky factor L_i.
std::vector<double> cholesky_factor(const nn::ParamStore& store, int block);
/// Sigma_i = L_i L_i^T, row-major.
std::vector<double> covariance(const nn::ParamStore& store, int block);

/// Posterior mean and marginal standard deviation of ln tau, per block and channel.
struct PosteriorSummary {
  std::vector<std::vector<double>> log_tau_mean;
  std::vector<std::vector<double>> log_tau_std;
};
PosteriorSummary summarize_posterior(const nn::ParamStore& store, int blocks);

/// Standard normal draws, one vector of `width` per block.
std::vector<std::vector<double>> draw_standard_normal(int blocks, int width, Rng& rng);

/// Reparametrized sample ln tau_i = mu_i + L_i eps (differentiable in mu_i and L_i).
Var sample_log_times(nn::Tape& tape, const nn::ParamStore& store, int block, std::span<const double> eps);
std::vector<double> sample_log_times(const nn::ParamStore& store, int block, std::span<const double> eps);

/// KL(q || p) summed over blocks, in closed form.
Var kl_divergence(nn::Tape& tape, const nn::ParamStore& store, int blocks, const TimePrior& prior);
double kl_divergence(const nn::ParamStore& store, int blocks, const TimePrior& prior);

/// sum over points of -1/2 ln(2 pi sigma^2) - (u - u_hat)^2 / (2 sigma^2).
Var gaussian_log_likelihood(Var prediction, const Field& target, Var log_noise_var);

struct ElboTerms {
  double elbo = 0.0;
  double expected_log_likelihood = 0.0;  // already scaled by N / B
  double kl = 0.0;
  double noise_var = 0.0;
};

/// Single-sample minibatch ELBO
///   (N / B) sum_batch sum_points log N(u; u_hat(tau), sigma^2) - KL(q || p),
/// with ln tau_i = mu_i + L_i eps_i shared by the whole batch. With
/// `accumulate`, d(-ELBO)/d(theta, phi, ln sigma^2) is added to the store.
ElboTerms elbo(const op::NetworkSpec& spec, nn::ParamStore& store, std::span<const Field> inputs,
               std::span<const Field> targets, std::size_t dataset_size,
               const std::vector<std::vector<double>>& eps, const TimePrior& prior, bool accumulate);

struct PredictiveOptions {
  int samples = 100;
  std::uint64_t seed = 0;
  /// Adds N(0, sigma^2) to each sample when the store carries a noise model.
  bool aleatoric = true;
};

struct Predictive {
  std::vector<Field> samples;
  Field mean;
  Field stddev;  // unbiased across samples; zero for a single sample
};

/// Posterior-predictive samples for one input. Sample s draws its times and
/// noise from Rng(Rng::derive(seed, s)). Deterministic stores (no variational
/// factors) reuse their stored times and add no noise.
Predictive posterior_predictive(const op::NetworkSpec& spec, const nn::ParamStore& store, const Field& input,
                                const PredictiveOptions& options);

}  // namespace dinozaur::bayes
