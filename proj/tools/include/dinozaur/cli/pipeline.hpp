#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dinozaur/cli/checkpoint.hpp"
#include "dinozaur/cli/config.hpp"
#include "dinozaur/gradcheck.hpp"
#include "dinozaur/io.hpp"
#include "dinozaur/metrics.hpp"

namespace dinozaur::cli {

/// One row of the training log.
struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;  // mean MSE, or -ELBO per data point when Bayesian
  double test_rl2 = 0.0;
  double lr = 0.0;
  double elbo = 0.0;  // Bayesian only
  double kl = 0.0;
  double sigma2 = 0.0;
};

std::string log_header(bool bayesian);
std::string log_row(const EpochLog& row, bool bayesian);

struct TrainOutcome {
  Checkpoint final_state;
  Checkpoint best;
  double best_rl2 = 0.0;
  std::vector<EpochLog> log;
};

/// Freshly initialized model for `config` shaped after the archive.
Checkpoint initial_checkpoint(const RunConfig& config, const io::Archive& archive);

/// Minibatch training on scaled data (MSE, or the ELBO with --bayes). When
/// `out_dir` is non-empty, log.csv, best.dzck and final.dzck are written there;
/// a non-finite loss writes last_good.dzck and rethrows.
TrainOutcome train(const RunConfig& config, const io::Archive& archive, const std::filesystem::path& out_dir,
                   std::ostream* progress = nullptr);

/// Relative L2 on the test split, using the posterior-mean times when Bayesian.
double test_rl2(const Checkpoint& ckpt, const io::Archive& archive);

/// Predictive std is floored here so that single-sample evaluation stays finite.
inline constexpr double kStdFloor = 1e-12;

/// Test-split predictions in data units. Bayesian checkpoints draw `samples`
/// posterior-predictive samples per element from Rng::derive(seed, element).
metrics::PredictionSet predict_test(const Checkpoint& ckpt, const io::Archive& archive, int samples,
                                    std::uint64_t seed);
metrics::MetricReport evaluate(const Checkpoint& ckpt, const io::Archive& archive, int samples, std::uint64_t seed);

/// Writes test_<n>/sample_<s>.dzf, mean.dzf and std.dzf per test element plus
/// tau_log_mean.csv and tau_log_std.csv (one row per block, one column per channel).
void write_samples(const Checkpoint& ckpt, const io::Archive& archive, int samples, std::uint64_t seed,
                   const std::filesystem::path& out_dir);

struct GradcheckSetup {
  op::NetworkSpec spec;
  bool bayesian = false;
  std::uint64_t seed = 0;
  int batch = 2;
};

/// d = 1, n = 16, kmax = 4, d_c = 4, M = 2.
op::NetworkSpec tiny_spec(op::BlockKind kind = op::BlockKind::Diffusion);

/// Finite-difference check of the full model on random data: the MSE loss, or
/// -ELBO at a fixed eps when Bayesian.
nn::GradcheckReport gradcheck_model(const GradcheckSetup& setup, const nn::GradcheckOptions& options = {});

}  // namespace dinozaur::cli
