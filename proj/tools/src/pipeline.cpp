#include "dinozaur/cli/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "dinozaur/bayes.hpp"
#include "dinozaur/errors.hpp"
#include "dinozaur/nn.hpp"

namespace dinozaur::cli {

namespace fs = std::filesystem;

namespace {

// Rng sub-streams of the run seed.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kTrainStream = 2;

std::vector<Field> scaled(const std::vector<data::Sample>& samples, const data::StandardScaler& s, bool input) {
  std::vector<Field> out;
  out.reserve(samples.size());
  for (const auto& x : samples) out.push_back(s.apply(input ? x.input : x.target));
  return out;
}

std::vector<std::vector<double>> posterior_mean_times(const Checkpoint& ck) {
  std::vector<std::vector<double>> out;
  if (!ck.bayesian) return out;
  for (int i = 0; i < ck.spec.blocks; ++i) out.push_back(ck.params.at(bayes::mean_param(i)).value);
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::string log_header(bool bayesian) {
  return bayesian ? "epoch,train_loss,test_rl2,lr,elbo,kl,sigma2" : "epoch,train_loss,test_rl2,lr";
}

std::string log_row(const EpochLog& r, bool bayesian) {
  std::string s = std::to_string(r.epoch) + "," + fmt(r.train_loss) + "," + fmt(r.test_rl2) + "," + fmt(r.lr);
  if (bayesian) s += "," + fmt(r.elbo) + "," + fmt(r.kl) + "," + fmt(r.sigma2);
  return s;
}

Checkpoint initial_checkpoint(const RunConfig& config, const io::Archive& archive) {
  const auto& train = archive.dataset.train;
  if (train.empty()) throw ConfigError("train: the dataset has no training samples");
  Checkpoint ck;
  ck.spec = make_spec(config.network, train.front().input.extents(), train.front().input.channels(),
                      train.front().target.channels(), archive.dataset.task.kind);
  if (ck.spec.n != archive.dataset.task.n) throw ConfigError("train: network grid does not match the dataset");
  Rng init(Rng::derive(config.seed, kInitStream));
  op::init_params(ck.spec, ck.params, init);
  ck.bayesian = config.bayes.enabled;
  ck.prior = make_prior(config.bayes);
  if (ck.bayesian)
    bayes::make_bayesian(ck.spec, ck.params, make_posterior_init(config.bayes), config.bayes.init_log_noise_var);
  ck.input_scaler = archive.input_scaler;
  ck.target_scaler = archive.target_scaler;
  ck.rng_state = Rng(Rng::derive(config.seed, kTrainStream)).state();
  return ck;
}

double test_rl2(const Checkpoint& ck, const io::Archive& archive) {
  const auto& test = archive.dataset.test;
  if (test.empty()) return std::numeric_limits<double>::quiet_NaN();
  const auto times = posterior_mean_times(ck);
  metrics::PredictionSet set;
  for (const auto& s : test) {
    const Field pred = op::network_predict(ck.spec, ck.params, ck.input_scaler.apply(s.input), times);
    set.truth.push_back(s.target);
    set.mean.push_back(ck.target_scaler.invert(pred));
  }
  return metrics::rl2(set);
}

TrainOutcome train(const RunConfig& config, const io::Archive& archive, const fs::path& out_dir,
                   std::ostream* progress) {
  config.validate();
  TrainOutcome result;
  Checkpoint ck = initial_checkpoint(config, archive);
  const bool bayesian = ck.bayesian;

  const auto inputs = scaled(archive.dataset.train, ck.input_scaler, true);
  const auto targets = scaled(archive.dataset.train, ck.target_scaler, false);
  const std::size_t N = inputs.size();
  const std::size_t B = std::min<std::size_t>(static_cast<std::size_t>(config.optim.batch), N);
  const std::size_t batches = (N + B - 1) / B;
  const std::uint64_t total_steps = static_cast<std::uint64_t>(config.optim.epochs) * batches;
  const double points = static_cast<double>(targets.front().size());

  nn::OptimizerState opt;
  opt.config.lr = config.optim.lr;
  opt.config.weight_decay = config.optim.weight_decay;
  Rng rng;
  rng.set_state(ck.rng_state);

  std::ofstream log;
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    log.open(out_dir / "log.csv", std::ios::trunc);
    log << log_header(bayesian) << '\n';
  }

  Checkpoint last_good = ck;
  result.best = ck;
  result.best_rl2 = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(N);
  std::vector<Field> batch_in, batch_out;

  for (int epoch = 1; epoch <= config.optim.epochs; ++epoch) {
    EpochLog row;
    row.epoch = epoch;
    try {
      for (std::size_t i = 0; i < N; ++i) order[i] = i;
      for (std::size_t i = N; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

      double loss_sum = 0.0, elbo_sum = 0.0;
      for (std::size_t b = 0; b < batches; ++b) {
        const std::size_t lo = b * B, hi = std::min(N, lo + B);
        const double lr = config.optim.schedule == "one-cycle"
                              ? nn::one_cycle_lr(opt.step, total_steps, config.optim.lr)
                              : config.optim.lr;
        row.lr = lr;
        if (bayesian) {
          batch_in.clear();
          batch_out.clear();
          for (std::size_t k = lo; k < hi; ++k) {
            batch_in.push_back(inputs[order[k]]);
            batch_out.push_back(targets[order[k]]);
          }
          const auto eps = bayes::draw_standard_normal(ck.spec.blocks, ck.spec.width, rng);
          const auto terms = bayes::elbo(ck.spec, ck.params, batch_in, batch_out, N, eps, ck.prior, true);
          elbo_sum += terms.elbo;
          loss_sum += -terms.elbo / (static_cast<double>(N) * points);
        } else {
          const double w = 1.0 / static_cast<double>(hi - lo);
          double batch_loss = 0.0;
          for (std::size_t k = lo; k < hi; ++k) {
            nn::Tape tape;
            nn::Var pred = op::network_forward(tape, ck.spec, ck.params, tape.constant(inputs[order[k]]));
            nn::Var loss = nn::mse(pred, targets[order[k]]);
            batch_loss += w * loss.value()[0];
            tape.backward(loss, ck.params, w);
          }
          loss_sum += batch_loss;
        }
        nn::adamw_step(ck.params, opt, lr);
        if (!ck.params.all_finite()) throw NumericError("train: parameters became non-finite");
      }
      row.train_loss = loss_sum / static_cast<double>(batches);
      if (bayesian) {
        row.elbo = elbo_sum / static_cast<double>(batches);
        row.kl = bayes::kl_divergence(ck.params, ck.spec.blocks, ck.prior);
        row.sigma2 = std::exp(ck.params.at(bayes::kNoiseParam).value[0]);
      }
      row.test_rl2 = test_rl2(ck, archive);
    } catch (const NumericError& e) {
      if (!out_dir.empty()) save_checkpoint((out_dir / "last_good.dzck").string(), last_good);
      throw NumericError("train: epoch " + std::to_string(epoch) + " aborted (" + e.what() +
                         "); last good state kept from epoch " + std::to_string(last_good.epoch));
    }

    ck.epoch = epoch;
    ck.loss_history.push_back(row.train_loss);
    ck.optimizer = opt;
    ck.rng_state = rng.state();
    last_good = ck;
    result.log.push_back(row);
    const double score = std::isnan(row.test_rl2) ? row.train_loss : row.test_rl2;
    if (score < result.best_rl2) {
      result.best_rl2 = score;
      result.best = ck;
      if (!out_dir.empty()) save_checkpoint((out_dir / "best.dzck").string(), ck);
    }
    if (log.is_open()) log << log_row(row, bayesian) << '\n' << std::flush;
    if (progress) *progress << log_row(row, bayesian) << '\n' << std::flush;
  }

  ck.optimizer = opt;
  result.final_state = ck;
  if (config.optim.epochs == 0) result.best = ck;
  if (!out_dir.empty()) {
    save_checkpoint((out_dir / "final.dzck").string(), ck);
    if (config.optim.epochs == 0) save_checkpoint((out_dir / "best.dzck").string(), ck);
  }
  return result;
}

metrics::PredictionSet predict_test(const Checkpoint& ck, const io::Archive& archive, int samples,
                                    std::uint64_t seed) {
  const auto& test = archive.dataset.test;
  if (test.empty()) throw ConfigError("eval: the dataset has no test samples");
  if (test.front().input.extents() != ck.spec.n || test.front().input.channels() != ck.spec.in_channels ||
      test.front().target.channels() != ck.spec.out_channels)
    throw ConfigError("eval: checkpoint spec does not match the dataset");
  metrics::PredictionSet set;
  for (std::size_t n = 0; n < test.size(); ++n) {
    const Field x = ck.input_scaler.apply(test[n].input);
    set.truth.push_back(test[n].target);
    if (!ck.bayesian) {
      set.mean.push_back(ck.target_scaler.invert(op::network_predict(ck.spec, ck.params, x)));
      continue;
    }
    bayes::PredictiveOptions opts;
    opts.samples = samples;
    opts.seed = Rng::derive(seed, n);
    const auto pred = bayes::posterior_predictive(ck.spec, ck.params, x, opts);
    set.mean.push_back(ck.target_scaler.invert(pred.mean));
    Field sd = ck.target_scaler.invert_spread(pred.stddev);
    for (double& v : sd.data()) v = std::max(v, kStdFloor);
    set.stddev.push_back(std::move(sd));
  }
  return set;
}

metrics::MetricReport evaluate(const Checkpoint& ck, const io::Archive& archive, int samples, std::uint64_t seed) {
  return metrics::evaluate(predict_test(ck, archive, samples, seed));
}

void write_samples(const Checkpoint& ck, const io::Archive& archive, int samples, std::uint64_t seed,
                   const fs::path& out_dir) {
  const auto& test = archive.dataset.test;
  if (test.empty()) throw ConfigError("sample: the dataset has no test samples");
  fs::create_directories(out_dir);
  for (std::size_t n = 0; n < test.size(); ++n) {
    bayes::PredictiveOptions opts;
    opts.samples = samples;
    opts.seed = Rng::derive(seed, n);
    const auto pred = bayes::posterior_predictive(ck.spec, ck.params, ck.input_scaler.apply(test[n].input), opts);
    char dir[32];
    std::snprintf(dir, sizeof dir, "test_%06zu", n);
    for (int s = 0; s < samples; ++s) {
      char name[32];
      std::snprintf(name, sizeof name, "sample_%04d.dzf", s);
      io::write_dzf(out_dir / dir / name, ck.target_scaler.invert(pred.samples[s]));
    }
    io::write_dzf(out_dir / dir / "mean.dzf", ck.target_scaler.invert(pred.mean));
    io::write_dzf(out_dir / dir / "std.dzf", ck.target_scaler.invert_spread(pred.stddev));
  }

  const auto summary = bayes::summarize_posterior(ck.params, ck.spec.blocks);
  auto table = [](const std::vector<std::vector<double>>& rows) {
    std::ostringstream os;
    os.precision(17);
    for (const auto& r : rows) {
      for (std::size_t c = 0; c < r.size(); ++c) os << (c ? "," : "") << r[c];
      os << '\n';
    }
    return os.str();
  };
  io::write_file(out_dir / "tau_log_mean.csv", table(summary.log_tau_mean));
  io::write_file(out_dir / "tau_log_std.csv", table(summary.log_tau_std));
}

op::NetworkSpec tiny_spec(op::BlockKind kind) {
  op::NetworkSpec s;
  s.n = {16};
  s.kmax = {4};
  s.width = 4;
  s.blocks = 2;
  s.kind = kind;
  return s;
}

nn::GradcheckReport gradcheck_model(const GradcheckSetup& setup, const nn::GradcheckOptions& options) {
  const op::NetworkSpec& spec = setup.spec;
  spec.validate();
  Rng rng(Rng::derive(setup.seed, kInitStream));
  nn::ParamStore store;
  op::init_params(spec, store, rng);
  if (setup.bayesian) bayes::make_bayesian(spec, store);

  const spectral::Grid grid(spec.n);
  std::vector<Field> inputs, targets;
  for (int b = 0; b < setup.batch; ++b) {
    data::RandomFieldSpec f;
    f.seed = Rng::derive(setup.seed, 100 + 2 * b);
    inputs.push_back(data::sample_random_field(f, grid, spec.in_channels));
    f.seed = Rng::derive(setup.seed, 101 + 2 * b);
    targets.push_back(data::sample_random_field(f, grid, spec.out_channels));
  }
  Rng eps_rng(Rng::derive(setup.seed, kTrainStream));
  const auto eps = bayes::draw_standard_normal(spec.blocks, spec.width, eps_rng);
  const bayes::TimePrior prior;

  nn::LossFunction loss = [&](nn::ParamStore& ps, bool accumulate) {
    if (setup.bayesian)
      return -bayes::elbo(spec, ps, inputs, targets, inputs.size(), eps, prior, accumulate).elbo;
    double total = 0.0;
    for (std::size_t b = 0; b < inputs.size(); ++b) {
      nn::Tape tape(accumulate);
      nn::Var l = nn::mse(op::network_forward(tape, spec, ps, tape.constant(inputs[b])), targets[b]);
      total += l.value()[0];
      if (accumulate) tape.backward(l, ps);
    }
    return total;
  };
  return nn::gradcheck(store, loss, options);
}

}  // namespace dinozaur::cli
