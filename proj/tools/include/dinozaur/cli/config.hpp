#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dinozaur/bayes.hpp"
#include "dinozaur/data.hpp"
#include "dinozaur/network.hpp"

namespace dinozaur::cli {

struct NetworkConfig {
  int width = 32;
  int blocks = 4;
  std::vector<int> kmax;     // empty: n_j / 4 per dimension
  std::vector<int> padding;  // per side; empty: none
  std::string block = "diffusion";
  int lift_hidden = 0;
  int proj_hidden = 0;
  /// "auto" enables the embedding for darcy-lite, whose fixed forcing breaks translation invariance.
  std::string positional = "auto";  // auto | on | off
};

struct OptimConfig {
  double lr = 1e-2;
  int epochs = 100;
  int batch = 16;
  double weight_decay = 0.0;
  std::string schedule = "one-cycle";  // or "constant"
};

struct BayesConfig {
  bool enabled = false;
  double prior_mean = std::log(0.01);
  double prior_std = 1.0;
  double init_mean = -5.0;
  double init_std = 0.5;
  double init_log_noise_var = -4.0;
  int samples = 100;
};

/// Every knob of a run. Parsed from one JSON document; unknown keys are rejected.
struct RunConfig {
  data::OperatorTask task;
  NetworkConfig network;
  OptimConfig optim;
  BayesConfig bayes;
  std::uint64_t seed = 0;
  std::string out = "run";
  std::string data;        // dataset archive directory
  std::string checkpoint;  // checkpoint file for eval / sample

  /// Throws ConfigError on out-of-range values.
  void validate() const;
};

RunConfig parse_config(const std::string& json_text);
RunConfig load_config(const std::string& path);
std::string dump_config(const RunConfig& config);

/// Network shape for a dataset with grid `n` and the given channel counts.
op::NetworkSpec make_spec(const NetworkConfig& net, const std::vector<int>& n, int in_channels, int out_channels,
                          data::TaskKind task = data::TaskKind::Heat);
bayes::TimePrior make_prior(const BayesConfig& b);
bayes::PosteriorInit make_posterior_init(const BayesConfig& b);

/// "8,8,8" -> {8, 8, 8}.
std::vector<int> parse_int_list(const std::string& text);

}  // namespace dinozaur::cli
