#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dinozaur/autodiff.hpp"
#include "dinozaur/bayes.hpp"
#include "dinozaur/data.hpp"
#include "dinozaur/network.hpp"
#include "dinozaur/optim.hpp"

namespace dinozaur::cli {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Everything needed to resume or evaluate a run.
///
/// Byte layout: "DZCK", u32 version, u64 manifest length, manifest JSON
/// (spec, names, shapes, offsets, metadata), then the concatenated
/// little-endian f64 blobs of every parameter followed by the optimizer
/// moments when present. Offsets count doubles from the start of the blob area.
struct Checkpoint {
  op::NetworkSpec spec;
  bool bayesian = false;
  bayes::TimePrior prior;
  nn::ParamStore params;
  std::optional<nn::OptimizerState> optimizer;
  data::StandardScaler input_scaler;
  data::StandardScaler target_scaler;
  std::string rng_state;
  int epoch = 0;
  std::vector<double> loss_history;
};

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);
void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dinozaur::cli
