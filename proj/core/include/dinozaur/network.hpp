#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dinozaur/autodiff.hpp"
#include "dinozaur/operator.hpp"
#include "dinozaur/rng.hpp"
#include "dinozaur/spectral.hpp"

namespace dinozaur::op {

enum class BlockKind { Diffusion, DiffusionNoGrad, Fno };

std::string to_string(BlockKind kind);
/// Accepts "diffusion", "diffusion-no-grad" and "fno"; throws ConfigError otherwise.
BlockKind parse_block_kind(const std::string& name);

/// Shape of a full operator network: lifting P, `blocks` operator blocks and
/// projection Q, with optional zero padding around the block stack.
struct NetworkSpec {
  std::vector<int> n;        // grid extents
  std::vector<int> kmax;     // per-dimension mode truncation
  int width = 32;            // d_c
  int blocks = 4;            // M
  int in_channels = 1;       // d_a
  int out_channels = 1;      // d_u
  std::vector<int> padding;  // points added on each side, per dimension (empty = none)
  BlockKind kind = BlockKind::Diffusion;
  int lift_hidden = 0;  // 0 selects width
  int proj_hidden = 0;  // 0 selects 2 * width
  Activation block_activation = Activation::Gelu;
  /// Appends sin(2 pi x_j) and cos(2 pi x_j) channels to the input before lifting.
  bool positional = false;

  int dim() const { return static_cast<int>(n.size()); }
  /// Channels seen by the lifting network: d_a plus 2d when positional.
  int lift_in_channels() const { return in_channels + (positional ? 2 * dim() : 0); }
  int lift_hidden_width() const { return lift_hidden > 0 ? lift_hidden : width; }
  int proj_hidden_width() const { return proj_hidden > 0 ? proj_hidden : 2 * width; }
  std::vector<int> padding_or_zero() const;
  std::vector<int> padded_extents() const;
  ModeSet modes() const { return ModeSet(kmax); }
  /// Throws ConfigError on inconsistent shapes.
  void validate() const;

  bool operator==(const NetworkSpec&) const = default;
};

/// Exact parameter accounting.
struct ParamCount {
  std::size_t lifting = 0;
  std::size_t projection = 0;
  /// Per-block tensor sizes by tensor name (w_skip, bias, w_grad, w_mix, log_tau, weights).
  std::map<std::string, std::size_t> block_tensors;
  std::size_t per_block = 0;
  /// Spectral multiplier parameters per block: d_c times or 2 d_c^2 |modes|.
  std::size_t multiplier_per_block = 0;
  std::size_t retained_modes = 0;
  std::size_t block_stack = 0;
  std::size_t total = 0;
};
ParamCount count_params(const NetworkSpec& spec);

std::string block_param(int block, const std::string& tensor);

/// Registers and initializes every network tensor. Affine weights are
/// Glorot-uniform, biases zero, ln tau ~ N(ln 0.01, 0.5^2), FNO weights
/// uniform in +-1/(d_c^2).
void init_params(const NetworkSpec& spec, nn::ParamStore& store, Rng& rng);

/// Records P, the block stack and Q on the tape. When `tau` is non-empty it
/// supplies the diffusion times of each block; otherwise they are read from
/// block.<i>.log_tau.
Var network_forward(nn::Tape& tape, const NetworkSpec& spec, const nn::ParamStore& store, Var input,
                    std::span<const Var> tau = {});

/// sin(2 pi x_j), cos(2 pi x_j) for each dimension j, as 2d channels.
Field positional_embedding(const std::vector<int>& extents);

/// Value-only forward pass. `log_tau`, when non-empty, overrides the stored times.
Field network_predict(const NetworkSpec& spec, const nn::ParamStore& store, const Field& input,
                      std::span<const std::vector<double>> log_tau = {});

}  // namespace dinozaur::op
