#pragma once

#include <span>
#include <vector>

#include "dinozaur/autodiff.hpp"
#include "dinozaur/spectral.hpp"

namespace dinozaur::op {

using nn::Var;
using spectral::ModeSet;

enum class Activation { Gelu, Identity };

/// Diffusion branch I_tau[v] = F^-1[exp(-4 pi^2 |k|^2 tau_c) F[v]] on the
/// truncated mode set. `tau` holds one nonnegative time per channel.
Var diffusion(Var v, Var tau, const ModeSet& modes);

/// Gradient features: channel c is tanh(sum_r <grad v^c, w_grad[c,r] grad v^r>)
/// with spectral gradients on `modes`. `w_grad` is d_c x d_c row-major.
Var gradient_features(Var v, Var w_grad, const ModeSet& modes);

/// Dense FNO multiplier: Y(k, o) = sum_i R(k, o, i) V(k, i) with R stored as
/// modes x out x in x {re, im}.
Var fno_multiplier(Var v, Var weights, int out_channels, const ModeSet& modes);

/// Zero padding by p_j points on both sides of dimension j, and its inverse.
Var pad(Var v, std::span<const int> p);
Var crop(Var v, std::span<const int> p);
Field pad_field(const Field& f, std::span<const int> p);
Field crop_field(const Field& f, std::span<const int> p);

struct DinozaurBlockVars {
  Var w_skip;
  Var bias;
  Var w_grad;  // invalid Var disables gradient features
  Var w_mix;
  Var tau;
};

/// act(W_skip v + b + W_mix [I_tau[v]; G(I_tau[v])]). `index` labels errors.
Var dinozaur_block(Var v, const DinozaurBlockVars& block, const ModeSet& modes,
                   Activation activation = Activation::Gelu, int index = 0);

struct FnoBlockVars {
  Var w_skip;
  Var bias;
  Var weights;
};

/// act(W_skip v + b + F^-1[R F[v]]).
Var fno_block(Var v, const FnoBlockVars& block, const ModeSet& modes, Activation activation = Activation::Gelu,
              int index = 0);

/// Test hook for negative controls: perturbs a chosen adjoint.
enum class AdjointFault { None, DiffusionTime };
void set_adjoint_fault(AdjointFault fault);
AdjointFault adjoint_fault();

}  // namespace dinozaur::op
