#pragma once

#include <span>
#include <string>
#include <vector>

#include "dinozaur/autodiff.hpp"
#include "dinozaur/rng.hpp"

namespace dinozaur::nn {

// Scalar activations. GELU is the exact-erf form x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);
double tanh_derivative(double x);

/// Pointwise channel map y(p) = W x(p) with W stored row-major out x in.
Var linear(Var x, Var weight, int out_channels);
/// y(p) = W x(p) + b.
Var affine(Var x, Var weight, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var x, double factor);
Var gelu(Var x);
Var tanh(Var x);
Var exp(Var x);
/// Stacks channels of a (first) and b (second) at every point.
Var concat_channels(Var a, Var b);
/// Sum of all values, as a scalar.
Var sum(Var x);
/// Mean over points and channels of (pred - target)^2.
Var mse(Var pred, const Field& target);

/// Registers an out x in affine layer as "<prefix>.w" and "<prefix>.b".
/// Weights are uniform in +-sqrt(6 / (in + out)); biases are zero.
void init_affine(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng);
/// Glorot-uniform fill of an existing entry.
void glorot_uniform(Parameter& p, int fan_in, int fan_out, Rng& rng);

}  // namespace dinozaur::nn
