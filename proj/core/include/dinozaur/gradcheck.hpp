#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "dinozaur/autodiff.hpp"

namespace dinozaur::nn {

struct GradcheckOptions {
  /// Relative step; coordinate theta is perturbed by h * max(1, |theta|).
  double h = 1e-5;
  double tolerance = 1e-5;
  /// Denominator floor, multiplied by max(1, |loss|): coordinates whose
  /// gradients are both smaller are effectively compared in absolute terms.
  double floor = 1e-4;
  /// Only parameters whose name starts with one of these prefixes (all if empty).
  std::vector<std::string> prefixes;
};

struct GradcheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coordinates = 0;
  bool passed = true;
};

/// Loss evaluation callback. With accumulate == true it must add d(loss)/d(theta)
/// into the store's gradients; with false it only returns the loss value.
using LossFunction = std::function<double(ParamStore&, bool accumulate)>;

/// Compares backprop gradients against central differences for every
/// selected parameter coordinate. The store's values are restored afterwards.
GradcheckReport gradcheck(ParamStore& store, const LossFunction& loss, const GradcheckOptions& options = {});

}  // namespace dinozaur::nn
