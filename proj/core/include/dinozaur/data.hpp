#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dinozaur/field.hpp"
#include "dinozaur/spectral.hpp"

namespace dinozaur::data {

/// Gaussian random field with power-law spectrum amplitude * (1 + s(k))^(-alpha/2).
struct RandomFieldSpec {
  double alpha = 2.0;
  int kmax = 0;  // per-dimension cut; 0 selects n/4
  double amplitude = 1.0;
  std::uint64_t seed = 0;
  bool zero_mean = false;

  void validate() const;
};

/// Coefficients (re and im independently N(0, 1), drawn mode-major with
/// channels fastest) are scaled by the spectrum and inverse-transformed.
Field sample_random_field(const RandomFieldSpec& spec, const spectral::Grid& grid, int channels = 1);

enum class TaskKind { Heat, ScreenedPoisson, DarcyLite };
std::string to_string(TaskKind kind);
TaskKind parse_task_kind(const std::string& name);
/// 1 for heat and screened-poisson, 2 for darcy-lite.
int default_dimension(TaskKind kind);

struct OperatorTask {
  TaskKind kind = TaskKind::Heat;
  std::vector<int> n{64};
  double horizon = 0.01;  // heat: final time T
  double forcing = 1.0;   // darcy-lite: amplitude of the right-hand side f
  /// darcy-lite right-hand side shape: "sinusoidal" gives
  /// f = forcing * sum_j sin(2 pi x_j); "constant" gives f = forcing, whose
  /// solution is u = forcing for every coefficient.
  std::string forcing_profile = "sinusoidal";
  RandomFieldSpec field;  // seed is ignored; samples use sub-streams of `seed`
  int n_train = 256;
  int n_test = 64;
  std::uint64_t seed = 0;
  double cg_tolerance = 5e-11;
  int cg_max_iterations = 0;  // 0 selects 50 * max_j n_j

  void validate() const;
};

struct Sample {
  Field input;
  Field target;
  /// Oracle residual of the target: 0 for closed-form targets, the certified
  /// relative residual ||f - A u|| / ||f|| for darcy-lite.
  double residual = 0.0;
};

enum class Split : std::uint64_t { Train = 0, Test = 1 };

struct Dataset {
  OperatorTask task;
  std::vector<Sample> train;
  std::vector<Sample> test;
  double max_residual() const;
};

/// Exact heat flow of v0 over time T >= 0.
Field heat_target(const Field& v0, double horizon);

/// Solution of (I - Delta) u = a; modes outside the retained set pass through unchanged.
Field screened_poisson_solve(const Field& a);

/// A u = u - sum_j D_j (a D_j u) with spectral derivatives D_j.
Field darcy_apply(const Field& a, const Field& u);

struct CgResult {
  Field u;
  int iterations = 0;
  double relative_residual = 0.0;  // recomputed from the returned u
};

/// Preconditioned conjugate gradients for darcy_apply(a, u) = f. Throws
/// NumericError when `max_iterations` pass without reaching `tolerance`.
CgResult darcy_solve(const Field& a, const Field& f, double tolerance, int max_iterations);

/// Defaults per task: heat and screened-poisson on a 64-point 1D grid with
/// unit field amplitude; darcy-lite on a 32x32 grid with log-coefficient
/// amplitude 0.5 (pointwise std of ln a near 1, max a / min a up to ~3e3).
OperatorTask default_task(TaskKind kind);

/// Fixed darcy-lite right-hand side on the task grid.
Field darcy_forcing(const OperatorTask& task);

/// Sample `index` of a split, generated from Rng::derive(Rng::derive(seed, split), index).
Sample generate_sample(const OperatorTask& task, Split split, int index);
Dataset generate(const OperatorTask& task);

/// Per-channel standardization z = (x - mean) / std with population std.
/// Channels with zero spread are flagged constant and passed through.
struct StandardScaler {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> constant;

  static StandardScaler fit(std::span<const Field> fields);
  int channels() const { return static_cast<int>(mean.size()); }
  Field apply(const Field& x) const;
  Field invert(const Field& z) const;
  /// Maps a standard deviation in scaled units back to data units.
  Field invert_spread(const Field& s) const;
};

std::vector<Field> inputs_of(std::span<const Sample> samples);
std::vector<Field> targets_of(std::span<const Sample> samples);

}  // namespace dinozaur::data
