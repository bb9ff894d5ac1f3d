#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "dinozaur/data.hpp"
#include "dinozaur/errors.hpp"
#include "dinozaur/rng.hpp"

namespace dinozaur::data {

using spectral::Complex;
using spectral::Grid;
using spectral::ModeSet;
using spectral::SpectralField;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kResidualLimit = 1e-10;

double dot(const Field& a, const Field& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void require_scalar(const Field& f, const char* what) {
  if (f.channels() != 1) throw ShapeError(std::string(what) + ": expected a single-channel field");
}

// (1 + 4 pi^2 s(k))^-1 on the retained modes, identity on the rest.
// Inverse of I - abar Delta, with abar the geometric mean of the coefficient.
Field precondition(const Field& r, double abar, const ModeSet& modes, const Grid& grid) {
  SpectralField R = spectral::forward_fft(r, modes);
  for (std::size_t m = 0; m < modes.size(); ++m) R.at(m, 0) /= 1.0 + abar * kTwoPi * kTwoPi * modes.squared_norm(m);
  Field out = spectral::inverse_fft(R, grid);
  const Field rest = spectral::unretained_part(r, modes);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += rest[i];
  return out;
}

}  // namespace

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Heat:
      return "heat";
    case TaskKind::ScreenedPoisson:
      return "screened-poisson";
    case TaskKind::DarcyLite:
      return "darcy-lite";
  }
  return "heat";
}

TaskKind parse_task_kind(const std::string& name) {
  if (name == "heat") return TaskKind::Heat;
  if (name == "screened-poisson") return TaskKind::ScreenedPoisson;
  if (name == "darcy-lite") return TaskKind::DarcyLite;
  throw ConfigError("unknown task '" + name + "' (expected heat, screened-poisson or darcy-lite)");
}

int default_dimension(TaskKind kind) { return kind == TaskKind::DarcyLite ? 2 : 1; }

OperatorTask default_task(TaskKind kind) {
  OperatorTask t;
  t.kind = kind;
  if (kind == TaskKind::DarcyLite) {
    t.n = {32, 32};
    t.field.amplitude = 0.5;
  }
  return t;
}

void OperatorTask::validate() const {
  const Grid grid(n);
  (void)grid;
  field.validate();
  if (kind == TaskKind::Heat && !(horizon >= 0.0)) throw DomainError("heat task: horizon must be >= 0");
  if (!std::isfinite(forcing)) throw ConfigError("darcy-lite task: forcing must be finite");
  if (forcing_profile != "sinusoidal" && forcing_profile != "constant")
    throw ConfigError("darcy-lite task: forcing profile must be sinusoidal or constant");
  if (n_train < 0 || n_test < 0) throw ConfigError("task: sample counts must be >= 0");
  if (!(cg_tolerance > 0.0)) throw ConfigError("task: cg tolerance must be positive");
}

double Dataset::max_residual() const {
  double r = 0.0;
  for (const auto* split : {&train, &test})
    for (const Sample& s : *split) r = std::max(r, s.residual);
  return r;
}

Field heat_target(const Field& v0, double horizon) {
  if (horizon < 0.0) throw DomainError("heat_target: horizon must be >= 0");
  const Grid grid(v0.extents());
  const ModeSet modes = ModeSet::full(grid);
  const std::vector<double> tau(v0.channels(), horizon);
  Field out = spectral::inverse_fft(spectral::diffuse(spectral::forward_fft(v0, modes), tau), grid);
  // Nyquist content has s >= (n_min / 2)^2; its decay uses that bound, which
  // is exact in 1D. Generated fields carry no such content.
  const Field rest = spectral::unretained_part(v0, modes);
  const int nmin = *std::min_element(v0.extents().begin(), v0.extents().end());
  const double decay = std::exp(-std::numbers::pi * std::numbers::pi * nmin * nmin * horizon);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += decay * rest[i];
  return out;
}

Field screened_poisson_solve(const Field& a) {
  const Grid grid(a.extents());
  const ModeSet modes = ModeSet::full(grid);
  SpectralField A = spectral::forward_fft(a, modes);
  for (std::size_t m = 0; m < modes.size(); ++m)
    for (int c = 0; c < a.channels(); ++c) A.at(m, c) /= 1.0 + kTwoPi * kTwoPi * modes.squared_norm(m);
  Field out = spectral::inverse_fft(A, grid);
  const Field rest = spectral::unretained_part(a, modes);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += rest[i];
  return out;
}

Field darcy_apply(const Field& a, const Field& u) {
  require_scalar(a, "darcy_apply");
  require_scalar(u, "darcy_apply");
  if (!a.same_shape(u)) throw ShapeError("darcy_apply: coefficient and state differ in shape");
  const Grid grid(u.extents());
  const ModeSet modes = ModeSet::full(grid);
  const int d = grid.dim();

  Field flux = spectral::spectral_gradient(spectral::forward_fft(u, modes), grid);
  for (std::size_t p = 0; p < flux.points(); ++p)
    for (int j = 0; j < d; ++j) flux.at(p, j) *= a[p];

  const SpectralField F = spectral::forward_fft(flux, modes);
  SpectralField div(modes, 1);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    Complex s = 0.0;
    for (int j = 0; j < d; ++j) s += Complex(0.0, kTwoPi * modes.wavenumber(m, j)) * F.at(m, j);
    div.at(m, 0) = s;
  }
  Field out = spectral::inverse_fft(div, grid);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = u[i] - out[i];
  return out;
}

CgResult darcy_solve(const Field& a, const Field& f, double tolerance, int max_iterations) {
  require_scalar(f, "darcy_solve");
  for (double v : a.data())
    if (!(v > 0.0)) throw DomainError("darcy_solve: coefficient must be positive");
  const Grid grid(f.extents());
  const ModeSet modes = ModeSet::full(grid);
  const double fnorm = std::sqrt(dot(f, f));
  double log_sum = 0.0;
  for (double v : a.data()) log_sum += std::log(v);
  const double abar = std::exp(log_sum / static_cast<double>(a.size()));

  CgResult res;
  res.u = Field(f.extents(), 1);
  if (fnorm == 0.0) return res;

  Field r = f;
  Field z = precondition(r, abar, modes, grid);
  Field p = z;
  double rz = dot(r, z);
  while (std::sqrt(dot(r, r)) / fnorm > tolerance) {
    if (res.iterations >= max_iterations) {
      double amin = a[0], amax = a[0];
      for (double v : a.data()) amin = std::min(amin, v), amax = std::max(amax, v);
      std::ostringstream os;
      os << "darcy_solve: no convergence in " << max_iterations << " iterations (relative residual "
         << std::sqrt(dot(r, r)) / fnorm << ", coefficient range [" << amin << ", " << amax << "])";
      throw NumericError(os.str());
    }
    const Field Ap = darcy_apply(a, p);
    const double alpha = rz / dot(p, Ap);
    for (std::size_t i = 0; i < r.size(); ++i) {
      res.u[i] += alpha * p[i];
      r[i] -= alpha * Ap[i];
    }
    z = precondition(r, abar, modes, grid);
    const double rz_next = dot(r, z);
    const double beta = rz_next / rz;
    rz = rz_next;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = z[i] + beta * p[i];
    ++res.iterations;
  }

  const Field Au = darcy_apply(a, res.u);
  double rr = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) rr += (f[i] - Au[i]) * (f[i] - Au[i]);
  res.relative_residual = std::sqrt(rr) / fnorm;
  return res;
}

Field darcy_forcing(const OperatorTask& task) {
  const Grid grid(task.n);
  Field f(task.n, 1);
  for (std::size_t p = 0; p < grid.points(); ++p) {
    double shape = 1.0;
    if (task.forcing_profile == "sinusoidal") {
      shape = 0.0;
      for (int j = 0; j < grid.dim(); ++j) shape += std::sin(kTwoPi * grid.coordinate(p, j));
    }
    f[p] = task.forcing * shape;
  }
  return f;
}

Sample generate_sample(const OperatorTask& task, Split split, int index) {
  const Grid grid(task.n);
  RandomFieldSpec spec = task.field;
  spec.seed = Rng::derive(Rng::derive(task.seed, static_cast<std::uint64_t>(split)), static_cast<std::uint64_t>(index));

  Sample s;
  switch (task.kind) {
    case TaskKind::Heat:
      s.input = sample_random_field(spec, grid);
      s.target = heat_target(s.input, task.horizon);
      break;
    case TaskKind::ScreenedPoisson:
      s.input = sample_random_field(spec, grid);
      s.target = screened_poisson_solve(s.input);
      break;
    case TaskKind::DarcyLite: {
      s.input = sample_random_field(spec, grid);
      for (double& v : s.input.data()) v = std::exp(v);
      const Field f = darcy_forcing(task);
      int max_it = task.cg_max_iterations;
      if (max_it <= 0) max_it = 50 * *std::max_element(task.n.begin(), task.n.end());
      CgResult cg = darcy_solve(s.input, f, task.cg_tolerance, max_it);
      if (cg.relative_residual > kResidualLimit) {
        std::ostringstream os;
        os << "darcy-lite sample " << index << ": certified residual " << cg.relative_residual << " exceeds "
           << kResidualLimit;
        throw NumericError(os.str());
      }
      s.target = std::move(cg.u);
      s.residual = cg.relative_residual;
      break;
    }
  }
  return s;
}

Dataset generate(const OperatorTask& task) {
  task.validate();
  Dataset ds;
  ds.task = task;
  for (int i = 0; i < task.n_train; ++i) ds.train.push_back(generate_sample(task, Split::Train, i));
  for (int i = 0; i < task.n_test; ++i) ds.test.push_back(generate_sample(task, Split::Test, i));
  return ds;
}

std::vector<Field> inputs_of(std::span<const Sample> samples) {
  std::vector<Field> out;
  for (const Sample& s : samples) out.push_back(s.input);
  return out;
}

std::vector<Field> targets_of(std::span<const Sample> samples) {
  std::vector<Field> out;
  for (const Sample& s : samples) out.push_back(s.target);
  return out;
}

}  // namespace dinozaur::data
