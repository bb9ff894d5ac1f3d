#include "dinozaur/operator.hpp"

#include <cblas.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numbers>
#include <string>

#include "dinozaur/errors.hpp"
#include "dinozaur/nn.hpp"

namespace dinozaur::op {

using nn::Tape;
using spectral::Complex;
using spectral::Grid;
using spectral::SpectralField;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kFourPiSq = 4.0 * std::numbers::pi * std::numbers::pi;

std::atomic<AdjointFault> g_fault{AdjointFault::None};

// Visits every point of `inner` together with its row-major offset inside the
// padded extents.
template <typename F>
void for_each_padded(const std::vector<int>& inner, std::span<const int> p, F&& visit) {
  const int d = static_cast<int>(inner.size());
  std::vector<int> outer(inner);
  for (int j = 0; j < d; ++j) outer[j] += 2 * p[j];
  std::size_t points = 1;
  for (int e : inner) points *= static_cast<std::size_t>(e);
  std::vector<int> idx(d, 0);
  for (std::size_t q = 0; q < points; ++q) {
    std::size_t off = 0;
    for (int j = 0; j < d; ++j) off = off * outer[j] + static_cast<std::size_t>(idx[j] + p[j]);
    visit(q, off);
    for (int j = d - 1; j >= 0; --j) {
      if (++idx[j] < inner[j]) break;
      idx[j] = 0;
    }
  }
}

void require_padding(const Field& f, std::span<const int> p) {
  if (static_cast<int>(p.size()) != f.dim()) throw ShapeError("pad: one amount per dimension required");
  for (int a : p)
    if (a < 0) throw ConfigError("pad: padding must be nonnegative");
}

Var activate(Var z, Activation activation) {
  return activation == Activation::Gelu ? nn::gelu(z) : z;
}

void require_finite(const Var& v, const char* what, int index) {
  if (!v.value().all_finite())
    throw NumericError(std::string(what) + " " + std::to_string(index) + ": non-finite output");
}

}  // namespace

void set_adjoint_fault(AdjointFault fault) { g_fault.store(fault); }
AdjointFault adjoint_fault() { return g_fault.load(); }

Var diffusion(Var v, Var tau, const ModeSet& modes) {
  const Field& vv = v.value();
  const Grid grid(vv.extents());
  const auto& times = tau.value().data();
  if (static_cast<int>(times.size()) != vv.channels())
    throw ShapeError("diffusion: need one time per channel");

  SpectralField coeffs = spectral::diffuse(spectral::forward_fft(vv, modes), times);
  Field out = spectral::inverse_fft(coeffs, grid);

  const std::size_t vid = v.id(), tid = tau.id();
  return v.tape().push(std::move(out), {v, tau}, [vid, tid, modes, grid](Tape& t, std::size_t o) {
    const auto& times = t.value(tid).data();
    const int c = static_cast<int>(times.size());
    const auto mult = spectral::diffusion_multiplier(modes, times);
    const SpectralField g = spectral::inverse_fft_adjoint(t.grad(o), modes);

    if (t.requires_grad(tid)) {
      const SpectralField vhat = spectral::forward_fft(t.value(vid), modes);
      auto& gt = t.grad_buffer(tid).data();
      const double fault = adjoint_fault() == AdjointFault::DiffusionTime ? 1.5 : 1.0;
      for (std::size_t m = 0; m < modes.size(); ++m) {
        const double lambda = kFourPiSq * modes.squared_norm(m);
        for (int ch = 0; ch < c; ++ch) {
          const Complex a = g.at(m, ch), b = vhat.at(m, ch);
          const double dmult = a.real() * b.real() + a.imag() * b.imag();
          gt[ch] += fault * dmult * mult[m * c + ch] * (-lambda);
        }
      }
    }
    if (t.requires_grad(vid)) {
      SpectralField dv = g;
      auto cf = dv.coefficients();
      for (std::size_t i = 0; i < cf.size(); ++i) cf[i] *= mult[i];
      const Field gv = spectral::forward_fft_adjoint(dv, grid);
      auto& buf = t.grad_buffer(vid).data();
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += gv[i];
    }
  });
}

namespace {

// Splits the (channel, dim) point layout of a gradient field into d
// row-major P x c matrices D_j.
std::vector<double> split_by_dimension(const Field& grad, int c, int d) {
  const std::size_t P = grad.points();
  std::vector<double> out(P * c * d);
  for (std::size_t p = 0; p < P; ++p)
    for (int ch = 0; ch < c; ++ch)
      for (int j = 0; j < d; ++j) out[(j * P + p) * c + ch] = grad.data()[(p * c + ch) * d + j];
  return out;
}

// H_j = D_j W^T for every dimension: row p of H_j holds (W D(p))_j.
std::vector<double> weighted(const std::vector<double>& D, const std::vector<double>& w, int P, int c, int d) {
  std::vector<double> H(D.size());
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, P * d, c, c, 1.0, D.data(), c, w.data(), c, 0.0, H.data(), c);
  return H;
}

}  // namespace

Var gradient_features(Var v, Var w_grad, const ModeSet& modes) {
  const Field& vv = v.value();
  const Grid grid(vv.extents());
  const int c = vv.channels();
  const int d = grid.dim();
  const auto& w = w_grad.value().data();
  if (w.size() != static_cast<std::size_t>(c) * c) throw ShapeError("gradient_features: w_grad must be d_c x d_c");

  const int P = static_cast<int>(vv.points());
  const auto D = split_by_dimension(spectral::spectral_gradient(spectral::forward_fft(vv, modes), grid), c, d);
  const auto H = weighted(D, w, P, c, d);
  Field out(vv.extents(), c);
  auto& y = out.data();
  for (int j = 0; j < d; ++j) {
    const double* Dj = &D[static_cast<std::size_t>(j) * P * c];
    const double* Hj = &H[static_cast<std::size_t>(j) * P * c];
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += Dj[i] * Hj[i];
  }
  for (double& s : y) s = std::tanh(s);

  const std::size_t vid = v.id(), wid = w_grad.id();
  return v.tape().push(std::move(out), {v, w_grad}, [vid, wid, modes, grid, c, d](Tape& t, std::size_t o) {
    const Field& g = t.grad(o);
    const Field& y = t.value(o);
    const auto& w = t.value(wid).data();
    const int P = static_cast<int>(y.points());
    const std::size_t n = static_cast<std::size_t>(P) * c;
    const auto D = split_by_dimension(spectral::spectral_gradient(spectral::forward_fft(t.value(vid), modes), grid), c, d);

    // With gs = g * tanh'(s) and A_j = diag(gs) D_j:
    //   dD_j = diag(gs) H_j + A_j W,   dW = sum_j A_j^T D_j.
    std::vector<double> gs(n);
    for (std::size_t i = 0; i < n; ++i) gs[i] = g[i] * (1.0 - y[i] * y[i]);
    std::vector<double> A(D.size());
    for (int j = 0; j < d; ++j)
      for (std::size_t i = 0; i < n; ++i) A[j * n + i] = gs[i] * D[j * n + i];

    if (t.requires_grad(wid)) {
      auto& gw = t.grad_buffer(wid).data();
      cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, c, c, P * d, 1.0, A.data(), c, D.data(), c, 1.0,
                  gw.data(), c);
    }
    if (t.requires_grad(vid)) {
      std::vector<double> dD = weighted(D, w, P, c, d);
      for (int j = 0; j < d; ++j)
        for (std::size_t i = 0; i < n; ++i) dD[j * n + i] *= gs[i];
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, P * d, c, c, 1.0, A.data(), c, w.data(), c, 1.0,
                  dD.data(), c);
      Field dgrad(grid.extents(), c * d);
      for (std::size_t p = 0; p < static_cast<std::size_t>(P); ++p)
        for (int ch = 0; ch < c; ++ch)
          for (int j = 0; j < d; ++j) dgrad.data()[(p * c + ch) * d + j] = dD[(j * P + p) * c + ch];

      const SpectralField gd = spectral::inverse_fft_adjoint(dgrad, modes);
      SpectralField dv(modes, c);
      for (std::size_t m = 0; m < modes.size(); ++m)
        for (int ch = 0; ch < c; ++ch) {
          Complex s = 0.0;
          for (int j = 0; j < d; ++j) s += Complex(0.0, -kTwoPi * modes.wavenumber(m, j)) * gd.at(m, ch * d + j);
          dv.at(m, ch) = s;
        }
      const Field gv = spectral::forward_fft_adjoint(dv, grid);
      auto& buf = t.grad_buffer(vid).data();
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += gv[i];
    }
  });
}

Var fno_multiplier(Var v, Var weights, int out_channels, const ModeSet& modes) {
  const Field& vv = v.value();
  const Grid grid(vv.extents());
  const int in = vv.channels();
  const int oc = out_channels;
  const auto& r = weights.value().data();
  if (r.size() != modes.size() * static_cast<std::size_t>(oc) * in * 2)
    throw ShapeError("fno_multiplier: weights must be modes x out x in x 2");

  const SpectralField vhat = spectral::forward_fft(vv, modes);
  SpectralField y(modes, oc);
  for (std::size_t m = 0; m < modes.size(); ++m)
    for (int o = 0; o < oc; ++o) {
      Complex s = 0.0;
      for (int i = 0; i < in; ++i) {
        const std::size_t k = ((m * oc + o) * in + i) * 2;
        s += Complex(r[k], r[k + 1]) * vhat.at(m, i);
      }
      y.at(m, o) = s;
    }
  Field out = spectral::inverse_fft(y, grid);

  const std::size_t vid = v.id(), wid = weights.id();
  return v.tape().push(std::move(out), {v, weights}, [vid, wid, modes, grid, in, oc](Tape& t, std::size_t o_id) {
    const auto& r = t.value(wid).data();
    const SpectralField g = spectral::inverse_fft_adjoint(t.grad(o_id), modes);
    const SpectralField vhat = spectral::forward_fft(t.value(vid), modes);
    if (t.requires_grad(wid)) {
      auto& gw = t.grad_buffer(wid).data();
      for (std::size_t m = 0; m < modes.size(); ++m)
        for (int o = 0; o < oc; ++o)
          for (int i = 0; i < in; ++i) {
            const Complex d = std::conj(vhat.at(m, i)) * g.at(m, o);
            const std::size_t k = ((m * oc + o) * in + i) * 2;
            gw[k] += d.real();
            gw[k + 1] += d.imag();
          }
    }
    if (t.requires_grad(vid)) {
      SpectralField dv(modes, in);
      for (std::size_t m = 0; m < modes.size(); ++m)
        for (int i = 0; i < in; ++i) {
          Complex s = 0.0;
          for (int o = 0; o < oc; ++o) {
            const std::size_t k = ((m * oc + o) * in + i) * 2;
            s += std::conj(Complex(r[k], r[k + 1])) * g.at(m, o);
          }
          dv.at(m, i) = s;
        }
      const Field gv = spectral::forward_fft_adjoint(dv, grid);
      auto& buf = t.grad_buffer(vid).data();
      for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += gv[i];
    }
  });
}

Field pad_field(const Field& f, std::span<const int> p) {
  require_padding(f, p);
  std::vector<int> outer(f.extents());
  for (std::size_t j = 0; j < outer.size(); ++j) outer[j] += 2 * p[j];
  Field out(outer, f.channels());
  const int c = f.channels();
  for_each_padded(f.extents(), p, [&](std::size_t q, std::size_t off) {
    for (int ch = 0; ch < c; ++ch) out.at(off, ch) = f.at(q, ch);
  });
  return out;
}

Field crop_field(const Field& f, std::span<const int> p) {
  require_padding(f, p);
  std::vector<int> inner(f.extents());
  for (std::size_t j = 0; j < inner.size(); ++j) {
    inner[j] -= 2 * p[j];
    if (inner[j] < 1) throw ShapeError("crop: padding exceeds extent");
  }
  Field out(inner, f.channels());
  const int c = f.channels();
  for_each_padded(inner, p, [&](std::size_t q, std::size_t off) {
    for (int ch = 0; ch < c; ++ch) out.at(q, ch) = f.at(off, ch);
  });
  return out;
}

Var pad(Var v, std::span<const int> p) {
  std::vector<int> amounts(p.begin(), p.end());
  const std::size_t vid = v.id();
  return v.tape().push(pad_field(v.value(), p), {v}, [vid, amounts](Tape& t, std::size_t o) {
    const Field g = crop_field(t.grad(o), amounts);
    auto& buf = t.grad_buffer(vid).data();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
  });
}

Var crop(Var v, std::span<const int> p) {
  std::vector<int> amounts(p.begin(), p.end());
  const std::size_t vid = v.id();
  return v.tape().push(crop_field(v.value(), p), {v}, [vid, amounts](Tape& t, std::size_t o) {
    const Field g = pad_field(t.grad(o), amounts);
    auto& buf = t.grad_buffer(vid).data();
    for (std::size_t i = 0; i < buf.size(); ++i) buf[i] += g[i];
  });
}

Var dinozaur_block(Var v, const DinozaurBlockVars& block, const ModeSet& modes, Activation activation, int index) {
  const int width = v.value().channels();
  Var skip = nn::affine(v, block.w_skip, block.bias);
  Var branch = diffusion(v, block.tau, modes);
  Var features = block.w_grad.valid() ? nn::concat_channels(branch, gradient_features(branch, block.w_grad, modes))
                                      : branch;
  Var mixed = nn::linear(features, block.w_mix, width);
  Var out = activate(nn::add(skip, mixed), activation);
  require_finite(out, "dinozaur block", index);
  return out;
}

Var fno_block(Var v, const FnoBlockVars& block, const ModeSet& modes, Activation activation, int index) {
  const int width = v.value().channels();
  Var skip = nn::affine(v, block.w_skip, block.bias);
  Var spectral_part = fno_multiplier(v, block.weights, width, modes);
  Var out = activate(nn::add(skip, spectral_part), activation);
  require_finite(out, "fno block", index);
  return out;
}

}  // namespace dinozaur::op
