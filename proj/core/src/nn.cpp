#include "dinozaur/nn.hpp"

#include <cblas.h>

#include <cmath>
#include <numbers>

#include "dinozaur/errors.hpp"

namespace dinozaur::nn {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void require_same_shape(const Field& a, const Field& b, const char* op) {
  if (!a.same_shape(b)) throw ShapeError(std::string(op) + ": shape mismatch");
}

}  // namespace

double gelu(double x) { return 0.5 * x * std::erfc(-x * kInvSqrt2); }

double gelu_derivative(double x) {
  return 0.5 * std::erfc(-x * kInvSqrt2) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double tanh_derivative(double x) {
  const double t = std::tanh(x);
  return 1.0 - t * t;
}

Var linear(Var x, Var weight, int out_channels) {
  const Field& xv = x.value();
  const int in = xv.channels();
  const auto& w = weight.value().data();
  if (w.size() != static_cast<std::size_t>(out_channels) * in)
    throw ShapeError("linear: weight has " + std::to_string(w.size()) + " entries, expected " +
                     std::to_string(out_channels * in));
  Field y(xv.extents(), out_channels);
  const int P = static_cast<int>(xv.points());
  // Y (P x out) = X (P x in) W^T
  cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasTrans, P, out_channels, in, 1.0, xv.data().data(), in, w.data(), in,
              0.0, y.data().data(), out_channels);
  const std::size_t xid = x.id(), wid = weight.id();
  return x.tape().push(std::move(y), {x, weight}, [xid, wid, in, out_channels](Tape& t, std::size_t out) {
    const Field& g = t.grad(out);
    const Field& xv = t.value(xid);
    const auto& w = t.value(wid).data();
    const int P = static_cast<int>(xv.points());
    if (t.requires_grad(xid)) {
      // dX += G W
      auto& gx = t.grad_buffer(xid).data();
      cblas_dgemm(CblasRowMajor, CblasNoTrans, CblasNoTrans, P, in, out_channels, 1.0, g.data().data(), out_channels,
                  w.data(), in, 1.0, gx.data(), in);
    }
    if (t.requires_grad(wid)) {
      // dW += G^T X
      auto& gw = t.grad_buffer(wid).data();
      cblas_dgemm(CblasRowMajor, CblasTrans, CblasNoTrans, out_channels, in, P, 1.0, g.data().data(), out_channels,
                  xv.data().data(), in, 1.0, gw.data(), in);
    }
  });
}

Var affine(Var x, Var weight, Var bias) {
  const int out = bias.value().channels();
  Var y = linear(x, weight, out);
  Field z = y.value();
  const auto& b = bias.value().data();
  for (std::size_t p = 0; p < z.points(); ++p)
    for (int o = 0; o < out; ++o) z.at(p, o) += b[o];
  const std::size_t yid = y.id(), bid = bias.id();
  return x.tape().push(std::move(z), {y, bias}, [yid, bid, out](Tape& t, std::size_t o_id) {
    const Field& g = t.grad(o_id);
    if (t.requires_grad(yid)) {
      auto& gy = t.grad_buffer(yid).data();
      for (std::size_t i = 0; i < gy.size(); ++i) gy[i] += g[i];
    }
    if (t.requires_grad(bid)) {
      auto& gb = t.grad_buffer(bid).data();
      for (std::size_t p = 0; p < g.points(); ++p)
        for (int c = 0; c < out; ++c) gb[c] += g.at(p, c);
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Field y = a.value();
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += b.value()[i];
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().push(std::move(y), {a, b}, [aid, bid](Tape& t, std::size_t out) {
    const Field& g = t.grad(out);
    for (std::size_t id : {aid, bid}) {
      if (!t.requires_grad(id)) continue;
      auto& gi = t.grad_buffer(id).data();
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) { return add(a, scale(b, -1.0)); }

Var scale(Var x, double factor) {
  Field y = x.value();
  for (double& v : y.data()) v *= factor;
  const std::size_t xid = x.id();
  return x.tape().push(std::move(y), {x}, [xid, factor](Tape& t, std::size_t out) {
    const Field& g = t.grad(out);
    auto& gx = t.grad_buffer(xid).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += factor * g[i];
  });
}

namespace {

template <typename F, typename DF>
Var elementwise(Var x, F f, DF df) {
  Field y = x.value();
  for (double& v : y.data()) v = f(v);
  const std::size_t xid = x.id();
  return x.tape().push(std::move(y), {x}, [xid, df](Tape& t, std::size_t out) {
    const Field& g = t.grad(out);
    const Field& xv = t.value(xid);
    const Field& yv = t.value(out);
    auto& gx = t.grad_buffer(xid).data();
    for (std::size_t i = 0; i < gx.size(); ++i) gx[i] += g[i] * df(xv[i], yv[i]);
  });
}

}  // namespace

Var gelu(Var x) {
  return elementwise(x, [](double v) { return gelu(v); }, [](double v, double) { return gelu_derivative(v); });
}

Var tanh(Var x) {
  return elementwise(x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var exp(Var x) {
  return elementwise(x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var concat_channels(Var a, Var b) {
  const Field& av = a.value();
  const Field& bv = b.value();
  if (av.extents() != bv.extents()) throw ShapeError("concat_channels: extents differ");
  const int ca = av.channels(), cb = bv.channels();
  Field y(av.extents(), ca + cb);
  for (std::size_t p = 0; p < av.points(); ++p) {
    for (int c = 0; c < ca; ++c) y.at(p, c) = av.at(p, c);
    for (int c = 0; c < cb; ++c) y.at(p, ca + c) = bv.at(p, c);
  }
  const std::size_t aid = a.id(), bid = b.id();
  return a.tape().push(std::move(y), {a, b}, [aid, bid, ca, cb](Tape& t, std::size_t out) {
    const Field& g = t.grad(out);
    if (t.requires_grad(aid)) {
      Field& ga = t.grad_buffer(aid);
      for (std::size_t p = 0; p < g.points(); ++p)
        for (int c = 0; c < ca; ++c) ga.at(p, c) += g.at(p, c);
    }
    if (t.requires_grad(bid)) {
      Field& gb = t.grad_buffer(bid);
      for (std::size_t p = 0; p < g.points(); ++p)
        for (int c = 0; c < cb; ++c) gb.at(p, c) += g.at(p, ca + c);
    }
  });
}

Var sum(Var x) {
  double s = 0.0;
  for (double v : x.value().data()) s += v;
  const std::size_t xid = x.id();
  return x.tape().push(Field({}, 1, {s}), {x}, [xid](Tape& t, std::size_t out) {
    const double g = t.grad(out)[0];
    for (double& v : t.grad_buffer(xid).data()) v += g;
  });
}

Var mse(Var pred, const Field& target) {
  require_same_shape(pred.value(), target, "mse");
  const Field& pv = pred.value();
  const double n = static_cast<double>(pv.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double r = pv[i] - target[i];
    s += r * r;
  }
  const std::size_t pid = pred.id();
  return pred.tape().push(Field({}, 1, {s / n}), {pred}, [pid, target, n](Tape& t, std::size_t out) {
    const double g = t.grad(out)[0];
    const Field& pv = t.value(pid);
    auto& gp = t.grad_buffer(pid).data();
    for (std::size_t i = 0; i < gp.size(); ++i) gp[i] += g * 2.0 * (pv[i] - target[i]) / n;
  });
}

void glorot_uniform(Parameter& p, int fan_in, int fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : p.value) v = bound * (2.0 * rng.uniform() - 1.0);
}

void init_affine(ParamStore& store, const std::string& prefix, int in, int out, Rng& rng) {
  Parameter& w = store.add(prefix + ".w", {out, in});
  glorot_uniform(w, in, out, rng);
  store.add(prefix + ".b", {out});
}

}  // namespace dinozaur::nn
