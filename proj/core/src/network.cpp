#include "dinozaur/network.hpp"

#include <cmath>
#include <numbers>

#include "dinozaur/errors.hpp"
#include "dinozaur/nn.hpp"

namespace dinozaur::op {

std::string to_string(BlockKind kind) {
  switch (kind) {
    case BlockKind::Diffusion:
      return "diffusion";
    case BlockKind::DiffusionNoGrad:
      return "diffusion-no-grad";
    case BlockKind::Fno:
      return "fno";
  }
  return "diffusion";
}

BlockKind parse_block_kind(const std::string& name) {
  if (name == "diffusion") return BlockKind::Diffusion;
  if (name == "diffusion-no-grad") return BlockKind::DiffusionNoGrad;
  if (name == "fno") return BlockKind::Fno;
  throw ConfigError("unknown block kind '" + name + "' (expected diffusion, diffusion-no-grad or fno)");
}

std::vector<int> NetworkSpec::padding_or_zero() const {
  return padding.empty() ? std::vector<int>(n.size(), 0) : padding;
}

std::vector<int> NetworkSpec::padded_extents() const {
  std::vector<int> out(n);
  const auto p = padding_or_zero();
  for (std::size_t j = 0; j < out.size() && j < p.size(); ++j) out[j] += 2 * p[j];
  return out;
}

void NetworkSpec::validate() const {
  if (n.empty()) throw ConfigError("network: grid extents are empty");
  if (kmax.size() != n.size()) throw ConfigError("network: kmax must have one entry per dimension");
  if (!padding.empty() && padding.size() != n.size())
    throw ConfigError("network: padding must have one entry per dimension");
  for (int p : padding)
    if (p < 0) throw ConfigError("network: padding must be nonnegative");
  if (width < 1 || blocks < 0 || in_channels < 1 || out_channels < 1)
    throw ConfigError("network: width, channels must be >= 1 and blocks >= 0");
  if (lift_hidden < 0 || proj_hidden < 0) throw ConfigError("network: hidden widths must be >= 0");
  const spectral::Grid grid(padded_extents());
  modes().require_compatible(grid);
}

std::string block_param(int block, const std::string& tensor) {
  return "block." + std::to_string(block) + "." + tensor;
}

ParamCount count_params(const NetworkSpec& spec) {
  const std::size_t dc = static_cast<std::size_t>(spec.width);
  const std::size_t da = static_cast<std::size_t>(spec.lift_in_channels());
  const std::size_t du = static_cast<std::size_t>(spec.out_channels);
  const std::size_t hp = static_cast<std::size_t>(spec.lift_hidden_width());
  const std::size_t hq = static_cast<std::size_t>(spec.proj_hidden_width());

  ParamCount count;
  count.lifting = da * hp + hp + hp * dc + dc;
  count.projection = dc * hq + hq + hq * du + du;
  count.retained_modes = spec.modes().size();

  auto& t = count.block_tensors;
  t["w_skip"] = dc * dc;
  t["bias"] = dc;
  switch (spec.kind) {
    case BlockKind::Diffusion:
      t["w_grad"] = dc * dc;
      t["w_mix"] = 2 * dc * dc;
      t["log_tau"] = dc;
      count.multiplier_per_block = dc;
      break;
    case BlockKind::DiffusionNoGrad:
      t["w_mix"] = dc * dc;
      t["log_tau"] = dc;
      count.multiplier_per_block = dc;
      break;
    case BlockKind::Fno:
      t["weights"] = 2 * dc * dc * count.retained_modes;
      count.multiplier_per_block = t["weights"];
      break;
  }
  for (const auto& [name, size] : t) count.per_block += size;
  count.block_stack = count.per_block * static_cast<std::size_t>(spec.blocks);
  count.total = count.lifting + count.block_stack + count.projection;
  return count;
}

void init_params(const NetworkSpec& spec, nn::ParamStore& store, Rng& rng) {
  spec.validate();
  const int dc = spec.width;
  nn::init_affine(store, "lift.0", spec.lift_in_channels(), spec.lift_hidden_width(), rng);
  nn::init_affine(store, "lift.1", spec.lift_hidden_width(), dc, rng);

  const std::size_t modes = spec.modes().size();
  for (int i = 0; i < spec.blocks; ++i) {
    nn::Parameter& skip = store.add(block_param(i, "w_skip"), {dc, dc});
    nn::glorot_uniform(skip, dc, dc, rng);
    store.add(block_param(i, "bias"), {dc});
    if (spec.kind == BlockKind::Fno) {
      nn::Parameter& w = store.add(block_param(i, "weights"), {static_cast<int>(modes), dc, dc, 2});
      const double bound = 1.0 / static_cast<double>(dc * dc);
      for (double& v : w.value) v = bound * (2.0 * rng.uniform() - 1.0);
      continue;
    }
    if (spec.kind == BlockKind::Diffusion) {
      nn::Parameter& wg = store.add(block_param(i, "w_grad"), {dc, dc});
      nn::glorot_uniform(wg, dc, dc, rng);
    }
    const int mix_in = spec.kind == BlockKind::Diffusion ? 2 * dc : dc;
    nn::Parameter& mix = store.add(block_param(i, "w_mix"), {dc, mix_in});
    nn::glorot_uniform(mix, mix_in, dc, rng);
    nn::Parameter& lt = store.add(block_param(i, "log_tau"), {dc});
    for (double& v : lt.value) v = std::log(0.01) + 0.5 * rng.normal();
  }

  nn::init_affine(store, "proj.0", dc, spec.proj_hidden_width(), rng);
  nn::init_affine(store, "proj.1", spec.proj_hidden_width(), spec.out_channels, rng);
}

Var network_forward(nn::Tape& tape, const NetworkSpec& spec, const nn::ParamStore& store, Var input,
                    std::span<const Var> tau) {
  if (input.value().channels() != spec.in_channels || input.value().extents() != spec.n)
    throw ShapeError("network_forward: input does not match the network spec");
  if (!tau.empty() && static_cast<int>(tau.size()) != spec.blocks)
    throw ShapeError("network_forward: need one time vector per block");

  auto param = [&](const std::string& name) { return tape.parameter(store, name); };
  const ModeSet modes = spec.modes();
  const auto padding = spec.padding_or_zero();
  bool padded = false;
  for (int p : padding) padded = padded || p > 0;

  if (spec.positional) input = nn::concat_channels(input, tape.constant(positional_embedding(spec.n)));
  Var v = nn::affine(input, param("lift.0.w"), param("lift.0.b"));
  v = nn::gelu(v);
  v = nn::affine(v, param("lift.1.w"), param("lift.1.b"));
  if (padded) v = pad(v, padding);

  for (int i = 0; i < spec.blocks; ++i) {
    if (spec.kind == BlockKind::Fno) {
      FnoBlockVars b{param(block_param(i, "w_skip")), param(block_param(i, "bias")),
                     param(block_param(i, "weights"))};
      v = fno_block(v, b, modes, spec.block_activation, i);
      continue;
    }
    DinozaurBlockVars b;
    b.w_skip = param(block_param(i, "w_skip"));
    b.bias = param(block_param(i, "bias"));
    if (spec.kind == BlockKind::Diffusion) b.w_grad = param(block_param(i, "w_grad"));
    b.w_mix = param(block_param(i, "w_mix"));
    b.tau = tau.empty() ? nn::exp(param(block_param(i, "log_tau"))) : tau[i];
    v = dinozaur_block(v, b, modes, spec.block_activation, i);
  }

  if (padded) v = crop(v, padding);
  v = nn::affine(v, param("proj.0.w"), param("proj.0.b"));
  v = nn::gelu(v);
  return nn::affine(v, param("proj.1.w"), param("proj.1.b"));
}

Field positional_embedding(const std::vector<int>& extents) {
  const spectral::Grid grid(extents);
  const int d = grid.dim();
  Field out(extents, 2 * d);
  for (std::size_t p = 0; p < grid.points(); ++p)
    for (int j = 0; j < d; ++j) {
      const double x = 2.0 * std::numbers::pi * grid.coordinate(p, j);
      out.at(p, 2 * j) = std::sin(x);
      out.at(p, 2 * j + 1) = std::cos(x);
    }
  return out;
}

Field network_predict(const NetworkSpec& spec, const nn::ParamStore& store, const Field& input,
                      std::span<const std::vector<double>> log_tau) {
  nn::Tape tape(false);
  Var x = tape.constant(input);
  std::vector<Var> tau;
  for (const auto& lt : log_tau) {
    const int c = static_cast<int>(lt.size());
    std::vector<double> t(lt.size());
    for (std::size_t k = 0; k < lt.size(); ++k) t[k] = std::exp(lt[k]);
    tau.push_back(tape.constant(Field({}, c, std::move(t))));
  }
  return network_forward(tape, spec, store, x, tau).value();
}

}  // namespace dinozaur::op
