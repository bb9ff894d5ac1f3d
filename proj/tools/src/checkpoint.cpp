#include "dinozaur/cli/checkpoint.hpp"

#include <nlohmann/json.hpp>

#include "dinozaur/errors.hpp"
#include "dinozaur/io.hpp"

namespace dinozaur::cli {

using nlohmann::json;

namespace {

constexpr char kMagic[4] = {'D', 'Z', 'C', 'K'};

json spec_json(const op::NetworkSpec& s) {
  return {{"n", s.n},
          {"kmax", s.kmax},
          {"width", s.width},
          {"blocks", s.blocks},
          {"in_channels", s.in_channels},
          {"out_channels", s.out_channels},
          {"padding", s.padding},
          {"kind", op::to_string(s.kind)},
          {"lift_hidden", s.lift_hidden},
          {"proj_hidden", s.proj_hidden},
          {"positional", s.positional},
          {"block_activation", s.block_activation == op::Activation::Gelu ? "gelu" : "identity"}};
}

op::NetworkSpec spec_from(const json& j) {
  op::NetworkSpec s;
  s.n = j.at("n").get<std::vector<int>>();
  s.kmax = j.at("kmax").get<std::vector<int>>();
  s.width = j.at("width").get<int>();
  s.blocks = j.at("blocks").get<int>();
  s.in_channels = j.at("in_channels").get<int>();
  s.out_channels = j.at("out_channels").get<int>();
  s.padding = j.at("padding").get<std::vector<int>>();
  s.kind = op::parse_block_kind(j.at("kind").get<std::string>());
  s.lift_hidden = j.at("lift_hidden").get<int>();
  s.proj_hidden = j.at("proj_hidden").get<int>();
  s.positional = j.at("positional").get<bool>();
  const std::string act = j.at("block_activation").get<std::string>();
  if (act != "gelu" && act != "identity") throw FormatError("checkpoint: unknown activation " + act);
  s.block_activation = act == "gelu" ? op::Activation::Gelu : op::Activation::Identity;
  s.validate();
  return s;
}

json scaler_json(const data::StandardScaler& s) {
  json constant = json::array();
  for (bool c : s.constant) constant.push_back(c);
  return {{"mean", s.mean}, {"std", s.stddev}, {"constant", constant}};
}

data::StandardScaler scaler_from(const json& j) {
  data::StandardScaler s;
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("std").get<std::vector<double>>();
  for (const auto& c : j.at("constant")) s.constant.push_back(c.get<bool>());
  return s;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ck) {
  std::string blobs;
  std::uint64_t offset = 0;
  auto append = [&](const std::vector<double>& v) {
    const std::uint64_t at = offset;
    for (double x : v) io::put_f64(blobs, x);
    offset += v.size();
    return at;
  };

  json params = json::array();
  for (const auto& [name, p] : ck.params)
    params.push_back({{"name", name}, {"shape", p.shape}, {"offset", append(p.value)}, {"size", p.size()}});

  json manifest = {
      {"spec", spec_json(ck.spec)},
      {"bayesian", ck.bayesian},
      {"prior", {{"mean", ck.prior.mean}, {"std", ck.prior.stddev}}},
      {"params", params},
      {"scalers", {{"input", scaler_json(ck.input_scaler)}, {"target", scaler_json(ck.target_scaler)}}},
      {"rng_state", ck.rng_state},
      {"epoch", ck.epoch},
      {"loss_history", ck.loss_history},
  };
  if (ck.optimizer) {
    const auto& o = *ck.optimizer;
    json moments = json::array();
    for (const auto& [name, m] : o.first_moment) {
      const auto& v = o.second_moment.at(name);
      const std::uint64_t mo = append(m);
      const std::uint64_t vo = append(v);
      moments.push_back({{"name", name}, {"size", m.size()}, {"m_offset", mo}, {"v_offset", vo}});
    }
    manifest["optimizer"] = {{"lr", o.config.lr},
                             {"beta1", o.config.beta1},
                             {"beta2", o.config.beta2},
                             {"eps", o.config.eps},
                             {"weight_decay", o.config.weight_decay},
                             {"step", o.step},
                             {"moments", moments}};
  }

  const std::string text = manifest.dump();
  std::string out(kMagic, 4);
  io::put_u32(out, kCheckpointVersion);
  io::put_u64(out, text.size());
  out += text;
  out += blobs;
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  io::ByteReader in(bytes, "DZCK");
  if (in.take(4) != std::string(kMagic, 4)) throw FormatError("checkpoint: bad magic");
  const std::uint32_t version = in.u32();
  if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
  const std::uint64_t len = in.u64();
  if (len > in.remaining()) throw FormatError("checkpoint: truncated manifest");
  const std::string text = in.take(len);
  if (in.remaining() % 8 != 0) throw FormatError("checkpoint: blob area is not a whole number of doubles");
  std::vector<double> blob(in.remaining() / 8);
  for (double& v : blob) v = in.f64();

  auto slice = [&](std::uint64_t offset, std::uint64_t size) {
    if (offset + size > blob.size()) throw FormatError("checkpoint: blob range out of bounds");
    return std::vector<double>(blob.begin() + offset, blob.begin() + offset + size);
  };

  Checkpoint ck;
  try {
    const json m = json::parse(text);
    ck.spec = spec_from(m.at("spec"));
    ck.bayesian = m.at("bayesian").get<bool>();
    ck.prior.mean = m.at("prior").at("mean").get<double>();
    ck.prior.stddev = m.at("prior").at("std").get<double>();
    for (const auto& e : m.at("params")) {
      auto& p = ck.params.add(e.at("name").get<std::string>(), e.at("shape").get<std::vector<int>>());
      const auto size = e.at("size").get<std::uint64_t>();
      if (size != p.size()) throw FormatError("checkpoint: size does not match shape");
      p.value = slice(e.at("offset").get<std::uint64_t>(), size);
    }
    ck.input_scaler = scaler_from(m.at("scalers").at("input"));
    ck.target_scaler = scaler_from(m.at("scalers").at("target"));
    ck.rng_state = m.at("rng_state").get<std::string>();
    ck.epoch = m.at("epoch").get<int>();
    ck.loss_history = m.at("loss_history").get<std::vector<double>>();
    if (m.contains("optimizer")) {
      const json& o = m["optimizer"];
      nn::OptimizerState s;
      s.config.lr = o.at("lr").get<double>();
      s.config.beta1 = o.at("beta1").get<double>();
      s.config.beta2 = o.at("beta2").get<double>();
      s.config.eps = o.at("eps").get<double>();
      s.config.weight_decay = o.at("weight_decay").get<double>();
      s.step = o.at("step").get<std::uint64_t>();
      for (const auto& e : o.at("moments")) {
        const auto name = e.at("name").get<std::string>();
        const auto size = e.at("size").get<std::uint64_t>();
        s.first_moment[name] = slice(e.at("m_offset").get<std::uint64_t>(), size);
        s.second_moment[name] = slice(e.at("v_offset").get<std::uint64_t>(), size);
      }
      ck.optimizer = std::move(s);
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) { io::write_file(path, encode_checkpoint(ckpt)); }

Checkpoint load_checkpoint(const std::string& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace dinozaur::cli
