#include "dinozaur/cli/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "dinozaur/errors.hpp"

namespace dinozaur::cli {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError("config: '" + where + "' must be an object");
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) throw ConfigError("config: unknown key '" + where + (where.empty() ? "" : ".") + key + "'");
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void RunConfig::validate() const {
  task.validate();
  if (network.width < 1 || network.blocks < 0) throw ConfigError("config: network width >= 1 and blocks >= 0");
  op::parse_block_kind(network.block);
  if (network.positional != "auto" && network.positional != "on" && network.positional != "off")
    throw ConfigError("config: network.positional must be auto, on or off");
  if (!(optim.lr > 0.0)) throw ConfigError("config: optim.lr must be positive");
  if (optim.epochs < 0) throw ConfigError("config: optim.epochs must be >= 0");
  if (optim.batch < 1) throw ConfigError("config: optim.batch must be >= 1");
  if (optim.weight_decay < 0.0) throw ConfigError("config: optim.weight_decay must be >= 0");
  if (optim.schedule != "one-cycle" && optim.schedule != "constant")
    throw ConfigError("config: optim.schedule must be one-cycle or constant");
  if (!(bayes.prior_std > 0.0) || !(bayes.init_std > 0.0)) throw ConfigError("config: bayes stds must be positive");
  if (bayes.samples < 1) throw ConfigError("config: bayes.samples must be >= 1");
  if (bayes.enabled && network.block == "fno") throw ConfigError("config: bayesian training needs diffusion blocks");
}

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  RunConfig c;
  try {
    check_keys(j, {"task", "network", "optim", "bayes", "seed", "out", "data", "checkpoint"}, "");
    read(j, "seed", c.seed);
    read(j, "out", c.out);
    read(j, "data", c.data);
    read(j, "checkpoint", c.checkpoint);
    if (j.contains("task")) {
      const json& t = j["task"];
      check_keys(t, {"kind", "n", "horizon", "forcing", "forcing_profile", "field", "n_train", "n_test", "cg_tolerance",
                     "cg_max_iterations"},
                 "task");
      if (t.contains("kind")) c.task = data::default_task(data::parse_task_kind(t["kind"].get<std::string>()));
      read(t, "n", c.task.n);
      read(t, "horizon", c.task.horizon);
      read(t, "forcing", c.task.forcing);
      read(t, "forcing_profile", c.task.forcing_profile);
      read(t, "n_train", c.task.n_train);
      read(t, "n_test", c.task.n_test);
      read(t, "cg_tolerance", c.task.cg_tolerance);
      read(t, "cg_max_iterations", c.task.cg_max_iterations);
      if (t.contains("field")) {
        const json& f = t["field"];
        check_keys(f, {"alpha", "kmax", "amplitude", "zero_mean"}, "task.field");
        read(f, "alpha", c.task.field.alpha);
        read(f, "kmax", c.task.field.kmax);
        read(f, "amplitude", c.task.field.amplitude);
        read(f, "zero_mean", c.task.field.zero_mean);
      }
    }
    if (j.contains("network")) {
      const json& n = j["network"];
      check_keys(n, {"width", "blocks", "kmax", "padding", "block", "lift_hidden", "proj_hidden", "positional"},
                 "network");
      read(n, "width", c.network.width);
      read(n, "blocks", c.network.blocks);
      read(n, "kmax", c.network.kmax);
      read(n, "padding", c.network.padding);
      read(n, "block", c.network.block);
      read(n, "lift_hidden", c.network.lift_hidden);
      read(n, "proj_hidden", c.network.proj_hidden);
      read(n, "positional", c.network.positional);
    }
    if (j.contains("optim")) {
      const json& o = j["optim"];
      check_keys(o, {"lr", "epochs", "batch", "weight_decay", "schedule"}, "optim");
      read(o, "lr", c.optim.lr);
      read(o, "epochs", c.optim.epochs);
      read(o, "batch", c.optim.batch);
      read(o, "weight_decay", c.optim.weight_decay);
      read(o, "schedule", c.optim.schedule);
    }
    if (j.contains("bayes")) {
      const json& b = j["bayes"];
      check_keys(b, {"enabled", "prior_mean", "prior_std", "init_mean", "init_std", "init_log_noise_var", "samples"},
                 "bayes");
      read(b, "enabled", c.bayes.enabled);
      read(b, "prior_mean", c.bayes.prior_mean);
      read(b, "prior_std", c.bayes.prior_std);
      read(b, "init_mean", c.bayes.init_mean);
      read(b, "init_std", c.bayes.init_std);
      read(b, "init_log_noise_var", c.bayes.init_log_noise_var);
      read(b, "samples", c.bayes.samples);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("config: cannot open " + path);
  std::ostringstream os;
  os << f.rdbuf();
  return parse_config(os.str());
}

std::string dump_config(const RunConfig& c) {
  const auto& t = c.task;
  json j = {
      {"task",
       {{"kind", data::to_string(t.kind)},
        {"n", t.n},
        {"horizon", t.horizon},
        {"forcing", t.forcing},
        {"forcing_profile", t.forcing_profile},
        {"field",
         {{"alpha", t.field.alpha},
          {"kmax", t.field.kmax},
          {"amplitude", t.field.amplitude},
          {"zero_mean", t.field.zero_mean}}},
        {"n_train", t.n_train},
        {"n_test", t.n_test},
        {"cg_tolerance", t.cg_tolerance},
        {"cg_max_iterations", t.cg_max_iterations}}},
      {"network",
       {{"width", c.network.width},
        {"blocks", c.network.blocks},
        {"kmax", c.network.kmax},
        {"padding", c.network.padding},
        {"block", c.network.block},
        {"lift_hidden", c.network.lift_hidden},
        {"proj_hidden", c.network.proj_hidden},
        {"positional", c.network.positional}}},
      {"optim",
       {{"lr", c.optim.lr},
        {"epochs", c.optim.epochs},
        {"batch", c.optim.batch},
        {"weight_decay", c.optim.weight_decay},
        {"schedule", c.optim.schedule}}},
      {"bayes",
       {{"enabled", c.bayes.enabled},
        {"prior_mean", c.bayes.prior_mean},
        {"prior_std", c.bayes.prior_std},
        {"init_mean", c.bayes.init_mean},
        {"init_std", c.bayes.init_std},
        {"init_log_noise_var", c.bayes.init_log_noise_var},
        {"samples", c.bayes.samples}}},
      {"seed", c.seed},
      {"out", c.out},
      {"data", c.data},
      {"checkpoint", c.checkpoint},
  };
  return j.dump(2) + "\n";
}

op::NetworkSpec make_spec(const NetworkConfig& net, const std::vector<int>& n, int in_channels, int out_channels,
                          data::TaskKind task) {
  op::NetworkSpec spec;
  spec.n = n;
  spec.kmax = net.kmax;
  if (spec.kmax.empty())
    for (int e : n) spec.kmax.push_back(std::max(1, e / 4));
  spec.width = net.width;
  spec.blocks = net.blocks;
  spec.in_channels = in_channels;
  spec.out_channels = out_channels;
  spec.padding = net.padding;
  spec.kind = op::parse_block_kind(net.block);
  spec.lift_hidden = net.lift_hidden;
  spec.proj_hidden = net.proj_hidden;
  spec.positional = net.positional == "on" || (net.positional == "auto" && task == data::TaskKind::DarcyLite);
  spec.validate();
  return spec;
}

bayes::TimePrior make_prior(const BayesConfig& b) { return {b.prior_mean, b.prior_std}; }

bayes::PosteriorInit make_posterior_init(const BayesConfig& b) { return {b.init_mean, b.init_std}; }

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("expected a comma-separated integer list, got '" + text + "'");
    }
  }
  if (out.empty()) throw ConfigError("expected a comma-separated integer list, got '" + text + "'");
  return out;
}

}  // namespace dinozaur::cli
