#include <cstdio>
#include <nlohmann/json.hpp>

#include "dinozaur/errors.hpp"
#include "dinozaur/io.hpp"

namespace dinozaur::io {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

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
  if (s.stddev.size() != s.mean.size() || s.constant.size() != s.mean.size())
    throw FormatError("manifest: scaler arrays differ in length");
  return s;
}

json task_json(const data::OperatorTask& t) {
  return {{"kind", data::to_string(t.kind)},
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
          {"cg_max_iterations", t.cg_max_iterations}};
}

data::OperatorTask task_from(const json& j, std::uint64_t seed) {
  data::OperatorTask t;
  t.kind = data::parse_task_kind(j.at("kind").get<std::string>());
  t.n = j.at("n").get<std::vector<int>>();
  t.horizon = j.at("horizon").get<double>();
  t.forcing = j.at("forcing").get<double>();
  t.forcing_profile = j.at("forcing_profile").get<std::string>();
  const json& f = j.at("field");
  t.field.alpha = f.at("alpha").get<double>();
  t.field.kmax = f.at("kmax").get<int>();
  t.field.amplitude = f.at("amplitude").get<double>();
  t.field.zero_mean = f.at("zero_mean").get<bool>();
  t.n_train = j.at("n_train").get<int>();
  t.n_test = j.at("n_test").get<int>();
  t.cg_tolerance = j.at("cg_tolerance").get<double>();
  t.cg_max_iterations = j.at("cg_max_iterations").get<int>();
  t.seed = seed;
  return t;
}

std::string sample_path(const char* split, std::size_t i, const char* role) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s/%06zu.%s.dzf", split, i, role);
  return buf;
}

}  // namespace

Archive make_archive(data::Dataset dataset) {
  if (dataset.train.empty()) throw ConfigError("archive: the train split is empty");
  Archive a;
  a.input_scaler = data::StandardScaler::fit(data::inputs_of(dataset.train));
  a.target_scaler = data::StandardScaler::fit(data::targets_of(dataset.train));
  a.dataset = std::move(dataset);
  return a;
}

void write_archive(const fs::path& dir, const Archive& archive) {
  const data::Dataset& ds = archive.dataset;
  fs::create_directories(dir);
  json samples;
  for (const auto& [name, split] : {std::pair{"train", &ds.train}, std::pair{"test", &ds.test}}) {
    json list = json::array();
    for (std::size_t i = 0; i < split->size(); ++i) {
      const data::Sample& s = (*split)[i];
      const std::string in = sample_path(name, i, "in");
      const std::string out = sample_path(name, i, "out");
      write_dzf(dir / in, s.input);
      write_dzf(dir / out, s.target);
      list.push_back({{"input", in}, {"target", out}, {"residual", s.residual}});
    }
    samples[name] = std::move(list);
  }
  const data::Sample& first = ds.train.empty() ? ds.test.at(0) : ds.train.front();
  json manifest = {
      {"format", "dinozaur-dataset"},
      {"format_version", kArchiveVersion},
      {"task", task_json(ds.task)},
      {"grid", ds.task.n},
      {"channels", {{"input", first.input.channels()}, {"target", first.target.channels()}}},
      {"seeds", {{"task", ds.task.seed}, {"train_stream", 0}, {"test_stream", 1}}},
      {"scalers", {{"input", scaler_json(archive.input_scaler)}, {"target", scaler_json(archive.target_scaler)}}},
      {"max_residual", ds.max_residual()},
      {"samples", samples},
  };
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

Archive read_archive(const fs::path& dir) {
  json m;
  try {
    m = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw FormatError("manifest: " + std::string(e.what()));
  }
  try {
    if (m.at("format").get<std::string>() != "dinozaur-dataset") throw FormatError("manifest: not a dataset");
    const int version = m.at("format_version").get<int>();
    if (version != kArchiveVersion)
      throw FormatError("manifest: unsupported format version " + std::to_string(version));
    Archive a;
    a.dataset.task = task_from(m.at("task"), m.at("seeds").at("task").get<std::uint64_t>());
    a.input_scaler = scaler_from(m.at("scalers").at("input"));
    a.target_scaler = scaler_from(m.at("scalers").at("target"));
    for (const auto& [name, split] : {std::pair{"train", &a.dataset.train}, std::pair{"test", &a.dataset.test}}) {
      for (const auto& e : m.at("samples").at(name)) {
        data::Sample s;
        s.input = read_dzf(dir / e.at("input").get<std::string>());
        s.target = read_dzf(dir / e.at("target").get<std::string>());
        s.residual = e.at("residual").get<double>();
        split->push_back(std::move(s));
      }
    }
    return a;
  } catch (const json::exception& e) {
    throw FormatError("manifest: " + std::string(e.what()));
  }
}

}  // namespace dinozaur::io
