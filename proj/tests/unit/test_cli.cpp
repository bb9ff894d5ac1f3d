#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <sstream>

#include "dinozaur/cli/checkpoint.hpp"
#include "dinozaur/cli/commands.hpp"
#include "dinozaur/cli/config.hpp"
#include "dinozaur/cli/pipeline.hpp"
#include "dinozaur/errors.hpp"
#include "dinozaur/io.hpp"
#include "scratch_dir.hpp"

using namespace dinozaur;
using namespace dinozaur::cli;
using testing_support::ScratchDir;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = io::read_file(e.path());
  return files;
}

}  // namespace

TEST(Config, DefaultsAndOverrides) {
  const RunConfig c = parse_config(R"({"task": {"kind": "darcy-lite", "n_train": 4},
                                        "optim": {"lr": 0.02}, "seed": 9})");
  EXPECT_EQ(c.task.kind, data::TaskKind::DarcyLite);
  EXPECT_EQ(c.task.n, (std::vector<int>{32, 32}));
  EXPECT_EQ(c.task.field.amplitude, 0.5);
  EXPECT_EQ(c.task.n_train, 4);
  EXPECT_EQ(c.optim.lr, 0.02);
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.network.width, 32);
}

TEST(Config, UnknownKeysAndBadValuesAreRejected) {
  EXPECT_THROW(parse_config(R"({"optim": {"learning_rate": 1}})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"extra": 1})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"optim": {"batch": 0}})").validate(), ConfigError);
  EXPECT_THROW(parse_config(R"({"optim": {"lr": "fast"}})"), ConfigError);
  EXPECT_THROW(parse_config("{"), ConfigError);
}

TEST(Config, DumpParsesBackToTheSameConfig) {
  RunConfig c = parse_config(R"({"task": {"kind": "screened-poisson"}, "bayes": {"enabled": true}})");
  c.network.kmax = {8};
  const RunConfig d = parse_config(dump_config(c));
  EXPECT_EQ(dump_config(d), dump_config(c));
}

TEST(Config, SpecResolution) {
  NetworkConfig net;
  net.width = 8;
  const auto heat = make_spec(net, {64}, 1, 1, data::TaskKind::Heat);
  EXPECT_EQ(heat.kmax, (std::vector<int>{16}));
  EXPECT_FALSE(heat.positional);
  const auto darcy = make_spec(net, {32, 32}, 1, 1, data::TaskKind::DarcyLite);
  EXPECT_TRUE(darcy.positional);
  net.positional = "off";
  EXPECT_FALSE(make_spec(net, {32, 32}, 1, 1, data::TaskKind::DarcyLite).positional);
  EXPECT_EQ(parse_int_list("8,8,8"), (std::vector<int>{8, 8, 8}));
  EXPECT_THROW(parse_int_list("8,x"), ConfigError);
}

TEST(Checkpoint, EncodeDecodeIsByteIdentical) {
  io::Archive archive;
  data::OperatorTask task;
  task.n = {16};
  task.n_train = 4;
  task.n_test = 2;
  archive = io::make_archive(data::generate(task));
  RunConfig cfg;
  cfg.network.width = 4;
  cfg.network.blocks = 2;
  cfg.optim.epochs = 1;
  cfg.optim.batch = 2;
  cfg.bayes.enabled = true;
  const TrainOutcome r = train(cfg, archive, {});
  ASSERT_TRUE(r.final_state.optimizer.has_value());
  const std::string bytes = encode_checkpoint(r.final_state);
  EXPECT_EQ(bytes.substr(0, 4), "DZCK");
  const Checkpoint back = decode_checkpoint(bytes);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  EXPECT_TRUE(back.bayesian);
  EXPECT_EQ(back.spec, r.final_state.spec);
  EXPECT_EQ(back.rng_state, r.final_state.rng_state);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 8)), FormatError);
  EXPECT_THROW(decode_checkpoint("DZCX" + bytes.substr(4)), FormatError);
}

TEST(Pipeline, TinyModelGradientsAreCorrect) {
  for (auto kind : {op::BlockKind::Diffusion, op::BlockKind::DiffusionNoGrad, op::BlockKind::Fno}) {
    GradcheckSetup setup;
    setup.spec = tiny_spec(kind);
    const auto r = gradcheck_model(setup);
    EXPECT_TRUE(r.passed) << op::to_string(kind) << " " << r.max_relative_error;
  }
}

TEST(Pipeline, LogFormatting) {
  EXPECT_EQ(log_header(false), "epoch,train_loss,test_rl2,lr");
  EXPECT_EQ(log_header(true), "epoch,train_loss,test_rl2,lr,elbo,kl,sigma2");
  EpochLog row{3, 0.5, 0.25, 1e-3, 0, 0, 0};
  EXPECT_EQ(log_row(row, false), "3,0.5,0.25,0.001");
}

TEST(Commands, UsageErrors) {
  EXPECT_EQ(invoke({}).code, kUsage);
  EXPECT_EQ(invoke({"frobnicate"}).code, kUsage);
  EXPECT_EQ(invoke({"train"}).code, kUsage);
  EXPECT_EQ(invoke({"gen-data", "--task", "burgers"}).code, kUsage);
  EXPECT_EQ(invoke({"eval", "--checkpoint", "/nonexistent.dzck", "--data", "/nonexistent"}).code, kFormat);
  EXPECT_EQ(invoke({"--help"}).code, kOk);
}

TEST(Commands, ParamsTable) {
  const Result r = invoke({"params", "--kmax", "8,8", "--width", "8", "--blocks", "2"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find("per_block,272\n"), std::string::npos);
  const Result fno = invoke({"params", "--kmax", "8", "--width", "4", "--block", "fno"});
  EXPECT_NE(fno.out.find("multiplier_per_block,256\n"), std::string::npos);
}

TEST(Commands, GradcheckAndNegativeControl) {
  EXPECT_EQ(invoke({"gradcheck", "--seed", "1"}).code, kOk);
  EXPECT_EQ(invoke({"gradcheck", "--bayes", "--seed", "1"}).code, kOk);
  const Result bad = invoke({"gradcheck", "--corrupt-adjoint"});
  EXPECT_EQ(bad.code, kCheckFailed);
  EXPECT_EQ(bad.out.rfind("FAIL", 0), 0u);
  EXPECT_EQ(invoke({"gradcheck"}).code, kOk);
}

TEST(Commands, EndToEndIsBitReproducible) {
  ScratchDir a("e2e_a"), b("e2e_b");
  for (const auto* dir : {&a, &b}) {
    const std::string root = dir->path().string();
    ASSERT_EQ(invoke({"gen-data", "--task", "heat", "--n", "16", "--train", "6", "--test", "3", "--seed", "4",
                      "--out", root + "/data"})
                  .code,
              kOk);
    const Result t = invoke({"train", "--data", root + "/data", "--bayes", "--epochs", "2", "--batch", "3",
                             "--width", "4", "--blocks", "2", "--seed", "5", "--out", root + "/run"});
    ASSERT_EQ(t.code, kOk) << t.err;
    const Result e = invoke({"eval", "--checkpoint", root + "/run/final.dzck", "--data", root + "/data",
                             "--samples", "5", "--seed", "6", "--out", root + "/eval"});
    ASSERT_EQ(e.code, kOk) << e.err;
    EXPECT_NE(e.out.find("nll"), std::string::npos);
    const Result s = invoke({"sample", "--checkpoint", root + "/run/best.dzck", "--data", root + "/data",
                             "--samples", "3", "--seed", "7", "--out", root + "/samples"});
    ASSERT_EQ(s.code, kOk) << s.err;
  }
  const auto sa = snapshot(a.path()), sb = snapshot(b.path());
  ASSERT_EQ(sa.size(), sb.size());
  for (const auto& [name, bytes] : sa) {
    if (name.ends_with("config.json")) continue;  // echoes the differing output paths
    EXPECT_EQ(bytes, sb.at(name)) << name;
  }
  EXPECT_TRUE(sa.count("run/log.csv"));
  EXPECT_TRUE(sa.count("eval/report.json"));
  EXPECT_TRUE(sa.count("eval/calibration.csv"));
  EXPECT_TRUE(sa.count("samples/test_000002/sample_0002.dzf"));
  EXPECT_TRUE(sa.count("samples/tau_log_std.csv"));
}
