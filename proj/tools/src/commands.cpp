#include "dinozaur/cli/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <filesystem>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>

#include "dinozaur/cli/checkpoint.hpp"
#include "dinozaur/cli/config.hpp"
#include "dinozaur/cli/pipeline.hpp"
#include "dinozaur/errors.hpp"
#include "dinozaur/io.hpp"
#include "dinozaur/operator.hpp"

namespace dinozaur::cli {

namespace fs = std::filesystem;

namespace {

// Flags shared by every command; each one overrides the matching config key.
struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config, "JSON run configuration");
  app->add_option("--seed", c.seed, "Random seed (u64)");
  app->add_option("--out", c.out, "Output directory");
}

RunConfig resolve(const Common& c) {
  RunConfig cfg = c.config.empty() ? RunConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.out) cfg.out = *c.out;
  return cfg;
}

void echo_config(const RunConfig& cfg) { io::write_file(fs::path(cfg.out) / "config.json", dump_config(cfg)); }

template <class T>
void set_if(const std::optional<T>& v, T& target) {
  if (v) target = *v;
}

struct GenData {
  Common common;
  std::optional<std::string> task;
  std::optional<int> n, dim, train, test, field_kmax;
  std::optional<double> horizon, forcing, alpha, amplitude;

  int operator()(std::ostream& out) const {
    RunConfig cfg = resolve(common);
    if (task) {
      const data::TaskKind kind = data::parse_task_kind(*task);
      if (kind != cfg.task.kind) cfg.task = data::default_task(kind);
    }
    if (n || dim) {
      const int d = dim ? *dim : static_cast<int>(cfg.task.n.size());
      cfg.task.n.assign(d, n ? *n : cfg.task.n.at(0));
    }
    set_if(train, cfg.task.n_train);
    set_if(test, cfg.task.n_test);
    set_if(horizon, cfg.task.horizon);
    set_if(forcing, cfg.task.forcing);
    set_if(alpha, cfg.task.field.alpha);
    set_if(amplitude, cfg.task.field.amplitude);
    set_if(field_kmax, cfg.task.field.kmax);
    cfg.task.seed = cfg.seed;
    cfg.validate();

    const io::Archive archive = io::make_archive(data::generate(cfg.task));
    io::write_archive(cfg.out, archive);
    echo_config(cfg);
    const auto& ds = archive.dataset;
    out << "task " << data::to_string(cfg.task.kind) << ", grid";
    for (int e : cfg.task.n) out << ' ' << e;
    out << ", " << ds.train.size() << " train + " << ds.test.size() << " test = " << ds.train.size() + ds.test.size()
        << " samples\n";
    out << "max oracle residual " << std::scientific << std::setprecision(3) << ds.max_residual() << '\n';
    out << "archive written to " << cfg.out << '\n';
    return kOk;
  }
};

struct Train {
  Common common;
  std::optional<std::string> data, block, kmax, padding, schedule, positional;
  bool bayes = false;
  std::optional<int> epochs, batch, width, blocks;
  std::optional<double> lr, weight_decay;

  int operator()(std::ostream& out) const {
    RunConfig cfg = resolve(common);
    set_if(data, cfg.data);
    if (bayes) cfg.bayes.enabled = true;
    set_if(epochs, cfg.optim.epochs);
    set_if(lr, cfg.optim.lr);
    set_if(batch, cfg.optim.batch);
    set_if(weight_decay, cfg.optim.weight_decay);
    set_if(schedule, cfg.optim.schedule);
    set_if(block, cfg.network.block);
    set_if(width, cfg.network.width);
    set_if(blocks, cfg.network.blocks);
    if (kmax) cfg.network.kmax = parse_int_list(*kmax);
    if (padding) cfg.network.padding = parse_int_list(*padding);
    set_if(positional, cfg.network.positional);
    if (cfg.data.empty()) throw ConfigError("train: --data <archive> is required");

    const io::Archive archive = io::read_archive(cfg.data);
    cfg.task = archive.dataset.task;
    cfg.validate();
    fs::create_directories(cfg.out);
    echo_config(cfg);
    const TrainOutcome r = train(cfg, archive, cfg.out, &out);
    out << "final test rl2 " << std::setprecision(6) << (r.log.empty() ? test_rl2(r.final_state, archive) : r.log.back().test_rl2)
        << ", best " << r.best_rl2 << '\n';
    return kOk;
  }
};

struct Eval {
  Common common;
  std::optional<std::string> checkpoint, data;
  std::optional<int> samples;

  int operator()(std::ostream& out) const {
    RunConfig cfg = resolve(common);
    set_if(checkpoint, cfg.checkpoint);
    set_if(data, cfg.data);
    set_if(samples, cfg.bayes.samples);
    if (cfg.checkpoint.empty() || cfg.data.empty()) throw ConfigError("eval: --checkpoint and --data are required");
    cfg.validate();
    const Checkpoint ck = load_checkpoint(cfg.checkpoint);
    const io::Archive archive = io::read_archive(cfg.data);
    const auto report = evaluate(ck, archive, cfg.bayes.samples, cfg.seed);
    fs::create_directories(cfg.out);
    echo_config(cfg);
    io::write_file(fs::path(cfg.out) / "report.json", metrics::to_json(report));
    io::write_file(fs::path(cfg.out) / "elements.csv", metrics::elements_csv(report));
    if (report.probabilistic) io::write_file(fs::path(cfg.out) / "calibration.csv", metrics::calibration_csv(report));
    out << std::setprecision(6) << "rl2 " << report.rl2;
    if (report.probabilistic) out << "  nll " << report.nll << "  ma " << report.ma << "  is " << report.is_score;
    out << '\n';
    if (report.excluded) out << "warning: " << report.excluded << " zero-norm elements excluded from rl2\n";
    return kOk;
  }
};

struct Params {
  Common common;
  std::optional<std::string> kmax, n;
  std::optional<std::string> block;
  std::optional<int> width, blocks, in_channels, out_channels;
  std::string csv;

  int operator()(std::ostream& out) const {
    RunConfig cfg = resolve(common);
    set_if(block, cfg.network.block);
    set_if(width, cfg.network.width);
    set_if(blocks, cfg.network.blocks);
    if (kmax) cfg.network.kmax = parse_int_list(*kmax);
    std::vector<int> grid = n ? parse_int_list(*n) : cfg.task.n;
    if (!n && !cfg.network.kmax.empty()) {
      grid.clear();
      for (int k : cfg.network.kmax) grid.push_back(std::max(4, 2 * k + (2 * k) % 2));
    }
    const op::NetworkSpec spec =
        make_spec(cfg.network, grid, in_channels.value_or(1), out_channels.value_or(1));
    const op::ParamCount c = op::count_params(spec);

    std::ostringstream table;
    table << "component,count\n";
    table << "lifting," << c.lifting << '\n';
    for (const auto& [name, size] : c.block_tensors) table << "block." << name << ',' << size << '\n';
    table << "per_block," << c.per_block << '\n';
    table << "multiplier_per_block," << c.multiplier_per_block << '\n';
    table << "retained_modes," << c.retained_modes << '\n';
    table << "block_stack," << c.block_stack << '\n';
    table << "projection," << c.projection << '\n';
    table << "total," << c.total << '\n';
    out << table.str();
    if (!csv.empty()) io::write_file(csv, table.str());
    return kOk;
  }
};

struct Gradcheck {
  Common common;
  bool bayes = false;
  bool corrupt = false;
  std::optional<std::string> block;
  double tolerance = 1e-5;

  int operator()(std::ostream& out) const {
    RunConfig cfg = resolve(common);
    GradcheckSetup setup;
    setup.spec = tiny_spec(op::parse_block_kind(block.value_or("diffusion")));
    setup.bayesian = bayes;
    setup.seed = cfg.seed;
    if (bayes && setup.spec.kind == op::BlockKind::Fno) throw ConfigError("gradcheck: --bayes needs diffusion blocks");
    nn::GradcheckOptions opts;
    opts.tolerance = tolerance;

    struct FaultGuard {
      explicit FaultGuard(bool on) {
        if (on) op::set_adjoint_fault(op::AdjointFault::DiffusionTime);
      }
      ~FaultGuard() { op::set_adjoint_fault(op::AdjointFault::None); }
    } guard(corrupt);
    const nn::GradcheckReport r = gradcheck_model(setup, opts);

    out << (r.passed ? "PASS" : "FAIL") << "  max relative error " << std::scientific << std::setprecision(3)
        << r.max_relative_error << " over " << r.coordinates << " coordinates (tolerance " << tolerance << ")\n";
    out << "worst offender " << r.worst_parameter << "[" << r.worst_index << "]  analytic "
        << std::setprecision(10) << r.worst_analytic << "  numeric " << r.worst_numeric << '\n';
    return r.passed ? kOk : kCheckFailed;
  }
};

struct Sample {
  Common common;
  std::optional<std::string> checkpoint, data;
  std::optional<int> samples;

  int operator()(std::ostream& out) const {
    RunConfig cfg = resolve(common);
    set_if(checkpoint, cfg.checkpoint);
    set_if(data, cfg.data);
    set_if(samples, cfg.bayes.samples);
    if (cfg.checkpoint.empty() || cfg.data.empty()) throw ConfigError("sample: --checkpoint and --data are required");
    cfg.validate();
    const Checkpoint ck = load_checkpoint(cfg.checkpoint);
    const io::Archive archive = io::read_archive(cfg.data);
    write_samples(ck, archive, cfg.bayes.samples, cfg.seed, cfg.out);
    echo_config(cfg);
    out << archive.dataset.test.size() << " test elements x " << cfg.bayes.samples << " samples written to "
        << cfg.out << '\n';
    return kOk;
  }
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Diffusion neural operators: data, training, evaluation and diagnostics", "dinozaur"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dinozaur 0.1.0");

  GenData gen;
  Train tr;
  Eval ev;
  Params pa;
  Gradcheck gc;
  Sample sa;

  auto* g = app.add_subcommand("gen-data", "Generate a synthetic operator-learning dataset archive");
  add_common(g, gen.common);
  g->add_option("--task", gen.task, "heat | screened-poisson | darcy-lite");
  g->add_option("--n", gen.n, "Grid points per dimension");
  g->add_option("--dim", gen.dim, "Spatial dimension (default 1 for heat/screened-poisson, 2 for darcy-lite)");
  g->add_option("--train", gen.train, "Number of training samples");
  g->add_option("--test", gen.test, "Number of test samples");
  g->add_option("--horizon", gen.horizon, "Heat horizon T");
  g->add_option("--forcing", gen.forcing, "Darcy-lite constant forcing f");
  g->add_option("--alpha", gen.alpha, "Random-field spectrum exponent");
  g->add_option("--amplitude", gen.amplitude, "Random-field amplitude");
  g->add_option("--field-kmax", gen.field_kmax, "Random-field mode cut (0 = n/4)");

  auto* t = app.add_subcommand("train", "Train a deterministic or Bayesian model");
  add_common(t, tr.common);
  t->add_option("--data", tr.data, "Dataset archive directory");
  t->add_flag("--bayes", tr.bayes, "Variational training of the diffusion times");
  t->add_option("--epochs", tr.epochs, "Training epochs");
  t->add_option("--lr", tr.lr, "Peak learning rate");
  t->add_option("--batch", tr.batch, "Minibatch size");
  t->add_option("--weight-decay", tr.weight_decay, "AdamW weight decay");
  t->add_option("--schedule", tr.schedule, "one-cycle | constant");
  t->add_option("--block", tr.block, "diffusion | diffusion-no-grad | fno");
  t->add_option("--width", tr.width, "Channel width d_c");
  t->add_option("--blocks", tr.blocks, "Number of blocks M");
  t->add_option("--kmax", tr.kmax, "Retained modes per dimension, e.g. 16 or 8,8");
  t->add_option("--padding", tr.padding, "Zero padding per side and dimension, e.g. 4 or 4,4");
  t->add_option("--positional", tr.positional, "Positional embedding: auto | on | off");

  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
  add_common(e, ev.common);
  e->add_option("--checkpoint", ev.checkpoint, "Checkpoint file");
  e->add_option("--data", ev.data, "Dataset archive directory");
  e->add_option("--samples", ev.samples, "Posterior-predictive samples S");

  auto* p = app.add_subcommand("params", "Print the parameter table of a network spec");
  add_common(p, pa.common);
  p->add_option("--kmax", pa.kmax, "Retained modes per dimension, e.g. 8,8");
  p->add_option("--n", pa.n, "Grid extents (default 2 kmax)");
  p->add_option("--block", pa.block, "diffusion | diffusion-no-grad | fno");
  p->add_option("--width", pa.width, "Channel width d_c");
  p->add_option("--blocks", pa.blocks, "Number of blocks M");
  p->add_option("--in-channels", pa.in_channels, "Input channels d_a");
  p->add_option("--out-channels", pa.out_channels, "Output channels d_u");
  p->add_option("--csv", pa.csv, "Also write the table to this CSV file");

  auto* c = app.add_subcommand("gradcheck", "Finite-difference check of the full model gradient");
  add_common(c, gc.common);
  c->add_flag("--bayes", gc.bayes, "Check the negative ELBO including variational and noise parameters");
  c->add_option("--block", gc.block, "diffusion | diffusion-no-grad | fno");
  c->add_option("--tolerance", gc.tolerance, "Relative error tolerance");
  c->add_flag("--corrupt-adjoint", gc.corrupt, "Test hook: perturb the diffusion-time adjoint")->group("");

  auto* s = app.add_subcommand("sample", "Write posterior-predictive samples and diffusion-time diagnostics");
  add_common(s, sa.common);
  s->add_option("--checkpoint", sa.checkpoint, "Checkpoint file");
  s->add_option("--data", sa.data, "Dataset archive directory");
  s->add_option("--samples", sa.samples, "Samples S per test element");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    const int code = app.exit(ex, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (g->parsed()) return gen(out);
    if (t->parsed()) return tr(out);
    if (e->parsed()) return ev(out);
    if (p->parsed()) return pa(out);
    if (c->parsed()) return gc(out);
    if (s->parsed()) return sa(out);
  } catch (const NumericError& ex) {
    err << "error: " << ex.what() << '\n';
    return kNumeric;
  } catch (const FormatError& ex) {
    err << "error: " << ex.what() << '\n';
    return kFormat;
  } catch (const std::invalid_argument& ex) {
    err << "error: " << ex.what() << '\n';
    return kUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << '\n';
    return kFormat;
  }
  return kUsage;
}

}  // namespace dinozaur::cli
