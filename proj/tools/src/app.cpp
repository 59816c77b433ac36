#include <CLI11.hpp>

#include <fstream>
#include <ostream>

#include "tango/cli/commands.hpp"

namespace tango::cli {

namespace fs = std::filesystem;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  std::string out;
  std::string variant;
  bool compat_projection = false;
};

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << text;
}

fs::path out_dir(const Common& c) { return c.out.empty() ? fs::path(".") : fs::path(c.out); }

int cmd_dataset(const Common& c, graphs::GppConfig g, const std::string& task, const std::vector<std::string>& families,
                std::ostream& out) {
  if (!c.config.empty()) {
    const auto cfg = load_experiment(c.config);
    if (cfg.dataset_path) throw ConfigError("dataset.path: dataset needs a generation spec, not a file");
    g = cfg.generate;
  }
  if (!task.empty()) {
    const auto t = graphs::parse_task(task);
    if (!t || *t == graphs::Task::BarbellDemo) throw ConfigError("--task: unknown value '" + task + "'");
    g.task = *t;
  }
  if (!families.empty()) {
    g.families.clear();
    for (const auto& f : families) {
      const auto fam = graphs::parse_family(f);
      if (!fam) throw ConfigError("--family: unknown value '" + f + "'");
      g.families.push_back(*fam);
    }
  }
  if (c.seed) g.seed = *c.seed;
  if (g.min_nodes == 0 || g.min_nodes > g.max_nodes) throw ConfigError("--min-nodes: need 1 <= min <= max");
  const auto data = graphs::build_gpp_dataset(g);
  const fs::path path = out_dir(c) / "dataset.jsonl";
  fs::create_directories(out_dir(c));
  graphs::write_dataset(data, path);
  out << "wrote " << data.size() << " graphs to " << path.string() << '\n';
  write_dataset_report(data, out);
  return kExitOk;
}

ExperimentConfig experiment_from(const Common& c) {
  if (c.config.empty()) throw ConfigError("--config: required");
  auto cfg = load_experiment(c.config);
  if (c.seed) cfg.seeds = {*c.seed};
  cfg.train.threads = c.threads;
  if (!c.out.empty()) cfg.out = c.out;
  if (!c.variant.empty()) {
    const auto v = dynamics::parse_variant(c.variant);
    if (!v) throw ConfigError("--variant: unknown value '" + c.variant + "'");
    cfg.model.tango.variant = *v;
  }
  if (c.compat_projection) cfg.model.tango.projection = dynamics::ProjectionForm::Printed;
  return cfg;
}

int cmd_train(const Common& c, std::ostream& out) {
  const auto cfg = experiment_from(c);
  const auto s = run_experiment(cfg, out);
  out << "test " << training::metric_name(cfg.train.metric) << " " << s.test_metric_mean << " +- "
      << s.test_metric_std << " over " << s.seeds.size() << " seed(s); summary in "
      << (cfg.out / "summary.json").string() << '\n';
  return kExitOk;
}

int cmd_eval(const Common& c, const std::string& checkpoint, const std::string& split, const std::string& metric,
             std::ostream& out) {
  auto cfg = experiment_from(c);
  const auto m = training::parse_metric(metric);
  if (!m) throw ConfigError("--metric: unknown value '" + metric + "'");
  if (checkpoint.empty()) throw ConfigError("--checkpoint: required");
  const auto ev = evaluate_checkpoint(cfg, checkpoint, split, *m);
  out << split << ' ' << metric << ' ' << ev.metric << " (mse " << ev.mse << ", mae " << ev.mae << ")\n";
  if (!c.out.empty()) {
    nlohmann::ordered_json j{{"split", split}, {"metric", metric}, {"value", ev.metric}, {"mse", ev.mse},
                             {"mae", ev.mae}};
    write_text(fs::path(c.out) / "eval.json", j.dump(2) + "\n");
  }
  return kExitOk;
}

int cmd_barbell(const Common& c, BarbellOptions opt, const std::string& mode, std::ostream& out) {
  if (mode == "tango") opt.mode = BarbellMode::Tango;
  else if (mode == "dirichlet") opt.mode = BarbellMode::Dirichlet;
  else throw ConfigError("--mode: unknown value '" + mode + "'");
  if (c.seed) opt.seed = *c.seed;
  const auto r = run_barbell(opt);
  const fs::path dir = out_dir(c);
  fs::create_directories(dir);
  const fs::path csv = dir / ("barbell_" + mode + ".csv");
  write_snapshots_csv(r.snapshots, csv);
  write_text(dir / ("barbell_" + mode + ".json"), r.metadata.dump(2) + "\n");
  out << mode << ": right-clique mean " << r.right_clique_mean << " (" << 100.0 * r.right_clique_mean / r.uniform_value
      << "% of uniform " << r.uniform_value << "), MSE to uniform " << r.final_mse << "; snapshots in "
      << csv.string() << '\n';
  return kExitOk;
}

int cmd_landscape(const Common& c, LandscapeOptions opt, std::ostream& out) {
  if (c.seed) opt.seed = *c.seed;
  if (c.compat_projection) opt.projection = dynamics::ProjectionForm::Printed;
  const auto l = run_landscape(opt);
  const fs::path dir = out_dir(c);
  fs::create_directories(dir);
  write_landscape_csv(l, dir / "landscape.csv");
  nlohmann::ordered_json meta{{"seed", opt.seed},         {"extent", opt.extent},
                              {"resolution", opt.resolution}, {"side", l.side},
                              {"zero_head", opt.zero_head}, {"projection", projection_name(opt.projection)}};
  write_text(dir / "landscape.json", meta.dump(2) + "\n");
  out << "wrote " << l.points.size() << " grid points to " << (dir / "landscape.csv").string() << '\n';
  return kExitOk;
}

int cmd_verify(const Common& c, dynamics::VerifyOptions opt, bool break_projection, std::ostream& out) {
  if (c.seed) opt.seed = *c.seed;
  if (break_projection || c.compat_projection) opt.projection = dynamics::ProjectionForm::Printed;
  if (opt.complexity_sizes.size() < 2) throw ConfigError("--sizes: need at least two sizes");
  const auto results = dynamics::run_all_checks(opt);
  print_verify_table(results, out);
  const auto j = verify_json(results);
  if (!c.out.empty()) write_text(fs::path(c.out) / "verify.json", j.dump(2) + "\n");
  const bool pass = j["pass"].get<bool>();
  out << (pass ? "all checks passed" : "verification FAILED") << '\n';
  return pass ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tangential and energy-descent graph dynamics: data, training and verification"};
  app.require_subcommand(1);
  app.fallthrough();
  Common c;
  app.add_option("--config", c.config, "Experiment config (JSON)");
  app.add_option("--seed", c.seed, "Seed; for train it replaces the config's seed list");
  app.add_option("--threads", c.threads, "Worker threads for per-graph work")->check(CLI::PositiveNumber);
  app.add_option("--out", c.out, "Output directory");

  auto* dataset = app.add_subcommand("dataset", "Generate a graph property prediction dataset");
  graphs::GppConfig gpp;
  std::string task;
  std::vector<std::string> families;
  dataset->add_option("--train", gpp.train);
  dataset->add_option("--val", gpp.val);
  dataset->add_option("--test", gpp.test);
  dataset->add_option("--task", task, "diameter, sssp or eccentricity");
  dataset->add_option("--min-nodes", gpp.min_nodes);
  dataset->add_option("--max-nodes", gpp.max_nodes);
  dataset->add_option("--family", families, "Restrict to these families (repeatable)");

  auto* train = app.add_subcommand("train", "Train per seed and write metrics, checkpoints and a summary");
  train->add_option("--variant", c.variant, "full, non-energy, non-tangent or descent-only");
  train->add_flag("--compat-projection", c.compat_projection, "Use the unnormalized projection form");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  std::string checkpoint, split = "test", metric = "log10_mse";
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--split", split);
  eval->add_option("--metric", metric);

  auto* barbell = app.add_subcommand("demo-barbell", "Barbell propagation demo");
  BarbellOptions bopt;
  std::string mode = "tango";
  barbell->add_option("--k", bopt.clique_size, "Clique size")->check(CLI::Range(3, 1000));
  barbell->add_option("--steps", bopt.steps)->check(CLI::PositiveNumber);
  barbell->add_option("--mode", mode, "tango or dirichlet");
  barbell->add_option("--epsilon", bopt.flow_epsilon, "Dirichlet flow step")->check(CLI::PositiveNumber);
  barbell->add_option("--epochs", bopt.epochs)->check(CLI::PositiveNumber);
  barbell->add_option("--d", bopt.d)->check(CLI::PositiveNumber);

  auto* landscape = app.add_subcommand("landscape", "Energy values and vector fields of a d=2 toy model");
  LandscapeOptions lopt;
  landscape->add_option("--extent", lopt.extent)->check(CLI::PositiveNumber);
  landscape->add_option("--resolution", lopt.resolution)->check(CLI::PositiveNumber);
  landscape->add_flag("--zero-head", lopt.zero_head);
  landscape->add_flag("--compat-projection", c.compat_projection);

  auto* verify = app.add_subcommand("verify", "Run the property suite");
  dynamics::VerifyOptions vopt;
  bool break_projection = false;
  verify->add_option("--sizes", vopt.complexity_sizes, "|V|+|E| sizes for the complexity fit");
  verify->add_flag("--break-projection", break_projection, "Negative control: skip projection normalization");
  verify->add_flag("--compat-projection", c.compat_projection);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (dataset->parsed()) return cmd_dataset(c, gpp, task, families, out);
    if (train->parsed()) return cmd_train(c, out);
    if (eval->parsed()) return cmd_eval(c, checkpoint, split, metric, out);
    if (barbell->parsed()) return cmd_barbell(c, bopt, mode, out);
    if (landscape->parsed()) return cmd_landscape(c, lopt, out);
    if (verify->parsed()) return cmd_verify(c, vopt, break_projection, out);
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const nets::CheckpointError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const graphs::DatasetError& e) {
    err << "configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return kExitConfig;
}

}  // namespace tango::cli
