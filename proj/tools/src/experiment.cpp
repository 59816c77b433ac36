#include <fstream>
#include <map>
#include <ostream>

#include "tango/cli/commands.hpp"

namespace tango::cli {

namespace fs = std::filesystem;
using training::Predictor;

void write_dataset_report(const graphs::DatasetSplit& data, std::ostream& out) {
  const std::pair<const char*, const std::vector<graphs::GraphSample>*> splits[] = {
      {"train", &data.train}, {"val", &data.val}, {"test", &data.test}};
  for (const auto& [name, samples] : splits) {
    std::map<std::string, std::size_t> fams;
    for (const auto& s : *samples) ++fams[s.family];
    out << name << ": " << samples->size();
    const char* sep = " (";
    for (const auto& [f, c] : fams) {
      out << sep << f << " " << c;
      sep = ", ";
    }
    out << (fams.empty() ? "" : ")") << '\n';
  }
}

namespace {

void write_json(const nlohmann::ordered_json& j, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

void write_trajectory(const Predictor& p, const graphs::GraphSample& s, const fs::path& path) {
  std::vector<dynamics::StepTrace> traces;
  ad::Tape tape;
  nets::Binder bind(tape, false);
  training::predict(bind, p, s, &traces);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "step,energy,grad_norm,alpha,beta,tangent_grad_inner\n";
  for (const auto& t : traces) {
    out << t.step_index << ',' << t.energy << ',' << t.grad_norm << ',' << t.alpha << ',' << t.beta << ','
        << t.tangent_grad_inner << '\n';
  }
}

}  // namespace

TrainSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log) {
  const auto data = load_data(cfg);
  fs::create_directories(cfg.out);
  TrainSummary summary;
  summary.config = cfg;
  std::vector<double> metrics;
  for (const auto seed : cfg.seeds) {
    ExperimentConfig resolved = cfg;
    resolved.seeds = {seed};
    resolved.train.seed = seed;
    resolved.grid.clear();
    resolved.budget = 0;

    training::RunHistory hist;
    Predictor model;
    if (cfg.grid.empty()) {
      Rng init(seed);
      model = training::init_predictor(resolved.model, init);
      hist = training::train(model, data, resolved.train);
    } else {
      auto grid = training::grid_search(resolved.model, resolved.train, cfg.grid, data, cfg.budget);
      log << "seed " << seed << ": grid search ran " << grid.runs.size() << " points\n";
      resolved.model = grid.runs[grid.best].model;
      resolved.train = grid.runs[grid.best].train;
      hist = std::move(grid.best_history);
      model = std::move(grid.best_model);
    }

    const fs::path dir = cfg.out / ("seed" + std::to_string(seed));
    fs::create_directories(dir);
    training::write_metrics_csv(hist, dir / "metrics.csv");
    nets::write_checkpoint(hist.best, dir / "checkpoint.json");
    resolved.out = dir;
    write_json(to_json(resolved), dir / "config.json");
    if (model.config.kind == training::ModelKind::Tango) {
      const auto& probe = !data.test.empty() ? data.test.front() : data.train.front();
      write_trajectory(model, probe, dir / "trajectory.csv");
    }

    SeedResult r;
    r.seed = seed;
    r.test_metric = hist.test_metric;
    r.test_mse = hist.test_mse;
    r.best_epoch = hist.best_epoch;
    r.best_val_loss = hist.best_val_loss;
    r.epochs_run = hist.epochs.size();
    log << "seed " << seed << ": " << r.epochs_run << " epochs, best epoch " << r.best_epoch << ", test "
        << training::metric_name(cfg.train.metric) << ' ' << r.test_metric << '\n';
    summary.seeds.push_back(r);
    metrics.push_back(r.test_metric);
  }
  const auto ms = training::mean_std(metrics);
  summary.test_metric_mean = ms.mean;
  summary.test_metric_std = ms.std;
  write_json(summary_json(summary), cfg.out / "summary.json");
  return summary;
}

nlohmann::ordered_json summary_json(const TrainSummary& s) {
  nlohmann::ordered_json j;
  j["config"] = to_json(s.config);
  j["variant"] = dynamics::variant_name(s.config.model.tango.variant);
  j["metric"] = training::metric_name(s.config.train.metric);
  auto seeds = nlohmann::ordered_json::array();
  auto best = nlohmann::ordered_json::array();
  for (const auto& r : s.seeds) {
    nlohmann::ordered_json e;
    e["seed"] = r.seed;
    e["test_metric"] = r.test_metric;
    e["test_mse"] = r.test_mse;
    e["best_epoch"] = r.best_epoch;
    e["best_val_loss"] = r.best_val_loss;
    e["epochs_run"] = r.epochs_run;
    seeds.push_back(e);
    best.push_back(r.best_epoch);
  }
  j["seeds"] = seeds;
  j["test_metric_mean"] = s.test_metric_mean;
  j["test_metric_std"] = s.test_metric_std;
  j["best_epoch"] = best;
  return j;
}

training::Evaluation evaluate_checkpoint(const ExperimentConfig& cfg, const fs::path& checkpoint,
                                         const std::string& split, training::Metric metric) {
  const auto data = load_data(cfg);
  const std::vector<graphs::GraphSample>* samples = nullptr;
  if (split == "train") samples = &data.train;
  else if (split == "val") samples = &data.val;
  else if (split == "test") samples = &data.test;
  else throw ConfigError("split: unknown value '" + split + "'");
  if (samples->empty()) throw ConfigError("split: " + split + " is empty");
  if (!fs::exists(checkpoint)) throw ConfigError("checkpoint: no such file " + checkpoint.string());

  Rng init(0);
  Predictor model = training::init_predictor(cfg.model, init);
  nets::restore(model, nets::read_checkpoint(checkpoint));
  return training::evaluate(model, *samples, metric, cfg.train.threads);
}

}  // namespace tango::cli
