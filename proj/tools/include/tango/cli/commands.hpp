#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tango/cli/config.hpp"
#include "tango/dynamics/verification.hpp"

namespace tango::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitVerifyFailed = 1;
inline constexpr int kExitConfig = 2;

/// Parses argv and dispatches to a subcommand; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// dataset

/// Writes the split as JSON lines and prints counts per split and family.
void write_dataset_report(const graphs::DatasetSplit& data, std::ostream& out);

// train / eval

struct SeedResult {
  std::uint64_t seed = 0;
  double test_metric = 0.0;
  double test_mse = 0.0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t epochs_run = 0;
};

struct TrainSummary {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  double test_metric_mean = 0.0;
  double test_metric_std = 0.0;
};

/// One training run (or grid search) per seed. Artifacts under cfg.out:
/// summary.json, and per seed seed<N>/{metrics.csv, checkpoint.json,
/// config.json, trajectory.csv}. `log` gets per-seed progress.
TrainSummary run_experiment(const ExperimentConfig& cfg, std::ostream& log);
nlohmann::ordered_json summary_json(const TrainSummary& s);

/// Loads `config` (a per-seed config.json or the experiment config), restores
/// the checkpoint and scores the named split.
training::Evaluation evaluate_checkpoint(const ExperimentConfig& cfg, const std::filesystem::path& checkpoint,
                                         const std::string& split, training::Metric metric);

// demo-barbell

enum class BarbellMode { Tango, Dirichlet };

struct BarbellOptions {
  std::size_t clique_size = 5;
  std::size_t steps = 50;
  BarbellMode mode = BarbellMode::Tango;
  double flow_epsilon = 0.02;  // Dirichlet step; 2 / lambda_max is about 0.3 for k = 5
  // Tango mode budget.
  double tango_epsilon = 0.1;
  std::size_t epochs = 500;
  std::size_t d = 8;
  double lr = 1e-2;
  std::uint64_t seed = 0;
};

struct BarbellResult {
  std::vector<ad::Tensor> snapshots;  // steps + 1 node-value columns
  double right_clique_mean = 0.0;
  double uniform_value = 0.0;
  double final_mse = 0.0;  // to the uniform target
  nlohmann::ordered_json metadata;
};

BarbellResult run_barbell(const BarbellOptions& opt);
/// H_0 followed by `steps` Dirichlet flow steps.
std::vector<ad::Tensor> dirichlet_rollout(const graphs::Graph& g, ad::Tensor h0, double epsilon, std::size_t steps);
/// step,node,value
void write_snapshots_csv(const std::vector<ad::Tensor>& snapshots, const std::filesystem::path& path);

// landscape

struct LandscapeOptions {
  double extent = 2.0;      // grid spans [-extent, extent]^2
  double resolution = 0.1;  // grid spacing
  std::uint64_t seed = 0;
  bool zero_head = false;  // zero the energy head: constant V
  dynamics::ProjectionForm projection = dynamics::ProjectionForm::Orthogonal;
};

struct LandscapePoint {
  double x = 0.0, y = 0.0;
  double energy = 0.0;
  double alpha = 0.0, beta = 0.0;
  double descent[2]{};  // -alpha grad V
  double tangent[2]{};  // beta T
  double total[2]{};
};

struct Landscape {
  std::size_t side = 0;  // points per axis; row-major with x varying fastest
  double resolution = 0.0;
  std::vector<LandscapePoint> points;
};

/// Random d = 2 energy and tangent models on a single-node graph, evaluated
/// on a square grid of feature values.
Landscape run_landscape(const LandscapeOptions& opt);
void write_landscape_csv(const Landscape& l, const std::filesystem::path& path);

// verify

nlohmann::ordered_json verify_json(const std::vector<dynamics::CheckResult>& results);
void print_verify_table(const std::vector<dynamics::CheckResult>& results, std::ostream& out);

}  // namespace tango::cli
