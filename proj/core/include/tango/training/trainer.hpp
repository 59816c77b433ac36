#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "tango/nets/checkpoint.hpp"
#include "tango/training/adam.hpp"
#include "tango/training/metrics.hpp"
#include "tango/training/model.hpp"

namespace tango::training {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  std::size_t max_epochs = 1500;
  std::size_t patience = 100;
  double lr = 1e-3;
  double weight_decay = 0.0;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  Metric metric = Metric::Log10Mse;
  std::size_t threads = 1;

  /// Throws std::invalid_argument when lr < 0, batch_size = 0, max_epochs = 0
  /// or patience > max_epochs.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
};

struct RunHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  nets::Checkpoint best;
  double test_metric = 0.0;
  double test_mse = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training with one tape per graph and gradients summed in
/// sample order, so results do not depend on the thread count. The batch loss
/// is the mean squared error over all targets in the batch. Stops once
/// `patience` epochs in a row fail to improve the validation MSE, restores the
/// best parameters into `model` and scores the test split.
/// Throws TrainingError naming the epoch when the loss becomes non-finite.
RunHistory train(Predictor& model, const graphs::DatasetSplit& data, const TrainConfig& cfg,
                 const EpochCallback& on_epoch = {});

/// Gradient of the mean squared error over `batch` with respect to every
/// parameter, in parameter_list order. Returns the loss through `loss`.
std::vector<ad::Tensor> batch_gradient(const Predictor& model, std::span<const graphs::GraphSample* const> batch,
                                       std::size_t threads, double* loss = nullptr);

struct Evaluation {
  double mse = 0.0;
  double mae = 0.0;
  double metric = 0.0;
};

/// Throws std::invalid_argument on an empty split.
Evaluation evaluate(const Predictor& model, std::span<const graphs::GraphSample> split, Metric metric,
                    std::size_t threads = 1);

/// Hyperparameter name -> candidate values (as text, e.g. "0.001" or "relu").
using Grid = std::vector<std::pair<std::string, std::vector<std::string>>>;

/// Table 6 candidates for graph property prediction.
Grid default_gpp_grid();

/// Applies one named hyperparameter. Throws std::invalid_argument on an
/// unknown key or unparsable value.
void apply_hyperparameter(ModelConfig& model, TrainConfig& train, const std::string& key, const std::string& value);

struct GridRun {
  std::map<std::string, std::string> point;
  ModelConfig model;
  TrainConfig train;
  double best_val_loss = 0.0;
};

struct GridResult {
  std::vector<GridRun> runs;
  std::size_t best = 0;
  RunHistory best_history;
  Predictor best_model;
};

/// Sweeps the grid, or a seeded random subset of `budget` points when the
/// grid is larger, and keeps the run with the lowest validation MSE.
/// Throws std::invalid_argument on an empty grid.
GridResult grid_search(const ModelConfig& base_model, const TrainConfig& base_train, const Grid& grid,
                       const graphs::DatasetSplit& data, std::size_t budget = 0);

void write_metrics_csv(const RunHistory& h, const std::filesystem::path& path);

}  // namespace tango::training
