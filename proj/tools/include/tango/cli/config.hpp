#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tango/training/trainer.hpp"

namespace tango::cli {

/// Bad configuration: maps to exit code 2. The message starts with the key
/// path, e.g. "train.lr: expected a number".
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  graphs::Task task = graphs::Task::Diameter;
  /// Existing JSON-lines file; when unset the data is generated from `generate`.
  std::optional<std::filesystem::path> dataset_path;
  graphs::GppConfig generate;
  training::ModelConfig model;
  training::TrainConfig train;
  training::Grid grid;
  std::size_t budget = 0;
  std::vector<std::uint64_t> seeds{0};
  std::filesystem::path out = "runs";
};

/// Unknown keys are rejected so that typos do not silently fall back to defaults.
/// Relative dataset paths resolve against `base_dir`.
ExperimentConfig parse_experiment(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment(const std::filesystem::path& path);
nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

/// Throws ConfigError if the dataset file is missing or empty.
graphs::DatasetSplit load_data(const ExperimentConfig& cfg);

std::string_view projection_name(dynamics::ProjectionForm f) noexcept;

}  // namespace tango::cli
