#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tango/autodiff/tensor.hpp"
#include "tango/graphs/generators.hpp"
#include "tango/graphs/graph.hpp"

namespace tango::graphs {

class DatasetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Task { Diameter, Sssp, Eccentricity, BarbellDemo };

std::string_view task_name(Task t) noexcept;
std::optional<Task> parse_task(std::string_view name) noexcept;
/// Diameter predicts one number per graph; the others one per node.
bool is_graph_task(Task t) noexcept;

struct GraphSample {
  Graph graph;
  ad::Tensor x;  // n x 1 node identifiers
  Task task = Task::Diameter;
  std::optional<double> y_graph;
  std::optional<std::vector<double>> y_node;
  std::optional<std::int32_t> source;
  std::string family;

  /// Target as a tensor: 1x1 for graph tasks, n x 1 for node tasks.
  ad::Tensor target() const;

  friend bool operator==(const GraphSample&, const GraphSample&) = default;
};

struct DatasetSplit {
  std::vector<GraphSample> train;
  std::vector<GraphSample> val;
  std::vector<GraphSample> test;
  std::uint64_t seed = 0;
  /// Set by read_dataset when the file held no samples at all.
  bool empty_file = false;

  std::size_t size() const noexcept { return train.size() + val.size() + test.size(); }
};

struct GppConfig {
  std::size_t train = 5120;
  std::size_t val = 640;
  std::size_t test = 1280;
  Task task = Task::Diameter;
  std::uint64_t seed = 0;
  std::size_t min_nodes = 25;
  std::size_t max_nodes = 35;
  std::vector<Family> families{kAllFamilies.begin(), kAllFamilies.end()};
};

/// Attaches the task target to a sample whose graph is set. SSSP uses node 0.
void attach_targets(GraphSample& s);

/// Graph property prediction data: family uniform per graph, node count
/// uniform in [min_nodes, max_nodes], nodes randomly relabeled, one feature
/// per node uniform in [0, 1). Each split draws from its own seeded stream.
DatasetSplit build_gpp_dataset(const GppConfig& cfg);

/// Barbell with a unit mass on node 0 and the uniform vector 1/n as target.
GraphSample barbell_demo(std::size_t clique_size);

/// One JSON object per line, tagged with its split.
void write_dataset(const DatasetSplit& data, const std::filesystem::path& path);
std::string dump_sample(const GraphSample& s, std::string_view split);

/// Throws DatasetError naming the offending line on malformed input.
DatasetSplit read_dataset(const std::filesystem::path& path);

}  // namespace tango::graphs
