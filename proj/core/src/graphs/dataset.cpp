#include "tango/graphs/dataset.hpp"

#include <array>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "tango/graphs/targets.hpp"

namespace tango::graphs {

using ordered_json = nlohmann::ordered_json;

std::string_view task_name(Task t) noexcept {
  switch (t) {
    case Task::Diameter: return "diameter";
    case Task::Sssp: return "sssp";
    case Task::Eccentricity: return "eccentricity";
    case Task::BarbellDemo: return "barbell-demo";
  }
  return "unknown";
}

std::optional<Task> parse_task(std::string_view name) noexcept {
  for (const auto t : {Task::Diameter, Task::Sssp, Task::Eccentricity, Task::BarbellDemo}) {
    if (task_name(t) == name) return t;
  }
  return std::nullopt;
}

bool is_graph_task(Task t) noexcept { return t == Task::Diameter; }

ad::Tensor GraphSample::target() const {
  if (y_graph) return ad::Tensor::scalar(*y_graph);
  if (y_node) return ad::Tensor::column(*y_node);
  throw DatasetError("sample has no target");
}

void attach_targets(GraphSample& s) {
  s.y_graph.reset();
  s.y_node.reset();
  s.source.reset();
  if (s.task == Task::BarbellDemo) {
    const auto n = s.graph.num_nodes();
    s.y_node = std::vector<double>(n, 1.0 / static_cast<double>(n));
    return;
  }
  const auto t = compute_targets(s.graph, 0);
  switch (s.task) {
    case Task::Diameter: s.y_graph = t.diameter; break;
    case Task::Sssp:
      s.y_node = t.sssp;
      s.source = 0;
      break;
    case Task::Eccentricity: s.y_node = t.eccentricity; break;
    case Task::BarbellDemo: break;
  }
}

namespace {

GraphSample random_sample(const GppConfig& cfg, Rng& rng) {
  const auto family = cfg.families[rng.below(cfg.families.size())];
  const auto n = static_cast<std::size_t>(
      rng.between(static_cast<std::int64_t>(cfg.min_nodes), static_cast<std::int64_t>(cfg.max_nodes)));
  const Graph canonical = generate_family(family, n, rng);
  std::vector<std::int32_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<std::int32_t>(perm));

  GraphSample s;
  s.graph = canonical.permuted(perm);
  s.x = ad::Tensor(n, 1);
  for (std::size_t v = 0; v < n; ++v) s.x[v] = rng.uniform();
  s.task = cfg.task;
  s.family = std::string(family_name(family));
  attach_targets(s);
  return s;
}

}  // namespace

DatasetSplit build_gpp_dataset(const GppConfig& cfg) {
  if (cfg.families.empty()) throw DatasetError("dataset config lists no families");
  if (cfg.min_nodes == 0 || cfg.min_nodes > cfg.max_nodes) throw DatasetError("invalid node count range");
  if (cfg.task == Task::BarbellDemo) throw DatasetError("barbell-demo is not a generated benchmark task");
  DatasetSplit out;
  out.seed = cfg.seed;
  Rng root(cfg.seed);
  const std::array<std::pair<std::vector<GraphSample>*, std::size_t>, 3> parts{
      {{&out.train, cfg.train}, {&out.val, cfg.val}, {&out.test, cfg.test}}};
  for (std::size_t p = 0; p < parts.size(); ++p) {
    Rng rng = root.fork(p);
    auto& [dst, count] = parts[p];
    dst->reserve(count);
    for (std::size_t i = 0; i < count; ++i) dst->push_back(random_sample(cfg, rng));
  }
  return out;
}

GraphSample barbell_demo(std::size_t clique_size) {
  GraphSample s;
  s.graph = barbell_graph(clique_size);
  s.x = ad::Tensor(s.graph.num_nodes(), 1);
  s.x[0] = 1.0;
  s.task = Task::BarbellDemo;
  s.family = "barbell";
  attach_targets(s);
  return s;
}

std::string dump_sample(const GraphSample& s, std::string_view split) {
  ordered_json j;
  j["n"] = s.graph.num_nodes();
  auto edges = ordered_json::array();
  for (const auto& e : s.graph.edges()) edges.push_back({e.u, e.v});
  j["edges"] = std::move(edges);
  auto x = ordered_json::array();
  for (std::size_t r = 0; r < s.x.rows(); ++r) {
    auto row = ordered_json::array();
    for (std::size_t c = 0; c < s.x.cols(); ++c) row.push_back(s.x(r, c));
    x.push_back(std::move(row));
  }
  j["x"] = std::move(x);
  j["task"] = task_name(s.task);
  j["y_graph"] = s.y_graph ? ordered_json(*s.y_graph) : ordered_json(nullptr);
  j["y_node"] = s.y_node ? ordered_json(*s.y_node) : ordered_json(nullptr);
  j["source"] = s.source ? ordered_json(*s.source) : ordered_json(nullptr);
  j["family"] = s.family;
  j["split"] = split;
  return j.dump();
}

void write_dataset(const DatasetSplit& data, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DatasetError("cannot open " + path.string() + " for writing");
  for (const auto& [name, part] : {std::pair{"train", &data.train}, {"val", &data.val}, {"test", &data.test}}) {
    for (const auto& s : *part) out << dump_sample(s, name) << '\n';
  }
  out.flush();
  if (!out) throw DatasetError("write failed for " + path.string());
}

namespace {

GraphSample parse_sample(const ordered_json& j) {
  const auto n = j.at("n").get<std::size_t>();
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 2) throw DatasetError("edge must be a [u, v] pair");
    edges.push_back({e[0].get<std::int32_t>(), e[1].get<std::int32_t>()});
  }
  GraphSample s;
  s.graph = Graph(n, std::move(edges));

  const auto& x = j.at("x");
  if (x.size() != n) throw DatasetError("x has " + std::to_string(x.size()) + " rows, expected " + std::to_string(n));
  const std::size_t cols = n == 0 ? 0 : x[0].size();
  s.x = ad::Tensor(n, cols);
  for (std::size_t r = 0; r < n; ++r) {
    if (x[r].size() != cols) throw DatasetError("ragged x row " + std::to_string(r));
    for (std::size_t c = 0; c < cols; ++c) s.x(r, c) = x[r][c].get<double>();
  }

  const auto task = parse_task(j.at("task").get<std::string>());
  if (!task) throw DatasetError("unknown task '" + j.at("task").get<std::string>() + "'");
  s.task = *task;
  if (!j.at("y_graph").is_null()) s.y_graph = j["y_graph"].get<double>();
  if (!j.at("y_node").is_null()) {
    s.y_node = j["y_node"].get<std::vector<double>>();
    if (s.y_node->size() != n) throw DatasetError("y_node length does not match n");
  }
  if (!j.at("source").is_null()) s.source = j["source"].get<std::int32_t>();
  if (s.y_graph.has_value() == s.y_node.has_value()) {
    throw DatasetError("exactly one of y_graph and y_node must be set");
  }
  s.family = j.at("family").get<std::string>();
  return s;
}

}  // namespace

DatasetSplit read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DatasetError("cannot open " + path.string());
  DatasetSplit out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto where = path.string() + ":" + std::to_string(lineno) + ": ";
    try {
      const auto j = ordered_json::parse(line);
      const auto split = j.at("split").get<std::string>();
      auto sample = parse_sample(j);
      if (split == "train") {
        out.train.push_back(std::move(sample));
      } else if (split == "val") {
        out.val.push_back(std::move(sample));
      } else if (split == "test") {
        out.test.push_back(std::move(sample));
      } else {
        throw DatasetError("unknown split '" + split + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      throw DatasetError(where + e.what());
    } catch (const std::exception& e) {
      throw DatasetError(where + e.what());
    }
  }
  out.empty_file = out.size() == 0;
  return out;
}

}  // namespace tango::graphs
