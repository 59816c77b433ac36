#include "tango/cli/config.hpp"

#include <concepts>
#include <fstream>
#include <set>

namespace tango::cli {

using nlohmann::json;

std::string_view projection_name(dynamics::ProjectionForm f) noexcept {
  return f == dynamics::ProjectionForm::Orthogonal ? "orthogonal" : "printed";
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& why) { throw ConfigError(path + ": " + why); }

/// Typed access to one JSON object with key-path error messages.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_.empty() ? "<root>" : path_, "expected an object");
  }

  void allow(std::initializer_list<const char*> keys) const {
    const std::set<std::string> ok(keys.begin(), keys.end());
    for (const auto& [k, _] : j_.items())
      if (!ok.contains(k)) fail(key(k), "unknown key");
  }

  bool has(const char* k) const { return j_.contains(k); }
  const json& at(const char* k) const { return j_.at(k); }
  std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  template <std::unsigned_integral U>
  void read(const char* k, U& dst) const {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) fail(key(k), "expected a non-negative integer");
    dst = v.get<U>();
  }
  void read(const char* k, double& dst) const {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_number()) fail(key(k), "expected a number");
    dst = v.get<double>();
  }
  void read(const char* k, bool& dst) const {
    if (!has(k)) return;
    const auto& v = j_.at(k);
    if (!v.is_boolean()) fail(key(k), "expected true or false");
    dst = v.get<bool>();
  }
  std::optional<std::string> text(const char* k) const {
    if (!has(k)) return std::nullopt;
    const auto& v = j_.at(k);
    if (!v.is_string()) fail(key(k), "expected a string");
    return v.get<std::string>();
  }

  template <class T, class Parse>
  void choice(const char* k, T& dst, Parse parse) const {
    if (const auto s = text(k)) {
      const auto v = parse(*s);
      if (!v) fail(key(k), "unknown value '" + *s + "'");
      dst = *v;
    }
  }

 private:
  const json& j_;
  std::string path_;
};

std::optional<dynamics::ProjectionForm> parse_projection(std::string_view s) {
  if (s == "orthogonal") return dynamics::ProjectionForm::Orthogonal;
  if (s == "printed") return dynamics::ProjectionForm::Printed;
  return std::nullopt;
}

void read_dataset_section(const Section& s, ExperimentConfig& cfg, const std::filesystem::path& base_dir) {
  s.allow({"path", "train", "val", "test", "seed", "min_nodes", "max_nodes", "families"});
  if (const auto p = s.text("path")) {
    std::filesystem::path path(*p);
    cfg.dataset_path = path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  }
  auto& g = cfg.generate;
  s.read("train", g.train);
  s.read("val", g.val);
  s.read("test", g.test);
  s.read("seed", g.seed);
  s.read("min_nodes", g.min_nodes);
  s.read("max_nodes", g.max_nodes);
  if (g.min_nodes == 0 || g.min_nodes > g.max_nodes) fail(s.key("min_nodes"), "need 1 <= min_nodes <= max_nodes");
  if (s.has("families")) {
    const auto& arr = s.at("families");
    if (!arr.is_array() || arr.empty()) fail(s.key("families"), "expected a nonempty array of family names");
    g.families.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto where = s.key("families") + "[" + std::to_string(i) + "]";
      if (!arr[i].is_string()) fail(where, "expected a string");
      const auto f = graphs::parse_family(arr[i].get<std::string>());
      if (!f) fail(where, "unknown family '" + arr[i].get<std::string>() + "'");
      g.families.push_back(*f);
    }
  }
}

void read_model_section(const Section& s, training::ModelConfig& m) {
  s.allow({"kind", "L", "L_gnn", "d", "epsilon", "layer", "activation", "variant", "projection", "baseline_depth",
           "linear_io", "grad_zero_tol"});
  s.choice("kind", m.kind, training::parse_model_kind);
  s.read("L", m.tango.L);
  s.read("L_gnn", m.gnn_depth);
  s.read("d", m.tango.d);
  s.read("epsilon", m.tango.epsilon);
  s.read("grad_zero_tol", m.tango.grad_zero_tol);
  s.choice("layer", m.layer, nets::parse_layer_kind);
  s.choice("activation", m.sigma, nets::parse_activation);
  s.choice("variant", m.tango.variant, dynamics::parse_variant);
  s.choice("projection", m.tango.projection, parse_projection);
  s.read("baseline_depth", m.baseline_depth);
  s.read("linear_io", m.linear_io);
  try {
    m.tango.validate();
  } catch (const std::invalid_argument& e) {
    fail("model", e.what());
  }
  if (m.gnn_depth == 0) fail(s.key("L_gnn"), "must be at least 1");
}

void read_train_section(const Section& s, training::TrainConfig& t) {
  s.allow({"max_epochs", "patience", "lr", "weight_decay", "batch_size", "metric", "threads"});
  s.read("max_epochs", t.max_epochs);
  s.read("patience", t.patience);
  s.read("lr", t.lr);
  s.read("weight_decay", t.weight_decay);
  s.read("batch_size", t.batch_size);
  s.read("threads", t.threads);
  s.choice("metric", t.metric, training::parse_metric);
  try {
    t.validate();
  } catch (const std::invalid_argument& e) {
    fail("train", e.what());
  }
}

std::string grid_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace

ExperimentConfig parse_experiment(const json& j, const std::filesystem::path& base_dir) {
  const Section root(j, "");
  root.allow({"task", "dataset", "model", "train", "grid", "budget", "seeds", "out"});
  ExperimentConfig cfg;
  root.choice("task", cfg.task, graphs::parse_task);
  if (cfg.task == graphs::Task::BarbellDemo) fail("task", "barbell-demo is only available through demo-barbell");
  if (root.has("dataset")) read_dataset_section(Section(root.at("dataset"), "dataset"), cfg, base_dir);
  cfg.generate.task = cfg.task;
  if (root.has("model")) read_model_section(Section(root.at("model"), "model"), cfg.model);
  cfg.model = training::config_for_task(cfg.model, cfg.task);
  if (root.has("train")) read_train_section(Section(root.at("train"), "train"), cfg.train);

  if (root.has("grid")) {
    const Section grid(root.at("grid"), "grid");
    for (const auto& [key, values] : root.at("grid").items()) {
      const auto where = grid.key(key);
      if (!values.is_array() || values.empty()) fail(where, "expected a nonempty array");
      std::vector<std::string> texts;
      for (const auto& v : values) texts.push_back(grid_text(v));
      // Dry-run every value so a bad entry is reported before any training.
      for (const auto& t : texts) {
        auto m = cfg.model;
        auto tr = cfg.train;
        try {
          training::apply_hyperparameter(m, tr, key, t);
        } catch (const std::invalid_argument& e) {
          fail(where, e.what());
        }
      }
      cfg.grid.emplace_back(key, std::move(texts));
    }
  }
  root.read("budget", cfg.budget);
  if (root.has("seeds")) {
    const auto& arr = root.at("seeds");
    if (!arr.is_array() || arr.empty()) fail("seeds", "expected a nonempty array of integers");
    cfg.seeds.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      if (!arr[i].is_number_integer() || arr[i].get<std::int64_t>() < 0) {
        fail("seeds[" + std::to_string(i) + "]", "expected a non-negative integer");
      }
      cfg.seeds.push_back(arr[i].get<std::uint64_t>());
    }
  }
  if (const auto out = root.text("out")) cfg.out = *out;
  return cfg;
}

ExperimentConfig load_experiment(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_experiment(j, path.parent_path());
}

nlohmann::ordered_json to_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["task"] = graphs::task_name(cfg.task);
  auto& ds = j["dataset"];
  if (cfg.dataset_path) {
    ds["path"] = std::filesystem::absolute(*cfg.dataset_path).string();
  } else {
    const auto& g = cfg.generate;
    ds["train"] = g.train;
    ds["val"] = g.val;
    ds["test"] = g.test;
    ds["seed"] = g.seed;
    ds["min_nodes"] = g.min_nodes;
    ds["max_nodes"] = g.max_nodes;
    auto fams = nlohmann::ordered_json::array();
    for (const auto f : g.families) fams.push_back(graphs::family_name(f));
    ds["families"] = fams;
  }
  const auto& m = cfg.model;
  auto& mj = j["model"];
  mj["kind"] = training::model_kind_name(m.kind);
  mj["L"] = m.tango.L;
  mj["L_gnn"] = m.gnn_depth;
  mj["d"] = m.tango.d;
  mj["epsilon"] = m.tango.epsilon;
  mj["grad_zero_tol"] = m.tango.grad_zero_tol;
  mj["layer"] = nets::layer_kind_name(m.layer);
  mj["activation"] = nets::activation_name(m.sigma);
  mj["variant"] = dynamics::variant_name(m.tango.variant);
  mj["projection"] = projection_name(m.tango.projection);
  mj["baseline_depth"] = m.baseline_depth;
  mj["linear_io"] = m.linear_io;
  const auto& t = cfg.train;
  auto& tj = j["train"];
  tj["max_epochs"] = t.max_epochs;
  tj["patience"] = t.patience;
  tj["lr"] = t.lr;
  tj["weight_decay"] = t.weight_decay;
  tj["batch_size"] = t.batch_size;
  tj["metric"] = training::metric_name(t.metric);
  tj["threads"] = t.threads;
  if (!cfg.grid.empty()) {
    auto& gj = j["grid"];
    for (const auto& [k, v] : cfg.grid) gj[k] = v;
    j["budget"] = cfg.budget;
  }
  j["seeds"] = cfg.seeds;
  j["out"] = cfg.out.string();
  return j;
}

graphs::DatasetSplit load_data(const ExperimentConfig& cfg) {
  if (!cfg.dataset_path) return graphs::build_gpp_dataset(cfg.generate);
  if (!std::filesystem::exists(*cfg.dataset_path)) {
    throw ConfigError("dataset.path: no such file " + cfg.dataset_path->string());
  }
  auto data = graphs::read_dataset(*cfg.dataset_path);
  if (data.train.empty()) throw ConfigError("dataset.path: " + cfg.dataset_path->string() + " has no training samples");
  for (const auto* split : {&data.train, &data.val, &data.test}) {
    for (const auto& s : *split) {
      if (s.task != cfg.task) {
        throw ConfigError("task: config says " + std::string(graphs::task_name(cfg.task)) + " but the dataset holds " +
                          std::string(graphs::task_name(s.task)) + " samples");
      }
    }
  }
  return data;
}

}  // namespace tango::cli
