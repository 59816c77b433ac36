#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "tango/cli/commands.hpp"

namespace tango::cli {

namespace fs = std::filesystem;
using ad::Tensor;

std::vector<Tensor> dirichlet_rollout(const graphs::Graph& g, Tensor h0, double epsilon, std::size_t steps) {
  std::vector<Tensor> out{std::move(h0)};
  for (std::size_t s = 0; s < steps; ++s) out.push_back(dynamics::dirichlet_flow_step(g, out.back(), epsilon).h);
  return out;
}

void write_snapshots_csv(const std::vector<Tensor>& snapshots, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "step,node,value\n";
  for (std::size_t s = 0; s < snapshots.size(); ++s)
    for (std::size_t v = 0; v < snapshots[s].rows(); ++v) out << s << ',' << v << ',' << snapshots[s](v, 0) << '\n';
}

BarbellResult run_barbell(const BarbellOptions& opt) {
  if (opt.steps == 0) throw std::invalid_argument("demo-barbell: steps must be at least 1");
  const auto sample = graphs::barbell_demo(opt.clique_size);
  const std::size_t k = opt.clique_size;
  BarbellResult r;
  r.uniform_value = 1.0 / static_cast<double>(2 * k);
  auto& meta = r.metadata;
  meta["clique_size"] = k;
  meta["steps"] = opt.steps;

  if (opt.mode == BarbellMode::Dirichlet) {
    meta["mode"] = "dirichlet";
    meta["epsilon"] = opt.flow_epsilon;
    meta["unstable"] = dynamics::dirichlet_flow_step(sample.graph, sample.x, opt.flow_epsilon).unstable;
    r.snapshots = dirichlet_rollout(sample.graph, sample.x, opt.flow_epsilon, opt.steps);
  } else {
    training::ModelConfig m;
    m.tango.L = opt.steps;
    m.tango.d = opt.d;
    m.tango.epsilon = opt.tango_epsilon;
    m.gnn_depth = 1;
    m.graph_level = false;
    m.linear_io = true;
    training::TrainConfig t;
    t.max_epochs = opt.epochs;
    t.patience = opt.epochs;
    t.lr = opt.lr;
    t.batch_size = 1;
    t.seed = opt.seed;
    graphs::DatasetSplit data;
    data.train.push_back(sample);
    Rng init(opt.seed);
    auto model = training::init_predictor(m, init);
    const auto hist = training::train(model, data, t);
    r.snapshots = training::predict_trajectory(model, sample);
    meta["mode"] = "tango";
    meta["epochs"] = opt.epochs;
    meta["d"] = opt.d;
    meta["L"] = opt.steps;
    meta["epsilon"] = opt.tango_epsilon;
    meta["lr"] = opt.lr;
    meta["seed"] = opt.seed;
    meta["best_epoch"] = hist.best_epoch;
  }

  const auto& last = r.snapshots.back();
  double right = 0.0;
  for (std::size_t v = k; v < 2 * k; ++v) right += last[v];
  r.right_clique_mean = right / static_cast<double>(k);
  r.final_mse = training::mse(last, sample.target());
  meta["right_clique_mean"] = r.right_clique_mean;
  meta["uniform_value"] = r.uniform_value;
  meta["right_clique_fraction"] = r.right_clique_mean / r.uniform_value;
  meta["final_mse"] = r.final_mse;
  return r;
}

Landscape run_landscape(const LandscapeOptions& opt) {
  if (!(opt.resolution > 0.0) || !(opt.extent > 0.0)) {
    throw std::invalid_argument("landscape: extent and resolution must be positive");
  }
  constexpr std::size_t d = 2;
  Rng rng(opt.seed);
  auto energy = dynamics::init_energy_model(nets::LayerKind::GatedGcn, d, 1, nets::Activation::Tanh, rng);
  const auto tangent = dynamics::init_tangent_model(nets::LayerKind::GatedGcn, d, 1, nets::Activation::Tanh, rng);
  if (opt.zero_head) {
    visit_params(energy.head, "", [](const std::string&, Tensor& t) {
      for (auto& v : t.values()) v = 0.0;
    });
  }
  const graphs::Graph g(1, {});
  dynamics::TangoConfig cfg;
  cfg.d = d;
  const double tol = dynamics::zero_threshold(cfg, 1, d);

  Landscape l;
  l.resolution = opt.resolution;
  l.side = static_cast<std::size_t>(std::floor(2.0 * opt.extent / opt.resolution + 0.5)) + 1;
  l.points.reserve(l.side * l.side);
  for (std::size_t iy = 0; iy < l.side; ++iy) {
    for (std::size_t ix = 0; ix < l.side; ++ix) {
      LandscapePoint p;
      p.x = -opt.extent + static_cast<double>(ix) * opt.resolution;
      p.y = -opt.extent + static_cast<double>(iy) * opt.resolution;
      const Tensor h = Tensor::row({p.x, p.y});
      p.energy = dynamics::energy_value(energy, g, h);
      const Tensor grad = dynamics::energy_gradient(energy, g, h);
      p.alpha = dynamics::alpha_coeff(energy, dynamics::energy_intermediate(energy, g, h));
      const Tensor m = dynamics::tangent_raw(tangent, g, h);
      p.beta = dynamics::beta_coeff(tangent, m);
      const Tensor t = dynamics::project_orthogonal(m, grad, tol, opt.projection);
      for (std::size_t c = 0; c < d; ++c) {
        p.descent[c] = -p.alpha * grad[c];
        p.tangent[c] = p.beta * t[c];
        p.total[c] = p.descent[c] + p.tangent[c];
      }
      l.points.push_back(p);
    }
  }
  return l;
}

void write_landscape_csv(const Landscape& l, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.precision(17);
  out << "x,y,V,alpha,beta,descent_x,descent_y,tangent_x,tangent_y,total_x,total_y\n";
  for (const auto& p : l.points) {
    out << p.x << ',' << p.y << ',' << p.energy << ',' << p.alpha << ',' << p.beta << ',' << p.descent[0] << ','
        << p.descent[1] << ',' << p.tangent[0] << ',' << p.tangent[1] << ',' << p.total[0] << ',' << p.total[1]
        << '\n';
  }
}

nlohmann::ordered_json verify_json(const std::vector<dynamics::CheckResult>& results) {
  nlohmann::ordered_json j;
  bool all = true;
  auto checks = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    all = all && r.pass;
    checks.push_back({{"check", r.check}, {"pass", r.pass}, {"value", r.value}, {"threshold", r.threshold}});
  }
  j["pass"] = all;
  j["checks"] = checks;
  return j;
}

void print_verify_table(const std::vector<dynamics::CheckResult>& results, std::ostream& out) {
  const auto flags = out.flags();
  out << std::left << std::setw(26) << "check" << std::setw(6) << "pass" << std::setw(14) << "value"
      << std::setw(12) << "threshold" << "detail\n";
  for (const auto& r : results) {
    out << std::left << std::setw(26) << r.check << std::setw(6) << (r.pass ? "yes" : "NO") << std::setw(14)
        << std::setprecision(6) << r.value << std::setw(12) << r.threshold << r.detail << '\n';
  }
  out.flags(flags);
}

}  // namespace tango::cli
