#include "tango/training/model.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace tango::training {

using ad::Var;

std::string_view model_kind_name(ModelKind k) noexcept { return k == ModelKind::Tango ? "tango" : "backbone"; }

std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept {
  if (name == "tango") return ModelKind::Tango;
  if (name == "backbone") return ModelKind::Backbone;
  return std::nullopt;
}

ModelConfig config_for_task(ModelConfig base, graphs::Task task) {
  base.graph_level = graphs::is_graph_task(task);
  base.source_channel = task == graphs::Task::Sssp;
  return base;
}

namespace {

std::size_t linear_count(std::size_t in, std::size_t out) { return in * out + out; }

std::size_t tango_core_count(const ModelConfig& cfg) {
  const std::size_t d = cfg.tango.d;
  const std::size_t layer = cfg.layer == nets::LayerKind::Gcn ? linear_count(d, d) : 4 * linear_count(d, d);
  const std::size_t backbone = linear_count(d, d) + cfg.gnn_depth * layer;
  const std::size_t head = linear_count(d, d) + linear_count(d, 1);
  return 2 * backbone + 3 * head;
}

}  // namespace

std::size_t matched_baseline_depth(const ModelConfig& cfg) {
  const std::size_t d = cfg.tango.d;
  const std::size_t layer = cfg.layer == nets::LayerKind::Gcn ? linear_count(d, d) : 4 * linear_count(d, d);
  const double ratio = static_cast<double>(tango_core_count(cfg)) / static_cast<double>(layer);
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(ratio)));
}

namespace {

// Trained models start from alpha = 1/2 and beta = 0: with Glorot output layers
// the sum-pooled coefficients scale with graph size and a ten-step rollout
// blows up before the first update.
void zero_output_layer(nets::MlpParams& head) {
  auto& last = head.layers.back();
  for (auto& w : last.weight.values()) w = 0.0;
  for (auto& b : last.bias.values()) b = 0.0;
}

}  // namespace

Predictor init_predictor(const ModelConfig& cfg, Rng& rng) {
  cfg.tango.validate();
  Predictor p;
  p.config = cfg;
  const std::size_t d = cfg.tango.d;
  p.encoder = nets::init_mlp({cfg.input_channels(), d}, cfg.sigma, rng, !cfg.linear_io);
  if (cfg.kind == ModelKind::Tango) {
    p.energy = dynamics::init_energy_model(cfg.layer, d, cfg.gnn_depth, cfg.sigma, rng);
    p.tangent = dynamics::init_tangent_model(cfg.layer, d, cfg.gnn_depth, cfg.sigma, rng);
    zero_output_layer(p.energy.alpha_head);
    zero_output_layer(p.tangent.beta_head);
  } else {
    const std::size_t depth = cfg.baseline_depth > 0 ? cfg.baseline_depth : matched_baseline_depth(cfg);
    p.config.baseline_depth = depth;
    for (std::size_t i = 0; i < depth; ++i) p.layers.push_back(nets::init_gnn_layer(cfg.layer, d, rng));
  }
  p.readout = cfg.linear_io ? nets::init_mlp({d, 1}, cfg.sigma, rng, false) : nets::init_mlp({d, d, 1}, cfg.sigma, rng);
  return p;
}

std::size_t parameter_count(const Predictor& p) {
  std::size_t n = 0;
  visit_params(p, "", [&](const std::string&, const ad::Tensor& t) { n += t.size(); });
  return n;
}

std::vector<ad::Tensor*> parameter_list(Predictor& p) {
  std::vector<ad::Tensor*> out;
  visit_params(p, "", [&](const std::string&, ad::Tensor& t) { out.push_back(&t); });
  return out;
}

ad::Tensor model_input(const ModelConfig& cfg, const graphs::GraphSample& s) {
  const std::size_t n = s.graph.num_nodes();
  if (s.x.rows() != n || s.x.cols() != 1) throw ad::ShapeError("model input expects an n x 1 feature column");
  if (!cfg.source_channel) return s.x;
  if (!s.source || *s.source < 0 || static_cast<std::size_t>(*s.source) >= n) {
    throw ad::ShapeError("source channel requested but the sample has no valid source");
  }
  ad::Tensor in(n, 2);
  for (std::size_t v = 0; v < n; ++v) in(v, 0) = s.x[v];
  in(static_cast<std::size_t>(*s.source), 1) = 1.0;
  return in;
}

Var features(nets::Binder& bind, const Predictor& p, const graphs::GraphSample& s,
             std::vector<dynamics::StepTrace>* traces) {
  Var h = nets::mlp_forward(bind, p.encoder, bind.tape().constant(model_input(p.config, s)));
  if (p.config.kind == ModelKind::Tango) {
    return dynamics::rollout(bind, p.energy, p.tangent, s.graph, h, p.config.tango, traces);
  }
  for (const auto& layer : p.layers) h = h + nets::activate(p.config.sigma, nets::gnn_layer(bind, layer, s.graph, h));
  return h;
}

Var predict(nets::Binder& bind, const Predictor& p, const graphs::GraphSample& s,
            std::vector<dynamics::StepTrace>* traces) {
  Var h = features(bind, p, s, traces);
  if (p.config.graph_level) h = nets::sum_pool(h);
  return nets::mlp_forward(bind, p.readout, h);
}

namespace {

Var readout(nets::Binder& bind, const Predictor& p, Var h) {
  if (p.config.graph_level) h = nets::sum_pool(h);
  return nets::mlp_forward(bind, p.readout, h);
}

ad::Tensor encode(const Predictor& p, const graphs::GraphSample& s) {
  ad::Tape tape;
  nets::Binder bind(tape, false);
  return nets::mlp_forward(bind, p.encoder, tape.constant(model_input(p.config, s))).value();
}

/// Adds d(loss)/d(param) for every parameter bound on this tape into `total`.
void pull_back(ad::Tape& tape, const nets::Binder& bind, Var loss, std::span<const ad::Tensor* const> params,
               std::vector<ad::Tensor>& total) {
  std::vector<Var> wrt;
  std::vector<std::size_t> slot;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const Var v = bind.find(*params[k]);
    if (v.valid()) {
      wrt.push_back(v);
      slot.push_back(k);
    }
  }
  const auto grads = tape.gradient(loss, wrt);
  for (std::size_t i = 0; i < slot.size(); ++i) total[slot[i]] += grads[i];
}

}  // namespace

ad::Tensor predict(const Predictor& p, const graphs::GraphSample& s) {
  if (p.config.kind != ModelKind::Tango) {
    ad::Tape tape;
    nets::Binder bind(tape, false);
    return predict(bind, p, s).value();
  }
  const auto h = dynamics::rollout(p.energy, p.tangent, s.graph, encode(p, s), p.config.tango).h;
  ad::Tape tape;
  nets::Binder bind(tape, false);
  return readout(bind, p, tape.constant(h)).value();
}

std::vector<ad::Tensor> predict_trajectory(const Predictor& p, const graphs::GraphSample& s) {
  if (p.config.graph_level) throw std::invalid_argument("predict_trajectory: pooled readout has no node trajectory");
  auto read = [&](const ad::Tensor& h) {
    ad::Tape tape;
    nets::Binder bind(tape, false);
    return readout(bind, p, tape.constant(h)).value();
  };
  ad::Tensor h = encode(p, s);
  std::vector<ad::Tensor> out{read(h)};
  if (p.config.kind == ModelKind::Tango) {
    p.config.tango.validate();
    for (std::size_t l = 0; l < p.config.tango.L; ++l) {
      h = dynamics::tango_step(p.energy, p.tangent, s.graph, h, p.config.tango).h;
      out.push_back(read(h));
    }
  } else {
    for (const auto& layer : p.layers) {
      ad::Tape tape;
      nets::Binder bind(tape, false);
      const Var x = tape.constant(h);
      h = (x + nets::activate(p.config.sigma, nets::gnn_layer(bind, layer, s.graph, x))).value();
      out.push_back(read(h));
    }
  }
  return out;
}

LossGradient loss_gradient(const Predictor& p, const graphs::GraphSample& s, double weight) {
  std::vector<const ad::Tensor*> params;
  visit_params(p, "", [&](const std::string&, const ad::Tensor& t) { params.push_back(&t); });
  LossGradient out;
  for (const auto* t : params) out.params.emplace_back(t->rows(), t->cols());
  ad::Tape tape;
  nets::Binder bind(tape, true);
  const Var sse = ad::sum(ad::square(predict(bind, p, s) - tape.constant(s.target())));
  out.sse = sse.value().item();
  pull_back(tape, bind, ad::scale(sse, weight), params, out.params);
  return out;
}

}  // namespace tango::training
