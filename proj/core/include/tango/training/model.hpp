#pragma once

#include <string_view>
#include <vector>

#include "tango/dynamics/tango.hpp"
#include "tango/graphs/dataset.hpp"

namespace tango::training {

/// Tango: encoder, L TANGO layers, readout. Backbone: encoder, residual
/// message-passing layers h + sigma(layer(h)), readout; the plain baseline.
enum class ModelKind { Tango, Backbone };

std::string_view model_kind_name(ModelKind k) noexcept;
std::optional<ModelKind> parse_model_kind(std::string_view name) noexcept;

struct ModelConfig {
  ModelKind kind = ModelKind::Tango;
  dynamics::TangoConfig tango;
  std::size_t gnn_depth = 2;  // L_gnn inside EnergyGNN / TangentGNN
  nets::LayerKind layer = nets::LayerKind::GatedGcn;
  nets::Activation sigma = nets::Activation::Relu;
  /// Baseline depth; 0 picks the depth whose parameter count is closest to
  /// the TANGO model with the same settings.
  std::size_t baseline_depth = 0;
  bool graph_level = true;      // pooled readout for per-graph targets
  bool source_channel = false;  // append a source-indicator input column
  /// Bias-free linear encoder and readout, so the output cannot come from a
  /// constant offset alone.
  bool linear_io = false;

  std::size_t input_channels() const noexcept { return source_channel ? 2 : 1; }
};

/// Task-dependent defaults: pooled readout for diameter, a source column for SSSP.
ModelConfig config_for_task(ModelConfig base, graphs::Task task);

struct Predictor {
  ModelConfig config;
  nets::MlpParams encoder;
  dynamics::EnergyModel energy;
  dynamics::TangentModel tangent;
  std::vector<nets::GnnLayerParams> layers;
  nets::MlpParams readout;
};

Predictor init_predictor(const ModelConfig& cfg, Rng& rng);
std::size_t matched_baseline_depth(const ModelConfig& cfg);

template <nets::MaybeConst<Predictor> P, class F>
void visit_params(P& p, const std::string& prefix, F&& f) {
  visit_params(p.encoder, nets::join_name(prefix, "encoder"), f);
  if (p.config.kind == ModelKind::Tango) {
    visit_params(p.energy, nets::join_name(prefix, "energy"), f);
    visit_params(p.tangent, nets::join_name(prefix, "tangent"), f);
  } else {
    for (std::size_t i = 0; i < p.layers.size(); ++i)
      visit_params(p.layers[i], nets::join_name(prefix, "layer" + std::to_string(i)), f);
  }
  visit_params(p.readout, nets::join_name(prefix, "readout"), f);
}

std::size_t parameter_count(const Predictor& p);
std::vector<ad::Tensor*> parameter_list(Predictor& p);

/// Node inputs for the model: x, plus the source indicator when configured.
ad::Tensor model_input(const ModelConfig& cfg, const graphs::GraphSample& s);

/// 1 x 1 for graph-level configs, n x 1 otherwise. Traces collect TANGO steps.
ad::Var predict(nets::Binder& bind, const Predictor& p, const graphs::GraphSample& s,
                std::vector<dynamics::StepTrace>* traces = nullptr);
/// Final node features before the readout.
ad::Var features(nets::Binder& bind, const Predictor& p, const graphs::GraphSample& s,
                 std::vector<dynamics::StepTrace>* traces = nullptr);
ad::Tensor predict(const Predictor& p, const graphs::GraphSample& s);
/// Readout applied after the encoder and after every layer: L + 1 entries,
/// the last equal to predict(p, s). Node-level configs only.
std::vector<ad::Tensor> predict_trajectory(const Predictor& p, const graphs::GraphSample& s);

struct LossGradient {
  double sse = 0.0;                // sum of squared errors for the sample
  std::vector<ad::Tensor> params;  // d(weight * sse)/d(param), parameter_list order
};

/// Gradient of weight * sse for one sample; one tape per call.
LossGradient loss_gradient(const Predictor& p, const graphs::GraphSample& s, double weight);

}  // namespace tango::training
