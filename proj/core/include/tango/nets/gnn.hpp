#pragma once

#include <vector>

#include "tango/graphs/graph.hpp"
#include "tango/nets/mlp.hpp"

namespace tango::nets {

enum class LayerKind { Gcn, GatedGcn };

std::string_view layer_kind_name(LayerKind k) noexcept;
std::optional<LayerKind> parse_layer_kind(std::string_view name) noexcept;

/// gcn uses `self` only. gatedgcn uses self (U), neighbor (W), and the
/// source/target gate transforms (A, B).
struct GnnLayerParams {
  LayerKind kind = LayerKind::Gcn;
  Linear self;
  Linear neighbor;
  Linear gate_src;
  Linear gate_dst;

  std::size_t width() const noexcept { return self.in(); }
};

inline constexpr double kGateStab = 1e-6;

/// D^-1/2 (A + I) D^-1/2 H W + b, with degrees counted including the self-loop.
ad::Var gcn_layer(Binder& bind, const GnnLayerParams& p, const graphs::Graph& g, ad::Var h);

/// U h_v + sum_u eta_uv * (W h_u) / (sum_u eta_uv + kGateStab),
/// eta_uv = sigmoid(A h_u + B h_v), without edge features or normalization layers.
ad::Var gatedgcn_layer(Binder& bind, const GnnLayerParams& p, const graphs::Graph& g, ad::Var h);

ad::Var gnn_layer(Binder& bind, const GnnLayerParams& p, const graphs::Graph& g, ad::Var h);

/// Column sums, 1 x d.
ad::Var sum_pool(ad::Var h);

struct BackboneParams {
  MlpParams encoder;  // may be empty (identity)
  std::vector<GnnLayerParams> layers;
  Activation sigma = Activation::Relu;
};

/// encoder, then the message-passing layers with sigma between consecutive
/// layers and none after the last.
ad::Var backbone_forward(Binder& bind, const BackboneParams& p, const graphs::Graph& g, ad::Var h);

GnnLayerParams init_gnn_layer(LayerKind kind, std::size_t d, Rng& rng);
/// Linear encoder d_in -> d followed by `depth` layers of width d.
BackboneParams init_backbone(LayerKind kind, std::size_t d_in, std::size_t d, std::size_t depth, Activation sigma,
                             Rng& rng);

template <MaybeConst<GnnLayerParams> G, class F>
void visit_params(G& p, const std::string& prefix, F&& f) {
  visit_params(p.self, join_name(prefix, "self"), f);
  if (p.kind == LayerKind::GatedGcn) {
    visit_params(p.neighbor, join_name(prefix, "neighbor"), f);
    visit_params(p.gate_src, join_name(prefix, "gate_src"), f);
    visit_params(p.gate_dst, join_name(prefix, "gate_dst"), f);
  }
}

template <MaybeConst<BackboneParams> B, class F>
void visit_params(B& p, const std::string& prefix, F&& f) {
  visit_params(p.encoder, join_name(prefix, "encoder"), f);
  for (std::size_t i = 0; i < p.layers.size(); ++i) visit_params(p.layers[i], join_name(prefix, "layer" + std::to_string(i)), f);
}

}  // namespace tango::nets
