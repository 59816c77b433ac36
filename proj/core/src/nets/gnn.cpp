#include "tango/nets/gnn.hpp"

#include <cmath>

namespace tango::nets {

using ad::Var;

std::string_view layer_kind_name(LayerKind k) noexcept {
  return k == LayerKind::Gcn ? "gcn" : "gatedgcn";
}

std::optional<LayerKind> parse_layer_kind(std::string_view name) noexcept {
  if (name == "gcn") return LayerKind::Gcn;
  if (name == "gatedgcn") return LayerKind::GatedGcn;
  return std::nullopt;
}

namespace {

void check_rows(const graphs::Graph& g, Var h, const char* where) {
  if (h.rows() != g.num_nodes()) {
    throw ad::ShapeError(std::string(where) + ": " + std::to_string(h.rows()) + " rows for " +
                         std::to_string(g.num_nodes()) + " nodes");
  }
}

}  // namespace

Var gcn_layer(Binder& bind, const GnnLayerParams& p, const graphs::Graph& g, Var h) {
  check_rows(g, h, "gcn_layer");
  const std::size_t n = g.num_nodes();
  const Var hw = ad::matmul(h, bind(p.self.weight));
  const std::size_t d = hw.cols();

  ad::Tensor self_coef(n, d);
  for (std::size_t v = 0; v < n; ++v) {
    const double c = 1.0 / static_cast<double>(g.degree(v) + 1);
    for (std::size_t j = 0; j < d; ++j) self_coef(v, j) = c;
  }
  Var out = ad::mul(hw, bind.tape().constant(std::move(self_coef)));

  if (g.num_arcs() > 0) {
    const auto& src = *g.arc_src();
    const auto& dst = *g.arc_dst();
    ad::Tensor arc_coef(src.size(), d);
    for (std::size_t e = 0; e < src.size(); ++e) {
      const double c = 1.0 / std::sqrt(static_cast<double>((g.degree(static_cast<std::size_t>(src[e])) + 1) *
                                                           (g.degree(static_cast<std::size_t>(dst[e])) + 1)));
      for (std::size_t j = 0; j < d; ++j) arc_coef(e, j) = c;
    }
    const Var msg = ad::mul(ad::gather_rows(hw, g.arc_src()), bind.tape().constant(std::move(arc_coef)));
    out = out + ad::scatter_add_rows(msg, g.arc_dst(), n);
  }
  if (!p.self.bias.empty()) out = ad::add_row(out, bind(p.self.bias));
  return out;
}

Var gatedgcn_layer(Binder& bind, const GnnLayerParams& p, const graphs::Graph& g, Var h) {
  check_rows(g, h, "gatedgcn_layer");
  const std::size_t n = g.num_nodes();
  Var out = linear(bind, p.self, h);
  if (g.num_arcs() == 0) return out;

  const Var wh = linear(bind, p.neighbor, h);
  const Var ah = linear(bind, p.gate_src, h);
  const Var bh = linear(bind, p.gate_dst, h);
  const Var eta = ad::sigmoid(ad::gather_add(ah, g.arc_src(), bh, g.arc_dst()));
  const Var num = ad::scatter_add_rows(ad::gather_mul(eta, wh, g.arc_src()), g.arc_dst(), n);
  const Var den = ad::add_scalar(ad::scatter_add_rows(eta, g.arc_dst(), n), kGateStab);
  return out + num / den;
}

Var gnn_layer(Binder& bind, const GnnLayerParams& p, const graphs::Graph& g, Var h) {
  return p.kind == LayerKind::Gcn ? gcn_layer(bind, p, g, h) : gatedgcn_layer(bind, p, g, h);
}

Var sum_pool(Var h) { return ad::sum_rows(h); }

Var backbone_forward(Binder& bind, const BackboneParams& p, const graphs::Graph& g, Var h) {
  h = mlp_forward(bind, p.encoder, h);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    h = gnn_layer(bind, p.layers[i], g, h);
    if (i + 1 < p.layers.size()) h = activate(p.sigma, h);
  }
  return h;
}

GnnLayerParams init_gnn_layer(LayerKind kind, std::size_t d, Rng& rng) {
  GnnLayerParams p;
  p.kind = kind;
  p.self = init_linear(d, d, rng);
  if (kind == LayerKind::GatedGcn) {
    p.neighbor = init_linear(d, d, rng);
    p.gate_src = init_linear(d, d, rng);
    p.gate_dst = init_linear(d, d, rng);
  }
  return p;
}

BackboneParams init_backbone(LayerKind kind, std::size_t d_in, std::size_t d, std::size_t depth, Activation sigma,
                             Rng& rng) {
  BackboneParams p;
  p.sigma = sigma;
  p.encoder = init_mlp({d_in, d}, sigma, rng);
  for (std::size_t i = 0; i < depth; ++i) p.layers.push_back(init_gnn_layer(kind, d, rng));
  return p;
}

}  // namespace tango::nets
