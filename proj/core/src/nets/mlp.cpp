#include "tango/nets/mlp.hpp"

#include <cmath>

namespace tango::nets {

std::string_view activation_name(Activation a) noexcept {
  switch (a) {
    case Activation::Relu: return "relu";
    case Activation::Elu: return "elu";
    case Activation::Gelu: return "gelu";
    case Activation::Tanh: return "tanh";
  }
  return "unknown";
}

std::optional<Activation> parse_activation(std::string_view name) noexcept {
  for (const auto a : {Activation::Relu, Activation::Elu, Activation::Gelu, Activation::Tanh}) {
    if (activation_name(a) == name) return a;
  }
  return std::nullopt;
}

ad::Var activate(Activation a, ad::Var x) {
  switch (a) {
    case Activation::Relu: return ad::relu(x);
    case Activation::Elu: return ad::elu(x);
    case Activation::Gelu: return ad::gelu(x);
    case Activation::Tanh: return ad::tanh(x);
  }
  throw std::invalid_argument("unknown activation");
}

std::size_t MlpParams::in() const {
  if (layers.empty()) throw ad::ShapeError("empty MLP has no input width");
  return layers.front().in();
}

std::size_t MlpParams::out() const {
  if (layers.empty()) throw ad::ShapeError("empty MLP has no output width");
  return layers.back().out();
}

ad::Var Binder::operator()(const ad::Tensor& param) {
  const auto it = bound_.find(&param);
  if (it != bound_.end()) return it->second;
  const auto v = trainable_ ? tape_->variable(param) : tape_->constant(param);
  bound_.emplace(&param, v);
  return v;
}

ad::Var Binder::find(const ad::Tensor& param) const {
  const auto it = bound_.find(&param);
  return it == bound_.end() ? ad::Var{} : it->second;
}

ad::Var linear(Binder& bind, const Linear& p, ad::Var x) {
  if (x.cols() != p.in()) {
    throw ad::ShapeError("linear: input has " + std::to_string(x.cols()) + " columns, layer expects " +
                         std::to_string(p.in()));
  }
  auto y = ad::matmul(x, bind(p.weight));
  if (!p.bias.empty()) y = ad::add_row(y, bind(p.bias));
  return y;
}

ad::Var mlp_forward(Binder& bind, const MlpParams& p, ad::Var x) {
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    x = linear(bind, p.layers[i], x);
    if (i + 1 < p.layers.size()) x = activate(p.activation, x);
  }
  return x;
}

Linear init_linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias) {
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  Linear l;
  l.weight = ad::Tensor(in, out);
  for (auto& w : l.weight.values()) w = rng.uniform(-limit, limit);
  if (with_bias) l.bias = ad::Tensor(1, out);
  return l;
}

MlpParams init_mlp(const std::vector<std::size_t>& dims, Activation activation, Rng& rng, bool with_bias) {
  if (dims.size() < 2) throw ad::ShapeError("init_mlp needs input and output widths");
  MlpParams p;
  p.activation = activation;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) p.layers.push_back(init_linear(dims[i], dims[i + 1], rng, with_bias));
  return p;
}

}  // namespace tango::nets
