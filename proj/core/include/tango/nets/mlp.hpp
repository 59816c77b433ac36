#pragma once

#include <concepts>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <unordered_map>
#include <vector>

#include "tango/autodiff/tape.hpp"
#include "tango/rng.hpp"

namespace tango::nets {

enum class Activation { Relu, Elu, Gelu, Tanh };

std::string_view activation_name(Activation a) noexcept;
std::optional<Activation> parse_activation(std::string_view name) noexcept;
ad::Var activate(Activation a, ad::Var x);

/// x W + b with W of shape d_in x d_out. An empty bias means no bias term.
struct Linear {
  ad::Tensor weight;
  ad::Tensor bias;

  std::size_t in() const noexcept { return weight.rows(); }
  std::size_t out() const noexcept { return weight.cols(); }
};

struct MlpParams {
  std::vector<Linear> layers;
  Activation activation = Activation::Relu;

  std::size_t in() const;
  std::size_t out() const;
};

/// Binds parameter tensors to tape leaves on first use. Trainable binders
/// create differentiable leaves; others create constants.
class Binder {
 public:
  Binder(ad::Tape& tape, bool trainable) : tape_(&tape), trainable_(trainable) {}

  ad::Var operator()(const ad::Tensor& param);
  /// Routes `param` to an existing tape value, e.g. to differentiate with
  /// respect to one parameter in a finite-difference check.
  void assign(const ad::Tensor& param, ad::Var v) { bound_[&param] = v; }
  /// Leaf for `param` if it was used, else an invalid Var.
  ad::Var find(const ad::Tensor& param) const;

  ad::Tape& tape() const noexcept { return *tape_; }
  bool trainable() const noexcept { return trainable_; }

 private:
  ad::Tape* tape_;
  bool trainable_;
  std::unordered_map<const ad::Tensor*, ad::Var> bound_;
};

ad::Var linear(Binder& bind, const Linear& p, ad::Var x);
/// Affine layers with `activation` between them; the last layer is linear.
/// Throws ShapeError when x's width does not match the first layer.
ad::Var mlp_forward(Binder& bind, const MlpParams& p, ad::Var x);

/// Glorot-uniform weights within +-sqrt(6/(fan_in+fan_out)), zero bias.
Linear init_linear(std::size_t in, std::size_t out, Rng& rng, bool with_bias = true);
/// dims = {d_in, hidden..., d_out}; needs at least two entries.
MlpParams init_mlp(const std::vector<std::size_t>& dims, Activation activation, Rng& rng, bool with_bias = true);

/// "a" + "b" -> "a.b"; an empty prefix yields the bare name.
inline std::string join_name(const std::string& prefix, const std::string& name) {
  return prefix.empty() ? name : prefix + "." + name;
}

template <class T, class U>
concept MaybeConst = std::same_as<std::remove_const_t<T>, U>;

template <MaybeConst<Linear> L, class F>
void visit_params(L& p, const std::string& prefix, F&& f) {
  f(join_name(prefix, "weight"), p.weight);
  if (!p.bias.empty()) f(join_name(prefix, "bias"), p.bias);
}

template <MaybeConst<MlpParams> M, class F>
void visit_params(M& p, const std::string& prefix, F&& f) {
  for (std::size_t i = 0; i < p.layers.size(); ++i) visit_params(p.layers[i], join_name(prefix, std::to_string(i)), f);
}

}  // namespace tango::nets
