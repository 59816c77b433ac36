#include "tango/autodiff/tape.hpp"

#include <cmath>
#include <numbers>

namespace tango::ad {

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::Leaf: return "leaf";
    case Op::MatMul: return "matmul";
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Scale: return "scale";
    case Op::AddScalar: return "add_scalar";
    case Op::Relu: return "relu";
    case Op::Elu: return "elu";
    case Op::Gelu: return "gelu";
    case Op::Tanh: return "tanh";
    case Op::Sigmoid: return "sigmoid";
    case Op::Exp: return "exp";
    case Op::Erf: return "erf";
    case Op::Square: return "square";
    case Op::Sqrt: return "sqrt";
    case Op::Sum: return "sum";
    case Op::Mean: return "mean";
    case Op::SumRows: return "sum_rows";
    case Op::BroadcastRow: return "broadcast_row";
    case Op::Expand: return "expand";
    case Op::Gather: return "gather";
    case Op::ScatterAdd: return "scatter_add";
    case Op::ConcatCols: return "concat_cols";
    case Op::SliceCols: return "slice_cols";
    case Op::PadCols: return "pad_cols";
    case Op::AddRow: return "add_row";
    case Op::ScaleBy: return "scale_by";
    case Op::SigmoidDeriv: return "sigmoid_deriv";
    case Op::TanhDeriv: return "tanh_deriv";
    case Op::ReluGrad: return "relu_grad";
    case Op::GatherAdd: return "gather_add";
    case Op::GatherMul: return "gather_mul";
  }
  return "unknown";
}

Index make_index(std::vector<std::int32_t> rows) {
  return std::make_shared<const std::vector<std::int32_t>>(std::move(rows));
}

const Tensor& Var::value() const {
  if (!valid()) throw std::logic_error("value() on an unbound Var");
  return tape->value(*this);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var{this, static_cast<std::int32_t>(nodes_.size() - 1)};
}

Var Tape::variable(Tensor value) {
  if (!value.all_finite()) throw NonFiniteError("variable: non-finite leaf value");
  Node n;
  n.requires_grad = true;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::constant(Tensor value) {
  if (!value.all_finite()) throw NonFiniteError("constant: non-finite leaf value");
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

void Tape::check_owned(Var v, const char* what) const {
  if (v.tape != this || v.id < 0 || static_cast<std::size_t>(v.id) >= nodes_.size()) {
    throw std::invalid_argument(std::string(what) + ": variable is not on this tape");
  }
}

const Tensor& Tape::value(Var v) const {
  check_owned(v, "value");
  return nodes_[static_cast<std::size_t>(v.id)].value;
}

Var Tape::record(Op op, std::span<const Var> inputs, const Attrs& attrs) {
  if (op == Op::Leaf) throw std::invalid_argument("record: use variable() or constant() for leaves");
  if (inputs.size() > 2) throw std::invalid_argument("record: at most two inputs");
  std::array<const Tensor*, 2> vals{};
  Node n;
  n.op = op;
  n.arity = static_cast<std::uint8_t>(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    check_owned(inputs[i], "record");
    const Node& src = nodes_[static_cast<std::size_t>(inputs[i].id)];
    vals[i] = &src.value;
    n.inputs[i] = inputs[i].id;
    n.requires_grad = n.requires_grad || src.requires_grad;
  }
  n.value = evaluate(op, std::span<const Tensor* const>(vals.data(), inputs.size()), attrs);
  if (!output_checked(op) && !n.value.all_finite()) {
    throw NonFiniteError(std::string(op_name(op)) + ": non-finite output");
  }
  n.attrs = attrs;
  return push(std::move(n));
}

void Tape::truncate(std::size_t n) {
  if (n < nodes_.size()) nodes_.resize(n);
}

bool Tape::replay_matches() const {
  for (const auto& n : nodes_) {
    if (n.op == Op::Leaf) continue;
    std::array<const Tensor*, 2> vals{};
    for (std::size_t i = 0; i < n.arity; ++i) {
      vals[i] = &nodes_[static_cast<std::size_t>(n.inputs[i])].value;
    }
    const Tensor again = evaluate(n.op, std::span<const Tensor* const>(vals.data(), n.arity), n.attrs);
    if (!(again == n.value)) return false;
  }
  return true;
}

namespace {

Tensor mask_where(const Tensor& x, bool positive) {
  Tensor m(x.rows(), x.cols());
  for (std::size_t i = 0; i < x.size(); ++i) m[i] = ((x[i] > 0.0) == positive) ? 1.0 : 0.0;
  return m;
}

}  // namespace

std::vector<Var> Tape::backward_impl(Var output, std::span<const Var> wrt, bool transient) {
  check_owned(output, "backward");
  if (value(output).size() != 1) {
    throw ShapeError("backward: output must be a single element, got " +
                     value(output).shape_string());
  }
  const auto top = static_cast<std::size_t>(output.id);

  // Nodes that depend on some wrt entry; only these carry adjoints.
  std::vector<char> need(top + 1, 0);
  for (const Var& w : wrt) {
    check_owned(w, "backward");
    if (static_cast<std::size_t>(w.id) <= top) need[static_cast<std::size_t>(w.id)] = 1;
  }
  for (std::size_t i = 0; i <= top; ++i) {
    if (need[i]) continue;
    const Node& n = nodes_[i];
    for (std::size_t k = 0; k < n.arity; ++k) {
      if (need[static_cast<std::size_t>(n.inputs[k])]) {
        need[i] = 1;
        break;
      }
    }
  }

  std::vector<std::int32_t> adj(top + 1, -1);
  adj[top] = constant(Tensor::scalar(1.0)).id;

  // A transient pass is never differentiated again, so every node it records
  // can drop its value once no adjoint slot refers to it. This keeps the
  // working set near the size of the forward tape.
  std::vector<std::int32_t> refs;
  auto hold = [&](std::int32_t id, int delta) {
    if (!transient) return;
    if (refs.size() <= static_cast<std::size_t>(id)) refs.resize(nodes_.size() + 1, 0);
    refs[static_cast<std::size_t>(id)] += delta;
  };
  auto release = [&](std::int32_t id) {
    const auto k = static_cast<std::size_t>(id);
    if (transient && k > top && refs[k] == 0) nodes_[k].value = Tensor();
  };
  hold(adj[top], 1);

  auto accumulate = [&](std::int32_t target, Var g) {
    auto& slot = adj[static_cast<std::size_t>(target)];
    if (slot < 0) {
      slot = g.id;
    } else {
      const std::int32_t old = slot;
      slot = add(Var{this, old}, g).id;
      hold(slot, 1);
      hold(old, -1);
      release(old);
      return;
    }
    hold(slot, 1);
  };

  for (std::size_t i = top + 1; i-- > 0;) {
    if (adj[i] < 0 || !need[i]) continue;
    // Copy what the rule needs; recording below may reallocate nodes_.
    const Op op = nodes_[i].op;
    if (op == Op::Leaf) continue;
    const auto inputs = nodes_[i].inputs;
    const Attrs at = nodes_[i].attrs;
    std::array<bool, 2> want{};
    for (std::size_t k = 0; k < nodes_[i].arity; ++k) want[k] = need[static_cast<std::size_t>(inputs[k])] != 0;
    if (!want[0] && !want[1]) continue;

    const Var gy{this, adj[i]};
    const std::size_t mark_rule = nodes_.size();
    const Var y{this, static_cast<std::int32_t>(i)};
    const Var x0{this, inputs[0]};
    const Var x1{this, inputs[1]};
    Var g0, g1;

    switch (op) {
      case Op::Leaf:
        break;
      case Op::MatMul: {
        const bool ta = at.flag_a, tb = at.flag_b;
        if (want[0]) {
          g0 = !ta ? matmul(gy, x1, false, !tb) : matmul(x1, gy, tb, true);
        }
        if (want[1]) {
          g1 = !tb ? matmul(x0, gy, !ta, false) : matmul(gy, x0, true, ta);
        }
        break;
      }
      case Op::Add:
        if (want[0]) g0 = gy;
        if (want[1]) g1 = gy;
        break;
      case Op::Sub:
        if (want[0]) g0 = gy;
        if (want[1]) g1 = scale(gy, -1.0);
        break;
      case Op::Mul:
        if (want[0]) g0 = mul(gy, x1);
        if (want[1]) g1 = mul(gy, x0);
        break;
      case Op::Div:
        if (want[0]) g0 = div(gy, x1);
        if (want[1]) g1 = scale(div(mul(gy, y), x1), -1.0);
        break;
      case Op::Scale:
        g0 = scale(gy, at.scalar);
        break;
      case Op::AddScalar:
        g0 = gy;
        break;
      case Op::Relu:
        g0 = relu_grad(gy, x0);
        break;
      case Op::Elu: {
        // elu'(x) = 1 for x > 0, elu(x) + 1 otherwise.
        const Var pos = constant(mask_where(value(x0), true));
        const Var neg = constant(mask_where(value(x0), false));
        g0 = mul(gy, add(pos, mul(neg, add_scalar(y, 1.0))));
        break;
      }
      case Op::Gelu: {
        // gelu'(x) = Phi(x) + x * phi(x)
        const Var cdf = scale(add_scalar(erf(scale(x0, 1.0 / std::numbers::sqrt2)), 1.0), 0.5);
        const Var pdf = scale(exp(scale(square(x0), -0.5)), 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
        g0 = mul(gy, add(cdf, mul(x0, pdf)));
        break;
      }
      case Op::Tanh:
        g0 = mul(gy, tanh_deriv(y));
        break;
      case Op::Sigmoid:
        g0 = mul(gy, sigmoid_deriv(y));
        break;
      case Op::Exp:
        g0 = mul(gy, y);
        break;
      case Op::Erf:
        g0 = mul(gy, scale(exp(scale(square(x0), -1.0)), 2.0 * std::numbers::inv_sqrtpi));
        break;
      case Op::Square:
        g0 = mul(gy, scale(x0, 2.0));
        break;
      case Op::Sqrt:
        g0 = div(scale(gy, 0.5), y);
        break;
      case Op::Sum:
        g0 = expand(gy, value(x0).rows(), value(x0).cols());
        break;
      case Op::Mean: {
        const auto& xv = value(x0);
        g0 = expand(scale(gy, 1.0 / static_cast<double>(xv.size())), xv.rows(), xv.cols());
        break;
      }
      case Op::SumRows:
        g0 = broadcast_row(gy, value(x0).rows());
        break;
      case Op::BroadcastRow:
        g0 = sum_rows(gy);
        break;
      case Op::Expand:
        g0 = sum(gy);
        break;
      case Op::Gather:
        g0 = scatter_add_rows(gy, at.index, value(x0).rows());
        break;
      case Op::ScatterAdd:
        g0 = gather_rows(gy, at.index);
        break;
      case Op::ConcatCols: {
        const std::size_t left = value(x0).cols();
        if (want[0]) g0 = slice_cols(gy, 0, left);
        if (want[1]) g1 = slice_cols(gy, left, value(x1).cols());
        break;
      }
      case Op::SliceCols:
        g0 = pad_cols(gy, at.offset, value(x0).cols());
        break;
      case Op::PadCols:
        g0 = slice_cols(gy, at.offset, value(x0).cols());
        break;
      case Op::AddRow:
        if (want[0]) g0 = gy;
        if (want[1]) g1 = sum_rows(gy);
        break;
      case Op::ScaleBy:
        if (want[0]) g0 = scale_by(gy, x1);
        if (want[1]) g1 = sum(mul(gy, x0));
        break;
      case Op::SigmoidDeriv:
        g0 = mul(gy, add_scalar(scale(x0, -2.0), 1.0));
        break;
      case Op::TanhDeriv:
        g0 = mul(gy, scale(x0, -2.0));
        break;
      case Op::ReluGrad:
        // The mask is piecewise constant, so only the passed-through input
        // carries a gradient.
        if (want[0]) g0 = relu_grad(gy, x1);
        break;
      case Op::GatherAdd:
        if (want[0]) g0 = scatter_add_rows(gy, at.index, value(x0).rows());
        if (want[1]) g1 = scatter_add_rows(gy, at.index2, value(x1).rows());
        break;
      case Op::GatherMul:
        if (want[0]) g0 = gather_mul(gy, x1, at.index);
        if (want[1]) g1 = scatter_add_rows(mul(gy, x0), at.index, value(x1).rows());
        break;
    }
    if (want[0] && g0.valid()) accumulate(inputs[0], g0);
    if (want[1] && g1.valid()) accumulate(inputs[1], g1);
    if (transient) {
      hold(gy.id, -1);
      adj[i] = -1;
      refs.resize(std::max(refs.size(), nodes_.size()), 0);
      for (std::size_t k = mark_rule; k < nodes_.size(); ++k) release(static_cast<std::int32_t>(k));
      release(gy.id);
    }
  }

  std::vector<Var> out;
  out.reserve(wrt.size());
  for (const Var& w : wrt) {
    const auto id = static_cast<std::size_t>(w.id);
    if (id <= top && adj[id] >= 0) {
      out.push_back(Var{this, adj[id]});
    } else {
      const auto& wv = value(w);
      out.push_back(constant(Tensor(wv.rows(), wv.cols())));
    }
  }
  return out;
}

std::vector<Var> Tape::grad(Var output, std::span<const Var> wrt) { return backward_impl(output, wrt, false); }

std::vector<Tensor> Tape::gradient(Var output, std::span<const Var> wrt) {
  const std::size_t mark = nodes_.size();
  const auto vars = backward_impl(output, wrt, true);
  std::vector<Tensor> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(value(v));
  truncate(mark);
  return out;
}

GradientMap Tape::backward(Var output) {
  check_owned(output, "backward");
  std::vector<Var> leaves;
  for (std::size_t i = 0; i <= static_cast<std::size_t>(output.id); ++i) {
    if (nodes_[i].op == Op::Leaf && nodes_[i].requires_grad) {
      leaves.push_back(Var{this, static_cast<std::int32_t>(i)});
    }
  }
  auto grads = gradient(output, leaves);
  GradientMap map;
  for (std::size_t i = 0; i < leaves.size(); ++i) map.set(leaves[i].id, std::move(grads[i]));
  return map;
}

// ---- recording helpers ----

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw std::invalid_argument("operation on an unbound Var");
  return *a.tape;
}

Var rec1(Op op, Var a, const Attrs& at = {}) {
  const std::array<Var, 1> in{a};
  return tape_of(a).record(op, in, at);
}

Var rec2(Op op, Var a, Var b, const Attrs& at = {}) {
  if (a.tape != b.tape) throw std::invalid_argument(std::string(op_name(op)) + ": operands on different tapes");
  const std::array<Var, 2> in{a, b};
  return tape_of(a).record(op, in, at);
}

}  // namespace

Var matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  Attrs at;
  at.flag_a = transpose_a;
  at.flag_b = transpose_b;
  return rec2(Op::MatMul, a, b, at);
}
Var add(Var a, Var b) { return rec2(Op::Add, a, b); }
Var sub(Var a, Var b) { return rec2(Op::Sub, a, b); }
Var mul(Var a, Var b) { return rec2(Op::Mul, a, b); }
Var div(Var a, Var b) { return rec2(Op::Div, a, b); }
Var scale(Var a, double s) {
  Attrs at;
  at.scalar = s;
  return rec1(Op::Scale, a, at);
}
Var add_scalar(Var a, double c) {
  Attrs at;
  at.scalar = c;
  return rec1(Op::AddScalar, a, at);
}
Var relu(Var a) { return rec1(Op::Relu, a); }
Var elu(Var a) { return rec1(Op::Elu, a); }
Var gelu(Var a) { return rec1(Op::Gelu, a); }
Var tanh(Var a) { return rec1(Op::Tanh, a); }
Var sigmoid(Var a) { return rec1(Op::Sigmoid, a); }
Var exp(Var a) { return rec1(Op::Exp, a); }
Var erf(Var a) { return rec1(Op::Erf, a); }
Var square(Var a) { return rec1(Op::Square, a); }
Var sqrt(Var a) { return rec1(Op::Sqrt, a); }
Var sum(Var a) { return rec1(Op::Sum, a); }
Var mean(Var a) { return rec1(Op::Mean, a); }
Var sum_rows(Var a) { return rec1(Op::SumRows, a); }
Var broadcast_row(Var a, std::size_t rows) {
  Attrs at;
  at.count = rows;
  return rec1(Op::BroadcastRow, a, at);
}
Var expand(Var a, std::size_t rows, std::size_t cols) {
  Attrs at;
  at.count = rows;
  at.extent = cols;
  return rec1(Op::Expand, a, at);
}
Var gather_rows(Var a, Index index) {
  Attrs at;
  at.index = std::move(index);
  return rec1(Op::Gather, a, at);
}
Var scatter_add_rows(Var a, Index index, std::size_t out_rows) {
  Attrs at;
  at.index = std::move(index);
  at.count = out_rows;
  return rec1(Op::ScatterAdd, a, at);
}
Var gather_add(Var a, Index ia, Var b, Index ib) {
  Attrs at;
  at.index = std::move(ia);
  at.index2 = std::move(ib);
  return rec2(Op::GatherAdd, a, b, at);
}
Var gather_mul(Var a, Var b, Index ib) {
  Attrs at;
  at.index = std::move(ib);
  return rec2(Op::GatherMul, a, b, at);
}
Var add_row(Var a, Var row) { return rec2(Op::AddRow, a, row); }
Var scale_by(Var a, Var s) { return rec2(Op::ScaleBy, a, s); }
Var sigmoid_deriv(Var y) { return rec1(Op::SigmoidDeriv, y); }
Var tanh_deriv(Var y) { return rec1(Op::TanhDeriv, y); }
Var relu_grad(Var g, Var x) { return rec2(Op::ReluGrad, g, x); }
Var concat_cols(Var a, Var b) { return rec2(Op::ConcatCols, a, b); }
Var slice_cols(Var a, std::size_t offset, std::size_t width) {
  Attrs at;
  at.offset = offset;
  at.extent = width;
  return rec1(Op::SliceCols, a, at);
}
Var pad_cols(Var a, std::size_t offset, std::size_t total_cols) {
  Attrs at;
  at.offset = offset;
  at.count = total_cols;
  return rec1(Op::PadCols, a, at);
}

}  // namespace tango::ad
