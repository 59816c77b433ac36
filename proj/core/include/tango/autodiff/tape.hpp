#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tango/autodiff/tensor.hpp"

namespace tango::ad {

enum class Op : std::uint8_t {
  Leaf,
  MatMul,       // op(a) @ op(b); attrs.flag_a / flag_b transpose the operands
  Add,
  Sub,
  Mul,          // elementwise
  Div,          // elementwise
  Scale,        // a * attrs.scalar
  AddScalar,    // a + attrs.scalar
  Relu,
  Elu,
  Gelu,         // exact erf form
  Tanh,
  Sigmoid,
  Exp,
  Erf,
  Square,
  Sqrt,
  Sum,          // all entries -> 1x1
  Mean,         // all entries -> 1x1
  SumRows,      // n x d -> 1 x d (sum pooling over nodes)
  BroadcastRow, // 1 x d -> attrs.count x d
  Expand,       // 1 x 1 -> attrs.count x attrs.extent
  Gather,       // out[e] = a[index[e]]
  ScatterAdd,   // out[index[e]] += a[e], attrs.count output rows
  ConcatCols,
  SliceCols,    // columns [attrs.offset, attrs.offset + attrs.extent)
  PadCols,      // inverse of SliceCols: zero-pad to attrs.count columns
  AddRow,       // a + b with b a 1 x d row added to every row of a
  ScaleBy,      // b * a with b 1 x 1
  SigmoidDeriv, // y * (1 - y), the sigmoid slope from its output
  TanhDeriv,    // 1 - y^2, the tanh slope from its output
  ReluGrad,     // a where b > 0, else 0
  GatherAdd,    // out[e] = a[index[e]] + b[index2[e]]
  GatherMul,    // out[e] = a[e] * b[index[e]]
};

std::string_view op_name(Op op) noexcept;

using Index = std::shared_ptr<const std::vector<std::int32_t>>;

Index make_index(std::vector<std::int32_t> rows);

struct Attrs {
  double scalar = 0.0;
  std::size_t count = 0;
  std::size_t offset = 0;
  std::size_t extent = 0;
  bool flag_a = false;
  bool flag_b = false;
  Index index;
  Index index2;
};

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid while the tape
/// holds the node.
struct Var {
  Tape* tape = nullptr;
  std::int32_t id = -1;

  bool valid() const noexcept { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

/// Gradients keyed by node id; each entry has its forward tensor's shape.
class GradientMap {
 public:
  void set(std::int32_t id, Tensor g) { grads_[id] = std::move(g); }
  bool contains(Var v) const { return grads_.contains(v.id); }
  const Tensor& at(Var v) const { return grads_.at(v.id); }
  std::size_t size() const noexcept { return grads_.size(); }

 private:
  std::unordered_map<std::int32_t, Tensor> grads_;
};

/// Append-only record of tensor operations. Inputs of every node precede it,
/// so reverse id order is a valid reverse topological order.
///
/// Backward rules are themselves expressed as tape operations, which makes a
/// backward pass differentiable when its outputs are kept on the tape.
class Tape {
 public:
  struct Node {
    Op op = Op::Leaf;
    std::uint8_t arity = 0;
    bool requires_grad = false;
    std::array<std::int32_t, 2> inputs{-1, -1};
    Attrs attrs;
    Tensor value;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Differentiable leaf, e.g. a parameter or an input we take gradients for.
  Var variable(Tensor value);
  /// Leaf that never receives a gradient.
  Var constant(Tensor value);

  /// Evaluates `op` on the inputs' values and appends the node.
  /// Throws ShapeError on incompatible inputs and NonFiniteError on NaN/Inf.
  Var record(Op op, std::span<const Var> inputs, const Attrs& attrs = {});

  const Tensor& value(Var v) const;
  const Node& node(std::int32_t id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const noexcept { return nodes_.size(); }
  void reserve(std::size_t n) { nodes_.reserve(n); }

  /// d(output)/d(wrt) recorded on this tape, so the results can be
  /// differentiated again. Entries not reachable from `output` are zero constants.
  std::vector<Var> grad(Var output, std::span<const Var> wrt);

  /// Same as grad() but returns plain values and discards the backward nodes.
  std::vector<Tensor> gradient(Var output, std::span<const Var> wrt);

  /// Gradient of `output` with respect to every differentiable leaf.
  GradientMap backward(Var output);

  /// Recomputes every non-leaf node from its recorded inputs and reports
  /// whether all outputs are reproduced bit-exactly.
  bool replay_matches() const;

  /// Drops every node with id >= n.
  void truncate(std::size_t n);

 private:
  std::vector<Var> backward_impl(Var output, std::span<const Var> wrt, bool transient);
  void check_owned(Var v, const char* what) const;
  Var push(Node node);

  std::vector<Node> nodes_;
};

/// Pure forward kernel shared by Tape::record and replay.
Tensor evaluate(Op op, std::span<const Tensor* const> inputs, const Attrs& attrs);
/// True when evaluate() already rejects non-finite output for `op`, or the op
/// only copies its (finite) inputs.
bool output_checked(Op op) noexcept;

// Recording helpers. All operands must live on the same tape.
Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var div(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double c);
Var relu(Var a);
Var elu(Var a);
Var gelu(Var a);
Var tanh(Var a);
Var sigmoid(Var a);
Var exp(Var a);
Var erf(Var a);
Var square(Var a);
Var sqrt(Var a);
Var sum(Var a);
Var mean(Var a);
Var sum_rows(Var a);
Var broadcast_row(Var a, std::size_t rows);
Var expand(Var a, std::size_t rows, std::size_t cols);
Var gather_rows(Var a, Index index);
Var scatter_add_rows(Var a, Index index, std::size_t out_rows);
Var concat_cols(Var a, Var b);
Var slice_cols(Var a, std::size_t offset, std::size_t width);
Var pad_cols(Var a, std::size_t offset, std::size_t total_cols);
Var add_row(Var a, Var row);
Var scale_by(Var a, Var s);
Var sigmoid_deriv(Var y);
Var tanh_deriv(Var y);
Var relu_grad(Var g, Var x);
Var gather_add(Var a, Index ia, Var b, Index ib);
Var gather_mul(Var a, Var b, Index ib);

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator/(Var a, Var b) { return div(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }
inline Var operator-(Var a) { return scale(a, -1.0); }

}  // namespace tango::ad
