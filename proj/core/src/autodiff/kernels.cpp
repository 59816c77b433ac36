#include <Eigen/Core>
#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>
#include <numbers>

#include "tango/autodiff/tape.hpp"

namespace tango::ad {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap as_matrix(const Tensor& t) {
  return ConstMap(t.data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void shape_fail(Op op, const std::string& detail) {
  throw ShapeError(std::string(op_name(op)) + ": " + detail);
}

void require_arity(Op op, std::span<const Tensor* const> in, std::size_t n) {
  if (in.size() != n) {
    shape_fail(op, "expected " + std::to_string(n) + " inputs, got " + std::to_string(in.size()));
  }
}

void require_same(Op op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) shape_fail(op, a.shape_string() + " vs " + b.shape_string());
}

// Sign bit set iff v is NaN or Inf; see Tensor::all_finite.
inline std::uint64_t nonfinite_bit(double v) {
  return (std::bit_cast<std::uint64_t>(v) & 0x7ff0000000000000ULL) + 0x0010000000000000ULL;
}

void require_finite(Op op, std::uint64_t acc) {
  if (acc >> 63) throw NonFiniteError(std::string(op_name(op)) + ": non-finite output");
}

// Elementwise kernels check their output in the same pass that writes it.
template <class F>
Tensor unary(Op op, const Tensor& a, F f) {
  Tensor out = Tensor::uninitialized(a.rows(), a.cols());
  const double* __restrict src = a.data();
  double* __restrict dst = out.data();
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dst[i] = f(src[i]);
    acc |= nonfinite_bit(dst[i]);
  }
  require_finite(op, acc);
  return out;
}

template <class F>
Tensor binary(Op op, const Tensor& a, const Tensor& b, F f) {
  require_same(op, a, b);
  Tensor out = Tensor::uninitialized(a.rows(), a.cols());
  const double* __restrict pa = a.data();
  const double* __restrict pb = b.data();
  double* __restrict dst = out.data();
  std::uint64_t acc = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dst[i] = f(pa[i], pb[i]);
    acc |= nonfinite_bit(dst[i]);
  }
  require_finite(op, acc);
  return out;
}

Tensor matmul_kernel(const Tensor& a, const Tensor& b, const Attrs& at) {
  const std::size_t ar = at.flag_a ? a.cols() : a.rows();
  const std::size_t ac = at.flag_a ? a.rows() : a.cols();
  const std::size_t br = at.flag_b ? b.cols() : b.rows();
  const std::size_t bc = at.flag_b ? b.rows() : b.cols();
  if (ac != br) {
    shape_fail(Op::MatMul, a.shape_string() + (at.flag_a ? "^T" : "") + " @ " + b.shape_string() +
                               (at.flag_b ? "^T" : ""));
  }
  Tensor out = Tensor::uninitialized(ar, bc);
  MutMap y(out.data(), static_cast<Eigen::Index>(ar), static_cast<Eigen::Index>(bc));
  const auto ma = as_matrix(a);
  const auto mb = as_matrix(b);
  if (!at.flag_a && !at.flag_b) {
    y.noalias() = ma * mb;
  } else if (!at.flag_a) {
    y.noalias() = ma * mb.transpose();
  } else if (!at.flag_b) {
    y.noalias() = ma.transpose() * mb;
  } else {
    y.noalias() = ma.transpose() * mb.transpose();
  }
  return out;
}

double gelu_scalar(double x) { return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0)); }

}  // namespace

bool output_checked(Op op) noexcept {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Scale:
    case Op::AddScalar:
    case Op::Relu:
    case Op::Elu:
    case Op::Gelu:
    case Op::Tanh:
    case Op::Sigmoid:
    case Op::Exp:
    case Op::Erf:
    case Op::Square:
    case Op::Sqrt:
    case Op::AddRow:
    case Op::ScaleBy:
    case Op::SigmoidDeriv:
    case Op::TanhDeriv:
    case Op::ReluGrad:
    case Op::GatherAdd:
    case Op::GatherMul:
    // Pure copies of already finite inputs.
    case Op::BroadcastRow:
    case Op::Expand:
    case Op::Gather:
    case Op::ConcatCols:
    case Op::SliceCols:
    case Op::PadCols:
      return true;
    default:
      return false;
  }
}

Tensor evaluate(Op op, std::span<const Tensor* const> in, const Attrs& at) {
  switch (op) {
    case Op::Leaf:
      shape_fail(op, "leaves are not evaluated");
    case Op::MatMul:
      require_arity(op, in, 2);
      return matmul_kernel(*in[0], *in[1], at);
    case Op::Add:
      require_arity(op, in, 2);
      return binary(op, *in[0], *in[1], [](double x, double y) { return x + y; });
    case Op::Sub:
      require_arity(op, in, 2);
      return binary(op, *in[0], *in[1], [](double x, double y) { return x - y; });
    case Op::Mul:
      require_arity(op, in, 2);
      return binary(op, *in[0], *in[1], [](double x, double y) { return x * y; });
    case Op::Div:
      require_arity(op, in, 2);
      return binary(op, *in[0], *in[1], [](double x, double y) { return x / y; });
    case Op::Scale: {
      require_arity(op, in, 1);
      const double s = at.scalar;
      return unary(op, *in[0], [s](double x) { return s * x; });
    }
    case Op::AddScalar: {
      require_arity(op, in, 1);
      const double c = at.scalar;
      return unary(op, *in[0], [c](double x) { return x + c; });
    }
    case Op::Relu:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double x) { return x > 0.0 ? x : 0.0; });
    case Op::Elu:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double x) { return x > 0.0 ? x : std::expm1(x); });
    case Op::Gelu:
      require_arity(op, in, 1);
      return unary(op, *in[0], gelu_scalar);
    case Op::Tanh:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double x) { return std::tanh(x); });
    case Op::Sigmoid: {
      require_arity(op, in, 1);
      // Vectorized stable logistic: exp(-|x|) never overflows.
      const Tensor& a = *in[0];
      Tensor out = Tensor::uninitialized(a.rows(), a.cols());
      const auto n = static_cast<Eigen::Index>(a.size());
      const Eigen::Map<const Eigen::ArrayXd> x(a.data(), n);
      const Eigen::ArrayXd e = (-x.abs()).exp();
      Eigen::Map<Eigen::ArrayXd>(out.data(), n) = (x >= 0.0).select(1.0 / (1.0 + e), e / (1.0 + e));
      if (!out.all_finite()) throw NonFiniteError("sigmoid: non-finite output");
      return out;
    }
    case Op::Exp:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double x) { return std::exp(x); });
    case Op::Erf:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double x) { return std::erf(x); });
    case Op::Square:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double x) { return x * x; });
    case Op::Sqrt:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double x) { return std::sqrt(x); });
    case Op::Sum:
    case Op::Mean: {
      require_arity(op, in, 1);
      double s = 0.0;
      for (double v : in[0]->values()) s += v;
      if (op == Op::Mean) {
        if (in[0]->empty()) shape_fail(op, "mean of empty tensor");
        s /= static_cast<double>(in[0]->size());
      }
      return Tensor::scalar(s);
    }
    case Op::SumRows: {
      require_arity(op, in, 1);
      const Tensor& a = *in[0];
      Tensor out(1, a.cols());
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* src = a.data() + r * a.cols();
        for (std::size_t c = 0; c < a.cols(); ++c) out[c] += src[c];
      }
      return out;
    }
    case Op::BroadcastRow: {
      require_arity(op, in, 1);
      const Tensor& a = *in[0];
      if (a.rows() != 1) shape_fail(op, "expects a single row, got " + a.shape_string());
      Tensor out = Tensor::uninitialized(at.count, a.cols());
      for (std::size_t r = 0; r < at.count; ++r) {
        std::copy(a.data(), a.data() + a.cols(), out.data() + r * a.cols());
      }
      return out;
    }
    case Op::Expand: {
      require_arity(op, in, 1);
      if (in[0]->size() != 1) shape_fail(op, "expects a 1x1 input, got " + in[0]->shape_string());
      return Tensor(at.count, at.extent, (*in[0])[0]);
    }
    case Op::Gather: {
      require_arity(op, in, 1);
      if (!at.index) shape_fail(op, "missing index");
      const Tensor& a = *in[0];
      const auto& idx = *at.index;
      const std::size_t d = a.cols();
      Tensor out = Tensor::uninitialized(idx.size(), d);
      for (std::size_t e = 0; e < idx.size(); ++e) {
        const auto r = static_cast<std::size_t>(idx[e]);
        if (idx[e] < 0 || r >= a.rows()) shape_fail(op, "row index out of range");
        std::copy(a.data() + r * d, a.data() + (r + 1) * d, out.data() + e * d);
      }
      return out;
    }
    case Op::ScatterAdd: {
      require_arity(op, in, 1);
      if (!at.index) shape_fail(op, "missing index");
      const Tensor& a = *in[0];
      const auto& idx = *at.index;
      if (idx.size() != a.rows()) {
        shape_fail(op, "index length " + std::to_string(idx.size()) + " vs rows " +
                           std::to_string(a.rows()));
      }
      const std::size_t d = a.cols();
      Tensor out(at.count, d);
      for (std::size_t e = 0; e < idx.size(); ++e) {
        const auto r = static_cast<std::size_t>(idx[e]);
        if (idx[e] < 0 || r >= at.count) shape_fail(op, "row index out of range");
        const double* src = a.data() + e * d;
        double* dst = out.data() + r * d;
        for (std::size_t c = 0; c < d; ++c) dst[c] += src[c];
      }
      return out;
    }
    case Op::ConcatCols: {
      require_arity(op, in, 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (a.rows() != b.rows()) shape_fail(op, a.shape_string() + " vs " + b.shape_string());
      Tensor out = Tensor::uninitialized(a.rows(), a.cols() + b.cols());
      for (std::size_t r = 0; r < a.rows(); ++r) {
        double* dst = out.data() + r * out.cols();
        std::copy(a.data() + r * a.cols(), a.data() + (r + 1) * a.cols(), dst);
        std::copy(b.data() + r * b.cols(), b.data() + (r + 1) * b.cols(), dst + a.cols());
      }
      return out;
    }
    case Op::SliceCols: {
      require_arity(op, in, 1);
      const Tensor& a = *in[0];
      if (at.offset + at.extent > a.cols()) shape_fail(op, "slice exceeds " + a.shape_string());
      Tensor out = Tensor::uninitialized(a.rows(), at.extent);
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* src = a.data() + r * a.cols() + at.offset;
        std::copy(src, src + at.extent, out.data() + r * at.extent);
      }
      return out;
    }
    case Op::PadCols: {
      require_arity(op, in, 1);
      const Tensor& a = *in[0];
      if (at.offset + a.cols() > at.count) shape_fail(op, "padding narrower than input");
      Tensor out(a.rows(), at.count);
      for (std::size_t r = 0; r < a.rows(); ++r) {
        std::copy(a.data() + r * a.cols(), a.data() + (r + 1) * a.cols(),
                  out.data() + r * at.count + at.offset);
      }
      return out;
    }
    case Op::AddRow: {
      require_arity(op, in, 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      if (b.rows() != 1 || b.cols() != a.cols()) shape_fail(op, a.shape_string() + " + row " + b.shape_string());
      Tensor out = Tensor::uninitialized(a.rows(), a.cols());
      const std::size_t d = a.cols();
      std::uint64_t acc = 0;
      for (std::size_t r = 0; r < a.rows(); ++r) {
        const double* __restrict src = a.data() + r * d;
        const double* __restrict row = b.data();
        double* __restrict dst = out.data() + r * d;
        for (std::size_t c = 0; c < d; ++c) {
          dst[c] = src[c] + row[c];
          acc |= nonfinite_bit(dst[c]);
        }
      }
      require_finite(op, acc);
      return out;
    }
    case Op::ScaleBy: {
      require_arity(op, in, 2);
      if (in[1]->size() != 1) shape_fail(op, "expects a 1x1 scale, got " + in[1]->shape_string());
      const double s = (*in[1])[0];
      return unary(op, *in[0], [s](double x) { return s * x; });
    }
    case Op::SigmoidDeriv:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double y) { return y * (1.0 - y); });
    case Op::TanhDeriv:
      require_arity(op, in, 1);
      return unary(op, *in[0], [](double y) { return 1.0 - y * y; });
    case Op::ReluGrad:
      require_arity(op, in, 2);
      return binary(op, *in[0], *in[1], [](double g, double x) { return x > 0.0 ? g : 0.0; });
    case Op::GatherAdd:
    case Op::GatherMul: {
      require_arity(op, in, 2);
      const Tensor& a = *in[0];
      const Tensor& b = *in[1];
      const bool pair = op == Op::GatherAdd;
      if (!at.index || (pair && !at.index2)) shape_fail(op, "missing index");
      const auto& ib = pair ? *at.index2 : *at.index;
      const std::size_t rows = ib.size();
      if (a.cols() != b.cols()) shape_fail(op, a.shape_string() + " vs " + b.shape_string());
      if (pair ? at.index->size() != rows : a.rows() != rows) shape_fail(op, "index length mismatch");
      const std::size_t d = a.cols();
      Tensor out = Tensor::uninitialized(rows, d);
      std::uint64_t acc = 0;
      for (std::size_t e = 0; e < rows; ++e) {
        const auto rb = static_cast<std::size_t>(ib[e]);
        if (ib[e] < 0 || rb >= b.rows()) shape_fail(op, "row index out of range");
        std::size_t ra = e;
        if (pair) {
          ra = static_cast<std::size_t>((*at.index)[e]);
          if ((*at.index)[e] < 0 || ra >= a.rows()) shape_fail(op, "row index out of range");
        }
        const double* __restrict pa = a.data() + ra * d;
        const double* __restrict pb = b.data() + rb * d;
        double* __restrict dst = out.data() + e * d;
        if (pair) {
          for (std::size_t c = 0; c < d; ++c) dst[c] = pa[c] + pb[c];
        } else {
          for (std::size_t c = 0; c < d; ++c) dst[c] = pa[c] * pb[c];
        }
        for (std::size_t c = 0; c < d; ++c) acc |= nonfinite_bit(dst[c]);
      }
      require_finite(op, acc);
      return out;
    }
  }
  shape_fail(op, "unknown op kind");
}

}  // namespace tango::ad
