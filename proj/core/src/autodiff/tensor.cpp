#include "tango/autodiff/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cmath>

namespace tango::ad {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(values.begin(), values.end()) {
  if (values_.size() != rows_ * cols_) {
    throw ShapeError("tensor of shape " + shape_string() + " given " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::column(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(n, 1, std::move(values));
}

Tensor Tensor::row(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(1, n, std::move(values));
}

Tensor Tensor::identity(std::size_t n) {
  Tensor t(n, n);
  for (std::size_t i = 0; i < n; ++i) t(i, i) = 1.0;
  return t;
}

Tensor Tensor::matrix(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> v;
  v.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged nested list");
    v.insert(v.end(), row.begin(), row.end());
  }
  return Tensor(r, c, std::move(v));
}

double Tensor::item() const {
  if (size() != 1) throw ShapeError("item() on tensor of shape " + shape_string());
  return values_[0];
}

Tensor Tensor::uninitialized(std::size_t rows, std::size_t cols) {
  Tensor t;
  t.rows_ = rows;
  t.cols_ = cols;
  t.values_.resize(rows * cols);
  return t;
}

bool Tensor::all_finite() const noexcept {
  // NaN and Inf have an all-ones exponent; adding one exponent step carries
  // exactly those into the sign bit. An OR reduction vectorizes cleanly.
  constexpr std::uint64_t kExp = 0x7ff0000000000000ULL;
  constexpr std::uint64_t kStep = 0x0010000000000000ULL;
  std::uint64_t acc = 0;
  for (const double v : values_) acc |= (std::bit_cast<std::uint64_t>(v) & kExp) + kStep;
  return (acc >> 63) == 0;
}

std::string Tensor::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

namespace {
void require_same(const Tensor& a, const Tensor& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}
}  // namespace

double frobenius_dot(const Tensor& a, const Tensor& b) {
  require_same(a, b, "frobenius_dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double frobenius_norm(const Tensor& a) {
  double peak = 0.0;
  for (const double v : a.values()) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  if (peak > 1e-100 && peak < 1e100) return std::sqrt(frobenius_dot(a, a));
  // Rescale so squares neither underflow nor overflow.
  double s = 0.0;
  for (const double v : a.values()) s += (v / peak) * (v / peak);
  return peak * std::sqrt(s);
}

Tensor operator+(const Tensor& a, const Tensor& b) {
  Tensor out = a;
  out += b;
  return out;
}

Tensor operator-(const Tensor& a, const Tensor& b) {
  require_same(a, b, "operator-");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b[i];
  return out;
}

Tensor operator*(double s, const Tensor& a) {
  Tensor out = a;
  for (auto& v : out.values()) v *= s;
  return out;
}

Tensor& operator+=(Tensor& a, const Tensor& b) {
  require_same(a, b, "operator+=");
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
  return a;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  require_same(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace tango::ad
