#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "tango/autodiff/check.hpp"
#include "tango/autodiff/tape.hpp"
#include "test_util.hpp"

namespace tango::ad {
namespace {

using testing::max_rel_error;
using testing::random_tensor;

TEST(Record, AddIsElementwise) {
  Tape tape;
  const Var a = tape.constant(Tensor::row({1, 2}));
  const Var b = tape.constant(Tensor::row({3, 4}));
  EXPECT_EQ(add(a, b).value(), Tensor::row({4, 6}));
}

TEST(Record, IdentityMatmulReturnsInput) {
  std::mt19937_64 rng(7);
  Tape tape;
  const Tensor x = random_tensor(3, 5, rng);
  const Var y = matmul(tape.constant(Tensor::identity(3)), tape.constant(x));
  EXPECT_EQ(y.value(), x);
}

TEST(Record, ScatterAddOverEdgesMatchesLoop) {
  // edges 0->1 and 2->1: gather sources, scatter into destinations
  const std::vector<std::int32_t> src{0, 2};
  const std::vector<std::int32_t> dst{1, 1};
  const Tensor h = Tensor::matrix({{1.5, -1}, {2.25, 0.5}, {-4, 3}});
  Tape tape;
  const Var msg = gather_rows(tape.constant(h), make_index(src));
  const Tensor got = scatter_add_rows(msg, make_index(dst), 3).value();

  Tensor want(3, 2);
  for (std::size_t e = 0; e < src.size(); ++e) {
    for (std::size_t c = 0; c < 2; ++c) want(dst[e], c) += h(src[e], c);
  }
  EXPECT_EQ(got, want);
  EXPECT_DOUBLE_EQ(got(1, 0), 1.5 + -4.0);
  EXPECT_DOUBLE_EQ(got(0, 0), 0.0);
}

TEST(Record, ShapeMismatchThrows) {
  Tape tape;
  const Var a = tape.constant(Tensor(2, 3));
  const Var b = tape.constant(Tensor(3, 2));
  EXPECT_THROW(add(a, b), ShapeError);
  EXPECT_THROW(matmul(a, a), ShapeError);
  EXPECT_NO_THROW(matmul(a, a, false, true));
}

TEST(Record, NonFiniteOutputThrows) {
  Tape tape;
  const Var neg = tape.constant(Tensor::scalar(-1.0));
  EXPECT_THROW(sqrt(neg), NonFiniteError);
  const Var zero = tape.constant(Tensor::scalar(0.0));
  EXPECT_THROW(div(tape.constant(Tensor::scalar(1.0)), zero), NonFiniteError);
  EXPECT_THROW(tape.constant(Tensor::scalar(std::nan(""))), NonFiniteError);
}

TEST(Record, UnknownKindAndLeafRejected) {
  Tape tape;
  const std::array<Var, 1> in{tape.constant(Tensor::scalar(1))};
  EXPECT_THROW(tape.record(Op::Leaf, in), std::invalid_argument);
  EXPECT_THROW(tape.record(static_cast<Op>(250), in), ShapeError);
}

TEST(Record, ForeignVarRejected) {
  Tape a, b;
  const Var x = a.constant(Tensor::scalar(1));
  const Var y = b.constant(Tensor::scalar(1));
  EXPECT_THROW(add(x, y), std::invalid_argument);
}

TEST(Backward, SquareAtThreeIsSix) {
  const ScalarFn f = [](Tape&, Var x) { return sum(square(x)); };
  const Tensor x = Tensor::scalar(3.0);
  const double ad = gradient_of(f, x).item();
  const double h = 1e-5;
  const double fd = (evaluate_scalar(f, Tensor::scalar(3.0 + h)) -
                     evaluate_scalar(f, Tensor::scalar(3.0 - h))) / (2 * h);
  EXPECT_NEAR(fd, 6.0, 1e-8);
  EXPECT_NEAR(ad, fd, 1e-8);
  EXPECT_DOUBLE_EQ(ad, 6.0);
}

TEST(Backward, ConstantHasZeroGradient) {
  Tape tape;
  const Var x = tape.variable(Tensor::scalar(2.0));
  const Var c = tape.constant(Tensor::scalar(5.0));
  const Var y = scale(c, 3.0);
  const std::array<Var, 1> wrt{x};
  EXPECT_EQ(tape.gradient(y, wrt).front(), Tensor::scalar(0.0));
}

TEST(Backward, SumGivesOnes) {
  std::mt19937_64 rng(1);
  const Tensor x = random_tensor(4, 3, rng);
  const Tensor g = gradient_of([](Tape&, Var v) { return sum(v); }, x);
  EXPECT_EQ(g, Tensor(4, 3, 1.0));
}

TEST(Backward, NonScalarOutputRejected) {
  Tape tape;
  const Var x = tape.variable(Tensor(2, 2, 1.0));
  const std::array<Var, 1> wrt{x};
  EXPECT_THROW(tape.gradient(square(x), wrt), ShapeError);
  Tape other;
  const Var y = other.variable(Tensor::scalar(1.0));
  EXPECT_THROW(tape.gradient(y, wrt), std::invalid_argument);
}

TEST(Backward, GradientMapCoversAllLeaves) {
  Tape tape;
  const Var a = tape.variable(Tensor::row({1, 2}));
  const Var b = tape.variable(Tensor::row({3, 5}));
  const Var c = tape.constant(Tensor::row({1, 1}));
  const Var y = sum(mul(mul(a, b), c));
  const GradientMap g = tape.backward(y);
  EXPECT_EQ(g.size(), 2u);
  EXPECT_EQ(g.at(a), Tensor::row({3, 5}));
  EXPECT_EQ(g.at(b), Tensor::row({1, 2}));
  EXPECT_FALSE(g.contains(c));
}

TEST(Backward, GradientDiscardsBackwardNodes) {
  Tape tape;
  const Var x = tape.variable(Tensor::row({1, 2, 3}));
  const Var y = sum(tanh(x));
  const std::size_t before = tape.size();
  const std::array<Var, 1> wrt{x};
  (void)tape.gradient(y, wrt);
  EXPECT_EQ(tape.size(), before);
}

// One scalar probe per op kind: sum(op(inputs) * W) with a random W.
struct OpCase {
  std::string name;
  std::size_t rows, cols;
  std::function<Var(Tape&, Var)> build;
  bool smooth = true;  // second derivative exists and is not identically zero
};

std::vector<OpCase> op_cases() {
  std::mt19937_64 rng(99);
  const Tensor other = random_tensor(3, 4, rng);
  const Tensor wide = random_tensor(4, 2, rng);
  const Tensor positive = random_tensor(3, 4, rng, 0.5, 1.5);
  auto idx = make_index({2, 0, 1, 1, 2});
  auto dst = make_index({0, 3, 1, 0, 2});
  auto c = [](Tape& t, const Tensor& v) { return t.constant(v); };
  return {
      {"matmul", 3, 4, [=](Tape& t, Var x) { return matmul(x, c(t, wide)); }},
      {"matmul_tt", 3, 4, [=](Tape& t, Var x) { return matmul(c(t, wide), x, true, true); }},
      {"matmul_self", 3, 4, [](Tape&, Var x) { return matmul(x, x, true, false); }},
      {"add", 3, 4, [=](Tape& t, Var x) { return add(x, square(c(t, other))); }},
      {"sub", 3, 4, [=](Tape& t, Var x) { return sub(c(t, other), x); }, false},
      {"mul", 3, 4, [=](Tape&, Var x) { return mul(x, tanh(x)); }},
      {"div", 3, 4, [=](Tape& t, Var x) { return div(x, add(c(t, positive), square(x))); }},
      {"scale", 3, 4, [](Tape&, Var x) { return scale(square(x), -2.5); }},
      {"add_scalar", 3, 4, [](Tape&, Var x) { return square(add_scalar(x, 0.3)); }},
      {"relu", 3, 4, [](Tape&, Var x) { return relu(x); }, false},
      {"elu", 3, 4, [](Tape&, Var x) { return elu(x); }},
      {"gelu", 3, 4, [](Tape&, Var x) { return gelu(x); }},
      {"tanh", 3, 4, [](Tape&, Var x) { return tanh(x); }},
      {"sigmoid", 3, 4, [](Tape&, Var x) { return sigmoid(x); }},
      {"exp", 3, 4, [](Tape&, Var x) { return exp(x); }},
      {"erf", 3, 4, [](Tape&, Var x) { return erf(x); }},
      {"square", 3, 4, [](Tape&, Var x) { return square(x); }},
      {"sqrt", 3, 4, [](Tape&, Var x) { return sqrt(add_scalar(square(x), 0.5)); }},
      {"sum", 3, 4, [](Tape&, Var x) { return square(sum(x)); }},
      {"mean", 3, 4, [](Tape&, Var x) { return square(mean(x)); }},
      {"sum_rows", 3, 4, [](Tape&, Var x) { return square(sum_rows(x)); }},
      {"broadcast_row", 1, 4, [](Tape&, Var x) { return square(broadcast_row(x, 3)); }},
      {"expand", 1, 1, [](Tape&, Var x) { return square(expand(x, 2, 3)); }},
      {"gather", 3, 4, [=](Tape&, Var x) { return square(gather_rows(x, idx)); }},
      {"scatter_add", 5, 2, [=](Tape&, Var x) { return square(scatter_add_rows(x, dst, 4)); }},
      {"concat", 3, 4, [=](Tape& t, Var x) { return square(concat_cols(x, mul(x, c(t, other)))); }},
      {"slice", 3, 4, [](Tape&, Var x) { return square(slice_cols(x, 1, 2)); }},
      {"pad", 3, 4, [](Tape&, Var x) { return square(pad_cols(x, 2, 7)); }},
  };
}

ScalarFn probe(const OpCase& oc, std::uint64_t seed) {
  return [oc, seed](Tape& t, Var x) {
    const Var y = oc.build(t, x);
    std::mt19937_64 rng(seed);
    const Tensor w = random_tensor(y.rows(), y.cols(), rng);
    return sum(mul(y, t.constant(w)));
  };
}

TEST(Invariants, EveryOpMatchesCentralDifferences) {
  std::mt19937_64 rng(2024);
  for (const auto& oc : op_cases()) {
    for (int trial = 0; trial < 5; ++trial) {
      const Tensor x = random_tensor(oc.rows, oc.cols, rng);
      const double err = finite_diff_check(probe(oc, 10 + trial), x, 1e-5);
      EXPECT_LE(err, 1e-6) << oc.name << " trial " << trial;
    }
  }
}

TEST(Invariants, EveryOpHasCorrectSecondDerivative) {
  // Hessian-vector products through the differentiable backward pass versus
  // central differences of the first-order gradient.
  std::mt19937_64 rng(77);
  for (const auto& oc : op_cases()) {
    const ScalarFn f = probe(oc, 3);
    const Tensor x = random_tensor(oc.rows, oc.cols, rng);
    const Tensor v = random_tensor(oc.rows, oc.cols, rng);
    const Tensor hv = hessian_vector_product(f, x, v);
    const double h = 1e-5;
    Tensor xp = x, xm = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
      xp[i] += h * v[i];
      xm[i] -= h * v[i];
    }
    const Tensor fd = (1.0 / (2 * h)) * (gradient_of(f, xp) - gradient_of(f, xm));
    EXPECT_LE(max_rel_error(hv, fd), 1e-6) << oc.name;
    if (!oc.smooth) EXPECT_LE(frobenius_norm(hv), 1e-12) << oc.name;
  }
}

TEST(Hvp, DiagonalQuadratic) {
  const Tensor a = Tensor::matrix({{2, 0}, {0, 4}});
  const ScalarFn f = [a](Tape& t, Var x) {
    return scale(sum(mul(x, matmul(t.constant(a), x))), 0.5);
  };
  const Tensor v = Tensor::column({1, 1});
  Tensor want(2, 1);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) want[i] += a(i, j) * v[j];
  const Tensor got = hessian_vector_product(f, Tensor::column({0.3, -0.7}), v);
  EXPECT_LE(max_rel_error(got, want), 1e-12);
  EXPECT_DOUBLE_EQ(got[0], 2.0);
  EXPECT_DOUBLE_EQ(got[1], 4.0);
}

TEST(Hvp, LinearFunctionHasZeroHessian) {
  const Tensor w = Tensor::column({1.5, -2, 0.25});
  const ScalarFn f = [w](Tape& t, Var x) { return sum(mul(x, t.constant(w))); };
  const Tensor got = hessian_vector_product(f, Tensor::column({1, 2, 3}), Tensor::column({1, 1, 1}));
  EXPECT_EQ(got, Tensor(3, 1));
}

TEST(Hvp, QuarticMatchesGradientDifference) {
  const ScalarFn f = [](Tape&, Var x) { return sum(square(square(x))); };
  const double h = 1e-5;
  const double fd = (gradient_of(f, Tensor::scalar(1 + h)).item() -
                     gradient_of(f, Tensor::scalar(1 - h)).item()) / (2 * h);
  const double got = hessian_vector_product(f, Tensor::scalar(1.0), Tensor::scalar(1.0)).item();
  EXPECT_NEAR(fd, 12.0, 1e-6);
  EXPECT_NEAR(got, fd, 1e-6);
}

TEST(Hvp, ShapeMismatchRejected) {
  const ScalarFn f = [](Tape&, Var x) { return sum(x); };
  EXPECT_THROW(hessian_vector_product(f, Tensor(2, 1), Tensor(1, 2)), ShapeError);
  const ScalarFn g = [](Tape&, Var x) { return square(x); };
  EXPECT_THROW(hessian_vector_product(g, Tensor(2, 1), Tensor(2, 1)), ShapeError);
}

TEST(Invariants, HvpOnRandomQuadraticForms) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 7;
    const Tensor b = random_tensor(n, n, rng);
    Tensor a(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) a(i, j) += b(k, i) * b(k, j);
    const ScalarFn f = [a](Tape& t, Var x) {
      return scale(sum(mul(x, matmul(t.constant(a), x))), 0.5);
    };
    const Tensor x = random_tensor(n, 1, rng);
    const Tensor v = random_tensor(n, 1, rng);
    Tensor want(n, 1);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) want[i] += a(i, j) * v[j];
    const Tensor got = hessian_vector_product(f, x, v);
    EXPECT_LE(frobenius_norm(got - want) / std::max(1.0, frobenius_norm(want)), 1e-8);
  }
}

TEST(FiniteDiff, SumOfSquares) {
  std::mt19937_64 rng(11);
  const Tensor x = random_tensor(4, 3, rng);
  EXPECT_LE(finite_diff_check([](Tape&, Var v) { return sum(square(v)); }, x, 1e-5), 1e-6);
}

TEST(FiniteDiff, ConstantFunctionHasZeroError) {
  const ScalarFn f = [](Tape& t, Var) { return t.constant(Tensor::scalar(4.0)); };
  EXPECT_EQ(finite_diff_check(f, Tensor(3, 2, 0.5), 1e-5), 0.0);
}

TEST(FiniteDiff, RejectsNonPositiveStep) {
  const ScalarFn f = [](Tape&, Var v) { return sum(v); };
  EXPECT_THROW(finite_diff_check(f, Tensor(1, 1), 0.0), std::invalid_argument);
}

TEST(Invariants, ForwardBackwardIsBitDeterministic) {
  std::mt19937_64 rng(3);
  const Tensor x = random_tensor(6, 5, rng);
  const Tensor w = random_tensor(5, 5, rng);
  auto run = [&] {
    Tape tape;
    const Var xv = tape.variable(x);
    const Var y = sum(square(gelu(matmul(xv, tape.constant(w)))));
    const std::array<Var, 1> wrt{xv};
    return std::pair{y.value(), tape.gradient(y, wrt).front()};
  };
  const auto first = run();
  const auto second = run();
  EXPECT_EQ(first.first, second.first);
  EXPECT_EQ(first.second, second.second);
}

TEST(Invariants, ReplayReproducesRecordedValues) {
  std::mt19937_64 rng(4);
  Tape tape;
  const Var x = tape.variable(random_tensor(4, 3, rng));
  const Var w = tape.variable(random_tensor(3, 3, rng));
  const Var y = sum(sigmoid(matmul(tanh(x), w)));
  const std::array<Var, 2> wrt{x, w};
  (void)tape.grad(y, wrt);
  EXPECT_TRUE(tape.replay_matches());
}

TEST(Invariants, BackwardIsLinear) {
  std::mt19937_64 rng(8);
  const Tensor x = random_tensor(3, 4, rng);
  const ScalarFn f = [](Tape&, Var v) { return sum(tanh(v)); };
  const ScalarFn g = [](Tape&, Var v) { return sum(mul(v, square(v))); };
  const double a = 1.75, b = -0.6;
  const ScalarFn combo = [&](Tape& t, Var v) { return add(scale(f(t, v), a), scale(g(t, v), b)); };
  const Tensor lhs = gradient_of(combo, x);
  const Tensor rhs = a * gradient_of(f, x) + b * gradient_of(g, x);
  EXPECT_LE(max_abs_diff(lhs, rhs), 1e-12);
}

TEST(Backward, GradientWithRespectToIntermediateNode) {
  Tape tape;
  const Var x = tape.variable(Tensor::row({0.5, -1.0}));
  const Var h = scale(x, 2.0);
  const Var y = sum(square(h));
  const std::array<Var, 1> wrt{h};
  EXPECT_EQ(tape.gradient(y, wrt).front(), Tensor::row({2.0, -4.0}));
}

}  // namespace
}  // namespace tango::ad
