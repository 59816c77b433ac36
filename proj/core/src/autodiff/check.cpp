#include "tango/autodiff/check.hpp"

#include <algorithm>
#include <cmath>

namespace tango::ad {

namespace {
Var checked_output(const ScalarFn& f, Tape& tape, Var x) {
  Var y = f(tape, x);
  if (y.value().size() != 1) {
    throw ShapeError("scalar function returned shape " + y.value().shape_string());
  }
  return y;
}
}  // namespace

double evaluate_scalar(const ScalarFn& f, const Tensor& x) {
  Tape tape;
  const Var xv = tape.constant(x);
  return checked_output(f, tape, xv).value().item();
}

Tensor gradient_of(const ScalarFn& f, const Tensor& x) {
  Tape tape;
  const Var xv = tape.variable(x);
  const Var y = checked_output(f, tape, xv);
  const std::array<Var, 1> wrt{xv};
  return tape.gradient(y, wrt).front();
}

Tensor hessian_vector_product(const ScalarFn& f, const Tensor& x, const Tensor& v) {
  if (!x.same_shape(v)) {
    throw ShapeError("hessian_vector_product: v " + v.shape_string() + " vs x " + x.shape_string());
  }
  Tape tape;
  const Var xv = tape.variable(x);
  const Var y = checked_output(f, tape, xv);
  const std::array<Var, 1> wrt{xv};
  const Var g = tape.grad(y, wrt).front();
  const Var gv = sum(mul(g, tape.constant(v)));
  return tape.gradient(gv, wrt).front();
}

Tensor central_difference(const ScalarFn& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("central_difference: h must be positive");
  Tensor g(x.rows(), x.cols());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double up = evaluate_scalar(f, probe);
    probe[i] = x[i] - h;
    const double down = evaluate_scalar(f, probe);
    probe[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double finite_diff_check(const ScalarFn& f, const Tensor& x, double h) {
  const Tensor ad = gradient_of(f, x);
  const Tensor fd = central_difference(f, x, h);
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    worst = std::max(worst, std::abs(ad[i] - fd[i]) / std::max(1.0, std::abs(fd[i])));
  }
  return worst;
}

}  // namespace tango::ad
