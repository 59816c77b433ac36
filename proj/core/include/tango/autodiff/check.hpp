#pragma once

#include <functional>

#include "tango/autodiff/tape.hpp"

namespace tango::ad {

/// A scalar function recorded onto a caller-provided tape.
using ScalarFn = std::function<Var(Tape&, Var)>;

/// Value of f at x, evaluated on a fresh tape.
double evaluate_scalar(const ScalarFn& f, const Tensor& x);

/// Gradient of f at x via one reverse pass.
Tensor gradient_of(const ScalarFn& f, const Tensor& x);

/// (d^2 f / dx^2)(x) . v, by differentiating the recorded gradient a second time.
Tensor hessian_vector_product(const ScalarFn& f, const Tensor& x, const Tensor& v);

/// Central differences of f at x with step h, one component at a time.
Tensor central_difference(const ScalarFn& f, const Tensor& x, double h);

/// max_i |g_ad[i] - g_fd[i]| / max(1, |g_fd[i]|); 0 for an empty x.
double finite_diff_check(const ScalarFn& f, const Tensor& x, double h);

}  // namespace tango::ad
