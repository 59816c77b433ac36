#pragma once

#include <cstddef>

#include "tango/autodiff/check.hpp"
#include "tango/rng.hpp"

namespace tango::dynamics {

/// V(h) = 1/2 (h - h*)^T A (h - h*) with SPD A of known spectrum.
struct Quadratic {
  ad::Tensor a;          // k x k
  ad::Tensor minimizer;  // k x 1
  double lambda_min = 0.0;
  double lambda_max = 0.0;

  std::size_t dim() const noexcept { return a.rows(); }
  double condition() const noexcept { return lambda_max / lambda_min; }
  /// The energy as a tape function, so gradients and Hessian products come from autodiff.
  ad::ScalarFn energy() const;
};

/// A = Q diag(lambda) Q^T with Q a random rotation and eigenvalues
/// log-spaced in [1, condition]; the minimizer is uniform in [-1, 1]^k or zero.
Quadratic random_quadratic(std::size_t dim, double condition, Rng& rng, bool zero_minimizer = false);

ad::Tensor quadratic_gradient(const Quadratic& q, const ad::Tensor& h);
/// Newton direction (grad^2 V)^-1 grad V with the Hessian assembled column by
/// column from Hessian-vector products.
ad::Tensor newton_direction(const Quadratic& q, const ad::Tensor& h);

/// Step 2 / (lambda_max + lambda_min), optimal for fixed-step gradient descent.
double optimal_step(const Quadratic& q);
/// (lambda_max - lambda_min) / (lambda_max + lambda_min).
double predicted_contraction(const Quadratic& q);

/// Runs `steps` fixed-step gradient-descent iterations from h0 and returns
/// the geometric-mean error contraction over the final `window` steps.
double measured_contraction(const Quadratic& q, const ad::Tensor& h0, std::size_t steps, std::size_t window);

/// Number of gradient-descent steps until ||h - h*|| <= rel_tol ||h0 - h*||,
/// or `cap` if never reached.
std::size_t gd_steps_to_tolerance(const Quadratic& q, const ad::Tensor& h0, double rel_tol, std::size_t cap);

}  // namespace tango::dynamics
