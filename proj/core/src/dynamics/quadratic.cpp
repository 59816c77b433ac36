#include "tango/dynamics/quadratic.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

namespace tango::dynamics {

using ad::Tape;
using ad::Tensor;
using ad::Var;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::Map<const RowMatrix> view(const Tensor& t) {
  return {t.data(), static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols())};
}

double gaussian(Rng& rng) {
  // Box-Muller on the portable uniform stream.
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

ad::ScalarFn Quadratic::energy() const {
  return [this](Tape& tape, Var h) {
    const Var e = h - tape.constant(minimizer);
    return ad::scale(ad::matmul(ad::matmul(e, tape.constant(a), true, false), e), 0.5);
  };
}

Quadratic random_quadratic(std::size_t dim, double condition, Rng& rng, bool zero_minimizer) {
  if (dim < 1) throw std::invalid_argument("random_quadratic: dim must be positive");
  if (!(condition >= 1.0)) throw std::invalid_argument("random_quadratic: condition must be >= 1");
  RowMatrix z(dim, dim);
  for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = gaussian(rng);
  const Eigen::HouseholderQR<RowMatrix> qr(z);
  const RowMatrix q = qr.householderQ();
  Eigen::VectorXd lambda(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    const double t = dim == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(dim - 1);
    lambda[static_cast<Eigen::Index>(i)] = std::pow(condition, t);
  }
  RowMatrix a = q * lambda.asDiagonal() * q.transpose();
  a = 0.5 * (a + a.transpose()).eval();

  Quadratic out;
  out.a = Tensor(dim, dim, std::vector<double>(a.data(), a.data() + a.size()));
  out.minimizer = Tensor(dim, 1);
  if (!zero_minimizer) {
    for (auto& v : out.minimizer.values()) v = rng.uniform(-1.0, 1.0);
  }
  out.lambda_min = 1.0;
  out.lambda_max = dim == 1 ? 1.0 : condition;
  return out;
}

Tensor quadratic_gradient(const Quadratic& q, const Tensor& h) { return ad::gradient_of(q.energy(), h); }

Tensor newton_direction(const Quadratic& q, const Tensor& h) {
  const std::size_t k = q.dim();
  const auto f = q.energy();
  RowMatrix hess(k, k);
  for (std::size_t j = 0; j < k; ++j) {
    Tensor e(k, 1);
    e[j] = 1.0;
    const Tensor col = ad::hessian_vector_product(f, h, e);
    for (std::size_t i = 0; i < k; ++i) hess(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
  }
  const Tensor g = quadratic_gradient(q, h);
  const Eigen::LLT<RowMatrix> llt(0.5 * (hess + hess.transpose()));
  if (llt.info() != Eigen::Success) throw std::runtime_error("newton_direction: Hessian is not positive definite");
  const Eigen::VectorXd n = llt.solve(view(g).col(0));
  return Tensor(k, 1, std::vector<double>(n.data(), n.data() + n.size()));
}

double optimal_step(const Quadratic& q) { return 2.0 / (q.lambda_max + q.lambda_min); }

double predicted_contraction(const Quadratic& q) {
  return (q.lambda_max - q.lambda_min) / (q.lambda_max + q.lambda_min);
}

double measured_contraction(const Quadratic& q, const Tensor& h0, std::size_t steps, std::size_t window) {
  if (window == 0 || window > steps) throw std::invalid_argument("measured_contraction: need 0 < window <= steps");
  const double eta = optimal_step(q);
  Tensor h = h0;
  double err_start = 0.0;
  for (std::size_t s = 0; s < steps; ++s) {
    if (s == steps - window) err_start = ad::frobenius_norm(h - q.minimizer);
    h = h - eta * quadratic_gradient(q, h);
  }
  const double err_end = ad::frobenius_norm(h - q.minimizer);
  return std::pow(err_end / err_start, 1.0 / static_cast<double>(window));
}

std::size_t gd_steps_to_tolerance(const Quadratic& q, const Tensor& h0, double rel_tol, std::size_t cap) {
  const double eta = optimal_step(q);
  const double target = rel_tol * ad::frobenius_norm(h0 - q.minimizer);
  Tensor h = h0;
  for (std::size_t s = 0; s < cap; ++s) {
    if (ad::frobenius_norm(h - q.minimizer) <= target) return s;
    h = h - eta * quadratic_gradient(q, h);
  }
  return cap;
}

}  // namespace tango::dynamics
