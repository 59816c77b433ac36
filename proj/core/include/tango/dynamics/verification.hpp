#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tango/dynamics/tango.hpp"

namespace tango::dynamics {

struct CheckResult {
  std::string check;
  bool pass = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyOptions {
  std::uint64_t seed = 0;
  ProjectionForm projection = ProjectionForm::Orthogonal;
  /// Instance counts per check; scaled down only in quick unit tests.
  std::size_t orthogonality_instances = 1000;
  std::size_t gradient_instances = 100;
  std::size_t second_order_instances = 5;
  std::size_t dissipation_instances = 50;
  std::size_t flat_instances = 20;
  std::size_t quadratic_instances = 10;
  std::size_t equivariance_instances = 20;
  std::vector<std::size_t> complexity_sizes{1000, 2000, 4000, 8000};
};

/// Random graph, smooth-activation models and features for property checks.
struct Instance {
  graphs::Graph graph;
  EnergyModel energy;
  TangentModel tangent;
  ad::Tensor h;
};

/// n uniform in [n_min, n_max], family uniform, layer kind alternating by a
/// coin flip, tanh activations, biases uniform in [-0.5, 0.5].
Instance random_instance(Rng& rng, std::size_t n_min, std::size_t n_max, std::size_t d);

CheckResult check_gradient_fd(const VerifyOptions& opt);
CheckResult check_second_order_fd(const VerifyOptions& opt);
CheckResult check_orthogonality(const VerifyOptions& opt);
CheckResult check_dissipation_slope(const VerifyOptions& opt);
CheckResult check_flat_landscape(const VerifyOptions& opt);
CheckResult check_newton_recovery(const VerifyOptions& opt);
CheckResult check_gd_rate(const VerifyOptions& opt);
CheckResult check_permutation_equivariance(const VerifyOptions& opt);
CheckResult check_complexity_slope(const VerifyOptions& opt);

std::vector<CheckResult> run_all_checks(const VerifyOptions& opt);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double rms_residual = 0.0;
};

/// Ordinary least squares y = slope x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace tango::dynamics
