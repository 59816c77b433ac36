#pragma once

#include <span>
#include <vector>

#include "tango/autodiff/tensor.hpp"

namespace tango::training {

struct OptimState {
  std::vector<ad::Tensor> m;
  std::vector<ad::Tensor> v;
  std::size_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam; weight decay is decoupled (AdamW) and skipped when wd = 0.
/// Moments are created on the first call. Throws ad::ShapeError when a
/// gradient or stored moment does not match its parameter.
void adam_step(std::span<ad::Tensor* const> params, std::span<const ad::Tensor> grads, OptimState& st, double lr,
               double weight_decay);

}  // namespace tango::training
