#include "tango/training/adam.hpp"

#include <cmath>

namespace tango::training {

void adam_step(std::span<ad::Tensor* const> params, std::span<const ad::Tensor> grads, OptimState& st, double lr,
               double weight_decay) {
  if (params.size() != grads.size()) throw ad::ShapeError("adam_step: parameter and gradient counts differ");
  if (st.m.empty()) {
    for (const auto* p : params) {
      st.m.emplace_back(p->rows(), p->cols());
      st.v.emplace_back(p->rows(), p->cols());
    }
  }
  if (st.m.size() != params.size()) throw ad::ShapeError("adam_step: optimizer state has a different parameter count");
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(st.beta1, t);
  const double c2 = 1.0 - std::pow(st.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    ad::Tensor& p = *params[i];
    const ad::Tensor& g = grads[i];
    if (!p.same_shape(g) || !p.same_shape(st.m[i])) {
      throw ad::ShapeError("adam_step: shape mismatch for parameter " + std::to_string(i));
    }
    auto m = st.m[i].values();
    auto v = st.v[i].values();
    auto w = p.values();
    const auto gv = g.values();
    for (std::size_t k = 0; k < w.size(); ++k) {
      m[k] = st.beta1 * m[k] + (1.0 - st.beta1) * gv[k];
      v[k] = st.beta2 * v[k] + (1.0 - st.beta2) * gv[k] * gv[k];
      const double mhat = m[k] / c1;
      const double vhat = v[k] / c2;
      if (weight_decay > 0.0) w[k] -= lr * weight_decay * w[k];
      w[k] -= lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

}  // namespace tango::training
