#include "tango/training/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace tango::training {

std::string_view metric_name(Metric m) noexcept { return m == Metric::Log10Mse ? "log10_mse" : "mae"; }

std::optional<Metric> parse_metric(std::string_view name) noexcept {
  if (name == "log10_mse") return Metric::Log10Mse;
  if (name == "mae") return Metric::Mae;
  return std::nullopt;
}

ad::Var loss_mse(ad::Var pred, ad::Var target) { return ad::mean(ad::square(pred - target)); }

void ErrorAccumulator::add(const ad::Tensor& pred, const ad::Tensor& target) {
  if (!pred.same_shape(target)) {
    throw ad::ShapeError("metric: prediction " + pred.shape_string() + " vs target " + target.shape_string());
  }
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double e = pred[i] - target[i];
    squared_ += e * e;
    absolute_ += std::abs(e);
  }
  count_ += pred.size();
}

double ErrorAccumulator::mse() const {
  if (count_ == 0) throw std::invalid_argument("metric over empty input");
  return squared_ / static_cast<double>(count_);
}

double ErrorAccumulator::mae() const {
  if (count_ == 0) throw std::invalid_argument("metric over empty input");
  return absolute_ / static_cast<double>(count_);
}

double ErrorAccumulator::metric(Metric m) const { return m == Metric::Log10Mse ? log10_floored(mse()) : mae(); }

double log10_floored(double mse_value) {
  if (mse_value <= 0.0) return kLog10Floor;
  return std::max(kLog10Floor, std::log10(mse_value));
}

double mse(const ad::Tensor& pred, const ad::Tensor& target) {
  ErrorAccumulator acc;
  acc.add(pred, target);
  return acc.mse();
}

double mae(const ad::Tensor& pred, const ad::Tensor& target) {
  ErrorAccumulator acc;
  acc.add(pred, target);
  return acc.mae();
}

double log10_mse(const ad::Tensor& pred, const ad::Tensor& target) { return log10_floored(mse(pred, target)); }

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("mean_std of no values");
  MeanStd out;
  for (const double v : values) out.mean += v;
  out.mean /= static_cast<double>(values.size());
  double ss = 0.0;
  for (const double v : values) ss += (v - out.mean) * (v - out.mean);
  out.std = std::sqrt(ss / static_cast<double>(values.size()));
  return out;
}

}  // namespace tango::training
