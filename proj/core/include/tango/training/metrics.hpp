#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "tango/autodiff/tape.hpp"

namespace tango::training {

enum class Metric { Log10Mse, Mae };

std::string_view metric_name(Metric m) noexcept;
std::optional<Metric> parse_metric(std::string_view name) noexcept;

inline constexpr double kLog10Floor = -12.0;

/// Tape-level mean squared error.
ad::Var loss_mse(ad::Var pred, ad::Var target);

// Value-level metrics; throw std::invalid_argument on empty input and
// ad::ShapeError on mismatched shapes.
double mse(const ad::Tensor& pred, const ad::Tensor& target);
double mae(const ad::Tensor& pred, const ad::Tensor& target);
/// log10(mse), floored at kLog10Floor.
double log10_mse(const ad::Tensor& pred, const ad::Tensor& target);
double log10_floored(double mse_value);

/// Running sums over many prediction/target pairs; entries weigh equally.
class ErrorAccumulator {
 public:
  void add(const ad::Tensor& pred, const ad::Tensor& target);
  std::size_t count() const noexcept { return count_; }
  double mse() const;
  double mae() const;
  double metric(Metric m) const;

 private:
  double squared_ = 0.0;
  double absolute_ = 0.0;
  std::size_t count_ = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

MeanStd mean_std(std::span<const double> values);

}  // namespace tango::training
