#pragma once

#include <optional>
#include <string_view>
#include <vector>

#include "tango/graphs/graph.hpp"
#include "tango/nets/gnn.hpp"

namespace tango::dynamics {

enum class Variant { Full, NonEnergy, NonTangent, DescentOnly };

std::string_view variant_name(Variant v) noexcept;
std::optional<Variant> parse_variant(std::string_view name) noexcept;

/// Orthogonal: T = M - <M, g^> g^. Printed: T = M - <M, g^> g, which is
/// orthogonal to g only when ||g|| = 1; kept for comparison.
enum class ProjectionForm { Orthogonal, Printed };

struct EnergyModel {
  nets::BackboneParams backbone;
  nets::MlpParams head;        // per-node score, width 1
  nets::MlpParams alpha_head;  // pooled H~ -> alpha logit, width 1
};

struct TangentModel {
  nets::BackboneParams backbone;
  nets::MlpParams beta_head;  // pooled M -> beta, width 1
};

struct TangoConfig {
  std::size_t L = 10;
  double epsilon = 0.1;
  std::size_t d = 20;
  Variant variant = Variant::Full;
  double grad_zero_tol = 1e-12;
  ProjectionForm projection = ProjectionForm::Orthogonal;

  /// Throws std::invalid_argument on L = 0, epsilon <= 0 or grad_zero_tol <= 0.
  void validate() const;
};

/// grad_norm and tangent_grad_inner refer to the descent direction of the
/// step: grad V, or H~ for the non-energy variant.
struct StepTrace {
  double energy = 0.0;
  double grad_norm = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double tangent_grad_inner = 0.0;
  std::size_t step_index = 0;
};

/// Heads are two-layer MLPs d -> d -> 1 with the backbone activation.
EnergyModel init_energy_model(nets::LayerKind kind, std::size_t d, std::size_t depth, nets::Activation sigma, Rng& rng);
TangentModel init_tangent_model(nets::LayerKind kind, std::size_t d, std::size_t depth, nets::Activation sigma,
                                Rng& rng);

template <nets::MaybeConst<EnergyModel> E, class F>
void visit_params(E& m, const std::string& prefix, F&& f) {
  visit_params(m.backbone, nets::join_name(prefix, "backbone"), f);
  visit_params(m.head, nets::join_name(prefix, "head"), f);
  visit_params(m.alpha_head, nets::join_name(prefix, "alpha_head"), f);
}

template <nets::MaybeConst<TangentModel> T, class F>
void visit_params(T& m, const std::string& prefix, F&& f) {
  visit_params(m.backbone, nets::join_name(prefix, "backbone"), f);
  visit_params(m.beta_head, nets::join_name(prefix, "beta_head"), f);
}

// Tape-level building blocks. With a trainable binder every result stays
// differentiable with respect to the parameters, including the energy gradient.

struct EnergyParts {
  ad::Var h_tilde;  // sigma(EnergyGNN(H))
  ad::Var energy;   // (1/n) sum_v MLP_E(h~_v)^2
};

EnergyParts energy_forward(nets::Binder& bind, const EnergyModel& em, const graphs::Graph& g, ad::Var h);
/// grad_H V recorded on the tape. If h does not require a gradient it is
/// first replaced by a differentiable copy; `h` is updated to that copy.
ad::Var energy_gradient(nets::Binder& bind, const EnergyModel& em, const graphs::Graph& g, ad::Var& h,
                        EnergyParts* parts = nullptr);
ad::Var alpha_coeff(nets::Binder& bind, const EnergyModel& em, ad::Var h_tilde);
ad::Var tangent_raw(nets::Binder& bind, const TangentModel& tm, const graphs::Graph& g, ad::Var h);
ad::Var beta_coeff(nets::Binder& bind, const TangentModel& tm, ad::Var m);
/// `tol` is the Frobenius threshold below which `direction` counts as zero and T = M.
ad::Var project_orthogonal(ad::Var m, ad::Var direction, double tol, ProjectionForm form);

/// One forward-Euler layer H + eps (-alpha D + beta T).
ad::Var tango_step(nets::Binder& bind, const EnergyModel& em, const TangentModel& tm, const graphs::Graph& g,
                   ad::Var h, const TangoConfig& cfg, StepTrace* trace = nullptr);
ad::Var rollout(nets::Binder& bind, const EnergyModel& em, const TangentModel& tm, const graphs::Graph& g, ad::Var h,
                const TangoConfig& cfg, std::vector<StepTrace>* traces = nullptr);

double zero_threshold(const TangoConfig& cfg, std::size_t n, std::size_t d);

// Value-level entry points, each evaluated on a private tape.

double energy_value(const EnergyModel& em, const graphs::Graph& g, const ad::Tensor& h);
ad::Tensor energy_gradient(const EnergyModel& em, const graphs::Graph& g, const ad::Tensor& h);
ad::Tensor energy_intermediate(const EnergyModel& em, const graphs::Graph& g, const ad::Tensor& h);
double alpha_coeff(const EnergyModel& em, const ad::Tensor& h_tilde);
ad::Tensor tangent_raw(const TangentModel& tm, const graphs::Graph& g, const ad::Tensor& h);
double beta_coeff(const TangentModel& tm, const ad::Tensor& m);
/// Throws ShapeError on mismatched shapes; tol must be positive.
ad::Tensor project_orthogonal(const ad::Tensor& m, const ad::Tensor& grad, double tol,
                              ProjectionForm form = ProjectionForm::Orthogonal);

struct StepResult {
  ad::Tensor h;
  StepTrace trace;
};

struct RolloutResult {
  ad::Tensor h;
  std::vector<StepTrace> traces;
};

/// A single step accepts epsilon = 0 (identity); rollout validates cfg.
StepResult tango_step(const EnergyModel& em, const TangentModel& tm, const graphs::Graph& g, const ad::Tensor& h,
                      const TangoConfig& cfg);
RolloutResult rollout(const EnergyModel& em, const TangentModel& tm, const graphs::Graph& g, const ad::Tensor& h0,
                      const TangoConfig& cfg);

struct FlowStep {
  ad::Tensor h;
  bool unstable = false;  // eps >= 2 / lambda_max estimate
};

/// H - eps (D - A) H. Throws std::invalid_argument if eps <= 0.
FlowStep dirichlet_flow_step(const graphs::Graph& g, const ad::Tensor& h, double eps);

struct NewtonSplit {
  double alpha = 0.0;
  ad::Tensor tangent;
};

/// alpha* = <N, g> / ||g||^2 and T* = N - alpha* g. Throws std::invalid_argument on g = 0.
NewtonSplit newton_decomposition(const ad::Tensor& grad, const ad::Tensor& newton);

}  // namespace tango::dynamics
