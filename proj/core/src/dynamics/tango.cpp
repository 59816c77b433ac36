#include "tango/dynamics/tango.hpp"

#include <cmath>
#include <stdexcept>

namespace tango::dynamics {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using nets::Binder;

std::string_view variant_name(Variant v) noexcept {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NonEnergy: return "non-energy";
    case Variant::NonTangent: return "non-tangent";
    case Variant::DescentOnly: return "descent-only";
  }
  return "unknown";
}

std::optional<Variant> parse_variant(std::string_view name) noexcept {
  for (const auto v : {Variant::Full, Variant::NonEnergy, Variant::NonTangent, Variant::DescentOnly}) {
    if (variant_name(v) == name) return v;
  }
  return std::nullopt;
}

void TangoConfig::validate() const {
  if (L < 1) throw std::invalid_argument("TangoConfig: L must be at least 1");
  if (!(epsilon > 0.0)) throw std::invalid_argument("TangoConfig: epsilon must be positive");
  if (!(grad_zero_tol > 0.0)) throw std::invalid_argument("TangoConfig: grad_zero_tol must be positive");
  if (d < 1) throw std::invalid_argument("TangoConfig: d must be at least 1");
}

EnergyModel init_energy_model(nets::LayerKind kind, std::size_t d, std::size_t depth, nets::Activation sigma,
                              Rng& rng) {
  EnergyModel m;
  m.backbone = nets::init_backbone(kind, d, d, depth, sigma, rng);
  m.head = nets::init_mlp({d, d, 1}, sigma, rng);
  m.alpha_head = nets::init_mlp({d, d, 1}, sigma, rng);
  return m;
}

TangentModel init_tangent_model(nets::LayerKind kind, std::size_t d, std::size_t depth, nets::Activation sigma,
                                Rng& rng) {
  TangentModel m;
  m.backbone = nets::init_backbone(kind, d, d, depth, sigma, rng);
  m.beta_head = nets::init_mlp({d, d, 1}, sigma, rng);
  return m;
}

EnergyParts energy_forward(Binder& bind, const EnergyModel& em, const graphs::Graph& g, Var h) {
  EnergyParts p;
  p.h_tilde = nets::activate(em.backbone.sigma, nets::backbone_forward(bind, em.backbone, g, h));
  const Var scores = nets::mlp_forward(bind, em.head, p.h_tilde);
  if (scores.cols() != 1) throw ad::ShapeError("energy head must have output width 1");
  p.energy = ad::mean(ad::square(scores));
  return p;
}

Var energy_gradient(Binder& bind, const EnergyModel& em, const graphs::Graph& g, Var& h, EnergyParts* parts) {
  Tape& tape = bind.tape();
  if (!tape.node(h.id).requires_grad) h = tape.variable(h.value());
  const EnergyParts p = energy_forward(bind, em, g, h);
  if (parts != nullptr) *parts = p;
  const Var wrt[] = {h};
  return tape.grad(p.energy, wrt)[0];
}

Var alpha_coeff(Binder& bind, const EnergyModel& em, Var h_tilde) {
  return ad::sigmoid(nets::mlp_forward(bind, em.alpha_head, nets::sum_pool(h_tilde)));
}

Var tangent_raw(Binder& bind, const TangentModel& tm, const graphs::Graph& g, Var h) {
  return nets::activate(tm.backbone.sigma, nets::backbone_forward(bind, tm.backbone, g, h));
}

Var beta_coeff(Binder& bind, const TangentModel& tm, Var m) {
  return nets::mlp_forward(bind, tm.beta_head, nets::sum_pool(m));
}

Var project_orthogonal(Var m, Var direction, double tol, ProjectionForm form) {
  if (!m.value().same_shape(direction.value())) {
    throw ad::ShapeError("project_orthogonal: " + m.value().shape_string() + " vs " +
                         direction.value().shape_string());
  }
  if (!(tol > 0.0)) throw std::invalid_argument("project_orthogonal: tol must be positive");
  if (ad::frobenius_norm(direction.value()) <= tol) return m;
  const Var inner = ad::sum(m * direction);
  const Var norm2 = ad::sum(ad::square(direction));
  const Var coef = form == ProjectionForm::Orthogonal ? inner / norm2 : inner / ad::sqrt(norm2);
  return m - ad::scale_by(direction, coef);
}

double zero_threshold(const TangoConfig& cfg, std::size_t n, std::size_t d) {
  return cfg.grad_zero_tol * std::sqrt(static_cast<double>(n * d));
}

Var tango_step(Binder& bind, const EnergyModel& em, const TangentModel& tm, const graphs::Graph& g, Var h,
               const TangoConfig& cfg, StepTrace* trace) {
  const std::size_t n = h.rows();
  const std::size_t d = h.cols();
  EnergyParts parts;
  Var direction;
  if (cfg.variant == Variant::NonEnergy) {
    parts = energy_forward(bind, em, g, h);
    direction = parts.h_tilde;
    if (!direction.value().same_shape(h.value())) throw ad::ShapeError("non-energy variant needs H~ shaped like H");
  } else {
    direction = energy_gradient(bind, em, g, h, &parts);
  }
  const Var alpha = alpha_coeff(bind, em, parts.h_tilde);
  Var update = -ad::scale_by(direction, alpha);

  double beta_value = 0.0;
  double inner_value = 0.0;
  if (cfg.variant != Variant::DescentOnly) {
    const Var m = tangent_raw(bind, tm, g, h);
    const Var t = cfg.variant == Variant::NonTangent
                      ? m
                      : project_orthogonal(m, direction, zero_threshold(cfg, n, d), cfg.projection);
    const Var beta = beta_coeff(bind, tm, m);
    update = update + ad::scale_by(t, beta);
    beta_value = beta.value().item();
    inner_value = ad::frobenius_dot(t.value(), direction.value());
  }
  const Var out = h + ad::scale(update, cfg.epsilon);

  if (trace != nullptr) {
    trace->energy = parts.energy.value().item();
    trace->grad_norm = ad::frobenius_norm(direction.value());
    trace->alpha = alpha.value().item();
    trace->beta = beta_value;
    trace->tangent_grad_inner = inner_value;
  }
  return out;
}

Var rollout(Binder& bind, const EnergyModel& em, const TangentModel& tm, const graphs::Graph& g, Var h,
            const TangoConfig& cfg, std::vector<StepTrace>* traces) {
  cfg.validate();
  if (traces != nullptr) traces->clear();
  for (std::size_t l = 0; l < cfg.L; ++l) {
    StepTrace t;
    h = tango_step(bind, em, tm, g, h, cfg, &t);
    t.step_index = l;
    if (traces != nullptr) traces->push_back(t);
  }
  return h;
}

double energy_value(const EnergyModel& em, const graphs::Graph& g, const Tensor& h) {
  Tape tape;
  Binder bind(tape, false);
  return energy_forward(bind, em, g, tape.constant(h)).energy.value().item();
}

Tensor energy_gradient(const EnergyModel& em, const graphs::Graph& g, const Tensor& h) {
  Tape tape;
  Binder bind(tape, false);
  Var x = tape.variable(h);
  return energy_gradient(bind, em, g, x).value();
}

Tensor energy_intermediate(const EnergyModel& em, const graphs::Graph& g, const Tensor& h) {
  Tape tape;
  Binder bind(tape, false);
  return energy_forward(bind, em, g, tape.constant(h)).h_tilde.value();
}

double alpha_coeff(const EnergyModel& em, const Tensor& h_tilde) {
  Tape tape;
  Binder bind(tape, false);
  return alpha_coeff(bind, em, tape.constant(h_tilde)).value().item();
}

Tensor tangent_raw(const TangentModel& tm, const graphs::Graph& g, const Tensor& h) {
  Tape tape;
  Binder bind(tape, false);
  return tangent_raw(bind, tm, g, tape.constant(h)).value();
}

double beta_coeff(const TangentModel& tm, const Tensor& m) {
  Tape tape;
  Binder bind(tape, false);
  return beta_coeff(bind, tm, tape.constant(m)).value().item();
}

Tensor project_orthogonal(const Tensor& m, const Tensor& grad, double tol, ProjectionForm form) {
  Tape tape;
  return project_orthogonal(tape.constant(m), tape.constant(grad), tol, form).value();
}

StepResult tango_step(const EnergyModel& em, const TangentModel& tm, const graphs::Graph& g, const Tensor& h,
                      const TangoConfig& cfg) {
  Tape tape;
  Binder bind(tape, false);
  StepResult r;
  r.h = tango_step(bind, em, tm, g, tape.variable(h), cfg, &r.trace).value();
  return r;
}

RolloutResult rollout(const EnergyModel& em, const TangentModel& tm, const graphs::Graph& g, const Tensor& h0,
                      const TangoConfig& cfg) {
  cfg.validate();
  RolloutResult r;
  r.h = h0;
  for (std::size_t l = 0; l < cfg.L; ++l) {
    auto s = tango_step(em, tm, g, r.h, cfg);
    s.trace.step_index = l;
    r.h = std::move(s.h);
    r.traces.push_back(s.trace);
  }
  return r;
}

FlowStep dirichlet_flow_step(const graphs::Graph& g, const Tensor& h, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("dirichlet_flow_step: eps must be positive");
  FlowStep s;
  s.h = h - eps * graphs::laplacian_apply(g, h);
  const double lmax = graphs::laplacian_lambda_max(g);
  s.unstable = lmax > 0.0 && eps >= 2.0 / lmax;
  return s;
}

NewtonSplit newton_decomposition(const Tensor& grad, const Tensor& newton) {
  if (!grad.same_shape(newton)) throw ad::ShapeError("newton_decomposition: shape mismatch");
  const double g2 = ad::frobenius_dot(grad, grad);
  if (g2 == 0.0) throw std::invalid_argument("newton_decomposition: zero gradient");
  NewtonSplit s;
  s.alpha = ad::frobenius_dot(newton, grad) / g2;
  s.tangent = newton - s.alpha * grad;
  return s;
}

}  // namespace tango::dynamics
