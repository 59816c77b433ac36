#include "tango/dynamics/verification.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tango/autodiff/check.hpp"
#include "tango/dynamics/quadratic.hpp"
#include "tango/graphs/generators.hpp"

namespace tango::dynamics {

using ad::Tape;
using ad::Tensor;
using ad::Var;
using nets::Binder;

namespace {

void randomize_biases(auto& model, Rng& rng) {
  visit_params(model, "", [&](const std::string& name, Tensor& t) {
    if (name.ends_with("bias")) {
      for (auto& b : t.values()) b = rng.uniform(-0.5, 0.5);
    }
  });
}

Tensor random_features(std::size_t n, std::size_t d, Rng& rng) {
  Tensor h(n, d);
  for (auto& v : h.values()) v = rng.uniform(-1.0, 1.0);
  return h;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

CheckResult at_most(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value <= threshold, value, threshold, std::move(detail)};
}

CheckResult at_least(std::string name, double value, double threshold, std::string detail = {}) {
  return {std::move(name), value >= threshold, value, threshold, std::move(detail)};
}

TangoConfig base_config(const VerifyOptions& opt, std::size_t d) {
  TangoConfig cfg;
  cfg.L = 1;
  cfg.d = d;
  cfg.epsilon = 0.1;
  cfg.projection = opt.projection;
  return cfg;
}

}  // namespace

Instance random_instance(Rng& rng, std::size_t n_min, std::size_t n_max, std::size_t d) {
  Instance in;
  const auto n = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(n_min), static_cast<std::int64_t>(n_max)));
  const auto family = graphs::kAllFamilies[rng.below(graphs::kAllFamilies.size())];
  in.graph = graphs::generate_family(family, n, rng);
  const auto kind = rng.bernoulli(0.5) ? nets::LayerKind::GatedGcn : nets::LayerKind::Gcn;
  in.energy = init_energy_model(kind, d, 2, nets::Activation::Tanh, rng);
  in.tangent = init_tangent_model(kind, d, 2, nets::Activation::Tanh, rng);
  randomize_biases(in.energy, rng);
  randomize_biases(in.tangent, rng);
  in.h = random_features(in.graph.num_nodes(), d, rng);
  return in;
}

CheckResult check_gradient_fd(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x01);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.gradient_instances; ++i) {
    const Instance in = random_instance(rng, 5, 5, 4);
    const ad::ScalarFn f = [&](Tape& tape, Var h) {
      Binder bind(tape, false);
      return energy_forward(bind, in.energy, in.graph, h).energy;
    };
    worst = std::max(worst, ad::finite_diff_check(f, in.h, 1e-5));
  }
  return at_most("gradient-fd", worst, 1e-4, std::to_string(opt.gradient_instances) + " instances, n=5, d=4");
}

CheckResult check_second_order_fd(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x02);
  double worst = 0.0;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < opt.second_order_instances; ++i) {
    Instance in = random_instance(rng, 5, 5, 3);
    const Tensor target = random_features(5, 3, rng);
    const TangoConfig cfg = base_config(opt, 3);

    const auto loss_value = [&]() {
      const auto s = tango_step(in.energy, in.tangent, in.graph, in.h, cfg);
      return ad::frobenius_dot(s.h - target, s.h - target) / static_cast<double>(s.h.size());
    };

    Tape tape;
    Binder bind(tape, true);
    const Var out = tango_step(bind, in.energy, in.tangent, in.graph, tape.constant(in.h), cfg);
    const Var loss = ad::mean(ad::square(out - tape.constant(target)));
    std::vector<Tensor*> params;
    std::vector<Var> wrt;
    visit_params(in.energy, "", [&](const std::string&, Tensor& t) {
      params.push_back(&t);
      const Var v = bind.find(t);
      wrt.push_back(v.valid() ? v : tape.constant(Tensor(t.rows(), t.cols())));
    });
    const auto grads = tape.gradient(loss, wrt);

    const double h = 1e-5;
    for (std::size_t p = 0; p < params.size(); ++p) {
      for (std::size_t k = 0; k < params[p]->size(); ++k) {
        double& w = (*params[p])[k];
        const double w0 = w;
        w = w0 + h;
        const double up = loss_value();
        w = w0 - h;
        const double down = loss_value();
        w = w0;
        const double fd = (up - down) / (2.0 * h);
        worst = std::max(worst, std::abs(grads[p][k] - fd) / std::max(1.0, std::abs(fd)));
        ++checked;
      }
    }
  }
  return at_most("second-order-fd", worst, 1e-3, std::to_string(checked) + " energy-parameter entries");
}

CheckResult check_orthogonality(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x03);
  double worst = 0.0;
  std::size_t counted = 0;
  for (std::size_t i = 0; i < opt.orthogonality_instances; ++i) {
    const Instance in = random_instance(rng, 4, 16, 4);
    const Tensor grad = energy_gradient(in.energy, in.graph, in.h);
    TangoConfig cfg = base_config(opt, 4);
    const double tol = zero_threshold(cfg, in.h.rows(), in.h.cols());
    if (ad::frobenius_norm(grad) <= tol) continue;
    const Tensor m = tangent_raw(in.tangent, in.graph, in.h);
    const Tensor t = project_orthogonal(m, grad, tol, opt.projection);
    const double scale = std::max(1.0, ad::frobenius_norm(t) * ad::frobenius_norm(grad));
    worst = std::max(worst, std::abs(ad::frobenius_dot(t, grad)) / scale);
    ++counted;
  }
  return at_most("orthogonality", worst, 1e-9,
                 "max |<T,grad V>| / max(1, |T||grad V|) over " + std::to_string(counted) + " instances");
}

CheckResult check_dissipation_slope(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x04);
  double worst = INFINITY;
  for (std::size_t i = 0; i < opt.dissipation_instances; ++i) {
    const Instance in = random_instance(rng, 5, 12, 4);
    TangoConfig cfg = base_config(opt, 4);
    std::array<double, 3> resid{};
    const std::array<double, 3> eps{1e-2, 1e-3, 1e-4};
    for (std::size_t k = 0; k < eps.size(); ++k) {
      cfg.epsilon = eps[k];
      const auto s = tango_step(in.energy, in.tangent, in.graph, in.h, cfg);
      const double v1 = energy_value(in.energy, in.graph, s.h);
      const double slope = (v1 - s.trace.energy) / eps[k];
      resid[k] = std::abs(slope + s.trace.alpha * s.trace.grad_norm * s.trace.grad_norm);
    }
    worst = std::min({worst, resid[0] / resid[1], resid[1] / resid[2]});
  }
  return at_least("dissipation-slope", worst, 5.0,
                  "min shrink factor of |dV/eps + alpha |grad V|^2| per 10x smaller eps");
}

CheckResult check_flat_landscape(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x05);
  double worst = 0.0;
  double smallest_motion = INFINITY;
  for (std::size_t i = 0; i < opt.flat_instances; ++i) {
    Instance in = random_instance(rng, 5, 12, 4);
    for (auto& w : in.energy.head.layers.back().weight.values()) w = 0.0;
    TangoConfig cfg = base_config(opt, 4);
    const auto s = tango_step(in.energy, in.tangent, in.graph, in.h, cfg);
    const Tensor m = tangent_raw(in.tangent, in.graph, in.h);
    const double moved = ad::frobenius_norm(s.h - in.h);
    const double predicted = cfg.epsilon * std::abs(s.trace.beta) * ad::frobenius_norm(m);
    worst = std::max(worst, std::abs(moved - predicted));
    smallest_motion = std::min(smallest_motion, moved);
  }
  auto r = at_most("flat-landscape-motion", worst, 1e-10, "min |dH| = " + fmt(smallest_motion));
  r.pass = r.pass && smallest_motion > 0.0;
  return r;
}

CheckResult check_newton_recovery(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x06);
  double worst = 0.0;
  std::size_t fewest_gd = SIZE_MAX;
  for (std::size_t i = 0; i < opt.quadratic_instances; ++i) {
    const double cond = i == 0 ? 1e4 : std::pow(10.0, rng.uniform(2.0, 4.0));
    const auto dim = static_cast<std::size_t>(rng.between(10, 50));
    const Quadratic q = random_quadratic(dim, cond, rng);
    Tensor h0(dim, 1);
    for (auto& v : h0.values()) v = rng.uniform(-1.0, 1.0);
    const Tensor g = quadratic_gradient(q, h0);
    const auto split = newton_decomposition(g, newton_direction(q, h0));
    const Tensor h1 = h0 - (split.alpha * g + split.tangent);
    worst = std::max(worst, ad::frobenius_norm(h1 - q.minimizer) / ad::frobenius_norm(h0 - q.minimizer));
    fewest_gd = std::min(fewest_gd, gd_steps_to_tolerance(q, h0, 1e-8, 10'000'000));
  }
  auto r = at_most("newton-recovery", worst, 1e-8,
                   "relative error after one step; fewest gradient-descent steps to match: " + std::to_string(fewest_gd));
  r.pass = r.pass && fewest_gd >= 100;
  return r;
}

CheckResult check_gd_rate(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x07);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.quadratic_instances; ++i) {
    const double cond = std::pow(10.0, rng.uniform(1.0, 2.0));
    const auto dim = static_cast<std::size_t>(rng.between(5, 30));
    const Quadratic q = random_quadratic(dim, cond, rng, true);
    Tensor h0(dim, 1);
    for (auto& v : h0.values()) v = rng.uniform(-1.0, 1.0);
    const double measured = measured_contraction(q, h0, 2000, 100);
    worst = std::max(worst, std::abs(measured / predicted_contraction(q) - 1.0));
  }
  return at_most("gd-rate", worst, 0.05, "max relative gap to (lmax-lmin)/(lmax+lmin)");
}

CheckResult check_permutation_equivariance(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x08);
  double worst = 0.0;
  for (std::size_t i = 0; i < opt.equivariance_instances; ++i) {
    const Instance in = random_instance(rng, 4, 16, 4);
    const std::size_t n = in.graph.num_nodes();
    std::vector<std::int32_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::int32_t>(perm));
    Tensor ph(n, in.h.cols());
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < in.h.cols(); ++c) ph(static_cast<std::size_t>(perm[v]), c) = in.h(v, c);

    TangoConfig cfg = base_config(opt, 4);
    cfg.L = 3;
    const Tensor y = rollout(in.energy, in.tangent, in.graph, in.h, cfg).h;
    const Tensor py = rollout(in.energy, in.tangent, in.graph.permuted(perm), ph, cfg).h;
    for (std::size_t v = 0; v < n; ++v)
      for (std::size_t c = 0; c < y.cols(); ++c)
        worst = std::max(worst, std::abs(py(static_cast<std::size_t>(perm[v]), c) - y(v, c)));
  }
  return at_most("permutation-equivariance", worst, 1e-10, "max entry gap of a 3-step rollout");
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("fit_line needs two or more points");
  const double k = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / k;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / k;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_line: x values are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / k);
  return f;
}

CheckResult check_complexity_slope(const VerifyOptions& opt) {
  Rng rng(opt.seed ^ 0x09);
  const std::size_t d = 8;
  EnergyModel em = init_energy_model(nets::LayerKind::GatedGcn, d, 2, nets::Activation::Tanh, rng);
  TangentModel tm = init_tangent_model(nets::LayerKind::GatedGcn, d, 2, nets::Activation::Tanh, rng);
  TangoConfig cfg;
  cfg.L = 4;
  cfg.d = d;
  cfg.projection = opt.projection;

  std::vector<double> lx, ly;
  std::ostringstream detail;
  for (const std::size_t size : opt.complexity_sizes) {
    // Two edges per node on average: |V| + |E| = 3 |V|.
    const std::size_t n = size / 3;
    const graphs::Graph g = graphs::random_sparse_graph(n, size - n, rng);
    const Tensor h = random_features(n, d, rng);
    double best = INFINITY;
    for (int rep = 0; rep < 5; ++rep) {
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = rollout(em, tm, g, h, cfg);
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
      if (!r.h.all_finite()) throw ad::NonFiniteError("complexity rollout diverged");
    }
    lx.push_back(std::log(static_cast<double>(g.num_nodes() + g.num_edges())));
    ly.push_back(std::log(best));
    detail << g.num_nodes() + g.num_edges() << ":" << fmt(best * 1e3) << "ms ";
  }
  const LineFit fit = fit_line(lx, ly);
  detail << "residual " << fmt(fit.rms_residual);
  return at_most("complexity-slope", fit.slope, 1.25, detail.str());
}

std::vector<CheckResult> run_all_checks(const VerifyOptions& opt) {
  return {check_gradient_fd(opt),     check_second_order_fd(opt),  check_orthogonality(opt),
          check_dissipation_slope(opt), check_flat_landscape(opt), check_newton_recovery(opt),
          check_gd_rate(opt),         check_permutation_equivariance(opt), check_complexity_slope(opt)};
}

}  // namespace tango::dynamics
