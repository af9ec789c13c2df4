#include "fsmap/optimize.hpp"

#include <chrono>
#include <cmath>

#include "fsmap/errors.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {

AdamStep adam_step(const AdamState& state, const ParamVector& grad, double lr, double beta1, double beta2,
                   double eps) {
  if (!grad.allFinite()) throw NonFiniteError("non-finite gradient", state.step + 1);
  if (state.m.size() != grad.size() || state.v.size() != grad.size())
    throw DimensionError("Adam state and gradient differ in length");
  AdamStep out;
  out.state.step = state.step + 1;
  out.state.m = beta1 * state.m + (1.0 - beta1) * grad;
  out.state.v = beta2 * state.v + (1.0 - beta2) * grad.cwiseAbs2();
  const double t = static_cast<double>(out.state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  out.update = -lr * (out.state.m / c1).array() / ((out.state.v / c2).array().sqrt() + eps);
  return out;
}

std::uint64_t step_seed(std::uint64_t seed, long step) { return derive_seed(seed, static_cast<std::uint64_t>(step)); }

double training_loss(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                     const ParamVector& theta, std::uint64_t seed) {
  return evaluate_loss(spec, model, data, theta, seed, false).loss;
}

ParamVector objective_gradient(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                               const ParamVector& theta, std::uint64_t seed) {
  return evaluate_loss(spec, model, data, theta, seed, true).gradient;
}

TrainResult train(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                  const ParamVector& init, const TrainConfig& config) {
  if (config.steps < 1) throw std::invalid_argument("steps must be >= 1");
  if (init.size() != model.param_count()) throw DimensionError("init has the wrong length");
  validate(spec);
  const auto start = std::chrono::steady_clock::now();
  const std::optional<double> clip =
      config.clip_norm ? config.clip_norm
                       : (std::holds_alternative<LMap>(spec.kind) ? std::optional<double>(1.0) : std::nullopt);
  TrainResult out;
  out.theta = init;
  out.loss_trace.reserve(config.steps);
  out.diag_trace.reserve(config.steps);
  AdamState state = AdamState::zeros(init.size());
  for (long step = 0; step < config.steps; ++step) {
    const std::uint64_t seed = step_seed(config.seed, config.frozen_samples ? 0 : step);
    LossEvaluation ev;
    try {
      ev = evaluate_loss(spec, model, data, out.theta, seed, true);
    } catch (const NonFiniteError&) {
      out.divergent = true;
    }
    if (!out.divergent && (!std::isfinite(ev.loss) || !ev.gradient.allFinite())) out.divergent = true;
    if (out.divergent) {
      out.divergence_step = step;
      break;
    }
    out.loss_trace.push_back(ev.loss);
    out.diag_trace.push_back(ev.diagnostic);
    if (clip) {
      const double norm = ev.gradient.norm();
      if (norm > *clip) ev.gradient *= *clip / norm;
    }
    auto next = adam_step(state, ev.gradient, config.lr);
    state = std::move(next.state);
    out.theta += next.update;
    if (config.on_progress && config.callback_every > 0 && (step + 1) % config.callback_every == 0 &&
        step + 1 < config.steps)
      config.on_progress(step + 1, out.theta);
  }
  if (config.on_progress) config.on_progress(static_cast<long>(out.loss_trace.size()), out.theta);
  out.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

ParamVector gaussian_init(Eigen::Index p, double std, std::uint64_t seed) {
  Rng rng(seed, 0x696e6974);
  ParamVector theta(p);
  for (Eigen::Index i = 0; i < p; ++i) theta(i) = std * rng.normal();
  return theta;
}

ParamVector finite_difference_gradient(const std::function<double(const ParamVector&)>& f, const ParamVector& theta,
                                       double h) {
  ParamVector g(theta.size());
  ParamVector t = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    t(i) = theta(i) + h;
    const double up = f(t);
    t(i) = theta(i) - h;
    const double down = f(t);
    t(i) = theta(i);
    g(i) = (up - down) / (2.0 * h);
  }
  return g;
}

}  // namespace fsmap
