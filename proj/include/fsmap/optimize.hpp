#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "fsmap/objectives.hpp"

namespace fsmap {

struct AdamState {
  long step = 0;
  Vector m;
  Vector v;

  static AdamState zeros(Eigen::Index p) { return {0, Vector::Zero(p), Vector::Zero(p)}; }
};

struct AdamStep {
  AdamState state;
  ParamVector update;  // add to θ
};

// One bias-corrected Adam update. Throws NonFiniteError on a non-finite gradient.
AdamStep adam_step(const AdamState& state, const ParamVector& grad, double lr, double beta1 = 0.9,
                   double beta2 = 0.999, double eps = 1e-8);

struct TrainConfig {
  double lr = 0.1;
  long steps = 2500;
  std::uint64_t seed = 0;
  // Defaults to unit-norm clipping for L-MAP and none otherwise.
  std::optional<double> clip_norm;
  // Reuse one set of MC evaluation points for every step.
  bool frozen_samples = false;
  // Called with (steps completed, θ) every `callback_every` steps and at the end.
  long callback_every = 0;
  std::function<void(long, const ParamVector&)> on_progress;
};

struct TrainResult {
  ParamVector theta;
  std::vector<double> loss_trace;
  std::vector<double> diag_trace;
  double wall_time = 0.0;
  bool divergent = false;
  long divergence_step = -1;
};

// Seed handed to the sampled estimators at a given step.
std::uint64_t step_seed(std::uint64_t seed, long step);

double training_loss(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                     const ParamVector& theta, std::uint64_t seed = 0);
// Gradient of training_loss (the minimized quantity) at fixed estimator seed.
ParamVector objective_gradient(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                               const ParamVector& theta, std::uint64_t seed = 0);

TrainResult train(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                  const ParamVector& init, const TrainConfig& config);

// θ_i ~ N(0, std²) with a training-specific stream.
ParamVector gaussian_init(Eigen::Index p, double std, std::uint64_t seed);

// Central differences with step h.
ParamVector finite_difference_gradient(const std::function<double(const ParamVector&)>& f, const ParamVector& theta,
                                       double h);

}  // namespace fsmap
