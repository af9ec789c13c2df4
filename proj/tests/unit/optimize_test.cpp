#include <gtest/gtest.h>

#include <cmath>

#include "fsmap/errors.hpp"
#include "fsmap/optimize.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {
namespace {

TEST(Adam, FirstStepIsNormalizedGradient) {
  ParamVector g(3);
  g << 2.0, -0.5, 1e-3;
  const AdamStep s = adam_step(AdamState::zeros(3), g, 0.1);
  EXPECT_EQ(s.state.step, 1);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(s.update(i), -0.1 * g(i) / (std::abs(g(i)) + 1e-8), 1e-15);
}

TEST(Adam, ZeroGradientNeverMoves) {
  AdamState st = AdamState::zeros(4);
  for (int t = 0; t < 50; ++t) {
    const AdamStep s = adam_step(st, ParamVector::Zero(4), 0.1);
    EXPECT_EQ(s.update.cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(s.state.step, st.step + 1);
    st = s.state;
  }
}

TEST(Adam, ThreeStepHandOracle) {
  // f(θ) = ½(θ - 3)², θ₀ = 0, lr = 0.1, β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
  double theta = 0.0;
  AdamState st = AdamState::zeros(1);
  double m = 0, v = 0;
  for (int t = 1; t <= 3; ++t) {
    const double g = theta - 3.0;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double step = 0.1 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
    const AdamStep s = adam_step(st, ParamVector::Constant(1, g), 0.1);
    st = s.state;
    EXPECT_NEAR(theta + s.update(0), theta - step, 1e-12);
    theta += s.update(0);
    EXPECT_GE(st.v.minCoeff(), 0.0);
  }
}

TEST(Adam, NonFiniteGradientHaltsWithStep) {
  AdamState st = AdamState::zeros(2);
  st.step = 6;
  ParamVector g(2);
  g << 1.0, std::nan("");
  try {
    adam_step(st, g, 0.1);
    FAIL();
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.index(), 7);
  }
}

Dataset linear_data() {
  Matrix xs(3, 1), ys(3, 1);
  xs << 0.5, -1.0, 2.0;
  ys << 0.4, -0.9, 2.2;
  return Dataset::regression(xs, ys);
}

TEST(Gradient, LinearSquaredLoss) {
  // With σ² = ½ and a flat prior the loss is (θx - y)² + const.
  const Mlp linear({1, 1}, Activation::Tanh, false);
  Matrix x(1, 1), y(1, 1);
  x << 1.0;
  y << 0.0;
  const ObjectiveSpec spec{PsMap{}, GaussianPrior{0.0, 1e300}, GaussianNoise{std::sqrt(0.5)}};
  EXPECT_NEAR(objective_gradient(spec, linear, Dataset::regression(x, y), ParamVector::Constant(1, 2.0))(0), 4.0, 1e-12);
}

TEST(Train, QuadraticMinimum) {
  const Mlp linear({1, 1}, Activation::Tanh, false);
  const Dataset d = linear_data();
  const double sigma = 0.5, alpha = 2.0;
  const double xx = d.inputs.col(0).squaredNorm(), xy = d.inputs.col(0).dot(d.targets.col(0));
  const double exact = (xy / (sigma * sigma)) / (xx / (sigma * sigma) + 1 / (alpha * alpha));
  const ObjectiveSpec spec{PsMap{}, GaussianPrior{0.0, alpha}, GaussianNoise{sigma}};
  TrainConfig tc;
  tc.lr = 0.05;
  tc.steps = 3000;
  TrainResult r = train(spec, linear, d, ParamVector::Zero(1), tc);
  tc.lr = 1e-4;
  tc.steps = 3000;
  r = train(spec, linear, d, r.theta, tc);
  EXPECT_NEAR(r.theta(0), exact, 1e-6);
  EXPECT_LT(objective_gradient(spec, linear, d, r.theta).norm(), 1e-3);
}

TEST(Train, TraceLengthsAndDeterminism) {
  const FourierLink model(10);
  const Dataset d = sample_fourier_dataset(0, 30, 1.0, 0.1, model).data;
  const ObjectiveSpec spec{FsMapMc{UniformDist{-1, 1, 1}, 20, 1e-4}, GaussianPrior{0.0, 1.0}, GaussianNoise{0.1}};
  TrainConfig tc;
  tc.lr = 0.01;
  tc.steps = 40;
  tc.seed = 5;
  const ParamVector init = gaussian_init(20, 0.1, 1);
  const TrainResult a = train(spec, model, d, init, tc);
  const TrainResult b = train(spec, model, d, init, tc);
  EXPECT_EQ(a.loss_trace.size(), 40u);
  EXPECT_EQ(a.diag_trace.size(), 40u);
  EXPECT_TRUE(a.theta == b.theta);
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_FALSE(a.divergent);
  tc.seed = 6;
  EXPECT_FALSE(train(spec, model, d, init, tc).theta == a.theta);
}

TEST(Train, DiagnosticIsHalfLogDetForFs) {
  const FourierLink model(10);
  const Dataset d = sample_fourier_dataset(0, 30, 1.0, 0.1, model).data;
  const ObjectiveSpec spec{make_fs_exact(model, UniformDist{-1, 1, 1}, 0.0), GaussianPrior{0.0, 1.0}, GaussianNoise{0.1}};
  TrainConfig tc;
  tc.steps = 1;
  const ParamVector init = gaussian_init(20, 0.1, 2);
  const TrainResult r = train(spec, model, d, init, tc);
  const double half = 0.5 * logdet_jittered(gram_exact_fourier(init, model, phi_matrix(model, UniformDist{-1, 1, 1})), 0.0);
  EXPECT_NEAR(r.diag_trace[0], half, 1e-9);
  EXPECT_NEAR(r.loss_trace[0], -fs_map_objective(init, model, d, spec), 1e-9);
}

TEST(Train, LMapClipsToUnitNormByDefault) {
  const FourierLink model(10);
  const Dataset d = sample_fourier_dataset(0, 30, 1.0, 0.1, model).data;
  const ObjectiveSpec spec{LMap{UniformDist{-1, 1, 1}, 1e4, 1e-3, 10}, GaussianPrior{0.0, 1.0}, GaussianNoise{0.1}};
  const ParamVector init = gaussian_init(20, 0.5, 3);
  ASSERT_GT(objective_gradient(spec, model, d, init, step_seed(0, 0)).norm(), 1.0);
  TrainConfig tc;
  tc.steps = 5;
  const TrainResult by_default = train(spec, model, d, init, tc);
  tc.clip_norm = 1.0;
  EXPECT_TRUE(train(spec, model, d, init, tc).theta == by_default.theta);
  tc.clip_norm = 1e300;
  EXPECT_FALSE(train(spec, model, d, init, tc).theta == by_default.theta);
}

TEST(Train, DivergenceFlagged) {
  const Mlp linear({1, 1}, Activation::Tanh, false);
  const ObjectiveSpec spec{PsMap{}, GaussianPrior{0.0, 1.0}, GaussianNoise{1.0}};
  TrainConfig tc;
  tc.lr = 1e200;
  tc.steps = 10;
  const TrainResult r = train(spec, linear, linear_data(), ParamVector::Zero(1), tc);
  EXPECT_TRUE(r.divergent);
  EXPECT_GE(r.divergence_step, 0);
  EXPECT_LT(r.loss_trace.size(), 10u);
}

TEST(Train, ProgressCallback) {
  const Mlp linear({1, 1}, Activation::Tanh, false);
  const ObjectiveSpec spec{PsMap{}, GaussianPrior{0.0, 1.0}, GaussianNoise{1.0}};
  TrainConfig tc;
  tc.lr = 0.01;
  tc.steps = 25;
  tc.callback_every = 10;
  std::vector<long> seen;
  tc.on_progress = [&](long step, const ParamVector&) { seen.push_back(step); };
  train(spec, linear, linear_data(), ParamVector::Zero(1), tc);
  EXPECT_EQ(seen, (std::vector<long>{10, 20, 25}));
}

TEST(Train, FsBeatsPsOnItsOwnObjective) {
  const FourierLink model(20);
  const FourierSample s = sample_fourier_dataset(2, 30, 10.0, 0.1, model);
  const Prior prior = GaussianPrior{0.0, 10.0};
  const ObjectiveSpec ps{PsMap{}, prior, GaussianNoise{0.1}};
  const ObjectiveSpec fs{make_fs_exact(model, UniformDist{-1, 1, 1}, 0.0), prior, GaussianNoise{0.1}};
  TrainConfig tc;
  tc.steps = 2500;
  const ParamVector init = gaussian_init(40, 0.1, 9);
  const ParamVector tps = train(ps, model, s.data, init, tc).theta;
  const ParamVector tfs = train(fs, model, s.data, init, tc).theta;
  EXPECT_GE(fs_map_objective(tfs, model, s.data, fs), fs_map_objective(tps, model, s.data, fs));
  EXPECT_GE(ps_map_objective(tps, model, s.data, prior, ps.likelihood),
            ps_map_objective(tfs, model, s.data, prior, ps.likelihood));
}

TEST(Init, GaussianInitDeterministic) {
  EXPECT_TRUE(gaussian_init(10, 0.1, 3) == gaussian_init(10, 0.1, 3));
  EXPECT_FALSE(gaussian_init(10, 0.1, 3) == gaussian_init(10, 0.1, 4));
}

}  // namespace
}  // namespace fsmap
