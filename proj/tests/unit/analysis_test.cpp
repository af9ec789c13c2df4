#include <gtest/gtest.h>

#include <cmath>

#include "fsmap/analysis.hpp"
#include "fsmap/experiments.hpp"
#include "fsmap/linalg.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {
namespace {

const EvalDistribution kUnit = UniformDist{0.0, 1.0, 1};

Dataset linear_data(int n, double theta, double sigma, std::uint64_t seed) {
  Rng rng(seed, 1);
  Matrix xs(n, 1), ys(n, 1);
  for (int i = 0; i < n; ++i) {
    xs(i, 0) = rng.uniform(-1.0, 1.0);
    ys(i, 0) = theta * xs(i, 0) + sigma * rng.normal();
  }
  return Dataset::regression(xs, ys);
}

TEST(PosteriorGrid, FlatLikelihoodIsPrior) {
  const Mlp linear({1, 1}, Activation::Tanh, false);
  const GaussianPrior prior{0.3, 1.2};
  const GridSpec spec{{GridAxis{0.3 - 8 * 1.2, 0.3 + 8 * 1.2, 801}}};
  const PosteriorGrid g = posterior_grid(linear, Dataset::regression(Matrix(0, 1), Matrix(0, 1)), prior,
                                         GaussianNoise{0.1}, kUnit, spec);
  for (Eigen::Index i = 0; i < g.axes[0].size(); ++i) {
    const double t = g.axes[0](i);
    const double pdf = std::exp(-0.5 * std::pow((t - 0.3) / 1.2, 2)) / (1.2 * std::sqrt(2 * M_PI));
    EXPECT_NEAR(std::exp(g.log_param_density(i, 0)), pdf, 1e-10);
  }
  EXPECT_FALSE(g.boundary_warning);
}

TEST(PosteriorGrid, DensitiesNormalizedAndRelatedByHalfLogDet) {
  const GaussianBumps model;
  const Dataset d = make_bumps_dataset(model, 1, 20, 1.0, 0.0, 0.1);
  const PosteriorGrid g =
      posterior_grid(model, d, GaussianPrior{0.0, 1.2}, GaussianNoise{0.1}, kUnit, default_grid({0.0, 1.2}, 2, 121), 201);
  EXPECT_EQ(g.dims(), 2);
  EXPECT_LT(g.normalization_residual, 1e-6);
  EXPECT_NEAR(grid_integral(g, g.log_param_density.array().exp().matrix()), 1.0, 1e-6);
  EXPECT_NEAR(grid_integral(g, g.log_fs_density.array().exp().matrix()), 1.0, 1e-6);
  const Matrix gap = g.log_fs_density - g.log_param_density + g.half_logdet;
  for (Eigen::Index i = 0; i < gap.size(); ++i)
    EXPECT_NEAR(gap.data()[i], gap(0, 0), 1e-12 * std::max(1.0, std::abs(g.log_param_density.data()[i])));
  // ½ log det at a node against an independent Simpson evaluation of E[JᵀJ].
  const ParamVector pt = g.point(40, 70);
  const int nodes = 2001;
  Matrix gram = Matrix::Zero(2, 2);
  const double h = 1.0 / (nodes - 1);
  for (int k = 0; k < nodes; ++k) {
    const double x = k * h, w = (k == 0 || k == nodes - 1 ? 1 : (k % 2 ? 4 : 2)) * h / 3;
    Vector j(2);
    j << std::exp(pt(0)) * model.bump(x, 0.25), std::exp(pt(1)) * model.bump(x, 0.75);
    gram += w * j * j.transpose();
  }
  EXPECT_NEAR(g.half_logdet(40, 70), 0.5 * std::log(gram.determinant()), 1e-8);
}

TEST(PosteriorGrid, NarrowGridWarns) {
  const GaussianBumps model;
  const Dataset d = make_bumps_dataset(model, 1, 20, 1.0, 0.0, 0.1);
  const GridSpec narrow{{GridAxis{-0.5, 0.5, 41}, GridAxis{-0.5, 0.5, 41}}};
  EXPECT_TRUE(posterior_grid(model, d, GaussianPrior{0.0, 1.2}, GaussianNoise{0.1}, kUnit, narrow, 101).boundary_warning);
}

TEST(PosteriorGrid, ArgmaxMatchesTrainedOptimum) {
  const GaussianBumps model;
  const Dataset d = make_bumps_dataset(model, 2, 20, 1.0, 0.0, 0.1);
  const GaussianPrior prior{0.0, 1.2};
  const PosteriorGrid g = posterior_grid(model, d, prior, GaussianNoise{0.1}, kUnit, default_grid(prior, 2, 201), 201);
  const ObjectiveSpec ps{PsMap{}, prior, GaussianNoise{0.1}};
  const ObjectiveSpec fs{make_fs_exact(model, kUnit, 0.0, 0, 201), prior, GaussianNoise{0.1}};
  TrainConfig tc;
  tc.lr = 0.01;
  tc.steps = 3000;
  const double cell = g.axes[0](1) - g.axes[0](0);
  const ParamVector ps_opt = train(ps, model, d, grid_argmax(g, g.log_param_density), tc).theta;
  const ParamVector fs_opt = train(fs, model, d, grid_argmax(g, g.log_fs_density), tc).theta;
  EXPECT_LE((ps_opt - grid_argmax(g, g.log_param_density)).cwiseAbs().maxCoeff(), cell);
  EXPECT_LE((fs_opt - grid_argmax(g, g.log_fs_density)).cwiseAbs().maxCoeff(), cell);
}

TEST(Bma, LinearModelIsPosteriorMean) {
  const Mlp linear({1, 1}, Activation::Tanh, false);
  const double sigma = 0.5, alpha = 2.0;
  const Dataset d = linear_data(15, 0.8, sigma, 3);
  const double xx = d.inputs.col(0).squaredNorm(), xy = d.inputs.col(0).dot(d.targets.col(0));
  const double mean = (xy / (sigma * sigma)) / (xx / (sigma * sigma) + 1 / (alpha * alpha));
  const PosteriorGrid g = posterior_grid(linear, d, GaussianPrior{0.0, alpha}, GaussianNoise{sigma}, kUnit,
                                         GridSpec{{GridAxis{-8 * alpha, 8 * alpha, 2001}}});
  const Matrix xs = Vector::LinSpaced(11, -1.0, 1.0);
  EXPECT_LT((bma_function(g, linear, xs) - mean * xs).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Bma, TransformedGridAgrees) {
  // Same posterior tabulated over u = sinh θ, with the change-of-variables density.
  const Mlp linear({1, 1}, Activation::Tanh, false);
  const double sigma = 0.5, alpha = 2.0;
  const Dataset d = linear_data(15, 0.8, sigma, 3);
  const PosteriorGrid g = posterior_grid(linear, d, GaussianPrior{0.0, alpha}, GaussianNoise{sigma}, kUnit,
                                         GridSpec{{GridAxis{-8 * alpha, 8 * alpha, 2001}}});
  PosteriorGrid u;
  u.axes = {Vector::LinSpaced(20001, std::sinh(-4.0), std::sinh(4.0))};
  u.param_names = {"u"};
  u.log_param_density.resize(20001, 1);
  for (Eigen::Index i = 0; i < 20001; ++i) {
    const double t = std::asinh(u.axes[0](i));
    u.log_param_density(i, 0) = ps_map_objective(ParamVector::Constant(1, t), linear, d, GaussianPrior{0.0, alpha},
                                                 GaussianNoise{sigma}) -
                                0.5 * std::log1p(u.axes[0](i) * u.axes[0](i));
  }
  const double z = grid_integral(u, u.log_param_density.array().exp().matrix());
  u.log_param_density.array() -= std::log(z);
  const Matrix xs = Vector::LinSpaced(11, -1.0, 1.0);
  const Matrix a = bma_function(g, linear, xs);
  const Matrix b = bma_function(u, linear, xs, [](const ParamVector& p) { return ParamVector(p.array().asinh()); });
  EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Bma, ConcentratedPosteriorIsMapFunction) {
  const GaussianBumps model;
  ParamVector truth(2);
  truth << 0.3, -0.2;
  Rng rng(4, 2);
  Matrix xs(200, 1);
  for (int i = 0; i < 200; ++i) xs(i, 0) = rng.uniform();
  const Matrix ys = model.eval(truth, xs) + 0.001 * Matrix::NullaryExpr(200, 1, [&] { return rng.normal(); });
  const Dataset d = Dataset::regression(xs, ys);
  const GaussianPrior prior{0.0, 1.2};
  const GridSpec spec{{GridAxis{0.29, 0.31, 201}, GridAxis{-0.21, -0.19, 201}}};
  const PosteriorGrid g = posterior_grid(model, d, prior, GaussianNoise{0.001}, kUnit, spec, 101);
  TrainConfig tc;
  tc.lr = 1e-4;
  tc.steps = 2000;
  const ParamVector map = train(ObjectiveSpec{PsMap{}, prior, GaussianNoise{0.001}}, model, d, truth, tc).theta;
  const Matrix grid_x = Vector::LinSpaced(201, 0.0, 1.0);
  const Matrix gap = bma_function(g, model, grid_x) - model.eval(map, grid_x);
  EXPECT_LT(std::sqrt(gap.squaredNorm() / 201), 1e-3);
}

TEST(Bma, UnnormalizedRejected) {
  PosteriorGrid g;
  g.axes = {Vector::LinSpaced(3, 0.0, 1.0)};
  g.log_param_density = Matrix::Zero(3, 1);
  g.normalized = false;
  EXPECT_THROW(bma_function(g, Mlp({1, 1}, Activation::Tanh, false), Matrix::Zero(1, 1)), std::invalid_argument);
}

TEST(Flatness, LinearModelSingleEigenvalue) {
  const Mlp linear({1, 1}, Activation::Tanh, false);
  const Dataset d = Dataset::regression(Matrix::Ones(1, 1), Matrix::Zero(1, 1));
  const FlatnessReport r = gn_hessian_eigs(linear, ParamVector::Constant(1, 0.7), d);
  ASSERT_EQ(r.eigenvalues.size(), 1);
  EXPECT_DOUBLE_EQ(r.eigenvalues(0), 1.0);
}

TEST(Flatness, EigenvalueSumIsTrace) {
  const FourierLink model(10);
  const Dataset d = sample_fourier_dataset(1, 30, 1.0, 0.1, model).data;
  const ParamVector theta = ParamVector::LinSpaced(20, -1.0, 1.0);
  const FlatnessReport r = gn_hessian_eigs(model, theta, d);
  const Matrix j = model.jacobian(theta, d.inputs);
  EXPECT_NEAR(r.eigenvalues.sum(), (j.transpose() * j).trace() / 30, 1e-10);
  for (Eigen::Index i = 1; i < r.eigenvalues.size(); ++i) EXPECT_GE(r.eigenvalues(i - 1), r.eigenvalues(i));
  EXPECT_GE(r.eigenvalues.minCoeff(), -1e-10);
}

TEST(Flatness, GaussNewtonMatchesFiniteDifferenceHessian) {
  const FourierLink model(10);
  const FourierSample s = sample_fourier_dataset(2, 200, 1.0, 0.1, model);
  TrainConfig tc;
  tc.steps = 3000;
  const ParamVector theta = train(ObjectiveSpec{PsMap{}, GaussianPrior{0.0, 1.0}, GaussianNoise{0.1}}, model, s.data,
                                  gaussian_init(20, 0.1, 1), tc)
                                .theta;
  const double gn = gn_hessian_eigs(model, theta, s.data).mean_eigenvalue;
  const double fd = fd_hessian_eigs(model, theta, s.data).mean_eigenvalue;
  EXPECT_LT(std::abs(gn - fd) / fd, 0.2);
}

TEST(Singularity, IdentityInput) {
  EXPECT_DOUBLE_EQ(min_singular_value(Matrix::Identity(4, 4)).min_singular_value, 1.0);
  EXPECT_DOUBLE_EQ(min_singular_value(Matrix::Identity(4, 4), 2).gram_eigen_sum, 2.0);
}

TEST(Singularity, SymmetricMlpPoint) {
  const Mlp net({1, 2, 1}, Activation::Tanh, false);
  ParamVector sym(4);
  sym << 0.7, 0.7, -1.3, -1.3;
  const Matrix xs = Vector::LinSpaced(50, -2.0, 2.0);
  EXPECT_LT(min_singular_value(net.jacobian(sym, xs)).min_singular_value, 1e-8);
  EXPECT_GE(null_direction_count(net.jacobian(sym, xs)), 1);
}

TEST(Singularity, GenericMlpPointsHaveFullRank) {
  const Mlp net({1, 2, 1}, Activation::Tanh, false);
  const Matrix xs = Vector::LinSpaced(50, -2.0, 2.0);
  for (int s = 0; s < 10; ++s) {
    const Matrix j = net.jacobian(net.init(s), xs);
    EXPECT_EQ(null_direction_count(j), 0) << s;
    EXPECT_GT(min_singular_value(j).min_singular_value, 1e-8) << s;
  }
}

}  // namespace
}  // namespace fsmap
