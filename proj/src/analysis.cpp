#include "fsmap/analysis.hpp"

#include <cmath>
#include <limits>

#include "fsmap/errors.hpp"
#include "fsmap/linalg.hpp"

namespace fsmap {

namespace {

Vector trapezoid_weights(const Vector& axis) {
  const Eigen::Index n = axis.size();
  Vector w = Vector::Zero(n);
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double h = axis(i + 1) - axis(i);
    w(i) += 0.5 * h;
    w(i + 1) += 0.5 * h;
  }
  if (n == 1) w(0) = 1.0;
  return w;
}

Matrix grid_weights(const PosteriorGrid& grid) {
  const Vector w0 = trapezoid_weights(grid.axes[0]);
  const Vector w1 = grid.dims() == 2 ? trapezoid_weights(grid.axes[1]) : Vector::Ones(1);
  return w0 * w1.transpose();
}

double log_integral(const Matrix& log_density, const Matrix& weights) {
  const double mx = log_density.maxCoeff();
  if (!std::isfinite(mx)) throw std::runtime_error("density is not finite on the grid");
  return mx + std::log((log_density.array() - mx).exp().cwiseProduct(weights.array()).sum());
}

double boundary_mass(const PosteriorGrid& grid, const Matrix& log_density) {
  const Eigen::Index g0 = log_density.rows(), g1 = log_density.cols();
  const double h0 = grid.axes[0].size() > 1 ? grid.axes[0](1) - grid.axes[0](0) : 1.0;
  const double h1 = grid.dims() == 2 && grid.axes[1].size() > 1 ? grid.axes[1](1) - grid.axes[1](0) : 1.0;
  double mass = 0.0;
  for (Eigen::Index i = 0; i < g0; ++i)
    for (Eigen::Index j = 0; j < g1; ++j) {
      const bool edge = i == 0 || i == g0 - 1 || (grid.dims() == 2 && (j == 0 || j == g1 - 1));
      if (edge) mass += std::exp(log_density(i, j)) * h0 * h1;
    }
  return mass;
}

}  // namespace

GridSpec default_grid(const GaussianPrior& prior, int params, int points) {
  if (params < 1 || params > 2) throw std::invalid_argument("grids support 1 or 2 parameters");
  GridSpec g;
  for (int i = 0; i < params; ++i) g.axes.push_back({prior.mean - 6.0 * prior.std, prior.mean + 6.0 * prior.std, points});
  return g;
}

ParamVector PosteriorGrid::point(Eigen::Index i0, Eigen::Index i1) const {
  ParamVector t(dims());
  t(0) = axes[0](i0);
  if (dims() == 2) t(1) = axes[1](i1);
  return t;
}

double grid_integral(const PosteriorGrid& grid, const Matrix& values) {
  return values.cwiseProduct(grid_weights(grid)).sum();
}

ParamVector grid_argmax(const PosteriorGrid& grid, const Matrix& log_density) {
  Eigen::Index i0 = 0, i1 = 0;
  log_density.maxCoeff(&i0, &i1);
  return grid.point(i0, i1);
}

PosteriorGrid posterior_grid(const DifferentiableModel& model, const Dataset& data, const Prior& prior,
                             const Likelihood& likelihood, const EvalDistribution& p_x, const GridSpec& spec,
                             int quadrature_nodes) {
  const int p = model.param_count();
  if (p > 2) throw std::invalid_argument("posterior grids support models with at most 2 parameters");
  if (static_cast<int>(spec.axes.size()) != p) throw DimensionError("grid axes must match the parameter count");
  PosteriorGrid grid;
  for (int i = 0; i < p; ++i) {
    if (spec.axes[i].points < 2 || !(spec.axes[i].hi > spec.axes[i].lo))
      throw std::invalid_argument("grid axis needs >= 2 points over a nonempty range");
    grid.axes.push_back(spec.axes[i].values());
    grid.param_names.push_back(model.param_name(i));
  }
  const EvalQuadrature quad = make_quadrature(p_x, quadrature_nodes, 0, 10000, &data);
  const Eigen::Index g0 = grid.axes[0].size(), g1 = p == 2 ? grid.axes[1].size() : 1;
  grid.log_param_density.resize(g0, g1);
  grid.half_logdet.resize(g0, g1);
  for (Eigen::Index i = 0; i < g0; ++i)
    for (Eigen::Index j = 0; j < g1; ++j) {
      const ParamVector theta = grid.point(i, j);
      grid.log_param_density(i, j) = ps_map_objective(theta, model, data, prior, likelihood);
      grid.half_logdet(i, j) = 0.5 * logdet_jittered_gram(gram_quadrature(model, theta, quad).entries, 0.0);
    }
  grid.log_fs_density = grid.log_param_density - grid.half_logdet;
  const Matrix w = grid_weights(grid);
  grid.log_param_density.array() -= log_integral(grid.log_param_density, w);
  grid.log_fs_density.array() -= log_integral(grid.log_fs_density, w);
  grid.normalization_residual =
      std::max(std::abs(grid_integral(grid, grid.log_param_density.array().exp().matrix()) - 1.0),
               std::abs(grid_integral(grid, grid.log_fs_density.array().exp().matrix()) - 1.0));
  grid.boundary_mass = std::max(boundary_mass(grid, grid.log_param_density), boundary_mass(grid, grid.log_fs_density));
  grid.boundary_warning = grid.boundary_mass > kBoundaryMassThreshold;
  return grid;
}

Matrix bma_function(const PosteriorGrid& grid, const DifferentiableModel& model, const Matrix& xs,
                    const std::function<ParamVector(const ParamVector&)>& to_theta) {
  if (!grid.normalized || grid.normalization_residual > 1e-6)
    throw std::invalid_argument("bma_function requires a normalized grid");
  const Matrix w = grid_weights(grid);
  Matrix out = Matrix::Zero(xs.rows(), model.output_dim());
  for (Eigen::Index i = 0; i < grid.log_param_density.rows(); ++i)
    for (Eigen::Index j = 0; j < grid.log_param_density.cols(); ++j) {
      const double mass = std::exp(grid.log_param_density(i, j)) * w(i, j);
      if (mass == 0.0) continue;
      const ParamVector pt = grid.point(i, j);
      out += mass * model.eval(to_theta ? to_theta(pt) : pt, xs);
    }
  return out;
}

FlatnessReport gn_hessian_eigs(const DifferentiableModel& model, const ParamVector& theta, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("Gauss-Newton spectrum needs data");
  const Matrix j = model.jacobian(theta, data.inputs) / std::sqrt(static_cast<double>(data.size()));
  FlatnessReport r;
  r.eigenvalues = padded_singular_values(j).cwiseAbs2();
  r.mean_eigenvalue = r.eigenvalues.mean();
  return r;
}

FlatnessReport fd_hessian_eigs(const DifferentiableModel& model, const ParamVector& theta, const Dataset& data,
                               double h) {
  if (data.size() == 0) throw std::invalid_argument("Hessian needs data");
  const double n = static_cast<double>(data.size());
  const auto grad = [&](const ParamVector& t) {
    return ParamVector(model.vjp(t, data.inputs, model.eval(t, data.inputs) - data.targets) / n);
  };
  const Eigen::Index p = theta.size();
  Matrix hess(p, p);
  ParamVector t = theta;
  for (Eigen::Index i = 0; i < p; ++i) {
    t(i) = theta(i) + h;
    const ParamVector up = grad(t);
    t(i) = theta(i) - h;
    const ParamVector down = grad(t);
    t(i) = theta(i);
    hess.col(i) = (up - down) / (2.0 * h);
  }
  hess = 0.5 * (hess + hess.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(hess, Eigen::EigenvaluesOnly);
  FlatnessReport r;
  r.eigenvalues = es.eigenvalues().reverse();
  r.mean_eigenvalue = r.eigenvalues.mean();
  return r;
}

SingularityReport min_singular_value(const Matrix& stacked, int num_points) {
  const Vector s = padded_singular_values(stacked);
  SingularityReport r;
  r.min_singular_value = s.size() ? s.minCoeff() : 0.0;
  const double n = num_points > 0 ? num_points : static_cast<double>(std::max<Eigen::Index>(stacked.rows(), 1));
  r.gram_eigen_sum = stacked.squaredNorm() / n;
  return r;
}

}  // namespace fsmap
