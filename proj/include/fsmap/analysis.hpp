#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fsmap/objectives.hpp"

namespace fsmap {

struct GridAxis {
  double lo = -1.0;
  double hi = 1.0;
  int points = 401;
  Vector values() const { return Vector::LinSpaced(points, lo, hi); }
};

struct GridSpec {
  std::vector<GridAxis> axes;
};

// `points` nodes per axis over mean ± 6 prior standard deviations.
GridSpec default_grid(const GaussianPrior& prior, int params, int points = 401);

inline constexpr double kBoundaryMassThreshold = 0.01;

// Densities tabulated on a grid of ≤ 2 parameters. Matrices are indexed
// (i0, i1) with i1 = 0 for a single parameter; log densities are normalized
// so that their trapezoidal integral is 1.
struct PosteriorGrid {
  std::vector<Vector> axes;
  std::vector<std::string> param_names;
  Matrix log_param_density;
  Matrix log_fs_density;
  Matrix half_logdet;  // ½ log det 𝓙(θ; p_X) at each node
  double normalization_residual = 0.0;
  double boundary_mass = 0.0;  // larger of the two densities
  bool boundary_warning = false;
  bool normalized = true;

  int dims() const { return static_cast<int>(axes.size()); }
  ParamVector point(Eigen::Index i0, Eigen::Index i1) const;
};

PosteriorGrid posterior_grid(const DifferentiableModel& model, const Dataset& data, const Prior& prior,
                             const Likelihood& likelihood, const EvalDistribution& p_x, const GridSpec& grid,
                             int quadrature_nodes = 401);

// Trapezoidal integral of tabulated values over the grid.
double grid_integral(const PosteriorGrid& grid, const Matrix& values);

// Node of maximal density.
ParamVector grid_argmax(const PosteriorGrid& grid, const Matrix& log_density);

// E_{p(θ|D)}[f_θ(x)] by trapezoidal quadrature over the parameter-space density.
// `to_theta` maps a grid point to model parameters (identity by default),
// which allows grids over transformed coordinates.
Matrix bma_function(const PosteriorGrid& grid, const DifferentiableModel& model, const Matrix& xs,
                    const std::function<ParamVector(const ParamVector&)>& to_theta = {});

struct FlatnessReport {
  Vector eigenvalues;  // descending
  double mean_eigenvalue = 0.0;
};

// Spectrum of (1/N) J(x_D)ᵀ J(x_D).
FlatnessReport gn_hessian_eigs(const DifferentiableModel& model, const ParamVector& theta, const Dataset& data);

// Spectrum of the central-difference Hessian of (1/2N) Σ ‖f_θ(x) - y‖².
FlatnessReport fd_hessian_eigs(const DifferentiableModel& model, const ParamVector& theta, const Dataset& data,
                               double h = 1e-5);

struct SingularityReport {
  double min_singular_value = 0.0;
  double gram_eigen_sum = 0.0;  // Σ s_i² / num_points = Tr 𝓙
};

// num_points <= 0 means one point per row.
SingularityReport min_singular_value(const Matrix& stacked, int num_points = 0);

}  // namespace fsmap
