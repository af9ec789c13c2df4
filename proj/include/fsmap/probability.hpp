#pragma once

#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "fsmap/diffmodel.hpp"

namespace fsmap {

struct GaussianPrior {
  double mean = 0.0;
  double std = 1.0;
};

// Isotropic Gaussian on θ. With a transform set, the density is over θ' = R(θ)
// and includes the change-of-variables factor |det ∂θ/∂θ'|.
struct Prior {
  GaussianPrior base;
  std::optional<Transform> transform;

  Prior() = default;
  Prior(GaussianPrior b) : base(b) {}  // NOLINT: implicit by design
  Prior(GaussianPrior b, Transform t) : base(b), transform(t) {}
};

double log_prior(const ParamVector& theta, const Prior& prior);
ParamVector log_prior_gradient(const ParamVector& theta, const Prior& prior);

struct GaussianNoise {
  double sigma = 1.0;
};
struct CategoricalSoftmax {
  int num_classes = 2;
};
using Likelihood = std::variant<GaussianNoise, CategoricalSoftmax>;

struct Dataset {
  Matrix inputs;            // N×D
  Matrix targets;           // N×K, regression only
  std::vector<int> labels;  // classification only
  bool classification = false;

  static Dataset regression(Matrix inputs, Matrix targets);
  static Dataset classes(Matrix inputs, std::vector<int> labels);
  Eigen::Index size() const { return inputs.rows(); }
  Eigen::Index input_dim() const { return inputs.cols(); }
  Dataset concat(const Dataset& other) const;
};

// Uniform on the hypercube [a, b]^dim.
struct UniformDist {
  double a = -1.0;
  double b = 1.0;
  int dim = 1;
};
struct IsotropicGaussianDist {
  int dim = 1;
};
// Equal-weight atoms, one per row of `points`.
struct DiracSet {
  Matrix points;
};
// The training inputs, resolved at sampling time.
struct EmpiricalTrain {};
using EvalDistribution = std::variant<UniformDist, IsotropicGaussianDist, DiracSet, EmpiricalTrain>;

std::string eval_dist_name(const EvalDistribution& p_x);

// Log-likelihood given model outputs F (N×K), and its derivative with respect to F.
double log_likelihood_outputs(const Dataset& data, const Matrix& outputs, const Likelihood& likelihood);
Matrix log_likelihood_output_grad(const Dataset& data, const Matrix& outputs, const Likelihood& likelihood);
double log_likelihood(const Dataset& data, const DifferentiableModel& model, const ParamVector& theta,
                      const Likelihood& likelihood);

// Draws S i.i.d. points (S×D). EmpiricalTrain requires `train`.
Matrix eval_dist_sample(const EvalDistribution& p_x, std::uint64_t seed, int samples,
                        const Dataset* train = nullptr);

struct FourierSample {
  Dataset data;
  ParamVector theta_true;
};

// x ~ U(-1,1), θ_true,i ~ N(0, α²), y = f_θtrue(x) + N(0, σ*²). The θ, x and
// noise draws use separate streams, so a smaller N is a prefix of a larger one.
FourierSample sample_fourier_dataset(std::uint64_t seed, int n, double alpha, double sigma_star,
                                     const FourierLink& model = FourierLink());
// Noise-free held-out inputs from U(-1,1) for the same θ_true.
Dataset fourier_test_set(std::uint64_t seed, int n, const ParamVector& theta_true,
                         const FourierLink& model = FourierLink());

// Outer moon (label 0): (cos t, sin t); inner moon (label 1): (1 - cos t, 0.5 - sin t),
// t evenly spaced on [0, π]; then Gaussian jitter of scale `noise` and a seeded shuffle.
Dataset make_two_moons(std::uint64_t seed, int n, double noise);

// Φ_ij = E[φ_i(X) φ_j(X)]: closed form for U(-1,1), exact average for a
// DiracSet, otherwise a Monte Carlo average over `mc_samples` draws
// (stratified for one-dimensional uniform distributions).
Matrix phi_matrix(const FourierLink& basis, const EvalDistribution& p_x, std::uint64_t seed = 0,
                  int mc_samples = 10000);
// Closed form of Φ for U(a, b); valid for arbitrary frequencies.
Matrix phi_matrix_uniform(const FourierLink& basis, double a, double b);

}  // namespace fsmap
