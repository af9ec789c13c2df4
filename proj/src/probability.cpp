#include "fsmap/probability.hpp"

#include <cmath>
#include <numbers>

#include "fsmap/errors.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {

namespace {

constexpr std::uint64_t kStreamTheta = 1;
constexpr std::uint64_t kStreamInputs = 2;
constexpr std::uint64_t kStreamNoise = 3;
constexpr std::uint64_t kStreamTest = 4;
constexpr std::uint64_t kStreamShuffle = 5;

double gaussian_log_density(const ParamVector& theta, const GaussianPrior& p) {
  if (!(p.std > 0)) throw std::invalid_argument("prior std must be positive");
  const double n = static_cast<double>(theta.size());
  return -0.5 * (theta.array() - p.mean).square().sum() / (p.std * p.std) -
         0.5 * n * std::log(2.0 * std::numbers::pi * p.std * p.std);
}

}  // namespace

double log_prior(const ParamVector& theta, const Prior& prior) {
  if (!prior.transform) return gaussian_log_density(theta, prior.base);
  const ParamVector original = transform_inverse(*prior.transform, theta);
  return gaussian_log_density(original, prior.base) - transform_log_abs_det(*prior.transform, original);
}

ParamVector log_prior_gradient(const ParamVector& theta, const Prior& prior) {
  const double var = prior.base.std * prior.base.std;
  if (!prior.transform) return -(theta.array() - prior.base.mean).matrix() / var;
  ParamVector g(theta.size());
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double tp = theta(i);
    if (*prior.transform == Transform::Inverse) {
      if (tp == 0.0) throw DomainError("inverse transform undefined at 0");
      const double t = 1.0 / tp;
      g(i) = (t - prior.base.mean) / var / (tp * tp) - 2.0 / tp;
    } else {
      if (!(std::abs(tp) < 1.0)) throw DomainError("atanh requires |theta'| < 1");
      const double t = std::atanh(tp);
      const double jac = 1.0 / (1.0 - tp * tp);
      g(i) = -(t - prior.base.mean) / var * jac + 2.0 * tp * jac;
    }
  }
  return g;
}

Dataset Dataset::regression(Matrix inputs, Matrix targets) {
  if (inputs.rows() != targets.rows()) throw DimensionError("inputs and targets differ in length");
  Dataset d;
  d.inputs = std::move(inputs);
  d.targets = std::move(targets);
  return d;
}

Dataset Dataset::classes(Matrix inputs, std::vector<int> labels) {
  if (inputs.rows() != static_cast<Eigen::Index>(labels.size()))
    throw DimensionError("inputs and labels differ in length");
  Dataset d;
  d.inputs = std::move(inputs);
  d.labels = std::move(labels);
  d.classification = true;
  return d;
}

Dataset Dataset::concat(const Dataset& other) const {
  if (classification != other.classification || input_dim() != other.input_dim())
    throw DimensionError("datasets are not compatible");
  Dataset d = *this;
  d.inputs.resize(size() + other.size(), input_dim());
  d.inputs << inputs, other.inputs;
  if (classification) {
    d.labels.insert(d.labels.end(), other.labels.begin(), other.labels.end());
  } else {
    if (targets.cols() != other.targets.cols()) throw DimensionError("target widths differ");
    d.targets.resize(size() + other.size(), targets.cols());
    d.targets << targets, other.targets;
  }
  return d;
}

std::string eval_dist_name(const EvalDistribution& p_x) {
  struct V {
    std::string operator()(const UniformDist& u) const {
      return "uniform(" + std::to_string(u.a) + "," + std::to_string(u.b) + ")";
    }
    std::string operator()(const IsotropicGaussianDist&) const { return "gaussian"; }
    std::string operator()(const DiracSet& d) const { return "dirac:" + std::to_string(d.points.rows()); }
    std::string operator()(const EmpiricalTrain&) const { return "train"; }
  };
  return std::visit(V{}, p_x);
}

double log_likelihood_outputs(const Dataset& data, const Matrix& outputs, const Likelihood& likelihood) {
  if (outputs.rows() != data.size()) throw DimensionError("outputs and data differ in length");
  if (const auto* g = std::get_if<GaussianNoise>(&likelihood)) {
    if (!(g->sigma > 0)) throw std::invalid_argument("noise sigma must be positive");
    if (data.classification) throw std::invalid_argument("Gaussian likelihood needs regression targets");
    if (outputs.cols() != data.targets.cols()) throw DimensionError("output width differs from targets");
    const double nk = static_cast<double>(outputs.size());
    return -0.5 * ((data.targets - outputs) / g->sigma).squaredNorm() -
           0.5 * nk * std::log(2.0 * std::numbers::pi * g->sigma * g->sigma);
  }
  const auto& c = std::get<CategoricalSoftmax>(likelihood);
  if (!data.classification) throw std::invalid_argument("categorical likelihood needs labels");
  if (outputs.cols() != c.num_classes) throw DimensionError("output width differs from class count");
  double s = 0.0;
  for (Eigen::Index n = 0; n < outputs.rows(); ++n) {
    const double mx = outputs.row(n).maxCoeff();
    const double lse = mx + std::log((outputs.row(n).array() - mx).exp().sum());
    s += outputs(n, data.labels[n]) - lse;
  }
  return s;
}

Matrix log_likelihood_output_grad(const Dataset& data, const Matrix& outputs, const Likelihood& likelihood) {
  if (const auto* g = std::get_if<GaussianNoise>(&likelihood)) {
    if (!(g->sigma > 0)) throw std::invalid_argument("noise sigma must be positive");
    return (data.targets - outputs) / (g->sigma * g->sigma);
  }
  Matrix grad(outputs.rows(), outputs.cols());
  for (Eigen::Index n = 0; n < outputs.rows(); ++n) {
    const double mx = outputs.row(n).maxCoeff();
    const Eigen::RowVectorXd e = (outputs.row(n).array() - mx).exp().matrix();
    grad.row(n) = -e / e.sum();
    grad(n, data.labels[n]) += 1.0;
  }
  return grad;
}

double log_likelihood(const Dataset& data, const DifferentiableModel& model, const ParamVector& theta,
                      const Likelihood& likelihood) {
  if (data.size() == 0) return 0.0;
  return log_likelihood_outputs(data, model.eval(theta, data.inputs), likelihood);
}

Matrix eval_dist_sample(const EvalDistribution& p_x, std::uint64_t seed, int samples, const Dataset* train) {
  if (samples < 1) throw std::invalid_argument("sample count must be >= 1");
  Rng rng(seed, 0x7078);
  if (const auto* u = std::get_if<UniformDist>(&p_x)) {
    Matrix xs(samples, u->dim);
    for (int s = 0; s < samples; ++s)
      for (int d = 0; d < u->dim; ++d) xs(s, d) = rng.uniform(u->a, u->b);
    return xs;
  }
  if (const auto* g = std::get_if<IsotropicGaussianDist>(&p_x)) {
    Matrix xs(samples, g->dim);
    for (int s = 0; s < samples; ++s)
      for (int d = 0; d < g->dim; ++d) xs(s, d) = rng.normal();
    return xs;
  }
  const Matrix* atoms = nullptr;
  if (const auto* dset = std::get_if<DiracSet>(&p_x)) {
    atoms = &dset->points;
  } else {
    if (!train) throw std::invalid_argument("EmpiricalTrain sampling needs the training set");
    atoms = &train->inputs;
  }
  if (atoms->rows() == 0) throw std::invalid_argument("evaluation set is empty");
  Matrix xs(samples, atoms->cols());
  for (int s = 0; s < samples; ++s) xs.row(s) = atoms->row(static_cast<Eigen::Index>(rng.index(atoms->rows())));
  return xs;
}

FourierSample sample_fourier_dataset(std::uint64_t seed, int n, double alpha, double sigma_star,
                                     const FourierLink& model) {
  if (n < 1) throw std::invalid_argument("N must be >= 1");
  if (!(alpha > 0)) throw std::invalid_argument("alpha must be positive");
  if (!(sigma_star >= 0)) throw std::invalid_argument("sigma_star must be >= 0");
  Rng theta_rng(seed, kStreamTheta), x_rng(seed, kStreamInputs), noise_rng(seed, kStreamNoise);
  ParamVector theta(model.param_count());
  for (Eigen::Index i = 0; i < theta.size(); ++i) theta(i) = alpha * theta_rng.normal();
  Matrix xs(n, 1);
  for (int i = 0; i < n; ++i) xs(i, 0) = x_rng.uniform(-1.0, 1.0);
  Matrix ys = model.eval(theta, xs);
  for (int i = 0; i < n; ++i) ys(i, 0) += sigma_star * noise_rng.normal();
  return {Dataset::regression(std::move(xs), std::move(ys)), theta};
}

Dataset fourier_test_set(std::uint64_t seed, int n, const ParamVector& theta_true, const FourierLink& model) {
  Rng rng(seed, kStreamTest);
  Matrix xs(n, 1);
  for (int i = 0; i < n; ++i) xs(i, 0) = rng.uniform(-1.0, 1.0);
  Matrix ys = model.eval(theta_true, xs);
  return Dataset::regression(std::move(xs), std::move(ys));
}

Dataset make_two_moons(std::uint64_t seed, int n, double noise) {
  if (n < 2 || n % 2 != 0) throw std::invalid_argument("two-moons needs an even N >= 2");
  if (!(noise >= 0)) throw std::invalid_argument("noise must be >= 0");
  const int half = n / 2;
  Matrix xs(n, 2);
  std::vector<int> labels(n);
  for (int i = 0; i < half; ++i) {
    const double t = half > 1 ? std::numbers::pi * i / (half - 1) : 0.0;
    xs(i, 0) = std::cos(t);
    xs(i, 1) = std::sin(t);
    labels[i] = 0;
    xs(half + i, 0) = 1.0 - std::cos(t);
    xs(half + i, 1) = 0.5 - std::sin(t);
    labels[half + i] = 1;
  }
  Rng rng(seed, kStreamShuffle);
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(i) + 1));
    xs.row(i).swap(xs.row(j));
    std::swap(labels[i], labels[j]);
  }
  if (noise > 0)
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < 2; ++d) xs(i, d) += noise * rng.normal();
  return Dataset::classes(std::move(xs), std::move(labels));
}

Matrix phi_matrix_uniform(const FourierLink& basis, double a, double b) {
  if (!(b > a)) throw std::invalid_argument("uniform interval is empty");
  const auto mean_cos = [a, b](double w) {
    return w == 0.0 ? 1.0 : (std::sin(w * b) - std::sin(w * a)) / (w * (b - a));
  };
  const auto mean_sin = [a, b](double w) {
    return w == 0.0 ? 0.0 : (std::cos(w * a) - std::cos(w * b)) / (w * (b - a));
  };
  const int f = basis.num_frequencies();
  const auto& k = basis.frequencies();
  Matrix phi(2 * f, 2 * f);
  for (int i = 0; i < f; ++i) {
    for (int j = 0; j < f; ++j) {
      const double u = k[i], v = k[j];
      phi(i, j) = 0.5 * (mean_cos(u - v) + mean_cos(u + v));
      phi(f + i, f + j) = 0.5 * (mean_cos(u - v) - mean_cos(u + v));
      // cos(u x) sin(v x) = ½[sin((u+v)x) - sin((u-v)x)]
      phi(i, f + j) = 0.5 * (mean_sin(u + v) - mean_sin(u - v));
      phi(f + j, i) = phi(i, f + j);
    }
  }
  return phi;
}

Matrix phi_matrix(const FourierLink& basis, const EvalDistribution& p_x, std::uint64_t seed, int mc_samples) {
  if (const auto* u = std::get_if<UniformDist>(&p_x); u && u->dim == 1 && u->a == -1.0 && u->b == 1.0)
    return phi_matrix_uniform(basis, -1.0, 1.0);
  Matrix b;
  if (const auto* d = std::get_if<DiracSet>(&p_x)) {
    b = basis.basis(d->points);
  } else if (const auto* u = std::get_if<UniformDist>(&p_x); u && u->dim == 1) {
    // Stratified Monte Carlo: one uniform draw in each of `mc_samples` equal cells.
    if (mc_samples < 1) throw std::invalid_argument("sample count must be >= 1");
    Rng rng(seed, 0x7078);
    Matrix xs(mc_samples, 1);
    for (int s = 0; s < mc_samples; ++s) xs(s, 0) = u->a + (u->b - u->a) * (s + rng.uniform()) / mc_samples;
    b = basis.basis(xs);
  } else {
    b = basis.basis(eval_dist_sample(p_x, seed, mc_samples));
  }
  Matrix phi = (b.transpose() * b) / static_cast<double>(b.rows());
  return 0.5 * (phi + phi.transpose());
}

}  // namespace fsmap
