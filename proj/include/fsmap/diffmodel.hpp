#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace fsmap {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using ParamVector = Eigen::VectorXd;

enum class Link { Tanh, Identity, Inverse };

double link_value(Link link, double t);
double link_d1(Link link, double t);
double link_d2(Link link, double t);
// σ″(t)/σ′(t), evaluated without forming σ′ (stable when tanh saturates).
double link_log_d1_derivative(Link link, double t);
// log|σ′(t)|, evaluated in the log domain.
double link_log_abs_d1(Link link, double t);
std::string link_name(Link link);
Link parse_link(const std::string& name);

// Parametric map f_θ : R^D -> R^K evaluated on M inputs at once (xs is M×D).
// Jacobian rows are ordered (m, k) -> m*K + k.
class DifferentiableModel {
 public:
  virtual ~DifferentiableModel() = default;

  virtual int param_count() const = 0;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual std::string param_name(int i) const { return "theta_" + std::to_string(i); }
  virtual std::unique_ptr<DifferentiableModel> clone() const = 0;

  Matrix eval(const ParamVector& theta, const Matrix& xs) const;
  Matrix jacobian(const ParamVector& theta, const Matrix& xs) const;
  // Σ_{m,k} adjoint(m,k) ∂f_k(x_m)/∂θ; the reverse-mode gradient of a scalar
  // loss whose derivative with respect to the outputs is `adjoint`.
  ParamVector vjp(const ParamVector& theta, const Matrix& xs, const Matrix& adjoint) const;
  // ∇_θ Σ_{r,p} weights(r,p) J(θ)(r,p), with weights shaped like jacobian().
  ParamVector jacobian_vjp(const ParamVector& theta, const Matrix& xs, const Matrix& weights) const;

 protected:
  virtual Matrix eval_impl(const ParamVector& theta, const Matrix& xs) const = 0;
  virtual Matrix jacobian_impl(const ParamVector& theta, const Matrix& xs) const = 0;
  virtual ParamVector vjp_impl(const ParamVector& theta, const Matrix& xs, const Matrix& adjoint) const;
  virtual ParamVector jacobian_vjp_impl(const ParamVector& theta, const Matrix& xs,
                                        const Matrix& weights) const = 0;

 private:
  void check_args(const ParamVector& theta, const Matrix& xs) const;
};

// f_θ(x) = Σ_i σ(θ_i) φ_i(x); parameters are ordered cos terms first, then sin.
class FourierLink : public DifferentiableModel {
 public:
  explicit FourierLink(int num_frequencies = 100, Link link = Link::Tanh);
  FourierLink(std::vector<double> frequencies, Link link);

  int param_count() const override { return 2 * static_cast<int>(frequencies_.size()); }
  int input_dim() const override { return 1; }
  int output_dim() const override { return 1; }
  std::unique_ptr<DifferentiableModel> clone() const override;

  Link link() const { return link_; }
  const std::vector<double>& frequencies() const { return frequencies_; }
  int num_frequencies() const { return static_cast<int>(frequencies_.size()); }
  // M×P matrix of basis values φ_i(x_m).
  Matrix basis(const Matrix& xs) const;
  Vector link_derivatives(const ParamVector& theta) const;

 protected:
  Matrix eval_impl(const ParamVector& theta, const Matrix& xs) const override;
  Matrix jacobian_impl(const ParamVector& theta, const Matrix& xs) const override;
  ParamVector vjp_impl(const ParamVector& theta, const Matrix& xs, const Matrix& adjoint) const override;
  ParamVector jacobian_vjp_impl(const ParamVector& theta, const Matrix& xs,
                                const Matrix& weights) const override;

 private:
  std::vector<double> frequencies_;
  Link link_;
  bool harmonic_;
};

struct BumpsGeometry {
  double center_left = 0.25;
  double center_right = 0.75;
  double width = 0.1;
  double domain_lo = 0.0;
  double domain_hi = 1.0;
};

// f_θ(x) = exp(θ_L) φ(x; c_L, w) + exp(θ_R) φ(x; c_R, w), φ(x; c, w) = exp(-(x-c)²/(2w²)).
class GaussianBumps : public DifferentiableModel {
 public:
  explicit GaussianBumps(BumpsGeometry geometry = {});

  int param_count() const override { return 2; }
  int input_dim() const override { return 1; }
  int output_dim() const override { return 1; }
  std::string param_name(int i) const override { return i == 0 ? "theta_L" : "theta_R"; }
  std::unique_ptr<DifferentiableModel> clone() const override;

  const BumpsGeometry& geometry() const { return geometry_; }
  double bump(double x, double center) const;

 protected:
  Matrix eval_impl(const ParamVector& theta, const Matrix& xs) const override;
  Matrix jacobian_impl(const ParamVector& theta, const Matrix& xs) const override;
  ParamVector jacobian_vjp_impl(const ParamVector& theta, const Matrix& xs,
                                const Matrix& weights) const override;

 private:
  BumpsGeometry geometry_;
};

enum class Activation { Tanh, Relu };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

// Fully connected network; hidden layers use `activation`, the output layer is
// affine. Per layer the flattened parameters are W (out×in, row-major) then b.
class Mlp : public DifferentiableModel {
 public:
  struct Layer {
    int in;
    int out;
    int weight_offset;
    int bias_offset;  // -1 when the network has no biases
  };

  Mlp(std::vector<int> layer_widths, Activation activation, bool bias = true);

  int param_count() const override { return param_count_; }
  int input_dim() const override { return widths_.front(); }
  int output_dim() const override { return widths_.back(); }
  std::unique_ptr<DifferentiableModel> clone() const override;

  const std::vector<int>& layer_widths() const { return widths_; }
  const std::vector<Layer>& layers() const { return layers_; }
  Activation activation() const { return activation_; }
  bool has_bias() const { return bias_; }

  // Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  ParamVector init(std::uint64_t seed) const;

 protected:
  Matrix eval_impl(const ParamVector& theta, const Matrix& xs) const override;
  Matrix jacobian_impl(const ParamVector& theta, const Matrix& xs) const override;
  ParamVector vjp_impl(const ParamVector& theta, const Matrix& xs, const Matrix& adjoint) const override;
  ParamVector jacobian_vjp_impl(const ParamVector& theta, const Matrix& xs,
                                const Matrix& weights) const override;

 private:
  std::vector<int> widths_;
  Activation activation_;
  bool bias_;
  std::vector<Layer> layers_;
  int param_count_ = 0;
};

// Smooth bijections θ' = R(θ) applied coordinatewise.
enum class Transform { Tanh, Inverse };

std::string transform_name(Transform t);
ParamVector transform_forward(Transform t, const ParamVector& theta);
ParamVector transform_inverse(Transform t, const ParamVector& theta_prime);
// log|det ∂θ'/∂θ| at θ.
double transform_log_abs_det(Transform t, const ParamVector& theta);

struct Reparameterization {
  FourierLink model;  // model in the new coordinates θ'
  Transform transform;

  ParamVector forward(const ParamVector& theta) const { return transform_forward(transform, theta); }
  ParamVector inverse(const ParamVector& theta_prime) const { return transform_inverse(transform, theta_prime); }
  double log_abs_det_forward(const ParamVector& theta) const { return transform_log_abs_det(transform, theta); }
};

// Returns the model with link σ_b = σ_a ∘ R⁻¹ so that f'_{R(θ)} = f_θ.
// Supported: tanh link with θ' = tanh θ, identity or inverse link with θ' = 1/θ.
Reparameterization reparameterize(const FourierLink& model, Transform transform);

}  // namespace fsmap
