#include "fsmap/diffmodel.hpp"

#include <cmath>
#include <numbers>

#include "fsmap/errors.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {

namespace {

double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

void require_nonzero(double t) {
  if (t == 0.0) throw DomainError("inverse link/transform undefined at 0");
}

}  // namespace

double link_value(Link link, double t) {
  switch (link) {
    case Link::Tanh: return std::tanh(t);
    case Link::Identity: return t;
    case Link::Inverse: require_nonzero(t); return 1.0 / t;
  }
  return 0.0;
}

double link_d1(Link link, double t) {
  switch (link) {
    case Link::Tanh: {
      const double c = std::cosh(t);
      return std::isinf(c) ? 0.0 : 1.0 / (c * c);
    }
    case Link::Identity: return 1.0;
    case Link::Inverse: require_nonzero(t); return -1.0 / (t * t);
  }
  return 0.0;
}

double link_d2(Link link, double t) {
  switch (link) {
    case Link::Tanh: return -2.0 * std::tanh(t) * link_d1(link, t);
    case Link::Identity: return 0.0;
    case Link::Inverse: require_nonzero(t); return 2.0 / (t * t * t);
  }
  return 0.0;
}

double link_log_d1_derivative(Link link, double t) {
  switch (link) {
    case Link::Tanh: return -2.0 * std::tanh(t);
    case Link::Identity: return 0.0;
    case Link::Inverse: require_nonzero(t); return -2.0 / t;
  }
  return 0.0;
}

double link_log_abs_d1(Link link, double t) {
  switch (link) {
    case Link::Tanh: return -2.0 * log_cosh(t);
    case Link::Identity: return 0.0;
    case Link::Inverse: require_nonzero(t); return -2.0 * std::log(std::abs(t));
  }
  return 0.0;
}

std::string link_name(Link link) {
  switch (link) {
    case Link::Tanh: return "tanh";
    case Link::Identity: return "identity";
    case Link::Inverse: return "inverse";
  }
  return "";
}

Link parse_link(const std::string& name) {
  if (name == "tanh") return Link::Tanh;
  if (name == "identity") return Link::Identity;
  if (name == "inverse") return Link::Inverse;
  throw std::invalid_argument("unknown link '" + name + "'");
}

// ---------------------------------------------------------------------------

void DifferentiableModel::check_args(const ParamVector& theta, const Matrix& xs) const {
  if (theta.size() != param_count())
    throw DimensionError("theta has length " + std::to_string(theta.size()) + ", model expects " +
                         std::to_string(param_count()));
  if (xs.cols() != input_dim())
    throw DimensionError("inputs have " + std::to_string(xs.cols()) + " columns, model expects " +
                         std::to_string(input_dim()));
}

Matrix DifferentiableModel::eval(const ParamVector& theta, const Matrix& xs) const {
  check_args(theta, xs);
  Matrix out = eval_impl(theta, xs);
  for (Eigen::Index m = 0; m < out.rows(); ++m)
    if (!out.row(m).allFinite()) throw NonFiniteError("non-finite model output", m);
  return out;
}

Matrix DifferentiableModel::jacobian(const ParamVector& theta, const Matrix& xs) const {
  check_args(theta, xs);
  return jacobian_impl(theta, xs);
}

ParamVector DifferentiableModel::vjp(const ParamVector& theta, const Matrix& xs, const Matrix& adjoint) const {
  check_args(theta, xs);
  if (adjoint.rows() != xs.rows() || adjoint.cols() != output_dim())
    throw DimensionError("adjoint must be M×K");
  ParamVector g = vjp_impl(theta, xs, adjoint);
  if (!g.allFinite()) throw NonFiniteError("non-finite gradient", 0);
  return g;
}

ParamVector DifferentiableModel::jacobian_vjp(const ParamVector& theta, const Matrix& xs,
                                              const Matrix& weights) const {
  check_args(theta, xs);
  if (weights.rows() != xs.rows() * output_dim() || weights.cols() != param_count())
    throw DimensionError("weights must be (M*K)×P");
  return jacobian_vjp_impl(theta, xs, weights);
}

ParamVector DifferentiableModel::vjp_impl(const ParamVector& theta, const Matrix& xs,
                                          const Matrix& adjoint) const {
  const Matrix j = jacobian_impl(theta, xs);
  const Matrix at = adjoint.transpose();
  const Eigen::Map<const Vector> flat(at.data(), at.size());
  return j.transpose() * flat;
}

// ---------------------------------------------------------------------------

FourierLink::FourierLink(int num_frequencies, Link link) : link_(link), harmonic_(true) {
  if (num_frequencies < 1) throw std::invalid_argument("num_frequencies must be >= 1");
  frequencies_.resize(num_frequencies);
  for (int i = 0; i < num_frequencies; ++i) frequencies_[i] = (i + 1) * std::numbers::pi;
}

FourierLink::FourierLink(std::vector<double> frequencies, Link link)
    : frequencies_(std::move(frequencies)), link_(link), harmonic_(true) {
  if (frequencies_.empty()) throw std::invalid_argument("frequency list is empty");
  for (std::size_t i = 0; i < frequencies_.size(); ++i)
    if (frequencies_[i] != (i + 1) * frequencies_[0]) harmonic_ = false;
}

std::unique_ptr<DifferentiableModel> FourierLink::clone() const { return std::make_unique<FourierLink>(*this); }

Matrix FourierLink::basis(const Matrix& xs) const {
  const int f = num_frequencies();
  Matrix b(xs.rows(), 2 * f);
  for (Eigen::Index m = 0; m < xs.rows(); ++m) {
    const double x = xs(m, 0);
    if (harmonic_) {
      const double c1 = std::cos(frequencies_[0] * x);
      const double s1 = std::sin(frequencies_[0] * x);
      double c = c1, s = s1;
      for (int i = 0; i < f; ++i) {
        b(m, i) = c;
        b(m, f + i) = s;
        const double cn = c * c1 - s * s1;
        s = s * c1 + c * s1;
        c = cn;
      }
    } else {
      for (int i = 0; i < f; ++i) {
        b(m, i) = std::cos(frequencies_[i] * x);
        b(m, f + i) = std::sin(frequencies_[i] * x);
      }
    }
  }
  return b;
}

Vector FourierLink::link_derivatives(const ParamVector& theta) const {
  return theta.unaryExpr([this](double t) { return link_d1(link_, t); });
}

Matrix FourierLink::eval_impl(const ParamVector& theta, const Matrix& xs) const {
  const Vector s = theta.unaryExpr([this](double t) { return link_value(link_, t); });
  return basis(xs) * s;
}

Matrix FourierLink::jacobian_impl(const ParamVector& theta, const Matrix& xs) const {
  return basis(xs) * link_derivatives(theta).asDiagonal();
}

ParamVector FourierLink::vjp_impl(const ParamVector& theta, const Matrix& xs, const Matrix& adjoint) const {
  return link_derivatives(theta).cwiseProduct(basis(xs).transpose() * adjoint.col(0));
}

ParamVector FourierLink::jacobian_vjp_impl(const ParamVector& theta, const Matrix& xs,
                                           const Matrix& weights) const {
  const Vector d2 = theta.unaryExpr([this](double t) { return link_d2(link_, t); });
  const Vector colsum = weights.cwiseProduct(basis(xs)).colwise().sum().transpose();
  return d2.cwiseProduct(colsum);
}

// ---------------------------------------------------------------------------

GaussianBumps::GaussianBumps(BumpsGeometry geometry) : geometry_(geometry) {
  if (!(geometry_.width > 0)) throw std::invalid_argument("bump width must be positive");
  if (!(geometry_.domain_hi > geometry_.domain_lo)) throw std::invalid_argument("empty bump domain");
}

std::unique_ptr<DifferentiableModel> GaussianBumps::clone() const { return std::make_unique<GaussianBumps>(*this); }

double GaussianBumps::bump(double x, double center) const {
  const double z = (x - center) / geometry_.width;
  return std::exp(-0.5 * z * z);
}

Matrix GaussianBumps::eval_impl(const ParamVector& theta, const Matrix& xs) const {
  Matrix out(xs.rows(), 1);
  const double hl = std::exp(theta(0)), hr = std::exp(theta(1));
  for (Eigen::Index m = 0; m < xs.rows(); ++m)
    out(m, 0) = hl * bump(xs(m, 0), geometry_.center_left) + hr * bump(xs(m, 0), geometry_.center_right);
  return out;
}

Matrix GaussianBumps::jacobian_impl(const ParamVector& theta, const Matrix& xs) const {
  Matrix j(xs.rows(), 2);
  const double hl = std::exp(theta(0)), hr = std::exp(theta(1));
  for (Eigen::Index m = 0; m < xs.rows(); ++m) {
    j(m, 0) = hl * bump(xs(m, 0), geometry_.center_left);
    j(m, 1) = hr * bump(xs(m, 0), geometry_.center_right);
  }
  return j;
}

ParamVector GaussianBumps::jacobian_vjp_impl(const ParamVector& theta, const Matrix& xs,
                                             const Matrix& weights) const {
  // The Jacobian entries are exp(θ_j)φ_j(x), so each is its own θ_j-derivative.
  return weights.cwiseProduct(jacobian_impl(theta, xs)).colwise().sum().transpose();
}

// ---------------------------------------------------------------------------

std::string activation_name(Activation a) { return a == Activation::Tanh ? "tanh" : "relu"; }

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "relu") return Activation::Relu;
  throw std::invalid_argument("unknown activation '" + name + "'");
}

namespace {

// Forward-mode dual number; used to run backprop with a tangent on θ, which
// yields Hessian-vector products.
struct Dual {
  double v = 0.0;
  double d = 0.0;
  Dual() = default;
  Dual(double value) : v(value) {}  // NOLINT: implicit by design
  Dual(double value, double tangent) : v(value), d(tangent) {}
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual& operator+=(Dual& a, Dual b) { return a = a + b; }

inline double value_of(double x) { return x; }
inline double value_of(Dual x) { return x.v; }

inline double act(Activation a, double z) { return a == Activation::Tanh ? std::tanh(z) : (z > 0 ? z : 0.0); }
inline Dual act(Activation a, Dual z) {
  if (a == Activation::Tanh) {
    const double t = std::tanh(z.v);
    return {t, z.d * (1.0 - t * t)};
  }
  return z.v > 0 ? z : Dual(0.0);
}

template <class T>
inline T act_d1(Activation a, const T& z, const T& az) {
  if (a == Activation::Tanh) return T(1.0) - az * az;
  return T(value_of(z) > 0 ? 1.0 : 0.0);
}

template <class T>
struct Workspace {
  std::vector<std::vector<T>> z;  // pre-activations per layer (index 1..L)
  std::vector<std::vector<T>> a;  // activations, a[0] = input
  std::vector<T> delta, delta_prev;
};

template <class T>
void mlp_forward(const std::vector<Mlp::Layer>& layers, Activation activation, const T* theta,
                 const double* x, Workspace<T>& ws) {
  const std::size_t n = layers.size();
  ws.z.resize(n + 1);
  ws.a.resize(n + 1);
  ws.a[0].assign(layers[0].in, T(0.0));
  for (int i = 0; i < layers[0].in; ++i) ws.a[0][i] = T(x[i]);
  for (std::size_t l = 0; l < n; ++l) {
    const auto& L = layers[l];
    auto& z = ws.z[l + 1];
    auto& a = ws.a[l + 1];
    z.assign(L.out, T(0.0));
    a.assign(L.out, T(0.0));
    const auto& prev = ws.a[l];
    for (int o = 0; o < L.out; ++o) {
      T acc = L.bias_offset >= 0 ? theta[L.bias_offset + o] : T(0.0);
      const T* w = theta + L.weight_offset + static_cast<std::ptrdiff_t>(o) * L.in;
      for (int i = 0; i < L.in; ++i) acc += w[i] * prev[i];
      z[o] = acc;
      a[o] = (l + 1 < n) ? act(activation, acc) : acc;
      if (!std::isfinite(value_of(a[o]))) throw NonFiniteError("non-finite activation", static_cast<long>(l + 1));
    }
  }
}

// Accumulates Σ_k seed[k] ∂f_k/∂θ into grad, using the state left by mlp_forward.
template <class T>
void mlp_backward(const std::vector<Mlp::Layer>& layers, Activation activation, const T* theta,
                  const double* seed, Workspace<T>& ws, T* grad) {
  const std::size_t n = layers.size();
  ws.delta.assign(layers.back().out, T(0.0));
  for (int k = 0; k < layers.back().out; ++k) ws.delta[k] = T(seed[k]);
  for (std::size_t l = n; l-- > 0;) {
    const auto& L = layers[l];
    const auto& prev = ws.a[l];
    for (int o = 0; o < L.out; ++o) {
      const T d = ws.delta[o];
      T* gw = grad + L.weight_offset + static_cast<std::ptrdiff_t>(o) * L.in;
      for (int i = 0; i < L.in; ++i) gw[i] += d * prev[i];
      if (L.bias_offset >= 0) grad[L.bias_offset + o] += d;
    }
    if (l == 0) break;
    ws.delta_prev.assign(L.in, T(0.0));
    for (int o = 0; o < L.out; ++o) {
      const T* w = theta + L.weight_offset + static_cast<std::ptrdiff_t>(o) * L.in;
      for (int i = 0; i < L.in; ++i) ws.delta_prev[i] += w[i] * ws.delta[o];
    }
    for (int i = 0; i < L.in; ++i)
      ws.delta_prev[i] = ws.delta_prev[i] * act_d1(activation, ws.z[l][i], ws.a[l][i]);
    std::swap(ws.delta, ws.delta_prev);
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> layer_widths, Activation activation, bool bias)
    : widths_(std::move(layer_widths)), activation_(activation), bias_(bias) {
  if (widths_.size() < 2) throw std::invalid_argument("an Mlp needs at least input and output widths");
  int offset = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l] < 1 || widths_[l + 1] < 1) throw std::invalid_argument("layer widths must be positive");
    Layer layer{widths_[l], widths_[l + 1], offset, -1};
    offset += layer.in * layer.out;
    if (bias_) {
      layer.bias_offset = offset;
      offset += layer.out;
    }
    layers_.push_back(layer);
  }
  param_count_ = offset;
}

std::unique_ptr<DifferentiableModel> Mlp::clone() const { return std::make_unique<Mlp>(*this); }

ParamVector Mlp::init(std::uint64_t seed) const {
  Rng rng(seed, 0x6d6c70);
  ParamVector theta(param_count_);
  for (const auto& L : layers_) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(L.in));
    for (int i = 0; i < L.in * L.out; ++i) theta(L.weight_offset + i) = rng.uniform(-bound, bound);
    if (L.bias_offset >= 0)
      for (int o = 0; o < L.out; ++o) theta(L.bias_offset + o) = rng.uniform(-bound, bound);
  }
  return theta;
}

Matrix Mlp::eval_impl(const ParamVector& theta, const Matrix& xs) const {
  const int k = output_dim();
  Matrix out(xs.rows(), k);
  Workspace<double> ws;
  std::vector<double> x(input_dim());
  for (Eigen::Index m = 0; m < xs.rows(); ++m) {
    for (int d = 0; d < input_dim(); ++d) x[d] = xs(m, d);
    mlp_forward(layers_, activation_, theta.data(), x.data(), ws);
    for (int j = 0; j < k; ++j) out(m, j) = ws.a.back()[j];
  }
  return out;
}

Matrix Mlp::jacobian_impl(const ParamVector& theta, const Matrix& xs) const {
  const int k = output_dim();
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> j =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(xs.rows() * k, param_count_);
  Workspace<double> ws;
  std::vector<double> x(input_dim()), seed(k, 0.0);
  for (Eigen::Index m = 0; m < xs.rows(); ++m) {
    for (int d = 0; d < input_dim(); ++d) x[d] = xs(m, d);
    mlp_forward(layers_, activation_, theta.data(), x.data(), ws);
    for (int out = 0; out < k; ++out) {
      std::fill(seed.begin(), seed.end(), 0.0);
      seed[out] = 1.0;
      mlp_backward(layers_, activation_, theta.data(), seed.data(), ws, j.row(m * k + out).data());
    }
  }
  return j;
}

ParamVector Mlp::vjp_impl(const ParamVector& theta, const Matrix& xs, const Matrix& adjoint) const {
  const int k = output_dim();
  ParamVector g = ParamVector::Zero(param_count_);
  Workspace<double> ws;
  std::vector<double> x(input_dim()), seed(k);
  for (Eigen::Index m = 0; m < xs.rows(); ++m) {
    for (int d = 0; d < input_dim(); ++d) x[d] = xs(m, d);
    for (int out = 0; out < k; ++out) seed[out] = adjoint(m, out);
    mlp_forward(layers_, activation_, theta.data(), x.data(), ws);
    mlp_backward(layers_, activation_, theta.data(), seed.data(), ws, g.data());
  }
  return g;
}

ParamVector Mlp::jacobian_vjp_impl(const ParamVector& theta, const Matrix& xs, const Matrix& weights) const {
  // Row r of J is ∇f_r; ⟨W_r, ∇f_r⟩ is the directional derivative of f_r along
  // W_r, whose gradient is the Hessian-vector product ∇²f_r W_r. Running
  // backprop with θ carrying tangent W_r gives that product in the tangent part.
  const int k = output_dim();
  const int p = param_count_;
  ParamVector g = ParamVector::Zero(p);
  Workspace<Dual> ws;
  std::vector<Dual> th(p), grad(p);
  std::vector<double> x(input_dim()), seed(k);
  for (Eigen::Index m = 0; m < xs.rows(); ++m) {
    for (int d = 0; d < input_dim(); ++d) x[d] = xs(m, d);
    for (int out = 0; out < k; ++out) {
      const Eigen::Index r = m * k + out;
      if (weights.row(r).isZero(0.0)) continue;
      for (int i = 0; i < p; ++i) th[i] = Dual(theta(i), weights(r, i));
      std::fill(seed.begin(), seed.end(), 0.0);
      seed[out] = 1.0;
      std::fill(grad.begin(), grad.end(), Dual(0.0));
      mlp_forward(layers_, activation_, th.data(), x.data(), ws);
      mlp_backward(layers_, activation_, th.data(), seed.data(), ws, grad.data());
      for (int i = 0; i < p; ++i) g(i) += grad[i].d;
    }
  }
  return g;
}

// ---------------------------------------------------------------------------

std::string transform_name(Transform t) { return t == Transform::Tanh ? "tanh" : "inverse"; }

ParamVector transform_forward(Transform t, const ParamVector& theta) {
  if (t == Transform::Tanh) return theta.array().tanh().matrix();
  for (double v : theta) require_nonzero(v);
  return theta.cwiseInverse();
}

ParamVector transform_inverse(Transform t, const ParamVector& theta_prime) {
  if (t == Transform::Tanh) {
    for (double v : theta_prime)
      if (!(std::abs(v) < 1.0)) throw DomainError("atanh requires |theta'| < 1");
    return theta_prime.unaryExpr([](double v) { return std::atanh(v); });
  }
  for (double v : theta_prime) require_nonzero(v);
  return theta_prime.cwiseInverse();
}

double transform_log_abs_det(Transform t, const ParamVector& theta) {
  double s = 0.0;
  for (double v : theta) s += t == Transform::Tanh ? -2.0 * log_cosh(v) : (require_nonzero(v), -2.0 * std::log(std::abs(v)));
  return s;
}

Reparameterization reparameterize(const FourierLink& model, Transform transform) {
  Link out;
  if (transform == Transform::Tanh && model.link() == Link::Tanh) {
    out = Link::Identity;
  } else if (transform == Transform::Inverse && model.link() == Link::Identity) {
    out = Link::Inverse;
  } else if (transform == Transform::Inverse && model.link() == Link::Inverse) {
    out = Link::Identity;
  } else {
    throw std::invalid_argument("unsupported reparameterization: link " + link_name(model.link()) +
                                " with transform " + transform_name(transform));
  }
  return Reparameterization{FourierLink(model.frequencies(), out), transform};
}

}  // namespace fsmap
