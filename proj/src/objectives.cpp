#include "fsmap/objectives.hpp"

#include <cmath>
#include <limits>

#include "fsmap/errors.hpp"
#include "fsmap/linalg.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {

namespace {

constexpr std::uint64_t kStreamPsi = 0x707369;
constexpr std::uint64_t kTagLmapPoints = 11;

Vector simpson_weights(int n) {
  Vector w(n);
  for (int i = 0; i < n; ++i) w(i) = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
  return w / w.sum();
}


}  // namespace

GramMatrix gram_exact_fourier(const ParamVector& theta, const FourierLink& model, const Matrix& phi) {
  if (phi.rows() != model.param_count() || phi.cols() != model.param_count())
    throw DimensionError("Phi must be P×P");
  if (theta.size() != model.param_count()) throw DimensionError("theta has the wrong length");
  const Vector d = model.link_derivatives(theta);
  GramMatrix g;
  g.entries = d.asDiagonal() * phi * d.asDiagonal();
  g.provenance = GramMatrix::Provenance::Exact;
  return g;
}

GramEstimate gram_mc(const DifferentiableModel& model, const ParamVector& theta, const EvalDistribution& p_x,
                     int samples, std::uint64_t seed, const Dataset* train) {
  GramEstimate out;
  out.points = eval_dist_sample(p_x, seed, samples, train);
  out.stacked = model.jacobian(theta, out.points);
  out.gram.entries = Matrix::Zero(model.param_count(), model.param_count());
  out.gram.entries.selfadjointView<Eigen::Lower>().rankUpdate(out.stacked.transpose(), 1.0 / samples);
  out.gram.entries = out.gram.entries.selfadjointView<Eigen::Lower>();
  out.gram.provenance = GramMatrix::Provenance::MonteCarlo;
  out.gram.samples = samples;
  out.gram.seed = seed;
  return out;
}

EvalQuadrature make_quadrature(const EvalDistribution& p_x, int nodes_per_axis, std::uint64_t seed, int mc_samples,
                               const Dataset* train) {
  EvalQuadrature q;
  if (const auto* u = std::get_if<UniformDist>(&p_x); u && (u->dim == 1 || u->dim == 2)) {
    const int n = nodes_per_axis % 2 ? nodes_per_axis : nodes_per_axis + 1;
    const Vector w = simpson_weights(n);
    const Vector x = Vector::LinSpaced(n, u->a, u->b);
    if (u->dim == 1) {
      q.nodes = x;
      q.weights = w;
    } else {
      q.nodes.resize(n * n, 2);
      q.weights.resize(n * n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          q.nodes(i * n + j, 0) = x(i);
          q.nodes(i * n + j, 1) = x(j);
          q.weights(i * n + j) = w(i) * w(j);
        }
    }
    return q;
  }
  if (const auto* d = std::get_if<DiracSet>(&p_x)) {
    q.nodes = d->points;
  } else if (std::holds_alternative<EmpiricalTrain>(p_x)) {
    if (!train) throw std::invalid_argument("EmpiricalTrain quadrature needs the training set");
    q.nodes = train->inputs;
  } else {
    q.nodes = eval_dist_sample(p_x, seed, mc_samples, train);
  }
  q.weights = Vector::Constant(q.nodes.rows(), 1.0 / static_cast<double>(q.nodes.rows()));
  return q;
}

Matrix weighted_stacked_jacobian(const DifferentiableModel& model, const ParamVector& theta,
                                 const EvalQuadrature& quad) {
  Matrix j = model.jacobian(theta, quad.nodes);
  const int k = model.output_dim();
  for (Eigen::Index m = 0; m < quad.nodes.rows(); ++m) j.middleRows(m * k, k) *= std::sqrt(quad.weights(m));
  return j;
}

GramMatrix gram_quadrature(const DifferentiableModel& model, const ParamVector& theta, const EvalQuadrature& quad) {
  const Matrix j = weighted_stacked_jacobian(model, theta, quad);
  GramMatrix g;
  g.entries = j.transpose() * j;
  g.provenance = GramMatrix::Provenance::Exact;
  return g;
}

double logdet_jittered(const GramMatrix& gram, double eps) { return logdet_jittered_gram(gram.entries, eps); }

double logdet_jittered(const Matrix& stacked, int samples, double eps) {
  if (samples < 1) throw std::invalid_argument("sample count must be >= 1");
  return logdet_jittered_stacked(stacked, 1.0 / samples, eps);
}

std::string objective_name(const ObjectiveSpec& spec) {
  switch (spec.kind.index()) {
    case 0: return "ps";
    case 1: return "fs";
    case 2: return "fs-mc";
    default: return "lmap";
  }
}

void validate(const ObjectiveSpec& spec) {
  if (const auto* e = std::get_if<FsMapExact>(&spec.kind)) {
    if (!(e->jitter >= 0)) throw std::invalid_argument("jitter must be >= 0");
  } else if (const auto* mc = std::get_if<FsMapMc>(&spec.kind)) {
    if (!(mc->jitter > 0)) throw std::invalid_argument("FsMapMc requires jitter > 0");
    if (mc->samples < 1) throw std::invalid_argument("FsMapMc requires S >= 1");
  } else if (const auto* l = std::get_if<LMap>(&spec.kind)) {
    if (!(l->lambda >= 0)) throw std::invalid_argument("LMap requires lambda >= 0");
    if (!(l->beta > 0)) throw std::invalid_argument("LMap requires beta > 0");
    if (l->samples < 1) throw std::invalid_argument("LMap requires S >= 1");
  }
}

FsMapExact make_fs_exact(const DifferentiableModel& model, EvalDistribution p_x, double jitter, std::uint64_t seed,
                         int quadrature_nodes) {
  FsMapExact e;
  e.p_x = std::move(p_x);
  e.jitter = jitter;
  if (const auto* f = dynamic_cast<const FourierLink*>(&model)) {
    e.phi = phi_matrix(*f, e.p_x, seed);
    Eigen::LLT<Matrix> llt(*e.phi);
    if (llt.info() == Eigen::Success) {
      e.phi_logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    } else {
      e.phi_logdet = std::numeric_limits<double>::quiet_NaN();
      e.phi_null_directions = std::max(1, null_direction_count(*e.phi));
    }
  } else {
    e.quadrature = make_quadrature(e.p_x, quadrature_nodes, seed);
  }
  return e;
}

double lmap_lambda_for_jitter(double eps, int n) {
  if (!(eps > 0) || n < 1) throw std::invalid_argument("lambda needs eps > 0 and N >= 1");
  return 1.0 / (2.0 * eps * n);
}

double ps_map_objective(const ParamVector& theta, const DifferentiableModel& model, const Dataset& data,
                        const Prior& prior, const Likelihood& likelihood) {
  return log_likelihood(data, model, theta, likelihood) + log_prior(theta, prior);
}

namespace {

HalfLogDet fourier_half_logdet(const ParamVector& theta, const FourierLink& model, const FsMapExact& e,
                               bool want_gradient) {
  HalfLogDet out;
  const Link link = model.link();
  const Eigen::Index p = theta.size();
  if (e.jitter == 0.0) {
    // 𝓙 = DΦD with D = diag(σ′(θ)), so log det 𝓙 = 2Σ log|σ′(θ_i)| + log det Φ.
    if (std::isnan(e.phi_logdet))
      throw SingularityError("Gram matrix is singular with zero jitter (" +
                                 std::to_string(e.phi_null_directions) + " null directions)",
                             e.phi_null_directions);
    double s = 0.0;
    for (Eigen::Index i = 0; i < p; ++i) s += link_log_abs_d1(link, theta(i));
    out.value = s + 0.5 * e.phi_logdet;
    if (want_gradient) out.gradient = theta.unaryExpr([link](double t) { return link_log_d1_derivative(link, t); });
    return out;
  }
  const Vector d1 = model.link_derivatives(theta);
  Matrix a = d1.asDiagonal() * (*e.phi) * d1.asDiagonal();
  a.diagonal().array() += e.jitter;
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw std::runtime_error("jittered Gram is not positive definite");
  out.value = llt.matrixLLT().diagonal().array().log().sum();
  if (want_gradient) {
    // ∂/∂θ_i ½ log det(𝓙+εI) = σ″(θ_i) Σ_j [(𝓙+εI)⁻¹]_ij σ′(θ_j) Φ_ij
    const Matrix inv = llt.solve(Matrix::Identity(p, p));
    const Vector d2 = theta.unaryExpr([link](double t) { return link_d2(link, t); });
    out.gradient = d2.cwiseProduct(inv.cwiseProduct(*e.phi) * d1);
  }
  return out;
}

}  // namespace

HalfLogDet fs_half_logdet(const ParamVector& theta, const DifferentiableModel& model, const Dataset& data,
                          const ObjectiveSpec& spec, std::uint64_t seed, bool want_gradient) {
  if (const auto* e = std::get_if<FsMapExact>(&spec.kind)) {
    if (e->phi) {
      const auto* f = dynamic_cast<const FourierLink*>(&model);
      if (!f) throw std::invalid_argument("a precomputed Phi requires a FourierLink model");
      return fourier_half_logdet(theta, *f, *e, want_gradient);
    }
    const Matrix j = weighted_stacked_jacobian(model, theta, e->quadrature);
    const auto ld = logdet_jittered_fast(j, 1.0, e->jitter, want_gradient);
    HalfLogDet out;
    out.value = 0.5 * ld.value;
    if (want_gradient) {
      Matrix w = ld.weights;
      const int k = model.output_dim();
      for (Eigen::Index m = 0; m < e->quadrature.nodes.rows(); ++m)
        w.middleRows(m * k, k) *= std::sqrt(e->quadrature.weights(m));
      out.gradient = model.jacobian_vjp(theta, e->quadrature.nodes, w);
    }
    return out;
  }
  if (const auto* mc = std::get_if<FsMapMc>(&spec.kind)) {
    if (!(mc->jitter > 0)) throw std::invalid_argument("FsMapMc requires jitter > 0");
    const Matrix xs = eval_dist_sample(mc->p_x, seed, mc->samples, &data);
    const Matrix j = model.jacobian(theta, xs);
    const auto ld = logdet_jittered_fast(j, 1.0 / mc->samples, mc->jitter, want_gradient);
    HalfLogDet out;
    out.value = 0.5 * ld.value;
    if (want_gradient) out.gradient = model.jacobian_vjp(theta, xs, ld.weights);
    return out;
  }
  throw std::invalid_argument("fs_half_logdet needs an FS objective");
}

double fs_map_objective(const ParamVector& theta, const DifferentiableModel& model, const Dataset& data,
                        const ObjectiveSpec& spec, std::uint64_t seed) {
  return ps_map_objective(theta, model, data, spec.prior, spec.likelihood) -
         fs_half_logdet(theta, model, data, spec, seed, false).value;
}

LaplacianEstimate lmap_regularizer(const DifferentiableModel& model, const ParamVector& theta,
                                   const EvalDistribution& p_x, double beta, int samples, std::uint64_t seed,
                                   bool want_gradient, const Dataset* train) {
  if (!(beta > 0)) throw std::invalid_argument("beta must be positive");
  Rng rng(seed, kStreamPsi);
  ParamVector shifted = theta;
  for (Eigen::Index i = 0; i < shifted.size(); ++i) shifted(i) += beta * rng.normal();
  const Matrix xs = eval_dist_sample(p_x, derive_seed(seed, kTagLmapPoints), samples, train);
  const Matrix diff = model.eval(theta, xs) - model.eval(shifted, xs);
  LaplacianEstimate out;
  const double scale = 1.0 / (beta * beta * samples);
  out.value = scale * diff.squaredNorm();
  if (want_gradient) out.gradient = 2.0 * scale * (model.vjp(theta, xs, diff) - model.vjp(shifted, xs, diff));
  return out;
}

double lmap_loss(const ParamVector& theta, const DifferentiableModel& model, const Dataset& data,
                 const ObjectiveSpec& spec, std::uint64_t seed) {
  const auto* l = std::get_if<LMap>(&spec.kind);
  if (!l) throw std::invalid_argument("lmap_loss needs an LMap objective");
  if (data.size() == 0) throw std::invalid_argument("lmap_loss needs a non-empty dataset");
  const double n = static_cast<double>(data.size());
  double loss = -ps_map_objective(theta, model, data, spec.prior, spec.likelihood) / n;
  if (l->lambda != 0.0) loss += l->lambda * lmap_regularizer(model, theta, l->p_x, l->beta, l->samples, seed, false, &data).value;
  return loss;
}

LossEvaluation evaluate_loss(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                             const ParamVector& theta, std::uint64_t seed, bool want_gradient) {
  LossEvaluation out;
  double log_post = log_prior(theta, spec.prior);
  ParamVector grad;
  if (want_gradient) grad = log_prior_gradient(theta, spec.prior);
  if (data.size() > 0) {
    const Matrix outputs = model.eval(theta, data.inputs);
    log_post += log_likelihood_outputs(data, outputs, spec.likelihood);
    if (want_gradient)
      grad += model.vjp(theta, data.inputs, log_likelihood_output_grad(data, outputs, spec.likelihood));
  }
  if (std::holds_alternative<PsMap>(spec.kind)) {
    out.loss = -log_post;
    if (want_gradient) out.gradient = -grad;
    out.diagnostic = std::numeric_limits<double>::quiet_NaN();
  } else if (const auto* l = std::get_if<LMap>(&spec.kind)) {
    if (data.size() == 0) throw std::invalid_argument("L-MAP needs a non-empty dataset");
    const double n = static_cast<double>(data.size());
    const auto r = lmap_regularizer(model, theta, l->p_x, l->beta, l->samples, seed, want_gradient, &data);
    out.loss = -log_post / n + l->lambda * r.value;
    out.diagnostic = r.value;
    if (want_gradient) out.gradient = -grad / n + l->lambda * r.gradient;
  } else {
    const auto h = fs_half_logdet(theta, model, data, spec, seed, want_gradient);
    out.loss = -(log_post - h.value);
    out.diagnostic = h.value;
    if (want_gradient) out.gradient = -(grad - h.gradient);
  }
  return out;
}

}  // namespace fsmap
