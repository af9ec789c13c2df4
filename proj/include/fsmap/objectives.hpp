#pragma once

#include <cstdint>
#include <optional>
#include <variant>

#include "fsmap/diffmodel.hpp"
#include "fsmap/probability.hpp"

namespace fsmap {

struct GramMatrix {
  enum class Provenance { Exact, MonteCarlo };
  Matrix entries;
  Provenance provenance = Provenance::Exact;
  int samples = 0;
  std::uint64_t seed = 0;
};

GramMatrix gram_exact_fourier(const ParamVector& theta, const FourierLink& model, const Matrix& phi);

struct GramEstimate {
  GramMatrix gram;
  Matrix stacked;  // (S·K)×P stacked Jacobian
  Matrix points;   // the S sampled inputs
};

GramEstimate gram_mc(const DifferentiableModel& model, const ParamVector& theta, const EvalDistribution& p_x,
                     int samples, std::uint64_t seed, const Dataset* train = nullptr);

// Deterministic nodes and weights approximating E_{p_X}: composite Simpson for
// uniform distributions in one or two dimensions, the atoms themselves for a
// DiracSet, and an equal-weight Monte Carlo sample otherwise.
struct EvalQuadrature {
  Matrix nodes;
  Vector weights;
};

EvalQuadrature make_quadrature(const EvalDistribution& p_x, int nodes_per_axis = 401, std::uint64_t seed = 0,
                               int mc_samples = 10000, const Dataset* train = nullptr);
GramMatrix gram_quadrature(const DifferentiableModel& model, const ParamVector& theta, const EvalQuadrature& quad);
// Rows of the Jacobian at the quadrature nodes scaled by sqrt(weight), so that
// stackedᵀ·stacked is the quadrature Gram.
Matrix weighted_stacked_jacobian(const DifferentiableModel& model, const ParamVector& theta,
                                 const EvalQuadrature& quad);

// log det(G + εI) for a Gram matrix; see linalg for the stacked-Jacobian form.
double logdet_jittered(const GramMatrix& gram, double eps);
double logdet_jittered(const Matrix& stacked, int samples, double eps);

struct PsMap {};

// FS-MAP with a deterministic Gram. For a FourierLink the closed form
// σ′(θ_i)σ′(θ_j)Φ_ij is used; other models integrate JᵀJ with `quadrature`.
struct FsMapExact {
  EvalDistribution p_x;
  double jitter = 0.0;
  std::optional<Matrix> phi;
  double phi_logdet = 0.0;  // log det Φ when Φ is nonsingular
  int phi_null_directions = 0;
  EvalQuadrature quadrature;
};

struct FsMapMc {
  EvalDistribution p_x;
  int samples = 100;
  double jitter = 1e-6;
};

struct LMap {
  EvalDistribution p_x;
  double lambda = 0.0;
  double beta = 1e-3;
  int samples = 100;
};

using ObjectiveKind = std::variant<PsMap, FsMapExact, FsMapMc, LMap>;

struct ObjectiveSpec {
  ObjectiveKind kind;
  Prior prior;
  Likelihood likelihood;
};

std::string objective_name(const ObjectiveSpec& spec);
void validate(const ObjectiveSpec& spec);

// Precomputes Φ (FourierLink) or the quadrature rule (other models).
FsMapExact make_fs_exact(const DifferentiableModel& model, EvalDistribution p_x, double jitter,
                         std::uint64_t seed = 0, int quadrature_nodes = 401);

// λ = 1/(2εN): the L-MAP weight that matches the jittered FS objective to first order.
double lmap_lambda_for_jitter(double eps, int n);

double ps_map_objective(const ParamVector& theta, const DifferentiableModel& model, const Dataset& data,
                        const Prior& prior, const Likelihood& likelihood);

struct HalfLogDet {
  double value = 0.0;  // ½ log det(𝓙 + εI)
  ParamVector gradient;
};

// ½ log det(𝓙 + εI) for FsMapExact or FsMapMc; `seed` selects the MC evaluation points.
HalfLogDet fs_half_logdet(const ParamVector& theta, const DifferentiableModel& model, const Dataset& data,
                          const ObjectiveSpec& spec, std::uint64_t seed, bool want_gradient);

double fs_map_objective(const ParamVector& theta, const DifferentiableModel& model, const Dataset& data,
                        const ObjectiveSpec& spec, std::uint64_t seed = 0);

struct LaplacianEstimate {
  double value = 0.0;  // R(θ; β) = (1/β²) d(θ, θ + ψ), one ψ ~ N(0, β²I)
  ParamVector gradient;
};

LaplacianEstimate lmap_regularizer(const DifferentiableModel& model, const ParamVector& theta,
                                   const EvalDistribution& p_x, double beta, int samples, std::uint64_t seed,
                                   bool want_gradient = false, const Dataset* train = nullptr);

double lmap_loss(const ParamVector& theta, const DifferentiableModel& model, const Dataset& data,
                 const ObjectiveSpec& spec, std::uint64_t seed = 0);

struct LossEvaluation {
  double loss = 0.0;        // quantity minimized by training
  ParamVector gradient;     // its gradient (empty when not requested)
  double diagnostic = 0.0;  // ½ log det(𝓙+εI) for FS, R(θ;β) for L-MAP, NaN for PS
};

// Training loss: -objective for PS and FS, lmap_loss for L-MAP.
LossEvaluation evaluate_loss(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                             const ParamVector& theta, std::uint64_t seed, bool want_gradient);

}  // namespace fsmap
