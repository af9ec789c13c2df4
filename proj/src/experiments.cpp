#include "fsmap/experiments.hpp"

#include <cmath>
#include <numeric>

#include "fsmap/config.hpp"
#include "fsmap/errors.hpp"
#include "fsmap/linalg.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {

namespace {

double rmse(const Matrix& a, const Matrix& b) { return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size())); }

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

// ---------------------------------------------------------------- Fourier

EvalDistribution parse_fourier_eval_dist(const std::string& name) {
  if (name == "uniform") return UniformDist{-1.0, 1.0, 1};
  if (name == "narrow") return UniformDist{-0.1, 0.1, 1};
  if (name.rfind("dirac:", 0) == 0) {
    const long m = parse_long("eval-dist", name.substr(6));
    if (m < 1) throw ConfigError("dirac:M needs M >= 1");
    Matrix pts(m, 1);
    pts.col(0) = m == 1 ? Vector(Vector::Zero(1)) : Vector(Vector::LinSpaced(m, -1.0, 1.0));
    return DiracSet{pts};
  }
  throw ConfigError("unknown eval-dist '" + name + "' (expected uniform, narrow or dirac:M)");
}

FourierRunResult run_fourier(const FourierRunConfig& cfg) {
  if (cfg.objective != "ps" && cfg.objective != "fs") throw ConfigError("objective must be ps or fs");
  const FourierLink model(cfg.num_frequencies, cfg.link);
  const FourierSample sample = sample_fourier_dataset(cfg.seed, cfg.n_train, cfg.alpha, cfg.sigma_star, model);
  const Dataset test = fourier_test_set(cfg.seed, cfg.n_test, sample.theta_true, model);

  ObjectiveSpec spec{PsMap{}, GaussianPrior{0.0, cfg.alpha}, GaussianNoise{cfg.sigma_ratio * cfg.sigma_star}};
  if (cfg.objective == "fs") {
    const EvalDistribution p_x = parse_fourier_eval_dist(cfg.eval_dist);
    const double jitter = cfg.eval_dist == "uniform" ? 0.0 : cfg.jitter;
    spec.kind = make_fs_exact(model, p_x, jitter, derive_seed(cfg.seed, 0x706869));
  }
  const ParamVector init = gaussian_init(model.param_count(), cfg.init_std, derive_seed(cfg.seed, 0x696e6974));
  TrainConfig tc;
  tc.lr = cfg.lr;
  tc.steps = cfg.steps;
  tc.seed = derive_seed(cfg.seed, 0x7472);

  FourierRunResult out;
  out.config = cfg;
  out.train = train(spec, model, sample.data, init, tc);
  out.theta = out.train.theta;

  ObjectiveSpec reference = spec;
  reference.kind = make_fs_exact(model, UniformDist{-1.0, 1.0, 1}, 0.0);
  out.log_fs_posterior = fs_map_objective(out.theta, model, sample.data, reference);
  out.mean_gn_eigenvalue = gn_hessian_eigs(model, out.theta, sample.data).mean_eigenvalue;
  out.test_rmse = rmse(model.eval(out.theta, test.inputs), test.targets);
  out.train_rmse = rmse(model.eval(out.theta, sample.data.inputs), sample.data.targets);
  return out;
}

CsvTable fourier_rows_csv(const std::vector<FourierRunResult>& runs) {
  CsvTable t({"seed", "n_train", "objective", "link", "eval_dist", "sigma_ratio", "log_fs_posterior",
              "mean_gn_eigenvalue", "test_rmse", "train_rmse", "divergent"});
  for (const auto& r : runs)
    t.add(static_cast<long>(r.config.seed), r.config.n_train, r.config.objective, link_name(r.config.link),
          r.config.objective == "ps" ? std::string("-") : r.config.eval_dist, r.config.sigma_ratio,
          r.log_fs_posterior, r.mean_gn_eigenvalue, r.test_rmse, r.train_rmse, r.train.divergent ? 1 : 0);
  return t;
}

// ------------------------------------------------------------------ Bumps

Dataset make_bumps_dataset(const GaussianBumps& model, std::uint64_t seed, int n, double h_left, double h_right,
                           double sigma) {
  Rng x_rng(seed, 1), noise_rng(seed, 2);
  const auto& g = model.geometry();
  Matrix xs(n, 1), ys(n, 1);
  for (int i = 0; i < n; ++i) {
    const double x = x_rng.uniform(g.domain_lo, g.domain_hi);
    xs(i, 0) = x;
    ys(i, 0) = h_left * model.bump(x, g.center_left) + h_right * model.bump(x, g.center_right) +
               sigma * noise_rng.normal();
  }
  return Dataset::regression(xs, ys);
}

namespace {

// θ_L axis centred on the least-squares log-height, ±10 of its linearized
// standard deviation; falls back to the prior range when the left bump is not
// resolved by the data.
GridAxis left_height_axis(const GaussianBumps& model, const Dataset& data, double sigma, const GridAxis& fallback) {
  Matrix phi(data.size(), 2);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    phi(i, 0) = model.bump(data.inputs(i, 0), model.geometry().center_left);
    phi(i, 1) = model.bump(data.inputs(i, 0), model.geometry().center_right);
  }
  const Matrix gram = phi.transpose() * phi;
  Eigen::LDLT<Matrix> ldlt(gram);
  if (ldlt.info() != Eigen::Success) return fallback;
  const Vector h = ldlt.solve(phi.transpose() * data.targets.col(0));
  const Matrix cov = sigma * sigma * ldlt.solve(Matrix::Identity(2, 2));
  const double sd_h = std::sqrt(std::max(cov(0, 0), 0.0));
  if (!(h(0) > 3.0 * sd_h) || !(sd_h > 0)) return fallback;
  const double center = std::log(h(0));
  const double sd = sd_h / h(0);
  return {center - 10.0 * sd, center + 10.0 * sd, fallback.points};
}

}  // namespace

std::vector<BumpsReplicate> run_bumps(const BumpsConfig& cfg, bool keep_first_grid) {
  const GaussianBumps model(cfg.geometry);
  const EvalDistribution p_x = UniformDist{cfg.geometry.domain_lo, cfg.geometry.domain_hi, 1};
  const EvalQuadrature l2 = make_quadrature(p_x, 401);
  Matrix curve_x(cfg.curve_points, 1);
  curve_x.col(0) = Vector::LinSpaced(cfg.curve_points, cfg.geometry.domain_lo, cfg.geometry.domain_hi);
  std::vector<BumpsReplicate> out;
  for (double alpha : cfg.alphas) {
    if (!(alpha > 0)) throw ConfigError("alpha must be positive");
    for (int rep = 0; rep < cfg.seeds; ++rep) {
      const Dataset data =
          make_bumps_dataset(model, derive_seed(cfg.seed, rep), cfg.n, cfg.h_left, cfg.h_right, cfg.sigma);
      const Prior prior = GaussianPrior{0.0, alpha};
      const Likelihood lik = GaussianNoise{cfg.sigma};
      GridSpec gs = default_grid(prior.base, 2, cfg.grid_points);
      gs.axes[0] = left_height_axis(model, data, cfg.sigma, gs.axes[0]);
      BumpsReplicate r;
      r.alpha = alpha;
      r.replicate = rep;
      PosteriorGrid grid = posterior_grid(model, data, prior, lik, p_x, gs, cfg.quadrature_nodes);
      r.normalization_residual = grid.normalization_residual;
      r.boundary_warning = grid.boundary_warning;

      TrainConfig tc;
      tc.lr = cfg.lr;
      tc.steps = cfg.steps;
      const ObjectiveSpec ps{PsMap{}, prior, lik};
      const ObjectiveSpec fs{make_fs_exact(model, p_x, 0.0, 0, cfg.quadrature_nodes), prior, lik};
      r.ps_theta = train(ps, model, data, grid_argmax(grid, grid.log_param_density), tc).theta;
      r.fs_theta = train(fs, model, data, grid_argmax(grid, grid.log_fs_density), tc).theta;

      const Matrix bma = bma_function(grid, model, l2.nodes);
      const auto dist = [&](const ParamVector& theta) {
        const Matrix d = model.eval(theta, l2.nodes) - bma;
        return std::sqrt(d.col(0).cwiseAbs2().dot(l2.weights));
      };
      r.dist_ps = dist(r.ps_theta);
      r.dist_fs = dist(r.fs_theta);
      if (rep == 0 && keep_first_grid) {
        r.curves.resize(cfg.curve_points, 4);
        r.curves.col(0) = curve_x.col(0);
        r.curves.col(1) = model.eval(r.ps_theta, curve_x).col(0);
        r.curves.col(2) = model.eval(r.fs_theta, curve_x).col(0);
        r.curves.col(3) = bma_function(grid, model, curve_x).col(0);
        r.grid = std::move(grid);
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

CsvTable bumps_distance_csv(const std::vector<BumpsReplicate>& reps) {
  CsvTable t({"alpha", "replicate", "dist_ps", "dist_fs", "ps_theta_L", "ps_theta_R", "fs_theta_L", "fs_theta_R",
              "normalization_residual", "boundary_warning"});
  for (const auto& r : reps)
    t.add(r.alpha, r.replicate, r.dist_ps, r.dist_fs, r.ps_theta(0), r.ps_theta(1), r.fs_theta(0), r.fs_theta(1),
          r.normalization_residual, r.boundary_warning ? 1 : 0);
  return t;
}

CsvTable bumps_curve_csv(const BumpsReplicate& rep) {
  CsvTable t({"x", "f_ps", "f_fs", "f_bma"});
  for (Eigen::Index i = 0; i < rep.curves.rows(); ++i)
    t.add(rep.curves(i, 0), rep.curves(i, 1), rep.curves(i, 2), rep.curves(i, 3));
  return t;
}

// ----------------------------------------------------------- Log-det accuracy

Matrix square_grid(int side, double half_width) {
  const Vector axis = Vector::LinSpaced(side, -half_width, half_width);
  Matrix pts(side * side, 2);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) {
      pts(i * side + j, 0) = axis(i);
      pts(i * side + j, 1) = axis(j);
    }
  return pts;
}

namespace {

Vector gram_eigenvalues(const Matrix& stacked, double scale) {
  const bool rows_smaller = stacked.rows() < stacked.cols();
  const Eigen::Index m = rows_smaller ? stacked.rows() : stacked.cols();
  Matrix g = Matrix::Zero(m, m);
  if (rows_smaller) {
    g.selfadjointView<Eigen::Lower>().rankUpdate(stacked, scale);
  } else {
    g.selfadjointView<Eigen::Lower>().rankUpdate(stacked.transpose(), scale);
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  Vector lam = Vector::Zero(stacked.cols());
  lam.head(m) = es.eigenvalues().cwiseMax(0.0);
  return lam;
}

double jittered_sum(const Vector& lam, double eps) { return (lam.array() + eps).log().sum(); }

}  // namespace

std::vector<LogdetDraw> run_logdet_accuracy(const LogdetConfig& cfg) {
  if (cfg.draws < 1) throw ConfigError("draws must be >= 1");
  if (!(cfg.epsilon > 0)) throw ConfigError("epsilon must be positive");
  if (!(cfg.scale_lo > 0) || !(cfg.scale_hi >= cfg.scale_lo)) throw ConfigError("invalid scale range");
  const Mlp net(cfg.widths, Activation::Tanh);
  const Matrix grid = square_grid(cfg.grid_side, cfg.grid_half_width);
  const DiracSet p_x{grid};
  const double m = static_cast<double>(grid.rows());
  const double p = static_cast<double>(net.param_count());
  std::vector<LogdetDraw> out;
  for (int d = 0; d < cfg.draws; ++d) {
    const std::uint64_t draw_seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(d));
    Rng rng(draw_seed, 1);
    LogdetDraw r;
    r.draw = d;
    r.scale = std::exp(std::log(cfg.scale_lo) + rng.uniform() * (std::log(cfg.scale_hi) - std::log(cfg.scale_lo)));
    const ParamVector theta = r.scale * net.init(derive_seed(draw_seed, 2));
    const Matrix j = net.jacobian(theta, grid);
    const Vector lam = gram_eigenvalues(j, 1.0 / m);
    r.exact = jittered_sum(lam, cfg.epsilon);
    r.trace = j.squaredNorm() / m;
    for (int s : cfg.samples) {
      const Matrix xs = eval_dist_sample(p_x, derive_seed(draw_seed, 100 + static_cast<std::uint64_t>(s)), s);
      r.estimates.push_back(jittered_sum(gram_eigenvalues(net.jacobian(theta, xs), 1.0 / s), cfg.epsilon));
    }
    if (cfg.scan) {
      const Matrix f0 = net.eval(theta, grid);
      double acc = 0.0;
      for (int k = 0; k < cfg.psi_draws; ++k) {
        Rng psi_rng(derive_seed(draw_seed, 1000 + static_cast<std::uint64_t>(k)), 3);
        ParamVector shifted = theta;
        for (Eigen::Index i = 0; i < shifted.size(); ++i) shifted(i) += cfg.beta * psi_rng.normal();
        acc += (f0 - net.eval(shifted, grid)).squaredNorm() / (m * cfg.beta * cfg.beta);
      }
      r.laplacian = acc / cfg.psi_draws;
      for (double eps : cfg.scan_epsilons) r.shifted_logdet.push_back(jittered_sum(lam, eps) - p * std::log(eps));
    }
    out.push_back(std::move(r));
  }
  return out;
}

LogdetSummary summarize_logdet(const LogdetConfig& cfg, const std::vector<LogdetDraw>& draws) {
  LogdetSummary s;
  std::vector<double> exact;
  for (const auto& d : draws) exact.push_back(d.exact);
  for (std::size_t k = 0; k < cfg.samples.size(); ++k) {
    std::vector<double> est;
    int under = 0;
    for (const auto& d : draws) {
      est.push_back(d.estimates[k]);
      if (d.estimates[k] <= d.exact) ++under;
    }
    s.correlation.push_back(pearson(exact, est));
    s.underestimate_fraction.push_back(static_cast<double>(under) / static_cast<double>(draws.size()));
  }
  return s;
}

CsvTable logdet_scatter_csv(const LogdetConfig& cfg, const std::vector<LogdetDraw>& draws) {
  std::vector<std::string> header{"draw", "scale", "exact"};
  for (int s : cfg.samples) header.push_back("estimate_s" + std::to_string(s));
  CsvTable t(header);
  for (const auto& d : draws) {
    std::vector<std::string> row{fmt(d.draw), fmt(d.scale), fmt(d.exact)};
    for (double e : d.estimates) row.push_back(fmt(e));
    t.add_row(std::move(row));
  }
  return t;
}

CsvTable laplacian_scan_csv(const LogdetConfig& cfg, const std::vector<LogdetDraw>& draws) {
  CsvTable t({"draw", "scale", "epsilon", "shifted_logdet", "first_order", "exact_first_order", "mean_eig_over_eps"});
  const double p = static_cast<double>(Mlp(cfg.widths, Activation::Tanh).param_count());
  for (const auto& d : draws)
    for (std::size_t k = 0; k < d.shifted_logdet.size(); ++k) {
      const double eps = cfg.scan_epsilons[k];
      t.add(d.draw, d.scale, eps, d.shifted_logdet[k], d.laplacian / eps, d.trace / eps, d.trace / p / eps);
    }
  return t;
}

// -------------------------------------------------------------- Two moons

TwoMoonsRun run_two_moons(const TwoMoonsConfig& cfg, const std::string& mode, double epsilon) {
  const Dataset data = make_two_moons(cfg.seed, cfg.n, cfg.noise);
  const Mlp net(cfg.widths, Activation::Tanh);
  const Matrix grid = square_grid(cfg.grid_side, cfg.grid_half_width);
  const DiracSet p_x{grid};
  ObjectiveSpec spec{PsMap{}, GaussianPrior{0.0, cfg.prior_std}, CategoricalSoftmax{net.output_dim()}};
  if (mode == "fs") {
    if (!(epsilon > 0)) throw ConfigError("fs mode needs epsilon > 0");
    spec.kind = FsMapMc{p_x, cfg.fs_samples, epsilon};
  } else if (mode == "lmap") {
    spec.kind = LMap{p_x, lmap_lambda_for_jitter(epsilon, cfg.n), cfg.beta, cfg.lmap_samples};
  } else if (mode != "ps") {
    throw ConfigError("mode must be ps, fs or lmap");
  }
  TwoMoonsRun run;
  run.mode = mode;
  if (mode != "ps") run.epsilon = epsilon;
  TrainConfig tc;
  tc.lr = cfg.lr;
  tc.steps = cfg.steps;
  tc.seed = derive_seed(cfg.seed, 0x7472);
  tc.callback_every = cfg.trace_every;
  const double m = static_cast<double>(grid.rows());
  tc.on_progress = [&](long step, const ParamVector& theta) {
    run.trace_steps.push_back(step);
    run.eigen_sums.push_back(net.jacobian(theta, grid).squaredNorm() / m);
  };
  const ParamVector init = net.init(derive_seed(cfg.seed, 0x6d6f6f6e));
  tc.on_progress(0, init);
  const TrainResult res = train(spec, net, data, init, tc);
  run.theta = res.theta;
  run.divergent = res.divergent;
  run.final_eigen_sum = run.eigen_sums.back();
  const Matrix logits = net.eval(run.theta, data.inputs);
  int correct = 0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index arg = 0;
    logits.row(i).maxCoeff(&arg);
    if (arg == data.labels[i]) ++correct;
  }
  run.train_accuracy = static_cast<double>(correct) / static_cast<double>(data.size());
  return run;
}

CsvTable decision_surface_csv(const TwoMoonsConfig& cfg, const TwoMoonsRun& run) {
  const Mlp net(cfg.widths, Activation::Tanh);
  const Matrix pts = square_grid(cfg.surface_points, cfg.surface_half_width);
  const Matrix logits = net.eval(run.theta, pts);
  CsvTable t({"x_0", "x_1", "p_class1"});
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp().matrix();
    t.add(pts(i, 0), pts(i, 1), e(1) / e.sum());
  }
  return t;
}

// -------------------------------------------- Reparameterization demonstration

ReparamDemoResult run_reparam_demo(const ReparamDemoConfig& cfg) {
  const FourierLink model(cfg.num_frequencies, Link::Identity);
  const Reparameterization inv = reparameterize(model, Transform::Inverse);
  const FourierSample sample = sample_fourier_dataset(cfg.seed, cfg.n, cfg.alpha, cfg.sigma_star, model);
  const Dataset test = fourier_test_set(cfg.seed, cfg.n_test, sample.theta_true, model);
  const GaussianPrior base{0.0, cfg.prior_std};
  const Likelihood lik = GaussianNoise{cfg.sigma_star};
  const EvalDistribution p_x = UniformDist{-1.0, 1.0, 1};

  const ObjectiveSpec ps{PsMap{}, base, lik};
  const ObjectiveSpec ps_prime{PsMap{}, Prior(base, Transform::Inverse), lik};
  const ObjectiveSpec fs{make_fs_exact(model, p_x, 0.0), base, lik};
  const ObjectiveSpec fs_prime{make_fs_exact(inv.model, p_x, 0.0), Prior(base, Transform::Inverse), lik};

  const auto fit = [&](const ObjectiveSpec& spec, const DifferentiableModel& m, const ParamVector& init) {
    TrainConfig tc;
    tc.lr = cfg.lr;
    tc.steps = cfg.steps;
    ParamVector theta = train(spec, m, sample.data, init, tc).theta;
    tc.lr = cfg.polish_lr;
    tc.steps = cfg.polish_steps;
    return train(spec, m, sample.data, theta, tc).theta;
  };
  // Each coordinate of θ' = 1/θ lives on a half-line, so θ' starts from the
  // reciprocal of the original solution with a sign-preserving perturbation.
  const auto perturbed_reciprocal = [&](const ParamVector& theta, std::uint64_t tag) {
    Rng rng(derive_seed(cfg.seed, tag), 9);
    ParamVector out(theta.size());
    for (Eigen::Index i = 0; i < theta.size(); ++i)
      out(i) = 1.0 / (theta(i) * rng.uniform(1.0 - cfg.init_perturbation, 1.0 + cfg.init_perturbation));
    return out;
  };

  ReparamDemoResult r;
  const ParamVector zero = ParamVector::Zero(model.param_count());
  r.ps_theta = fit(ps, model, zero);
  r.fs_theta = fit(fs, model, zero);
  r.ps_theta_prime = fit(ps_prime, inv.model, perturbed_reciprocal(r.ps_theta, 1));
  r.fs_theta_prime = fit(fs_prime, inv.model, perturbed_reciprocal(r.fs_theta, 2));
  r.ps_function_rmse = rmse(model.eval(r.ps_theta, test.inputs), inv.model.eval(r.ps_theta_prime, test.inputs));
  r.fs_function_rmse = rmse(model.eval(r.fs_theta, test.inputs), inv.model.eval(r.fs_theta_prime, test.inputs));
  return r;
}

CsvTable check_results_csv(const std::vector<CheckResult>& results) {
  CsvTable t({"name", "pass", "observed", "tolerance"});
  for (const auto& r : results) t.add(r.name, r.pass ? "true" : "false", r.observed, r.tolerance);
  return t;
}

}  // namespace fsmap
