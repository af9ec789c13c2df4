#include <cmath>
#include <functional>

#include "fsmap/errors.hpp"
#include "fsmap/experiments.hpp"
#include "fsmap/linalg.hpp"
#include "fsmap/rng.hpp"

namespace fsmap {

namespace {

CheckResult below(std::string name, double observed, double tol) {
  return {std::move(name), std::isfinite(observed) && observed < tol, observed, tol};
}
CheckResult above(std::string name, double observed, double tol) {
  return {std::move(name), std::isfinite(observed) && observed > tol, observed, tol};
}

double rel_err(const ParamVector& a, const ParamVector& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-12);
}

ParamVector random_theta(Eigen::Index p, double scale, std::uint64_t seed) {
  Rng rng(seed, 42);
  ParamVector t(p);
  for (Eigen::Index i = 0; i < p; ++i) t(i) = scale * rng.normal();
  return t;
}

// Max over trials of the relative error between analytic and central-difference gradients.
double gradient_error(const ObjectiveSpec& spec, const DifferentiableModel& model, const Dataset& data,
                      const std::function<ParamVector(int)>& theta_at, int trials, double h = 1e-6) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ParamVector theta = theta_at(t);
    const std::uint64_t seed = 1000 + t;
    const ParamVector g = objective_gradient(spec, model, data, theta, seed);
    const ParamVector fd = finite_difference_gradient(
        [&](const ParamVector& th) { return training_loss(spec, model, data, th, seed); }, theta, h);
    worst = std::max(worst, rel_err(g, fd));
  }
  return worst;
}

double jacobian_error(const DifferentiableModel& model, const std::function<ParamVector(int)>& theta_at,
                      const Matrix& xs, int trials) {
  double worst = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ParamVector theta = theta_at(t);
    const Matrix j = model.jacobian(theta, xs);
    Matrix fd(j.rows(), j.cols());
    ParamVector th = theta;
    const double h = 1e-5;
    for (Eigen::Index p = 0; p < theta.size(); ++p) {
      th(p) = theta(p) + h;
      const Matrix up = model.eval(th, xs);
      th(p) = theta(p) - h;
      const Matrix down = model.eval(th, xs);
      th(p) = theta(p);
      const Matrix col = (up - down).transpose() / (2.0 * h);
      fd.col(p) = Eigen::Map<const Vector>(col.data(), col.size());
    }
    worst = std::max(worst, (j - fd).norm() / std::max(fd.norm(), 1e-12));
  }
  return worst;
}

Dataset small_fourier_data(const FourierLink& model, std::uint64_t seed, int n) {
  return sample_fourier_dataset(seed, n, 1.0, 0.1, model).data;
}

std::vector<CheckResult> gradients_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const FourierLink fourier(100, Link::Tanh);
  const Dataset fdata = small_fourier_data(fourier, seed, 40);
  const auto fourier_theta = [&](int t) { return random_theta(200, 1.0, seed + t); };
  const Mlp mlp({2, 8, 8, 2}, Activation::Tanh);
  const Dataset moons = make_two_moons(seed, 20, 0.2);
  const auto mlp_theta = [&](int t) { return mlp.init(seed + 7 + t); };
  const GaussianBumps bumps;
  const Dataset bdata = make_bumps_dataset(bumps, seed, 20, 1.0, 0.0, 0.1);
  const auto bumps_theta = [&](int t) { return random_theta(2, 0.5, seed + 3 + t); };

  out.push_back(below("jacobian_fd_fourier", jacobian_error(fourier, fourier_theta, fdata.inputs.topRows(5), 3), 1e-5));
  out.push_back(below("jacobian_fd_bumps", jacobian_error(bumps, bumps_theta, bdata.inputs, 10), 1e-5));
  out.push_back(below("jacobian_fd_mlp", jacobian_error(mlp, mlp_theta, moons.inputs, 10), 1e-5));

  const ObjectiveSpec ps{PsMap{}, GaussianPrior{0.0, 10.0}, GaussianNoise{0.1}};
  out.push_back(below("gradient_fd_ps_fourier", gradient_error(ps, fourier, fdata, fourier_theta, 10), 1e-4));
  ObjectiveSpec fs = ps;
  fs.kind = make_fs_exact(fourier, UniformDist{-1.0, 1.0, 1}, 0.0);
  out.push_back(below("gradient_fd_fs_exact_fourier", gradient_error(fs, fourier, fdata, fourier_theta, 10), 1e-4));
  fs.kind = make_fs_exact(fourier, parse_fourier_eval_dist("dirac:50"), 1e-6);
  out.push_back(below("gradient_fd_fs_exact_jittered_fourier", gradient_error(fs, fourier, fdata, fourier_theta, 10), 1e-4));
  fs.kind = FsMapMc{UniformDist{-1.0, 1.0, 1}, 50, 1e-3};
  out.push_back(below("gradient_fd_fs_mc_fourier", gradient_error(fs, fourier, fdata, fourier_theta, 10), 1e-4));
  const ObjectiveSpec bfs{make_fs_exact(bumps, UniformDist{0.0, 1.0, 1}, 0.0, 0, 201), GaussianPrior{0.0, 1.2},
                          GaussianNoise{0.1}};
  out.push_back(below("gradient_fd_fs_exact_bumps", gradient_error(bfs, bumps, bdata, bumps_theta, 10), 1e-4));

  const DiracSet grid{square_grid(10, 5.0)};
  const ObjectiveSpec mps{PsMap{}, GaussianPrior{0.0, 1.0}, CategoricalSoftmax{2}};
  out.push_back(below("gradient_fd_ps_mlp", gradient_error(mps, mlp, moons, mlp_theta, 10), 1e-4));
  ObjectiveSpec mfs = mps;
  mfs.kind = FsMapMc{grid, 20, 1e-2};
  out.push_back(below("gradient_fd_fs_mc_mlp", gradient_error(mfs, mlp, moons, mlp_theta, 10), 1e-4));
  ObjectiveSpec mfe = mps;
  mfe.kind = make_fs_exact(mlp, grid, 1e-2);
  out.push_back(below("gradient_fd_fs_exact_mlp", gradient_error(mfe, mlp, moons, mlp_theta, 5), 1e-4));
  ObjectiveSpec ml = mps;
  ml.kind = LMap{grid, 0.5, 1e-3, 30};
  out.push_back(below("gradient_fd_lmap_mlp", gradient_error(ml, mlp, moons, mlp_theta, 10), 1e-4));
  ObjectiveSpec fl = ps;
  fl.kind = LMap{UniformDist{-1.0, 1.0, 1}, 0.01, 1e-3, 30};
  out.push_back(below("gradient_fd_lmap_fourier", gradient_error(fl, fourier, fdata, fourier_theta, 10), 1e-4));

  // Identity link: the FS log-det term is constant, so both gradients coincide.
  const FourierLink ident(100, Link::Identity);
  ObjectiveSpec ifs = ps;
  ifs.kind = make_fs_exact(ident, UniformDist{-1.0, 1.0, 1}, 0.0);
  const ParamVector th = random_theta(200, 1.0, seed + 99);
  out.push_back(below("identity_link_fs_gradient_equals_ps",
                      (objective_gradient(ifs, ident, fdata, th) - objective_gradient(ps, ident, fdata, th)).norm(),
                      1e-300));
  ObjectiveSpec l0 = ps;
  l0.kind = LMap{UniformDist{-1.0, 1.0, 1}, 0.0, 1e-3, 10};
  const double n = static_cast<double>(fdata.size());
  out.push_back(below("lmap_lambda0_gradient_equals_ps",
                      rel_err(objective_gradient(l0, fourier, fdata, th), objective_gradient(ps, fourier, fdata, th) / n),
                      1e-12));
  return out;
}

std::vector<CheckResult> invariance_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const EvalDistribution uni = UniformDist{-1.0, 1.0, 1};
  const FourierLink tanh_model(100, Link::Tanh);
  const Dataset data = small_fourier_data(tanh_model, seed, 40);
  const GaussianPrior base{0.0, 1.0};
  const Likelihood lik = GaussianNoise{0.1};

  const auto invariance = [&](const FourierLink& model, Transform t, double scale, const std::string& name) {
    const Reparameterization rep = reparameterize(model, t);
    const ObjectiveSpec orig{make_fs_exact(model, uni, 0.0), base, lik};
    const ObjectiveSpec moved{make_fs_exact(rep.model, uni, 0.0), Prior(base, t), lik};
    double worst = 0.0, fworst = 0.0;
    const Matrix xs = Vector::LinSpaced(100, -1.0, 1.0);
    for (int k = 0; k < 10; ++k) {
      ParamVector theta = random_theta(model.param_count(), scale, seed + 50 + k);
      if (t == Transform::Inverse) theta = theta.unaryExpr([](double v) { return v + (v >= 0 ? 0.5 : -0.5); });
      const ParamVector tp = rep.forward(theta);
      const double a = fs_map_objective(theta, model, data, orig);
      const double b = fs_map_objective(tp, rep.model, data, moved);
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(a)));
      fworst = std::max(fworst, (model.eval(theta, xs) - rep.model.eval(tp, xs)).cwiseAbs().maxCoeff());
    }
    out.push_back(below("fs_reparam_invariance_" + name, worst, 1e-8));
    out.push_back(below("reparam_function_equality_" + name, fworst, 1e-12));
  };
  invariance(tanh_model, Transform::Tanh, 1.0, "tanh");
  invariance(FourierLink(100, Link::Identity), Transform::Inverse, 1.0, "inverse");

  // Identity link: FS - PS is constant in θ, and both objectives share their argmin.
  const FourierLink small(10, Link::Identity);
  const Dataset sdata = small_fourier_data(small, seed + 1, 30);
  const ObjectiveSpec ps{PsMap{}, base, lik};
  const ObjectiveSpec fs{make_fs_exact(small, uni, 0.0), base, lik};
  const ParamVector t1 = random_theta(20, 1.0, seed + 61), t2 = random_theta(20, 1.0, seed + 62);
  const double d1 = fs_map_objective(t1, small, sdata, fs) - ps_map_objective(t1, small, sdata, base, lik);
  const double d2 = fs_map_objective(t2, small, sdata, fs) - ps_map_objective(t2, small, sdata, base, lik);
  out.push_back(below("identity_link_fs_minus_ps_constant", std::abs(d1 - d2), 1e-10));
  TrainConfig tc;
  tc.lr = 0.01;
  tc.steps = 3000;
  const ParamVector init = ParamVector::Zero(20);
  const ParamVector a = train(ps, small, sdata, init, tc).theta;
  const ParamVector b = train(fs, small, sdata, init, tc).theta;
  out.push_back(below("identity_link_fs_ps_argmin", (a - b).norm(), 1e-4));
  return out;
}

std::vector<CheckResult> estimators_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const Mlp mlp({2, 8, 8, 2}, Activation::Tanh);
  const ParamVector mt = mlp.init(seed + 5);
  const GramEstimate ge = gram_mc(mlp, mt, IsotropicGaussianDist{2}, 30, seed);
  const Matrix& g = ge.gram.entries;
  out.push_back(below("gram_symmetry", (g - g.transpose()).cwiseAbs().maxCoeff(), 1e-12));
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  out.push_back(above("gram_psd_min_eigenvalue", es.eigenvalues().minCoeff(), -1e-10));

  // Unbiasedness: mean of 200 independent S=50 estimates against the closed form.
  const FourierLink small(2, Link::Tanh);
  const EvalDistribution uni = UniformDist{-1.0, 1.0, 1};
  const ParamVector st = random_theta(4, 0.7, seed + 8);
  const Matrix exact = gram_exact_fourier(st, small, phi_matrix(small, uni)).entries;
  Matrix sum = Matrix::Zero(4, 4), sumsq = Matrix::Zero(4, 4);
  const int reps = 200;
  for (int r = 0; r < reps; ++r) {
    const Matrix e = gram_mc(small, st, uni, 50, derive_seed(seed, 300 + r)).gram.entries;
    sum += e;
    sumsq += e.cwiseAbs2();
  }
  const Matrix mean = sum / reps;
  const Matrix var = (sumsq / reps - mean.cwiseAbs2()) * (static_cast<double>(reps) / (reps - 1));
  double zmax = 0.0;
  for (int i = 0; i < 4; ++i)
    for (int j = i; j < 4; ++j) {
      const double se = std::sqrt(var(i, j) / reps);
      zmax = std::max(zmax, std::abs(mean(i, j) - exact(i, j)) / se);
    }
  out.push_back(below("mc_gram_unbiased_max_z", zmax, 3.0));

  const Matrix j = ge.stacked;
  double prev = -std::numeric_limits<double>::infinity();
  double min_step = std::numeric_limits<double>::infinity();
  for (double eps : {1e-8, 1e-6, 1e-4, 1e-2, 1.0}) {
    const double v = logdet_jittered_stacked(j, 1.0 / 30, eps);
    min_step = std::min(min_step, v - prev);
    prev = v;
  }
  out.push_back(above("logdet_monotone_in_jitter", min_step, 0.0));

  const double svd_route = logdet_jittered_stacked(j, 1.0 / 30, 1e-4);
  const double fast_route = logdet_jittered_fast(j, 1.0 / 30, 1e-4, false).value;
  out.push_back(below("logdet_svd_vs_cholesky", std::abs(svd_route - fast_route) / std::abs(svd_route), 1e-8));

  const Mlp linear({1, 1}, Activation::Tanh, false);
  const DiracSet one{Matrix::Ones(1, 1)};
  // For f = θx, d(θ, θ+ψ) = ψ² x², so R = ψ²/β²; its mean over ψ is Tr 𝓙 = 1.
  double mean_r = 0.0;
  for (int d = 0; d < 20000; ++d)
    mean_r += lmap_regularizer(linear, ParamVector::Constant(1, 2.0), one, 0.3, 1, derive_seed(seed, 9000 + d)).value;
  mean_r /= 20000;
  out.push_back(below("lmap_linear_model_trace", std::abs(mean_r - 1.0), 3.0 * std::sqrt(2.0 / 20000)));
  return out;
}

std::vector<CheckResult> singularity_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const double pi = 3.14159265358979323846;
  const FourierLink dup({pi, 2 * pi, 2 * pi}, Link::Tanh);
  const Matrix phi = phi_matrix(dup, UniformDist{-1.0, 1.0, 1});
  const Matrix g = gram_exact_fourier(random_theta(6, 1.0, seed + 1), dup, phi).entries;
  Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
  out.push_back(below("duplicated_basis_min_eigenvalue", std::abs(es.eigenvalues().minCoeff()), 1e-10));

  bool raised = false;
  try {
    logdet_jittered_gram(g, 0.0);
  } catch (const SingularityError& e) {
    raised = e.null_directions() >= 1;
  }
  out.push_back({"singular_gram_zero_jitter_rejected", raised, raised ? 1.0 : 0.0, 1.0});

  const Mlp net({1, 2, 1}, Activation::Tanh, false);
  const Matrix xs = Vector::LinSpaced(50, -2.0, 2.0);
  ParamVector sym(4);
  sym << 0.7, 0.7, -1.3, -1.3;
  out.push_back(below("symmetric_mlp_min_singular", min_singular_value(net.jacobian(sym, xs)).min_singular_value, 1e-8));
  out.push_back(above("symmetric_mlp_null_directions", null_direction_count(net.jacobian(sym, xs)), 1.0));
  int generic_nulls = 0;
  for (int s = 0; s < 10; ++s) generic_nulls += null_direction_count(net.jacobian(net.init(seed + 200 + s), xs));
  out.push_back(below("generic_mlp_null_directions", generic_nulls, 0.5));
  return out;
}

std::vector<CheckResult> optimizer_suite(std::uint64_t) {
  std::vector<CheckResult> out;
  // Hand recurrence for f(θ) = ½(θ - 3)², θ₀ = 0, lr = 0.1.
  double theta = 0.0, m = 0.0, v = 0.0;
  const double b1 = 0.9, b2 = 0.999, lr = 0.1, eps = 1e-8;
  ParamVector th = ParamVector::Zero(1);
  AdamState state = AdamState::zeros(1);
  double worst = 0.0;
  for (int t = 1; t <= 3; ++t) {
    const double g = theta - 3.0;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mh = m / (1 - std::pow(b1, t)), vh = v / (1 - std::pow(b2, t));
    theta -= lr * mh / (std::sqrt(vh) + eps);
    auto step = adam_step(state, ParamVector::Constant(1, th(0) - 3.0), lr);
    state = step.state;
    th += step.update;
    worst = std::max(worst, std::abs(th(0) - theta));
  }
  out.push_back(below("adam_three_step_oracle", worst, 1e-12));

  // f = θx with Gaussian noise and prior: a quadratic with a closed-form minimum.
  const Mlp linear({1, 1}, Activation::Tanh, false);
  Matrix xs(3, 1), ys(3, 1);
  xs << 0.5, -1.0, 2.0;
  ys << 0.4, -0.9, 2.2;
  const Dataset data = Dataset::regression(xs, ys);
  const double sigma = 0.5, alpha = 2.0;
  const double exact = (xs.col(0).dot(ys.col(0)) / (sigma * sigma)) /
                       (xs.col(0).squaredNorm() / (sigma * sigma) + 1.0 / (alpha * alpha));
  const ObjectiveSpec spec{PsMap{}, GaussianPrior{0.0, alpha}, GaussianNoise{sigma}};
  TrainConfig tc;
  tc.lr = 0.05;
  tc.steps = 2000;
  ParamVector sol = train(spec, linear, data, ParamVector::Zero(1), tc).theta;
  tc.lr = 1e-5;
  sol = train(spec, linear, data, sol, tc).theta;
  out.push_back(below("quadratic_training_minimum", std::abs(sol(0) - exact), 1e-6));
  return out;
}

std::vector<CheckResult> reproducibility_suite(std::uint64_t seed) {
  std::vector<CheckResult> out;
  const auto same = [&](const std::string& name, const std::function<std::string()>& make) {
    const std::string a = make(), b = make();
    out.push_back({name, a == b && !a.empty(), a == b ? 0.0 : 1.0, 0.0});
  };
  same("rerun_identical_fourier_csv", [&] {
    FourierRunConfig c;
    c.seed = seed;
    c.n_train = 25;
    c.steps = 50;
    std::vector<FourierRunResult> r{run_fourier(c)};
    c.objective = "ps";
    r.push_back(run_fourier(c));
    return fourier_rows_csv(r).str();
  });
  same("rerun_identical_bumps_csv", [&] {
    BumpsConfig c;
    c.seed = seed;
    c.alphas = {1.2};
    c.seeds = 1;
    c.grid_points = 41;
    c.quadrature_nodes = 101;
    c.steps = 50;
    const auto reps = run_bumps(c);
    return bumps_distance_csv(reps).str() + posterior_grid_csv(reps.front().grid).str();
  });
  same("rerun_identical_two_moons_csv", [&] {
    TwoMoonsConfig c;
    c.seed = seed;
    c.steps = 40;
    c.trace_every = 20;
    c.surface_points = 11;
    std::string s;
    for (const std::string mode : {"fs", "lmap"}) s += decision_surface_csv(c, run_two_moons(c, mode, 0.1)).str();
    return s;
  });
  same("rerun_identical_logdet_csv", [&] {
    LogdetConfig c;
    c.seed = seed;
    c.draws = 2;
    c.grid_side = 10;
    c.samples = {40};
    const auto d = run_logdet_accuracy(c);
    return logdet_scatter_csv(c, d).str() + laplacian_scan_csv(c, d).str();
  });
  return out;
}

}  // namespace

std::vector<std::string> check_suite_names() {
  return {"gradients", "invariance", "estimators", "singularity", "optimizer", "reproducibility"};
}

std::vector<CheckResult> run_check_suite(const std::string& suite, std::uint64_t seed) {
  if (suite == "all") {
    std::vector<CheckResult> all;
    for (const auto& s : check_suite_names()) {
      auto part = run_check_suite(s, seed);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  if (suite == "gradients") return gradients_suite(seed);
  if (suite == "invariance") return invariance_suite(seed);
  if (suite == "estimators") return estimators_suite(seed);
  if (suite == "singularity") return singularity_suite(seed);
  if (suite == "optimizer") return optimizer_suite(seed);
  if (suite == "reproducibility") return reproducibility_suite(seed);
  throw std::invalid_argument("unknown check suite '" + suite + "'");
}

}  // namespace fsmap
