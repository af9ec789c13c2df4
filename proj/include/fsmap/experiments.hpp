#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "fsmap/analysis.hpp"
#include "fsmap/csv.hpp"
#include "fsmap/optimize.hpp"

namespace fsmap {

// ---------------------------------------------------------------- Fourier

struct FourierRunConfig {
  std::uint64_t seed = 0;
  int n_train = 400;
  std::string objective = "fs";  // ps | fs
  Link link = Link::Tanh;
  double sigma_ratio = 1.0;  // model noise σ relative to the generating σ*
  std::string eval_dist = "uniform";  // uniform | narrow | dirac:M
  double alpha = 10.0;
  double sigma_star = 0.1;
  int n_test = 1000;
  double lr = 0.1;
  long steps = 2500;
  double init_std = 0.1;
  double jitter = 1e-6;  // used for every p_X except U(-1,1)
  int num_frequencies = 100;
};

struct FourierRunResult {
  FourierRunConfig config;
  ParamVector theta;
  double log_fs_posterior = 0.0;  // FS objective with p_X = U(-1,1), no jitter
  double mean_gn_eigenvalue = 0.0;
  double test_rmse = 0.0;   // against the noise-free generating function
  double train_rmse = 0.0;  // against the noisy training targets
  TrainResult train;
};

// "uniform" -> U(-1,1); "narrow" -> U(-0.1,0.1); "dirac:M" -> M equidistant points on [-1,1].
EvalDistribution parse_fourier_eval_dist(const std::string& name);
FourierRunResult run_fourier(const FourierRunConfig& config);

CsvTable fourier_rows_csv(const std::vector<FourierRunResult>& runs);

// ------------------------------------------------------------------ Bumps

struct BumpsConfig {
  std::vector<double> alphas{1.2, 10.0, 20.0};
  int seeds = 5;
  std::uint64_t seed = 0;
  int n = 20;
  double sigma = 0.1;
  double h_left = 1.0;
  double h_right = 0.0;
  int grid_points = 401;
  int quadrature_nodes = 401;
  double lr = 0.01;
  long steps = 3000;
  int curve_points = 201;
  BumpsGeometry geometry;
};

struct BumpsReplicate {
  double alpha = 0.0;
  int replicate = 0;
  ParamVector ps_theta;
  ParamVector fs_theta;
  double dist_ps = 0.0;  // L2(p_X) distance between PS-MAP function and BMA
  double dist_fs = 0.0;
  double normalization_residual = 0.0;
  bool boundary_warning = false;
  // Populated for replicate 0 only.
  PosteriorGrid grid;
  Matrix curves;  // columns x, f_ps, f_fs, f_bma
};

Dataset make_bumps_dataset(const GaussianBumps& model, std::uint64_t seed, int n, double h_left, double h_right,
                           double sigma);
std::vector<BumpsReplicate> run_bumps(const BumpsConfig& config, bool keep_first_grid = true);
CsvTable bumps_distance_csv(const std::vector<BumpsReplicate>& reps);
CsvTable bumps_curve_csv(const BumpsReplicate& rep);

// ----------------------------------------------------------- Log-det accuracy

struct LogdetConfig {
  std::uint64_t seed = 0;
  int draws = 200;
  std::vector<int> samples{800, 400, 200};
  double epsilon = 1e-12;
  double scale_lo = 0.1;
  double scale_hi = 10.0;
  std::vector<double> scan_epsilons{1e-3, 1.0, 10.0, 1e3};
  int psi_draws = 10;
  double beta = 1e-3;
  int grid_side = 40;
  double grid_half_width = 5.0;
  std::vector<int> widths{2, 16, 16, 16, 16, 2};
  bool scan = true;
};

struct LogdetDraw {
  int draw = 0;
  double scale = 1.0;
  double exact = 0.0;
  std::vector<double> estimates;  // one per entry of `samples`
  double trace = 0.0;             // Tr 𝓙 on the full grid
  double laplacian = 0.0;         // mean R(θ; β) over psi draws
  std::vector<double> shifted_logdet;  // logdet(𝓙+εI) - P log ε per scan ε
};

struct LogdetSummary {
  std::vector<double> correlation;            // per entry of `samples`
  std::vector<double> underestimate_fraction;  // estimate <= exact
};

// Points of a side×side grid on [-w, w]².
Matrix square_grid(int side, double half_width);
std::vector<LogdetDraw> run_logdet_accuracy(const LogdetConfig& config);
LogdetSummary summarize_logdet(const LogdetConfig& config, const std::vector<LogdetDraw>& draws);
CsvTable logdet_scatter_csv(const LogdetConfig& config, const std::vector<LogdetDraw>& draws);
CsvTable laplacian_scan_csv(const LogdetConfig& config, const std::vector<LogdetDraw>& draws);

// -------------------------------------------------------------- Two moons

struct TwoMoonsConfig {
  std::uint64_t seed = 0;
  int n = 200;
  double noise = 0.2;
  double lr = 1e-3;
  long steps = 10000;
  double prior_std = 1.0;
  int fs_samples = 200;
  int lmap_samples = 400;
  double beta = 1e-3;
  long trace_every = 100;
  int surface_points = 101;
  double surface_half_width = 5.0;
  int grid_side = 40;
  double grid_half_width = 5.0;
  std::vector<int> widths{2, 16, 16, 2};
};

struct TwoMoonsRun {
  std::string mode;  // ps | fs | lmap
  double epsilon = std::numeric_limits<double>::quiet_NaN();
  ParamVector theta;
  std::vector<long> trace_steps;
  std::vector<double> eigen_sums;  // Tr 𝓙(θ; p_X) on the evaluation grid
  double final_eigen_sum = 0.0;
  double train_accuracy = 0.0;
  bool divergent = false;
};

TwoMoonsRun run_two_moons(const TwoMoonsConfig& config, const std::string& mode, double epsilon);
// One row per grid point: x_0, x_1, p_class1.
CsvTable decision_surface_csv(const TwoMoonsConfig& config, const TwoMoonsRun& run);

// -------------------------------------------- Reparameterization demonstration

struct ReparamDemoConfig {
  std::uint64_t seed = 0;
  int num_frequencies = 10;
  int n = 50;
  double alpha = 1.0;
  double sigma_star = 0.1;
  double prior_std = 1.0;
  double lr = 0.01;
  long steps = 4000;
  double polish_lr = 1e-4;
  long polish_steps = 2000;
  double init_perturbation = 0.2;
  int n_test = 1000;
};

struct ReparamDemoResult {
  ParamVector ps_theta, ps_theta_prime, fs_theta, fs_theta_prime;
  double ps_function_rmse = 0.0;  // original vs inverse parameterization
  double fs_function_rmse = 0.0;
};

ReparamDemoResult run_reparam_demo(const ReparamDemoConfig& config);

// ----------------------------------------------------------------- Checks

struct CheckResult {
  std::string name;
  bool pass = false;
  double observed = 0.0;
  double tolerance = 0.0;
};

// Suites: gradients, invariance, estimators, singularity, optimizer, reproducibility, all.
std::vector<std::string> check_suite_names();
std::vector<CheckResult> run_check_suite(const std::string& suite, std::uint64_t seed = 0);
CsvTable check_results_csv(const std::vector<CheckResult>& results);

}  // namespace fsmap
