// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fsmap/experiments.hpp"
#include "fsmap/linalg.hpp"
#include "fsmap/rng.hpp"

using namespace fsmap;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Stats {
  double mean = 0.0;
  double se = 0.0;
};

Stats stats(const std::vector<double>& v) {
  Stats s;
  for (double x : v) s.mean += x;
  s.mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - s.mean) * (x - s.mean);
  s.se = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size())) : 0.0;
  return s;
}

double pooled_se(const Stats& a, const Stats& b) { return std::sqrt(a.se * a.se + b.se * b.se); }

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

const char* verdict(bool b) { return b ? "pass" : "FAIL"; }

constexpr int kFourierSeeds = 3;

FourierRunResult fourier(std::uint64_t seed, int n, const std::string& objective, const std::string& eval_dist = "uniform",
                         double sigma_ratio = 1.0) {
  FourierRunConfig c;
  c.seed = seed;
  c.n_train = n;
  c.objective = objective;
  c.eval_dist = eval_dist;
  c.sigma_ratio = sigma_ratio;
  return run_fourier(c);
}

Outcome criterion1() {
  bool a = true, b = true, c = true, d = true;
  std::ostringstream det;
  for (int n : {25, 400}) {
    std::vector<double> margin, gn_ps, gn_fs, test_ps, test_fs, train_ps, train_fs;
    for (int s = 0; s < kFourierSeeds; ++s) {
      const auto ps = fourier(s, n, "ps"), fs = fourier(s, n, "fs");
      margin.push_back(fs.log_fs_posterior - ps.log_fs_posterior);
      gn_ps.push_back(ps.mean_gn_eigenvalue);
      gn_fs.push_back(fs.mean_gn_eigenvalue);
      test_ps.push_back(ps.test_rmse);
      test_fs.push_back(fs.test_rmse);
      train_ps.push_back(ps.train_rmse);
      train_fs.push_back(fs.train_rmse);
    }
    const double min_margin = *std::min_element(margin.begin(), margin.end());
    a = a && min_margin > 0;
    b = b && stats(gn_fs).mean < stats(gn_ps).mean;
    if (n == 400) c = stats(test_fs).mean <= stats(test_ps).mean;
    if (n <= 100) {
      const double tp = stats(train_ps).mean, tf = stats(train_fs).mean;
      d = d && tp < 0.03 && tf >= 0.07 && tf <= 0.15;
    }
    det << " n=" << n << ": min_logpost_margin=" << num(min_margin) << " gn_ps=" << num(stats(gn_ps).mean)
        << " gn_fs=" << num(stats(gn_fs).mean) << " test_ps=" << num(stats(test_ps).mean)
        << " test_fs=" << num(stats(test_fs).mean) << " train_ps=" << num(stats(train_ps).mean)
        << " train_fs=" << num(stats(train_fs).mean) << ";";
  }
  std::ostringstream head;
  head << "(a) " << verdict(a) << " (b) " << verdict(b) << " (c) " << verdict(c) << " (d) " << verdict(d) << ";";
  return {a && b && c && d, head.str() + det.str()};
}

Outcome criterion2() {
  std::map<int, Stats> by_m;
  for (int m : {50, 200, 400}) {
    std::vector<double> v;
    for (int s = 0; s < kFourierSeeds; ++s) v.push_back(fourier(s, 400, "fs", "dirac:" + std::to_string(m)).test_rmse);
    by_m[m] = stats(v);
  }
  const Stats &s50 = by_m[50], &s200 = by_m[200], &s400 = by_m[400];
  const bool saturated = std::abs(s200.mean - s400.mean) <= 2 * pooled_se(s200, s400);
  const bool better200 = s50.mean - s200.mean > 2 * pooled_se(s50, s200);
  const bool better400 = s50.mean - s400.mean > 2 * pooled_se(s50, s400);
  std::ostringstream det;
  det << "M=50 " << num(s50.mean) << "+-" << num(s50.se) << ", M=200 " << num(s200.mean) << "+-" << num(s200.se)
      << ", M=400 " << num(s400.mean) << "+-" << num(s400.se);
  return {saturated && better200 && better400, det.str()};
}

Outcome criterion3() {
  int ordered = 0;
  std::ostringstream det;
  for (int s = 0; s < kFourierSeeds; ++s) {
    const double narrow = fourier(s, 400, "fs", "narrow").test_rmse;
    const double wide = fourier(s, 400, "fs", "uniform").test_rmse;
    ordered += narrow >= wide;
    det << " seed " << s << ": narrow=" << num(narrow) << " uniform=" << num(wide) << ";";
  }
  return {ordered >= 2, std::to_string(ordered) + "/3 seeds ordered;" + det.str()};
}

Outcome criterion4() {
  std::map<double, std::pair<Stats, Stats>> res;
  for (double ratio : {10.0, 1.0 / 3.0}) {
    std::vector<double> ps, fs;
    for (int s = 0; s < kFourierSeeds; ++s) {
      ps.push_back(fourier(s, 400, "ps", "uniform", ratio).test_rmse);
      fs.push_back(fourier(s, 400, "fs", "uniform", ratio).test_rmse);
    }
    res[ratio] = {stats(ps), stats(fs)};
  }
  const auto& hi = res[10.0];
  const auto& lo = res[1.0 / 3.0];
  const bool a = hi.second.mean > hi.first.mean;
  const bool b = std::abs(lo.second.mean - lo.first.mean) < 0.05;
  std::ostringstream det;
  det << "ratio 10: ps=" << num(hi.first.mean) << " fs=" << num(hi.second.mean) << " (" << verdict(a)
      << "); ratio 1/3: ps=" << num(lo.first.mean) << " fs=" << num(lo.second.mean) << " (" << verdict(b) << ")";
  return {a && b, det.str()};
}

Outcome criterion5() {
  const BumpsConfig cfg;
  const auto reps = run_bumps(cfg, false);
  double worst_residual = 0.0;
  std::map<double, std::pair<double, double>> mean;
  for (const auto& r : reps) {
    worst_residual = std::max(worst_residual, r.normalization_residual);
    mean[r.alpha].first += r.dist_ps / cfg.seeds;
    mean[r.alpha].second += r.dist_fs / cfg.seeds;
  }
  const bool low = mean[1.2].first < mean[1.2].second;
  const bool high = mean[20.0].second < mean[20.0].first;
  std::ostringstream det;
  for (const auto& [alpha, d] : mean) det << "alpha=" << num(alpha) << ": ps=" << num(d.first) << " fs=" << num(d.second) << "; ";
  det << "max residual=" << num(worst_residual);
  return {low && high && worst_residual < 1e-6, det.str()};
}

Outcome criterion6() {
  LogdetConfig cfg;
  cfg.scan = false;
  const auto draws = run_logdet_accuracy(cfg);
  const auto summary = summarize_logdet(cfg, draws);
  double corr800 = NAN, under200 = NAN;
  for (std::size_t k = 0; k < cfg.samples.size(); ++k) {
    if (cfg.samples[k] == 800) corr800 = summary.correlation[k];
    if (cfg.samples[k] == 200) under200 = summary.underestimate_fraction[k];
  }
  std::ostringstream det;
  det << "P=" << Mlp(cfg.widths, Activation::Tanh).param_count() << " S=800 correlation=" << num(corr800)
      << " S=200 underestimate fraction=" << num(under200);
  return {corr800 > 0.99 && under200 > 0.95, det.str()};
}

Outcome criterion7() {
  const FourierLink model(100, Link::Tanh);
  const EvalDistribution p_x = UniformDist{-1.0, 1.0, 1};
  const Matrix phi = phi_matrix(model, p_x);
  const int thetas = 20, draws = 200, points = 1000;
  const double beta = 1e-3;
  double sum_rel = 0.0, max_rel = 0.0, worst_first_order = 0.0;
  int first_order_cases = 0;
  for (int t = 0; t < thetas; ++t) {
    Rng rng(derive_seed(7, t), 1);
    ParamVector theta(model.param_count());
    for (auto& v : theta) v = rng.normal();
    const Matrix gram = gram_exact_fourier(theta, model, phi).entries;
    const double trace = gram.trace();
    double estimate = 0.0;
    for (int d = 0; d < draws; ++d)
      estimate += lmap_regularizer(model, theta, p_x, beta, points, derive_seed(derive_seed(7, t), 1000 + d)).value;
    estimate /= draws;
    const double rel = std::abs(estimate - trace) / trace;
    sum_rel += rel;
    max_rel = std::max(max_rel, rel);
    const double mean_eig = trace / model.param_count();
    for (double eps : {1e-3, 1.0, 10.0, 1e3}) {
      if (mean_eig / eps >= 0.01) continue;
      const double shifted = logdet_jittered_gram(gram, eps) - model.param_count() * std::log(eps);
      worst_first_order = std::max(worst_first_order, std::abs(estimate / eps - shifted) / shifted);
      ++first_order_cases;
    }
  }
  const double mean_rel = sum_rel / thetas;
  std::ostringstream det;
  det << "trace rel. error mean=" << num(mean_rel) << " max=" << num(max_rel) << "; first-order worst rel. error="
      << num(worst_first_order) << " over " << first_order_cases << " (theta, eps) pairs";
  return {mean_rel < 1e-2 && first_order_cases > 0 && worst_first_order < 0.05, det.str()};
}

Outcome criterion8() {
  const TwoMoonsConfig cfg;
  const double ps = run_two_moons(cfg, "ps", NAN).final_eigen_sum;
  const double fs = run_two_moons(cfg, "fs", 1e-2).final_eigen_sum;
  std::vector<double> acc;
  double lmap_sum = NAN;
  for (double eps : {1e-2, 1e-1, 1.0, 10.0}) {
    const TwoMoonsRun r = run_two_moons(cfg, "lmap", eps);
    if (eps == 1e-2) lmap_sum = r.final_eigen_sum;
    acc.push_back(r.train_accuracy);
  }
  const bool reduced = fs < 0.1 * ps && lmap_sum < 0.1 * ps;
  const bool monotone = std::is_sorted(acc.begin(), acc.end());
  std::ostringstream det;
  det << "eigen sums ps=" << num(ps) << " fs=" << num(fs) << " lmap=" << num(lmap_sum) << " (" << verdict(reduced)
      << "); lmap accuracy by eps {1e-2,1e-1,1,10} = " << num(acc[0]) << "," << num(acc[1]) << "," << num(acc[2])
      << "," << num(acc[3]) << " (" << verdict(monotone) << ")";
  return {reduced && monotone, det.str()};
}

Outcome criterion9() {
  const auto results = run_check_suite("all", 0);
  std::ostringstream det;
  int failed = 0;
  for (const auto& r : results)
    if (!r.pass) {
      ++failed;
      det << " " << r.name << "=" << num(r.observed);
    }
  return {failed == 0, std::to_string(results.size() - failed) + "/" + std::to_string(results.size()) +
                           " properties pass" + (failed ? ";" + det.str() : "")};
}

Outcome criterion10() {
  const ReparamDemoResult r = run_reparam_demo(ReparamDemoConfig{});
  const double invariance_tol = 1e-8;
  std::ostringstream det;
  det << "PS function RMSE across parameterizations=" << num(r.ps_function_rmse)
      << " FS function RMSE=" << num(r.fs_function_rmse);
  return {r.ps_function_rmse > 10 * invariance_tol && r.fs_function_rmse < 1e-3, det.str()};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* title;
    double budget_s;  // runtime limit stated with the criterion; 0 when none
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "Fourier PS vs FS comparison", 600, criterion1},
      {2, "evaluation-point saturation", 600, criterion2},
      {3, "evaluation-distribution sensitivity", 0, criterion3},
      {4, "noise misspecification", 0, criterion4},
      {5, "BMA interpolation", 0, criterion5},
      {6, "log-det estimator accuracy", 300, criterion6},
      {7, "Laplacian surrogate", 0, criterion7},
      {8, "two-moons eigenvalue regularization", 900, criterion8},
      {9, "property suites", 0, criterion9},
      {10, "reparameterization demonstration", 0, criterion10},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool pass = o.pass;
    std::string timing = num(secs) + "s";
    if (c.budget_s > 0) {
      const bool in_budget = secs < c.budget_s;
      timing += in_budget ? " (within " : " (over ";
      timing += num(c.budget_s) + "s budget)";
      pass = pass && in_budget;
    }
    failures += !pass;
    std::printf("[%s] criterion %d: %s | %s | %s\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(),
                timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
