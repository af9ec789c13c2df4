#include "fsmap/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>

#include "fsmap/config.hpp"
#include "fsmap/experiments.hpp"
#include "fsmap/svg.hpp"

namespace fsmap {

namespace {

namespace fs = std::filesystem;

struct Command {
  std::string name;
  std::string description;
  std::vector<ConfigKey> keys;
  std::function<int(const ResolvedConfig&, const fs::path&, std::ostream&)> run;
};

fs::path output_root(const ResolvedConfig& cfg) {
  const std::string flag = cfg.values("out-dir").empty() ? "" : cfg.values("out-dir").front();
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv("FSMAP_OUT_DIR"); env && *env) return env;
  return "results";
}

std::vector<int> to_ints(const std::vector<long>& v) { return {v.begin(), v.end()}; }

long positive(const ResolvedConfig& cfg, const std::string& key) {
  const long v = cfg.get_long(key);
  if (v < 1) throw ConfigError(key + " must be >= 1");
  return v;
}

double positive_real(const ResolvedConfig& cfg, const std::string& key) {
  const double v = cfg.get_double(key);
  if (!(v > 0)) throw ConfigError(key + " must be positive");
  return v;
}

void write_svg(const fs::path& path, const SvgPlot& plot) { write_file_atomic(path, plot.render()); }

// ---------------------------------------------------------- fourier-compare

int cmd_fourier(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  FourierRunConfig base;
  base.link = [&] {
    try {
      return parse_link(cfg.get("link"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }();
  base.alpha = positive_real(cfg, "alpha");
  base.sigma_star = positive_real(cfg, "sigma-star");
  base.n_test = static_cast<int>(positive(cfg, "n-test"));
  base.lr = positive_real(cfg, "lr");
  base.steps = positive(cfg, "steps");
  base.init_std = cfg.get_double("init-std");
  if (base.init_std < 0) throw ConfigError("init-std must be >= 0");
  base.jitter = positive_real(cfg, "jitter");
  base.num_frequencies = static_cast<int>(positive(cfg, "num-frequencies"));
  const long seeds = positive(cfg, "seeds");
  const std::uint64_t seed0 = cfg.get_u64("seed");
  const auto n_train = cfg.get_longs("n-train");
  for (long n : n_train)
    if (n < 1) throw ConfigError("n-train must be >= 1");
  for (const auto& o : cfg.values("objective"))
    if (o != "ps" && o != "fs") throw ConfigError("objective must be ps or fs");
  for (const auto& e : cfg.values("eval-dist")) parse_fourier_eval_dist(e);
  const auto ratios = cfg.get_doubles("sigma-ratio");
  for (double r : ratios)
    if (!(r > 0)) throw ConfigError("sigma-ratio must be positive");

  std::vector<FourierRunResult> runs;
  for (long s = 0; s < seeds; ++s)
    for (long n : n_train)
      for (double ratio : ratios)
        for (const auto& obj : cfg.values("objective")) {
          const std::vector<std::string> dists =
              obj == "ps" ? std::vector<std::string>{cfg.values("eval-dist").front()} : cfg.values("eval-dist");
          for (const auto& dist : dists) {
            FourierRunConfig c = base;
            c.seed = seed0 + static_cast<std::uint64_t>(s);
            c.n_train = static_cast<int>(n);
            c.sigma_ratio = ratio;
            c.objective = obj;
            c.eval_dist = dist;
            runs.push_back(run_fourier(c));
            out << "fourier-compare seed=" << c.seed << " n_train=" << n << " objective=" << obj
                << (obj == "fs" ? " eval_dist=" + dist : "") << " sigma_ratio=" << ratio
                << " test_rmse=" << fmt(runs.back().test_rmse) << "\n";
          }
        }
  const CsvTable table = fourier_rows_csv(runs);
  write_file_atomic(dir / "runs.csv", table.str());

  // Mean test RMSE against n_train, one series per (objective, eval_dist, sigma_ratio).
  std::map<std::string, std::map<int, std::pair<double, int>>> groups;
  for (const auto& r : runs) {
    const std::string key = r.config.objective + (r.config.objective == "fs" ? " " + r.config.eval_dist : "") +
                            " s/s*=" + fmt(r.config.sigma_ratio);
    auto& cell = groups[key][r.config.n_train];
    cell.first += r.test_rmse;
    cell.second += 1;
  }
  SvgPlot plot("Test RMSE", "n_train", "test RMSE");
  plot.set_log_x(true);
  for (const auto& [key, byn] : groups) {
    std::vector<double> xs, ys;
    for (const auto& [n, cell] : byn) {
      xs.push_back(n);
      ys.push_back(cell.first / cell.second);
    }
    plot.add_series(key, xs, ys, byn.size() > 1 ? SvgPlot::Style::Line : SvgPlot::Style::Scatter);
  }
  write_svg(dir / "test_rmse.svg", plot);
  return kExitOk;
}

// --------------------------------------------------------------- bumps-bma

int cmd_bumps(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  BumpsConfig c;
  c.alphas = cfg.get_doubles("alpha");
  for (double a : c.alphas)
    if (!(a > 0)) throw ConfigError("alpha must be positive");
  c.seeds = static_cast<int>(positive(cfg, "seeds"));
  c.seed = cfg.get_u64("seed");
  c.n = static_cast<int>(positive(cfg, "n"));
  c.sigma = positive_real(cfg, "sigma");
  c.h_left = cfg.get_double("h-left");
  c.h_right = cfg.get_double("h-right");
  c.grid_points = static_cast<int>(positive(cfg, "grid-points"));
  if (c.grid_points < 3) throw ConfigError("grid-points must be >= 3");
  c.quadrature_nodes = static_cast<int>(positive(cfg, "quadrature-nodes"));
  c.lr = positive_real(cfg, "lr");
  c.steps = positive(cfg, "steps");
  c.curve_points = static_cast<int>(positive(cfg, "curve-points"));
  c.geometry.center_left = cfg.get_double("center-left");
  c.geometry.center_right = cfg.get_double("center-right");
  c.geometry.width = positive_real(cfg, "width");
  c.geometry.domain_lo = cfg.get_double("domain-lo");
  c.geometry.domain_hi = cfg.get_double("domain-hi");
  if (!(c.geometry.domain_hi > c.geometry.domain_lo)) throw ConfigError("domain-hi must exceed domain-lo");

  const auto reps = run_bumps(c);
  write_file_atomic(dir / "distances.csv", bumps_distance_csv(reps).str());
  for (const auto& r : reps) {
    if (r.replicate != 0) continue;
    const std::string tag = "alpha" + fmt(r.alpha);
    write_file_atomic(dir / ("posterior_grid_" + tag + ".csv"), posterior_grid_csv(r.grid).str());
    const CsvTable curves = bumps_curve_csv(r);
    write_file_atomic(dir / ("functions_" + tag + ".csv"), curves.str());
    SvgPlot plot("Learned functions, alpha = " + fmt(r.alpha), "x", "f(x)");
    for (const std::string col : {"f_ps", "f_fs", "f_bma"}) plot.add_series(col, curves.column("x"), curves.column(col));
    write_svg(dir / ("functions_" + tag + ".svg"), plot);
  }
  for (double a : c.alphas) {
    double ps = 0, fsd = 0;
    int k = 0;
    for (const auto& r : reps)
      if (r.alpha == a) ps += r.dist_ps, fsd += r.dist_fs, ++k;
    out << "bumps-bma alpha=" << fmt(a) << " mean_dist_ps=" << fmt(ps / k) << " mean_dist_fs=" << fmt(fsd / k) << "\n";
  }
  return kExitOk;
}

// ---------------------------------------------------------- logdet-accuracy

int cmd_logdet(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  LogdetConfig c;
  c.seed = cfg.get_u64("seed");
  c.draws = static_cast<int>(positive(cfg, "draws"));
  c.samples = to_ints(cfg.get_longs("samples"));
  for (int s : c.samples)
    if (s < 1) throw ConfigError("samples must be >= 1");
  c.epsilon = positive_real(cfg, "epsilon");
  c.scale_lo = positive_real(cfg, "scale-lo");
  c.scale_hi = positive_real(cfg, "scale-hi");
  if (c.scale_hi < c.scale_lo) throw ConfigError("scale-hi must be >= scale-lo");
  c.scan_epsilons = cfg.get_doubles("scan-epsilon");
  for (double e : c.scan_epsilons)
    if (!(e > 0)) throw ConfigError("scan-epsilon must be positive");
  c.psi_draws = static_cast<int>(positive(cfg, "psi-draws"));
  c.beta = positive_real(cfg, "beta");
  c.grid_side = static_cast<int>(positive(cfg, "grid-side"));
  c.grid_half_width = positive_real(cfg, "grid-half-width");
  c.widths = to_ints(cfg.get_longs("widths"));
  if (c.widths.size() < 2 || c.widths.front() != 2) throw ConfigError("widths must start with input width 2");
  for (int w : c.widths)
    if (w < 1) throw ConfigError("widths must be positive");

  const auto draws = run_logdet_accuracy(c);
  const auto summary = summarize_logdet(c, draws);
  const CsvTable scatter = logdet_scatter_csv(c, draws);
  write_file_atomic(dir / "scatter.csv", scatter.str());
  const CsvTable scan = laplacian_scan_csv(c, draws);
  write_file_atomic(dir / "laplacian_scan.csv", scan.str());
  CsvTable sum({"samples", "pearson_correlation", "underestimate_fraction"});
  for (std::size_t k = 0; k < c.samples.size(); ++k) {
    sum.add(c.samples[k], summary.correlation[k], summary.underestimate_fraction[k]);
    out << "logdet-accuracy S=" << c.samples[k] << " correlation=" << fmt(summary.correlation[k])
        << " underestimate_fraction=" << fmt(summary.underestimate_fraction[k]) << "\n";
  }
  write_file_atomic(dir / "summary.csv", sum.str());

  SvgPlot plot("Log-determinant estimates", "exact", "estimate");
  for (int s : c.samples)
    plot.add_series("S=" + std::to_string(s), scatter.column("exact"), scatter.column("estimate_s" + std::to_string(s)),
                    SvgPlot::Style::Scatter);
  plot.add_series("y = x", scatter.column("exact"), scatter.column("exact"), SvgPlot::Style::Scatter);
  write_svg(dir / "scatter.svg", plot);
  SvgPlot lap("Shifted log-determinant vs Laplacian estimate", "shifted log det", "Laplacian / eps");
  for (double e : c.scan_epsilons) {
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < scan.rows().size(); ++i)
      if (std::stod(scan.rows()[i][2]) == e) {
        xs.push_back(std::stod(scan.rows()[i][3]));
        ys.push_back(std::stod(scan.rows()[i][4]));
      }
    lap.add_series("eps=" + fmt(e), xs, ys, SvgPlot::Style::Scatter);
  }
  lap.set_log_x(true);
  lap.set_log_y(true);
  write_svg(dir / "laplacian_scan.svg", lap);
  return kExitOk;
}

// --------------------------------------------------------------- two-moons

int cmd_two_moons(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  TwoMoonsConfig c;
  c.seed = cfg.get_u64("seed");
  c.n = static_cast<int>(positive(cfg, "n"));
  if (c.n % 2) throw ConfigError("n must be even");
  c.noise = cfg.get_double("noise");
  if (c.noise < 0) throw ConfigError("noise must be >= 0");
  c.lr = positive_real(cfg, "lr");
  c.steps = positive(cfg, "steps");
  c.prior_std = positive_real(cfg, "prior-std");
  c.fs_samples = static_cast<int>(positive(cfg, "fs-samples"));
  c.lmap_samples = static_cast<int>(positive(cfg, "lmap-samples"));
  c.beta = positive_real(cfg, "beta");
  c.trace_every = positive(cfg, "trace-every");
  c.surface_points = static_cast<int>(positive(cfg, "surface-points"));
  c.grid_side = static_cast<int>(positive(cfg, "grid-side"));
  c.grid_half_width = positive_real(cfg, "grid-half-width");
  c.widths = to_ints(cfg.get_longs("widths"));
  if (c.widths.size() < 2 || c.widths.front() != 2 || c.widths.back() != 2)
    throw ConfigError("widths must start and end with 2");
  const auto modes = cfg.values("mode");
  for (const auto& m : modes)
    if (m != "ps" && m != "fs" && m != "lmap") throw ConfigError("mode must be ps, fs or lmap");
  const auto epsilons = cfg.get_doubles("epsilon");
  for (double e : epsilons)
    if (!(e > 0)) throw ConfigError("epsilon must be positive");

  write_file_atomic(dir / "dataset.csv", dataset_csv(make_two_moons(c.seed, c.n, c.noise)).str());
  CsvTable trace({"mode", "epsilon", "step", "eigen_sum"});
  CsvTable summary({"mode", "epsilon", "final_eigen_sum", "train_accuracy", "divergent"});
  SvgPlot plot("Gram eigenvalue sum during training", "step", "sum of eigenvalues");
  plot.set_log_y(true);
  for (const auto& mode : modes) {
    const std::vector<double> eps_list = mode == "ps" ? std::vector<double>{std::nan("")} : epsilons;
    for (double eps : eps_list) {
      const TwoMoonsRun run = run_two_moons(c, mode, eps);
      const std::string eps_text = mode == "ps" ? "-" : fmt(eps);
      std::vector<double> xs, ys;
      for (std::size_t i = 0; i < run.trace_steps.size(); ++i) {
        trace.add(mode, eps_text, run.trace_steps[i], run.eigen_sums[i]);
        xs.push_back(static_cast<double>(run.trace_steps[i]));
        ys.push_back(run.eigen_sums[i]);
      }
      plot.add_series(mode == "ps" ? mode : mode + " eps=" + eps_text, xs, ys);
      summary.add(mode, eps_text, run.final_eigen_sum, run.train_accuracy, run.divergent ? 1 : 0);
      const std::string tag = mode == "ps" ? mode : mode + "_eps" + eps_text;
      write_file_atomic(dir / ("surface_" + tag + ".csv"), decision_surface_csv(c, run).str());
      out << "two-moons mode=" << mode << " epsilon=" << eps_text << " eigen_sum=" << fmt(run.final_eigen_sum)
          << " train_accuracy=" << fmt(run.train_accuracy) << "\n";
    }
  }
  write_file_atomic(dir / "eigen_trace.csv", trace.str());
  write_file_atomic(dir / "summary.csv", summary.str());
  write_svg(dir / "eigen_trace.svg", plot);
  return kExitOk;
}

// -------------------------------------------------------------------- check

int cmd_check(const ResolvedConfig& cfg, const fs::path& dir, std::ostream& out) {
  const std::string suite = cfg.get("suite");
  auto names = check_suite_names();
  names.push_back("all");
  if (std::find(names.begin(), names.end(), suite) == names.end()) throw ConfigError("unknown suite '" + suite + "'");
  const auto results = run_check_suite(suite, cfg.get_u64("seed"));
  const CsvTable table = check_results_csv(results);
  out << table.str();
  write_file_atomic(dir / "check.csv", table.str());
  for (const auto& r : results)
    if (!r.pass) return kExitPropertyFailure;
  return kExitOk;
}

std::vector<ConfigKey> common_keys() {
  return {{"seed", "0", "base random seed"}, {"out-dir", "", "output root (default $FSMAP_OUT_DIR or ./results)"}};
}

std::vector<Command> commands() {
  std::vector<Command> cmds;
  auto add = [&](std::string name, std::string desc, std::vector<ConfigKey> keys, auto fn) {
    auto all = common_keys();
    all.insert(all.end(), keys.begin(), keys.end());
    cmds.push_back({std::move(name), std::move(desc), std::move(all), fn});
  };
  add("fourier-compare", "PS-MAP vs FS-MAP on the Fourier-feature regression task",
      {{"n-train", "400", "training set sizes", true},
       {"objective", "ps, fs", "objectives to train (ps, fs)", true},
       {"seeds", "3", "number of replicate seeds"},
       {"link", "tanh", "link function (tanh, identity, inverse)"},
       {"sigma-ratio", "1", "model noise relative to the generating noise", true},
       {"eval-dist", "uniform", "evaluation distribution (uniform, narrow, dirac:M)", true},
       {"alpha", "10", "prior standard deviation"},
       {"sigma-star", "0.1", "generating noise standard deviation"},
       {"n-test", "1000", "test points"},
       {"lr", "0.1", "Adam learning rate"},
       {"steps", "2500", "training steps"},
       {"init-std", "0.1", "standard deviation of the initial parameters"},
       {"jitter", "1e-6", "Gram jitter for evaluation distributions other than uniform"},
       {"num-frequencies", "100", "Fourier frequencies (P = 2x)"}},
      cmd_fourier);
  add("bumps-bma", "Exact posterior grids and BMA for the two-bump model",
      {{"alpha", "1.2, 10, 20", "prior standard deviations", true},
       {"seeds", "5", "number of replicate datasets"},
       {"n", "20", "training points"},
       {"sigma", "0.1", "noise standard deviation"},
       {"h-left", "1", "generating height of the left bump"},
       {"h-right", "0", "generating height of the right bump"},
       {"grid-points", "401", "grid points per axis"},
       {"quadrature-nodes", "401", "Simpson nodes for the Gram expectation"},
       {"lr", "0.01", "Adam learning rate for MAP refinement"},
       {"steps", "3000", "MAP refinement steps"},
       {"curve-points", "201", "points in the function CSV"},
       {"center-left", "0.25", "left bump centre"},
       {"center-right", "0.75", "right bump centre"},
       {"width", "0.1", "bump width"},
       {"domain-lo", "0", "input domain lower end"},
       {"domain-hi", "1", "input domain upper end"}},
      cmd_bumps);
  add("logdet-accuracy", "Monte Carlo log-determinant estimator and Laplacian surrogate accuracy",
      {{"draws", "200", "random parameter draws"},
       {"samples", "800, 400, 200", "evaluation points per estimate", true},
       {"epsilon", "1e-12", "jitter for the estimator comparison"},
       {"scale-lo", "0.1", "lower end of the log-uniform parameter scale"},
       {"scale-hi", "10", "upper end of the log-uniform parameter scale"},
       {"scan-epsilon", "1e-3, 1, 10, 1e3", "jitters for the Laplacian scan", true},
       {"psi-draws", "10", "perturbations per Laplacian estimate"},
       {"beta", "1e-3", "perturbation scale"},
       {"grid-side", "40", "evaluation grid points per side"},
       {"grid-half-width", "5", "evaluation grid half width"},
       {"widths", "2, 16, 16, 16, 16, 2", "network layer widths", true}},
      cmd_logdet);
  add("two-moons", "Gram eigenvalue regularization on two moons",
      {{"mode", "ps, fs, lmap", "objectives (ps, fs, lmap)", true},
       {"epsilon", "1e-2, 1e-1, 1, 10", "jitters", true},
       {"n", "200", "training points"},
       {"noise", "0.2", "two-moons noise"},
       {"lr", "1e-3", "Adam learning rate"},
       {"steps", "10000", "training steps"},
       {"prior-std", "1", "prior standard deviation"},
       {"fs-samples", "200", "evaluation points per FS step"},
       {"lmap-samples", "400", "evaluation points per L-MAP step"},
       {"beta", "1e-3", "L-MAP perturbation scale"},
       {"trace-every", "100", "steps between eigenvalue-sum records"},
       {"surface-points", "101", "decision-surface points per side"},
       {"grid-side", "40", "evaluation grid points per side"},
       {"grid-half-width", "5", "evaluation grid half width"},
       {"widths", "2, 16, 16, 2", "network layer widths", true}},
      cmd_two_moons);
  add("check", "Property suites; exits 1 on failure",
      {{"suite", "all", "gradients, invariance, estimators, singularity, optimizer, reproducibility or all"}},
      cmd_check);
  return cmds;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  const auto cmds = commands();
  CLI::App app{"Function-space MAP laboratory", "fsmap-lab"};
  app.require_subcommand(1);
  std::string config_path;
  struct Bound {
    const Command* cmd;
    CLI::App* sub;
    std::map<std::string, std::vector<std::string>> storage;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  for (const auto& c : cmds) {
    auto b = std::make_unique<Bound>();
    b->cmd = &c;
    b->sub = app.add_subcommand(c.name, c.description);
    b->sub->add_option("--config", config_path, "config file of `key = value` lines");
    for (const auto& k : c.keys) {
      auto* opt = b->sub->add_option("--" + k.name, b->storage[k.name], k.help + " [default: " + k.default_value + "]");
      if (!k.multi) opt->expected(1);
      b->options[k.name] = opt;
    }
    bound.push_back(std::move(b));
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, er;
    const int code = app.exit(e, o, er);
    out << o.str();
    err << er.str();
    return code == 0 ? kExitOk : kExitUsage;
  }
  for (const auto& b : bound) {
    if (!b->sub->parsed()) continue;
    try {
      RawConfig flags;
      for (const auto& [name, opt] : b->options)
        if (opt->count() > 0) flags[name] = b->storage.at(name);
      const RawConfig file = config_path.empty() ? RawConfig{} : parse_config_file(config_path);
      const ResolvedConfig cfg(b->cmd->keys, file, flags);
      const fs::path dir = output_root(cfg) / b->cmd->name;
      fs::create_directories(dir);
      write_file_atomic(dir / "config.resolved", "command = " + b->cmd->name + "\n" + cfg.resolved_text());
      return b->cmd->run(cfg, dir, out);
    } catch (const ConfigError& e) {
      err << "usage error: " << e.what() << "\n";
      return kExitUsage;
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitPropertyFailure;
    }
  }
  return kExitUsage;
}

}  // namespace fsmap
