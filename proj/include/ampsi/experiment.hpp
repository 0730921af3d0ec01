#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "ampsi/amp.hpp"
#include "ampsi/denoisers.hpp"
#include "ampsi/errors.hpp"
#include "ampsi/linear_system.hpp"
#include "ampsi/oracle.hpp"
#include "ampsi/rng.hpp"
#include "ampsi/state_evolution.hpp"

namespace ampsi {

enum class DenoiserMode {
  Conditional,         // the model's Bayes denoiser
  Block,               // explicit blockwise softmax (block-sparse only)
  SeparableBernoulli,  // per-entry Bernoulli approximation (block-sparse only)
};

// Declarative description of one experiment: everything a run needs besides
// the master seed is in here, so a result is a pure function of (file, seed).
struct ExperimentConfig {
  SignalModel model;
  Index n = 0;
  double delta = 0.0;
  double sigma_w = 0.0;
  int trials = 1;
  int iterations = 15;
  std::uint64_t seed = 1;
  long se_mc_samples = 0;  // 0 -> model default
  LambdaMode lambda_mode = LambdaMode::SePath;
  DenoiserMode denoiser_mode = DenoiserMode::Conditional;
  std::string output;

  Index m() const { return static_cast<Index>(std::llround(static_cast<double>(n) * delta)); }
  // m is rounded once; the realized ratio is what every downstream formula uses.
  double realized_delta() const {
    return static_cast<double>(m()) / static_cast<double>(n);
  }

  void validate() const {
    model.validate();
    if (n < 1) throw ConfigError("config key 'n' must be >= 1");
    if (!(delta > 0.0)) throw ConfigError("config key 'delta' must be > 0");
    if (m() < 1) throw ConfigError("config keys 'n' and 'delta' give m < 1");
    if (sigma_w < 0.0) throw ConfigError("config key 'sigma_w' must be >= 0");
    if (trials < 1) throw ConfigError("config key 'trials' must be >= 1");
    if (iterations < 1) throw ConfigError("config key 'iterations' must be >= 1");
    if (se_mc_samples < 0) throw ConfigError("config key 'se_mc_samples' must be >= 0");
    if (model.kind == ModelKind::BlockSparse && n % model.block_size != 0)
      throw ConfigError("config key 'n' must be divisible by 'K'");
    if (denoiser_mode != DenoiserMode::Conditional &&
        model.kind != ModelKind::BlockSparse)
      throw ConfigError(
          "config key 'denoiser_mode': block / separable_bernoulli require the "
          "block_sparse model");
  }
};

// ---------------------------------------------------------------------------
// Config file: flat "key = value" lines, '#' comments, one experiment per
// file. Unknown and missing keys are reported by name.
// ---------------------------------------------------------------------------

namespace detail {

inline std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  if (pos != value.size())
    throw ConfigError("config key '" + key + "': trailing junk in '" + value + "'");
  return v;
}

inline long long parse_int(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(value, &pos);
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  if (pos != value.size())
    throw ConfigError("config key '" + key + "': trailing junk in '" + value + "'");
  return v;
}

}  // namespace detail

inline ExperimentConfig parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    if (kv.count(key)) throw ConfigError("config key '" + key + "' appears twice");
    kv[key] = value;
  }

  auto take = [&kv](const std::string& key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  auto require = [&take](const std::string& key) -> std::string {
    auto v = take(key);
    if (!v) throw ConfigError("missing config key '" + key + "'");
    return *v;
  };

  ExperimentConfig cfg;
  const std::string model_tag = require("model");
  const double sigma = detail::parse_double("sigma", require("sigma"));
  if (model_tag == "gg") {
    cfg.model = SignalModel::gauss_gauss(
        detail::parse_double("sigma_x", require("sigma_x")), sigma);
  } else if (model_tag == "bg") {
    cfg.model = SignalModel::bernoulli_gauss(
        detail::parse_double("epsilon", require("epsilon")), sigma);
  } else if (model_tag == "block_sparse") {
    cfg.model = SignalModel::block_sparse(
        static_cast<int>(detail::parse_int("K", require("K"))), sigma);
  } else if (model_tag == "bernoulli_sep") {
    cfg.model = SignalModel::bernoulli_sep(
        static_cast<int>(detail::parse_int("K", require("K"))), sigma);
  } else {
    throw ConfigError("config key 'model': unknown model '" + model_tag + "'");
  }

  cfg.n = static_cast<Index>(detail::parse_int("n", require("n")));
  cfg.delta = detail::parse_double("delta", require("delta"));
  cfg.sigma_w = detail::parse_double("sigma_w", require("sigma_w"));
  cfg.trials = static_cast<int>(detail::parse_int("trials", require("trials")));
  if (auto v = take("iterations"))
    cfg.iterations = static_cast<int>(detail::parse_int("iterations", *v));
  const long long seed = detail::parse_int("seed", require("seed"));
  if (seed < 0) throw ConfigError("config key 'seed' must be >= 0");
  cfg.seed = static_cast<std::uint64_t>(seed);

  if (auto v = take("se_mc_samples")) cfg.se_mc_samples = detail::parse_int("se_mc_samples", *v);
  if (auto v = take("lambda_mode")) {
    if (*v == "se")
      cfg.lambda_mode = LambdaMode::SePath;
    else if (*v == "empirical")
      cfg.lambda_mode = LambdaMode::Empirical;
    else
      throw ConfigError("config key 'lambda_mode': expected se|empirical, got '" + *v +
                        "'");
  }
  if (auto v = take("denoiser_mode")) {
    if (*v == "conditional")
      cfg.denoiser_mode = DenoiserMode::Conditional;
    else if (*v == "block")
      cfg.denoiser_mode = DenoiserMode::Block;
    else if (*v == "separable_bernoulli")
      cfg.denoiser_mode = DenoiserMode::SeparableBernoulli;
    else
      throw ConfigError(
          "config key 'denoiser_mode': expected "
          "conditional|block|separable_bernoulli, got '" +
          *v + "'");
  }
  if (auto v = take("output")) cfg.output = *v;

  if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
  cfg.validate();
  return cfg;
}

inline ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

// ---------------------------------------------------------------------------
// Experiment runner
// ---------------------------------------------------------------------------

struct TrialReport {
  ExperimentConfig config;
  SePath se;
  std::vector<Trajectory> trajectories;   // one per trial, each `iterations` long
  std::vector<double> mean_mse;           // per iteration, over trials
  std::vector<double> stderr_mse;         // sample sd / sqrt(trials); 0 for 1 trial
  std::vector<double> mean_pseudo_mse;
  std::vector<double> predicted_mse;      // delta (lambda_t^2 - sigma_w^2), t=1..T
};

// The SE path and denoiser follow the denoiser mode: the separable-Bernoulli
// mode keeps the block-sparse signal but evaluates its own (approximate)
// prior in both the denoiser and the SE expectation.
inline SignalModel se_model_for(const ExperimentConfig& cfg) {
  if (cfg.denoiser_mode == DenoiserMode::SeparableBernoulli)
    return SignalModel::bernoulli_sep(cfg.model.block_size, cfg.model.sigma);
  return cfg.model;
}

inline std::unique_ptr<Denoiser> make_denoiser_for(const ExperimentConfig& cfg) {
  switch (cfg.denoiser_mode) {
    case DenoiserMode::Conditional:
      return make_denoiser(cfg.model);
    case DenoiserMode::Block:
      return std::make_unique<BlockDenoiser>(cfg.model.block_size, cfg.model.sigma);
    case DenoiserMode::SeparableBernoulli:
      return std::make_unique<BernoulliSepDenoiser>(cfg.model.block_size,
                                                    cfg.model.sigma);
  }
  throw ConfigError("unknown denoiser mode");
}

struct RunOptions {
  bool onsager = true;  // negative-control switch, not exposed in config files
  int threads = 0;      // 0 -> hardware concurrency, capped at the trial count
};

inline TrialReport run_experiment(const ExperimentConfig& cfg,
                                  const RunOptions& run_opts = {}) {
  cfg.validate();
  const Index m = cfg.m();
  const double delta = cfg.realized_delta();
  const int T = cfg.iterations;

  TrialReport report;
  report.config = cfg;

  Rng se_rng(derive_seed(cfg.seed, stream::se));
  report.se = se_path(se_model_for(cfg), delta, cfg.sigma_w, T, cfg.se_mc_samples,
                      se_rng);
  report.predicted_mse = predicted_estimate_mse(report.se);

  const auto denoiser = make_denoiser_for(cfg);
  AmpOptions amp_opts;
  amp_opts.onsager = run_opts.onsager;
  amp_opts.lambda_mode = cfg.lambda_mode;

  // Trials are independent given their derived seeds, so they run on a small
  // pool; every result lands in its own slot and aggregation below walks them
  // in trial order, making the report identical for any thread count.
  report.trajectories.assign(static_cast<std::size_t>(cfg.trials), Trajectory{});
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(cfg.trials));
  auto run_trial = [&](int trial) {
    try {
      const std::uint64_t trial_seed =
          derive_seed(cfg.seed, stream::trial_base + static_cast<std::uint64_t>(trial));
      const LinearSystem sys =
          make_system(cfg.model, cfg.n, m, cfg.sigma_w, trial_seed);
      report.trajectories[static_cast<std::size_t>(trial)] =
          run_amp(sys, *denoiser, report.se, T, amp_opts);
    } catch (...) {
      failures[static_cast<std::size_t>(trial)] = std::current_exception();
    }
  };

  int nthreads = run_opts.threads > 0
                     ? run_opts.threads
                     : static_cast<int>(std::thread::hardware_concurrency());
  nthreads = std::max(1, std::min(nthreads, cfg.trials));
  if (nthreads == 1) {
    for (int trial = 0; trial < cfg.trials; ++trial) run_trial(trial);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int w = 0; w < nthreads; ++w)
      pool.emplace_back([&]() {
        for (int trial; (trial = next.fetch_add(1)) < cfg.trials;) run_trial(trial);
      });
    for (auto& th : pool) th.join();
  }
  for (int trial = 0; trial < cfg.trials; ++trial) {
    if (!failures[static_cast<std::size_t>(trial)]) continue;
    try {
      std::rethrow_exception(failures[static_cast<std::size_t>(trial)]);
    } catch (const NumericError& e) {
      throw NumericError("trial " + std::to_string(trial) + ": " + e.what());
    }
  }

  report.mean_mse.assign(static_cast<std::size_t>(T), 0.0);
  report.mean_pseudo_mse.assign(static_cast<std::size_t>(T), 0.0);
  report.stderr_mse.assign(static_cast<std::size_t>(T), 0.0);
  const double nt = static_cast<double>(cfg.trials);
  for (int t = 0; t < T; ++t) {
    double sum = 0.0, sum_sq = 0.0, sum_pseudo = 0.0;
    for (const auto& traj : report.trajectories) {
      const double v = traj[static_cast<std::size_t>(t)].mse_estimate;
      sum += v;
      sum_sq += v * v;
      sum_pseudo += traj[static_cast<std::size_t>(t)].mse_pseudo;
    }
    const double mean = sum / nt;
    report.mean_mse[static_cast<std::size_t>(t)] = mean;
    report.mean_pseudo_mse[static_cast<std::size_t>(t)] = sum_pseudo / nt;
    if (cfg.trials > 1) {
      const double var = std::max(0.0, (sum_sq - nt * mean * mean) / (nt - 1.0));
      report.stderr_mse[static_cast<std::size_t>(t)] = std::sqrt(var / nt);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// CSV emission: <prefix>.trials.csv and <prefix>.se.csv, 12 significant
// digits, rows sorted by (trial, iter).
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace detail

inline void emit_csv(const TrialReport& report, const std::string& path_prefix) {
  const std::filesystem::path prefix(path_prefix);
  if (prefix.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(prefix.parent_path(), ec);
    if (ec)
      throw IoError("cannot create output directory '" + prefix.parent_path().string() +
                    "': " + ec.message());
  }

  {
    const std::string path = path_prefix + ".trials.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "trial,iter,mse,pseudo_mse,lambda\n";
    for (std::size_t trial = 0; trial < report.trajectories.size(); ++trial)
      for (const auto& rec : report.trajectories[trial])
        out << trial << ',' << rec.iter << ',' << detail::fmt12(rec.mse_estimate)
            << ',' << detail::fmt12(rec.mse_pseudo) << ','
            << detail::fmt12(rec.lambda_used) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
  }

  {
    const std::string path = path_prefix + ".se.csv";
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "iter,lambda_sq,pred_mse,emp_mean_mse,emp_stderr\n";
    for (std::size_t t = 0; t < report.mean_mse.size(); ++t)
      out << (t + 1) << ',' << detail::fmt12(report.se.lambda_sq[t + 1]) << ','
          << detail::fmt12(report.predicted_mse[t]) << ','
          << detail::fmt12(report.mean_mse[t]) << ','
          << detail::fmt12(report.stderr_mse[t]) << '\n';
    if (!out) throw IoError("write failed for '" + path + "'");
  }
}

// ---------------------------------------------------------------------------
// denoise-check: oracle-equivalence plus finite-difference suites for one
// model, against the library tolerances. inject_bias perturbs the closed-form
// outputs and exists so the check itself can be shown to catch a broken
// denoiser.
// ---------------------------------------------------------------------------

// Grid specification for denoise_check. Zero / empty fields resolve to the
// model's published defaults: (a, b) on [-3, 3] step 1 with lambda in
// {0.1, 1} for GG; [-2, 2] step 1 with lambda 0.5 for BG; random blocks at
// lambda 0.4 for block-sparse; [-1, 2] step 0.25 at lambda 0.3 for the
// separable Bernoulli model.
struct DenoiseCheckGrid {
  double lo = 0.0;
  double hi = 0.0;
  double step = 0.0;
  std::vector<double> lambdas;
  int random_reps = 200;   // block-sparse: number of random blocks
  int fd_samples = 10000;  // finite-difference comparisons per denoiser
};

struct DenoiseCheckReport {
  std::string model;
  double max_oracle_err = 0.0;   // abs error vs oracle posterior mean
  double oracle_tol = 0.0;
  double max_deriv_err = 0.0;    // guarded rel error vs central differences
  double deriv_tol = 1e-5;
  bool pass = false;
};

namespace detail {

inline double guarded_rel_err(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max({1.0, std::abs(analytic), std::abs(numeric)});
}

// Central difference in the pseudo-data argument, step 1e-5 max(1, |a|).
template <typename F>
double central_diff(const F& f, double a) {
  const double h = 1e-5 * std::max(1.0, std::abs(a));
  return (f(a + h) - f(a - h)) / (2.0 * h);
}

}  // namespace detail

namespace detail {

inline std::vector<double> grid_points(double lo, double hi, double step) {
  std::vector<double> points;
  for (double v = lo; v <= hi + 1e-9; v += step) points.push_back(v);
  return points;
}

}  // namespace detail

inline DenoiseCheckReport denoise_check(const SignalModel& model,
                                        const DenoiseCheckGrid& grid = {},
                                        double inject_bias = 0.0,
                                        std::uint64_t seed = 12345) {
  model.validate();
  DenoiseCheckReport rep;
  rep.model = model.name();
  Rng rng(seed);

  // resolve model defaults for unset grid fields
  double lo = grid.lo, hi = grid.hi, step = grid.step;
  std::vector<double> lambdas = grid.lambdas;
  switch (model.kind) {
    case ModelKind::GaussGauss:
      rep.oracle_tol = 1e-8;
      if (lo == hi) lo = -3.0, hi = 3.0;
      if (step <= 0.0) step = 1.0;
      if (lambdas.empty()) lambdas = {0.1, 1.0};
      break;
    case ModelKind::BernoulliGauss:
      rep.oracle_tol = 1e-6;
      if (lo == hi) lo = -2.0, hi = 2.0;
      if (step <= 0.0) step = 1.0;
      if (lambdas.empty()) lambdas = {0.5};
      break;
    case ModelKind::BlockSparse:
      rep.oracle_tol = 1e-12;
      if (lambdas.empty()) lambdas = {0.4};
      break;
    case ModelKind::BernoulliSep:
      rep.oracle_tol = 1e-12;
      if (lo == hi) lo = -1.0, hi = 2.0;
      if (step <= 0.0) step = 0.25;
      if (lambdas.empty()) lambdas = {0.3};
      break;
  }

  switch (model.kind) {
    case ModelKind::GaussGauss: {
      for (const double lambda : lambdas) {
        const auto rule = oracle::rule_for_scales(model.sigma_x, lambda, model.sigma);
        for (const double a : detail::grid_points(lo, hi, step))
          for (const double b : detail::grid_points(lo, hi, step)) {
            const auto want = oracle::quad_posterior_mean(
                oracle::Prior::gaussian(model.sigma_x), a, b, lambda, model.sigma,
                rule);
            const double got =
                gg_denoise(a, b, lambda, model.sigma_x, model.sigma) + inject_bias;
            rep.max_oracle_err = std::max(rep.max_oracle_err, std::abs(got - *want));
          }
      }
      for (int i = 0; i < grid.fd_samples; ++i) {
        const double a = 2.0 * rng.gaussian(), b = 2.0 * rng.gaussian();
        const double lambda = 0.1 + 0.9 * rng.uniform();
        const double fd = detail::central_diff(
            [&](double s) { return gg_denoise(s, b, lambda, model.sigma_x, model.sigma); },
            a);
        const double an = gg_deriv(lambda, model.sigma_x, model.sigma) + inject_bias;
        rep.max_deriv_err = std::max(rep.max_deriv_err, detail::guarded_rel_err(an, fd));
      }
      break;
    }
    case ModelKind::BernoulliGauss: {
      for (const double lambda : lambdas) {
        const auto rule = oracle::rule_for_scales(1.0, lambda, model.sigma);
        for (const double a : detail::grid_points(lo, hi, step))
          for (const double b : detail::grid_points(lo, hi, step)) {
            const auto want = oracle::quad_posterior_mean(
                oracle::Prior::bernoulli_gaussian(model.epsilon), a, b, lambda,
                model.sigma, rule);
            const double got =
                bg_denoise(a, b, lambda, model.epsilon, model.sigma) + inject_bias;
            rep.max_oracle_err = std::max(rep.max_oracle_err, std::abs(got - *want));
          }
      }
      for (int i = 0; i < grid.fd_samples; ++i) {
        const double a = 2.0 * rng.gaussian(), b = 2.0 * rng.gaussian();
        const double lam = 0.1 + 0.9 * rng.uniform();
        const double fd = detail::central_diff(
            [&](double s) { return bg_denoise(s, b, lam, model.epsilon, model.sigma); },
            a);
        const double an = bg_deriv(a, b, lam, model.epsilon, model.sigma) + inject_bias;
        rep.max_deriv_err = std::max(rep.max_deriv_err, detail::guarded_rel_err(an, fd));
      }
      break;
    }
    case ModelKind::BlockSparse: {
      for (const double lambda : lambdas)
        for (int rep_i = 0; rep_i < grid.random_reps; ++rep_i) {
          const Index k = model.block_size;
          Vector a(k), b(k);
          for (Index j = 0; j < k; ++j) {
            a[j] = 1.5 * rng.gaussian();
            b[j] = 1.5 * rng.gaussian();
          }
          const Vector want = oracle::enum_block_posterior(a, b, lambda, model.sigma);
          const Vector got = block_denoise(a, b, lambda, model.sigma);
          rep.max_oracle_err = std::max(
              rep.max_oracle_err,
              ((got.array() + inject_bias) - want.array()).abs().maxCoeff());

          // divergence vs the summed central differences of each coordinate
          double fd_div = 0.0;
          for (Index j = 0; j < k; ++j) {
            Vector ap = a, am = a;
            const double h = 1e-5 * std::max(1.0, std::abs(a[j]));
            ap[j] += h;
            am[j] -= h;
            fd_div += (block_denoise(ap, b, lambda, model.sigma)[j] -
                       block_denoise(am, b, lambda, model.sigma)[j]) /
                      (2.0 * h);
          }
          const double an = block_divergence(a, b, lambda, model.sigma) + inject_bias;
          rep.max_deriv_err =
              std::max(rep.max_deriv_err, detail::guarded_rel_err(an, fd_div));
        }
      break;
    }
    case ModelKind::BernoulliSep: {
      for (const double lambda : lambdas)
        for (const double a : detail::grid_points(lo, hi, step))
          for (const double b : detail::grid_points(lo, hi, step)) {
            const double want = oracle::enum_bernoulli_posterior(
                a, b, lambda, model.sigma, model.block_size);
            const double got =
                bernoulli_sep_denoise(a, b, lambda, model.sigma, model.block_size) +
                inject_bias;
            rep.max_oracle_err = std::max(rep.max_oracle_err, std::abs(got - want));
          }
      for (int i = 0; i < grid.fd_samples; ++i) {
        const double a = 2.0 * rng.gaussian(), b = 2.0 * rng.gaussian();
        const double lam = 0.2 + 0.8 * rng.uniform();
        const double fd = detail::central_diff(
            [&](double s) {
              return bernoulli_sep_denoise(s, b, lam, model.sigma, model.block_size);
            },
            a);
        const double an =
            bernoulli_sep_deriv(a, b, lam, model.sigma, model.block_size) + inject_bias;
        rep.max_deriv_err = std::max(rep.max_deriv_err, detail::guarded_rel_err(an, fd));
      }
      break;
    }
  }

  rep.pass = rep.max_oracle_err <= rep.oracle_tol && rep.max_deriv_err <= rep.deriv_tol;
  return rep;
}

// ---------------------------------------------------------------------------
// Sweep helper: writes one config file per value of the swept key.
// ---------------------------------------------------------------------------

inline std::vector<std::string> generate_sweep_configs(
    const std::string& config_path, const std::string& key,
    const std::vector<std::string>& values, const std::string& out_dir = "") {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config file '" + config_path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string base_text = buf.str();

  const std::filesystem::path base(config_path);
  const std::filesystem::path dir =
      out_dir.empty() ? (base.has_parent_path() ? base.parent_path()
                                                : std::filesystem::path("."))
                      : std::filesystem::path(out_dir);
  {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
  }

  std::vector<std::string> written;
  for (const auto& value : values) {
    // Replace (or append) the swept key, then validate the result.
    std::istringstream lines(base_text);
    std::ostringstream out_text;
    std::string line;
    bool replaced = false;
    while (std::getline(lines, line)) {
      const std::string stripped = detail::trim(line.substr(0, line.find('#')));
      const auto eq = stripped.find('=');
      if (eq != std::string::npos && detail::trim(stripped.substr(0, eq)) == key) {
        out_text << key << " = " << value << '\n';
        replaced = true;
      } else {
        out_text << line << '\n';
      }
    }
    if (!replaced) out_text << key << " = " << value << '\n';
    parse_config_text(out_text.str());  // reject bad key/value combinations early

    std::string tag = value;
    std::replace(tag.begin(), tag.end(), '/', '_');
    const std::filesystem::path path =
        dir / (base.stem().string() + "_" + key + "_" + tag + ".cfg");
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << out_text.str();
    if (!out) throw IoError("write failed for '" + path.string() + "'");
    written.push_back(path.string());
  }
  return written;
}

}  // namespace ampsi
