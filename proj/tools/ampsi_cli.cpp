// Experiment runner for AMP with side information. Subcommands:
//   run            run a config: AMP-SI trials + SE path, emit CSV results
//   se             compute the SE path only
//   denoise-check  compare closed-form denoisers against the brute-force oracle
//   sweep          expand a config into one file per value of a swept key
//
// Exit codes: 0 ok, 1 configuration error, 2 numeric divergence, 3 I/O error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ampsi/ampsi.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;

std::string fmt12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int cmd_run(const std::string& config_path, std::string out_prefix, long long seed) {
  ampsi::ExperimentConfig cfg = ampsi::parse_config(config_path);
  if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
  if (out_prefix.empty()) out_prefix = cfg.output;
  if (out_prefix.empty())
    throw ampsi::ConfigError("no output prefix: pass --out or set 'output' in the config");

  const ampsi::TrialReport report = ampsi::run_experiment(cfg);
  ampsi::emit_csv(report, out_prefix);

  std::cout << "model=" << cfg.model.name() << " n=" << cfg.n << " m=" << cfg.m()
            << " trials=" << cfg.trials << " iterations=" << cfg.iterations << '\n';
  std::cout << "wrote " << out_prefix << ".trials.csv and " << out_prefix
            << ".se.csv\n";
  const std::size_t last = report.mean_mse.size() - 1;
  std::cout << "final empirical MSE " << fmt12(report.mean_mse[last])
            << "  SE prediction " << fmt12(report.predicted_mse[last]) << '\n';
  return kExitOk;
}

int cmd_se(const std::string& config_path, const std::string& out_path) {
  const ampsi::ExperimentConfig cfg = ampsi::parse_config(config_path);
  ampsi::Rng rng(ampsi::derive_seed(cfg.seed, ampsi::stream::se));
  const ampsi::SePath path =
      ampsi::se_path(ampsi::se_model_for(cfg), cfg.realized_delta(), cfg.sigma_w,
                     cfg.iterations, cfg.se_mc_samples, rng);

  std::ofstream out(out_path);
  if (!out) throw ampsi::IoError("cannot open '" + out_path + "' for writing");
  out << "iter,lambda_sq,pred_mse\n";
  const double sw2 = cfg.sigma_w * cfg.sigma_w;
  for (std::size_t t = 0; t < path.lambda_sq.size(); ++t)
    out << t << ',' << fmt12(path.lambda_sq[t]) << ','
        << fmt12(cfg.realized_delta() * (path.lambda_sq[t] - sw2)) << '\n';
  if (!out) throw ampsi::IoError("write failed for '" + out_path + "'");
  std::cout << "wrote " << out_path << " (" << path.lambda_sq.size() << " rows)\n";
  return kExitOk;
}

int cmd_denoise_check(const std::string& model_tag, double sigma, double sigma_x,
                      double epsilon, int block_size,
                      const std::vector<double>& lambdas, double inject_bias) {
  ampsi::SignalModel model;
  if (model_tag == "gg")
    model = ampsi::SignalModel::gauss_gauss(sigma_x, sigma);
  else if (model_tag == "bg")
    model = ampsi::SignalModel::bernoulli_gauss(epsilon, sigma);
  else if (model_tag == "block_sparse")
    model = ampsi::SignalModel::block_sparse(block_size, sigma);
  else if (model_tag == "bernoulli_sep")
    model = ampsi::SignalModel::bernoulli_sep(block_size, sigma);
  else
    throw ampsi::ConfigError("unknown model '" + model_tag + "'");

  ampsi::DenoiseCheckGrid grid;
  grid.lambdas = lambdas;
  const ampsi::DenoiseCheckReport rep = ampsi::denoise_check(model, grid, inject_bias);
  std::cout << "model " << rep.model << '\n'
            << "  max oracle error      " << fmt12(rep.max_oracle_err) << "  (tol "
            << fmt12(rep.oracle_tol) << ")\n"
            << "  max derivative error  " << fmt12(rep.max_deriv_err) << "  (tol "
            << fmt12(rep.deriv_tol) << ")\n"
            << (rep.pass ? "PASS" : "FAIL") << '\n';
  return rep.pass ? kExitOk : kExitNumeric;
}

int cmd_sweep(const std::string& config_path, const std::string& key,
              const std::vector<std::string>& values, const std::string& out_dir) {
  const auto written = ampsi::generate_sweep_configs(config_path, key, values, out_dir);
  for (const auto& path : written) std::cout << "wrote " << path << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AMP with side information: experiments and SE predictions"};
  app.require_subcommand(1);

  std::string config_path, out, out_dir, model_tag, sweep_key;
  long long seed_override = -1;
  double sigma = 0.2, sigma_x = 1.0, epsilon = 0.2, inject_bias = 0.0;
  int block_size = 5;
  std::vector<double> check_lambdas;
  std::vector<std::string> sweep_values;

  auto* run = app.add_subcommand("run", "run an experiment config and emit CSVs");
  run->add_option("--config", config_path, "experiment config file")->required();
  run->add_option("--out", out, "output prefix for <prefix>.trials.csv / .se.csv");
  run->add_option("--seed", seed_override, "override the config seed");

  auto* se = app.add_subcommand("se", "compute the SE path only");
  se->add_option("--config", config_path, "experiment config file")->required();
  se->add_option("--out", out, "output CSV path")->required();

  auto* check = app.add_subcommand("denoise-check",
                                   "oracle and finite-difference checks for a model");
  check->add_option("--model", model_tag, "gg | bg | block_sparse | bernoulli_sep")
      ->required();
  check->add_option("--sigma", sigma, "SI noise std dev");
  check->add_option("--sigma-x", sigma_x, "GG signal std dev");
  check->add_option("--epsilon", epsilon, "BG nonzero probability");
  check->add_option("--K", block_size, "block size");
  check->add_option("--lambda", check_lambdas, "effective noise levels to check")
      ->delimiter(',');
  check->add_option("--inject-bias", inject_bias,
                    "perturb outputs to demonstrate a failing check")
      ->group("");  // hidden

  auto* sweep = app.add_subcommand("sweep", "write one config per swept value");
  sweep->add_option("--config", config_path, "base config file")->required();
  sweep->add_option("--param", sweep_key, "config key to sweep")->required();
  sweep->add_option("--values", sweep_values, "comma-separated values")
      ->required()
      ->delimiter(',');
  sweep->add_option("--out-dir", out_dir, "directory for generated configs");

  try {
    app.parse(argc, argv);
    if (run->parsed()) return cmd_run(config_path, out, seed_override);
    if (se->parsed()) return cmd_se(config_path, out);
    if (check->parsed())
      return cmd_denoise_check(model_tag, sigma, sigma_x, epsilon, block_size,
                               check_lambdas, inject_bias);
    if (sweep->parsed()) return cmd_sweep(config_path, sweep_key, sweep_values, out_dir);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ampsi::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ampsi::NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const ampsi::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}
