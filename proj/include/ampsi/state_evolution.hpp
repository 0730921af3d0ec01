#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ampsi/denoisers.hpp"
#include "ampsi/errors.hpp"
#include "ampsi/rng.hpp"
#include "ampsi/signal_model.hpp"

namespace ampsi {

enum class SeMethod { ClosedForm, MonteCarlo };

// The scalar recursion lambda_0^2, ..., lambda_T^2 predicting the effective
// noise variance of the pseudo-data, plus enough metadata to reproduce it.
struct SePath {
  std::vector<double> lambda_sq;  // size T + 1
  SignalModel model;
  double delta = 0.0;
  double sigma_w = 0.0;
  SeMethod method = SeMethod::ClosedForm;
  long mc_samples = 0;                  // per step, when Monte Carlo
  std::vector<double> mc_std_errors;    // per step, when Monte Carlo
};

// lambda_0^2 = sigma_w^2 + E[X^2] / delta.
inline double se_init(const SignalModel& model, double delta, double sigma_w) {
  model.validate();
  if (!(delta > 0.0)) throw ParameterError("delta must be > 0");
  if (sigma_w < 0.0) throw ParameterError("sigma_w must be >= 0");
  return sigma_w * sigma_w + model.prior_second_moment() / delta;
}

// Exact GG recursion:
// lambda_t^2 = sigma_w^2 + (1/delta) sx2 s2 l2 / (sx2 (s2 + l2) + s2 l2).
inline double gg_se_step(double lambda_sq, double sigma_x, double sigma, double delta,
                         double sigma_w) {
  if (!(sigma_x > 0.0)) throw ParameterError("sigma_x must be > 0");
  if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  if (!(delta > 0.0)) throw ParameterError("delta must be > 0");
  if (sigma_w < 0.0) throw ParameterError("sigma_w must be >= 0");
  if (lambda_sq < 0.0) throw ParameterError("lambda_sq must be >= 0");
  const double sx2 = sigma_x * sigma_x, s2 = sigma * sigma;
  const double mmse = sx2 * s2 * lambda_sq / (sx2 * (s2 + lambda_sq) + s2 * lambda_sq);
  return sigma_w * sigma_w + mmse / delta;
}

struct McEstimate {
  double value = 0.0;      // sigma_w^2 + expectation term
  double std_error = 0.0;  // of the expectation term contribution
};

// Monte-Carlo evaluation of one SE step: fresh (X, X_tilde, Z) per sample,
// blockwise for the block-sparse model. n_samples counts scalar samples, or
// blocks when the model is block-sparse.
inline McEstimate mc_se_step(const SignalModel& model, double lambda_sq, double delta,
                             double sigma_w, long n_samples, Rng& rng) {
  model.validate();
  if (!(delta > 0.0)) throw ParameterError("delta must be > 0");
  if (sigma_w < 0.0) throw ParameterError("sigma_w must be >= 0");
  if (!(lambda_sq > 0.0)) throw ParameterError("lambda_sq must be > 0");
  if (n_samples < 1000)
    throw ParameterError("mc_se_step: need at least 1000 samples, got " +
                         std::to_string(n_samples));
  const double lambda = std::sqrt(lambda_sq);

  double sum = 0.0, sum_sq = 0.0;
  // Per-sample squared error of the conditional denoiser at noise level lambda.
  switch (model.kind) {
    case ModelKind::GaussGauss: {
      for (long i = 0; i < n_samples; ++i) {
        const double x = model.sigma_x * rng.gaussian();
        const double si = x + model.sigma * rng.gaussian();
        const double a = x + lambda * rng.gaussian();
        const double e = gg_denoise(a, si, lambda, model.sigma_x, model.sigma) - x;
        sum += e * e;
        sum_sq += e * e * e * e;
      }
      break;
    }
    case ModelKind::BernoulliGauss: {
      for (long i = 0; i < n_samples; ++i) {
        const double x = rng.uniform() < model.epsilon ? rng.gaussian() : 0.0;
        const double si = x + model.sigma * rng.gaussian();
        const double a = x + lambda * rng.gaussian();
        const double e = bg_denoise(a, si, lambda, model.epsilon, model.sigma) - x;
        sum += e * e;
        sum_sq += e * e * e * e;
      }
      break;
    }
    case ModelKind::BernoulliSep: {
      const double p = 1.0 / static_cast<double>(model.block_size);
      for (long i = 0; i < n_samples; ++i) {
        const double x = rng.uniform() < p ? 1.0 : 0.0;
        const double si = x + model.sigma * rng.gaussian();
        const double a = x + lambda * rng.gaussian();
        const double e =
            bernoulli_sep_denoise(a, si, lambda, model.sigma, model.block_size) - x;
        sum += e * e;
        sum_sq += e * e * e * e;
      }
      break;
    }
    case ModelKind::BlockSparse: {
      // One generic block with the nonzero in position 1; blocks are i.i.d.
      const Index k = model.block_size;
      Vector a(k), b(k);
      for (long i = 0; i < n_samples; ++i) {
        for (Index j = 0; j < k; ++j) {
          const double xj = (j == 0) ? 1.0 : 0.0;
          a[j] = xj + lambda * rng.gaussian();
          b[j] = xj + model.sigma * rng.gaussian();
        }
        const Vector g = block_denoise(a, b, lambda, model.sigma);
        double err = 0.0;
        for (Index j = 0; j < k; ++j) {
          const double d = g[j] - ((j == 0) ? 1.0 : 0.0);
          err += d * d;
        }
        sum += err;
        sum_sq += err * err;
      }
      break;
    }
  }

  const double ns = static_cast<double>(n_samples);
  const double mean = sum / ns;
  const double var = std::max(0.0, sum_sq / ns - mean * mean);
  const double se_of_mean = std::sqrt(var / ns);

  // Block-sparse: expectation term is (1/(delta K)) E[block error];
  // scalar models: (1/delta) E[per-entry error].
  const double scale = model.kind == ModelKind::BlockSparse
                           ? 1.0 / (delta * static_cast<double>(model.block_size))
                           : 1.0 / delta;
  McEstimate out;
  out.value = sigma_w * sigma_w + scale * mean;
  out.std_error = scale * se_of_mean;
  return out;
}

// Default per-step sample counts keeping the SE standard error well below the
// tracking tolerances.
inline long default_mc_samples(const SignalModel& model) {
  return model.kind == ModelKind::BlockSparse ? 200000L : 1000000L;
}

// Common-random-numbers option: when enabled, the Monte-Carlo samples of step
// t come from a stream seeded by (seed, t) rather than the ambient generator,
// so paths computed for different parameter values share their randomness.
// Variance reduction for sweeps; off by default.
struct SeCrnOptions {
  bool enabled = false;
  std::uint64_t seed = 0;
};

// Full path: lambda_0^2 from se_init, then T steps with the model-appropriate
// rule (closed form for GG, Monte Carlo otherwise). All T steps are computed;
// the recursion is cheap enough that converged tails are not skipped.
inline SePath se_path(const SignalModel& model, double delta, double sigma_w, int T,
                      long n_samples, Rng& rng, const SeCrnOptions& crn = {}) {
  if (T < 1) throw ParameterError("se_path: T must be >= 1");
  SePath path;
  path.model = model;
  path.delta = delta;
  path.sigma_w = sigma_w;
  path.lambda_sq.reserve(static_cast<std::size_t>(T) + 1);
  path.lambda_sq.push_back(se_init(model, delta, sigma_w));

  if (model.kind == ModelKind::GaussGauss) {
    path.method = SeMethod::ClosedForm;
    for (int t = 1; t <= T; ++t)
      path.lambda_sq.push_back(
          gg_se_step(path.lambda_sq.back(), model.sigma_x, model.sigma, delta, sigma_w));
  } else {
    path.method = SeMethod::MonteCarlo;
    path.mc_samples = n_samples > 0 ? n_samples : default_mc_samples(model);
    for (int t = 1; t <= T; ++t) {
      McEstimate est;
      if (crn.enabled) {
        Rng step_rng(derive_seed(crn.seed, static_cast<std::uint64_t>(t)));
        est = mc_se_step(model, path.lambda_sq.back(), delta, sigma_w, path.mc_samples,
                         step_rng);
      } else {
        est = mc_se_step(model, path.lambda_sq.back(), delta, sigma_w, path.mc_samples,
                         rng);
      }
      path.lambda_sq.push_back(est.value);
      path.mc_std_errors.push_back(est.std_error);
    }
  }
  return path;
}

// Predicted estimate MSE, delta (lambda_t^2 - sigma_w^2) for t = 1..T.
inline std::vector<double> predicted_estimate_mse(const SePath& path) {
  std::vector<double> mse;
  if (path.lambda_sq.size() < 2) return mse;
  mse.reserve(path.lambda_sq.size() - 1);
  for (std::size_t t = 1; t < path.lambda_sq.size(); ++t)
    mse.push_back(path.delta * (path.lambda_sq[t] - path.sigma_w * path.sigma_w));
  return mse;
}

}  // namespace ampsi
