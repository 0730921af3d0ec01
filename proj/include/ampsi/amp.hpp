#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "ampsi/denoisers.hpp"
#include "ampsi/errors.hpp"
#include "ampsi/linear_system.hpp"
#include "ampsi/state_evolution.hpp"

namespace ampsi {

// Evolving algorithm state. x is the current estimate x^t, r_prev the last
// residual, div_prev the divergence of the last denoising step, and pseudo the
// pseudo-data vector that produced x (cached for diagnostics).
struct AmpState {
  Index t = 0;
  Vector x;
  Vector r_prev;
  double div_prev = 0.0;
  Vector pseudo;
};

inline AmpState initial_state(const LinearSystem& sys) {
  AmpState s;
  s.x = Vector::Zero(sys.n);
  s.r_prev = Vector::Zero(sys.m);
  return s;
}

struct IterationRecord {
  int iter = 0;                // 1-based, one record per completed iteration
  double mse_estimate = 0.0;   // (1/n) ||x^t - x||^2
  double mse_pseudo = 0.0;     // (1/n) ||x^{t-1} + A^T r^{t-1} - x||^2
  double lambda_used = 0.0;
};

using Trajectory = std::vector<IterationRecord>;

enum class LambdaMode {
  SePath,     // lambda_t from the precomputed SE recursion (canonical)
  Empirical,  // lambda_t = ||r^t|| / sqrt(m), estimated on the fly
};

struct AmpOptions {
  bool onsager = true;      // force the correction to 0 for negative controls
  LambdaMode lambda_mode = LambdaMode::SePath;
  // Stop once the SE path has numerically converged. Off by default so every
  // run emits exactly T iteration records.
  bool early_stop = false;
  double early_stop_rel_tol = 1e-8;
};

namespace detail {

// One residual + denoising update. With no fixed lambda the empirical
// ||r||/sqrt(m) estimate is used. lambda_used receives the value fed to the
// denoiser.
inline AmpState amp_step_impl(const AmpState& s, const LinearSystem& sys,
                              const Denoiser& d, std::optional<double> lambda,
                              const AmpOptions& opts, double* lambda_used) {
  if (s.x.size() != sys.n || s.r_prev.size() != sys.m)
    throw DimensionError("amp_step: state does not match the linear system");
  if (lambda && !(*lambda > 0.0)) throw ParameterError("amp_step: lambda must be > 0");

  // r^t = y - A x^t + r^{t-1} (div g_{t-1}) / m; exactly zero correction at t=0.
  Vector r = sys.y - sys.A * s.x;
  if (opts.onsager && s.div_prev != 0.0)
    r.noalias() += s.r_prev * (s.div_prev / static_cast<double>(sys.m));

  const double lam =
      lambda ? *lambda : r.norm() / std::sqrt(static_cast<double>(sys.m));
  if (!(lam > 0.0))
    throw NumericError("amp_step: empirical lambda collapsed to 0 at iteration " +
                       std::to_string(s.t));
  if (lambda_used) *lambda_used = lam;

  AmpState next;
  next.pseudo = s.x + sys.A.transpose() * r;
  const DenoiseResult res = apply_denoiser(d, next.pseudo, sys.side_info, lam);
  next.t = s.t + 1;
  next.x = res.estimate;
  next.r_prev = std::move(r);
  next.div_prev = res.divergence;

  if (!next.x.allFinite() || !next.r_prev.allFinite())
    throw NumericError("amp iteration " + std::to_string(s.t) +
                       " produced non-finite values");
  return next;
}

}  // namespace detail

inline AmpState amp_step(const AmpState& s, const LinearSystem& sys, const Denoiser& d,
                         double lambda, const AmpOptions& opts = {}) {
  return detail::amp_step_impl(s, sys, d, lambda, opts, nullptr);
}

// x^t + A^T r^t for the most recent residual (cached by the last step).
inline Vector pseudo_data(const AmpState& s, const LinearSystem& sys) {
  if (s.pseudo.size() > 0) return s.pseudo;
  return s.x + sys.A.transpose() * s.r_prev;
}

// Runs T iterations, feeding lambda_t from the SE path (or the empirical
// estimate) into the denoiser, and records per-iteration diagnostics.
inline Trajectory run_amp(const LinearSystem& sys, const Denoiser& d,
                          const SePath& lambdas, int T, const AmpOptions& opts = {}) {
  if (T < 1) throw ConfigError("run_amp: T must be >= 1");
  if (opts.lambda_mode == LambdaMode::SePath &&
      lambdas.lambda_sq.size() < static_cast<std::size_t>(T))
    throw ConfigError("run_amp: SE path has " +
                      std::to_string(lambdas.lambda_sq.size()) + " entries, need " +
                      std::to_string(T));

  Trajectory traj;
  traj.reserve(static_cast<std::size_t>(T));
  AmpState state = initial_state(sys);
  const double inv_n = 1.0 / static_cast<double>(sys.n);
  double prev_lambda_sq = 0.0;

  for (int t = 0; t < T; ++t) {
    std::optional<double> lam;
    if (opts.lambda_mode == LambdaMode::SePath)
      lam = std::sqrt(lambdas.lambda_sq[static_cast<std::size_t>(t)]);
    double lambda_used = 0.0;
    state = detail::amp_step_impl(state, sys, d, lam, opts, &lambda_used);

    IterationRecord rec;
    rec.iter = t + 1;
    rec.mse_estimate = (state.x - sys.x_true).squaredNorm() * inv_n;
    rec.mse_pseudo = (state.pseudo - sys.x_true).squaredNorm() * inv_n;
    rec.lambda_used = lambda_used;
    traj.push_back(rec);

    const double lam_sq = lambda_used * lambda_used;
    if (opts.early_stop && t > 0 &&
        std::abs(lam_sq - prev_lambda_sq) < opts.early_stop_rel_tol * prev_lambda_sq)
      break;
    prev_lambda_sq = lam_sq;
  }
  return traj;
}

}  // namespace ampsi
