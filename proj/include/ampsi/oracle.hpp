#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "ampsi/errors.hpp"
#include "ampsi/linear_system.hpp"

// Brute-force posterior means used to validate the closed-form denoisers.
// Nothing here shares code with denoisers.hpp: densities are evaluated from
// their definitions and combined by quadrature or exhaustive enumeration.

namespace ampsi::oracle {

namespace detail {

inline double log_normal_pdf(double x, double variance) {
  return -0.5 * std::log(2.0 * M_PI * variance) - x * x / (2.0 * variance);
}

}  // namespace detail

// Trapezoid nodes on [-half_width, half_width] in units of the prior std dev,
// weighted by the prior Gaussian density inside the integrand. The integrand
// decays like a Gaussian at both ends, where trapezoid sums converge
// spectrally, so N = 256 already leaves truncation and aliasing errors far
// below the comparison tolerances.
struct QuadratureRule {
  int nodes = 256;
  double half_width = 10.0;  // in prior std devs

  void validate() const {
    if (nodes < 64) throw ParameterError("quadrature rule needs at least 64 nodes");
    if (!(half_width > 0.0)) throw ParameterError("quadrature half-width must be > 0");
  }

  // Standardized abscissae, exactly symmetric about 0.
  std::vector<double> abscissae() const {
    validate();
    std::vector<double> t(nodes);
    const double h = 2.0 * half_width / static_cast<double>(nodes - 1);
    for (int i = 0; i < nodes / 2; ++i) {
      t[i] = -half_width + h * static_cast<double>(i);
      t[nodes - 1 - i] = -t[i];
    }
    if (nodes % 2 == 1) t[nodes / 2] = 0.0;
    return t;
  }

  std::vector<double> weights() const {
    validate();
    const double h = 2.0 * half_width / static_cast<double>(nodes - 1);
    std::vector<double> w(nodes, h);
    w.front() = 0.5 * h;
    w.back() = 0.5 * h;
    return w;
  }
};

// A rule fine enough to resolve likelihoods as narrow as min(lambda, sigma)
// against a prior of the given std dev: the node spacing is kept under 40%
// of the narrowest Gaussian scale, where the trapezoid aliasing error is
// already ~1e-100.
inline QuadratureRule rule_for_scales(double prior_sd, double lambda, double sigma,
                                      int min_nodes = 256) {
  QuadratureRule rule;
  const double narrowest = std::min({prior_sd, lambda, sigma});
  const double step_limit = narrowest / (2.5 * prior_sd);
  const int needed =
      static_cast<int>(std::ceil(2.0 * rule.half_width / step_limit)) + 1;
  rule.nodes = std::clamp(needed, min_nodes, 1 << 16);
  return rule;
}

// Priors the quadrature oracle understands: gaussian(sigma_x) or
// bernoulli_gaussian(epsilon) with a unit-variance slab and an atom at 0.
struct Prior {
  double slab_sd = 1.0;
  double slab_weight = 1.0;  // 1 - atom mass

  static Prior gaussian(double sigma_x) {
    if (!(sigma_x > 0.0)) throw ParameterError("sigma_x must be > 0");
    return Prior{sigma_x, 1.0};
  }

  static Prior bernoulli_gaussian(double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0))
      throw ParameterError("epsilon must be in (0, 1]");
    return Prior{1.0, epsilon};
  }
};

// E[X | X + lambda Z = a, X + sigma Z' = b] by numerical integration of
//   int x f(x) rho_{l2}(a - x) rho_{s2}(b - x) dx / (same without the x),
// with the atom at 0 contributing (1 - eps) rho_{l2}(a) rho_{s2}(b) to the
// denominator only. All products are formed in log space and exponentiated
// once after subtracting the running maximum; if every term underflows the
// ratio is not computable and nullopt is returned instead of 0/0.
inline std::optional<double> quad_posterior_mean(const Prior& prior, double a,
                                                 double b, double lambda,
                                                 double sigma,
                                                 const QuadratureRule& rule = {}) {
  if (!(lambda > 0.0)) throw ParameterError("lambda must be > 0");
  if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  const double l2 = lambda * lambda;
  const double s2 = sigma * sigma;

  const auto t = rule.abscissae();
  const auto w = rule.weights();
  const int n = rule.nodes;

  std::vector<double> xs(n), logs(n);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double x = prior.slab_sd * t[i];
    xs[i] = x;
    // weight * slab density * two likelihood densities, in logs
    logs[i] = std::log(w[i] * prior.slab_sd) +
              detail::log_normal_pdf(x, prior.slab_sd * prior.slab_sd) +
              detail::log_normal_pdf(a - x, l2) + detail::log_normal_pdf(b - x, s2);
    if (prior.slab_weight < 1.0) logs[i] += std::log(prior.slab_weight);
    top = std::max(top, logs[i]);
  }

  double log_atom = -std::numeric_limits<double>::infinity();
  if (prior.slab_weight < 1.0) {
    log_atom = std::log(1.0 - prior.slab_weight) + detail::log_normal_pdf(a, l2) +
               detail::log_normal_pdf(b, s2);
    top = std::max(top, log_atom);
  }

  if (!std::isfinite(top)) return std::nullopt;

  double num = 0.0, den = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = std::exp(logs[i] - top);
    num += xs[i] * p;
    den += p;
  }
  if (prior.slab_weight < 1.0) den += std::exp(log_atom - top);

  if (!(den > 0.0) || !std::isfinite(den)) return std::nullopt;
  return num / den;
}

// Exact Bayes over the K equiprobable one-hot hypotheses. Each hypothesis
// scores the full product of 2K Gaussian densities; no ratio simplifications.
inline Vector enum_block_posterior(const Eigen::Ref<const Vector>& a,
                                   const Eigen::Ref<const Vector>& b, double lambda,
                                   double sigma) {
  if (a.size() != b.size() || a.size() < 1)
    throw DimensionError("enum_block_posterior: a and b must have equal positive length");
  if (!(lambda > 0.0)) throw ParameterError("lambda must be > 0");
  if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  const Index k = a.size();
  const double l2 = lambda * lambda;
  const double s2 = sigma * sigma;

  Vector logp(k);
  for (Index hyp = 0; hyp < k; ++hyp) {
    double lp = 0.0;
    for (Index j = 0; j < k; ++j) {
      const double xj = (j == hyp) ? 1.0 : 0.0;
      lp += detail::log_normal_pdf(a[j] - xj, l2);
      lp += detail::log_normal_pdf(b[j] - xj, s2);
    }
    logp[hyp] = lp;
  }
  const double top = logp.maxCoeff();
  Vector post = (logp.array() - top).exp();
  post /= post.sum();
  return post;
}

// Exact two-point Bayes for the entrywise Bernoulli(1/K) prior:
// P(X = 1 | a, b) from density products over the hypotheses {0, 1}.
inline double enum_bernoulli_posterior(double a, double b, double lambda,
                                       double sigma, int block_size) {
  if (block_size < 1) throw ParameterError("K must be >= 1");
  if (!(lambda > 0.0)) throw ParameterError("lambda must be > 0");
  if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
  if (block_size == 1) return 1.0;
  const double l2 = lambda * lambda;
  const double s2 = sigma * sigma;
  const double p1 = 1.0 / static_cast<double>(block_size);
  const double log_one = std::log(p1) + detail::log_normal_pdf(a - 1.0, l2) +
                         detail::log_normal_pdf(b - 1.0, s2);
  const double log_zero = std::log(1.0 - p1) + detail::log_normal_pdf(a, l2) +
                          detail::log_normal_pdf(b, s2);
  const double top = std::max(log_one, log_zero);
  const double e1 = std::exp(log_one - top);
  const double e0 = std::exp(log_zero - top);
  return e1 / (e1 + e0);
}

}  // namespace ampsi::oracle
