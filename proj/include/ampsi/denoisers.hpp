#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "ampsi/errors.hpp"
#include "ampsi/linear_system.hpp"
#include "ampsi/signal_model.hpp"

namespace ampsi {

namespace detail {

inline void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw ParameterError(std::string(name) + " must be > 0");
}

// 1 / (1 + e^t) without overflow for large |t|.
inline double inv_one_plus_exp(double t) {
  t = std::clamp(t, -745.0, 745.0);
  if (t > 0.0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Gaussian signal, Gaussian-noise SI. Posterior mean is linear in (a, b).
// ---------------------------------------------------------------------------

inline double gg_denoise(double a, double b, double lambda, double sigma_x,
                         double sigma) {
  detail::require_positive(lambda, "lambda");
  detail::require_positive(sigma_x, "sigma_x");
  detail::require_positive(sigma, "sigma");
  const double l2 = lambda * lambda, s2 = sigma * sigma, x2 = sigma_x * sigma_x;
  const double den = x2 * (s2 + l2) + s2 * l2;
  return (x2 * s2 * a + x2 * l2 * b) / den;
}

// d/da of gg_denoise; constant in (0, 1].
inline double gg_deriv(double lambda, double sigma_x, double sigma) {
  detail::require_positive(lambda, "lambda");
  detail::require_positive(sigma_x, "sigma_x");
  detail::require_positive(sigma, "sigma");
  const double l2 = lambda * lambda, s2 = sigma * sigma, x2 = sigma_x * sigma_x;
  return x2 * s2 / (x2 * (s2 + l2) + s2 * l2);
}

// ---------------------------------------------------------------------------
// Bernoulli-Gaussian signal (slab N(0,1)), Gaussian-noise SI.
//
// eta(a, b) = f_ab / (1 + T_ab) with
//   f_ab = (s2 a + l2 b) / (s2 + l2 + s2 l2)
//   T_ab = ((1-eps)/eps) sqrt((s2 + l2 + s2 l2)/(l2 s2))
//          * exp(-(s2 a + l2 b)^2 / (2 nu)),   nu = s2 l2 (s2 + l2 + s2 l2).
// T_ab is kept in log space; the Gaussian ratio under/overflows otherwise.
// ---------------------------------------------------------------------------

namespace detail {

struct BgParts {
  double f;        // f_ab
  double df_da;    // s2 / den
  double df_db;    // l2 / den
  double post_nz;  // P(X != 0 | a, b) = 1 / (1 + T)
  double u;        // s2 a + l2 b
  double nu;       // s2 l2 den
  double s2;
  double l2;
};

inline BgParts bg_parts(double a, double b, double lambda, double epsilon,
                        double sigma) {
  require_positive(lambda, "lambda");
  require_positive(sigma, "sigma");
  if (!(epsilon > 0.0 && epsilon <= 1.0))
    throw ParameterError("epsilon must be in (0, 1]");
  BgParts p;
  p.l2 = lambda * lambda;
  p.s2 = sigma * sigma;
  const double den = p.s2 + p.l2 + p.s2 * p.l2;
  p.u = p.s2 * a + p.l2 * b;
  p.f = p.u / den;
  p.df_da = p.s2 / den;
  p.df_db = p.l2 / den;
  p.nu = p.s2 * p.l2 * den;
  if (epsilon >= 1.0) {
    p.post_nz = 1.0;  // T_ab carries a (1-eps)/eps factor
  } else {
    const double log_t = std::log((1.0 - epsilon) / epsilon) +
                         0.5 * std::log(den / (p.l2 * p.s2)) -
                         p.u * p.u / (2.0 * p.nu);
    p.post_nz = inv_one_plus_exp(log_t);
  }
  return p;
}

}  // namespace detail

inline double bg_denoise(double a, double b, double lambda, double epsilon,
                         double sigma) {
  const auto p = detail::bg_parts(a, b, lambda, epsilon, sigma);
  return p.post_nz * p.f;
}

// d/da of bg_denoise, assembled by the quotient rule on f/(1+T):
//   d eta = df/(1+T) - f dT/(1+T)^2,  dT/da = -T s2 u / nu,
// so with s = 1/(1+T) and T/(1+T)^2 = s(1-s),
//   d eta = s df + f s(1-s) s2 u / nu.
inline double bg_deriv(double a, double b, double lambda, double epsilon,
                       double sigma) {
  const auto p = detail::bg_parts(a, b, lambda, epsilon, sigma);
  const double s = p.post_nz;
  return s * p.df_da + p.f * s * (1.0 - s) * p.s2 * p.u / p.nu;
}

// ---------------------------------------------------------------------------
// Blockwise denoiser for one-hot blocks: softmax of a_i/l2 + b_i/s2.
// Shift-invariant in a and in b, so scores are max-subtracted before
// exponentiating (exact, and a_i/l2 alone can exceed 700 for small lambda).
// ---------------------------------------------------------------------------

namespace detail {

inline void block_scores(const Eigen::Ref<const Vector>& a,
                         const Eigen::Ref<const Vector>& b, double lambda,
                         double sigma, Vector& out) {
  require_positive(lambda, "lambda");
  require_positive(sigma, "sigma");
  if (a.size() != b.size() || a.size() < 1)
    throw DimensionError("block_denoise: a and b must have equal positive length");
  const double inv_l2 = 1.0 / (lambda * lambda);
  const double inv_s2 = 1.0 / (sigma * sigma);
  out = a * inv_l2 + b * inv_s2;
  const double top = out.maxCoeff();
  out = (out.array() - top).exp();
  out /= out.sum();
}

}  // namespace detail

inline Vector block_denoise(const Eigen::Ref<const Vector>& a,
                            const Eigen::Ref<const Vector>& b, double lambda,
                            double sigma) {
  Vector g;
  detail::block_scores(a, b, lambda, sigma, g);
  return g;
}

// Trace of the softmax Jacobian w.r.t. a: (1/l2) sum_i g_i (1 - g_i).
inline double block_divergence(const Eigen::Ref<const Vector>& a,
                               const Eigen::Ref<const Vector>& b, double lambda,
                               double sigma) {
  Vector g;
  detail::block_scores(a, b, lambda, sigma, g);
  const double sum = (g.array() * (1.0 - g.array())).sum();
  return sum / (lambda * lambda);
}

// ---------------------------------------------------------------------------
// Per-entry Bernoulli(1/K) approximation of the block-sparse prior.
// Normalized posterior P(X = 1 | a, b); logistic in the log likelihood ratio
//   z = -log(K-1) + (2a-1)/(2 l2) + (2b-1)/(2 s2).
// ---------------------------------------------------------------------------

inline double bernoulli_sep_denoise(double a, double b, double lambda,
                                    double sigma, int block_size) {
  detail::require_positive(lambda, "lambda");
  detail::require_positive(sigma, "sigma");
  if (block_size < 1) throw ParameterError("K must be >= 1");
  if (block_size == 1) return 1.0;  // prior is deterministically 1
  const double l2 = lambda * lambda, s2 = sigma * sigma;
  const double z = -std::log(static_cast<double>(block_size - 1)) +
                   (2.0 * a - 1.0) / (2.0 * l2) + (2.0 * b - 1.0) / (2.0 * s2);
  return detail::inv_one_plus_exp(-z);
}

inline double bernoulli_sep_deriv(double a, double b, double lambda, double sigma,
                                  int block_size) {
  if (block_size == 1) return 0.0;
  const double g = bernoulli_sep_denoise(a, b, lambda, sigma, block_size);
  return g * (1.0 - g) / (lambda * lambda);
}

// ---------------------------------------------------------------------------
// Vector interface used by the AMP loop. apply() and divergence() are pure;
// the divergence is always the analytic coordinate-sum, never finite
// differences, and is accumulated in a fixed order.
// ---------------------------------------------------------------------------

class Denoiser {
 public:
  virtual ~Denoiser() = default;

  virtual Vector apply(const Vector& pseudo, const Vector& si,
                       double lambda) const = 0;

  // sum_i d[apply]_i / d pseudo_i
  virtual double divergence(const Vector& pseudo, const Vector& si,
                            double lambda) const = 0;

 protected:
  static void check_shapes(const Vector& pseudo, const Vector& si) {
    if (pseudo.size() != si.size())
      throw DimensionError("denoiser: pseudo-data and side info lengths differ");
  }
};

class GgDenoiser final : public Denoiser {
 public:
  GgDenoiser(double sigma_x, double sigma) : sigma_x_(sigma_x), sigma_(sigma) {}

  Vector apply(const Vector& pseudo, const Vector& si, double lambda) const override {
    check_shapes(pseudo, si);
    Vector out(pseudo.size());
    for (Index i = 0; i < pseudo.size(); ++i)
      out[i] = gg_denoise(pseudo[i], si[i], lambda, sigma_x_, sigma_);
    return out;
  }

  double divergence(const Vector& pseudo, const Vector& si,
                    double lambda) const override {
    check_shapes(pseudo, si);
    return static_cast<double>(pseudo.size()) * gg_deriv(lambda, sigma_x_, sigma_);
  }

 private:
  double sigma_x_;
  double sigma_;
};

class BgDenoiser final : public Denoiser {
 public:
  BgDenoiser(double epsilon, double sigma) : epsilon_(epsilon), sigma_(sigma) {}

  Vector apply(const Vector& pseudo, const Vector& si, double lambda) const override {
    check_shapes(pseudo, si);
    Vector out(pseudo.size());
    for (Index i = 0; i < pseudo.size(); ++i)
      out[i] = bg_denoise(pseudo[i], si[i], lambda, epsilon_, sigma_);
    return out;
  }

  double divergence(const Vector& pseudo, const Vector& si,
                    double lambda) const override {
    check_shapes(pseudo, si);
    double sum = 0.0;
    for (Index i = 0; i < pseudo.size(); ++i)
      sum += bg_deriv(pseudo[i], si[i], lambda, epsilon_, sigma_);
    return sum;
  }

 private:
  double epsilon_;
  double sigma_;
};

class BlockDenoiser final : public Denoiser {
 public:
  BlockDenoiser(int block_size, double sigma)
      : block_size_(block_size), sigma_(sigma) {}

  Vector apply(const Vector& pseudo, const Vector& si, double lambda) const override {
    check_blocks(pseudo, si);
    const Index k = block_size_;
    Vector out(pseudo.size());
    for (Index start = 0; start < pseudo.size(); start += k)
      out.segment(start, k) =
          block_denoise(pseudo.segment(start, k), si.segment(start, k), lambda, sigma_);
    return out;
  }

  double divergence(const Vector& pseudo, const Vector& si,
                    double lambda) const override {
    check_blocks(pseudo, si);
    const Index k = block_size_;
    double sum = 0.0;
    for (Index start = 0; start < pseudo.size(); start += k)
      sum += block_divergence(pseudo.segment(start, k), si.segment(start, k), lambda,
                              sigma_);
    return sum;
  }

 private:
  void check_blocks(const Vector& pseudo, const Vector& si) const {
    check_shapes(pseudo, si);
    if (pseudo.size() % block_size_ != 0)
      throw DimensionError("block denoiser: n=" + std::to_string(pseudo.size()) +
                           " not divisible by K=" + std::to_string(block_size_));
  }

  Index block_size_;
  double sigma_;
};

class BernoulliSepDenoiser final : public Denoiser {
 public:
  BernoulliSepDenoiser(int block_size, double sigma)
      : block_size_(block_size), sigma_(sigma) {}

  Vector apply(const Vector& pseudo, const Vector& si, double lambda) const override {
    check_shapes(pseudo, si);
    Vector out(pseudo.size());
    for (Index i = 0; i < pseudo.size(); ++i)
      out[i] = bernoulli_sep_denoise(pseudo[i], si[i], lambda, sigma_, block_size_);
    return out;
  }

  double divergence(const Vector& pseudo, const Vector& si,
                    double lambda) const override {
    check_shapes(pseudo, si);
    double sum = 0.0;
    for (Index i = 0; i < pseudo.size(); ++i)
      sum += bernoulli_sep_deriv(pseudo[i], si[i], lambda, sigma_, block_size_);
    return sum;
  }

 private:
  int block_size_;
  double sigma_;
};

// The model's conditional (posterior-mean) denoiser.
inline std::unique_ptr<Denoiser> make_denoiser(const SignalModel& model) {
  model.validate();
  switch (model.kind) {
    case ModelKind::GaussGauss:
      return std::make_unique<GgDenoiser>(model.sigma_x, model.sigma);
    case ModelKind::BernoulliGauss:
      return std::make_unique<BgDenoiser>(model.epsilon, model.sigma);
    case ModelKind::BlockSparse:
      return std::make_unique<BlockDenoiser>(model.block_size, model.sigma);
    case ModelKind::BernoulliSep:
      return std::make_unique<BernoulliSepDenoiser>(model.block_size, model.sigma);
  }
  throw ParameterError("make_denoiser: unknown model kind");
}

struct DenoiseResult {
  Vector estimate;
  double divergence = 0.0;
};

inline DenoiseResult apply_denoiser(const Denoiser& d, const Vector& pseudo,
                                    const Vector& si, double lambda) {
  DenoiseResult r;
  r.estimate = d.apply(pseudo, si, lambda);
  r.divergence = d.divergence(pseudo, si, lambda);
  return r;
}

}  // namespace ampsi
