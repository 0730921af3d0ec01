#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ampsi/denoisers.hpp"
#include "ampsi/oracle.hpp"
#include "ampsi/rng.hpp"

using namespace ampsi;
namespace ora = ampsi::oracle;

namespace {

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

template <typename F>
double central_diff(const F& f, double a) {
  const double h = 1e-5 * std::max(1.0, std::abs(a));
  return (f(a + h) - f(a - h)) / (2.0 * h);
}

}  // namespace

// ---------------------------------------------------------------------------
// GG
// ---------------------------------------------------------------------------

TEST_CASE("gg_denoise closed form") {
  REQUIRE(gg_denoise(0.0, 0.0, 0.7, 1.3, 0.4) == 0.0);

  // sigma_x=1, sigma=0.2, lambda=0.1, a=b=1
  REQUIRE(gg_denoise(1.0, 1.0, 0.1, 1.0, 0.2) == Catch::Approx(0.05 / 0.0504).epsilon(1e-14));

  // weights are symmetric in (a, b) when sigma == lambda
  REQUIRE(gg_denoise(1.7, -0.4, 0.3, 1.1, 0.3) ==
          Catch::Approx(gg_denoise(-0.4, 1.7, 0.3, 1.1, 0.3)).epsilon(1e-14));

  REQUIRE_THROWS_AS(gg_denoise(1, 1, 0.0, 1, 0.2), ParameterError);
  REQUIRE_THROWS_AS(gg_denoise(1, 1, 0.1, -1, 0.2), ParameterError);
  REQUIRE_THROWS_AS(gg_denoise(1, 1, 0.1, 1, 0.0), ParameterError);
}

TEST_CASE("gg_denoise matches the quadrature oracle") {
  double max_err = 0.0;
  for (const double lambda : {0.1, 1.0})
    for (int ia = -3; ia <= 3; ++ia)
      for (int ib = -3; ib <= 3; ++ib) {
        const auto want =
            ora::quad_posterior_mean(ora::Prior::gaussian(1.0), ia, ib, lambda, 0.2);
        REQUIRE(want.has_value());
        max_err = std::max(max_err,
                           std::abs(gg_denoise(ia, ib, lambda, 1.0, 0.2) - *want));
      }
  REQUIRE(max_err <= 1e-8);
}

TEST_CASE("gg_deriv value and limits") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double lambda = 0.05 + 2.0 * rng.uniform();
    const double sx = 0.2 + 2.0 * rng.uniform();
    const double s = 0.05 + 2.0 * rng.uniform();
    const double d = gg_deriv(lambda, sx, s);
    REQUIRE(d > 0.0);
    REQUIRE(d <= 1.0);

    const double b = rng.gaussian();
    const double fd =
        central_diff([&](double a) { return gg_denoise(a, b, lambda, sx, s); },
                     rng.gaussian());
    REQUIRE(rel_err(d, fd) <= 1e-8);
  }

  // sigma -> infinity recovers the no-SI Wiener denoiser
  const double lambda = 0.5, sx = 1.3;
  const double wiener_gain = sx * sx / (sx * sx + lambda * lambda);
  REQUIRE(std::abs(gg_deriv(lambda, sx, 1e6) - wiener_gain) <= 1e-4);
  for (double a : {-2.0, 0.4, 1.7})
    REQUIRE(std::abs(gg_denoise(a, 5.0, lambda, sx, 1e6) - wiener_gain * a) <= 1e-4);
}

TEST_CASE("gg denoiser satisfies the sampled Lipschitz bound L = 2") {
  Rng rng(5);
  const double lambda = 0.3, sx = 1.0, s = 0.2;
  for (int i = 0; i < 100000; ++i) {
    const double a1 = 3.0 * rng.gaussian(), b1 = 3.0 * rng.gaussian();
    const double a2 = 3.0 * rng.gaussian(), b2 = 3.0 * rng.gaussian();
    const double lhs = std::abs(gg_denoise(a1, b1, lambda, sx, s) -
                                gg_denoise(a2, b2, lambda, sx, s));
    const double dist = std::hypot(a1 - a2, b1 - b2);
    REQUIRE(lhs <= 2.0 * dist);
  }
}

// ---------------------------------------------------------------------------
// BG
// ---------------------------------------------------------------------------

TEST_CASE("bg_denoise special values") {
  // eps = 1: the spike weight vanishes and eta is exactly f_ab
  const double l = 0.5, s = 0.2;
  const double l2 = l * l, s2 = s * s;
  for (double a : {-1.5, 0.0, 2.0})
    for (double b : {-0.7, 0.3}) {
      const double f = (s2 * a + l2 * b) / (s2 + l2 + s2 * l2);
      REQUIRE(bg_denoise(a, b, l, 1.0, s) == Catch::Approx(f).margin(1e-15));
    }

  REQUIRE(bg_denoise(0.0, 0.0, l, 0.2, s) == 0.0);
  REQUIRE_THROWS_AS(bg_denoise(1, 1, l, 0.0, s), ParameterError);
  REQUIRE_THROWS_AS(bg_denoise(1, 1, l, 1.2, s), ParameterError);
}

TEST_CASE("bg_denoise matches the quadrature oracle") {
  double max_err = 0.0;
  for (int ia = -2; ia <= 2; ++ia)
    for (int ib = -2; ib <= 2; ++ib) {
      const auto want = ora::quad_posterior_mean(ora::Prior::bernoulli_gaussian(0.2),
                                                 ia, ib, 0.5, 0.2);
      REQUIRE(want.has_value());
      max_err = std::max(max_err, std::abs(bg_denoise(ia, ib, 0.5, 0.2, 0.2) - *want));
    }
  REQUIRE(max_err <= 1e-6);
}

TEST_CASE("bg_denoise survives extreme arguments") {
  // the Gaussian-density ratio in T_ab would overflow without the log form
  for (double a : {-500.0, -50.0, 50.0, 500.0})
    for (double b : {-500.0, 500.0}) {
      const double v = bg_denoise(a, b, 0.1, 0.05, 0.1);
      REQUIRE(std::isfinite(v));
    }
}

TEST_CASE("bg nonzero-probability matches the raw density-ratio route") {
  // second algebraic route for P(X != 0 | a, b) = 1/(1 + T):
  // T as a ratio of the spike evidence rho_{l2}(a) rho_{s2}(b) to the slab
  // evidence rho_{1+s2}(b) rho_{s2/(1+s2)+l2}(b/(1+s2) - a)
  auto log_pdf = [](double x, double var) {
    return -0.5 * std::log(2.0 * M_PI * var) - x * x / (2.0 * var);
  };
  const double eps = 0.2, lambda = 0.5, sigma = 0.2;
  const double l2 = lambda * lambda, s2 = sigma * sigma;
  Rng rng(41);
  for (int i = 0; i < 500; ++i) {
    const double a = 2.0 * rng.gaussian(), b = 2.0 * rng.gaussian();
    const double log_t = std::log((1.0 - eps) / eps) + log_pdf(a, l2) +
                         log_pdf(b, s2) - log_pdf(b, 1.0 + s2) -
                         log_pdf(b / (1.0 + s2) - a, s2 / (1.0 + s2) + l2);
    const double want = 1.0 / (1.0 + std::exp(log_t));
    const auto parts = detail::bg_parts(a, b, lambda, eps, sigma);
    REQUIRE(parts.post_nz == Catch::Approx(want).margin(1e-12));
  }
}

TEST_CASE("bg_deriv analytic form") {
  const double l = 0.5, s = 0.2;
  // eps = 1 reduces to the linear slope of f
  REQUIRE(bg_deriv(0.7, -0.3, l, 1.0, s) ==
          Catch::Approx(s * s / (s * s + l * l + s * s * l * l)).margin(1e-15));

  Rng rng(7);
  for (int i = 0; i < 2000; ++i) {
    const double a = 2.0 * rng.gaussian(), b = 2.0 * rng.gaussian();
    const double fd = central_diff(
        [&](double t) { return bg_denoise(t, b, 0.5, 0.2, 0.2); }, a);
    REQUIRE(rel_err(bg_deriv(a, b, 0.5, 0.2, 0.2), fd) <= 1e-5);
  }
}

TEST_CASE("bg_deriv respects the printed bound with lambda in place of sigma_w") {
  Rng rng(9);
  const double eps = 0.2, s = 0.2;
  for (int i = 0; i < 100000; ++i) {
    const double a = 4.0 * rng.gaussian(), b = 4.0 * rng.gaussian();
    const double lambda = 0.1 + 0.9 * rng.uniform();
    const double bound = 1.0 + 2.0 * (1.0 - eps) / (lambda * eps);
    REQUIRE(std::abs(bg_deriv(a, b, lambda, eps, s)) <= bound);
  }
}

// ---------------------------------------------------------------------------
// Block softmax
// ---------------------------------------------------------------------------

TEST_CASE("block_denoise symmetry and degenerate block") {
  const Vector a2 = Vector::Constant(2, 0.8);
  const Vector b2 = Vector::Constant(2, -0.1);
  const Vector g2 = block_denoise(a2, b2, 0.5, 0.3);
  REQUIRE(g2[0] == Catch::Approx(0.5).margin(1e-15));
  REQUIRE(g2[1] == Catch::Approx(0.5).margin(1e-15));

  const Vector g1 = block_denoise(Vector::Constant(1, 2.0), Vector::Constant(1, -1.0),
                                  0.5, 0.3);
  REQUIRE(g1[0] == 1.0);

  REQUIRE_THROWS_AS(block_denoise(a2, Vector::Zero(3), 0.5, 0.3), DimensionError);
}

TEST_CASE("block_denoise matches the enumeration oracle") {
  Rng rng(11);
  for (const int k : {2, 5, 10, 20}) {
    double max_err = 0.0;
    for (int rep = 0; rep < 200; ++rep) {
      Vector a(k), b(k);
      for (int j = 0; j < k; ++j) {
        a[j] = 2.0 * rng.gaussian();
        b[j] = 2.0 * rng.gaussian();
      }
      const Vector want = ora::enum_block_posterior(a, b, 0.4, 0.3);
      const Vector got = block_denoise(a, b, 0.4, 0.3);
      max_err = std::max(max_err, (got - want).lpNorm<Eigen::Infinity>());
    }
    INFO("K = " << k);
    REQUIRE(max_err <= 1e-12);
  }
}

TEST_CASE("block_denoise output is a shifted-invariant probability vector") {
  Rng rng(13);
  for (int rep = 0; rep < 200; ++rep) {
    // moderate scores: strict interior (0,1) before rounding can saturate it
    Vector a(8), b(8);
    for (int j = 0; j < 8; ++j) {
      a[j] = 0.8 * rng.gaussian();
      b[j] = 0.8 * rng.gaussian();
    }
    const Vector g = block_denoise(a, b, 0.6, 0.5);
    REQUIRE(std::abs(g.sum() - 1.0) <= 1e-12);
    for (int j = 0; j < 8; ++j) {
      REQUIRE(g[j] > 0.0);
      REQUIRE(g[j] < 1.0);
    }
    const double c = 10.0 * rng.gaussian();
    const Vector a_shift = a.array() + c;
    const Vector b_shift = b.array() + c;
    const Vector ga = block_denoise(a_shift, b, 0.6, 0.5);
    const Vector gb = block_denoise(a, b_shift, 0.6, 0.5);
    REQUIRE((ga - g).lpNorm<Eigen::Infinity>() <= 1e-12);
    REQUIRE((gb - g).lpNorm<Eigen::Infinity>() <= 1e-12);
  }
}

TEST_CASE("block_denoise does not overflow for tiny lambda") {
  Vector a(4), b(4);
  a << 900.0, -900.0, 10.0, 0.0;
  b << 5.0, -5.0, 0.0, 1.0;
  const Vector g = block_denoise(a, b, 0.05, 0.1);  // scores ~ 3.6e5
  REQUIRE(g.allFinite());
  REQUIRE(std::abs(g.sum() - 1.0) <= 1e-12);
}

TEST_CASE("block_divergence closed form and finite differences") {
  const double lambda = 0.5;
  REQUIRE(block_divergence(Vector::Constant(1, 0.3), Vector::Constant(1, 0.1), lambda,
                           0.3) == 0.0);

  const Vector a2 = Vector::Constant(2, 1.0);
  const Vector b2 = Vector::Constant(2, 2.0);
  REQUIRE(block_divergence(a2, b2, lambda, 0.3) ==
          Catch::Approx(0.5 / (lambda * lambda)).margin(1e-14));

  Rng rng(17);
  const int k = 10;
  for (int rep = 0; rep < 100; ++rep) {
    Vector a(k), b(k);
    for (int j = 0; j < k; ++j) {
      a[j] = 1.5 * rng.gaussian();
      b[j] = 1.5 * rng.gaussian();
    }
    const double got = block_divergence(a, b, 0.4, 0.3);
    REQUIRE(got > 0.0);
    REQUIRE(got <= k / (4.0 * 0.4 * 0.4) + 1e-12);

    double fd = 0.0;
    for (int j = 0; j < k; ++j) {
      Vector ap = a, am = a;
      const double h = 1e-5 * std::max(1.0, std::abs(a[j]));
      ap[j] += h;
      am[j] -= h;
      fd += (block_denoise(ap, b, 0.4, 0.3)[j] - block_denoise(am, b, 0.4, 0.3)[j]) /
            (2.0 * h);
    }
    REQUIRE(rel_err(got, fd) <= 1e-6);
  }
}

TEST_CASE("block denoiser satisfies the sampled vector Lipschitz bound") {
  Rng rng(19);
  const int k = 5;
  const double lambda = 0.4, sigma = 0.3;
  const double bound = std::sqrt(2.0) * k *
                       (1.0 / (lambda * lambda) + 1.0 / (sigma * sigma));
  for (int i = 0; i < 100000; ++i) {
    Vector a1(k), b1(k), a2(k), b2(k);
    for (int j = 0; j < k; ++j) {
      a1[j] = 2.0 * rng.gaussian();
      b1[j] = 2.0 * rng.gaussian();
      a2[j] = 2.0 * rng.gaussian();
      b2[j] = 2.0 * rng.gaussian();
    }
    const double lhs =
        (block_denoise(a1, b1, lambda, sigma) - block_denoise(a2, b2, lambda, sigma))
            .norm();
    const double dist = std::sqrt((a1 - a2).squaredNorm() + (b1 - b2).squaredNorm());
    REQUIRE(lhs <= bound * dist);
  }
}

// ---------------------------------------------------------------------------
// Separable Bernoulli approximation
// ---------------------------------------------------------------------------

TEST_CASE("bernoulli_sep_denoise special values") {
  REQUIRE(bernoulli_sep_denoise(3.0, -2.0, 0.5, 0.3, 1) == 1.0);
  REQUIRE(bernoulli_sep_denoise(-3.0, 2.0, 0.5, 0.3, 1) == 1.0);
  // K=2 with lambda == sigma at a = b = 1/2: equal likelihoods
  REQUIRE(bernoulli_sep_denoise(0.5, 0.5, 0.3, 0.3, 2) ==
          Catch::Approx(0.5).margin(1e-14));
  REQUIRE_THROWS_AS(bernoulli_sep_denoise(0, 0, 0.5, 0.3, 0), ParameterError);
}

TEST_CASE("bernoulli_sep_denoise matches the discrete Bayes oracle") {
  double max_err = 0.0;
  for (double a = -1.0; a <= 2.0 + 1e-9; a += 0.2)
    for (double b = -1.0; b <= 2.0 + 1e-9; b += 0.2) {
      const double want = ora::enum_bernoulli_posterior(a, b, 0.3, 0.28, 5);
      const double got = bernoulli_sep_denoise(a, b, 0.3, 0.28, 5);
      max_err = std::max(max_err, std::abs(got - want));
    }
  REQUIRE(max_err <= 1e-12);
}

TEST_CASE("bernoulli_sep_deriv matches finite differences") {
  Rng rng(23);
  for (int i = 0; i < 2000; ++i) {
    const double a = 1.5 * rng.gaussian(), b = 1.5 * rng.gaussian();
    const double fd = central_diff(
        [&](double t) { return bernoulli_sep_denoise(t, b, 0.4, 0.3, 5); }, a);
    REQUIRE(rel_err(bernoulli_sep_deriv(a, b, 0.4, 0.3, 5), fd) <= 1e-5);
  }
}

// ---------------------------------------------------------------------------
// Vector interface
// ---------------------------------------------------------------------------

TEST_CASE("apply_denoiser GG is the stated affine map") {
  const GgDenoiser d(1.0, 0.2);
  const double lambda = 0.3;
  Rng rng(29);
  Vector pseudo(16), si(16);
  for (int i = 0; i < 16; ++i) {
    pseudo[i] = rng.gaussian();
    si[i] = rng.gaussian();
  }
  const auto [estimate, divergence] = apply_denoiser(d, pseudo, si, lambda);

  const double l2 = lambda * lambda, s2 = 0.04;
  const double den = (s2 + l2) + s2 * l2;  // sigma_x = 1
  for (int i = 0; i < 16; ++i)
    REQUIRE(estimate[i] == Catch::Approx((s2 * pseudo[i] + l2 * si[i]) / den).margin(1e-15));
  REQUIRE(divergence == Catch::Approx(16.0 * gg_deriv(lambda, 1.0, 0.2)).margin(1e-12));
}

TEST_CASE("apply_denoiser divergence is the sum of per-coordinate derivatives") {
  const BgDenoiser d(0.2, 0.2);
  Rng rng(31);
  Vector pseudo(32), si(32);
  for (int i = 0; i < 32; ++i) {
    pseudo[i] = rng.gaussian();
    si[i] = rng.gaussian();
  }
  const auto res = apply_denoiser(d, pseudo, si, 0.5);
  double sum = 0.0;
  for (int i = 0; i < 32; ++i) sum += bg_deriv(pseudo[i], si[i], 0.5, 0.2, 0.2);
  REQUIRE(res.divergence == Catch::Approx(sum).margin(1e-12));
}

TEST_CASE("blockwise apply_denoiser divergence equals the Jacobian trace") {
  const int n = 20, k = 5;
  const BlockDenoiser d(k, 0.3);
  Rng rng(37);
  Vector pseudo(n), si(n);
  for (int i = 0; i < n; ++i) {
    pseudo[i] = 1.5 * rng.gaussian();
    si[i] = 1.5 * rng.gaussian();
  }
  const double lambda = 0.4;
  const auto res = apply_denoiser(d, pseudo, si, lambda);

  double trace = 0.0;
  for (int i = 0; i < n; ++i) {
    Vector pp = pseudo, pm = pseudo;
    const double h = 1e-5 * std::max(1.0, std::abs(pseudo[i]));
    pp[i] += h;
    pm[i] -= h;
    trace += (d.apply(pp, si, lambda)[i] - d.apply(pm, si, lambda)[i]) / (2.0 * h);
  }
  REQUIRE(rel_err(res.divergence, trace) <= 1e-6);

  REQUIRE_THROWS_AS(d.apply(pseudo.head(18), si.head(18), lambda), DimensionError);
}
