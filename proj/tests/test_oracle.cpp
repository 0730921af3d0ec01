#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ampsi/oracle.hpp"
#include "ampsi/rng.hpp"

using namespace ampsi;
namespace ora = ampsi::oracle;

TEST_CASE("quadrature rule validation") {
  ora::QuadratureRule bad;
  bad.nodes = 32;
  REQUIRE_THROWS_AS(bad.validate(), ParameterError);

  ora::QuadratureRule rule;
  const auto t = rule.abscissae();
  const auto w = rule.weights();
  REQUIRE(t.size() == 256);
  for (std::size_t i = 0; i < t.size(); ++i) {
    REQUIRE(w[i] > 0.0);
    REQUIRE(t[i] == -t[t.size() - 1 - i]);  // symmetric about the prior mean
  }
}

TEST_CASE("gaussian oracle: odd integrand vanishes at the origin") {
  const auto v = ora::quad_posterior_mean(ora::Prior::gaussian(1.0), 0.0, 0.0, 0.5, 0.2);
  REQUIRE(v.has_value());
  REQUIRE(std::abs(*v) <= 1e-14);
}

TEST_CASE("a fully underflowed posterior is reported as not computable") {
  const auto v =
      ora::quad_posterior_mean(ora::Prior::gaussian(1.0), 1e200, 0.0, 0.1, 0.1);
  REQUIRE_FALSE(v.has_value());
}

TEST_CASE("doubling the node count moves the GG oracle by <= 1e-10") {
  ora::QuadratureRule coarse;  // 256
  ora::QuadratureRule fine;
  fine.nodes = 512;
  const auto prior = ora::Prior::gaussian(1.0);
  for (const double lambda : {0.1, 1.0})
    for (int ia = -3; ia <= 3; ++ia)
      for (int ib = -3; ib <= 3; ++ib) {
        const auto v1 =
            ora::quad_posterior_mean(prior, ia, ib, lambda, 0.2, coarse);
        const auto v2 = ora::quad_posterior_mean(prior, ia, ib, lambda, 0.2, fine);
        REQUIRE(v1.has_value());
        REQUIRE(v2.has_value());
        REQUIRE(std::abs(*v1 - *v2) <= 1e-10);
      }
}

TEST_CASE("bernoulli-gaussian oracle reduces to the gaussian prior at eps=1") {
  const auto bg = ora::Prior::bernoulli_gaussian(1.0);
  const auto gauss = ora::Prior::gaussian(1.0);
  for (int ia = -2; ia <= 2; ++ia)
    for (int ib = -2; ib <= 2; ++ib) {
      const auto v1 = ora::quad_posterior_mean(bg, ia, ib, 0.5, 0.2);
      const auto v2 = ora::quad_posterior_mean(gauss, ia, ib, 0.5, 0.2);
      REQUIRE(std::abs(*v1 - *v2) <= 1e-13);
    }
}

TEST_CASE("bernoulli-gaussian oracle stays inside a loose envelope") {
  const auto prior = ora::Prior::bernoulli_gaussian(0.2);
  for (int ia = -2; ia <= 2; ++ia)
    for (int ib = -2; ib <= 2; ++ib) {
      const auto v = ora::quad_posterior_mean(prior, ia, ib, 0.5, 0.2);
      REQUIRE(v.has_value());
      REQUIRE(std::abs(*v) <= std::abs(ia) + std::abs(ib) + 3.0);
    }
}

TEST_CASE("block enumeration posterior basics") {
  const Vector one = Vector::Constant(1, 0.7);
  const Vector ob = Vector::Constant(1, -0.3);
  const Vector p1 = ora::enum_block_posterior(one, ob, 0.5, 0.3);
  REQUIRE(p1.size() == 1);
  REQUIRE(p1[0] == 1.0);

  const Vector a = Vector::Constant(6, 0.25);
  const Vector b = Vector::Constant(6, -1.5);
  const Vector uniform = ora::enum_block_posterior(a, b, 0.5, 0.3);
  for (Index i = 0; i < 6; ++i) REQUIRE(uniform[i] == Catch::Approx(1.0 / 6).margin(1e-15));

  Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    Vector ra(8), rb(8);
    for (Index i = 0; i < 8; ++i) {
      ra[i] = 2.0 * rng.gaussian();
      rb[i] = 2.0 * rng.gaussian();
    }
    const Vector p = ora::enum_block_posterior(ra, rb, 0.4, 0.3);
    REQUIRE(std::abs(p.sum() - 1.0) <= 1e-12);
    for (Index i = 0; i < 8; ++i) REQUIRE(p[i] >= 0.0);
  }

  REQUIRE_THROWS_AS(ora::enum_block_posterior(a, b.head(3), 0.5, 0.3), DimensionError);
}

TEST_CASE("two-point bernoulli posterior basics") {
  REQUIRE(ora::enum_bernoulli_posterior(0.3, -0.2, 0.5, 0.3, 1) == 1.0);
  // K=2 with lambda == sigma at the midpoint: both hypotheses equally likely
  REQUIRE(ora::enum_bernoulli_posterior(0.5, 0.5, 0.3, 0.3, 2) ==
          Catch::Approx(0.5).margin(1e-14));
}
