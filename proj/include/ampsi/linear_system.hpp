#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "ampsi/errors.hpp"
#include "ampsi/rng.hpp"
#include "ampsi/signal_model.hpp"

namespace ampsi {

// Dense row-major doubles; all shipped experiments fit comfortably in memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// One problem instance y = A x + w together with the side information.
struct LinearSystem {
  Matrix A;
  Vector y;
  Vector x_true;
  Vector side_info;
  Index m = 0;
  Index n = 0;
  double delta = 0.0;  // m / n exactly
  double sigma_w = 0.0;
};

// i.i.d. Gaussian entries with mean 0 and variance 1/m.
inline Matrix gen_matrix(Index m, Index n, Rng& rng) {
  if (m < 1 || n < 1)
    throw DimensionError("gen_matrix: m and n must be positive, got m=" +
                         std::to_string(m) + " n=" + std::to_string(n));
  Matrix a(m, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = scale * rng.gaussian();
  return a;
}

// Draws (x, x_tilde) with x from the model prior and x_tilde = x + N(0, sigma^2 I).
inline std::pair<Vector, Vector> gen_signal_pair(const SignalModel& model, Index n,
                                                 Rng& rng) {
  model.validate();
  if (n < 1) throw DimensionError("gen_signal_pair: n must be positive");
  Vector x(n);
  switch (model.kind) {
    case ModelKind::GaussGauss:
      for (Index i = 0; i < n; ++i) x[i] = model.sigma_x * rng.gaussian();
      break;
    case ModelKind::BernoulliGauss:
      for (Index i = 0; i < n; ++i)
        x[i] = rng.uniform() < model.epsilon ? rng.gaussian() : 0.0;
      break;
    case ModelKind::BlockSparse: {
      const Index k = model.block_size;
      if (n % k != 0)
        throw DimensionError("gen_signal_pair: n=" + std::to_string(n) +
                             " not divisible by K=" + std::to_string(k));
      x.setZero();
      for (Index start = 0; start < n; start += k)
        x[start + static_cast<Index>(rng.integer(static_cast<std::uint64_t>(k)))] = 1.0;
      break;
    }
    case ModelKind::BernoulliSep: {
      const double p = 1.0 / static_cast<double>(model.block_size);
      for (Index i = 0; i < n; ++i) x[i] = rng.uniform() < p ? 1.0 : 0.0;
      break;
    }
  }
  Vector si(n);
  for (Index i = 0; i < n; ++i) si[i] = x[i] + model.sigma * rng.gaussian();
  return {std::move(x), std::move(si)};
}

// y = A x + w with w i.i.d. N(0, sigma_w^2).
inline Vector measure(const Matrix& a, const Vector& x, double sigma_w, Rng& rng) {
  if (a.cols() != x.size())
    throw DimensionError("measure: A has " + std::to_string(a.cols()) +
                         " columns but x has length " + std::to_string(x.size()));
  if (sigma_w < 0.0) throw ParameterError("measure: sigma_w must be >= 0");
  Vector y = a * x;
  if (sigma_w > 0.0)
    for (Index i = 0; i < y.size(); ++i) y[i] += sigma_w * rng.gaussian();
  return y;
}

// Assembles a full instance from one seed, split into matrix / signal / noise
// streams so each component can be regenerated independently.
inline LinearSystem make_system(const SignalModel& model, Index n, Index m,
                                double sigma_w, std::uint64_t seed) {
  Rng rng_matrix(derive_seed(seed, stream::matrix));
  Rng rng_signal(derive_seed(seed, stream::signal));
  Rng rng_noise(derive_seed(seed, stream::noise));

  LinearSystem sys;
  sys.A = gen_matrix(m, n, rng_matrix);
  auto pair = gen_signal_pair(model, n, rng_signal);
  sys.x_true = std::move(pair.first);
  sys.side_info = std::move(pair.second);
  sys.y = measure(sys.A, sys.x_true, sigma_w, rng_noise);
  sys.m = m;
  sys.n = n;
  sys.delta = static_cast<double>(m) / static_cast<double>(n);
  sys.sigma_w = sigma_w;
  return sys;
}

}  // namespace ampsi
