#pragma once

#include <string>

#include "ampsi/errors.hpp"

namespace ampsi {

enum class ModelKind {
  GaussGauss,      // x_i ~ N(0, sigma_x^2)
  BernoulliGauss,  // x_i ~ eps N(0,1) + (1-eps) delta_0
  BlockSparse,     // one entry per length-K block equals 1, rest 0
  BernoulliSep,    // x_i ~ Bernoulli(1/K), entrywise independent
};

// Joint signal / side-information law. In every model the side information is
// the signal plus elementwise N(0, sigma^2).
struct SignalModel {
  ModelKind kind = ModelKind::GaussGauss;
  double sigma_x = 1.0;  // GG only: signal std dev
  double epsilon = 1.0;  // BG only: nonzero probability in (0, 1]
  int block_size = 1;    // BlockSparse / BernoulliSep: K >= 1
  double sigma = 0.1;    // SI noise std dev, all models

  static SignalModel gauss_gauss(double sigma_x, double sigma) {
    SignalModel m;
    m.kind = ModelKind::GaussGauss;
    m.sigma_x = sigma_x;
    m.sigma = sigma;
    m.validate();
    return m;
  }

  static SignalModel bernoulli_gauss(double epsilon, double sigma) {
    SignalModel m;
    m.kind = ModelKind::BernoulliGauss;
    m.epsilon = epsilon;
    m.sigma = sigma;
    m.validate();
    return m;
  }

  static SignalModel block_sparse(int block_size, double sigma) {
    SignalModel m;
    m.kind = ModelKind::BlockSparse;
    m.block_size = block_size;
    m.sigma = sigma;
    m.validate();
    return m;
  }

  static SignalModel bernoulli_sep(int block_size, double sigma) {
    SignalModel m;
    m.kind = ModelKind::BernoulliSep;
    m.block_size = block_size;
    m.sigma = sigma;
    m.validate();
    return m;
  }

  void validate() const {
    if (!(sigma > 0.0)) throw ParameterError("sigma must be > 0");
    switch (kind) {
      case ModelKind::GaussGauss:
        if (!(sigma_x > 0.0)) throw ParameterError("sigma_x must be > 0");
        break;
      case ModelKind::BernoulliGauss:
        if (!(epsilon > 0.0 && epsilon <= 1.0))
          throw ParameterError("epsilon must be in (0, 1]");
        break;
      case ModelKind::BlockSparse:
      case ModelKind::BernoulliSep:
        if (block_size < 1) throw ParameterError("K must be >= 1");
        break;
    }
  }

  // E[X^2] of a single signal entry.
  double prior_second_moment() const {
    switch (kind) {
      case ModelKind::GaussGauss:
        return sigma_x * sigma_x;
      case ModelKind::BernoulliGauss:
        return epsilon;
      case ModelKind::BlockSparse:
      case ModelKind::BernoulliSep:
        return 1.0 / static_cast<double>(block_size);
    }
    return 0.0;  // unreachable
  }

  std::string name() const {
    switch (kind) {
      case ModelKind::GaussGauss:
        return "gg";
      case ModelKind::BernoulliGauss:
        return "bg";
      case ModelKind::BlockSparse:
        return "block_sparse";
      case ModelKind::BernoulliSep:
        return "bernoulli_sep";
    }
    return "?";
  }
};

inline double prior_second_moment(const SignalModel& model) {
  return model.prior_second_moment();
}

}  // namespace ampsi
