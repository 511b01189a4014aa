#pragma once

#include <algorithm>
#include <cmath>
#include <random>

#include "countewa/lasso.hpp"

namespace oracle {

inline countewa::Dataset random_poisson(Eigen::Index n, Eigen::Index d, std::uint64_t seed, double signal = 0.4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  countewa::Matrix x(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  countewa::Theta beta = countewa::Theta::Zero(d);
  for (Eigen::Index j = 0; j < std::min<Eigen::Index>(d, 3); ++j) beta[j] = signal * (j % 2 ? -1 : 1);
  countewa::Vector y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    std::poisson_distribution<long> p(std::exp(x.row(i).dot(beta)));
    y[i] = static_cast<double>(p(rng));
  }
  return {x, y};
}

// Largest violation of the subgradient optimality conditions of
// (1/n) sum [mu - y eta] + lambda sum_j s_j |beta_j|.
inline double kkt_residual(const countewa::Dataset& data, const countewa::LassoFit& fit, double lambda,
                    const countewa::LassoConfig& cfg) {
  const countewa::Vector eta = (data.x() * fit.beta).array() + fit.intercept_value;
  const countewa::Vector mu = eta.array().exp();
  const countewa::Vector score = data.x().transpose() * (data.y() - mu) / static_cast<double>(data.n());
  const countewa::Vector s = countewa::penalty_scales(data, cfg);
  double worst = 0.0;
  for (Eigen::Index j = 0; j < data.d(); ++j) {
    const double bound = lambda * s[j];
    if (fit.beta[j] == 0.0) {
      worst = std::max(worst, std::abs(score[j]) - bound);
    } else {
      worst = std::max(worst, std::abs(score[j] - bound * (fit.beta[j] > 0 ? 1.0 : -1.0)));
    }
  }
  if (cfg.intercept) {
    worst = std::max(worst, std::abs((data.y() - mu).sum() / static_cast<double>(data.n())));
  }
  return worst;
}

}  // namespace oracle
