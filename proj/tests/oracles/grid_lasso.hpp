#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace oracle {

// argmin over a dense grid of the 1-D objective
// (1/n) sum [exp(x b) - y x b] + lambda * scale * |b|.
inline double grid_lasso_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double lambda,
                            double scale, double lo = -5.0, double hi = 5.0, double step = 1e-4) {
  const double n = static_cast<double>(x.size());
  const double sxy = x.dot(y);
  double best_b = 0.0;
  double best_f = HUGE_VAL;
  const auto steps = static_cast<long>(std::llround((hi - lo) / step));
  for (long k = 0; k <= steps; ++k) {
    const double b = lo + static_cast<double>(k) * step;
    const double f = ((x * b).array().exp().sum() - sxy * b) / n + lambda * scale * std::abs(b);
    if (f < best_f) {
      best_f = f;
      best_b = b;
    }
  }
  return best_b;
}

}  // namespace oracle
