#pragma once

#include <Eigen/Dense>

#include <cmath>

namespace oracle {

// log sum_k w_k exp(h_k) in long double, written without the library's
// log-space helpers.
inline double log_weighted_sum_exp(const Eigen::VectorXd& w, const Eigen::VectorXd& h) {
  long double m = -HUGE_VALL;
  for (Eigen::Index k = 0; k < h.size(); ++k) {
    if (w[k] > 0) m = std::max<long double>(m, h[k]);
  }
  long double s = 0;
  for (Eigen::Index k = 0; k < h.size(); ++k) {
    if (w[k] > 0) s += static_cast<long double>(w[k]) * std::exp(static_cast<long double>(h[k]) - m);
  }
  return static_cast<double>(m + std::log(s));
}

}  // namespace oracle
