#pragma once

#include "countewa/types.hpp"

namespace countewa {

struct MetricsReport {
  double mse = 0.0;
  double nsp = 0.0;
  double mde = 0.0;
};

// d^-1 sum_j (theta_hat_j - theta*_j)^2
double mse(const Theta& theta_hat, const Theta& theta_star);

// sum_i (y_i - exp(x_i'theta_hat))^2 / sum_i y_i^2. Throws DegenerateError
// when every response is zero.
double nsp(const Dataset& data, const Theta& theta_hat, double eta_cap = 50.0);

// n^-1 sum_i [y_i log(y_i / mu_i) - y_i + mu_i] with mu_i = exp(x_i'theta_hat)
// and y log(y / mu) = 0 at y = 0.
double mde(const Dataset& data, const Theta& theta_hat, double eta_cap = 50.0);

MetricsReport evaluate_metrics(const Dataset& data, const Theta& theta_hat,
                               const Theta& theta_star, double eta_cap = 50.0);

}  // namespace countewa
