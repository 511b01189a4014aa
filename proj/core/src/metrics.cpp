#include "countewa/metrics.hpp"

#include <cmath>

#include "countewa/errors.hpp"
#include "countewa/model.hpp"

namespace countewa {

double mse(const Theta& theta_hat, const Theta& theta_star) {
  if (theta_hat.size() != theta_star.size() || theta_hat.size() == 0) {
    throw ContractViolation("mse needs two vectors of the same nonzero dimension");
  }
  return (theta_hat - theta_star).squaredNorm() / static_cast<double>(theta_hat.size());
}

double nsp(const Dataset& data, const Theta& theta_hat, double eta_cap) {
  const double denom = data.y().squaredNorm();
  if (!(denom > 0.0)) throw DegenerateError("nsp undefined: every response is zero");
  const Vector mu = linear_predictor(data, theta_hat, eta_cap).array().exp();
  return (data.y() - mu).squaredNorm() / denom;
}

double mde(const Dataset& data, const Theta& theta_hat, double eta_cap) {
  const Vector eta = linear_predictor(data, theta_hat, eta_cap);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const double y = data.y()[i];
    const double mu = std::exp(eta[i]);
    // y log(y / mu) written as y (log y - eta) to avoid a ratio underflow
    const double cross = y > 0.0 ? y * (std::log(y) - eta[i]) : 0.0;
    acc += cross - y + mu;
  }
  return acc / static_cast<double>(eta.size());
}

MetricsReport evaluate_metrics(const Dataset& data, const Theta& theta_hat,
                               const Theta& theta_star, double eta_cap) {
  return {mse(theta_hat, theta_star), nsp(data, theta_hat, eta_cap),
          mde(data, theta_hat, eta_cap)};
}

}  // namespace countewa
