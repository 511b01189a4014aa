#include "countewa/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "countewa/errors.hpp"
#include "countewa/random.hpp"
#include "countewa/simulate.hpp"

namespace countewa {

namespace {

void check_dims(const Dataset& data, const Theta& theta) {
  if (theta.size() != data.d()) {
    throw ContractViolation("theta has dimension " + std::to_string(theta.size()) +
                            " but the design has " + std::to_string(data.d()) + " columns");
  }
}

bool outside_support(const Theta& theta, const GibbsConfig& cfg) {
  return cfg.has_budget() && theta.lpNorm<1>() > cfg.c1;
}

double clamp_eta(double eta, double cap) { return std::clamp(eta, -cap, cap); }

// Per-observation weights (2/n)(mu_i - y_i) mu_i, zero where the clamp is
// active, plus the empirical risk from the same predictor.
double risk_and_weights(const Dataset& data, const Vector& raw_eta, double cap, Vector* weights) {
  const auto n = data.n();
  const double inv_n = 1.0 / static_cast<double>(n);
  double sum = 0.0;
  if (weights) weights->resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double mu = std::exp(clamp_eta(raw_eta[i], cap));
    const double resid = data.y()[i] - mu;
    sum += resid * resid;
    if (weights) {
      (*weights)[i] = std::abs(raw_eta[i]) > cap ? 0.0 : -2.0 * inv_n * resid * mu;
    }
  }
  return sum * inv_n;
}

}  // namespace

Vector raw_linear_predictor(const Dataset& data, const Theta& theta) {
  check_dims(data, theta);
  return data.x() * theta;
}

Vector linear_predictor(const Dataset& data, const Theta& theta, double eta_cap) {
  if (!(eta_cap > 0.0)) throw ContractViolation("eta_cap must be positive");
  Vector eta = raw_linear_predictor(data, theta);
  for (auto& v : eta) v = clamp_eta(v, eta_cap);
  return eta;
}

double empirical_risk(const Dataset& data, const Theta& theta, const GibbsConfig& cfg) {
  return risk_and_weights(data, raw_linear_predictor(data, theta), cfg.eta_cap, nullptr);
}

Vector risk_gradient(const Dataset& data, const Theta& theta, const GibbsConfig& cfg) {
  Vector w;
  risk_and_weights(data, raw_linear_predictor(data, theta), cfg.eta_cap, &w);
  return data.x().transpose() * w;
}

double log_prior(const Theta& theta, const GibbsConfig& cfg) {
  if (outside_support(theta, cfg)) return -std::numeric_limits<double>::infinity();
  const double s2 = cfg.varsigma * cfg.varsigma;
  double acc = 0.0;
  for (const double t : theta) acc += std::log(s2 + t * t);
  return -2.0 * acc;
}

Vector log_prior_gradient(const Theta& theta, const GibbsConfig& cfg) {
  if (outside_support(theta, cfg)) {
    throw ContractViolation("log_prior_gradient evaluated outside the l1 budget");
  }
  const double s2 = cfg.varsigma * cfg.varsigma;
  return theta.unaryExpr([s2](double t) { return -4.0 * t / (s2 + t * t); });
}

double log_posterior(const Dataset& data, const Theta& theta, const GibbsConfig& cfg) {
  const double lp = log_prior(theta, cfg);
  if (!std::isfinite(lp)) return lp;
  return -cfg.lambda * empirical_risk(data, theta, cfg) + lp;
}

Vector log_posterior_gradient(const Dataset& data, const Theta& theta, const GibbsConfig& cfg) {
  Vector g = log_prior_gradient(theta, cfg);
  g.noalias() -= cfg.lambda * risk_gradient(data, theta, cfg);
  return g;
}

DensityAndGradient log_posterior_and_gradient(const Dataset& data, const Theta& theta,
                                              const GibbsConfig& cfg) {
  check_dims(data, theta);
  DensityAndGradient out;
  out.log_density = log_prior(theta, cfg);
  if (!std::isfinite(out.log_density)) return out;
  Vector w;
  const Vector eta = data.x() * theta;
  out.clamped = eta.cwiseAbs().maxCoeff() > cfg.eta_cap;
  const double risk = risk_and_weights(data, eta, cfg.eta_cap, &w);
  out.log_density -= cfg.lambda * risk;
  out.gradient = log_prior_gradient(theta, cfg);
  out.gradient.noalias() -= cfg.lambda * (data.x().transpose() * w);
  return out;
}

namespace {

// Running mean / variance (Welford) for the Monte Carlo estimators.
struct Moments {
  std::size_t count = 0;
  double mean = 0.0;
  double m2 = 0.0;

  void push(double v) {
    ++count;
    const double delta = v - mean;
    mean += delta / static_cast<double>(count);
    m2 += delta * (v - mean);
  }
  MonteCarloEstimate estimate() const {
    const double var = count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
    return {mean, std::sqrt(var / static_cast<double>(count)), count};
  }
};

template <typename F>
MonteCarloEstimate draw_population(const TrueModel& model, std::size_t m, std::uint64_t seed,
                                   F&& per_draw) {
  model.validate();
  if (m < 1) throw ContractViolation("population risk needs m >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const auto d = model.d();
  Vector x(d);
  Moments acc;
  for (std::size_t k = 0; k < m; ++k) {
    for (Eigen::Index j = 0; j < d; ++j) x[j] = normal(rng);
    double log_mu = x.dot(model.theta_star);
    if (model.noisy) log_mu += normal(rng);
    const double y = draw_count(std::exp(log_mu), model.family, rng);
    acc.push(per_draw(x, y));
  }
  return acc.estimate();
}

}  // namespace

MonteCarloEstimate population_risk_mc(const Theta& theta, const TrueModel& model, std::size_t m,
                                      std::uint64_t seed, double eta_cap) {
  if (theta.size() != model.d()) throw ContractViolation("theta / theta_star dimension mismatch");
  return draw_population(model, m, seed, [&](const Vector& x, double y) {
    const double r = y - std::exp(clamp_eta(x.dot(theta), eta_cap));
    return r * r;
  });
}

MonteCarloEstimate excess_risk_mc(const Theta& theta, const TrueModel& model, std::size_t m,
                                  std::uint64_t seed, double eta_cap) {
  if (theta.size() != model.d()) throw ContractViolation("theta / theta_star dimension mismatch");
  return draw_population(model, m, seed, [&](const Vector& x, double y) {
    const double a = std::exp(clamp_eta(x.dot(theta), eta_cap));
    const double b = std::exp(clamp_eta(x.dot(model.theta_star), eta_cap));
    // (y - a)^2 - (y - b)^2
    return (b - a) * (2.0 * y - a - b);
  });
}

}  // namespace countewa
