#pragma once

#include <cstddef>
#include <cstdint>

#include "countewa/types.hpp"

namespace countewa {

// Squared-error risk of the count predictor exp(x'theta), the scaled Student
// prior pi(theta) ~ prod_j (varsigma^2 + theta_j^2)^-2 and the gradients the
// Langevin samplers consume. All densities are unnormalized.
//
// The linear predictor is clamped to [-eta_cap, eta_cap] before it is
// exponentiated. Where the clamp is active the risk is locally constant, so
// those observations contribute zero to the risk gradient.

// eta = X theta, no clamping.
Vector raw_linear_predictor(const Dataset& data, const Theta& theta);

// eta = X theta clamped to [-eta_cap, eta_cap].
Vector linear_predictor(const Dataset& data, const Theta& theta, double eta_cap);

// r_n(theta) = (1/n) sum_i (y_i - exp(eta_i))^2.
double empirical_risk(const Dataset& data, const Theta& theta, const GibbsConfig& cfg);

// (2/n) sum_i (exp(eta_i) - y_i) exp(eta_i) x_i.
Vector risk_gradient(const Dataset& data, const Theta& theta, const GibbsConfig& cfg);

// -2 sum_j log(varsigma^2 + theta_j^2); -infinity outside the l1 ball of
// radius cfg.c1.
double log_prior(const Theta& theta, const GibbsConfig& cfg);

// Component j is -4 theta_j / (varsigma^2 + theta_j^2). Throws
// ContractViolation outside the prior support.
Vector log_prior_gradient(const Theta& theta, const GibbsConfig& cfg);

// -lambda r_n(theta) + log pi(theta).
double log_posterior(const Dataset& data, const Theta& theta, const GibbsConfig& cfg);

Vector log_posterior_gradient(const Dataset& data, const Theta& theta, const GibbsConfig& cfg);

struct DensityAndGradient {
  double log_density = 0.0;
  Vector gradient;
  // Some raw linear predictor exceeded eta_cap, so the risk gradient has
  // dropped out for those rows.
  bool clamped = false;
};

// log_posterior and log_posterior_gradient sharing one pass over X. Outside
// the support the density is -infinity and the gradient is left empty.
DensityAndGradient log_posterior_and_gradient(const Dataset& data, const Theta& theta,
                                              const GibbsConfig& cfg);

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

// R(theta) = E[(Y - exp(X'theta))^2] from m fresh draws of (X, Y) under
// `model` with X ~ N(0, I_d). Deterministic given seed.
MonteCarloEstimate population_risk_mc(const Theta& theta, const TrueModel& model, std::size_t m,
                                      std::uint64_t seed, double eta_cap = 50.0);

// R(theta) - R(theta*) from m common draws; the pairing removes most of the
// response noise from the difference.
MonteCarloEstimate excess_risk_mc(const Theta& theta, const TrueModel& model, std::size_t m,
                                  std::uint64_t seed, double eta_cap = 50.0);

}  // namespace countewa
