#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "countewa/lasso.hpp"
#include "countewa/samplers.hpp"
#include "countewa/types.hpp"

namespace countewa {

// A finite parameter set with prior weights, on which the variational
// identities can be evaluated exactly.
struct FiniteGrid {
  std::vector<Theta> points;
  Vector prior_weights;

  std::size_t size() const noexcept { return static_cast<std::size_t>(prior_weights.size()); }
  void validate() const;
};

// KL(rho || pi); +infinity when rho charges a point with zero prior weight.
double kl_divergence(const Vector& rho, const Vector& pi);

// E_rho[h] - KL(rho || pi)
double variational_objective(const Vector& h, const Vector& rho, const Vector& pi);

struct DvReport {
  double lhs = 0.0;  // log sum_k pi_k exp(h_k)
  double rhs = 0.0;  // E_rho[h] - KL(rho || pi) at the Gibbs measure
  // KL(rho || pi) - E_rho[h] at the Gibbs measure, the minimized form.
  double gibbs_objective = 0.0;
  double gap = 0.0;
  Vector gibbs_weights;
};

// Donsker-Varadhan: log E_pi[e^h] = sup_rho { E_rho[h] - KL(rho || pi) },
// attained at rho ~ pi e^h.
DvReport dv_check(const FiniteGrid& grid, const Vector& h);

// True iff the Gibbs measure's objective is >= that of `trials` random
// probability vectors (Dirichlet draws, sparse draws and small perturbations
// of the Gibbs measure itself), up to `tol`.
bool dv_sup_check(const FiniteGrid& grid, const Vector& h, std::uint64_t seed,
                  std::size_t trials = 100, double tol = 1e-10);

// rho_k ~ pi_k exp(-lambda risk_k), computed in log space.
Vector gibbs_weights(const Vector& prior, const Vector& risks, double lambda);

// lambda E_rho[risk] + KL(rho || pi)
double gibbs_free_energy(const Vector& prior, const Vector& risks, double lambda,
                         const Vector& rho);

// True iff the Gibbs weights minimize lambda E_rho[risk] + KL(rho || pi)
// against `trials` random probability vectors within `tol`.
bool gibbs_minimizer_check(const FiniteGrid& grid, const Vector& risks, double lambda,
                           std::uint64_t seed = 0, std::size_t trials = 1000, double tol = 1e-10);

struct TuningRule {
  enum class Kind { paper_slow, paper_fast, fixed };
  Kind kind = Kind::paper_slow;
  double lambda = 1.0;    // fixed only
  double varsigma = 0.1;  // fixed only
  double fast_constant = 1.0;  // paper_fast: lambda = fast_constant * n

  // (lambda, varsigma) for a problem of size n x d. The slow rule is
  // lambda = sqrt(n), the fast rule lambda = c n; both use
  // varsigma = 1 / (n sqrt(d)).
  GibbsConfig gibbs_for(std::size_t n, std::size_t d) const;
  static TuningRule parse(const std::string& name);
  std::string name() const;
};

enum class InitPolicy { lasso, zero };

struct RateStudySpec {
  Family family;
  std::size_t s_star = 3;
  std::vector<std::size_t> n_values{100, 200, 400, 800};
  double d_per_n = 2.0;  // d = round(d_per_n * n)
  std::size_t replications = 50;
  std::size_t mc_risk_samples = 20000;
  TuningRule tuning;
  // Shorter chains than the simulation study: the d = 2n sweep reaches
  // d = 1600 and the posterior mean settles well within 5000 iterations.
  ChainConfig chain = [] {
    ChainConfig c;
    c.n_iter = 5000;
    c.burn_in = 1000;
    return c;
  }();
  // Initializer only; a shorter path keeps CV cheap at large d.
  LassoConfig lasso = [] {
    LassoConfig c;
    c.lambda_min_ratio = 0.05;
    return c;
  }();
  InitPolicy init = InitPolicy::lasso;
  std::size_t threads = 1;

  std::size_t d_for(std::size_t n) const;
  void validate() const;
};

struct RateRow {
  std::size_t n = 0;
  std::size_t d = 0;
  double mean_excess = 0.0;
  double sd = 0.0;
  double std_error = 0.0;
  // Mean Monte Carlo standard error of the per-replication excess risks.
  double mc_std_error = 0.0;
  // log-log least-squares slope of mean excess risk against n over the rows
  // up to and including this one; NaN for the first row.
  double slope_so_far = 0.0;
  std::size_t diverged = 0;
};

struct RateTable {
  std::vector<RateRow> rows;
  double slope = 0.0;
};

// For each n: simulate, fit the Gibbs posterior mean by MALA, estimate
// R(theta_hat) - R(theta*) with paired Monte Carlo draws, average over
// replications. Diverged chains are excluded and counted.
RateTable run_rate_study(const RateStudySpec& spec, std::uint64_t seed);

// Least-squares slope of log(y) on log(x).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace countewa
