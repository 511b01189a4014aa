#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "countewa/types.hpp"

namespace countewa {

enum class CvRule { min, one_se };

struct LassoConfig {
  std::size_t n_lambda = 100;
  double lambda_min_ratio = 0.01;
  std::size_t k_folds = 5;
  bool intercept = false;
  // Penalize standardized coefficients; results are on the original scale.
  bool standardize = true;
  std::size_t max_irls = 25;
  double cd_tol = 1e-7;
  std::size_t max_cd_sweeps = 100000;
  CvRule cv_rule = CvRule::min;
  std::uint64_t seed = 0;

  void validate() const;
};

struct CvPoint {
  double lambda = 0.0;
  double mean_deviance = 0.0;
  double sd = 0.0;
};

struct LassoFit {
  Theta beta;
  double intercept_value = 0.0;
  double lambda_selected = 0.0;
  std::vector<CvPoint> cv_curve;
  bool converged = true;
  std::size_t irls_iterations = 0;
};

// Objective values recorded while fitting, for monotonicity checks.
struct LassoTrace {
  // Penalized quadratic surrogate after every coordinate-descent sweep; one
  // inner vector per IRLS iteration.
  std::vector<std::vector<double>> surrogate;
  // Penalized Poisson objective after every IRLS iteration.
  std::vector<double> objective;
};

// Decreasing log-spaced grid from lambda_max, the largest |score| at the null
// model, down to lambda_max * lambda_min_ratio.
std::vector<double> lambda_grid(const Dataset& data, const LassoConfig& cfg);

// (1/n) sum_i [mu_i - y_i eta_i] + lambda sum_j s_j |beta_j| with
// eta = b0 + X beta, mu = exp(eta); s_j is the column scale when
// standardizing and 1 otherwise.
double poisson_lasso_objective(const Dataset& data, const Theta& beta, double intercept,
                               double lambda, const LassoConfig& cfg);

// Column scales s_j used by the penalty (0 for columns that are dropped).
Vector penalty_scales(const Dataset& data, const LassoConfig& cfg);

// Single-lambda fit by IRLS with cyclic coordinate descent on the weighted
// least-squares subproblem. `warm` supplies (beta, intercept) to start from.
LassoFit fit_poisson_lasso(const Dataset& data, double lambda, const LassoConfig& cfg,
                           const std::optional<LassoFit>& warm = std::nullopt,
                           LassoTrace* trace = nullptr);

// Seeded fold labels in [0, k): shuffle the row indices, cut contiguously.
std::vector<std::size_t> assign_folds(Eigen::Index n, std::size_t k, std::uint64_t seed);

// Mean Poisson deviance (2/n) sum [y log(y/mu) - (y - mu)], 0 log 0 = 0.
double poisson_deviance(const Vector& y, const Vector& mu);

// K-fold cross-validated lambda on the full-data grid, then a warm-started
// path refit on all rows down to the selected lambda.
LassoFit cv_select(const Dataset& data, const LassoConfig& cfg);

// Coefficients usable as a plain Theta: the intercept is folded into a
// constant-one column of the design. Throws if the intercept is nonzero and
// no such column exists.
Theta fold_intercept(const LassoFit& fit, const Dataset& data);

}  // namespace countewa
