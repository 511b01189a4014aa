#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "countewa/errors.hpp"
#include "countewa/lasso.hpp"
#include "countewa/simulate.hpp"
#include "grid_lasso.hpp"
#include "lasso_checks.hpp"
#include "newton_poisson.hpp"

using namespace countewa;

using oracle::kkt_residual;
using oracle::random_poisson;

TEST(LambdaGrid, HandComputedLambdaMax) {
  Matrix x(2, 1);
  x << 1.0, -1.0;
  Vector y(2);
  y << 2.0, 0.0;
  LassoConfig cfg;
  const auto grid = lambda_grid(Dataset(x, y), cfg);
  EXPECT_NEAR(grid.front(), 1.0, 1e-14);
  EXPECT_NEAR(grid.back(), 0.01, 1e-14);
}

TEST(LambdaGrid, LengthAndStrictlyDecreasing) {
  const auto data = random_poisson(40, 6, 1);
  LassoConfig cfg;
  cfg.n_lambda = 37;
  const auto grid = lambda_grid(data, cfg);
  ASSERT_EQ(grid.size(), 37u);
  for (std::size_t k = 1; k < grid.size(); ++k) EXPECT_LT(grid[k], grid[k - 1]);
  EXPECT_GT(grid.back(), 0.0);
}

TEST(LambdaGrid, DegenerateDesign) {
  const Dataset data(Matrix::Zero(5, 3), Vector::Ones(5) * 2.0);
  try {
    lambda_grid(data, LassoConfig{});
    FAIL() << "expected DegenerateError";
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate design"), std::string::npos);
  }
}

TEST(LambdaGrid, DegenerateGridWhenResponseMatchesNullMean) {
  // Without an intercept the null mean is exp(0) = 1.
  const auto base = random_poisson(10, 2, 3);
  const Dataset data(base.x(), Vector::Ones(10));
  try {
    lambda_grid(data, LassoConfig{});
    FAIL() << "expected DegenerateError";
  } catch (const DegenerateError& e) {
    EXPECT_NE(std::string(e.what()).find("degenerate grid"), std::string::npos);
  }
}

TEST(PoissonLasso, ZeroSolutionAtAndAboveLambdaMax) {
  const auto data = random_poisson(60, 8, 4);
  LassoConfig cfg;
  const double lmax = lambda_grid(data, cfg).front();
  for (const double f : {1.0, 1.5, 10.0}) {
    const auto fit = fit_poisson_lasso(data, lmax * f, cfg);
    EXPECT_EQ(fit.beta.cwiseAbs().maxCoeff(), 0.0) << "factor " << f;
    EXPECT_LT(kkt_residual(data, fit, lmax * f, cfg), 1e-12);
  }
  EXPECT_GT(fit_poisson_lasso(data, lmax * 0.9, cfg).beta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(PoissonLasso, ZeroSolutionAtLambdaMaxWithIntercept) {
  const auto data = random_poisson(60, 8, 14);
  LassoConfig cfg;
  cfg.intercept = true;
  const double lmax = lambda_grid(data, cfg).front();
  const auto fit = fit_poisson_lasso(data, lmax, cfg);
  EXPECT_EQ(fit.beta.cwiseAbs().maxCoeff(), 0.0);
  EXPECT_NEAR(fit.intercept_value, std::log(data.y().mean()), 1e-15);
  EXPECT_LT(kkt_residual(data, fit, lmax, cfg), 1e-12);
}

TEST(PoissonLasso, OneDimensionalGridSearch) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto data = random_poisson(30, 1, 100 + seed, 0.8);
    for (const bool standardize : {true, false}) {
      LassoConfig cfg;
      cfg.standardize = standardize;
      const double scale = penalty_scales(data, cfg)[0];
      const double lmax = lambda_grid(data, cfg).front();
      for (const double f : {0.02, 0.2, 0.6, 1.2}) {
        const double lambda = lmax * f;
        const auto fit = fit_poisson_lasso(data, lambda, cfg);
        const double ref = oracle::grid_lasso_1d(data.x().col(0), data.y(), lambda, scale);
        EXPECT_LT(std::abs(fit.beta[0] - ref), 1e-3)
            << "seed " << seed << " lambda " << lambda << " standardize " << standardize;
      }
    }
  }
}

TEST(PoissonLasso, VanishingPenaltyMatchesNewtonMle) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto data = random_poisson(50, 2, 200 + seed);
    LassoConfig cfg;
    cfg.cd_tol = 1e-12;
    cfg.max_irls = 100;
    const auto fit = fit_poisson_lasso(data, 1e-10, cfg);
    const auto mle = oracle::poisson_mle(data.x(), data.y());
    EXPECT_LT((fit.beta - mle).cwiseAbs().maxCoeff(), 1e-4) << "seed " << seed;
  }
}

TEST(PoissonLasso, KktResidualsAlongPath) {
  for (const bool intercept : {false, true}) {
    const auto data = random_poisson(80, 20, 5);
    LassoConfig cfg;
    cfg.intercept = intercept;
    const auto grid = lambda_grid(data, cfg);
    std::optional<LassoFit> warm;
    for (std::size_t k = 0; k < grid.size(); k += 9) {
      const auto fit = fit_poisson_lasso(data, grid[k], cfg, warm);
      EXPECT_TRUE(fit.converged);
      EXPECT_LT(kkt_residual(data, fit, grid[k], cfg), 1e-5)
          << "lambda " << grid[k] << " intercept " << intercept;
      warm = fit;
    }
  }
}

TEST(PoissonLasso, ObjectiveMonotoneOverIrlsAndSurrogateOverSweeps) {
  const auto data = random_poisson(60, 15, 6, 0.6);
  LassoConfig cfg;
  const auto grid = lambda_grid(data, cfg);
  for (const double lambda : {grid[5], grid[40], grid[99]}) {
    LassoTrace trace;
    fit_poisson_lasso(data, lambda, cfg, std::nullopt, &trace);
    ASSERT_FALSE(trace.objective.empty());
    for (std::size_t k = 1; k < trace.objective.size(); ++k) {
      EXPECT_LE(trace.objective[k], trace.objective[k - 1] + 1e-12);
    }
    for (const auto& sweeps : trace.surrogate) {
      for (std::size_t k = 1; k < sweeps.size(); ++k) EXPECT_LE(sweeps[k], sweeps[k - 1] + 1e-12);
    }
  }
}

TEST(PoissonLasso, WarmAndColdStartsAgree) {
  const auto data = random_poisson(70, 12, 7);
  LassoConfig cfg;
  const auto grid = lambda_grid(data, cfg);
  std::optional<LassoFit> warm;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto w = fit_poisson_lasso(data, grid[k], cfg, warm);
    warm = w;
    if (k % 11 != 0) continue;
    const auto c = fit_poisson_lasso(data, grid[k], cfg);
    EXPECT_LT((w.beta - c.beta).cwiseAbs().maxCoeff(), 1e-4) << "lambda " << grid[k];
  }
}

TEST(PoissonLasso, ObjectiveFunctionHandValue) {
  Matrix x(2, 1);
  x << 1.0, -1.0;
  Vector y(2);
  y << 2.0, 0.0;
  LassoConfig cfg;
  cfg.standardize = false;
  // (1/2)[(e^0.5 - 2*0.5) + (e^-0.5 - 0)] + 0.3 * 0.5
  const double expect = 0.5 * (std::exp(0.5) - 1.0 + std::exp(-0.5)) + 0.15;
  EXPECT_NEAR(poisson_lasso_objective(Dataset(x, y), Theta::Constant(1, 0.5), 0.0, 0.3, cfg),
              expect, 1e-14);
}

TEST(PoissonLasso, ZeroSpreadColumnsStayZero) {
  auto base = random_poisson(40, 4, 8, 0.6);
  Matrix x = base.x();
  x.col(2).setZero();
  const Dataset data(x, base.y());
  LassoConfig cfg;
  const auto fit = fit_poisson_lasso(data, lambda_grid(data, cfg).back(), cfg);
  EXPECT_EQ(fit.beta[2], 0.0);
  EXPECT_EQ(penalty_scales(data, cfg)[2], 0.0);
}

TEST(PoissonLasso, RejectsBadArguments) {
  const auto data = random_poisson(20, 3, 9);
  EXPECT_THROW(fit_poisson_lasso(data, 0.0, LassoConfig{}), ContractViolation);
  LassoFit warm;
  warm.beta = Theta::Zero(2);
  EXPECT_THROW(fit_poisson_lasso(data, 0.1, LassoConfig{}, warm), ContractViolation);
  LassoConfig bad;
  bad.k_folds = 1;
  EXPECT_THROW(bad.validate(), ContractViolation);
}

TEST(Folds, BalancedAndSeeded) {
  const auto a = assign_folds(23, 5, 42);
  const auto b = assign_folds(23, 5, 42);
  EXPECT_EQ(a, b);
  std::vector<int> counts(5, 0);
  for (const auto f : a) {
    ASSERT_LT(f, 5u);
    ++counts[f];
  }
  EXPECT_LE(*std::max_element(counts.begin(), counts.end()) -
                *std::min_element(counts.begin(), counts.end()),
            1);
  EXPECT_NE(assign_folds(23, 5, 43), a);
  EXPECT_THROW(assign_folds(3, 5, 1), ContractViolation);
}

TEST(Deviance, HandValues) {
  Vector y(3), mu(3);
  y << 0.0, 2.0, 5.0;
  mu << 1.0, 2.0, 4.0;
  const double expect = (2.0 / 3.0) * ((0.0 - (0.0 - 1.0)) + 0.0 + (5.0 * std::log(5.0 / 4.0) - 1.0));
  EXPECT_NEAR(poisson_deviance(y, mu), expect, 1e-14);
  EXPECT_EQ(poisson_deviance(y.tail(2), y.tail(2)), 0.0);
}

TEST(CvSelect, DeterministicAndOnGrid) {
  const auto data = random_poisson(60, 10, 10);
  LassoConfig cfg;
  cfg.seed = 5;
  const auto a = cv_select(data, cfg);
  const auto b = cv_select(data, cfg);
  EXPECT_EQ(a.beta, b.beta);
  EXPECT_EQ(a.lambda_selected, b.lambda_selected);
  const auto grid = lambda_grid(data, cfg);
  EXPECT_NE(std::find(grid.begin(), grid.end(), a.lambda_selected), grid.end());
  ASSERT_EQ(a.cv_curve.size(), grid.size());
  for (const auto& p : a.cv_curve) EXPECT_GE(p.sd, 0.0);
}

TEST(CvSelect, StrongSignalPicksNonNullModel) {
  const auto sim = simulate_dataset(200, 50, 5, Family::poisson(), false, 11);
  // Make the signal unambiguous.
  TrueModel strong = sim.model;
  strong.theta_star *= 2.0;
  const Dataset data(sim.data.x(), gen_response(sim.data.x(), strong, 12));
  LassoConfig cfg;
  cfg.seed = 1;
  const auto fit = cv_select(data, cfg);
  EXPECT_LT(fit.lambda_selected, lambda_grid(data, cfg).front());
  EXPECT_GT(fit.beta.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CvSelect, OneSeRuleIsSparser) {
  const auto sim = simulate_dataset(100, 30, 5, Family::poisson(), false, 13);
  LassoConfig cfg;
  const auto lmin = cv_select(sim.data, cfg);
  cfg.cv_rule = CvRule::one_se;
  const auto l1se = cv_select(sim.data, cfg);
  EXPECT_GE(l1se.lambda_selected, lmin.lambda_selected);
}

TEST(FoldIntercept, UsesConstantColumn) {
  auto base = random_poisson(50, 3, 14);
  Matrix x(50, 4);
  x << base.x(), Vector::Ones(50);
  const Dataset data(x, base.y());
  LassoConfig cfg;
  cfg.intercept = true;
  const auto fit = fit_poisson_lasso(data, 0.01, cfg);
  const Theta folded = fold_intercept(fit, data);
  const Vector eta_fit = (data.x() * fit.beta).array() + fit.intercept_value;
  EXPECT_LT((data.x() * folded - eta_fit).cwiseAbs().maxCoeff(), 1e-12);

  LassoFit no_col = fit;
  no_col.beta = fit.beta.head(3);
  EXPECT_THROW(fold_intercept(no_col, base), ContractViolation);
}
