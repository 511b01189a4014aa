#include "countewa/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "countewa/errors.hpp"
#include "countewa/random.hpp"

namespace countewa {

namespace {

constexpr double kEtaCap = 50.0;
constexpr double kWeightFloor = 1e-5;
constexpr double kSpreadFloor = 1e-12;
constexpr std::size_t kMaxHalvings = 40;

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

Vector mean_of_exp(const Vector& eta) {
  return eta.unaryExpr([](double e) { return std::exp(std::clamp(e, -kEtaCap, kEtaCap)); });
}

// Centering and scaling of the design columns. Columns whose spread is zero
// are dropped (coefficient pinned at 0).
struct Standardizer {
  Vector center;
  Vector scale;  // s_j, multiplies |beta_j| in the penalty
  std::vector<bool> active;

  Standardizer(const Matrix& x, const LassoConfig& cfg) {
    const auto n = static_cast<double>(x.rows());
    const auto d = x.cols();
    center = Vector::Zero(d);
    scale = Vector::Zero(d);
    active.assign(static_cast<std::size_t>(d), false);
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto col = x.col(j);
      const double c = cfg.intercept ? col.mean() : 0.0;
      const double spread = std::sqrt((col.array() - c).square().sum() / n);
      if (spread <= kSpreadFloor) continue;
      center[j] = c;
      scale[j] = cfg.standardize ? spread : 1.0;
      active[static_cast<std::size_t>(j)] = true;
    }
  }

  bool any_active() const { return std::find(active.begin(), active.end(), true) != active.end(); }

  Matrix transform(const Matrix& x) const {
    Matrix xt = Matrix::Zero(x.rows(), x.cols());
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      if (!active[static_cast<std::size_t>(j)]) continue;
      xt.col(j) = (x.col(j).array() - center[j]) / scale[j];
    }
    return xt;
  }
};

double null_mean(const Dataset& data, const LassoConfig& cfg) {
  return cfg.intercept ? data.y().mean() : 1.0;
}

// Fit in standardized coordinates: beta_t = s .* beta, b_t = b0 + c' beta.
struct Problem {
  const Dataset& data;
  const LassoConfig& cfg;
  Standardizer std_;
  Matrix xt;

  Problem(const Dataset& d, const LassoConfig& c) : data(d), cfg(c), std_(d.x(), c) {
    if (!std_.any_active()) throw DegenerateError("degenerate design: no column has any spread");
    xt = std_.transform(d.x());
  }

  // b_t + xt beta_t, touching only the nonzero coefficients.
  Vector linear(const Vector& beta_t, double b_t) const {
    Vector eta = Vector::Constant(xt.rows(), b_t);
    for (Eigen::Index j = 0; j < beta_t.size(); ++j) {
      if (beta_t[j] != 0.0) eta.noalias() += beta_t[j] * xt.col(j);
    }
    return eta;
  }

  double objective(const Vector& beta_t, double b_t, double lambda) const {
    const Vector eta = linear(beta_t, b_t);
    const Vector mu = mean_of_exp(eta);
    const double nll = (mu.array() - data.y().array() * eta.array()).mean();
    return nll + lambda * beta_t.lpNorm<1>();
  }
};

LassoFit solve(const Problem& p, double lambda, const std::optional<LassoFit>& warm,
               LassoTrace* trace) {
  const auto& cfg = p.cfg;
  const auto& y = p.data.y();
  const auto n = p.data.n();
  const auto d = p.data.d();
  const double inv_n = 1.0 / static_cast<double>(n);

  Vector beta = Vector::Zero(d);
  double b = 0.0;
  if (cfg.intercept) b = std::log(std::max(y.mean(), 1e-10));
  if (warm) {
    if (warm->beta.size() != d) throw ContractViolation("warm start has the wrong dimension");
    for (Eigen::Index j = 0; j < d; ++j) {
      beta[j] = p.std_.active[static_cast<std::size_t>(j)] ? warm->beta[j] * p.std_.scale[j] : 0.0;
    }
    if (cfg.intercept) b = warm->intercept_value + p.std_.center.dot(warm->beta);
  }

  Vector eta = p.linear(beta, b);
  double obj = p.objective(beta, b, lambda);

  LassoFit fit;
  fit.converged = false;
  std::vector<bool> in_set(static_cast<std::size_t>(d));
  std::vector<Eigen::Index> set;
  Vector w(n), r(n), xw2(d);

  for (std::size_t irls = 0; irls < cfg.max_irls; ++irls) {
    fit.irls_iterations = irls + 1;
    const Vector mu = mean_of_exp(eta);
    w = mu.cwiseMax(kWeightFloor);
    r = (y - mu).cwiseQuotient(w);  // z - eta
    xw2.setConstant(-1.0);          // filled when a column is first visited
    auto curvature = [&](Eigen::Index j) {
      if (xw2[j] < 0.0) xw2[j] = inv_n * (p.xt.col(j).array().square() * w.array()).sum();
      return xw2[j];
    };

    const Vector beta_old = beta;
    const double b_old = b;
    std::vector<double>* sweeps = nullptr;
    if (trace) sweeps = &trace->surrogate.emplace_back();
    auto surrogate = [&] {
      return 0.5 * inv_n * (w.array() * r.array().square()).sum() + lambda * beta.lpNorm<1>();
    };

    // One coordinate pass over the working set; returns the largest change.
    bool signs_changed = false;
    auto sweep = [&] {
      double max_delta = 0.0;
      signs_changed = false;
      for (const Eigen::Index j : set) {
        const double c = curvature(j);
        if (c <= 0.0) continue;
        const double g = inv_n * (p.xt.col(j).array() * w.array() * r.array()).sum() + c * beta[j];
        const double updated = soft_threshold(g, lambda) / c;
        const double delta = updated - beta[j];
        if (delta != 0.0) {
          if ((updated > 0.0) != (beta[j] > 0.0) || updated == 0.0 || beta[j] == 0.0) {
            signs_changed = true;
          }
          r.noalias() -= delta * p.xt.col(j);
          beta[j] = updated;
          max_delta = std::max(max_delta, std::abs(delta));
        }
      }
      if (cfg.intercept) {
        const double delta = (w.array() * r.array()).sum() / w.sum();
        b += delta;
        r.array() -= delta;
        max_delta = std::max(max_delta, std::abs(delta));
      }
      if (sweeps) sweeps->push_back(surrogate());
      return max_delta;
    };

    set.clear();
    for (Eigen::Index j = 0; j < d; ++j) {
      in_set[static_cast<std::size_t>(j)] = beta[j] != 0.0;
      if (beta[j] != 0.0) set.push_back(j);
    }
    // Coordinate descent crawls when the active columns are strongly
    // correlated. Once the sign pattern is stable the subproblem restricted
    // to it is a linear system; its solution is kept only if every sign
    // survives and the surrogate does not go up.
    auto polish = [&] {
      std::vector<Eigen::Index> nz;
      for (const Eigen::Index j : set) {
        if (beta[j] != 0.0) nz.push_back(j);
      }
      const auto k = static_cast<Eigen::Index>(nz.size());
      const Eigen::Index m = k + (cfg.intercept ? 1 : 0);
      if (m == 0) return;
      Matrix xa(n, m);
      for (Eigen::Index c = 0; c < k; ++c) xa.col(c) = p.xt.col(nz[static_cast<std::size_t>(c)]);
      if (cfg.intercept) xa.col(k).setOnes();
      const Matrix xs = w.cwiseSqrt().asDiagonal() * xa;
      Matrix gram = Matrix::Zero(m, m);
      gram.selfadjointView<Eigen::Lower>().rankUpdate(xs.transpose(), inv_n);
      Vector rhs = inv_n * (xa.transpose() * w.cwiseProduct(r));
      for (Eigen::Index c = 0; c < k; ++c) {
        rhs[c] -= lambda * (beta[nz[static_cast<std::size_t>(c)]] > 0.0 ? 1.0 : -1.0);
      }
      const Eigen::LLT<Matrix> llt(gram);
      if (llt.info() != Eigen::Success) return;
      const Vector step = llt.solve(rhs);
      if (!step.allFinite()) return;
      for (Eigen::Index c = 0; c < k; ++c) {
        const double old_b = beta[nz[static_cast<std::size_t>(c)]];
        const double new_b = old_b + step[c];
        if (new_b == 0.0 || (new_b > 0.0) != (old_b > 0.0)) return;
      }
      const double before = surrogate();
      const Vector beta_keep = beta;
      const double b_keep = b;
      const Vector r_keep = r;
      for (Eigen::Index c = 0; c < k; ++c) beta[nz[static_cast<std::size_t>(c)]] += step[c];
      if (cfg.intercept) b += step[k];
      r.noalias() -= xa * step;
      if (!(surrogate() <= before)) {
        beta = beta_keep;
        b = b_keep;
        r = r_keep;
      } else if (sweeps) {
        sweeps->push_back(surrogate());
      }
    };

    constexpr std::size_t kPolishEvery = 25;
    std::size_t n_sweeps = 0;
    while (n_sweeps < cfg.max_cd_sweeps) {
      std::size_t since_polish = 0;
      while (n_sweeps < cfg.max_cd_sweeps) {
        ++n_sweeps;
        if (sweep() < cfg.cd_tol) break;
        if ((n_sweeps == 1 || ++since_polish >= kPolishEvery) && !signs_changed) {
          polish();
          since_polish = 0;
        }
      }
      // A zero coordinate moves under coordinate descent exactly when its
      // score exceeds lambda; one product finds all of them.
      const Vector score = inv_n * (p.xt.transpose() * w.cwiseProduct(r));
      bool grew = false;
      for (Eigen::Index j = 0; j < d; ++j) {
        const auto ju = static_cast<std::size_t>(j);
        if (in_set[ju] || !p.std_.active[ju] || std::abs(score[j]) <= lambda) continue;
        in_set[ju] = true;
        set.push_back(j);
        grew = true;
      }
      if (!grew) break;
    }

    // Step-halving keeps the Poisson objective non-increasing.
    Vector new_beta = beta;
    double new_b = b;
    double new_obj = p.objective(new_beta, new_b, lambda);
    const double slack = 1e-13 * (1.0 + std::abs(obj));
    for (std::size_t h = 0; h < kMaxHalvings && !(new_obj <= obj + slack); ++h) {
      new_beta = 0.5 * (new_beta + beta_old);
      new_b = 0.5 * (new_b + b_old);
      new_obj = p.objective(new_beta, new_b, lambda);
    }
    if (!(new_obj <= obj + slack)) {
      new_beta = beta_old;
      new_b = b_old;
      new_obj = obj;
    }
    beta = new_beta;
    b = new_b;
    obj = new_obj;
    eta = p.linear(beta, b);
    if (trace) trace->objective.push_back(obj);

    const double change =
        std::max((beta - beta_old).cwiseAbs().maxCoeff(), std::abs(b - b_old));
    if (change < cfg.cd_tol) {
      fit.converged = true;
      break;
    }
  }

  fit.beta = Vector::Zero(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (p.std_.active[static_cast<std::size_t>(j)]) fit.beta[j] = beta[j] / p.std_.scale[j];
  }
  fit.intercept_value = cfg.intercept ? b - p.std_.center.dot(fit.beta) : 0.0;
  fit.lambda_selected = lambda;
  return fit;
}

std::vector<double> grid_from_max(double lambda_max, const LassoConfig& cfg) {
  if (!(lambda_max > 0.0)) throw DegenerateError("degenerate grid: lambda_max is zero");
  std::vector<double> grid(cfg.n_lambda);
  if (cfg.n_lambda == 1) {
    grid[0] = lambda_max;
    return grid;
  }
  const double lo = std::log(lambda_max * cfg.lambda_min_ratio);
  const double hi = std::log(lambda_max);
  const double step = (hi - lo) / static_cast<double>(cfg.n_lambda - 1);
  for (std::size_t k = 0; k < cfg.n_lambda; ++k) {
    grid[k] = std::exp(hi - step * static_cast<double>(k));
  }
  grid.front() = lambda_max;
  return grid;
}

Vector predict_mean(const Matrix& x, const LassoFit& fit) {
  return mean_of_exp((x * fit.beta).array() + fit.intercept_value);
}

}  // namespace

void LassoConfig::validate() const {
  if (n_lambda < 1) throw ContractViolation("lasso.n_lambda must be positive");
  if (!(lambda_min_ratio > 0.0 && lambda_min_ratio < 1.0)) {
    throw ContractViolation("lasso.lambda_min_ratio must lie in (0, 1)");
  }
  if (k_folds < 2) throw ContractViolation("lasso.k_folds must be at least 2");
  if (max_irls < 1) throw ContractViolation("lasso.max_irls must be positive");
  if (!(cd_tol > 0.0)) throw ContractViolation("lasso.cd_tol must be positive");
}

Vector penalty_scales(const Dataset& data, const LassoConfig& cfg) {
  Standardizer s(data.x(), cfg);
  return s.scale;
}

namespace {

// Largest |score| at the null model; every lambda at or above it gives beta = 0.
double null_score_max(const Problem& p) {
  const Vector resid = p.data.y().array() - null_mean(p.data, p.cfg);
  return (p.xt.transpose() * resid).cwiseAbs().maxCoeff() / static_cast<double>(p.data.n());
}

}  // namespace

std::vector<double> lambda_grid(const Dataset& data, const LassoConfig& cfg) {
  cfg.validate();
  const Problem p(data, cfg);
  return grid_from_max(null_score_max(p), cfg);
}

double poisson_lasso_objective(const Dataset& data, const Theta& beta, double intercept,
                               double lambda, const LassoConfig& cfg) {
  if (beta.size() != data.d()) throw ContractViolation("beta has the wrong dimension");
  const Vector eta = (data.x() * beta).array() + intercept;
  const Vector mu = mean_of_exp(eta);
  const double nll = (mu.array() - data.y().array() * eta.array()).mean();
  const Vector s = penalty_scales(data, cfg);
  return nll + lambda * (s.array() * beta.array().abs()).sum();
}

LassoFit fit_poisson_lasso(const Dataset& data, double lambda, const LassoConfig& cfg,
                           const std::optional<LassoFit>& warm, LassoTrace* trace) {
  cfg.validate();
  if (!(lambda > 0.0)) throw ContractViolation("lasso lambda must be positive");
  const Problem p(data, cfg);
  if (const double lmax = null_score_max(p); lmax > 0.0 && lambda >= lmax) {
    LassoFit fit;
    fit.beta = Vector::Zero(data.d());
    fit.intercept_value = cfg.intercept ? std::log(null_mean(data, cfg)) : 0.0;
    fit.lambda_selected = lambda;
    return fit;
  }
  return solve(p, lambda, warm, trace);
}

std::vector<std::size_t> assign_folds(Eigen::Index n, std::size_t k, std::uint64_t seed) {
  if (k < 2 || static_cast<Eigen::Index>(k) > n) {
    throw ContractViolation("fold count must satisfy 2 <= k <= n");
  }
  std::vector<std::size_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = order.size() - 1; i > 0; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i);
    std::swap(order[i], order[pick(rng)]);
  }
  std::vector<std::size_t> fold(order.size());
  const std::size_t total = order.size();
  for (std::size_t pos = 0; pos < total; ++pos) fold[order[pos]] = pos * k / total;
  return fold;
}

double poisson_deviance(const Vector& y, const Vector& mu) {
  if (y.size() != mu.size() || y.size() == 0) {
    throw ContractViolation("deviance needs matching nonempty vectors");
  }
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double term = y[i] > 0.0 ? y[i] * std::log(y[i] / mu[i]) : 0.0;
    acc += term - (y[i] - mu[i]);
  }
  return 2.0 * acc / static_cast<double>(y.size());
}

LassoFit cv_select(const Dataset& data, const LassoConfig& cfg) {
  cfg.validate();
  if (static_cast<Eigen::Index>(cfg.k_folds) > data.n()) {
    throw ContractViolation("cv_select needs n >= k_folds");
  }
  const std::vector<double> grid = lambda_grid(data, cfg);
  const auto folds = assign_folds(data.n(), cfg.k_folds, cfg.seed);

  const std::size_t L = grid.size();
  std::vector<std::vector<double>> dev(cfg.k_folds, std::vector<double>(L, 0.0));
  for (std::size_t f = 0; f < cfg.k_folds; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      (folds[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    }
    const Dataset tr = data.subset(train);
    const Dataset te = data.subset(test);
    std::optional<LassoFit> warm;
    std::optional<Problem> prob;
    try {
      prob.emplace(tr, cfg);
    } catch (const DegenerateError&) {
      prob.reset();
    }
    for (std::size_t l = 0; l < L; ++l) {
      LassoFit fit;
      if (prob) {
        fit = solve(*prob, grid[l], warm, nullptr);
        warm = fit;
      } else {
        // A training fold whose columns are all constant: null model.
        fit.beta = Vector::Zero(data.d());
        fit.intercept_value = cfg.intercept ? std::log(std::max(tr.y().mean(), 1e-10)) : 0.0;
      }
      dev[f][l] = poisson_deviance(te.y(), predict_mean(te.x(), fit));
    }
  }

  std::vector<CvPoint> curve(L);
  const double k = static_cast<double>(cfg.k_folds);
  for (std::size_t l = 0; l < L; ++l) {
    double mean = 0.0;
    for (std::size_t f = 0; f < cfg.k_folds; ++f) mean += dev[f][l];
    mean /= k;
    double ss = 0.0;
    for (std::size_t f = 0; f < cfg.k_folds; ++f) ss += (dev[f][l] - mean) * (dev[f][l] - mean);
    curve[l] = {grid[l], mean, std::sqrt(ss / (k - 1.0))};
  }

  std::size_t best = 0;
  for (std::size_t l = 1; l < L; ++l) {
    if (curve[l].mean_deviance < curve[best].mean_deviance) best = l;
  }
  std::size_t chosen = best;
  if (cfg.cv_rule == CvRule::one_se) {
    const double bound = curve[best].mean_deviance + curve[best].sd / std::sqrt(k);
    for (std::size_t l = 0; l <= best; ++l) {
      if (curve[l].mean_deviance <= bound) {
        chosen = l;
        break;
      }
    }
  }

  const Problem full(data, cfg);
  std::optional<LassoFit> warm;
  for (std::size_t l = 0; l <= chosen; ++l) warm = solve(full, grid[l], warm, nullptr);
  LassoFit out = std::move(*warm);
  out.lambda_selected = grid[chosen];
  out.cv_curve = std::move(curve);
  return out;
}

Theta fold_intercept(const LassoFit& fit, const Dataset& data) {
  Theta theta = fit.beta;
  if (fit.intercept_value == 0.0) return theta;
  for (Eigen::Index j = 0; j < data.d(); ++j) {
    if ((data.x().col(j).array() == 1.0).all()) {
      theta[j] += fit.intercept_value;
      return theta;
    }
  }
  throw ContractViolation("lasso intercept is nonzero but the design has no constant-one column");
}

}  // namespace countewa
