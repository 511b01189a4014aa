#include "countewa/theory.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "countewa/errors.hpp"
#include "countewa/model.hpp"
#include "countewa/random.hpp"
#include "countewa/simulate.hpp"
#include "parallel.hpp"

namespace countewa {

namespace {

double log_sum_exp(const Vector& v) {
  const double m = v.maxCoeff();
  if (!std::isfinite(m)) return m;
  return m + std::log((v.array() - m).exp().sum());
}

// Normalized exp(log_w) with -inf entries mapped to 0.
Vector normalize_log_weights(const Vector& log_w) {
  const double lse = log_sum_exp(log_w);
  return (log_w.array() - lse).exp();
}

Vector log_prior_weights(const Vector& pi) {
  return pi.unaryExpr([](double p) {
    return p > 0.0 ? std::log(p) : -std::numeric_limits<double>::infinity();
  });
}

// Random probability vectors supported on {k : pi_k > 0}, cycling through
// three families so that both far-away and nearby competitors are tried.
class CompetitorSampler {
 public:
  CompetitorSampler(const Vector& pi, const Vector& optimum, std::uint64_t seed)
      : pi_(pi), optimum_(optimum), rng_(seed) {
    for (Eigen::Index k = 0; k < pi.size(); ++k) {
      if (pi[k] > 0.0) support_.push_back(k);
    }
  }

  Vector next() {
    const std::size_t kind = counter_++ % 3;
    Vector q = Vector::Zero(pi_.size());
    std::exponential_distribution<double> expo(1.0);
    if (kind == 0) {
      for (const auto k : support_) q[k] = expo(rng_);
    } else if (kind == 1) {
      const std::size_t m = std::min<std::size_t>(support_.size(), 1 + rng_() % 10);
      for (std::size_t t = 0; t < m; ++t) {
        q[support_[static_cast<std::size_t>(rng_() % support_.size())]] += expo(rng_);
      }
    } else {
      std::normal_distribution<double> normal(0.0, 1.0);
      const double eps = std::pow(10.0, -1.0 - static_cast<double>(rng_() % 6));
      for (const auto k : support_) q[k] = optimum_[k] * std::exp(eps * normal(rng_));
    }
    return q / q.sum();
  }

 private:
  const Vector& pi_;
  const Vector& optimum_;
  Rng rng_;
  std::vector<Eigen::Index> support_;
  std::size_t counter_ = 0;
};

void check_lengths(const FiniteGrid& grid, const Vector& v, const char* what) {
  grid.validate();
  if (static_cast<std::size_t>(v.size()) != grid.size()) {
    throw ContractViolation(std::string(what) + " length does not match the grid");
  }
}

}  // namespace

void FiniteGrid::validate() const {
  if (prior_weights.size() == 0) throw ContractViolation("finite grid is empty");
  if (!points.empty() && points.size() != size()) {
    throw ContractViolation("grid points and prior weights differ in length");
  }
  if ((prior_weights.array() < 0.0).any() || !prior_weights.allFinite()) {
    throw ContractViolation("prior weights must be finite and nonnegative");
  }
  if (std::abs(prior_weights.sum() - 1.0) > 1e-12) {
    throw ContractViolation("prior weights must sum to 1");
  }
}

double kl_divergence(const Vector& rho, const Vector& pi) {
  if (rho.size() != pi.size()) throw ContractViolation("KL arguments differ in length");
  double acc = 0.0;
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    if (rho[k] <= 0.0) continue;
    if (pi[k] <= 0.0) return std::numeric_limits<double>::infinity();
    acc += rho[k] * std::log(rho[k] / pi[k]);
  }
  return acc;
}

double variational_objective(const Vector& h, const Vector& rho, const Vector& pi) {
  double expectation = 0.0;
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    if (rho[k] > 0.0) expectation += rho[k] * h[k];
  }
  return expectation - kl_divergence(rho, pi);
}

DvReport dv_check(const FiniteGrid& grid, const Vector& h) {
  check_lengths(grid, h, "h");
  const Vector log_w = log_prior_weights(grid.prior_weights) + h;
  DvReport r;
  r.lhs = log_sum_exp(log_w);
  r.gibbs_weights = normalize_log_weights(log_w);
  r.rhs = variational_objective(h, r.gibbs_weights, grid.prior_weights);
  r.gibbs_objective = -r.rhs;
  r.gap = std::abs(r.lhs - r.rhs);
  return r;
}

bool dv_sup_check(const FiniteGrid& grid, const Vector& h, std::uint64_t seed,
                  std::size_t trials, double tol) {
  const DvReport r = dv_check(grid, h);
  CompetitorSampler sampler(grid.prior_weights, r.gibbs_weights, seed);
  for (std::size_t t = 0; t < trials; ++t) {
    if (variational_objective(h, sampler.next(), grid.prior_weights) > r.rhs + tol) return false;
  }
  return true;
}

Vector gibbs_weights(const Vector& prior, const Vector& risks, double lambda) {
  if (prior.size() != risks.size()) throw ContractViolation("prior and risks differ in length");
  if (!(lambda >= 0.0)) throw ContractViolation("lambda must be nonnegative");
  return normalize_log_weights(log_prior_weights(prior) - lambda * risks);
}

double gibbs_free_energy(const Vector& prior, const Vector& risks, double lambda,
                         const Vector& rho) {
  double expectation = 0.0;
  for (Eigen::Index k = 0; k < rho.size(); ++k) {
    if (rho[k] > 0.0) expectation += rho[k] * risks[k];
  }
  return lambda * expectation + kl_divergence(rho, prior);
}

bool gibbs_minimizer_check(const FiniteGrid& grid, const Vector& risks, double lambda,
                           std::uint64_t seed, std::size_t trials, double tol) {
  check_lengths(grid, risks, "risks");
  const Vector rho = gibbs_weights(grid.prior_weights, risks, lambda);
  const double best = gibbs_free_energy(grid.prior_weights, risks, lambda, rho);
  CompetitorSampler sampler(grid.prior_weights, rho, seed);
  for (std::size_t t = 0; t < trials; ++t) {
    const double other = gibbs_free_energy(grid.prior_weights, risks, lambda, sampler.next());
    if (best > other + tol) return false;
  }
  return true;
}

GibbsConfig TuningRule::gibbs_for(std::size_t n, std::size_t d) const {
  GibbsConfig g;
  const double nn = static_cast<double>(n);
  const double sigma = 1.0 / (nn * std::sqrt(static_cast<double>(d)));
  switch (kind) {
    case Kind::paper_slow:
      g.lambda = std::sqrt(nn);
      g.varsigma = sigma;
      break;
    case Kind::paper_fast:
      g.lambda = fast_constant * nn;
      g.varsigma = sigma;
      break;
    case Kind::fixed:
      g.lambda = lambda;
      g.varsigma = varsigma;
      break;
  }
  return g;
}

TuningRule TuningRule::parse(const std::string& name) {
  TuningRule t;
  if (name == "paper_slow") {
    t.kind = Kind::paper_slow;
  } else if (name == "paper_fast") {
    t.kind = Kind::paper_fast;
  } else if (name == "fixed") {
    t.kind = Kind::fixed;
  } else {
    throw ValidationError("unknown tuning rule '" + name +
                          "' (expected paper_slow|paper_fast|fixed)");
  }
  return t;
}

std::string TuningRule::name() const {
  switch (kind) {
    case Kind::paper_slow:
      return "paper_slow";
    case Kind::paper_fast:
      return "paper_fast";
    case Kind::fixed:
      return "fixed";
  }
  return "unknown";
}

std::size_t RateStudySpec::d_for(std::size_t n) const {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(d_per_n * static_cast<double>(n))));
}

void RateStudySpec::validate() const {
  if (n_values.empty()) throw ValidationError("rate study needs at least one n");
  for (std::size_t i = 1; i < n_values.size(); ++i) {
    if (n_values[i] <= n_values[i - 1]) {
      throw ValidationError("rate study n_values must be strictly increasing");
    }
  }
  if (n_values.front() < lasso.k_folds) throw ValidationError("rate study n below k_folds");
  if (replications < 1) throw ValidationError("rate study needs replications >= 1");
  if (mc_risk_samples < 2) throw ValidationError("rate study needs mc_risk_samples >= 2");
  if (!(d_per_n > 0.0)) throw ValidationError("rate study d_per_n must be positive");
  if (family.kind == Family::Kind::negbin && !(family.alpha > 0.0)) {
    throw ValidationError("negbin family needs alpha > 0");
  }
  chain.validate();
  lasso.validate();
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) return std::numeric_limits<double>::quiet_NaN();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double k = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (k * sxy - sx * sy) / (k * sxx - sx * sx);
}

RateTable run_rate_study(const RateStudySpec& spec, std::uint64_t seed) {
  spec.validate();
  RateTable table;
  std::vector<double> ns, means;
  for (const std::size_t n : spec.n_values) {
    const std::size_t d = spec.d_for(n);
    const GibbsConfig gibbs = spec.tuning.gibbs_for(n, d);
    const std::uint64_t n_seed = derive_seed(seed, n);

    struct Outcome {
      double excess = 0.0;
      double mc_se = 0.0;
      bool diverged = false;
    };
    std::vector<Outcome> out(spec.replications);
    detail::parallel_for(spec.replications, spec.threads, [&](std::size_t r) {
      const std::uint64_t rep_seed = derive_seed(n_seed, r);
      const auto sim = simulate_dataset(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d),
                                        spec.s_star, spec.family, false, derive_seed(rep_seed, 1));
      Theta init = Theta::Zero(static_cast<Eigen::Index>(d));
      if (spec.init == InitPolicy::lasso) {
        LassoConfig lc = spec.lasso;
        lc.seed = derive_seed(rep_seed, 2);
        init = fold_intercept(cv_select(sim.data, lc), sim.data);
      }
      ChainConfig cc = spec.chain;
      cc.seed = derive_seed(rep_seed, 3);
      const ChainResult fit = fit_ewa(sim.data, gibbs, cc, init, Method::mala);
      if (fit.diverged) {
        out[r].diverged = true;
        return;
      }
      const auto est = excess_risk_mc(fit.posterior_mean, sim.model, spec.mc_risk_samples,
                                      derive_seed(rep_seed, 4), gibbs.eta_cap);
      out[r] = {est.mean, est.std_error, false};
    });

    RateRow row;
    row.n = n;
    row.d = d;
    std::vector<double> vals;
    double mc_se = 0.0;
    for (const auto& o : out) {
      if (o.diverged) {
        ++row.diverged;
        continue;
      }
      vals.push_back(o.excess);
      mc_se += o.mc_se;
    }
    if (vals.empty()) {
      row.mean_excess = row.sd = row.std_error = row.mc_std_error =
          std::numeric_limits<double>::quiet_NaN();
    } else {
      const double k = static_cast<double>(vals.size());
      row.mean_excess = std::accumulate(vals.begin(), vals.end(), 0.0) / k;
      double ss = 0.0;
      for (const double v : vals) ss += (v - row.mean_excess) * (v - row.mean_excess);
      row.sd = vals.size() > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
      row.std_error = row.sd / std::sqrt(k);
      row.mc_std_error = mc_se / k;
    }
    ns.push_back(static_cast<double>(n));
    means.push_back(row.mean_excess);
    row.slope_so_far = loglog_slope(ns, means);
    table.rows.push_back(row);
  }
  table.slope = loglog_slope(ns, means);
  return table;
}

}  // namespace countewa
