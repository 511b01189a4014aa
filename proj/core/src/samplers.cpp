#include "countewa/samplers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "countewa/errors.hpp"
#include "countewa/random.hpp"

namespace countewa {

namespace {

constexpr double kDefaultInitialStep = 0.1;
// log-step increments per accept/reject. At adapt_target = 0.5 these are
// the x1.02 / x0.98 factors; otherwise the fixed point of the update is
// exactly adapt_target.
constexpr double kAdaptRate = 0.04;

bool finite_eval(const DensityAndGradient& e) {
  return std::isfinite(e.log_density) && e.gradient.size() > 0 && e.gradient.allFinite();
}

void check_init(const Target& target, const Theta& init) {
  if (init.size() < 1) throw ContractViolation("sampler init is empty");
  require_finite(init, "sampler init");
  if (target.l1_radius && init.lpNorm<1>() > *target.l1_radius) {
    throw ContractViolation("sampler init lies outside the l1 support");
  }
}

struct Accumulator {
  Theta sum;
  std::size_t count = 0;
  std::optional<std::vector<Theta>> trajectory;

  Accumulator(Eigen::Index d, bool store) : sum(Theta::Zero(d)) {
    if (store) trajectory.emplace();
  }
  void push(const Theta& theta) {
    sum += theta;
    ++count;
    if (trajectory) trajectory->push_back(theta);
  }
  Theta mean() const { return count ? Theta(sum / static_cast<double>(count)) : sum; }
};

double step_update(double h, bool accepted, double target_rate) {
  return accepted ? h * std::exp(kAdaptRate * (1.0 - target_rate))
                  : h * std::exp(-kAdaptRate * target_rate);
}

void project_l1(Theta& theta, double radius) {
  const double norm = theta.lpNorm<1>();
  if (norm > radius) theta *= (radius / norm) * (1.0 - 1e-12);
}

struct MalaOutcome {
  Accumulator acc;
  std::size_t accepted_after_burn_in = 0;
  std::size_t accepted_total = 0;
  double step = 0.0;
};

MalaOutcome mala_core(const Target& target, const Theta& init, double h0, bool adapt,
                      std::size_t n_iter, std::size_t adapt_until, std::size_t burn_in,
                      double adapt_target, std::uint64_t seed, bool store) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const auto d = init.size();

  MalaOutcome out{Accumulator(d, store), 0, 0, h0};
  double& h = out.step;
  Theta theta = init;
  DensityAndGradient cur = target(theta);
  if (!finite_eval(cur)) {
    throw ContractViolation("target density or gradient is not finite at the sampler init");
  }
  Theta xi(d), proposal(d);
  for (std::size_t it = 0; it < n_iter; ++it) {
    for (Eigen::Index j = 0; j < d; ++j) xi[j] = normal(rng);
    const double log_u = std::log(unif(rng));
    proposal = theta + h * cur.gradient + std::sqrt(2.0 * h) * xi;

    bool accepted = false;
    if (proposal.allFinite()) {
      DensityAndGradient prop = target(proposal);
      if (finite_eval(prop)) {
        const double fwd = (proposal - theta - h * cur.gradient).squaredNorm();
        const double rev = (theta - proposal - h * prop.gradient).squaredNorm();
        const double log_alpha =
            prop.log_density - cur.log_density - (rev - fwd) / (4.0 * h);
        if (log_u < log_alpha) {
          theta.swap(proposal);
          cur = std::move(prop);
          accepted = true;
        }
      }
    }
    if (accepted) ++out.accepted_total;
    if (adapt && it < adapt_until) h = step_update(h, accepted, adapt_target);
    if (it >= burn_in) {
      if (accepted) ++out.accepted_after_burn_in;
      out.acc.push(theta);
    }
  }
  return out;
}

double initial_step(const ChainConfig& cfg) {
  return cfg.initial_step_size.value_or(kDefaultInitialStep);
}

}  // namespace

DensityAndGradient Target::operator()(const Theta& theta) const {
  if (evaluate) return evaluate(theta);
  DensityAndGradient out;
  out.log_density = log_density(theta);
  if (std::isfinite(out.log_density)) out.gradient = gradient(theta);
  return out;
}

void ChainConfig::validate() const {
  if (n_iter < 1) throw ContractViolation("chain.n_iter must be positive");
  if (burn_in >= n_iter) throw ContractViolation("chain.burn_in must be smaller than n_iter");
  if (step_size && !(*step_size > 0.0 && std::isfinite(*step_size))) {
    throw ContractViolation("chain.step_size must be positive");
  }
  if (!(adapt_target > 0.0 && adapt_target < 1.0)) {
    throw ContractViolation("chain.adapt_target must lie in (0, 1)");
  }
  if (initial_step_size && !(*initial_step_size > 0.0 && std::isfinite(*initial_step_size))) {
    throw ContractViolation("chain.initial_step_size must be positive");
  }
}

std::string_view method_name(Method m) { return m == Method::lmc ? "LMC" : "MALA"; }

Method parse_method(std::string_view name) {
  if (name == "LMC" || name == "lmc") return Method::lmc;
  if (name == "MALA" || name == "mala") return Method::mala;
  throw ValidationError("unknown sampler '" + std::string(name) + "' (expected LMC|MALA)");
}

std::optional<double> adapt_step_size(const Target& target, const Theta& init,
                                      const ChainConfig& cfg, std::size_t iters) {
  check_init(target, init);
  if (iters == 0) return std::nullopt;
  const auto out = mala_core(target, init, initial_step(cfg), true, iters, iters, iters,
                             cfg.adapt_target, derive_seed(cfg.seed, 0x9e37), false);
  if (out.accepted_total == 0 || !(out.step > 0.0) || !std::isfinite(out.step)) {
    return std::nullopt;
  }
  return out.step;
}

ChainResult mala_run(const Target& target, const Theta& init, const ChainConfig& cfg) {
  cfg.validate();
  check_init(target, init);
  const bool adapt = !cfg.step_size.has_value();
  const double h0 = cfg.step_size.value_or(initial_step(cfg));
  auto out = mala_core(target, init, h0, adapt, cfg.n_iter, cfg.burn_in, cfg.burn_in,
                       cfg.adapt_target, cfg.seed, cfg.store_trajectory);

  ChainResult res;
  res.posterior_mean = out.acc.mean();
  res.acceptance_rate = static_cast<double>(out.accepted_after_burn_in) /
                        static_cast<double>(cfg.n_iter - cfg.burn_in);
  res.final_step_size = out.step;
  res.diverged = !res.posterior_mean.allFinite();
  res.trajectory = std::move(out.acc.trajectory);
  return res;
}

ChainResult lmc_run(const Target& target, const Theta& init, const ChainConfig& cfg) {
  cfg.validate();
  check_init(target, init);
  double h = 0.0;
  if (cfg.step_size) {
    h = *cfg.step_size;
  } else {
    h = adapt_step_size(target, init, cfg, cfg.prerun_iter).value_or(initial_step(cfg));
  }

  const auto d = init.size();
  Rng rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Theta xi(d);

  ChainResult res;
  for (std::size_t attempt = 0; attempt <= cfg.max_restarts; ++attempt) {
    Accumulator acc(d, cfg.store_trajectory);
    Theta theta = init;
    bool ok = true;
    for (std::size_t it = 0; it < cfg.n_iter; ++it) {
      const DensityAndGradient cur = target(theta);
      // Escaping into the clamp region is treated like overflow: the risk
      // gradient vanishes there and the chain would drift under the prior.
      if (!finite_eval(cur) || cur.clamped) {
        ok = false;
        break;
      }
      for (Eigen::Index j = 0; j < d; ++j) xi[j] = normal(rng);
      theta += h * cur.gradient + std::sqrt(2.0 * h) * xi;
      if (!theta.allFinite()) {
        ok = false;
        break;
      }
      if (target.l1_radius) project_l1(theta, *target.l1_radius);
      if (it >= cfg.burn_in) acc.push(theta);
    }
    if (ok) {
      res.posterior_mean = acc.mean();
      res.final_step_size = h;
      res.restarts = attempt;
      res.trajectory = std::move(acc.trajectory);
      res.diverged = !res.posterior_mean.allFinite();
      return res;
    }
    h *= 0.5;
  }
  res.posterior_mean = init;
  res.final_step_size = h;
  res.restarts = cfg.max_restarts;
  res.diverged = true;
  return res;
}

Target gibbs_target(const Dataset& data, const GibbsConfig& gibbs) {
  gibbs.validate();
  Target t;
  t.log_density = [&data, gibbs](const Theta& th) { return log_posterior(data, th, gibbs); };
  t.gradient = [&data, gibbs](const Theta& th) {
    return log_posterior_gradient(data, th, gibbs);
  };
  t.evaluate = [&data, gibbs](const Theta& th) {
    return log_posterior_and_gradient(data, th, gibbs);
  };
  if (gibbs.has_budget()) t.l1_radius = gibbs.c1;
  return t;
}

ChainResult fit_ewa(const Dataset& data, const GibbsConfig& gibbs, const ChainConfig& chain,
                    const Theta& init, Method method) {
  if (init.size() != data.d()) {
    throw ContractViolation("init has dimension " + std::to_string(init.size()) +
                            " but the design has " + std::to_string(data.d()) + " columns");
  }
  require_finite(init, "init");
  Theta start = init;
  if (gibbs.has_budget()) project_l1(start, gibbs.c1);

  ChainConfig cfg = chain;
  if (!cfg.initial_step_size) {
    cfg.initial_step_size = 1.0 / (static_cast<double>(data.n()) * static_cast<double>(data.d()));
  }
  const Target target = gibbs_target(data, gibbs);
  return method == Method::lmc ? lmc_run(target, start, cfg) : mala_run(target, start, cfg);
}

}  // namespace countewa
