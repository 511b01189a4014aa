#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "countewa/model.hpp"
#include "countewa/types.hpp"

namespace countewa {

// Unnormalized log density with its gradient. `evaluate`, when set, returns
// both from one pass and is preferred by the samplers. `l1_radius` marks a
// support restricted to an l1 ball; LMC projects back onto it.
struct Target {
  std::function<double(const Theta&)> log_density;
  std::function<Vector(const Theta&)> gradient;
  std::function<DensityAndGradient(const Theta&)> evaluate;
  std::optional<double> l1_radius;

  DensityAndGradient operator()(const Theta& theta) const;
};

struct ChainConfig {
  std::size_t n_iter = 25000;
  std::size_t burn_in = 5000;
  // Empty means "auto": MALA adapts during burn-in, LMC borrows the step of a
  // short adaptive MALA pre-run.
  std::optional<double> step_size;
  double adapt_target = 0.55;
  std::uint64_t seed = 0;
  bool store_trajectory = false;
  // Starting point of the adaptation and the LMC fallback when the pre-run
  // fails. Empty means 0.1 for a bare Target; fit_ewa uses 1/(n d).
  std::optional<double> initial_step_size;
  std::size_t prerun_iter = 1000;
  std::size_t max_restarts = 10;

  void validate() const;
};

struct ChainResult {
  Theta posterior_mean;
  // Post-burn-in MALA acceptance; 1.0 for LMC.
  double acceptance_rate = 1.0;
  double final_step_size = 0.0;
  bool diverged = false;
  std::size_t restarts = 0;
  std::optional<std::vector<Theta>> trajectory;
};

enum class Method { lmc, mala };

std::string_view method_name(Method m);
Method parse_method(std::string_view name);

// theta <- theta + h grad log p(theta) + sqrt(2h) xi at a fixed step. A
// non-finite iterate (or one whose linear predictor enters the clamp
// region) halves h and restarts from init, at most
// cfg.max_restarts times; after that the result is returned flagged
// diverged.
ChainResult lmc_run(const Target& target, const Theta& init, const ChainConfig& cfg);

// Langevin proposal with a Metropolis-Hastings correction. In auto mode the
// step adapts multiplicatively during burn-in toward cfg.adapt_target and is
// frozen afterwards.
ChainResult mala_run(const Target& target, const Theta& init, const ChainConfig& cfg);

// Step size reached by `iters` fully adaptive MALA iterations from init;
// empty if the run never accepted a move.
std::optional<double> adapt_step_size(const Target& target, const Theta& init,
                                      const ChainConfig& cfg, std::size_t iters);

// log of the Gibbs posterior exp(-lambda r_n) pi, up to a constant. The
// returned Target refers to `data`, which must outlive it.
Target gibbs_target(const Dataset& data, const GibbsConfig& gibbs);

// Posterior-mean estimator of the Gibbs posterior by LMC or MALA started at
// init (the harness passes the lasso fit).
ChainResult fit_ewa(const Dataset& data, const GibbsConfig& gibbs, const ChainConfig& chain,
                    const Theta& init, Method method);

}  // namespace countewa
