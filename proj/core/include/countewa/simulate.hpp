#pragma once

#include <cstddef>
#include <cstdint>

#include "countewa/random.hpp"
#include "countewa/types.hpp"

namespace countewa {

// s_star support coordinates chosen uniformly without replacement, nonzero
// entries iid U[-0.5, 0.5], the rest exactly zero.
Theta gen_theta_star(Eigen::Index d, std::size_t s_star, std::uint64_t seed);

// n x d matrix of iid N(0, 1) entries.
Matrix gen_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed);

// Counts with log-mean x_i'theta* (+ u_i ~ N(0,1) when model.noisy).
// Poisson: Y ~ Poisson(mu). NegBin(alpha): G ~ Gamma(shape alpha,
// rate alpha/mu), Y ~ Poisson(G), so E[Y] = mu and Var[Y] = mu + mu^2/alpha.
Vector gen_response(const Matrix& x, const TrueModel& model, std::uint64_t seed);

// One count from the family at conditional mean mu.
double draw_count(double mu, const Family& family, Rng& rng);

struct SimulatedData {
  TrueModel model;
  Dataset data;
};

// theta*, design and response from independent streams of `seed`.
SimulatedData simulate_dataset(Eigen::Index n, Eigen::Index d, std::size_t s_star,
                               const Family& family, bool noisy, std::uint64_t seed);

}  // namespace countewa
