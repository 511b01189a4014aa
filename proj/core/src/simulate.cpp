#include "countewa/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "countewa/errors.hpp"

namespace countewa {

namespace {

enum Stream : std::uint64_t { kThetaStream = 1, kDesignStream = 2, kResponseStream = 3 };

}  // namespace

Theta gen_theta_star(Eigen::Index d, std::size_t s_star, std::uint64_t seed) {
  if (d < 1) throw ContractViolation("gen_theta_star: d must be >= 1");
  if (s_star > static_cast<std::size_t>(d)) {
    throw ContractViolation("gen_theta_star: s_star exceeds d");
  }
  Rng rng(seed);
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(d));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  // Partial Fisher-Yates: the first s_star slots are a uniform subset.
  for (std::size_t k = 0; k < s_star; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, idx.size() - 1);
    std::swap(idx[k], idx[pick(rng)]);
  }
  std::uniform_real_distribution<double> unif(-0.5, 0.5);
  Theta theta = Theta::Zero(d);
  for (std::size_t k = 0; k < s_star; ++k) {
    double v = 0.0;
    while (v == 0.0) v = unif(rng);
    theta[idx[k]] = v;
  }
  return theta;
}

Matrix gen_design(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  if (n < 1 || d < 1) throw ContractViolation("gen_design: n and d must be >= 1");
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  // Row-major fill order so that a prefix of rows is stable in n.
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  return x;
}

double draw_count(double mu, const Family& family, Rng& rng) {
  double rate = mu;
  if (family.kind == Family::Kind::negbin) {
    std::gamma_distribution<double> gamma(family.alpha, mu / family.alpha);
    rate = gamma(rng);
  }
  if (!(rate > 0.0)) return 0.0;
  std::poisson_distribution<long long> poisson(rate);
  return static_cast<double>(poisson(rng));
}

Vector gen_response(const Matrix& x, const TrueModel& model, std::uint64_t seed) {
  model.validate();
  if (x.cols() != model.d()) {
    throw ContractViolation("gen_response: design has " + std::to_string(x.cols()) +
                            " columns but theta_star has " + std::to_string(model.d()));
  }
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Vector eta = x * model.theta_star;
  Vector y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    double log_mu = eta[i];
    if (model.noisy) log_mu += normal(rng);
    y[i] = draw_count(std::exp(log_mu), model.family, rng);
  }
  return y;
}

SimulatedData simulate_dataset(Eigen::Index n, Eigen::Index d, std::size_t s_star,
                               const Family& family, bool noisy, std::uint64_t seed) {
  TrueModel model{gen_theta_star(d, s_star, derive_seed(seed, kThetaStream)), s_star, family,
                  noisy};
  Matrix x = gen_design(n, d, derive_seed(seed, kDesignStream));
  Vector y = gen_response(x, model, derive_seed(seed, kResponseStream));
  return {std::move(model), Dataset(std::move(x), std::move(y))};
}

}  // namespace countewa
