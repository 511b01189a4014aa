#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace countewa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Regression coefficients, one per design column.
using Theta = Eigen::VectorXd;

// Design matrix (n x d) paired with a nonnegative integer count response.
// Counts are stored as doubles; the constructor checks integrality.
class Dataset {
 public:
  Dataset(Matrix x, Vector y);

  const Matrix& x() const noexcept { return x_; }
  const Vector& y() const noexcept { return y_; }
  Eigen::Index n() const noexcept { return x_.rows(); }
  Eigen::Index d() const noexcept { return x_.cols(); }

  // Rows selected by index, in the given order.
  Dataset subset(const std::vector<Eigen::Index>& rows) const;

 private:
  Matrix x_;
  Vector y_;
};

// Inverse temperature, prior scale, l1 budget and the clamp on the linear
// predictor applied before every exponentiation.
struct GibbsConfig {
  double lambda = 1.0;
  double varsigma = 0.1;
  double c1 = std::numeric_limits<double>::infinity();
  double eta_cap = 50.0;

  bool has_budget() const noexcept { return c1 < std::numeric_limits<double>::infinity(); }
  void validate() const;
};

struct Family {
  enum class Kind { poisson, negbin };

  Kind kind = Kind::poisson;
  // Negative-binomial shape; Var(Y) = mu + mu^2 / alpha.
  double alpha = 0.0;

  static Family poisson() { return {}; }
  static Family negbin(double alpha) { return {Kind::negbin, alpha}; }

  std::string name() const;
  static Family parse(std::string_view name, double alpha);
};

// Ground truth for simulated data: theta*, its sparsity, the response
// family and whether N(0,1) noise is added to the log-mean.
struct TrueModel {
  Theta theta_star;
  std::size_t s_star = 0;
  Family family;
  bool noisy = false;

  Eigen::Index d() const noexcept { return theta_star.size(); }
  void validate() const;
};

// Throws ContractViolation unless every entry is finite.
void require_finite(const Vector& v, std::string_view what);

}  // namespace countewa
