#include "countewa/types.hpp"

#include <cmath>

#include "countewa/errors.hpp"

namespace countewa {

Dataset::Dataset(Matrix x, Vector y) : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() < 1 || x_.cols() < 1) {
    throw ContractViolation("dataset needs at least one row and one column");
  }
  if (x_.rows() != y_.size()) {
    throw ContractViolation("design has " + std::to_string(x_.rows()) + " rows but response has " +
                            std::to_string(y_.size()) + " entries");
  }
  if (!x_.allFinite()) throw ContractViolation("design matrix contains non-finite entries");
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    const double v = y_[i];
    if (!std::isfinite(v) || v < 0.0 || v != std::floor(v)) {
      throw ContractViolation("response entry " + std::to_string(i) +
                              " is not a nonnegative integer");
    }
  }
}

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const {
  Matrix xs(static_cast<Eigen::Index>(rows.size()), d());
  Vector ys(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t k = 0; k < rows.size(); ++k) {
    const auto i = rows[k];
    if (i < 0 || i >= n()) throw ContractViolation("subset row index out of range");
    xs.row(static_cast<Eigen::Index>(k)) = x_.row(i);
    ys[static_cast<Eigen::Index>(k)] = y_[i];
  }
  return Dataset(std::move(xs), std::move(ys));
}

void GibbsConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ContractViolation("gibbs.lambda must be positive and finite");
  }
  if (!(varsigma > 0.0) || !std::isfinite(varsigma)) {
    throw ContractViolation("gibbs.varsigma must be positive and finite");
  }
  if (!(c1 > 0.0)) throw ContractViolation("gibbs.c1 must be positive (or unbounded)");
  if (!(eta_cap > 0.0) || !std::isfinite(eta_cap)) {
    throw ContractViolation("gibbs.eta_cap must be positive and finite");
  }
}

std::string Family::name() const {
  return kind == Kind::poisson ? "poisson" : "negbin";
}

Family Family::parse(std::string_view name, double alpha) {
  if (name == "poisson") return poisson();
  if (name == "negbin" || name == "nb") {
    if (!(alpha > 0.0)) throw ValidationError("negbin family needs alpha > 0");
    return negbin(alpha);
  }
  throw ValidationError("unknown family '" + std::string(name) + "' (expected poisson|negbin)");
}

void TrueModel::validate() const {
  if (theta_star.size() < 1) throw ContractViolation("theta_star is empty");
  require_finite(theta_star, "theta_star");
  const auto nonzero = static_cast<std::size_t>((theta_star.array() != 0.0).count());
  if (nonzero != s_star) {
    throw ContractViolation("theta_star has " + std::to_string(nonzero) +
                            " nonzero entries but s_star = " + std::to_string(s_star));
  }
  if (family.kind == Family::Kind::negbin && !(family.alpha > 0.0)) {
    throw ContractViolation("negbin family needs alpha > 0");
  }
}

void require_finite(const Vector& v, std::string_view what) {
  if (!v.allFinite()) throw ContractViolation(std::string(what) + " contains non-finite entries");
}

}  // namespace countewa
