#include "wordorder/regression.h"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace wordorder {

namespace logistic {

namespace {

// log(1 + exp(z)) without overflow.
double log1p_exp(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Eigen::VectorXd probabilities(const Eigen::VectorXd& eta) {
  return eta.unaryExpr([](double z) { return sigmoid(z); });
}

}  // namespace

double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta) {
  const Eigen::VectorXd eta = x * beta;
  double ll = 0.0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) ll += y[i] * eta[i] - log1p_exp(eta[i]);
  return ll;
}

Eigen::VectorXd gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta) {
  return x.transpose() * (y - probabilities(x * beta));
}

Eigen::MatrixXd information(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta) {
  const Eigen::VectorXd p = probabilities(x * beta);
  const Eigen::VectorXd w = p.array() * (1.0 - p.array());
  return x.transpose() * (x.array().colwise() * w.array()).matrix();
}

IrlsResult irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_iter,
                double tol) {
  IrlsResult result;
  result.beta = Eigen::VectorXd::Zero(x.cols());
  double ll = log_likelihood(x, y, result.beta);
  for (int it = 1; it <= max_iter; ++it) {
    result.iterations = it;
    const Eigen::MatrixXd info = information(x, result.beta);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) break;
    const Eigen::VectorXd step = ldlt.solve(gradient(x, y, result.beta));
    if (!step.allFinite()) break;

    double scale = 1.0;
    Eigen::VectorXd next = result.beta + step;
    double next_ll = log_likelihood(x, y, next);
    for (int halvings = 0; halvings < 30 && next_ll < ll; ++halvings) {
      scale *= 0.5;
      next = result.beta + scale * step;
      next_ll = log_likelihood(x, y, next);
    }
    const double max_step = (scale * step).cwiseAbs().maxCoeff();
    const double deviance_change = 2.0 * std::abs(next_ll - ll);
    result.beta = next;
    ll = next_ll;
    if (max_step < tol || deviance_change < tol) {
      result.converged = true;
      break;
    }
  }
  result.log_likelihood = ll;
  const Eigen::MatrixXd info = information(x, result.beta);
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
  const auto p = static_cast<Eigen::Index>(x.cols());
  if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
    result.covariance = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  } else {
    result.covariance = Eigen::MatrixXd::Constant(p, p, std::numeric_limits<double>::infinity());
  }
  // A fitted probability numerically at 0 or 1 only happens when the data
  // are (quasi-)separable and the estimates run off to infinity.
  const Eigen::VectorXd eta = x * result.beta;
  result.separated = eta.size() > 0 && eta.cwiseAbs().maxCoeff() > 30.0;
  return result;
}

}  // namespace logistic

std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x, std::size_t always_keep,
                                             double threshold) {
  Eigen::MatrixXd unit = x;
  for (Eigen::Index j = 0; j < unit.cols(); ++j) {
    const double norm = unit.col(j).norm();
    if (norm > 0) unit.col(j) /= norm;
  }
  std::vector<std::size_t> kept;
  for (std::size_t j = 0; j < static_cast<std::size_t>(x.cols()); ++j) {
    if (j < always_keep) {
      kept.push_back(j);
      continue;
    }
    if (unit.col(static_cast<Eigen::Index>(j)).norm() == 0.0) continue;
    Eigen::MatrixXd trial(unit.rows(), static_cast<Eigen::Index>(kept.size() + 1));
    for (std::size_t k = 0; k < kept.size(); ++k) {
      trial.col(static_cast<Eigen::Index>(k)) = unit.col(static_cast<Eigen::Index>(kept[k]));
    }
    trial.col(trial.cols() - 1) = unit.col(static_cast<Eigen::Index>(j));
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(trial);
    qr.setThreshold(threshold);
    if (qr.rank() == trial.cols()) kept.push_back(j);
  }
  return kept;
}

OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
              const std::vector<std::string>& names) {
  if (static_cast<std::size_t>(x.cols()) != names.size()) {
    throw std::invalid_argument("ols: one name per column required");
  }
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd design(n, x.cols() + 1);
  design.col(0).setOnes();
  design.rightCols(x.cols()) = x;

  OlsResult result;
  const auto kept = independent_columns(design, 1);
  std::vector<bool> keep(static_cast<std::size_t>(design.cols()), false);
  for (std::size_t k : kept) keep[k] = true;
  for (std::size_t j = 0; j < names.size(); ++j) {
    if (!keep[j + 1]) result.dropped.push_back(names[j]);
  }
  Eigen::MatrixXd reduced(n, static_cast<Eigen::Index>(kept.size()));
  for (std::size_t k = 0; k < kept.size(); ++k) {
    reduced.col(static_cast<Eigen::Index>(k)) = design.col(static_cast<Eigen::Index>(kept[k]));
    result.names.push_back(kept[k] == 0 ? "(intercept)" : names[kept[k] - 1]);
  }

  const Eigen::Index p = reduced.cols();
  if (n <= p) throw std::invalid_argument("ols: need more observations than coefficients");
  const Eigen::MatrixXd xtx = reduced.transpose() * reduced;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  const Eigen::VectorXd beta = ldlt.solve(reduced.transpose() * y);
  const Eigen::MatrixXd xtx_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));

  const Eigen::VectorXd residual = y - reduced * beta;
  const double sse = residual.squaredNorm();
  const double sst = (y.array() - y.mean()).matrix().squaredNorm();
  result.n = static_cast<std::size_t>(n);
  result.df_residual = static_cast<std::size_t>(n - p);
  const double sigma2 = sse / static_cast<double>(n - p);
  result.residual_se = std::sqrt(sigma2);
  if (sst > 0) {
    result.r_squared = 1.0 - sse / sst;
    result.adj_r_squared = 1.0 - (1.0 - result.r_squared) * static_cast<double>(n - 1) /
                                     static_cast<double>(n - p);
  } else {
    result.r_squared = std::numeric_limits<double>::quiet_NaN();
    result.adj_r_squared = result.r_squared;
  }
  for (Eigen::Index j = 0; j < p; ++j) {
    result.beta.push_back(beta[j]);
    const double se = std::sqrt(std::max(sigma2 * xtx_inv(j, j), 0.0));
    result.std_error.push_back(se);
    result.t_value.push_back(beta[j] / se);
  }
  return result;
}

}  // namespace wordorder
