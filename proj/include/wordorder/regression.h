#ifndef WORDORDER_REGRESSION_H_
#define WORDORDER_REGRESSION_H_

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace wordorder {

// Design matrices passed to these routines already contain any intercept
// column the caller wants.
namespace logistic {

double log_likelihood(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& beta);
// d log L / d beta.
Eigen::VectorXd gradient(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
                         const Eigen::VectorXd& beta);
// Observed (= expected, for the canonical link) information X'WX.
Eigen::MatrixXd information(const Eigen::MatrixXd& x, const Eigen::VectorXd& beta);

struct IrlsResult {
  Eigen::VectorXd beta;
  Eigen::MatrixXd covariance;  // inverse information at beta
  double log_likelihood = 0.0;
  int iterations = 0;
  bool converged = false;
  bool separated = false;
};

// Unregularised maximum likelihood by Newton-Raphson with step halving.
// Stops when max |step| < tol or the deviance changes by less than tol.
IrlsResult irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, int max_iter = 100,
                double tol = 1e-8);

}  // namespace logistic

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// Greedy left-to-right selection of columns that keep `x` full column rank.
// Columns in `always_keep` (e.g. the intercept) are taken first.
std::vector<std::size_t> independent_columns(const Eigen::MatrixXd& x,
                                             std::size_t always_keep = 0,
                                             double threshold = 1e-9);

struct OlsResult {
  std::vector<std::string> names;  // "(intercept)" first
  std::vector<double> beta;
  std::vector<double> std_error;
  std::vector<double> t_value;
  std::vector<std::string> dropped;
  double r_squared = 0.0;
  double adj_r_squared = 0.0;
  double residual_se = 0.0;
  std::size_t n = 0;
  std::size_t df_residual = 0;
};

// Least squares of y on [1, x] via the normal equations. Columns that are
// linear combinations of earlier ones are dropped and listed in `dropped`.
OlsResult ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y,
              const std::vector<std::string>& names);

}  // namespace wordorder

#endif  // WORDORDER_REGRESSION_H_
