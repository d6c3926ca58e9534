#pragma once

// Independent reference routines used by the verification suites and tests.
// Everything here goes through dense linear algebra or exhaustive
// enumeration, never through the iterative fitting paths it is used to
// check.

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <vector>

#include "cfkit/dataset.hpp"

namespace cfkit::oracle {

// Exact minimum of the penalized sparse two-way ANOVA objective, by a dense
// solve of the (1 + I + J)-dimensional normal equations. At lambda = 0 the
// design has a gauge null space and the minimum-norm solution is used; the
// objective value is unique either way.
struct DenseTwowayResult {
  double mu = 0.0;
  std::vector<double> alpha;
  std::vector<double> beta;
  double objective = 0.0;
};

inline DenseTwowayResult dense_twoway_solve(const RatingsDataset& ds, double lambda1,
                                            double lambda2) {
  const auto n = static_cast<Eigen::Index>(ds.size());
  const Eigen::Index I = ds.num_users();
  const Eigen::Index J = ds.num_movies();
  const Eigen::Index p = 1 + I + J;
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(n, p);
  Eigen::VectorXd y(n);
  for (Eigen::Index row = 0; row < n; ++row) {
    const Rating& r = ds.ratings()[row];
    A(row, 0) = 1.0;
    A(row, 1 + r.user) = 1.0;
    A(row, 1 + I + r.movie) = 1.0;
    y(row) = r.value;
  }
  Eigen::VectorXd pen(p);
  pen(0) = 0.0;
  pen.segment(1, I).setConstant(lambda1);
  pen.segment(1 + I, J).setConstant(lambda2);

  Eigen::MatrixXd lhs = A.transpose() * A;
  lhs.diagonal() += pen;
  Eigen::VectorXd rhs = A.transpose() * y;
  Eigen::VectorXd theta;
  if (lambda1 > 0.0 && lambda2 > 0.0) {
    theta = lhs.ldlt().solve(rhs);
  } else {
    theta = lhs.completeOrthogonalDecomposition().solve(rhs);
  }
  DenseTwowayResult out;
  out.mu = theta(0);
  out.alpha.assign(theta.data() + 1, theta.data() + 1 + I);
  out.beta.assign(theta.data() + 1 + I, theta.data() + 1 + I + J);
  out.objective = (y - A * theta).squaredNorm() + theta.cwiseProduct(pen).dot(theta);
  return out;
}

// Squared Frobenius error of the best rank-k truncation for k = 0..min(I,J):
// errors[k] = sum of squared singular values beyond the first k.
inline std::vector<double> svd_truncation_errors(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  std::vector<double> errors(s.size() + 1, 0.0);
  for (Eigen::Index k = s.size() - 1; k >= 0; --k)
    errors[k] = errors[k + 1] + s(k) * s(k);
  return errors;
}

// Dominant right singular vector (unit norm).
inline Eigen::VectorXd top_right_singular_vector(const Eigen::MatrixXd& m) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  return svd.matrixV().col(0);
}

// Dense matrix view of a fully observed dataset; throws if any cell is
// missing.
inline Eigen::MatrixXd to_dense_complete(const RatingsDataset& ds) {
  if (ds.size() != static_cast<size_t>(ds.num_users()) * ds.num_movies())
    throw std::runtime_error("dataset is not complete");
  Eigen::MatrixXd m(ds.num_users(), ds.num_movies());
  for (const Rating& r : ds.ratings()) m(r.user, r.movie) = r.value;
  return m;
}

}  // namespace cfkit::oracle
