#pragma once

// ANOVA baselines over sparse ratings: constant, one-way, two-way (iterative
// and sequential), the closed-form penalized fit on complete layouts, the
// user-scaling interaction model, and the shrinkage analytics built on them
// (effective degrees of freedom, Cp-optimal penalties, empirical Bayes).

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "cfkit/dataset.hpp"
#include "json.hpp"

namespace cfkit {

struct FitLog {
  int iterations = 0;
  double final_objective = 0.0;
  bool converged = true;
  size_t empty_groups = 0;
  std::vector<std::string> notes;
  std::vector<double> objective_trace;  // per accepted iteration
};

// r_hat(i,j) = mu + alpha_i + gamma_i * beta_j, with gamma absent meaning 1.
struct BaselineModel {
  double mu = 0.0;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> gamma;  // empty unless the interaction model was fit
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double lambda_gamma = 0.0;
  FitLog fit_log;

  double predict(uint32_t i, uint32_t j) const {
    const double a = i < alpha.size() ? alpha[i] : 0.0;
    const double b = j < beta.size() ? beta[j] : 0.0;
    const double g = i < gamma.size() ? gamma[i] : 1.0;
    return mu + a + g * b;
  }
};

inline double twoway_objective(const RatingsDataset& ds, const BaselineModel& m,
                               double lambda1, double lambda2) {
  double obj = 0.0;
  for (const Rating& r : ds.ratings()) {
    const double e = r.value - m.predict(r.user, r.movie);
    obj += e * e;
  }
  for (double a : m.alpha) obj += lambda1 * a * a;
  for (double b : m.beta) obj += lambda2 * b * b;
  if (!m.gamma.empty())
    for (double g : m.gamma) obj += m.lambda_gamma * (g - 1.0) * (g - 1.0);
  return obj;
}

inline BaselineModel fit_constant(const RatingsDataset& train) {
  if (train.size() == 0) throw std::runtime_error("fit_constant: empty dataset");
  BaselineModel m;
  double sum = 0.0;
  for (const Rating& r : train.ratings()) sum += r.value;
  m.mu = sum / static_cast<double>(train.size());
  m.alpha.assign(train.num_users(), 0.0);
  m.beta.assign(train.num_movies(), 0.0);
  m.fit_log.iterations = 1;
  m.fit_log.final_objective = twoway_objective(train, m, 0, 0);
  return m;
}

enum class Axis { user, movie };

// One-way fit: mu is the global mean, chosen-axis effects are group means
// minus mu. Groups without ratings get a zero effect (predict mu) and are
// counted in fit_log.empty_groups.
inline BaselineModel fit_oneway(const RatingsDataset& train, Axis axis) {
  BaselineModel m = fit_constant(train);
  if (axis == Axis::user) {
    for (uint32_t i = 0; i < train.num_users(); ++i) {
      auto slice = train.user_ratings(i);
      if (slice.empty()) {
        ++m.fit_log.empty_groups;
        continue;
      }
      double sum = 0.0;
      for (const Rating& r : slice) sum += r.value;
      m.alpha[i] = sum / static_cast<double>(slice.size()) - m.mu;
    }
  } else {
    for (uint32_t j = 0; j < train.num_movies(); ++j) {
      auto idx = train.movie_rating_indices(j);
      if (idx.empty()) {
        ++m.fit_log.empty_groups;
        continue;
      }
      double sum = 0.0;
      for (uint32_t n : idx) sum += train.ratings()[n].value;
      m.beta[j] = sum / static_cast<double>(idx.size()) - m.mu;
    }
  }
  m.fit_log.final_objective = twoway_objective(train, m, 0, 0);
  if (m.fit_log.empty_groups > 0)
    m.fit_log.notes.push_back(std::to_string(m.fit_log.empty_groups) +
                              " empty groups set to zero effect");
  return m;
}

enum class TwowaySolver { coordinate, gradient_descent };

struct TwowayOptions {
  TwowaySolver solver = TwowaySolver::coordinate;
  // convergence when the objective decrease over a full pass is below
  // tol_obj_per_rating * N
  double tol_obj_per_rating = 1e-9;
  int max_iters = 500;
  // gauge fixing: recenter an unpenalized effect block into mu
  bool center_unpenalized = true;
};

namespace detail {

inline void recenter_unpenalized(BaselineModel& m, double lambda1, double lambda2) {
  if (lambda1 == 0.0 && !m.alpha.empty()) {
    double mean = 0.0;
    for (double a : m.alpha) mean += a;
    mean /= static_cast<double>(m.alpha.size());
    for (double& a : m.alpha) a -= mean;
    m.mu += mean;
  }
  if (lambda2 == 0.0 && !m.beta.empty()) {
    double mean = 0.0;
    for (double b : m.beta) mean += b;
    mean /= static_cast<double>(m.beta.size());
    for (double& b : m.beta) b -= mean;
    m.mu += mean;
  }
}

inline void twoway_gradient(const RatingsDataset& ds, const BaselineModel& m, double lambda1,
                            double lambda2, double& g_mu, std::vector<double>& g_alpha,
                            std::vector<double>& g_beta) {
  g_mu = 0.0;
  g_alpha.assign(m.alpha.size(), 0.0);
  g_beta.assign(m.beta.size(), 0.0);
  for (const Rating& r : ds.ratings()) {
    const double e = r.value - (m.mu + m.alpha[r.user] + m.beta[r.movie]);
    g_mu += -2.0 * e;
    g_alpha[r.user] += -2.0 * e;
    g_beta[r.movie] += -2.0 * e;
  }
  for (size_t i = 0; i < m.alpha.size(); ++i) g_alpha[i] += 2.0 * lambda1 * m.alpha[i];
  for (size_t j = 0; j < m.beta.size(); ++j) g_beta[j] += 2.0 * lambda2 * m.beta[j];
}

}  // namespace detail

// Minimizes sum_C (r - mu - alpha_i - beta_j)^2 + l1*sum alpha^2
// + l2*sum beta^2; mu is deliberately unpenalized. The coordinate solver
// does exact block minimization (mu, then all alpha, then all beta), so the
// objective cannot increase across iterations.
inline BaselineModel fit_twoway_sparse(const RatingsDataset& train, double lambda1, double lambda2,
                                       const TwowayOptions& opt = {}) {
  if (lambda1 < 0 || lambda2 < 0) throw std::runtime_error("penalties must be nonnegative");
  BaselineModel m = fit_constant(train);
  m.lambda1 = lambda1;
  m.lambda2 = lambda2;
  const double tol = opt.tol_obj_per_rating * static_cast<double>(train.size());
  double prev = twoway_objective(train, m, lambda1, lambda2);
  m.fit_log.converged = false;

  if (opt.solver == TwowaySolver::coordinate) {
    for (int it = 0; it < opt.max_iters; ++it) {
      double num = 0.0;
      for (const Rating& r : train.ratings())
        num += r.value - m.alpha[r.user] - m.beta[r.movie];
      m.mu = num / static_cast<double>(train.size());
      for (uint32_t i = 0; i < train.num_users(); ++i) {
        auto slice = train.user_ratings(i);
        if (slice.empty()) {
          m.alpha[i] = 0.0;
          continue;
        }
        double s = 0.0;
        for (const Rating& r : slice) s += r.value - m.mu - m.beta[r.movie];
        m.alpha[i] = s / (static_cast<double>(slice.size()) + lambda1);
      }
      for (uint32_t j = 0; j < train.num_movies(); ++j) {
        auto idx = train.movie_rating_indices(j);
        if (idx.empty()) {
          m.beta[j] = 0.0;
          continue;
        }
        double s = 0.0;
        for (uint32_t n : idx) {
          const Rating& r = train.ratings()[n];
          s += r.value - m.mu - m.alpha[r.user];
        }
        m.beta[j] = s / (static_cast<double>(idx.size()) + lambda2);
      }
      const double obj = twoway_objective(train, m, lambda1, lambda2);
      m.fit_log.iterations = it + 1;
      m.fit_log.objective_trace.push_back(obj);
      if (prev - obj < tol) {
        m.fit_log.converged = true;
        prev = obj;
        break;
      }
      prev = obj;
    }
  } else {
    double step = 1.0 / (2.0 * static_cast<double>(train.size()));
    double g_mu;
    std::vector<double> g_alpha, g_beta;
    for (int it = 0; it < opt.max_iters; ++it) {
      detail::twoway_gradient(train, m, lambda1, lambda2, g_mu, g_alpha, g_beta);
      BaselineModel trial = m;
      double obj = prev;
      bool accepted = false;
      for (int bt = 0; bt < 60; ++bt) {
        trial.mu = m.mu - step * g_mu;
        for (size_t i = 0; i < m.alpha.size(); ++i) trial.alpha[i] = m.alpha[i] - step * g_alpha[i];
        for (size_t j = 0; j < m.beta.size(); ++j) trial.beta[j] = m.beta[j] - step * g_beta[j];
        obj = twoway_objective(train, trial, lambda1, lambda2);
        if (obj <= prev) {
          accepted = true;
          break;
        }
        step *= 0.5;
      }
      if (!accepted) {
        m.fit_log.iterations = it + 1;
        m.fit_log.converged = true;  // no descent direction progress left
        break;
      }
      m = std::move(trial);
      m.fit_log.iterations = it + 1;
      m.fit_log.objective_trace.push_back(obj);
      step *= 1.25;
      if (prev - obj < tol) {
        m.fit_log.converged = true;
        prev = obj;
        break;
      }
      prev = obj;
    }
  }
  if (!m.fit_log.converged)
    m.fit_log.notes.push_back("non_converged: objective still decreasing at max_iters");
  if (opt.center_unpenalized) detail::recenter_unpenalized(m, lambda1, lambda2);
  m.fit_log.final_objective = twoway_objective(train, m, lambda1, lambda2);
  return m;
}

enum class SequentialOrder { movies_first, users_first };

// Koren's two-pass penalization: one shrunken pass per axis, no iteration.
// The order matters on sparse data.
inline BaselineModel fit_twoway_sequential(const RatingsDataset& train, double lambda1,
                                           double lambda2,
                                           SequentialOrder order = SequentialOrder::movies_first) {
  if (lambda1 < 0 || lambda2 < 0) throw std::runtime_error("penalties must be nonnegative");
  BaselineModel m = fit_constant(train);
  m.lambda1 = lambda1;
  m.lambda2 = lambda2;
  auto movie_pass = [&]() {
    for (uint32_t j = 0; j < train.num_movies(); ++j) {
      auto idx = train.movie_rating_indices(j);
      double s = 0.0;
      for (uint32_t n : idx) {
        const Rating& r = train.ratings()[n];
        s += r.value - m.mu - m.alpha[r.user];
      }
      m.beta[j] = idx.empty() ? 0.0 : s / (static_cast<double>(idx.size()) + lambda2);
    }
  };
  auto user_pass = [&]() {
    for (uint32_t i = 0; i < train.num_users(); ++i) {
      auto slice = train.user_ratings(i);
      double s = 0.0;
      for (const Rating& r : slice) s += r.value - m.mu - m.beta[r.movie];
      m.alpha[i] = slice.empty() ? 0.0 : s / (static_cast<double>(slice.size()) + lambda1);
    }
  };
  if (order == SequentialOrder::movies_first) {
    movie_pass();
    user_pass();
  } else {
    user_pass();
    movie_pass();
  }
  m.fit_log.iterations = 1;
  m.fit_log.final_objective = twoway_objective(train, m, lambda1, lambda2);
  return m;
}

// Closed-form solution on a fully observed I x J layout:
//   mu = grand mean,
//   alpha_i = J/(J+l1) (row mean - grand mean),
//   beta_j  = I/(I+l2) (col mean - grand mean).
inline BaselineModel fit_penalized_complete(const Eigen::MatrixXd& matrix, double lambda1,
                                            double lambda2) {
  const auto I = matrix.rows();
  const auto J = matrix.cols();
  if (I < 1 || J < 1) throw std::runtime_error("empty matrix");
  BaselineModel m;
  m.lambda1 = lambda1;
  m.lambda2 = lambda2;
  m.mu = matrix.mean();
  m.alpha.resize(I);
  m.beta.resize(J);
  const double row_shrink = static_cast<double>(J) / (static_cast<double>(J) + lambda1);
  const double col_shrink = static_cast<double>(I) / (static_cast<double>(I) + lambda2);
  for (Eigen::Index i = 0; i < I; ++i) m.alpha[i] = row_shrink * (matrix.row(i).mean() - m.mu);
  for (Eigen::Index j = 0; j < J; ++j) m.beta[j] = col_shrink * (matrix.col(j).mean() - m.mu);
  m.fit_log.iterations = 1;
  double obj = 0.0;
  for (Eigen::Index i = 0; i < I; ++i)
    for (Eigen::Index j = 0; j < J; ++j) {
      const double e = matrix(i, j) - (m.mu + m.alpha[i] + m.beta[j]);
      obj += e * e;
    }
  for (double a : m.alpha) obj += lambda1 * a * a;
  for (double b : m.beta) obj += lambda2 * b * b;
  m.fit_log.final_objective = obj;
  return m;
}

// df(lambda) = 1 + (I-1) J/(J+l1) + (J-1) I/(I+l2); the trace of the
// penalized-ANOVA hat matrix on a complete layout.
inline double effective_df_formula(uint32_t I, uint32_t J, double lambda1, double lambda2) {
  if (I < 1 || J < 1) throw std::runtime_error("need I, J >= 1");
  const double dI = I, dJ = J;
  return 1.0 + (dI - 1.0) * dJ / (dJ + lambda1) + (dJ - 1.0) * dI / (dI + lambda2);
}

// Numerical estimate of sum_m Cov(Y_m, mu_hat_m)/sigma^2 by central-difference
// perturbation of the closed-form fit. The fit is linear in Y, so this is the
// hat-matrix trace and sigma^2 cancels.
inline double effective_df_perturbation(uint32_t I, uint32_t J, double lambda1, double lambda2,
                                        double h = 1.0) {
  Eigen::MatrixXd base = Eigen::MatrixXd::Zero(I, J);
  double trace = 0.0;
  for (uint32_t i = 0; i < I; ++i) {
    for (uint32_t j = 0; j < J; ++j) {
      base(i, j) = h;
      BaselineModel up = fit_penalized_complete(base, lambda1, lambda2);
      base(i, j) = -h;
      BaselineModel dn = fit_penalized_complete(base, lambda1, lambda2);
      base(i, j) = 0.0;
      trace += (up.predict(i, j) - dn.predict(i, j)) / (2.0 * h);
    }
  }
  return trace;
}

struct DfReport {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double df = 0.0;
  double residual_ss = 0.0;
  double sigma2 = 0.0;
  double cp = 0.0;
};

// Mallows' Cp = RSS(lambda)/sigma^2 + 2 df(lambda) for the complete layout.
inline DfReport cp_report(const Eigen::MatrixXd& matrix, double lambda1, double lambda2,
                          double sigma2) {
  DfReport rep;
  rep.lambda1 = lambda1;
  rep.lambda2 = lambda2;
  rep.sigma2 = sigma2;
  BaselineModel m = fit_penalized_complete(matrix, lambda1, lambda2);
  double rss = 0.0;
  for (Eigen::Index i = 0; i < matrix.rows(); ++i)
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
      const double e = matrix(i, j) - (m.mu + m.alpha[i] + m.beta[j]);
      rss += e * e;
    }
  rep.residual_ss = rss;
  rep.df = effective_df_formula(static_cast<uint32_t>(matrix.rows()),
                                static_cast<uint32_t>(matrix.cols()), lambda1, lambda2);
  rep.cp = rss / sigma2 + 2.0 * rep.df;
  return rep;
}

struct OptimalLambdas {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  bool degenerate1 = false;  // zero row-mean variance: infinite shrinkage
  bool degenerate2 = false;
};

// lambda_a = sigma^2 / (between-group mean variance); the approximate
// Cp/AIC minimizer for the complete penalized ANOVA.
inline OptimalLambdas optimal_lambdas(const Eigen::MatrixXd& matrix, double sigma2) {
  const auto I = matrix.rows();
  const auto J = matrix.cols();
  if (I < 2 || J < 2) throw std::runtime_error("optimal_lambdas needs I, J >= 2");
  const double grand = matrix.mean();
  double s_rows = 0.0, s_cols = 0.0;
  for (Eigen::Index i = 0; i < I; ++i) {
    const double d = matrix.row(i).mean() - grand;
    s_rows += d * d;
  }
  for (Eigen::Index j = 0; j < J; ++j) {
    const double d = matrix.col(j).mean() - grand;
    s_cols += d * d;
  }
  s_rows /= static_cast<double>(I - 1);
  s_cols /= static_cast<double>(J - 1);
  OptimalLambdas out;
  if (s_rows <= 0.0) {
    out.degenerate1 = true;
    out.lambda1 = std::numeric_limits<double>::infinity();
  } else {
    out.lambda1 = sigma2 / s_rows;
  }
  if (s_cols <= 0.0) {
    out.degenerate2 = true;
    out.lambda2 = std::numeric_limits<double>::infinity();
  } else {
    out.lambda2 = sigma2 / s_cols;
  }
  if (sigma2 == 0.0) {
    out.lambda1 = out.degenerate1 ? out.lambda1 : 0.0;
    out.lambda2 = out.degenerate2 ? out.lambda2 : 0.0;
  }
  return out;
}

struct CpGridResult {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  double cp = 0.0;
  double step1 = 0.0;  // grid resolution per axis
  double step2 = 0.0;
};

// Verification routine: exhaustive Cp minimization over a linear grid
// [0, 10*lambda_formula]^2. Agreement with optimal_lambdas is expected
// within roughly one grid step.
inline CpGridResult cp_grid_search(const Eigen::MatrixXd& matrix, double sigma2,
                                   int points_per_axis = 21) {
  OptimalLambdas ref = optimal_lambdas(matrix, sigma2);
  if (ref.degenerate1 || ref.degenerate2)
    throw std::runtime_error("cp_grid_search: degenerate layout");
  CpGridResult best;
  best.cp = std::numeric_limits<double>::infinity();
  best.step1 = 10.0 * ref.lambda1 / static_cast<double>(points_per_axis - 1);
  best.step2 = 10.0 * ref.lambda2 / static_cast<double>(points_per_axis - 1);
  for (int a = 0; a < points_per_axis; ++a) {
    for (int b = 0; b < points_per_axis; ++b) {
      const double l1 = best.step1 * a;
      const double l2 = best.step2 * b;
      const double cp = cp_report(matrix, l1, l2, sigma2).cp;
      if (cp < best.cp) {
        best.cp = cp;
        best.lambda1 = l1;
        best.lambda2 = l2;
      }
    }
  }
  return best;
}

struct EbVariances {
  double sigma1_sq_raw = 0.0;  // may be negative; reported as estimated
  double sigma2_sq_raw = 0.0;
  double sigma1_sq = 0.0;  // clamped at zero
  double sigma2_sq = 0.0;
};

// Empirical-Bayes hyperparameter estimates for the Gaussian two-way model:
//   sigma1^2 = (1/I) sum_i (row mean - grand mean)^2 - sigma^2/J,
// and symmetrically for columns. Centering uses the sample grand mean; mu
// is accepted for symmetry with the known-mean derivation.
inline EbVariances empirical_bayes_variances(const Eigen::MatrixXd& matrix,
                                             [[maybe_unused]] double mu, double sigma2) {
  const auto I = matrix.rows();
  const auto J = matrix.cols();
  if (I < 1 || J < 1) throw std::runtime_error("empty matrix");
  const double grand = matrix.mean();
  double s_rows = 0.0, s_cols = 0.0;
  for (Eigen::Index i = 0; i < I; ++i) {
    const double d = matrix.row(i).mean() - grand;
    s_rows += d * d;
  }
  for (Eigen::Index j = 0; j < J; ++j) {
    const double d = matrix.col(j).mean() - grand;
    s_cols += d * d;
  }
  EbVariances out;
  out.sigma1_sq_raw = s_rows / static_cast<double>(I) - sigma2 / static_cast<double>(J);
  out.sigma2_sq_raw = s_cols / static_cast<double>(J) - sigma2 / static_cast<double>(I);
  out.sigma1_sq = std::max(0.0, out.sigma1_sq_raw);
  out.sigma2_sq = std::max(0.0, out.sigma2_sq_raw);
  return out;
}

// sigma^2 estimate for Cp when the caller has none: RSS of the unpenalized
// two-way fit over N - df0, with df0 = I + J - 1.
inline double estimate_sigma2(const RatingsDataset& train) {
  const double df0 = static_cast<double>(train.num_users()) +
                     static_cast<double>(train.num_movies()) - 1.0;
  if (static_cast<double>(train.size()) <= df0)
    throw std::runtime_error("estimate_sigma2: N <= I+J-1, residual df nonpositive");
  BaselineModel m = fit_twoway_sparse(train, 0.0, 0.0);
  double rss = 0.0;
  for (const Rating& r : train.ratings()) {
    const double e = r.value - m.predict(r.user, r.movie);
    rss += e * e;
  }
  return rss / (static_cast<double>(train.size()) - df0);
}

// Interaction model r = mu + alpha_i + gamma_i beta_j, gamma shrunk toward 1.
// Alternating exact block solves; initialized from the two-way fit.
inline BaselineModel fit_interaction(const RatingsDataset& train, double lambda1, double lambda2,
                                     double lambda_gamma, const TwowayOptions& opt = {}) {
  if (lambda1 < 0 || lambda2 < 0 || lambda_gamma < 0)
    throw std::runtime_error("penalties must be nonnegative");
  TwowayOptions init_opt = opt;
  init_opt.center_unpenalized = false;
  BaselineModel m = fit_twoway_sparse(train, lambda1, lambda2, init_opt);
  m.lambda_gamma = lambda_gamma;
  m.gamma.assign(train.num_users(), 1.0);
  m.fit_log = FitLog{};
  const double tol = opt.tol_obj_per_rating * static_cast<double>(train.size());
  double prev = twoway_objective(train, m, lambda1, lambda2);
  m.fit_log.converged = false;
  for (int it = 0; it < opt.max_iters; ++it) {
    double num = 0.0;
    for (const Rating& r : train.ratings())
      num += r.value - m.alpha[r.user] - m.gamma[r.user] * m.beta[r.movie];
    m.mu = num / static_cast<double>(train.size());
    for (uint32_t i = 0; i < train.num_users(); ++i) {
      auto slice = train.user_ratings(i);
      if (slice.empty()) {
        m.alpha[i] = 0.0;
        continue;
      }
      double s = 0.0;
      for (const Rating& r : slice) s += r.value - m.mu - m.gamma[i] * m.beta[r.movie];
      m.alpha[i] = s / (static_cast<double>(slice.size()) + lambda1);
    }
    for (uint32_t i = 0; i < train.num_users(); ++i) {
      auto slice = train.user_ratings(i);
      if (slice.empty()) continue;  // gamma stays at 1
      double num_g = lambda_gamma, den_g = lambda_gamma;
      for (const Rating& r : slice) {
        num_g += m.beta[r.movie] * (r.value - m.mu - m.alpha[i]);
        den_g += m.beta[r.movie] * m.beta[r.movie];
      }
      if (den_g > 0.0) m.gamma[i] = num_g / den_g;
    }
    for (uint32_t j = 0; j < train.num_movies(); ++j) {
      auto idx = train.movie_rating_indices(j);
      if (idx.empty()) {
        m.beta[j] = 0.0;
        continue;
      }
      double num_b = 0.0, den_b = lambda2;
      for (uint32_t n : idx) {
        const Rating& r = train.ratings()[n];
        num_b += m.gamma[r.user] * (r.value - m.mu - m.alpha[r.user]);
        den_b += m.gamma[r.user] * m.gamma[r.user];
      }
      m.beta[j] = den_b > 0.0 ? num_b / den_b : 0.0;
    }
    const double obj = twoway_objective(train, m, lambda1, lambda2);
    m.fit_log.iterations = it + 1;
    m.fit_log.objective_trace.push_back(obj);
    if (prev - obj < tol) {
      m.fit_log.converged = true;
      prev = obj;
      break;
    }
    prev = obj;
  }
  if (!m.fit_log.converged)
    m.fit_log.notes.push_back("non_converged: objective still decreasing at max_iters");
  m.fit_log.final_objective = prev;
  return m;
}

inline nlohmann::json to_json(const FitLog& log) {
  return nlohmann::json{{"iterations", log.iterations},
                        {"final_objective", log.final_objective},
                        {"converged", log.converged},
                        {"empty_groups", log.empty_groups},
                        {"notes", log.notes}};
}

inline FitLog fitlog_from_json(const nlohmann::json& j) {
  FitLog log;
  log.iterations = j.at("iterations").get<int>();
  log.final_objective = j.at("final_objective").get<double>();
  log.converged = j.at("converged").get<bool>();
  log.empty_groups = j.at("empty_groups").get<size_t>();
  log.notes = j.at("notes").get<std::vector<std::string>>();
  return log;
}

inline nlohmann::json to_json(const BaselineModel& m) {
  nlohmann::json j{{"schema_version", 1},
                   {"kind", "baseline"},
                   {"mu", m.mu},
                   {"alpha", m.alpha},
                   {"beta", m.beta},
                   {"lambda1", m.lambda1},
                   {"lambda2", m.lambda2},
                   {"fit_log", to_json(m.fit_log)}};
  if (!m.gamma.empty()) {
    j["gamma"] = m.gamma;
    j["lambda_gamma"] = m.lambda_gamma;
  }
  return j;
}

inline BaselineModel baseline_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "baseline") throw std::runtime_error("not a baseline model");
  BaselineModel m;
  m.mu = j.at("mu").get<double>();
  m.alpha = j.at("alpha").get<std::vector<double>>();
  m.beta = j.at("beta").get<std::vector<double>>();
  m.lambda1 = j.at("lambda1").get<double>();
  m.lambda2 = j.at("lambda2").get<double>();
  if (j.contains("gamma")) {
    m.gamma = j.at("gamma").get<std::vector<double>>();
    m.lambda_gamma = j.at("lambda_gamma").get<double>();
  }
  m.fit_log = fitlog_from_json(j.at("fit_log"));
  return m;
}

}  // namespace cfkit
