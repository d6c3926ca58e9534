#pragma once

// Regularized latent-factor models over sparse ratings: joint ALS (exact
// alternating ridge solves), one-feature-at-a-time ALS with residual or
// ridge shrinkage, stochastic gradient descent in the two penalty
// conventions, and the asymmetric (secondary movie feature) variant.

#include <Eigen/Dense>
#include <optional>
#include <span>

#include "cfkit/baseline.hpp"
#include "cfkit/dataset.hpp"
#include "cfkit/prediction.hpp"

namespace cfkit {

// How the quadratic penalty enters the SGD update for a single rating:
// per_parameter spreads each factor's one-time penalty over its support
// (lambda/J_i and lambda/I_j); per_observation applies the unscaled lambda
// at every visit.
enum class RegConvention { per_parameter, per_observation };

struct FitSchedule {
  int max_epochs = 100;
  double tol_obj_per_rating = 1e-9;
  double eta = 0.005;
  double eta_decay = 1.0;
  int feature_max_epochs = 200;  // one-feature-at-a-time modes
  double feature_tol_per_rating = 1e-10;
  uint64_t seed = 0;
  double init_std = 0.01;
  int patience = 3;  // probe-RMSE early-stopping patience
};

struct FactorModel {
  int p = 0;
  uint32_t num_users = 0;
  uint32_t num_movies = 0;
  std::vector<double> U;  // num_users x p, row-major
  std::vector<double> V;  // num_movies x p, row-major
  std::vector<double> Y;  // num_movies x p secondary features; empty unless asymmetric
  std::vector<double> user_composite;  // num_users x p effective user factors (asymmetric)
  std::optional<BaselineModel> baseline;  // composed additively
  RegConvention reg = RegConvention::per_parameter;
  double lambda = 0.0;
  double lambda1 = 0.0;  // ALS: user-side ridge
  double lambda2 = 0.0;  // ALS: movie-side ridge
  double eta = 0.0;
  FitLog fit_log;

  const double* user_factor(uint32_t i) const {
    const auto& src = user_composite.empty() ? U : user_composite;
    return src.data() + static_cast<size_t>(i) * p;
  }
  const double* movie_factor(uint32_t j) const { return V.data() + static_cast<size_t>(j) * p; }

  double predict(uint32_t i, uint32_t j) const {
    double value = baseline ? baseline->predict(i, j) : 0.0;
    if (i < num_users && j < num_movies && p > 0) {
      const double* u = user_factor(i);
      const double* v = movie_factor(j);
      for (int k = 0; k < p; ++k) value += u[k] * v[k];
    }
    return value;
  }
};

namespace detail {

// Targets the factors are fit to: raw values, or residuals from the
// composed baseline.
inline std::vector<double> factor_targets(const RatingsDataset& ds, const BaselineModel* base) {
  std::vector<double> t(ds.size());
  for (size_t n = 0; n < ds.size(); ++n) {
    const Rating& r = ds.ratings()[n];
    t[n] = r.value - (base ? base->predict(r.user, r.movie) : 0.0);
  }
  return t;
}

inline void init_normal(std::vector<double>& v, size_t count, double std_dev,
                        std::mt19937_64& rng) {
  v.resize(count);
  std::normal_distribution<double> gauss(0.0, std_dev);
  for (auto& x : v) x = gauss(rng);
}

inline double dot_p(const double* a, const double* b, int p) {
  double s = 0.0;
  for (int k = 0; k < p; ++k) s += a[k] * b[k];
  return s;
}

}  // namespace detail

// Fit error plus penalty for the (U, V) factor pair under the given
// convention. This is the objective whose exact gradient svd_gradient
// computes; the SGD updates follow the paper's per-rating form of it.
inline double svd_objective(const RatingsDataset& ds, const std::vector<double>& targets,
                            const std::vector<double>& U, const std::vector<double>& V, int p,
                            double lambda, RegConvention conv) {
  double obj = 0.0;
  for (size_t n = 0; n < ds.size(); ++n) {
    const Rating& r = ds.ratings()[n];
    const double e = targets[n] - detail::dot_p(U.data() + static_cast<size_t>(r.user) * p,
                                                V.data() + static_cast<size_t>(r.movie) * p, p);
    obj += e * e;
  }
  if (conv == RegConvention::per_parameter) {
    for (double u : U) obj += lambda * u * u;
    for (double v : V) obj += lambda * v * v;
  } else {
    for (uint32_t i = 0; i < ds.num_users(); ++i) {
      const double w = lambda * static_cast<double>(ds.user_count(i));
      for (int k = 0; k < p; ++k) {
        const double u = U[static_cast<size_t>(i) * p + k];
        obj += w * u * u;
      }
    }
    for (uint32_t j = 0; j < ds.num_movies(); ++j) {
      const double w = lambda * static_cast<double>(ds.movie_count(j));
      for (int k = 0; k < p; ++k) {
        const double v = V[static_cast<size_t>(j) * p + k];
        obj += w * v * v;
      }
    }
  }
  return obj;
}

inline void svd_gradient(const RatingsDataset& ds, const std::vector<double>& targets,
                         const std::vector<double>& U, const std::vector<double>& V, int p,
                         double lambda, RegConvention conv, std::vector<double>& gU,
                         std::vector<double>& gV) {
  gU.assign(U.size(), 0.0);
  gV.assign(V.size(), 0.0);
  for (size_t n = 0; n < ds.size(); ++n) {
    const Rating& r = ds.ratings()[n];
    const double* u = U.data() + static_cast<size_t>(r.user) * p;
    const double* v = V.data() + static_cast<size_t>(r.movie) * p;
    const double e = targets[n] - detail::dot_p(u, v, p);
    for (int k = 0; k < p; ++k) {
      gU[static_cast<size_t>(r.user) * p + k] += -2.0 * e * v[k];
      gV[static_cast<size_t>(r.movie) * p + k] += -2.0 * e * u[k];
    }
  }
  if (conv == RegConvention::per_parameter) {
    for (size_t n = 0; n < U.size(); ++n) gU[n] += 2.0 * lambda * U[n];
    for (size_t n = 0; n < V.size(); ++n) gV[n] += 2.0 * lambda * V[n];
  } else {
    for (uint32_t i = 0; i < ds.num_users(); ++i) {
      const double w = 2.0 * lambda * static_cast<double>(ds.user_count(i));
      for (int k = 0; k < p; ++k) gU[static_cast<size_t>(i) * p + k] += w * U[static_cast<size_t>(i) * p + k];
    }
    for (uint32_t j = 0; j < ds.num_movies(); ++j) {
      const double w = 2.0 * lambda * static_cast<double>(ds.movie_count(j));
      for (int k = 0; k < p; ++k) gV[static_cast<size_t>(j) * p + k] += w * V[static_cast<size_t>(j) * p + k];
    }
  }
}

// Joint ALS: alternating exact ridge solves, per movie then per user.
// lambda1 penalizes user factors, lambda2 movie factors; each half-sweep
// minimizes the full objective in its block, so the trace is monotone.
inline FactorModel fit_als_joint(const RatingsDataset& train, int p, double lambda1,
                                 double lambda2, const FitSchedule& sched = {},
                                 const BaselineModel* baseline = nullptr) {
  if (p < 0) throw std::runtime_error("p must be >= 0");
  if (lambda1 < 0 || lambda2 < 0) throw std::runtime_error("penalties must be nonnegative");
  if (train.size() == 0) throw std::runtime_error("empty training set");
  FactorModel m;
  m.p = p;
  m.num_users = train.num_users();
  m.num_movies = train.num_movies();
  m.lambda1 = lambda1;
  m.lambda2 = lambda2;
  if (baseline) m.baseline = *baseline;
  const auto targets = detail::factor_targets(train, baseline);
  if (p == 0) {
    m.fit_log.iterations = 0;
    double obj = 0.0;
    for (double t : targets) obj += t * t;
    m.fit_log.final_objective = obj;
    return m;
  }
  auto rng = substream(sched.seed, "init");
  detail::init_normal(m.U, static_cast<size_t>(m.num_users) * p, sched.init_std, rng);
  detail::init_normal(m.V, static_cast<size_t>(m.num_movies) * p, sched.init_std, rng);

  auto objective = [&]() {
    double obj = svd_objective(train, targets, m.U, m.V, p, 0.0, RegConvention::per_parameter);
    for (double u : m.U) obj += lambda1 * u * u;
    for (double v : m.V) obj += lambda2 * v * v;
    return obj;
  };

  bool flagged_singular = false;
  const double tol = sched.tol_obj_per_rating * static_cast<double>(train.size());
  double prev = objective();
  m.fit_log.converged = false;
  for (int epoch = 0; epoch < sched.max_epochs; ++epoch) {
    // movie half-sweep
    parallel_for(train.num_movies(), [&](size_t begin, size_t end) {
      Eigen::MatrixXd g(p, p);
      Eigen::VectorXd b(p);
      for (size_t j = begin; j < end; ++j) {
        auto idx = train.movie_rating_indices(static_cast<uint32_t>(j));
        double* vj = m.V.data() + j * p;
        if (idx.empty()) {
          std::fill(vj, vj + p, 0.0);
          continue;
        }
        g.setZero();
        b.setZero();
        for (uint32_t n : idx) {
          const Rating& r = train.ratings()[n];
          const double* u = m.U.data() + static_cast<size_t>(r.user) * p;
          for (int a = 0; a < p; ++a) {
            for (int c = a; c < p; ++c) g(a, c) += u[a] * u[c];
            b(a) += u[a] * targets[n];
          }
        }
        g.diagonal().array() += lambda2;
        Eigen::VectorXd sol;
        if (lambda2 > 0.0) {
          sol = g.selfadjointView<Eigen::Upper>().ldlt().solve(b);
        } else {
          Eigen::MatrixXd full = Eigen::MatrixXd(g.selfadjointView<Eigen::Upper>());
          auto cod = full.completeOrthogonalDecomposition();
          if (cod.rank() < p) flagged_singular = true;
          sol = cod.solve(b);
        }
        for (int k = 0; k < p; ++k) vj[k] = sol(k);
      }
    });
    m.fit_log.objective_trace.push_back(objective());
    // user half-sweep
    parallel_for(train.num_users(), [&](size_t begin, size_t end) {
      Eigen::MatrixXd g(p, p);
      Eigen::VectorXd b(p);
      for (size_t i = begin; i < end; ++i) {
        auto slice = train.user_ratings(static_cast<uint32_t>(i));
        double* ui = m.U.data() + i * p;
        if (slice.empty()) {
          std::fill(ui, ui + p, 0.0);
          continue;
        }
        g.setZero();
        b.setZero();
        const size_t base_n = slice.data() - train.ratings().data();
        for (size_t off = 0; off < slice.size(); ++off) {
          const Rating& r = slice[off];
          const double* v = m.V.data() + static_cast<size_t>(r.movie) * p;
          for (int a = 0; a < p; ++a) {
            for (int c = a; c < p; ++c) g(a, c) += v[a] * v[c];
            b(a) += v[a] * targets[base_n + off];
          }
        }
        g.diagonal().array() += lambda1;
        Eigen::VectorXd sol;
        if (lambda1 > 0.0) {
          sol = g.selfadjointView<Eigen::Upper>().ldlt().solve(b);
        } else {
          Eigen::MatrixXd full = Eigen::MatrixXd(g.selfadjointView<Eigen::Upper>());
          auto cod = full.completeOrthogonalDecomposition();
          if (cod.rank() < p) flagged_singular = true;
          sol = cod.solve(b);
        }
        for (int k = 0; k < p; ++k) ui[k] = sol(k);
      }
    });
    const double obj = objective();
    m.fit_log.objective_trace.push_back(obj);
    m.fit_log.iterations = epoch + 1;
    if (prev - obj < tol) {
      m.fit_log.converged = true;
      prev = obj;
      break;
    }
    prev = obj;
  }
  if (flagged_singular)
    m.fit_log.notes.push_back("rank-deficient ridge system solved in minimum-norm sense");
  if (!m.fit_log.converged)
    m.fit_log.notes.push_back("non_converged: objective still decreasing at max_epochs");
  m.fit_log.final_objective = prev;
  return m;
}

enum class SeqShrink { residual, ridge };

struct SeqOptions {
  SeqShrink mode = SeqShrink::residual;
  double lambda = 0.0;
  // explicit per-feature schedule; empty means lambda * (1 + 0.1 k)
  std::vector<double> lambda_schedule;
};

// One feature at a time, in descending order of importance: feature k is
// fit to the residuals of features 0..k-1. Residual shrinkage crushes
// low-support residuals by n/(n + lambda_k) with n = min(I_j, J_i) before
// fitting features beyond the first; ridge mode instead adds lambda_k to
// the per-coordinate denominators.
inline FactorModel fit_als_sequential(const RatingsDataset& train, int p, const SeqOptions& opt,
                                      const FitSchedule& sched = {},
                                      const BaselineModel* baseline = nullptr) {
  if (p < 0) throw std::runtime_error("p must be >= 0");
  if (train.size() == 0) throw std::runtime_error("empty training set");
  FactorModel m;
  m.p = p;
  m.num_users = train.num_users();
  m.num_movies = train.num_movies();
  m.lambda = opt.lambda;
  if (baseline) m.baseline = *baseline;
  if (p == 0) return m;
  auto rng = substream(sched.seed, "init");
  detail::init_normal(m.U, static_cast<size_t>(m.num_users) * p, sched.init_std, rng);
  detail::init_normal(m.V, static_cast<size_t>(m.num_movies) * p, sched.init_std, rng);

  std::vector<double> resid = detail::factor_targets(train, baseline);
  std::vector<double> support(train.size());
  for (size_t n = 0; n < train.size(); ++n) {
    const Rating& r = train.ratings()[n];
    support[n] = static_cast<double>(
        std::min(train.movie_count(r.movie), train.user_count(r.user)));
  }

  const double ftol = sched.feature_tol_per_rating * static_cast<double>(train.size());
  for (int k = 0; k < p; ++k) {
    const double lambda_k = k < static_cast<int>(opt.lambda_schedule.size())
                                ? opt.lambda_schedule[k]
                                : opt.lambda * (1.0 + 0.1 * k);
    // fitting targets for this feature
    std::vector<double> e(train.size());
    for (size_t n = 0; n < train.size(); ++n) {
      double v = resid[n];
      if (opt.mode == SeqShrink::residual && k > 0)
        v *= support[n] / (support[n] + lambda_k);
      e[n] = v;
    }
    const double ridge = opt.mode == SeqShrink::ridge ? lambda_k : 0.0;
    double all_zero = 0.0;
    for (double x : e) all_zero += x * x;
    if (all_zero == 0.0) {
      for (uint32_t i = 0; i < m.num_users; ++i) m.U[static_cast<size_t>(i) * p + k] = 0.0;
      for (uint32_t j = 0; j < m.num_movies; ++j) m.V[static_cast<size_t>(j) * p + k] = 0.0;
      m.fit_log.notes.push_back("feature " + std::to_string(k) + " skipped: zero residuals");
      continue;
    }
    double prev_sse = std::numeric_limits<double>::infinity();
    for (int it = 0; it < sched.feature_max_epochs; ++it) {
      for (uint32_t j = 0; j < m.num_movies; ++j) {
        auto idx = train.movie_rating_indices(j);
        double num = 0.0, den = ridge;
        for (uint32_t n : idx) {
          const double u = m.U[static_cast<size_t>(train.ratings()[n].user) * p + k];
          num += u * e[n];
          den += u * u;
        }
        m.V[static_cast<size_t>(j) * p + k] = den > 0.0 ? num / den : 0.0;
      }
      for (uint32_t i = 0; i < m.num_users; ++i) {
        auto slice = train.user_ratings(i);
        const size_t base_n = slice.data() - train.ratings().data();
        double num = 0.0, den = ridge;
        for (size_t off = 0; off < slice.size(); ++off) {
          const double v = m.V[static_cast<size_t>(slice[off].movie) * p + k];
          num += v * e[base_n + off];
          den += v * v;
        }
        m.U[static_cast<size_t>(i) * p + k] = den > 0.0 ? num / den : 0.0;
      }
      double sse = 0.0;
      for (size_t n = 0; n < train.size(); ++n) {
        const Rating& r = train.ratings()[n];
        const double d = e[n] - m.U[static_cast<size_t>(r.user) * p + k] *
                                    m.V[static_cast<size_t>(r.movie) * p + k];
        sse += d * d;
      }
      m.fit_log.iterations++;
      if (prev_sse - sse < ftol) break;
      prev_sse = sse;
    }
    for (size_t n = 0; n < train.size(); ++n) {
      const Rating& r = train.ratings()[n];
      resid[n] -= m.U[static_cast<size_t>(r.user) * p + k] *
                  m.V[static_cast<size_t>(r.movie) * p + k];
    }
  }
  double obj = 0.0;
  for (double x : resid) obj += x * x;
  m.fit_log.final_objective = obj;
  return m;
}

enum class SgdMode { all_features, feature_at_a_time };

namespace detail {

// One SGD pass over `order`. Both parameter updates for a rating read the
// pre-update values. `k_only` < 0 updates all features; otherwise just
// feature k against residuals that include features 0..k.
inline void sgd_pass(std::vector<double>& U, std::vector<double>& V, const RatingsDataset& ds,
                     const std::vector<double>& targets, int p, RegConvention conv, double lambda,
                     double eta, std::span<const uint32_t> order, int k_only = -1) {
  std::vector<double> u_old(p);
  for (uint32_t n : order) {
    const Rating& r = ds.ratings()[n];
    double* u = U.data() + static_cast<size_t>(r.user) * p;
    double* v = V.data() + static_cast<size_t>(r.movie) * p;
    const int k_lo = k_only < 0 ? 0 : k_only;
    const int k_hi = k_only < 0 ? p : k_only + 1;
    const double e = targets[n] - dot_p(u, v, k_only < 0 ? p : k_only + 1);
    const double reg_u =
        conv == RegConvention::per_parameter ? lambda / static_cast<double>(ds.user_count(r.user))
                                             : lambda;
    const double reg_v =
        conv == RegConvention::per_parameter
            ? lambda / static_cast<double>(ds.movie_count(r.movie))
            : lambda;
    for (int k = k_lo; k < k_hi; ++k) u_old[k] = u[k];
    for (int k = k_lo; k < k_hi; ++k) {
      u[k] += eta * (2.0 * e * v[k] - reg_u * u[k]);
      v[k] += eta * (2.0 * e * u_old[k] - reg_v * v[k]);
    }
  }
}

inline double probe_rmse_of(const FactorModel& m, const RatingsDataset& probe) {
  double sse = 0.0;
  for (const Rating& r : probe.ratings()) {
    const double e = r.value - m.predict(r.user, r.movie);
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(probe.size()));
}

inline void zero_empty_groups(FactorModel& m, const RatingsDataset& train) {
  for (uint32_t i = 0; i < m.num_users; ++i)
    if (train.user_count(i) == 0)
      std::fill(m.U.begin() + static_cast<size_t>(i) * m.p,
                m.U.begin() + static_cast<size_t>(i + 1) * m.p, 0.0);
  for (uint32_t j = 0; j < m.num_movies; ++j)
    if (train.movie_count(j) == 0)
      std::fill(m.V.begin() + static_cast<size_t>(j) * m.p,
                m.V.begin() + static_cast<size_t>(j + 1) * m.p, 0.0);
}

}  // namespace detail

// SGD over C in a seeded-shuffled order, reshuffled each epoch. The first
// epoch must decrease the objective (otherwise eta was too large); three
// consecutive increases abort. With a probe set, stops on probe RMSE
// patience and keeps the best iterate.
inline FactorModel fit_sgd(const RatingsDataset& train, int p, RegConvention conv, double lambda,
                           const FitSchedule& sched = {}, SgdMode mode = SgdMode::all_features,
                           const BaselineModel* baseline = nullptr,
                           const RatingsDataset* probe = nullptr) {
  if (p < 0) throw std::runtime_error("p must be >= 0");
  if (lambda < 0) throw std::runtime_error("lambda must be nonnegative");
  if (!(sched.eta > 0)) throw std::runtime_error("eta must be positive");
  if (train.size() == 0) throw std::runtime_error("empty training set");
  FactorModel m;
  m.p = p;
  m.num_users = train.num_users();
  m.num_movies = train.num_movies();
  m.reg = conv;
  m.lambda = lambda;
  m.eta = sched.eta;
  if (baseline) m.baseline = *baseline;
  const auto targets = detail::factor_targets(train, baseline);
  if (p == 0) {
    double obj = 0.0;
    for (double t : targets) obj += t * t;
    m.fit_log.final_objective = obj;
    return m;
  }
  auto rng = substream(sched.seed, "init");
  detail::init_normal(m.U, static_cast<size_t>(m.num_users) * p, sched.init_std, rng);
  detail::init_normal(m.V, static_cast<size_t>(m.num_movies) * p, sched.init_std, rng);

  std::vector<uint32_t> order(train.size());
  for (uint32_t n = 0; n < train.size(); ++n) order[n] = n;

  auto run_epochs = [&](int k_only, int max_epochs) {
    double eta = sched.eta;
    double prev = svd_objective(train, targets, m.U, m.V, p, lambda, conv);
    double best_obj = prev;
    int rises = 0;
    double best_probe = std::numeric_limits<double>::infinity();
    int since_best = 0;
    std::vector<double> best_U, best_V;
    const double tol = sched.tol_obj_per_rating * static_cast<double>(train.size());
    for (int epoch = 0; epoch < max_epochs; ++epoch) {
      auto shuffle_rng = substream(sched.seed, "shuffle", static_cast<uint64_t>(epoch),
                                   static_cast<uint64_t>(k_only + 1));
      std::shuffle(order.begin(), order.end(), shuffle_rng);
      detail::sgd_pass(m.U, m.V, train, targets, p, conv, lambda, eta, order, k_only);
      const double obj = svd_objective(train, targets, m.U, m.V, p, lambda, conv);
      m.fit_log.objective_trace.push_back(obj);
      m.fit_log.iterations++;
      if (!std::isfinite(obj))
        throw std::runtime_error("sgd: objective diverged to non-finite; reduce eta");
      if (epoch == 0 && k_only <= 0 && obj >= prev)
        throw std::runtime_error(
            "sgd: first epoch did not decrease the objective; reduce eta");
      // an epoch counts as rising only when clearly above the best seen;
      // ordinary near-optimum jitter stays within a fraction of a percent
      if (obj > best_obj * 1.05 + tol) {
        if (++rises >= 3)
          throw std::runtime_error("sgd: objective rose for 3 consecutive epochs (diverging); "
                                   "reduce eta");
      } else {
        rises = 0;
      }
      best_obj = std::min(best_obj, obj);
      if (probe) {
        detail::zero_empty_groups(m, train);
        const double pr = detail::probe_rmse_of(m, *probe);
        if (pr < best_probe - 1e-12) {
          best_probe = pr;
          best_U = m.U;
          best_V = m.V;
          since_best = 0;
        } else if (++since_best >= sched.patience) {
          if (!best_U.empty()) {
            m.U = best_U;
            m.V = best_V;
          }
          m.fit_log.notes.push_back("early stop at epoch " + std::to_string(epoch + 1) +
                                    ", best probe RMSE kept");
          return;
        }
      }
      if (std::abs(prev - obj) < tol) {
        prev = obj;
        break;
      }
      prev = obj;
      eta *= sched.eta_decay;
    }
    if (probe && !best_U.empty() && detail::probe_rmse_of(m, *probe) > best_probe) {
      m.U = best_U;
      m.V = best_V;
    }
  };

  if (mode == SgdMode::all_features) {
    run_epochs(-1, sched.max_epochs);
  } else {
    for (int k = 0; k < p; ++k) run_epochs(k, sched.feature_max_epochs);
  }
  detail::zero_empty_groups(m, train);
  m.fit_log.final_objective = svd_objective(train, targets, m.U, m.V, p, lambda, conv);
  m.fit_log.converged = true;
  return m;
}

struct NsvdOptions {
  bool train_user_factors = true;  // false: pure asymmetric model, u fixed at 0
  bool train_y = true;             // false: reduces to plain SGD factors
};

// Asymmetric model: r_hat = baseline + v_j' (u_i + |J_i|^{-1/2} sum y_j').
// SGD visits users in a seeded-shuffled order; the composite user factor is
// cached for the user's pass and the accumulated y-gradient applied at the
// end of the pass. The unscaled-lambda (per-visit) penalty convention is
// used for all three parameter families.
inline FactorModel fit_nsvd(const RatingsDataset& train, int p, double lambda,
                            const FitSchedule& sched = {}, const NsvdOptions& opt = {},
                            const BaselineModel* baseline = nullptr,
                            const RatingsDataset* probe = nullptr) {
  if (p < 1) throw std::runtime_error("p must be >= 1");
  if (train.size() == 0) throw std::runtime_error("empty training set");
  FactorModel m;
  m.p = p;
  m.num_users = train.num_users();
  m.num_movies = train.num_movies();
  m.reg = RegConvention::per_observation;
  m.lambda = lambda;
  m.eta = sched.eta;
  if (baseline) m.baseline = *baseline;
  const auto targets = detail::factor_targets(train, baseline);

  auto rng = substream(sched.seed, "init");
  if (opt.train_user_factors)
    detail::init_normal(m.U, static_cast<size_t>(m.num_users) * p, sched.init_std, rng);
  else
    m.U.assign(static_cast<size_t>(m.num_users) * p, 0.0);
  detail::init_normal(m.V, static_cast<size_t>(m.num_movies) * p, sched.init_std, rng);
  if (opt.train_y)
    detail::init_normal(m.Y, static_cast<size_t>(m.num_movies) * p, sched.init_std, rng);
  else
    m.Y.assign(static_cast<size_t>(m.num_movies) * p, 0.0);

  std::vector<uint32_t> users(train.num_users());
  for (uint32_t i = 0; i < users.size(); ++i) users[i] = i;
  std::vector<double> composite(static_cast<size_t>(m.num_users) * p, 0.0);

  auto refresh_composite = [&](uint32_t i) {
    double* s = composite.data() + static_cast<size_t>(i) * p;
    const double* u = m.U.data() + static_cast<size_t>(i) * p;
    std::copy(u, u + p, s);
    auto slice = train.user_ratings(i);
    if (slice.empty()) return;
    const double c = 1.0 / std::sqrt(static_cast<double>(slice.size()));
    for (const Rating& r : slice) {
      const double* y = m.Y.data() + static_cast<size_t>(r.movie) * p;
      for (int k = 0; k < p; ++k) s[k] += c * y[k];
    }
  };

  auto objective = [&]() {
    for (uint32_t i = 0; i < m.num_users; ++i) refresh_composite(i);
    double obj = 0.0;
    for (size_t n = 0; n < train.size(); ++n) {
      const Rating& r = train.ratings()[n];
      const double e = targets[n] - detail::dot_p(composite.data() + static_cast<size_t>(r.user) * p,
                                                  m.V.data() + static_cast<size_t>(r.movie) * p, p);
      obj += e * e;
    }
    double pen = 0.0;
    for (double x : m.U) pen += x * x;
    for (double x : m.V) pen += x * x;
    for (double x : m.Y) pen += x * x;
    return obj + lambda * pen;
  };

  double eta = sched.eta;
  double prev = objective();
  double best_obj = prev;
  int rises = 0;
  double best_probe = std::numeric_limits<double>::infinity();
  int since_best = 0;
  FactorModel best;
  const double tol = sched.tol_obj_per_rating * static_cast<double>(train.size());
  std::vector<double> s(p), accum(p), u_old(p);
  std::vector<uint32_t> rating_order;
  for (int epoch = 0; epoch < sched.max_epochs; ++epoch) {
    auto shuffle_rng = substream(sched.seed, "shuffle", static_cast<uint64_t>(epoch));
    std::shuffle(users.begin(), users.end(), shuffle_rng);
    for (uint32_t i : users) {
      auto slice = train.user_ratings(i);
      if (slice.empty()) continue;
      const size_t base_n = slice.data() - train.ratings().data();
      const double c = 1.0 / std::sqrt(static_cast<double>(slice.size()));
      refresh_composite(i);
      const double* comp = composite.data() + static_cast<size_t>(i) * p;
      std::copy(comp, comp + p, s.begin());
      std::fill(accum.begin(), accum.end(), 0.0);
      rating_order.resize(slice.size());
      for (uint32_t t = 0; t < slice.size(); ++t) rating_order[t] = t;
      std::shuffle(rating_order.begin(), rating_order.end(), shuffle_rng);
      double* u = m.U.data() + static_cast<size_t>(i) * p;
      for (uint32_t t : rating_order) {
        const Rating& r = slice[t];
        double* v = m.V.data() + static_cast<size_t>(r.movie) * p;
        const double e = targets[base_n + t] - detail::dot_p(s.data(), v, p);
        for (int k = 0; k < p; ++k) {
          const double v_old = v[k];
          v[k] += eta * (2.0 * e * s[k] - lambda * v[k]);
          accum[k] += 2.0 * e * v_old;
          if (opt.train_user_factors) u[k] += eta * (2.0 * e * v_old - lambda * u[k]);
        }
      }
      if (opt.train_y) {
        for (const Rating& r : slice) {
          double* y = m.Y.data() + static_cast<size_t>(r.movie) * p;
          for (int k = 0; k < p; ++k) y[k] += eta * (c * accum[k] - lambda * y[k]);
        }
      }
    }
    const double obj = objective();
    m.fit_log.objective_trace.push_back(obj);
    m.fit_log.iterations++;
    if (!std::isfinite(obj))
      throw std::runtime_error("nsvd: objective diverged to non-finite; reduce eta");
    if (epoch == 0 && obj >= prev)
      throw std::runtime_error("nsvd: first epoch did not decrease the objective; reduce eta");
    if (obj > best_obj * 1.05 + tol) {
      if (++rises >= 3)
        throw std::runtime_error("nsvd: objective rose for 3 consecutive epochs (diverging)");
    } else {
      rises = 0;
    }
    best_obj = std::min(best_obj, obj);
    if (probe) {
      m.user_composite = composite;
      const double pr = detail::probe_rmse_of(m, *probe);
      m.user_composite.clear();
      if (pr < best_probe - 1e-12) {
        best_probe = pr;
        best = m;
        since_best = 0;
      } else if (++since_best >= sched.patience) {
        m = best;
        m.fit_log.notes.push_back("early stop at epoch " + std::to_string(epoch + 1));
        break;
      }
    }
    if (std::abs(prev - obj) < tol) break;
    prev = obj;
    eta *= sched.eta_decay;
  }
  for (uint32_t i = 0; i < m.num_users; ++i) refresh_composite(i);
  m.user_composite = composite;
  m.fit_log.final_objective = objective();
  m.fit_log.converged = true;
  return m;
}

// Raw or clipped predictions for explicit (user, movie) pairs. Indices
// outside the model's universe fall back to the baseline (counted).
inline PredictionSet predict(const FactorModel& m,
                             const std::vector<std::pair<uint32_t, uint32_t>>& pairs,
                             bool clip = false, int k_levels = 5) {
  PredictionSet out;
  out.model_id = "factor";
  out.clipped = clip;
  out.rows.reserve(pairs.size());
  for (const auto& [i, j] : pairs) {
    double v = m.predict(i, j);
    if (i >= m.num_users || j >= m.num_movies) ++out.fallbacks;
    if (clip) v = clip_rating(v, k_levels);
    out.rows.push_back({i, j, v});
  }
  return out;
}

inline nlohmann::json to_json(const FactorModel& m) {
  nlohmann::json j{{"schema_version", 1},
                   {"kind", "factor"},
                   {"p", m.p},
                   {"num_users", m.num_users},
                   {"num_movies", m.num_movies},
                   {"U", m.U},
                   {"V", m.V},
                   {"reg",
                    {{"convention",
                      m.reg == RegConvention::per_parameter ? "per_parameter" : "per_observation"},
                     {"lambda", m.lambda},
                     {"lambda1", m.lambda1},
                     {"lambda2", m.lambda2}}},
                   {"eta", m.eta},
                   {"fit_log", to_json(m.fit_log)}};
  if (!m.Y.empty()) j["Y"] = m.Y;
  if (!m.user_composite.empty()) j["user_composite"] = m.user_composite;
  j["baseline"] = m.baseline ? to_json(*m.baseline) : nlohmann::json();
  return j;
}

inline FactorModel factor_from_json(const nlohmann::json& j) {
  if (j.at("kind") != "factor") throw std::runtime_error("not a factor model");
  FactorModel m;
  m.p = j.at("p").get<int>();
  m.num_users = j.at("num_users").get<uint32_t>();
  m.num_movies = j.at("num_movies").get<uint32_t>();
  m.U = j.at("U").get<std::vector<double>>();
  m.V = j.at("V").get<std::vector<double>>();
  if (j.contains("Y")) m.Y = j.at("Y").get<std::vector<double>>();
  if (j.contains("user_composite"))
    m.user_composite = j.at("user_composite").get<std::vector<double>>();
  const auto& reg = j.at("reg");
  m.reg = reg.at("convention") == "per_parameter" ? RegConvention::per_parameter
                                                  : RegConvention::per_observation;
  m.lambda = reg.at("lambda").get<double>();
  m.lambda1 = reg.at("lambda1").get<double>();
  m.lambda2 = reg.at("lambda2").get<double>();
  m.eta = j.at("eta").get<double>();
  if (!j.at("baseline").is_null()) m.baseline = baseline_from_json(j.at("baseline"));
  m.fit_log = fitlog_from_json(j.at("fit_log"));
  return m;
}

}  // namespace cfkit
