#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "critpar/oracles.hpp"

namespace critpar {

// Closed-form calculators for the critical-parameter theory. Every O(.) is
// evaluated with constant 1 and log factors dropped: the iteration bounds are
// order predictors, not certified counts.

struct CriticalParams {
  double gamma_crit;
  double b_crit;
  double tau_crit;  ///< same expression as b_crit
};

enum class Setting { NonConvex, Convex, StronglyConvex };

struct BoundInputs {
  Setting setting = Setting::NonConvex;
  double L = 1.0;
  double mu = 0.0;
  double M = 0.0;
  double tau = 1.0;
  double sigma2 = 0.0;
  double eps = 1.0;
  double F0 = 0.0;   ///< f(x_0) - f_star, non-convex setting
  double R02 = 0.0;  ///< |x_0 - x_star|^2, convex setting
};

/// 1 / (10 L (M + tau))
double critical_stepsize(double L, double M, double tau);
/// sigma_*^2 / eps + M + 1
double critical_batch_size(double sigma_star2, double eps, double M);
CriticalParams critical_params(double L, double M, double tau, double sigma_star2, double eps);

/// b (s + M + 1) / (s + M + b) with s = sigma_*^2 / eps.
double predicted_speedup(double b, double M, double sigma_star2, double eps);
/// (s + M + b) / (b (s + M + 1)); reciprocal of predicted_speedup.
double predicted_normalized_time(double b, double M, double sigma_star2, double eps);
/// b / (10 L (M + b)): the linear scaling rule up to b ~ M, then a plateau at 1/(10L).
double predicted_minibatch_lr(double b, double L, double M);

double theorem1_iteration_bound(const BoundInputs& in);

struct RtBounds {
  double general;              ///< 2 gamma^2 (tau + M) sum + 2 gamma^2 tau sigma2
  std::optional<double> smj;   ///< only when gamma <= gamma_crit
};

/// Drift bounds on R_t = E|x_t - ghost_t|^2. `grad_norm_history` holds
/// E|grad f(x_k)|^2 for k in [(t - tau)+, t - 1]; its length must not exceed tau.
RtBounds rt_bound_smj(std::span<const double> grad_norm_history, double L, double M, double tau,
                      double gamma, double sigma2);
/// 1/(30 L^2 tau) sum + 2/(3L) gamma sigma2, the delayed-SGD bound.
double rt_bound_sk(std::span<const double> grad_norm_history, double L, double tau, double gamma,
                   double sigma2);

/// (1 - delta) / delta: minimal relative noise of an unbiased delta-sparse oracle.
double sparsity_variance_floor(double delta);

/// Finite discrete distribution of a real random variable.
struct DiscreteDistribution {
  std::vector<std::pair<double, double>> atoms;  ///< (value, probability)
};

struct LemmaReport {
  double prob_nonzero;
  double lhs;  ///< |E X|^2
  double rhs;  ///< delta * E X^2
  bool precondition_ok;  ///< Pr[X != 0] <= delta
  bool holds;            ///< lhs <= rhs (meaningful only when precondition_ok)
  double slack() const { return rhs - lhs; }
};

/// Exact evaluation of |E X|^2 <= delta E X^2 for Pr[X != 0] <= delta. A violated
/// precondition is reported, never thrown.
LemmaReport verify_lemma_trick(const DiscreteDistribution& dist, double delta_declared);

/// 1 + E|g - grad f|^2 / |grad f|^2 by sampling; +infinity at a stationary point.
double batch_size_bound(const Oracle& oracle, std::span<const double> x, std::size_t samples,
                        RandomStream& rng);

}  // namespace critpar
