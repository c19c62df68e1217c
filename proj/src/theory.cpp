#include "critpar/theory.hpp"

#include <cmath>
#include <limits>
#include <numeric>

namespace critpar {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw InputError(std::string(name) + " must be positive");
}

double history_sum(std::span<const double> history, double tau) {
  if (static_cast<double>(history.size()) > tau) {
    throw InputError("gradient-norm history is longer than tau");
  }
  return std::accumulate(history.begin(), history.end(), 0.0);
}

}  // namespace

double critical_stepsize(double L, double M, double tau) {
  require_positive(L, "L");
  if (M < 0.0) throw InputError("M must be nonnegative");
  if (tau < 1.0) throw InputError("tau must be >= 1");
  return 1.0 / (10.0 * L * (M + tau));
}

double critical_batch_size(double sigma_star2, double eps, double M) {
  require_positive(eps, "eps");
  return sigma_star2 / eps + M + 1.0;
}

CriticalParams critical_params(double L, double M, double tau, double sigma_star2, double eps) {
  const double b = critical_batch_size(sigma_star2, eps, M);
  return {critical_stepsize(L, M, tau), b, b};
}

double predicted_speedup(double b, double M, double sigma_star2, double eps) {
  require_positive(eps, "eps");
  const double s = sigma_star2 / eps;
  return b * (s + M + 1.0) / (s + M + b);
}

double predicted_normalized_time(double b, double M, double sigma_star2, double eps) {
  require_positive(eps, "eps");
  const double s = sigma_star2 / eps;
  return (s + M + b) / (b * (s + M + 1.0));
}

double predicted_minibatch_lr(double b, double L, double M) {
  require_positive(L, "L");
  return b / (10.0 * L * (M + b));
}

double theorem1_iteration_bound(const BoundInputs& in) {
  require_positive(in.L, "L");
  require_positive(in.eps, "eps");
  const double parallel = in.M + in.tau;
  const double eps = in.eps;
  switch (in.setting) {
    case Setting::NonConvex:
      return (in.sigma2 / (eps * eps) + parallel / eps) * in.L * in.F0;
    case Setting::Convex:
      return (in.sigma2 / (eps * eps) + in.L * parallel / eps) * in.R02;
    case Setting::StronglyConvex:
      if (!(in.mu > 0.0)) throw InputError("strongly convex bound requires mu > 0");
      return in.sigma2 / (in.mu * eps) + in.L * parallel / in.mu;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

RtBounds rt_bound_smj(std::span<const double> grad_norm_history, double L, double M, double tau,
                      double gamma, double sigma2) {
  require_positive(L, "L");
  const double sum = history_sum(grad_norm_history, tau);
  RtBounds out;
  out.general = 2.0 * gamma * gamma * (tau + M) * sum + 2.0 * gamma * gamma * tau * sigma2;
  if (gamma <= critical_stepsize(L, M, tau)) {
    out.smj = sum / (50.0 * L * L * tau) + gamma * sigma2 / (5.0 * L);
  }
  return out;
}

double rt_bound_sk(std::span<const double> grad_norm_history, double L, double tau, double gamma,
                   double sigma2) {
  require_positive(L, "L");
  const double sum = history_sum(grad_norm_history, tau);
  return sum / (30.0 * L * L * tau) + 2.0 * gamma * sigma2 / (3.0 * L);
}

double sparsity_variance_floor(double delta) {
  if (!(delta > 0.0 && delta <= 1.0)) throw InputError("delta must lie in (0, 1]");
  return (1.0 - delta) / delta;
}

LemmaReport verify_lemma_trick(const DiscreteDistribution& dist, double delta_declared) {
  double p_nonzero = 0.0;
  double mean = 0.0;
  double second = 0.0;
  for (const auto& [value, prob] : dist.atoms) {
    if (value != 0.0) p_nonzero += prob;
    mean += prob * value;
    second += prob * value * value;
  }
  LemmaReport r;
  r.prob_nonzero = p_nonzero;
  r.lhs = mean * mean;
  r.rhs = delta_declared * second;
  // Summing probabilities can overshoot delta by rounding; allow a few ulps.
  r.precondition_ok = p_nonzero <= delta_declared * (1.0 + 8 * std::numeric_limits<double>::epsilon());
  r.holds = r.lhs <= r.rhs * (1.0 + 8 * std::numeric_limits<double>::epsilon());
  return r;
}

double batch_size_bound(const Oracle& oracle, std::span<const double> x, std::size_t samples,
                        RandomStream& rng) {
  const double grad2 = squared_norm(oracle.problem().gradient(x));
  if (grad2 == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 + mean_noise_norm2(oracle, x, samples, rng) / grad2;
}

}  // namespace critpar
