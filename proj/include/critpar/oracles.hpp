#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "critpar/common.hpp"
#include "critpar/problems.hpp"
#include "critpar/rng.hpp"

namespace critpar {

/// Noise model: E|g - grad f|^2 = M |grad f|^2 + sigma2, optionally followed by
/// an unbiased Bernoulli mask that keeps each coordinate with probability 1/alpha.
struct NoiseSpec {
  double M = 0.0;
  double sigma2 = 0.0;
  std::optional<double> mask_alpha;

  void validate() const;
};

/// One stochastic gradient. `support` lists coordinates that may be nonzero,
/// in increasing order; it may over-approximate the true nonzero set.
struct GradientSample {
  Vector values;
  std::vector<std::uint32_t> support;
};

/// Stochastic first-order oracle bound to a problem. The sampler writes into a
/// caller-owned sample so hot loops can reuse buffers.
class Oracle {
 public:
  using Sampler =
      std::function<void(std::span<const double> x, RandomStream& rng, GradientSample& out)>;

  Oracle(Problem problem, Sampler sampler, std::string name)
      : problem_(std::move(problem)), sampler_(std::move(sampler)), name_(std::move(name)) {}

  const Problem& problem() const { return problem_; }
  const std::string& name() const { return name_; }

  void sample(std::span<const double> x, RandomStream& rng, GradientSample& out) const {
    sampler_(x, rng, out);
  }
  GradientSample sample(std::span<const double> x, RandomStream& rng) const {
    GradientSample out;
    sampler_(x, rng, out);
    return out;
  }

 private:
  Problem problem_;
  Sampler sampler_;
  std::string name_;
};

/// g(x) = grad f(x) + u with u ~ N(0, (M |grad f(x)|^2 + sigma2)/d * I).
GradientSample sample_gaussian_noise_gradient(const Problem& problem, const NoiseSpec& noise,
                                              std::span<const double> x, RandomStream& rng);
void sample_gaussian_noise_gradient(const Problem& problem, const NoiseSpec& noise,
                                    std::span<const double> x, RandomStream& rng,
                                    GradientSample& out);

/// g(x) = B * grad F(x[block i]) embedded in block i, with i uniform over blocks.
GradientSample sample_block_sparse_gradient(const BlockSeparableSpec& spec,
                                            std::span<const double> x, RandomStream& rng);
void sample_block_sparse_gradient(const BlockSeparableSpec& spec, std::span<const double> x,
                                  RandomStream& rng, GradientSample& out);

/// Keeps each support coordinate with probability 1/alpha and rescales the
/// survivors by alpha, so the result stays unbiased.
GradientSample sparsify_gradient(GradientSample sample, double alpha, RandomStream& rng);
void sparsify_gradient_inplace(GradientSample& sample, double alpha, RandomStream& rng);

/// Gaussian oracle; wraps it in the sparsifying mask when noise.mask_alpha is set.
Oracle make_gaussian_oracle(const Problem& problem, const NoiseSpec& noise);
/// Block-sparse oracle; `problem` must be block-separable.
Oracle make_block_oracle(const Problem& problem);
Oracle make_masked_oracle(const Oracle& base, double alpha);

struct NoiseParamsEstimate {
  std::optional<double> sigma_star2;  ///< absent when no point has |grad f|^2 <= eps
  std::optional<double> M;            ///< absent when no point has |grad f|^2 > eps
  std::size_t stationary_points = 0;
  std::size_t nonstationary_points = 0;
};

/// Empirical sigma_*^2 and M: the sup over the supplied points, split by the
/// |grad f|^2 <= eps threshold, of the sampled second moment of the noise.
NoiseParamsEstimate measure_noise_params(const Oracle& oracle, std::span<const Vector> points,
                                         double eps, std::size_t samples_per_point,
                                         RandomStream& rng);

/// Empirical sparsity: max over points and coordinates of the frequency with
/// which a coordinate appears in the sample's support.
double measure_delta(const Oracle& oracle, std::span<const Vector> points,
                     std::size_t samples_per_point, RandomStream& rng);

/// Sample mean of |g(x) - grad f(x)|^2 over `samples` draws.
double mean_noise_norm2(const Oracle& oracle, std::span<const double> x, std::size_t samples,
                        RandomStream& rng);

}  // namespace critpar
