#include "critpar/oracles.hpp"

#include <cmath>
#include <numeric>

namespace critpar {

namespace {

void require_finite(std::span<const double> x) {
  for (double v : x) {
    if (!std::isfinite(v)) throw InputError("oracle queried at a non-finite point");
  }
}

void fill_dense_support(GradientSample& out, std::size_t d) {
  if (out.support.size() == d) return;
  out.support.resize(d);
  std::iota(out.support.begin(), out.support.end(), 0u);
}

}  // namespace

void NoiseSpec::validate() const {
  if (!(M >= 0.0) || !std::isfinite(M)) throw InputError("noise.M must be finite and nonnegative");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw InputError("noise.sigma2 must be finite and nonnegative");
  }
  if (mask_alpha && !(*mask_alpha >= 1.0)) throw InputError("noise.mask_alpha must be >= 1");
}

void sample_gaussian_noise_gradient(const Problem& problem, const NoiseSpec& noise,
                                    std::span<const double> x, RandomStream& rng,
                                    GradientSample& out) {
  if (noise.mask_alpha) throw InputError("gaussian sampler does not apply the sparsifying mask");
  require_finite(x);
  const std::size_t d = problem.dim();
  out.values.resize(d);
  problem.gradient(x, out.values);
  fill_dense_support(out, d);

  const double variance = noise.M * squared_norm(out.values) + noise.sigma2;
  if (variance == 0.0) return;
  // Per-coordinate variance carries the 1/d so that E|u|^2 equals `variance`.
  const double sd = std::sqrt(variance / static_cast<double>(d));
  for (double& v : out.values) v += sd * rng.normal();
}

GradientSample sample_gaussian_noise_gradient(const Problem& problem, const NoiseSpec& noise,
                                              std::span<const double> x, RandomStream& rng) {
  GradientSample out;
  sample_gaussian_noise_gradient(problem, noise, x, rng, out);
  return out;
}

void sample_block_sparse_gradient(const BlockSeparableSpec& spec, std::span<const double> x,
                                  RandomStream& rng, GradientSample& out) {
  if (x.size() != spec.dim()) throw InputError("dimension mismatch in block-sparse oracle");
  const std::size_t d = spec.inner.d;
  const std::size_t block = rng.uniform_index(spec.blocks);
  out.values.assign(spec.dim(), 0.0);
  auto slot = std::span<double>(out.values).subspan(block * d, d);
  quadratic_band_gradient(spec.inner, x.subspan(block * d, d), slot);
  const double scale = static_cast<double>(spec.blocks);
  for (double& v : slot) v *= scale;
  out.support.resize(d);
  std::iota(out.support.begin(), out.support.end(), static_cast<std::uint32_t>(block * d));
}

GradientSample sample_block_sparse_gradient(const BlockSeparableSpec& spec,
                                            std::span<const double> x, RandomStream& rng) {
  GradientSample out;
  sample_block_sparse_gradient(spec, x, rng, out);
  return out;
}

void sparsify_gradient_inplace(GradientSample& sample, double alpha, RandomStream& rng) {
  if (!(alpha >= 1.0)) throw InputError("sparsification factor alpha must be >= 1");
  if (alpha == 1.0) return;
  const double keep = 1.0 / alpha;
  std::size_t kept = 0;
  for (std::uint32_t v : sample.support) {
    if (rng.bernoulli(keep)) {
      sample.values[v] *= alpha;
      sample.support[kept++] = v;
    } else {
      sample.values[v] = 0.0;
    }
  }
  sample.support.resize(kept);
}

GradientSample sparsify_gradient(GradientSample sample, double alpha, RandomStream& rng) {
  sparsify_gradient_inplace(sample, alpha, rng);
  return sample;
}

Oracle make_gaussian_oracle(const Problem& problem, const NoiseSpec& noise) {
  noise.validate();
  NoiseSpec dense = noise;
  dense.mask_alpha.reset();
  Oracle base(
      problem,
      [problem, dense](std::span<const double> x, RandomStream& rng, GradientSample& out) {
        sample_gaussian_noise_gradient(problem, dense, x, rng, out);
      },
      "gaussian");
  if (noise.mask_alpha) return make_masked_oracle(base, *noise.mask_alpha);
  return base;
}

Oracle make_block_oracle(const Problem& problem) {
  const BlockSeparableSpec* spec = problem.block_spec();
  if (spec == nullptr) throw InputError("block oracle requires a block-separable problem");
  return Oracle(
      problem,
      [spec = *spec](std::span<const double> x, RandomStream& rng, GradientSample& out) {
        sample_block_sparse_gradient(spec, x, rng, out);
      },
      "block");
}

Oracle make_masked_oracle(const Oracle& base, double alpha) {
  if (!(alpha >= 1.0)) throw InputError("sparsification factor alpha must be >= 1");
  return Oracle(
      base.problem(),
      [base, alpha](std::span<const double> x, RandomStream& rng, GradientSample& out) {
        base.sample(x, rng, out);
        sparsify_gradient_inplace(out, alpha, rng);
      },
      base.name() + "+mask");
}

double mean_noise_norm2(const Oracle& oracle, std::span<const double> x, std::size_t samples,
                        RandomStream& rng) {
  const Vector grad = oracle.problem().gradient(x);
  GradientSample g;
  double total = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    oracle.sample(x, rng, g);
    total += squared_distance(g.values, grad);
  }
  return total / static_cast<double>(samples);
}

NoiseParamsEstimate measure_noise_params(const Oracle& oracle, std::span<const Vector> points,
                                         double eps, std::size_t samples_per_point,
                                         RandomStream& rng) {
  if (points.empty()) throw InputError("measure_noise_params needs at least one point");
  if (samples_per_point < 2) throw InputError("measure_noise_params needs >= 2 samples per point");
  NoiseParamsEstimate est;
  for (const Vector& x : points) {
    const double grad2 = squared_norm(oracle.problem().gradient(x));
    const double noise2 = mean_noise_norm2(oracle, x, samples_per_point, rng);
    if (grad2 <= eps) {
      ++est.stationary_points;
      est.sigma_star2 = std::max(est.sigma_star2.value_or(0.0), noise2);
    } else {
      ++est.nonstationary_points;
      est.M = std::max(est.M.value_or(0.0), noise2 / grad2);
    }
  }
  return est;
}

double measure_delta(const Oracle& oracle, std::span<const Vector> points,
                     std::size_t samples_per_point, RandomStream& rng) {
  if (samples_per_point < 1) throw InputError("measure_delta needs >= 1 sample per point");
  const std::size_t d = oracle.problem().dim();
  std::vector<std::size_t> hits(d);
  GradientSample g;
  double delta = 0.0;
  for (const Vector& x : points) {
    std::fill(hits.begin(), hits.end(), 0);
    for (std::size_t s = 0; s < samples_per_point; ++s) {
      oracle.sample(x, rng, g);
      for (std::uint32_t v : g.support) ++hits[v];
    }
    for (std::size_t h : hits) {
      delta = std::max(delta, static_cast<double>(h) / static_cast<double>(samples_per_point));
    }
  }
  return delta;
}

}  // namespace critpar
