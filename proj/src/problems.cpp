#include "critpar/problems.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace critpar {

namespace {

void check_dim(std::size_t expected, std::size_t got) {
  if (expected != got) {
    throw InputError("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                     std::to_string(got));
  }
}

// (Ax)_i = 2 x_i - x_{i-1} - x_{i+1}, with zero padding at the ends.
inline double band_row(std::span<const double> x, std::size_t i) {
  const std::size_t d = x.size();
  double r = 2.0 * x[i];
  if (i > 0) r -= x[i - 1];
  if (i + 1 < d) r -= x[i + 1];
  return r;
}

double band_value_unchecked(double lambda, std::span<const double> x) {
  double quad = 0.0;
  double ridge = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    quad += x[i] * band_row(x, i);
    ridge += x[i] * x[i];
  }
  return 0.5 * quad + 0.5 * lambda * ridge;
}

void band_gradient_unchecked(double lambda, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = band_row(x, i) + lambda * x[i];
}

}  // namespace

void QuadraticBandSpec::validate() const {
  if (d < 2) throw InputError("problem.d must be at least 2");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw InputError("problem.lambda must be finite and nonnegative");
  }
}

void BlockSeparableSpec::validate() const {
  inner.validate();
  if (blocks < 1) throw InputError("problem.blocks must be at least 1");
}

double quadratic_band_value(const QuadraticBandSpec& spec, std::span<const double> x) {
  check_dim(spec.d, x.size());
  return band_value_unchecked(spec.lambda, x);
}

Vector quadratic_band_gradient(const QuadraticBandSpec& spec, std::span<const double> x) {
  Vector out(spec.d);
  quadratic_band_gradient(spec, x, out);
  return out;
}

void quadratic_band_gradient(const QuadraticBandSpec& spec, std::span<const double> x,
                             std::span<double> out) {
  check_dim(spec.d, x.size());
  check_dim(spec.d, out.size());
  band_gradient_unchecked(spec.lambda, x, out);
}

Curvature curvature_constants(const QuadraticBandSpec& spec) {
  spec.validate();
  const double n1 = static_cast<double>(spec.d + 1);
  const double dd = static_cast<double>(spec.d);
  const double pi = std::numbers::pi;
  return {2.0 - 2.0 * std::cos(dd * pi / n1) + spec.lambda,
          2.0 - 2.0 * std::cos(pi / n1) + spec.lambda};
}

std::pair<double, Vector> block_separable_value_gradient(const BlockSeparableSpec& spec,
                                                         std::span<const double> x) {
  check_dim(spec.dim(), x.size());
  const std::size_t d = spec.inner.d;
  double value = 0.0;
  Vector grad(spec.dim());
  for (std::size_t b = 0; b < spec.blocks; ++b) {
    const auto xb = x.subspan(b * d, d);
    value += band_value_unchecked(spec.inner.lambda, xb);
    band_gradient_unchecked(spec.inner.lambda, xb, std::span<double>(grad).subspan(b * d, d));
  }
  return {value, std::move(grad)};
}

Problem Problem::quadratic(QuadraticBandSpec spec) {
  spec.validate();
  return Problem(spec, spec.d, curvature_constants(spec));
}

Problem Problem::block_separable(BlockSeparableSpec spec) {
  spec.validate();
  // Block-diagonal Hessian: same spectrum as one block.
  return Problem(spec, spec.dim(), curvature_constants(spec.inner));
}

double Problem::value(std::span<const double> x) const {
  check_dim(dim_, x.size());
  if (const auto* q = std::get_if<QuadraticBandSpec>(&spec_)) {
    return band_value_unchecked(q->lambda, x);
  }
  const auto& bs = std::get<BlockSeparableSpec>(spec_);
  const std::size_t d = bs.inner.d;
  double v = 0.0;
  for (std::size_t b = 0; b < bs.blocks; ++b) v += band_value_unchecked(bs.inner.lambda, x.subspan(b * d, d));
  return v;
}

Vector Problem::gradient(std::span<const double> x) const {
  Vector out(dim_);
  gradient(x, out);
  return out;
}

void Problem::gradient(std::span<const double> x, std::span<double> out) const {
  check_dim(dim_, x.size());
  check_dim(dim_, out.size());
  if (const auto* q = std::get_if<QuadraticBandSpec>(&spec_)) {
    band_gradient_unchecked(q->lambda, x, out);
    return;
  }
  const auto& bs = std::get<BlockSeparableSpec>(spec_);
  const std::size_t d = bs.inner.d;
  for (std::size_t b = 0; b < bs.blocks; ++b) {
    band_gradient_unchecked(bs.inner.lambda, x.subspan(b * d, d), out.subspan(b * d, d));
  }
}

}  // namespace critpar
