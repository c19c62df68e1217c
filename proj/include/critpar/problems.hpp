#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <variant>

#include "critpar/common.hpp"

namespace critpar {

/// f(x) = 1/2 <Ax, x> + lambda/2 |x|^2 with A = tridiag(-1, 2, -1) of size d.
struct QuadraticBandSpec {
  std::size_t d = 20;
  double lambda = 0.2;

  void validate() const;
};

/// f(x) = sum_i F(x[block i]) over `blocks` disjoint contiguous blocks, each a
/// copy of the inner quadratic. Sparsity of the matching oracle is 1/blocks.
struct BlockSeparableSpec {
  QuadraticBandSpec inner;
  std::size_t blocks = 1;

  std::size_t dim() const { return blocks * inner.d; }
  void validate() const;
};

struct Curvature {
  double L;
  double mu;

  double condition_number() const { return L / mu; }
};

double quadratic_band_value(const QuadraticBandSpec& spec, std::span<const double> x);
Vector quadratic_band_gradient(const QuadraticBandSpec& spec, std::span<const double> x);
/// Allocation-free variant; `out` must have length spec.d.
void quadratic_band_gradient(const QuadraticBandSpec& spec, std::span<const double> x,
                             std::span<double> out);

/// Closed-form extreme eigenvalues of the tridiagonal Toeplitz matrix plus ridge.
Curvature curvature_constants(const QuadraticBandSpec& spec);

std::pair<double, Vector> block_separable_value_gradient(const BlockSeparableSpec& spec,
                                                         std::span<const double> x);

/// A deterministic objective with known smoothness, strong convexity and
/// minimizer. Cheap to copy.
class Problem {
 public:
  static Problem quadratic(QuadraticBandSpec spec);
  static Problem block_separable(BlockSeparableSpec spec);

  std::size_t dim() const { return dim_; }
  double value(std::span<const double> x) const;
  Vector gradient(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;

  double L() const { return curvature_.L; }
  double mu() const { return curvature_.mu; }
  // No linear term anywhere, so the minimizer is the origin.
  Vector x_star() const { return Vector(dim_, 0.0); }
  double f_star() const { return 0.0; }

  /// Non-null only for block-separable instances.
  const BlockSeparableSpec* block_spec() const { return std::get_if<BlockSeparableSpec>(&spec_); }

 private:
  using Spec = std::variant<QuadraticBandSpec, BlockSeparableSpec>;
  Problem(Spec spec, std::size_t dim, Curvature curvature)
      : spec_(spec), dim_(dim), curvature_(curvature) {}

  Spec spec_;
  std::size_t dim_;
  Curvature curvature_;
};

}  // namespace critpar
