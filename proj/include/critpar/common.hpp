#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace critpar {

using Vector = std::vector<double>;

/// Raised when an operation receives arguments outside its contract
/// (dimension mismatch, negative variance, unknown enum name, ...).
class InputError : public std::invalid_argument {
 public:
  explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

inline double squared_norm(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return s;
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

}  // namespace critpar
