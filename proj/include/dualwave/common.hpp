#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualwave {

using Complex = std::complex<double>;

/// A configuration-space point. One-dimensional systems use only x[0].
using Point = std::array<double, 2>;
using Vec2 = std::array<double, 2>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Raised when a configuration point lies outside a bounded domain.
class DomainError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Raised for invalid model or configuration input.
class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an evaluation produces NaN/Inf or a numerical scheme fails.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Wraps an angle into [0, 2π).
inline double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  if (r >= kTwoPi) r = 0.0;
  return r;
}

/// The randomizable inter-level phases Θ_1..Θ_K. Θ_0 is pinned to zero and
/// not stored.
struct PhaseVector {
  std::vector<double> angles;

  PhaseVector() = default;
  explicit PhaseVector(std::vector<double> a) : angles(std::move(a)) {
    for (double& x : angles) x = wrap_angle(x);
  }
  static PhaseVector zeros(std::size_t k) { return PhaseVector(std::vector<double>(k, 0.0)); }

  std::size_t size() const { return angles.size(); }
  bool empty() const { return angles.empty(); }
  double operator[](std::size_t i) const { return angles[i]; }
  bool operator==(const PhaseVector&) const = default;
};

}  // namespace dualwave
