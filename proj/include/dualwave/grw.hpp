#pragma once

#include <vector>

#include "dualwave/common.hpp"
#include "dualwave/rng.hpp"

namespace dualwave {

/// Complex amplitudes on a uniform 1-D grid x_i = lo + i·dx.
struct GridWavefunction {
  double lo = 0.0;
  double dx = 1.0;
  std::vector<Complex> amp;

  std::size_t size() const { return amp.size(); }
  double x(std::size_t i) const { return lo + static_cast<double>(i) * dx; }
  double hi() const { return x(amp.empty() ? 0 : amp.size() - 1); }
  /// Σ|ψ|²dx.
  double norm() const;
  void normalize();
  double mean() const;
  double variance() const;
  /// ⟨H⟩ of a free particle, -ħ²/(2m)∫ψ*ψ'' by central differences.
  double kinetic_energy(double mass = 1.0, double hbar = 1.0) const;
};

/// Normalized Gaussian packet with position std `s` and wavenumber `k`.
GridWavefunction gaussian_wavefunction(double lo, double hi, std::size_t points, double center, double s,
                                       double k = 0.0);

struct HitConfig {
  /// Inverse squared localization width.
  double alpha = 1.0;
  /// Hits per unit time.
  double rate = 0.0;
};

void validate(const HitConfig& cfg);

/// F(z) = ∫ (α/π)^{1/2} e^{-α(x-z)²} |ψ(x)|² dx.
double hit_density(const GridWavefunction& psi, double alpha, double z);

/// F tabulated on a z grid that extends the wavefunction grid far enough
/// for the Gaussian tails; sampled by exact inversion of its piecewise
/// linear interpolant.
class HitSampler {
 public:
  HitSampler(const GridWavefunction& psi, double alpha);

  double sample(Stream& rng) const;
  /// Trapezoid integral of the table.
  double total() const { return cdf_.back(); }
  const std::vector<double>& z() const { return z_; }
  const std::vector<double>& density() const { return f_; }

 private:
  std::vector<double> z_;
  std::vector<double> f_;
  std::vector<double> cdf_;
};

/// z drawn from F.
double sample_hit_center(const GridWavefunction& psi, double alpha, Stream& rng);

/// ψ'(x) = (α/π)^{1/4} F(z)^{-1/2} e^{-(α/2)(x-z)²} ψ(x), renormalized on
/// the grid. Throws NumericError when F(z) = 0.
GridWavefunction apply_hit(const GridWavefunction& psi, double alpha, double z);

}  // namespace dualwave
