#include "dualwave/grw.hpp"

#include <algorithm>
#include <cmath>

namespace dualwave {

double GridWavefunction::norm() const {
  double s = 0.0;
  for (const auto& a : amp) s += std::norm(a);
  return s * dx;
}

void GridWavefunction::normalize() {
  const double n = norm();
  if (!(n > 0.0)) throw NumericError("wavefunction has zero norm");
  const double scale = 1.0 / std::sqrt(n);
  for (auto& a : amp) a *= scale;
}

double GridWavefunction::mean() const {
  double s = 0.0, w = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double p = std::norm(amp[i]);
    s += p * x(i);
    w += p;
  }
  return s / w;
}

double GridWavefunction::variance() const {
  const double mu = mean();
  double s = 0.0, w = 0.0;
  for (std::size_t i = 0; i < amp.size(); ++i) {
    const double p = std::norm(amp[i]);
    s += p * (x(i) - mu) * (x(i) - mu);
    w += p;
  }
  return s / w;
}

double GridWavefunction::kinetic_energy(double mass, double hbar) const {
  if (amp.size() < 3) return 0.0;
  Complex s{};
  for (std::size_t i = 1; i + 1 < amp.size(); ++i) {
    const Complex lap = (amp[i + 1] - 2.0 * amp[i] + amp[i - 1]) / (dx * dx);
    s += std::conj(amp[i]) * lap;
  }
  return -hbar * hbar / (2.0 * mass) * s.real() * dx / norm();
}

GridWavefunction gaussian_wavefunction(double lo, double hi, std::size_t points, double center, double s,
                                       double k) {
  if (points < 2 || !(hi > lo)) throw ModelError("wavefunction grid needs hi > lo and >= 2 points");
  if (!(s > 0.0)) throw ModelError("packet width must be positive");
  GridWavefunction psi;
  psi.lo = lo;
  psi.dx = (hi - lo) / static_cast<double>(points - 1);
  psi.amp.resize(points);
  for (std::size_t i = 0; i < points; ++i) {
    const double d = psi.x(i) - center;
    psi.amp[i] = std::exp(-d * d / (4.0 * s * s)) * std::polar(1.0, k * psi.x(i));
  }
  psi.normalize();
  return psi;
}

void validate(const HitConfig& cfg) {
  if (!(cfg.alpha > 0.0) || !std::isfinite(cfg.alpha)) throw ModelError("alpha must be positive");
  if (!(cfg.rate >= 0.0) || !std::isfinite(cfg.rate)) throw ModelError("hit rate must be non-negative");
}

double hit_density(const GridWavefunction& psi, double alpha, double z) {
  if (!(alpha > 0.0)) throw ModelError("alpha must be positive");
  const double c = std::sqrt(alpha / kPi);
  double s = 0.0;
  for (std::size_t i = 0; i < psi.size(); ++i) {
    const double d = psi.x(i) - z;
    s += std::exp(-alpha * d * d) * std::norm(psi.amp[i]);
  }
  return c * s * psi.dx;
}

HitSampler::HitSampler(const GridWavefunction& psi, double alpha) {
  if (!(alpha > 0.0)) throw ModelError("alpha must be positive");
  if (psi.size() < 2) throw ModelError("wavefunction grid is too small");
  // Beyond 9 kernel widths the Gaussian is below e^{-40}.
  const double pad = 9.0 / std::sqrt(alpha);
  const double dz = std::min(psi.dx, 0.1 / std::sqrt(alpha));
  const auto n = static_cast<std::size_t>(std::ceil((psi.hi() - psi.lo + 2.0 * pad) / dz)) + 1;
  z_.resize(n);
  f_.resize(n);
  cdf_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    z_[i] = psi.lo - pad + static_cast<double>(i) * dz;
    f_[i] = hit_density(psi, alpha, z_[i]);
    if (i > 0) cdf_[i] = cdf_[i - 1] + 0.5 * (f_[i] + f_[i - 1]) * dz;
  }
  if (!(cdf_.back() > 0.0)) throw NumericError("hit density has no mass");
}

double HitSampler::sample(Stream& rng) const {
  const double u = rng.uniform() * cdf_.back();
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  std::size_t i = static_cast<std::size_t>(std::distance(cdf_.begin(), it));
  if (i == 0) i = 1;
  if (i >= cdf_.size()) i = cdf_.size() - 1;
  // Invert the trapezoid CDF on [z_{i-1}, z_i] with a linear density.
  const double h = z_[i] - z_[i - 1];
  const double f0 = f_[i - 1], f1 = f_[i];
  const double r = u - cdf_[i - 1];
  const double slope = (f1 - f0) / h;
  double s;
  if (std::abs(slope) * h < 1e-12 * std::max(f0, f1) || f0 + f1 == 0.0) {
    s = f0 > 0.0 ? r / f0 : 0.5 * h;
  } else {
    // f0 s + slope s²/2 = r, the root in [0, h].
    const double disc = std::max(0.0, f0 * f0 + 2.0 * slope * r);
    s = 2.0 * r / (f0 + std::sqrt(disc));
  }
  return z_[i - 1] + std::clamp(s, 0.0, h);
}

double sample_hit_center(const GridWavefunction& psi, double alpha, Stream& rng) {
  return HitSampler(psi, alpha).sample(rng);
}

GridWavefunction apply_hit(const GridWavefunction& psi, double alpha, double z) {
  if (!(alpha >= 0.0)) throw ModelError("alpha must be non-negative");
  GridWavefunction out = psi;
  if (alpha == 0.0) return out;
  const double f = hit_density(psi, alpha, z);
  if (!(f > 0.0)) throw NumericError("hit density vanishes at the hit center");
  const double pre = std::pow(alpha / kPi, 0.25) / std::sqrt(f);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = out.x(i) - z;
    out.amp[i] *= pre * std::exp(-0.5 * alpha * d * d);
  }
  out.normalize();
  return out;
}

}  // namespace dualwave
