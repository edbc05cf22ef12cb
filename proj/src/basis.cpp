#include "dualwave/basis.hpp"

#include <algorithm>
#include <cmath>

namespace dualwave {

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ModelError(std::string(what) + " must be positive");
}

struct SineJet {
  double value, d1, d2;
};

SineJet box_mode(int n, double length, double x) {
  const double k = n * kPi / length;
  const double a = std::sqrt(2.0 / length);
  const double s = std::sin(k * x), c = std::cos(k * x);
  return {a * s, a * k * c, -k * k * a * s};
}

}  // namespace

// ---------------------------------------------------------------- box

BoxBasis::BoxBasis(double length, double mass, double hbar)
    : length_(length), mass_(mass), hbar_(hbar) {
  require_positive(length, "box length");
  require_positive(mass, "mass");
  require_positive(hbar, "hbar");
}

double BoxBasis::energy(const Mode& mode) const {
  if (mode.n[0] < 1) throw ModelError("box quantum number must be >= 1");
  const double k = mode.n[0] * kPi / length_;
  return hbar_ * hbar_ * k * k / (2.0 * mass_);
}

Jet BoxBasis::evaluate(const Mode& mode, const Point& q) const {
  const SineJet s = box_mode(mode.n[0], length_, q[0]);
  Jet j;
  j.value = s.value;
  j.d1[0] = s.d1;
  j.d2[0] = s.d2;
  return j;
}

double BoxBasis::sup_abs(const Mode&) const { return std::sqrt(2.0 / length_); }

Domain BoxBasis::domain(const std::vector<Mode>&) const {
  return Domain{1, {0.0, 0.0}, {length_, 0.0}, true};
}

// ---------------------------------------------------------------- oscillator

OscillatorBasis::OscillatorBasis(double omega, double mass, double hbar)
    : omega_(omega), mass_(mass), hbar_(hbar), scale_(std::sqrt(mass * omega / hbar)) {
  require_positive(omega, "oscillator frequency");
  require_positive(mass, "mass");
  require_positive(hbar, "hbar");
}

double OscillatorBasis::energy(const Mode& mode) const {
  if (mode.n[0] < 0) throw ModelError("oscillator quantum number must be >= 0");
  return hbar_ * omega_ * (mode.n[0] + 0.5);
}

Jet OscillatorBasis::evaluate(const Mode& mode, const Point& q) const {
  const int n = mode.n[0];
  const double xi = scale_ * q[0];
  // Normalized Hermite functions h_0..h_{n+1} in the dimensionless variable.
  double h_prev = 0.0;
  double h = std::pow(kPi, -0.25) * std::exp(-0.5 * xi * xi);
  double h_n = h, h_nm1 = 0.0;
  for (int k = 1; k <= n; ++k) {
    const double next = std::sqrt(2.0 / k) * xi * h - std::sqrt((k - 1.0) / k) * h_prev;
    h_prev = h;
    h = next;
  }
  h_n = h;
  h_nm1 = h_prev;
  const double dh = (n > 0 ? std::sqrt(2.0 * n) * h_nm1 : 0.0) - xi * h_n;
  const double d2h = (xi * xi - (2.0 * n + 1.0)) * h_n;
  const double root = std::sqrt(scale_);
  Jet j;
  j.value = root * h_n;
  j.d1[0] = root * scale_ * dh;
  j.d2[0] = root * scale_ * scale_ * d2h;
  return j;
}

double OscillatorBasis::sup_abs(const Mode&) const {
  // Cramér's inequality for normalized Hermite functions.
  return 1.0865 * std::pow(kPi, -0.25) * std::sqrt(scale_);
}

Domain OscillatorBasis::domain(const std::vector<Mode>& modes) const {
  int n_max = 0;
  for (const auto& m : modes) n_max = std::max(n_max, m.n[0]);
  const double sigma = std::sqrt((n_max + 0.5)) / scale_;
  return Domain{1, {-8.0 * sigma, 0.0}, {8.0 * sigma, 0.0}, false};
}

// ---------------------------------------------------------------- two particles

TwoParticleBoxBasis::TwoParticleBoxBasis(double length, Vec2 mass, double hbar)
    : length_(length), mass_(mass), hbar_(hbar) {
  require_positive(length, "box length");
  require_positive(mass[0], "mass[0]");
  require_positive(mass[1], "mass[1]");
  require_positive(hbar, "hbar");
}

double TwoParticleBoxBasis::energy(const Mode& mode) const {
  if (mode.n[0] < 1 || mode.n[1] < 1) throw ModelError("box quantum numbers must be >= 1");
  const double k0 = mode.n[0] * kPi / length_, k1 = mode.n[1] * kPi / length_;
  return hbar_ * hbar_ * 0.5 * (k0 * k0 / mass_[0] + k1 * k1 / mass_[1]);
}

Jet TwoParticleBoxBasis::evaluate(const Mode& mode, const Point& q) const {
  const SineJet a = box_mode(mode.n[0], length_, q[0]);
  const SineJet b = box_mode(mode.n[1], length_, q[1]);
  Jet j;
  j.value = a.value * b.value;
  j.d1[0] = a.d1 * b.value;
  j.d1[1] = a.value * b.d1;
  j.d2[0] = a.d2 * b.value;
  j.d2[1] = a.value * b.d2;
  return j;
}

double TwoParticleBoxBasis::sup_abs(const Mode&) const { return 2.0 / length_; }

Domain TwoParticleBoxBasis::domain(const std::vector<Mode>&) const {
  return Domain{2, {0.0, 0.0}, {length_, length_}, true};
}

// ---------------------------------------------------------------- plane waves

PlaneWaveBasis::PlaneWaveBasis(double momentum_spacing, double mass, double hbar)
    : dp_(momentum_spacing), mass_(mass), hbar_(hbar) {
  require_positive(momentum_spacing, "momentum spacing");
  require_positive(mass, "mass");
  require_positive(hbar, "hbar");
  norm_ = std::sqrt(dp_ / (kTwoPi * hbar_));
}

double PlaneWaveBasis::energy(const Mode& mode) const {
  return mode.momentum * mode.momentum / (2.0 * mass_);
}

Jet PlaneWaveBasis::evaluate(const Mode& mode, const Point& q) const {
  const double k = mode.momentum / hbar_;
  const Complex v = norm_ * std::polar(1.0, k * q[0]);
  Jet j;
  j.value = v;
  j.d1[0] = Complex(0.0, k) * v;
  j.d2[0] = -k * k * v;
  return j;
}

double PlaneWaveBasis::sup_abs(const Mode&) const { return norm_; }

Domain PlaneWaveBasis::domain(const std::vector<Mode>&) const {
  const double half = 0.5 * period();
  return Domain{1, {-half, 0.0}, {half, 0.0}, false};
}

}  // namespace dualwave
