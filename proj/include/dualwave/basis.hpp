#pragma once

#include <memory>

#include "dualwave/common.hpp"

namespace dualwave {

/// Quantum numbers of one energy eigenfunction. Box and oscillator use n[0];
/// the two-particle box uses (n[0], n[1]); plane waves use `momentum` (signed).
struct Mode {
  std::array<int, 2> n{};
  double momentum = 0.0;

  bool operator==(const Mode&) const = default;
};

/// Value and per-axis first/second derivatives of a complex function.
struct Jet {
  Complex value{};
  std::array<Complex, 2> d1{};
  std::array<Complex, 2> d2{};

  Jet& operator+=(const Jet& o) {
    value += o.value;
    for (int k = 0; k < 2; ++k) {
      d1[k] += o.d1[k];
      d2[k] += o.d2[k];
    }
    return *this;
  }
  friend Jet operator*(Complex a, const Jet& j) {
    Jet r;
    r.value = a * j.value;
    for (int k = 0; k < 2; ++k) {
      r.d1[k] = a * j.d1[k];
      r.d2[k] = a * j.d2[k];
    }
    return r;
  }
};

/// Configuration-space extent. For bounded systems lo/hi are hard walls;
/// otherwise they are the quadrature window.
struct Domain {
  int dim = 1;
  Point lo{};
  Point hi{};
  bool bounded = true;

  bool contains(const Point& q) const {
    for (int k = 0; k < dim; ++k)
      if (!(q[k] >= lo[k] && q[k] <= hi[k])) return false;
    return true;
  }
  double length(int k) const { return hi[k] - lo[k]; }
};

/// Analytic eigenfunctions of a time-independent Hamiltonian.
class EigenBasis {
 public:
  virtual ~EigenBasis() = default;

  virtual int dimension() const = 0;
  virtual double energy(const Mode& mode) const = 0;
  virtual Jet evaluate(const Mode& mode, const Point& q) const = 0;
  /// Upper bound on |φ(q)| over the domain.
  virtual double sup_abs(const Mode& mode) const = 0;
  /// Quadrature window for the given set of modes.
  virtual Domain domain(const std::vector<Mode>& modes) const = 0;
  /// Whether lo/hi are physical walls.
  virtual bool bounded() const = 0;
  virtual Vec2 mass() const = 0;
  virtual double hbar() const = 0;
};

/// Infinite square well on [0, L]: φ_n = √(2/L) sin(nπx/L), E_n = n²π²ħ²/(2mL²).
class BoxBasis final : public EigenBasis {
 public:
  BoxBasis(double length, double mass, double hbar);
  int dimension() const override { return 1; }
  double energy(const Mode& mode) const override;
  Jet evaluate(const Mode& mode, const Point& q) const override;
  double sup_abs(const Mode&) const override;
  Domain domain(const std::vector<Mode>&) const override;
  bool bounded() const override { return true; }
  Vec2 mass() const override { return {mass_, mass_}; }
  double hbar() const override { return hbar_; }

 private:
  double length_, mass_, hbar_;
};

/// Harmonic oscillator V = mω²x²/2 with normalized Hermite functions.
class OscillatorBasis final : public EigenBasis {
 public:
  OscillatorBasis(double omega, double mass, double hbar);
  int dimension() const override { return 1; }
  double energy(const Mode& mode) const override;
  Jet evaluate(const Mode& mode, const Point& q) const override;
  double sup_abs(const Mode&) const override;
  Domain domain(const std::vector<Mode>& modes) const override;
  bool bounded() const override { return false; }
  Vec2 mass() const override { return {mass_, mass_}; }
  double hbar() const override { return hbar_; }

 private:
  double omega_, mass_, hbar_, scale_;
};

/// Two distinguishable non-interacting particles in the same box [0, L]²,
/// φ = φ_{n1}(x1) φ_{n2}(x2). Equal masses give exchange degeneracy.
class TwoParticleBoxBasis final : public EigenBasis {
 public:
  TwoParticleBoxBasis(double length, Vec2 mass, double hbar);
  int dimension() const override { return 2; }
  double energy(const Mode& mode) const override;
  Jet evaluate(const Mode& mode, const Point& q) const override;
  double sup_abs(const Mode&) const override;
  Domain domain(const std::vector<Mode>&) const override;
  bool bounded() const override { return true; }
  Vec2 mass() const override { return mass_; }
  double hbar() const override { return hbar_; }

 private:
  double length_;
  Vec2 mass_;
  double hbar_;
};

/// Free particle plane waves on a momentum lattice of spacing dp:
/// φ_P(x) = √(dp/(2πħ)) e^{iPx/ħ}. The functions are orthonormal over one
/// period 2πħ/dp, which is the quadrature window.
class PlaneWaveBasis final : public EigenBasis {
 public:
  PlaneWaveBasis(double momentum_spacing, double mass, double hbar);
  int dimension() const override { return 1; }
  double energy(const Mode& mode) const override;
  Jet evaluate(const Mode& mode, const Point& q) const override;
  double sup_abs(const Mode&) const override;
  Domain domain(const std::vector<Mode>&) const override;
  bool bounded() const override { return false; }
  Vec2 mass() const override { return {mass_, mass_}; }
  double hbar() const override { return hbar_; }

  double momentum_spacing() const { return dp_; }
  double period() const { return kTwoPi * hbar_ / dp_; }

 private:
  double dp_, mass_, hbar_, norm_;
};

}  // namespace dualwave
