#pragma once

#include <memory>
#include <span>
#include <vector>

#include "dualwave/basis.hpp"
#include "dualwave/common.hpp"

namespace dualwave {

enum class ModelKind { box, oscillator, free_packet, two_particle_box };

const char* to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// One degenerate member φ_ij with its complex coefficient c_ij.
struct LevelMember {
  Mode mode;
  Complex coeff{};

  bool operator==(const LevelMember&) const = default;
};

/// The members of one energy level, i.e. all c_ij sharing E_i.
struct LevelSelection {
  std::vector<LevelMember> members;

  bool operator==(const LevelSelection&) const = default;
};

/// Parameters of the discretized free Gaussian packet (see macro.hpp).
struct PacketParams {
  double sigma = 1.0;
  double velocity = 0.0;
  int levels = 128;
  /// Momentum coverage in units of the momentum standard deviation ħ/(2σ).
  double coverage = 6.0;

  bool operator==(const PacketParams&) const = default;
};

/// Catalog description of a closed system. Coefficients need not be
/// normalized; build_model normalizes them.
struct ModelSpec {
  ModelKind kind = ModelKind::box;
  double length = 1.0;
  double omega = 1.0;
  Vec2 mass{1.0, 1.0};
  double hbar = 1.0;
  std::vector<LevelSelection> levels;
  PacketParams packet;
  /// Quadrature points per dimension; 0 selects 2048 (1-D) or 256 (2-D).
  std::size_t grid_points = 0;

  bool operator==(const ModelSpec&) const = default;
};

/// Result of composing a degenerate level: |C_i|, the phase convention
/// Θ_i = θ_i0, and the member coefficients of Φ_i = C_i⁻¹ Σ_j c_ij φ_ij.
struct ComposedLevel {
  double magnitude = 0.0;
  double phase = 0.0;
  std::vector<LevelMember> members;
};

ComposedLevel compose_degenerate(std::span<const LevelMember> members);

/// An energy level of a SpectralSystem.
struct Level {
  double energy = 0.0;
  double magnitude = 0.0;
  /// θ_i0, the phase of the first member coefficient.
  double phase0 = 0.0;
  /// Coefficients of Φ_i (Σ|coeff|² = 1).
  std::vector<LevelMember> members;
  /// Upper bound of |Φ_i| over the domain.
  double sup_abs = 0.0;
};

/// Uniform tensor grid with trapezoid weights.
struct QuadratureGrid {
  int dim = 1;
  Point lo{};
  Point hi{};
  std::array<std::size_t, 2> points{2048, 1};

  double step(int k) const { return (hi[k] - lo[k]) / static_cast<double>(points[k] - 1); }
  double node(int k, std::size_t i) const { return lo[k] + step(k) * static_cast<double>(i); }
  double weight(int k, std::size_t i) const {
    const double h = step(k);
    return (i == 0 || i + 1 == points[k]) ? 0.5 * h : h;
  }
  std::size_t size() const { return points[0] * (dim == 2 ? points[1] : 1); }
};

/// Matrix elements ⟨Φ_i|O|Φ_j⟩ along one coordinate, row-major (K+1)².
struct MomentTable {
  std::vector<Complex> position;
  std::vector<Complex> position_sq;
  std::vector<Complex> momentum;
};

struct ObservableSet {
  int dim = 1;
  Vec2 mean{};
  Vec2 variance{};
  Vec2 momentum{};
  double energy = 0.0;
  double energy_spread = 0.0;
  double norm = 0.0;
};

/// Limits applied to the drift near nodes of ψ.
struct DriftLimits {
  double b_max = 1e6;
  /// Relative node threshold: clamp when |ψ|² < eps_node · max|ψ|².
  double eps_node = 1e-12;
};

/// A closed system in its energy eigenbasis. Immutable after construction
/// and safe to share between threads.
class SpectralSystem {
 public:
  SpectralSystem(std::shared_ptr<const EigenBasis> basis, std::vector<Level> levels,
                 std::size_t grid_points = 0);

  std::size_t level_count() const { return levels_.size(); }
  /// K: number of free phases.
  std::size_t phase_count() const { return levels_.size() - 1; }
  int dimension() const { return basis_->dimension(); }
  const Domain& domain() const { return domain_; }
  bool bounded() const { return basis_->bounded(); }
  const QuadratureGrid& grid() const { return grid_; }
  const std::vector<Level>& levels() const { return levels_; }
  const EigenBasis& basis() const { return *basis_; }
  double hbar() const { return basis_->hbar(); }
  Vec2 mass() const { return basis_->mass(); }
  /// D = ħ/m per coordinate.
  Vec2 diffusion() const;

  /// Θ_i = θ_i0 - θ_00, reproducing the input coefficients up to a global phase.
  PhaseVector initial_phases() const;

  /// Σ_i |C_i| sup|Φ_i|; bounds |ψ| for every Θ and t.
  double envelope_max() const { return envelope_max_; }
  /// ⟨H⟩ = Σ|C_i|²E_i.
  double mean_energy() const { return mean_energy_; }
  /// ΔE = (Σ|C_i|²E_i² - ⟨H⟩²)^{1/2}.
  double energy_spread() const { return energy_spread_; }

  /// Throws DomainError when q lies outside a bounded domain.
  void check_point(const Point& q) const;

  /// Φ_i and its derivatives at q.
  Jet level_jet(std::size_t i, const Point& q) const;
  /// b_i = |C_i| Φ_i(q) e^{-iE_i t/ħ}, the Θ-free per-level amplitudes.
  void level_amplitudes(double t, const Point& q, std::span<Complex> out) const;
  /// |C_i| e^{i(Θ_i - E_i t/ħ)} with Θ_0 = 0.
  Complex coefficient(std::size_t i, const PhaseVector& theta, double t) const;

  Complex psi(const PhaseVector& theta, double t, const Point& q) const;
  Jet psi_jet(const PhaseVector& theta, double t, const Point& q) const;

  const MomentTable& moments(int axis) const { return moments_[axis]; }

 private:
  void check_phases(const PhaseVector& theta) const;

  std::shared_ptr<const EigenBasis> basis_;
  std::vector<Level> levels_;
  Domain domain_;
  QuadratureGrid grid_;
  double envelope_max_ = 0.0;
  double mean_energy_ = 0.0;
  double energy_spread_ = 0.0;
  std::array<MomentTable, 2> moments_;
};

using SystemPtr = std::shared_ptr<const SpectralSystem>;

/// Builds a catalog system. The free packet is delegated to
/// build_gaussian_packet.
SystemPtr build_model(const ModelSpec& spec);

/// Initial phase vector implied by the model coefficients.
PhaseVector initial_phases(const SpectralSystem& sys);

/// Nelson drift b = ∇S/m + (ħ/m)∇R/R, per coordinate mass, clamped near nodes.
Vec2 drift(const SpectralSystem& sys, const PhaseVector& theta, double t, const Point& q,
           const DriftLimits& limits = {});
/// Current velocity ∇S/m alone (deterministic guidance).
Vec2 current_velocity(const SpectralSystem& sys, const PhaseVector& theta, double t, const Point& q,
                      const DriftLimits& limits = {});
/// Bohm quantum potential Q = -Σ_k (ħ²/2m_k) ∂²_k R / R.
double quantum_potential(const SpectralSystem& sys, const PhaseVector& theta, double t,
                         const Point& q);

/// Moments by trapezoid quadrature on the system grid. ⟨H⟩ and ΔE come from
/// the coefficients. Throws NumericError when the grid norm misses 1 by more
/// than `norm_tolerance`.
ObservableSet observables(const SpectralSystem& sys, const PhaseVector& theta, double t,
                          double norm_tolerance = 1e-6);

/// Same moments from the precomputed matrix elements; O((K+1)²).
ObservableSet fast_observables(const SpectralSystem& sys, const PhaseVector& theta, double t);

}  // namespace dualwave
