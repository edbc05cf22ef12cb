#pragma once

#include <memory>
#include <span>
#include <vector>

#include "dualwave/rng.hpp"
#include "dualwave/spectral.hpp"

namespace dualwave {

enum class IntegratorMode { stochastic, deterministic };
enum class BoundaryPolicy { reflect, clamp };

const char* to_string(IntegratorMode mode);
const char* to_string(BoundaryPolicy policy);
IntegratorMode integrator_mode_from_string(const std::string& name);
BoundaryPolicy boundary_policy_from_string(const std::string& name);

struct IntegratorConfig {
  double dt = 1e-3;
  IntegratorMode mode = IntegratorMode::stochastic;
  BoundaryPolicy boundary = BoundaryPolicy::reflect;
  DriftLimits limits;

  bool operator==(const IntegratorConfig& o) const {
    return dt == o.dt && mode == o.mode && boundary == o.boundary &&
           limits.b_max == o.limits.b_max && limits.eps_node == o.limits.eps_node;
  }
};

struct ParticleState {
  Point q{};
  double t = 0.0;

  bool operator==(const ParticleState&) const = default;
};

/// Thrown when a step produces a non-finite position; carries the state
/// before the failed step.
class NonFiniteState : public NumericError {
 public:
  NonFiniteState(const std::string& what, ParticleState last_valid)
      : NumericError(what), last_valid_(last_valid) {}
  const ParticleState& last_valid() const { return last_valid_; }

 private:
  ParticleState last_valid_;
};

/// A velocity field together with its diffusion constant and domain. Used by
/// both the Langevin integrator and the Fokker–Planck oracle.
class DriftField {
 public:
  virtual ~DriftField() = default;
  virtual int dimension() const = 0;
  virtual Vec2 diffusion() const = 0;
  virtual const Domain& domain() const = 0;
  /// Full drift used by the Langevin step.
  virtual Vec2 velocity(const Point& q, double t) const = 0;

  /// Drift on the face between cell centers `left` and `right` along `axis`,
  /// as used by the exponentially fitted flux. The default samples the
  /// velocity at the face midpoint.
  virtual double face_velocity(int axis, const Point& left, const Point& right, double t) const;
};

/// Drift of a spectral system at a fixed phase vector. In deterministic mode
/// only the current velocity ∇S/m is used.
class SpectralDrift final : public DriftField {
 public:
  SpectralDrift(SystemPtr sys, PhaseVector theta, DriftLimits limits = {},
                IntegratorMode mode = IntegratorMode::stochastic);

  int dimension() const override { return sys_->dimension(); }
  Vec2 diffusion() const override;
  const Domain& domain() const override { return sys_->domain(); }
  Vec2 velocity(const Point& q, double t) const override;
  /// Current velocity at the face plus the osmotic part written as
  /// (D/2)·Δln|ψ|²/Δx, which keeps |ψ|² an exact discrete steady state for
  /// stationary states.
  double face_velocity(int axis, const Point& left, const Point& right, double t) const override;

  const SpectralSystem& system() const { return *sys_; }
  const PhaseVector& phases() const { return theta_; }
  void set_phases(PhaseVector theta) { theta_ = std::move(theta); }

 private:
  SystemPtr sys_;
  PhaseVector theta_;
  DriftLimits limits_;
  IntegratorMode mode_;
};

/// Constant drift with constant diffusion; b = 0 gives free Brownian motion.
class ConstantDrift final : public DriftField {
 public:
  ConstantDrift(Vec2 velocity, Vec2 diffusion, Domain domain);

  int dimension() const override { return domain_.dim; }
  Vec2 diffusion() const override { return diffusion_; }
  const Domain& domain() const override { return domain_; }
  Vec2 velocity(const Point&, double) const override { return velocity_; }

 private:
  Vec2 velocity_;
  Vec2 diffusion_;
  Domain domain_;
};

/// Reflects or clamps q into a bounded domain; unbounded domains pass through.
Point apply_boundary(const Domain& domain, Point q, BoundaryPolicy policy);

/// One Euler–Maruyama step of length h: q' = q + b h + √(D h)·w.
/// `noise` holds one standard normal deviate per coordinate and is ignored
/// in deterministic mode.
ParticleState em_step(const ParticleState& state, const DriftField& field, const IntegratorConfig& cfg,
                      std::span<const double> noise, double h);
ParticleState em_step(const ParticleState& state, const DriftField& field, const IntegratorConfig& cfg,
                      std::span<const double> noise);
/// Convenience form for a spectral system at fixed Θ.
ParticleState em_step(const ParticleState& state, const SystemPtr& sys, const PhaseVector& theta,
                      const IntegratorConfig& cfg, std::span<const double> noise);

struct PhaseSwitch {
  double t = 0.0;
  PhaseVector theta;
};

/// Piecewise-constant phase history: `initial` until the first switch, then
/// each switch's phases from its time on. Switch times must be non-decreasing.
struct PhaseSchedule {
  PhaseVector initial;
  std::vector<PhaseSwitch> switches;
};

struct TrajectoryRecord {
  std::vector<double> t;
  std::vector<Point> q;
  /// Times at which a phase switch was applied.
  std::vector<double> switch_times;
};

/// Iterates em_step over [state.t, state.t + horizon]. Switch times split
/// steps so each switch lands exactly on its time. Positions are recorded
/// initially and every `stride` steps (and at the horizon).
TrajectoryRecord simulate_path(const SystemPtr& sys, const PhaseSchedule& schedule,
                               const ParticleState& initial, const IntegratorConfig& cfg,
                               double horizon, std::size_t stride, Stream& rng);

/// Number of full steps of size dt in `horizon` (a trailing fraction below
/// 1e-9·dt is dropped; a larger one adds a shorter final step).
std::size_t step_count(double horizon, double dt);

/// Draws q from |ψ(·, Θ, t)|² by rejection from the uniform distribution on
/// the domain, using the envelope bound of the system.
Point sample_position(const SpectralSystem& sys, const PhaseVector& theta, double t, Stream& rng);

}  // namespace dualwave
