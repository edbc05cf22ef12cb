#include "dualwave/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace dualwave {

const char* to_string(IntegratorMode mode) {
  return mode == IntegratorMode::stochastic ? "stochastic" : "deterministic";
}

const char* to_string(BoundaryPolicy policy) {
  return policy == BoundaryPolicy::reflect ? "reflect" : "clamp";
}

IntegratorMode integrator_mode_from_string(const std::string& name) {
  if (name == "stochastic") return IntegratorMode::stochastic;
  if (name == "deterministic") return IntegratorMode::deterministic;
  throw ModelError("unknown integrator mode '" + name + "'");
}

BoundaryPolicy boundary_policy_from_string(const std::string& name) {
  if (name == "reflect") return BoundaryPolicy::reflect;
  if (name == "clamp") return BoundaryPolicy::clamp;
  throw ModelError("unknown boundary policy '" + name + "'");
}

double DriftField::face_velocity(int axis, const Point& left, const Point& right, double t) const {
  Point mid = left;
  mid[axis] = 0.5 * (left[axis] + right[axis]);
  return velocity(mid, t)[axis];
}

// ---------------------------------------------------------------- spectral drift

SpectralDrift::SpectralDrift(SystemPtr sys, PhaseVector theta, DriftLimits limits, IntegratorMode mode)
    : sys_(std::move(sys)), theta_(std::move(theta)), limits_(limits), mode_(mode) {
  if (!sys_) throw ModelError("drift needs a system");
  if (theta_.size() != sys_->phase_count()) throw ModelError("phase vector length does not match K");
}

Vec2 SpectralDrift::diffusion() const {
  if (mode_ == IntegratorMode::deterministic) return {0.0, 0.0};
  return sys_->diffusion();
}

Vec2 SpectralDrift::velocity(const Point& q, double t) const {
  if (mode_ == IntegratorMode::deterministic) return current_velocity(*sys_, theta_, t, q, limits_);
  return drift(*sys_, theta_, t, q, limits_);
}

double SpectralDrift::face_velocity(int axis, const Point& left, const Point& right, double t) const {
  Point mid = left;
  mid[axis] = 0.5 * (left[axis] + right[axis]);
  const double v = current_velocity(*sys_, theta_, t, mid, limits_)[axis];
  if (mode_ == IntegratorMode::deterministic) return v;
  const double floor = 1e-300;
  const double pl = std::max(std::norm(sys_->psi(theta_, t, left)), floor);
  const double pr = std::max(std::norm(sys_->psi(theta_, t, right)), floor);
  const double d = sys_->diffusion()[axis];
  return v + 0.5 * d * (std::log(pr) - std::log(pl)) / (right[axis] - left[axis]);
}

ConstantDrift::ConstantDrift(Vec2 velocity, Vec2 diffusion, Domain domain)
    : velocity_(velocity), diffusion_(diffusion), domain_(domain) {
  for (int k = 0; k < domain_.dim; ++k)
    if (!(diffusion_[k] >= 0.0)) throw ModelError("diffusion constant must be non-negative");
}

// ---------------------------------------------------------------- stepping

Point apply_boundary(const Domain& domain, Point q, BoundaryPolicy policy) {
  if (!domain.bounded) return q;
  for (int k = 0; k < domain.dim; ++k) {
    const double lo = domain.lo[k], hi = domain.hi[k];
    if (q[k] >= lo && q[k] <= hi) continue;
    if (policy == BoundaryPolicy::clamp) {
      q[k] = std::clamp(q[k], lo, hi);
      continue;
    }
    // Reflection off both walls is a fold with period 2L.
    const double len = hi - lo;
    double y = std::fmod(q[k] - lo, 2.0 * len);
    if (y < 0.0) y += 2.0 * len;
    if (y > len) y = 2.0 * len - y;
    q[k] = std::clamp(lo + y, lo, hi);
  }
  return q;
}

ParticleState em_step(const ParticleState& state, const DriftField& field, const IntegratorConfig& cfg,
                      std::span<const double> noise, double h) {
  if (!(h >= 0.0)) throw ModelError("time step must be non-negative");
  const int dim = field.dimension();
  const Vec2 b = field.velocity(state.q, state.t);
  const Vec2 d = field.diffusion();
  const bool stochastic = cfg.mode == IntegratorMode::stochastic;
  if (stochastic && noise.size() < static_cast<std::size_t>(dim))
    throw ModelError("em_step needs one deviate per coordinate");
  ParticleState next = state;
  for (int k = 0; k < dim; ++k) {
    next.q[k] += b[k] * h;
    if (stochastic) next.q[k] += std::sqrt(d[k] * h) * noise[k];
    if (!std::isfinite(next.q[k]))
      throw NonFiniteState("non-finite position after an Euler–Maruyama step at t = " +
                               std::to_string(state.t),
                           state);
  }
  next.q = apply_boundary(field.domain(), next.q, cfg.boundary);
  next.t = state.t + h;
  return next;
}

ParticleState em_step(const ParticleState& state, const DriftField& field, const IntegratorConfig& cfg,
                      std::span<const double> noise) {
  return em_step(state, field, cfg, noise, cfg.dt);
}

ParticleState em_step(const ParticleState& state, const SystemPtr& sys, const PhaseVector& theta,
                      const IntegratorConfig& cfg, std::span<const double> noise) {
  const SpectralDrift field(sys, theta, cfg.limits, cfg.mode);
  return em_step(state, field, cfg, noise, cfg.dt);
}

std::size_t step_count(double horizon, double dt) {
  if (!(dt > 0.0)) throw ModelError("dt must be positive");
  if (!(horizon >= 0.0)) throw ModelError("horizon must be non-negative");
  auto n = static_cast<std::size_t>(std::floor(horizon / dt + 1e-9));
  if (horizon - static_cast<double>(n) * dt > 1e-9 * dt) ++n;
  return n;
}

TrajectoryRecord simulate_path(const SystemPtr& sys, const PhaseSchedule& schedule,
                               const ParticleState& initial, const IntegratorConfig& cfg,
                               double horizon, std::size_t stride, Stream& rng) {
  if (stride == 0) throw ModelError("sampling stride must be at least one step");
  for (std::size_t i = 1; i < schedule.switches.size(); ++i)
    if (schedule.switches[i].t < schedule.switches[i - 1].t)
      throw ModelError("phase switch times must be non-decreasing");

  SpectralDrift field(sys, schedule.initial, cfg.limits, cfg.mode);
  TrajectoryRecord rec;
  ParticleState state = initial;
  rec.t.push_back(state.t);
  rec.q.push_back(state.q);

  const int dim = sys->dimension();
  double w[2] = {0.0, 0.0};
  auto advance = [&](double target) {
    const double h = target - state.t;
    if (!(h > 0.0)) return;
    if (cfg.mode == IntegratorMode::stochastic)
      for (int k = 0; k < dim; ++k) w[k] = rng.normal();
    state = em_step(state, field, cfg, std::span<const double>(w, 2), h);
    state.t = target;
  };

  std::size_t next_switch = 0;
  auto apply_switches_until = [&](double target) {
    while (next_switch < schedule.switches.size() && schedule.switches[next_switch].t <= target) {
      const auto& sw = schedule.switches[next_switch];
      advance(sw.t);
      field.set_phases(sw.theta);
      rec.switch_times.push_back(sw.t);
      ++next_switch;
    }
  };

  apply_switches_until(initial.t);
  const std::size_t n = step_count(horizon, cfg.dt);
  const double t_end = initial.t + horizon;
  for (std::size_t j = 0; j < n; ++j) {
    const double target = (j + 1 == n) ? t_end : initial.t + static_cast<double>(j + 1) * cfg.dt;
    apply_switches_until(target);
    advance(target);
    if ((j + 1) % stride == 0 || j + 1 == n) {
      rec.t.push_back(state.t);
      rec.q.push_back(state.q);
    }
  }
  return rec;
}

Point sample_position(const SpectralSystem& sys, const PhaseVector& theta, double t, Stream& rng) {
  const Domain& dom = sys.domain();
  const double bound = sys.envelope_max() * sys.envelope_max();
  for (std::uint64_t trial = 0; trial < 100'000'000ULL; ++trial) {
    Point q{};
    for (int k = 0; k < dom.dim; ++k) q[k] = dom.lo[k] + rng.uniform() * dom.length(k);
    const double u = rng.uniform();
    if (u * bound < std::norm(sys.psi(theta, t, q))) return q;
  }
  throw NumericError("position sampler exceeded its trial cap");
}

}  // namespace dualwave
