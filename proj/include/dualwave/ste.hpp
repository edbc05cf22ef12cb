#pragma once

#include <cstdint>
#include <vector>

#include "dualwave/dynamics.hpp"
#include "dualwave/fokker_planck.hpp"
#include "dualwave/rng.hpp"
#include "dualwave/spectral.hpp"
#include "dualwave/stats.hpp"

namespace dualwave {

enum class RateMode { constant, per_particle, energy_spread };

const char* to_string(RateMode mode);
RateMode rate_mode_from_string(const std::string& name);

struct RateModel {
  RateMode mode = RateMode::constant;
  double lambda = 0.1;
  /// N for per_particle mode.
  int n_particles = 1;
  /// κ for energy_spread mode: rate = κ ΔE / ħ.
  double kappa = 0.0;

  bool operator==(const RateModel&) const = default;
};

/// Throws ModelError when the rate parameters are out of range.
void validate(const RateModel& rate);
/// Effective event rate: λ, Nλ, or κΔE/ħ.
double effective_rate(const RateModel& rate, const SpectralSystem& sys);

/// Σ_i |C_i|²|Φ_i(q)|², i.e. Γ/(2π)^K. Throws DomainError outside the domain.
double gamma_reduced(const SpectralSystem& sys, const Point& q);
/// Γ(q) = (2π)^K Σ_i |C_i|²|Φ_i(q)|².
double gamma(const SpectralSystem& sys, const Point& q);

/// f(Θ'|q, t) = |ψ(q, Θ', t)|² / Γ(q). Throws NumericError when Γ = 0.
double ste_density(const SpectralSystem& sys, double t, const Point& q, const PhaseVector& theta);

struct SteSample {
  PhaseVector theta;
  std::uint64_t trials = 0;
};

/// Draws Θ' from f(·|q, t) by rejection under the envelope (Σ_i|a_i|)²
/// with uniform proposals. Throws NumericError when Γ = 0 or the trial cap
/// is exceeded.
SteSample sample_ste(const SpectralSystem& sys, double t, const Point& q, Stream& rng,
                     std::uint64_t trial_cap = 10'000'000ULL);

/// Event times in (0, horizon], i.i.d. exponential gaps at the effective rate.
std::vector<double> schedule_events(const RateModel& rate, const SpectralSystem& sys, double horizon,
                                    Stream& rng);

/// 1 - e^{-rate·T}.
double event_probability(double rate, double duration);

/// f(Θ'|Θ) = ∫ f(Θ'|q)|ψ(q, Θ, t)|² dq tabulated on a uniform Θ' grid
/// (K ≤ 2; `points` per phase). values are densities; Σ values·cell = 1.
struct KernelTable {
  std::size_t k = 0;
  std::size_t points = 0;
  double cell = 1.0;
  std::vector<double> values;

  double total() const;
  PhaseVector node(std::size_t flat) const;
};

KernelTable transition_kernel(const SpectralSystem& sys, const PhaseVector& theta, double t,
                              std::size_t points = 64);

/// ρ'(q|Θ') = ρ(q) f(Θ'|q) / f(Θ') on the density's grid (Bayes update of a
/// position density after an STE that produced Θ'). Throws NumericError on
/// a zero marginal.
DensityField posterior_density(const SpectralSystem& sys, const DensityField& rho,
                               const PhaseVector& theta, double t);

struct DqeMember {
  PhaseVector theta;
  ParticleState state;
};

/// Decoherent equilibrium ensemble: i.i.d. uniform phases per member, each
/// position drawn from that member's own |ψ_Θ(·, t)|². Member m uses the
/// streams keyed by `first_id + m`.
std::vector<DqeMember> make_dqe(const SpectralSystem& sys, std::size_t members, std::uint64_t seed,
                                double t = 0.0, std::uint64_t first_id = 0);

struct SteEvent {
  double t = 0.0;
  std::size_t block = 0;
  PhaseVector before;
  PhaseVector after;
  Point q{};
  std::uint64_t trials = 0;
};

/// The mutable part of one (wavefunction, particle) pair.
struct RunState {
  PhaseVector theta;
  ParticleState particle;
  std::vector<SteEvent> log;
  /// Events skipped because Γ vanished at the particle position.
  std::size_t skipped = 0;
};

/// Replaces Θ by a draw from f(·|q_p, t) at the particle's current time;
/// q_p and every coefficient magnitude stay untouched. Returns false (and
/// counts a skip) when Γ(q_p) = 0.
bool apply_ste(RunState& state, const SpectralSystem& sys, Stream& rng, std::size_t block = 0);

/// Exact phase average of the position moments over f(Θ'|q):
/// E[⟨x⟩] and E[⟨x²⟩] along `axis`. Time independent.
struct PostSteMoments {
  double mean = 0.0;
  double second = 0.0;
};
PostSteMoments post_ste_moments(const SpectralSystem& sys, const Point& q, int axis = 0);

/// {σ²}_p(q, t) = E_f[σ²(Θ', t)]. Exact phase quadrature for K ≤ 2,
/// Monte Carlo with `samples` draws otherwise.
stats::Estimate post_ste_variance(const SpectralSystem& sys, double t, const Point& q, int axis,
                                 Stream& rng, std::size_t samples = 256);

}  // namespace dualwave
