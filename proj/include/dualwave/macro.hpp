#pragma once

#include "dualwave/rng.hpp"
#include "dualwave/spectral.hpp"
#include "dualwave/stats.hpp"

namespace dualwave {

/// SI values used by the physical-unit arithmetic checks.
namespace constants {
inline constexpr double hbar = 1.054571817e-34;          // J s
inline constexpr double proton_mass = 1.67262192369e-27;  // kg
inline constexpr double electron_mass = 9.1093837015e-31;  // kg
inline constexpr double seconds_per_year = 365.25 * 86400.0;
/// STE rate per particle, λ⁻¹ ≈ 10¹⁶ s.
inline constexpr double ste_rate = 1e-16;  // s⁻¹
/// GRW hit rate per particle as usually quoted, 10⁻⁸ yr⁻¹ (≈ 3.2e-16 s⁻¹).
inline constexpr double grw_rate_per_year = 1e-8;
/// Single-particle localization scale L(1) = 10⁻⁵ cm.
inline constexpr double single_particle_length = 1e-7;  // m
}  // namespace constants

/// Free Gaussian packet ψ(R, 0) ∝ e^{-R²/(4σ²) + iMUR/ħ}, discretized on a
/// momentum lattice.
struct GaussianPacketSpec {
  double sigma = 1.0;
  double velocity = 0.0;
  double mass = 1.0;
  double hbar = 1.0;
  int levels = 128;
  /// Half-width of the momentum window in units of ħ/(2σ).
  double coverage = 6.0;
};

void validate(const GaussianPacketSpec& spec);

/// Momentum window and spacing of the discretized packet: levels sit at
/// P_k = (m + k + ½)ΔP for k = 0..levels-1, covering [max(0, |MU| - cs), |MU| + cs]
/// with s = ħ/(2σ). The lower edge is snapped to a multiple of ΔP so that
/// all ±P_k plane waves stay orthogonal over one period 2πħ/ΔP.
struct MomentumLattice {
  double spacing = 0.0;
  long offset = 0;
  int levels = 0;

  double momentum(int k) const { return (static_cast<double>(offset + k) + 0.5) * spacing; }
};

MomentumLattice momentum_lattice(const GaussianPacketSpec& spec);

/// Each level k carries the degenerate pair e^{±iP_kR/ħ} with weights
/// e^{-σ²(P_k ∓ MU)²/ħ²} and energy P_k²/(2M).
SystemPtr build_gaussian_packet(const GaussianPacketSpec& spec, std::size_t grid_points = 0);

/// Center-of-mass reduction of an N-particle body.
struct ComSystem {
  SystemPtr system;
  int n_particles = 1;
  double total_mass = 1.0;
  /// Nλ.
  double rate = 0.0;
  /// ħ/M.
  double diffusion = 0.0;
};

ComSystem com_reduce(int n_particles, double particle_mass, GaussianPacketSpec packet, double lambda,
                     std::size_t grid_points = 0);

/// Closed-form phase-averaged drift of the continuous packet at R_p.
double mean_drift_closed(const GaussianPacketSpec& spec, double r_p);

/// Σ_i |C_i|²|Φ_i|² b_i / Σ_i |C_i|²|Φ_i|² with b_i the drift of the
/// stationary state Φ_i: the exact average of the drift over f(Θ'|R_p).
double mean_drift_weighted(const SpectralSystem& sys, double r_p);

/// Monte Carlo average of the drift at R_p over STE-sampled phase vectors.
stats::Estimate mean_drift_mc(const SpectralSystem& sys, double r_p, std::size_t samples, Stream& rng,
                              double t = 0.0);

/// L(N) = N^{-exponent} L(1).
double scaled_length(double single_length, double n, double exponent = 0.5);
/// τ(N) = N m L(N)² / ħ.
double tau(double n, double particle_mass, double length, double hbar = 1.0);

struct SpreadCheck {
  /// ħ/(N² m λ).
  double variance = 0.0;
  /// L(1)²/N.
  double reference = 0.0;
  double ratio = 0.0;
  /// ratio below `negligible_ratio`.
  bool negligible = false;
};

/// Packet spreading between consecutive events, compared with L(1)²/N.
SpreadCheck spread_between_events(double n, double particle_mass, double lambda, double single_length,
                                  double hbar = 1.0, double negligible_ratio = 0.1);

/// R_p0 + b/(Nλ).
double mean_step(double r_p0, double drift, double n, double lambda);

}  // namespace dualwave
