#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dualwave/dynamics.hpp"
#include "dualwave/spectral.hpp"
#include "dualwave/stats.hpp"
#include "dualwave/ste.hpp"

namespace dualwave {

/// How each member's initial (Θ, q) is chosen.
///  pure:    Θ fixed (the system's own phases unless overridden), q ~ |ψ_Θ|²
///  dqe:     Θ uniform per member, q ~ |ψ_Θ|²
///  uniform: Θ fixed, q uniform over the domain
///  point:   Θ fixed, q at a given position
enum class InitPolicy { pure, dqe, uniform, point };

const char* to_string(InitPolicy policy);
InitPolicy init_policy_from_string(const std::string& name);

/// One factorization block: an independent wavefunction with its own phase
/// vector, particle, and event rate.
struct BlockSpec {
  SystemPtr system;
  RateModel rate;
  InitPolicy init = InitPolicy::pure;
  std::optional<PhaseVector> theta;
  std::optional<Point> position;
};

/// Online accumulation for the evolution-law fits of block 0.
struct FitOptions {
  bool mean = false;
  bool variance = false;
  /// Fit window in integrator steps.
  std::size_t window_steps = 4;
  /// Monte Carlo draws for {σ²}_p when K > 2.
  std::size_t variance_samples = 64;
  int axis = 0;

  bool operator==(const FitOptions&) const = default;
};

struct EnsembleSpec {
  std::vector<BlockSpec> blocks;
  std::size_t members = 1;
  double horizon = 0.0;
  IntegratorConfig integrator;
  /// Trajectory rows every `record_stride` steps (plus t = 0 and the horizon).
  std::size_t record_stride = 100;
  bool keep_trajectories = true;
  FitOptions fit;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::string config_hash;
};

void validate(const EnsembleSpec& spec);

/// Sums behind a through-the-origin least-squares fit y ≈ c·x with a
/// heteroskedasticity-robust standard error.
struct FitSums {
  std::size_t windows = 0;
  std::size_t event_windows = 0;
  double sxy = 0.0, sxx = 0.0, sx2y2 = 0.0, sx3y = 0.0, sx4 = 0.0;
  /// Σ dσ²/dt under free evolution, one term per window (variance fit only).
  double chi = 0.0, chi_sq = 0.0;

  void add(double x, double y);
  void merge(const FitSums& o);
};

/// Running sums of a scalar.
struct Moments {
  std::size_t n = 0;
  double sum = 0.0, sum_sq = 0.0;

  void add(double v) {
    ++n;
    sum += v;
    sum_sq += v * v;
  }
  void merge(const Moments& o) {
    n += o.n;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  stats::Estimate estimate() const;
};

struct MemberRecord {
  std::size_t id = 0;
  /// Row times; q holds Σ_b dim_b values per row, theta Σ_b K_b values.
  std::vector<double> t;
  std::vector<double> q;
  std::vector<double> theta;
  std::vector<SteEvent> events;
  std::size_t skipped = 0;
  /// Block-0 values at each row time along the fit axis: μ(Θ, t), σ²(Θ, t), q.
  std::vector<double> wave_mean;
  std::vector<double> wave_variance;
  std::vector<double> particle;
  /// Final per-block states.
  std::vector<RunState> final_states;
  std::string error;

  FitSums mean_fit;
  FitSums variance_fit;
  /// ({μ}_p - q_p) at each event of block 0.
  Moments mean_gap;
  /// Δμ - ({μ}_p - μ) at each event of block 0: zero in expectation.
  Moments jump_residual;
  /// ({σ²}_p - σ²) at the start of each fit window (variance fit only).
  Moments variance_bracket;
};

struct SeriesPoint {
  double t = 0.0;
  /// Ensemble averages over members of block 0 along the fit axis.
  stats::Estimate wave_mean;
  stats::Estimate wave_variance;
  stats::Estimate particle_mean;
};

struct EnsembleResult {
  std::vector<BlockSpec> blocks;
  std::size_t member_count = 0;
  double horizon = 0.0;
  double dt = 0.0;
  std::size_t fit_window_steps = 0;
  int fit_axis = 0;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::vector<MemberRecord> members;
  std::vector<SeriesPoint> series;
  std::vector<std::size_t> failed;

  std::size_t event_count() const;
};

/// Runs every member: em_step between events, apply_ste at each scheduled
/// event, per-block streams keyed by (seed, member·blocks + block). Members
/// run on `spec.threads` workers; all reductions happen afterwards in
/// member order, so the result does not depend on the worker count.
EnsembleResult run_ensemble(const EnsembleSpec& spec);

struct FitRecord {
  /// True when Σx² = 0 (no relaxation term to fit against).
  bool degenerate = false;
  std::string note;
  double window = 0.0;
  std::size_t windows = 0;
  std::size_t event_windows = 0;
  /// Least-squares slope c of y on x and its robust standard error.
  double slope = 0.0;
  double slope_se = 0.0;
  /// λ̂ = -ln(1 - c w)/w with its delta-method standard error.
  stats::Estimate rate;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double confidence = 0.95;
  double true_rate = 0.0;
  stats::Estimate mean_gap;
  stats::Estimate jump_residual;
  stats::Estimate bracket;
  stats::Estimate chi;
};

/// Fit of the centroid increment to [{μ}_p - μ]λ dt (block 0).
FitRecord mean_evolution_check(const EnsembleResult& result, double confidence = 0.95);
/// Fit of the variance increment to -[σ² - {σ²}_p]λ dt (block 0).
FitRecord variance_evolution_check(const EnsembleResult& result, double confidence = 0.95);

struct UniformityReport {
  std::size_t n = 0;
  std::size_t bins = 0;
  std::vector<stats::ChiSquareResult> components;
  double min_p = 1.0;
  /// Circular correlations of component pairs (i < j, row-major).
  std::vector<double> correlations;
  double max_abs_correlation = 0.0;
  /// min_p above significance / K.
  bool pass = true;
  double significance = 0.01;
};

UniformityReport phase_uniformity_test(const std::vector<PhaseVector>& samples, std::size_t bins = 32,
                                       double significance = 0.01);

struct DqeTestSpec {
  std::size_t members = 10000;
  InitPolicy init = InitPolicy::dqe;
  /// Phases for the pure-state comparison.
  std::optional<PhaseVector> theta;
  double t = 0.0;
  std::uint64_t seed = 0;
  std::size_t phase_bins = 8;
  std::size_t uniformity_bins = 32;
  double significance = 0.01;
  double ks_alpha = 0.05;
};

struct BinKs {
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;
  double d = 0.0;
  double critical = 0.0;
  double p_value = 1.0;
};

struct DqeReport {
  std::size_t members = 0;
  std::size_t k = 0;
  bool vacuous = false;
  UniformityReport uniformity;
  /// KS of the probability-integral transforms u = F_{Θ'}(q) pooled over members.
  double pooled_d = 0.0;
  double pooled_critical = 0.0;
  double pooled_p = 1.0;
  std::vector<BinKs> bins;
  /// Per-bin critical values use ks_alpha / bins.
  double bin_alpha = 0.0;
  /// Mean L1 between the Bayes posterior of the initial density and |ψ_Θ'|²
  /// at the bin centers.
  double posterior_gap = 0.0;
  bool conditional_pass = true;
  bool pass = true;
  std::vector<PhaseVector> phases_after;
  std::vector<Point> positions;
};

/// One STE per member of a freshly initialized 1-D ensemble, then checks
/// that phases are uniform and that q given Θ' follows |ψ_Θ'|².
DqeReport dqe_stationarity_test(const SystemPtr& sys, const DqeTestSpec& spec, std::size_t threads = 1);

struct IrreversibilityReport {
  /// Circular variance per event epoch (row) and phase component (column).
  std::vector<std::vector<double>> circular_variance;
  std::vector<std::vector<double>> std_error;
  std::vector<std::size_t> members_at_epoch;
  std::size_t violations = 0;
  bool monotone = true;
};

/// Circular variance of block-0 phases across members indexed by event
/// epoch (0 = initial). Epochs with fewer than `min_members` members are
/// dropped. A decrease of more than 3 standard errors counts as a violation.
IrreversibilityReport irreversibility(const EnsembleResult& result, std::size_t min_members = 100);

}  // namespace dualwave
