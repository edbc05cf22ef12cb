#pragma once

#include <string>
#include <vector>

#include "dualwave/config.hpp"
#include "dualwave/ensemble.hpp"
#include "dualwave/fokker_planck.hpp"
#include "dualwave/grw.hpp"
#include "dualwave/macro.hpp"
#include "dualwave/stats.hpp"

namespace dualwave {

// ---------------------------------------------------------------- run

/// Conservation across STEs: ⟨H⟩ and ΔE recomputed from the phases before
/// and after every event must agree bit for bit, and K = 0 blocks must leave
/// Θ untouched. Level magnitudes and member coefficients live in the
/// immutable SpectralSystem and cannot change.
struct MscReport {
  std::size_t events = 0;
  std::size_t violations = 0;
  bool pass = true;
};

MscReport msc_check(const EnsembleResult& result);

// ---------------------------------------------------------------- oracle

struct OracleCheckpoint {
  double t = 0.0;
  /// Paths against |ψ(·, t)|² on the solver grid.
  QeDistance qe;
  /// Binned L1 between the path histogram and the solver density.
  double l1_paths_solver = 0.0;
  /// L1 between the solver density and |ψ(·, t)|² on the solver grid.
  double l1_solver_psi = 0.0;
};

struct OracleReport {
  std::string init;
  std::size_t paths = 0;
  std::size_t failed_paths = 0;
  /// L²/D along axis 0 for bounded domains.
  double tau = 0.0;
  std::vector<OracleCheckpoint> checkpoints;
  /// Family-wise 5% band: each checkpoint is tested at 0.05/checkpoints.
  double ks_alpha = 0.0;
  bool equilibrium_pass = true;
  bool relaxation_pass = true;
  bool pass = true;
  DensityField solver_final;
  DensityField psi_final;
  DensityField histogram_final;
};

/// Evolves `paths` particles at the block-0 phases without STEs and
/// compares them with |ψ|² and with the Fokker–Planck solution.
OracleReport run_oracle(const SimConfig& config, const SystemPtr& sys, std::size_t threads);

// ---------------------------------------------------------------- ste-test

struct SteTestCase {
  std::size_t point = 0;
  Point q{};
  double t = 0.0;
  /// "theta" for K = 1, "joint" or "marginal_<i>" for K = 2.
  std::string kind;
  stats::ChiSquareResult chi;
  double mean_trials = 0.0;
};

struct SteTestReport {
  std::size_t k = 0;
  std::size_t draws = 0;
  std::size_t bins = 0;
  double significance = 0.01;
  std::vector<SteTestCase> cases;
  std::size_t failures = 0;
  std::size_t allowed_failures = 0;
  bool pass = true;
  /// Phase histogram of the first point's draws (component 0) with the
  /// expected counts, for plotting.
  std::vector<double> histogram;
  std::vector<double> expected;
};

/// Draws Θ' at random (q, t) and compares the histogram with the bin
/// integrals of |ψ(q, Θ', t)|²/Γ(q) (Gauss–Legendre per bin). K ≤ 2.
SteTestReport run_ste_test(const SimConfig& config, const SystemPtr& sys, std::size_t threads);

// ---------------------------------------------------------------- dqe

DqeReport run_dqe(const SimConfig& config, const SystemPtr& sys, std::size_t threads);

// ---------------------------------------------------------------- grw

struct GrwHitRecord {
  std::size_t index = 0;
  double t = 0.0;
  double z = 0.0;
  double variance_before = 0.0;
  double variance_after = 0.0;
  double energy_before = 0.0;
  double energy_after = 0.0;
};

struct GrwReport {
  std::vector<GrwHitRecord> hits;
  /// ∫F dz of the initial packet.
  double f_integral = 0.0;
  /// Width² of ψ itself (ψ ∝ e^{-x²/(2w²)}, so w² = 2·Var|ψ|²) after a hit
  /// at the packet center, and (w₀⁻² + α)⁻¹ with w₀² = 2s².
  double posterior_variance = 0.0;
  double posterior_expected = 0.0;
  /// Variance of sampled hit centers, and s² + 1/(2α).
  stats::Estimate center_variance;
  double center_expected = 0.0;
  bool integral_pass = true;
  bool posterior_pass = true;
  bool center_pass = true;
  bool pass = true;
  std::vector<double> z_grid;
  std::vector<double> f_values;
  GridWavefunction initial;
  GridWavefunction final;
};

GrwReport run_grw(const SimConfig& config);

// ---------------------------------------------------------------- macro

struct DriftPoint {
  double velocity = 0.0;
  /// σMU/ħ.
  double g = 0.0;
  double r_over_sigma = 0.0;
  double closed = 0.0;
  double weighted = 0.0;
  stats::Estimate mc;
  /// Tolerance 3·SE + |weighted - closed|.
  double tolerance = 0.0;
  bool pass = true;
};

struct DriftScan {
  double velocity = 0.0;
  std::vector<double> r;
  std::vector<double> closed;
  std::vector<double> weighted;
  double max_deviation = 0.0;
  /// ħ/(2Mσ).
  double bound = 0.0;
  bool pass = true;
};

struct ArithmeticRow {
  std::string name;
  double value = 0.0;
  double expected = 0.0;
  bool pass = true;
};

struct StepLawReport {
  bool ran = false;
  std::size_t intervals = 0;
  std::size_t members = 0;
  stats::Estimate step;
  double expected = 0.0;
  /// Nλτ with τ = Mσ²/ħ.
  double rate_tau = 0.0;
  bool pass = true;
};

struct MacroReport {
  double mass = 0.0;
  std::vector<DriftPoint> points;
  std::vector<DriftScan> scans;
  std::vector<ArithmeticRow> arithmetic;
  SpreadCheck spread;
  StepLawReport step;
  bool pass = true;
};

/// Order-of-magnitude checks in SI units (within a factor of 10).
std::vector<ArithmeticRow> physical_arithmetic();

MacroReport run_macro(const SimConfig& config, std::size_t threads);

}  // namespace dualwave
