#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualwave/dynamics.hpp"
#include "dualwave/ensemble.hpp"
#include "dualwave/spectral.hpp"
#include "dualwave/ste.hpp"

namespace dualwave {

enum class UnitSystem { natural, physical };

const char* to_string(UnitSystem units);

/// Thrown by parse_config. `errors` lists every problem as "path: message".
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

struct BlockConfig {
  ModelSpec model;
  RateModel rate;
  InitPolicy init = InitPolicy::pure;
  std::optional<PhaseVector> theta;
  std::optional<Point> position;

  bool operator==(const BlockConfig&) const = default;
};

struct EnsembleConfig {
  std::size_t members = 1000;
  double horizon = 1.0;
  std::size_t record_stride = 100;
  bool keep_trajectories = true;
  FitOptions fit;

  bool operator==(const EnsembleConfig&) const = default;
};

/// Path ensemble against the Fokker–Planck solution (block 0).
struct OracleConfig {
  /// "equilibrium" starts from |ψ|², "uniform" from the flat density.
  std::string init = "equilibrium";
  std::size_t paths = 10000;
  double horizon = 1.0;
  std::size_t checkpoints = 10;
  /// Cells per axis of the solver grid.
  std::size_t cells = 512;
  double solver_dt = 1e-3;
  /// Bins per axis for the path-vs-solver L1 comparison.
  std::size_t l1_bins = 16;
  /// Threshold on the L1 gaps.
  double l1_tolerance = 0.02;

  bool operator==(const OracleConfig&) const = default;
};

/// Sampler fidelity at random (q, t).
struct SteTestConfig {
  std::size_t draws = 100000;
  std::size_t points = 5;
  /// Bins per phase component.
  std::size_t bins = 64;
  double t_max = 1.0;
  /// Number of failed tests tolerated at the significance level.
  std::size_t allowed_failures = 0;

  bool operator==(const SteTestConfig&) const = default;
};

struct DqeConfig {
  std::size_t members = 10000;
  InitPolicy init = InitPolicy::dqe;
  double t = 0.0;
  std::size_t phase_bins = 8;
  std::size_t uniformity_bins = 32;
  double ks_alpha = 0.05;

  bool operator==(const DqeConfig&) const = default;
};

/// Gaussian packet on a grid, hit repeatedly.
struct GrwConfig {
  double alpha = 100.0;
  double rate = 1.0;
  std::size_t hits = 20;
  double lo = -5.0;
  double hi = 5.0;
  std::size_t points = 2001;
  double center = 0.0;
  double width = 0.5;
  double wavenumber = 0.0;
  /// Hit-center draws for the variance check.
  std::size_t draws = 100000;

  bool operator==(const GrwConfig&) const = default;
};

/// Drift scan of the discretized free packet, the step law, and the
/// physical-constant arithmetic.
struct MacroConfig {
  double sigma = 1.0;
  /// Packet velocities U of the drift scan.
  std::vector<double> velocities{0.0, 1.0, 3.0};
  double particle_mass = 1.0;
  int particles = 100;
  double lambda = 0.1;
  int levels = 128;
  double coverage = 6.0;
  std::size_t samples = 20000;
  /// R_p/σ values where the Monte Carlo drift is checked.
  std::vector<double> points{-3.0, -1.0, 0.0, 1.0, 3.0};
  /// Dense scan of the closed form over ±scan_extent·σ.
  std::size_t scan_points = 241;
  double scan_extent = 6.0;
  /// Members and horizon of the step-law run; 0 members skips it.
  std::size_t step_members = 0;
  double step_horizon = 10.0;
  double step_velocity = 1.0;
  double length_exponent = 0.5;

  bool operator==(const MacroConfig&) const = default;
};

struct SimConfig {
  std::uint64_t seed = 0;
  UnitSystem units = UnitSystem::natural;
  std::string output;
  std::vector<BlockConfig> blocks;
  IntegratorConfig integrator;
  EnsembleConfig ensemble;
  double significance = 0.01;
  OracleConfig oracle;
  SteTestConfig ste_test;
  DqeConfig dqe;
  GrwConfig grw;
  MacroConfig macro;

  bool operator==(const SimConfig&) const = default;
};

/// Parses a JSON document (comments allowed). Unknown keys, type errors
/// and invalid values are collected and thrown together as ConfigError;
/// syntax errors report line and column.
SimConfig parse_config(const std::string& text);
SimConfig load_config(const std::string& path);

/// Canonical document with every default filled in; parse_config of the
/// result reproduces the same SimConfig.
std::string emit_config(const SimConfig& config);

/// SHA-256 (hex) of emit_config.
std::string config_hash(const SimConfig& config);

/// One system per block.
std::vector<SystemPtr> build_systems(const SimConfig& config);

EnsembleSpec ensemble_spec(const SimConfig& config, const std::vector<SystemPtr>& systems,
                           std::size_t threads);

}  // namespace dualwave
