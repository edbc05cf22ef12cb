#pragma once

#include <functional>
#include <vector>

#include "dualwave/dynamics.hpp"

namespace dualwave {

/// Uniform cell-centered grid over a rectangular domain.
struct CellGrid {
  int dim = 1;
  Point lo{};
  Point hi{};
  std::array<std::size_t, 2> cells{256, 1};

  double h(int k) const { return (hi[k] - lo[k]) / static_cast<double>(cells[k]); }
  double center(int k, std::size_t i) const { return lo[k] + (static_cast<double>(i) + 0.5) * h(k); }
  double cell_volume() const { return dim == 2 ? h(0) * h(1) : h(0); }
  std::size_t size() const { return cells[0] * (dim == 2 ? cells[1] : 1); }
  std::size_t index(std::size_t ix, std::size_t iy) const { return iy * cells[0] + ix; }
  Point point(std::size_t ix, std::size_t iy) const {
    return {center(0, ix), dim == 2 ? center(1, iy) : 0.0};
  }
};

/// A grid matching a domain; 2-D domains get `cells` cells per axis.
CellGrid cell_grid(const Domain& domain, std::size_t cells);

/// Probability density sampled at cell centers (x index fastest).
struct DensityField {
  CellGrid grid;
  std::vector<double> values;
  double t = 0.0;

  /// Σ ρ·cell volume.
  double mass() const;
};

/// |ψ(·, Θ, t)|² at the cell centers, rescaled to unit mass.
DensityField psi_density(const SpectralSystem& sys, const PhaseVector& theta, double t,
                         const CellGrid& grid);
/// Γ(q)/(2π)^K = Σ|C_i|²|Φ_i(q)|², the position marginal of the decoherent
/// mixture, rescaled to unit mass.
DensityField mixture_density(const SpectralSystem& sys, const CellGrid& grid);
DensityField uniform_density(const CellGrid& grid);
/// Product of per-axis normal densities, rescaled to unit mass on the grid.
DensityField gaussian_density(const CellGrid& grid, Point center, Vec2 std_dev);
DensityField density_from_function(const CellGrid& grid, const std::function<double(const Point&)>& f,
                                   bool normalize = true);

/// Σ|a - b|·cell volume; grids must match.
double l1_distance(const DensityField& a, const DensityField& b);

/// Integrates ∂ρ/∂t + ∇·(ρb) = ½∇·(D∇ρ) with zero-flux walls. Each step
/// is backward Euler on an exponentially fitted (Scharfetter–Gummel) flux,
/// which is positive and mass conserving; 2-D uses dimension splitting.
/// Throws NumericError when mass drifts by more than 1e-6 or the density
/// turns negative.
DensityField fp_oracle(const DriftField& field, const DensityField& rho0, double horizon, double dt);

/// Same integration, returning the density at each checkpoint time
/// (absolute times, non-decreasing, not before rho0.t).
std::vector<DensityField> fp_series(const DriftField& field, const DensityField& rho0,
                                    const std::vector<double>& checkpoints, double dt);

struct QeDistance {
  std::size_t n = 0;
  /// One-sample KS statistic (1-D) or Fasano–Franceschini statistic (2-D).
  double ks = 0.0;
  double p_value = 1.0;
  /// L1 distance between the sample histogram and the reference bin masses.
  double l1 = 0.0;
  std::size_t bins = 0;
};

/// Compares samples with a reference density. `bins` is per axis.
QeDistance qe_distance(const std::vector<Point>& samples, const DensityField& reference,
                       std::size_t bins = 256);

/// Histogram of positions as a density on `grid` (unit mass).
DensityField histogram_density(const std::vector<Point>& samples, const CellGrid& grid);

/// Coarsens a density by summing blocks of cells so each axis has `bins` cells.
DensityField rebin(const DensityField& field, std::size_t bins);

}  // namespace dualwave
