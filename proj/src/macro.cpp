#include "dualwave/macro.hpp"

#include <cmath>

#include "dualwave/ste.hpp"

namespace dualwave {

void validate(const GaussianPacketSpec& spec) {
  if (!(spec.sigma > 0.0) || !std::isfinite(spec.sigma)) throw ModelError("packet sigma must be positive");
  if (!(spec.mass > 0.0) || !std::isfinite(spec.mass)) throw ModelError("packet mass must be positive");
  if (!(spec.hbar > 0.0) || !std::isfinite(spec.hbar)) throw ModelError("hbar must be positive");
  if (!std::isfinite(spec.velocity)) throw ModelError("packet velocity must be finite");
  if (spec.levels < 1) throw ModelError("packet needs at least one momentum level");
  // The window must hold 99.99% of the momentum distribution.
  if (!(std::erf(spec.coverage / std::sqrt(2.0)) >= 0.9999))
    throw ModelError("momentum grid covers less than 99.99% of the packet (coverage must be >= 3.9)");
}

MomentumLattice momentum_lattice(const GaussianPacketSpec& spec) {
  validate(spec);
  const double s = spec.hbar / (2.0 * spec.sigma);
  const double p0 = std::abs(spec.mass * spec.velocity);
  const double hi = p0 + spec.coverage * s;
  const double lo = std::max(0.0, p0 - spec.coverage * s);
  MomentumLattice lat;
  lat.levels = spec.levels;
  lat.spacing = (hi - lo) / spec.levels;
  lat.offset = static_cast<long>(std::floor(lo / lat.spacing));
  return lat;
}

SystemPtr build_gaussian_packet(const GaussianPacketSpec& spec, std::size_t grid_points) {
  const MomentumLattice lat = momentum_lattice(spec);
  auto basis = std::make_shared<PlaneWaveBasis>(lat.spacing, spec.mass, spec.hbar);
  const double p0 = spec.mass * spec.velocity;
  const double a = spec.sigma / spec.hbar;
  std::vector<Level> levels;
  levels.reserve(static_cast<std::size_t>(lat.levels));
  for (int k = 0; k < lat.levels; ++k) {
    const double p = lat.momentum(k);
    const double wp = std::exp(-a * a * (p - p0) * (p - p0));
    const double wm = std::exp(-a * a * (p + p0) * (p + p0));
    LevelMember members[2];
    members[0].mode.momentum = p;
    members[0].coeff = wp;
    members[1].mode.momentum = -p;
    members[1].coeff = wm;
    ComposedLevel c = compose_degenerate(members);
    Level level;
    level.magnitude = c.magnitude;
    level.phase0 = c.phase;
    level.members = std::move(c.members);
    levels.push_back(std::move(level));
  }
  return std::make_shared<const SpectralSystem>(std::move(basis), std::move(levels), grid_points);
}

ComSystem com_reduce(int n_particles, double particle_mass, GaussianPacketSpec packet, double lambda,
                     std::size_t grid_points) {
  if (n_particles < 1) throw ModelError("particle count must be >= 1");
  if (!(particle_mass > 0.0)) throw ModelError("particle mass must be positive");
  if (!(lambda >= 0.0)) throw ModelError("rate must be non-negative");
  ComSystem out;
  out.n_particles = n_particles;
  out.total_mass = n_particles * particle_mass;
  packet.mass = out.total_mass;
  out.system = build_gaussian_packet(packet, grid_points);
  out.rate = n_particles * lambda;
  out.diffusion = packet.hbar / out.total_mass;
  return out;
}

double mean_drift_closed(const GaussianPacketSpec& spec, double r_p) {
  if (!(spec.sigma > 0.0) || !(spec.mass > 0.0) || !(spec.hbar > 0.0))
    throw ModelError("packet sigma, mass and hbar must be positive");
  const double g = spec.sigma * spec.mass * spec.velocity / spec.hbar;
  const double e = std::exp(-2.0 * g * g - r_p * r_p / (2.0 * spec.sigma * spec.sigma));
  return (spec.velocity - spec.hbar * r_p / (2.0 * spec.mass * spec.sigma * spec.sigma) * e) / (1.0 + e);
}

double mean_drift_weighted(const SpectralSystem& sys, double r_p) {
  const Point q{r_p, 0.0};
  sys.check_point(q);
  const double coef = sys.hbar() / sys.mass()[0];
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < sys.level_count(); ++i) {
    const Jet j = sys.level_jet(i, q);
    const double w = sys.levels()[i].magnitude * sys.levels()[i].magnitude;
    const Complex z = std::conj(j.value) * j.d1[0];
    num += w * coef * (z.real() + z.imag());
    den += w * std::norm(j.value);
  }
  if (!(den > 0.0)) throw NumericError("gamma vanishes at the particle position");
  return num / den;
}

stats::Estimate mean_drift_mc(const SpectralSystem& sys, double r_p, std::size_t samples, Stream& rng,
                              double t) {
  if (samples < 2) throw ModelError("Monte Carlo drift needs at least two samples");
  const Point q{r_p, 0.0};
  std::vector<double> v(samples);
  for (auto& x : v) x = drift(sys, sample_ste(sys, t, q, rng).theta, t, q)[0];
  return stats::mean(v);
}

double scaled_length(double single_length, double n, double exponent) {
  if (!(single_length > 0.0) || !(n >= 1.0)) throw ModelError("length and N must be positive");
  return single_length * std::pow(n, -exponent);
}

double tau(double n, double particle_mass, double length, double hbar) {
  if (!(n > 0.0) || !(particle_mass > 0.0) || !(length > 0.0) || !(hbar > 0.0))
    throw ModelError("tau inputs must be positive");
  return n * particle_mass * length * length / hbar;
}

SpreadCheck spread_between_events(double n, double particle_mass, double lambda, double single_length,
                                  double hbar, double negligible_ratio) {
  if (!(n > 0.0) || !(particle_mass > 0.0) || !(lambda > 0.0) || !(single_length > 0.0) || !(hbar > 0.0))
    throw ModelError("spread inputs must be positive");
  SpreadCheck out;
  out.variance = hbar / (n * n * particle_mass * lambda);
  out.reference = single_length * single_length / n;
  out.ratio = out.variance / out.reference;
  out.negligible = out.ratio < negligible_ratio;
  return out;
}

double mean_step(double r_p0, double drift_velocity, double n, double lambda) {
  const double rate = n * lambda;
  if (!(rate > 0.0)) throw ModelError("mean step needs N lambda > 0");
  return r_p0 + drift_velocity / rate;
}

}  // namespace dualwave
