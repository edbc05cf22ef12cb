#include "dualwave/ste.hpp"

#include <cmath>

namespace dualwave {

const char* to_string(RateMode mode) {
  switch (mode) {
    case RateMode::constant: return "constant";
    case RateMode::per_particle: return "per_particle";
    case RateMode::energy_spread: return "energy_spread";
  }
  return "?";
}

RateMode rate_mode_from_string(const std::string& name) {
  if (name == "constant") return RateMode::constant;
  if (name == "per_particle") return RateMode::per_particle;
  if (name == "energy_spread") return RateMode::energy_spread;
  throw ModelError("unknown rate mode '" + name + "'");
}

void validate(const RateModel& rate) {
  if (!(rate.lambda >= 0.0) || !std::isfinite(rate.lambda)) throw ModelError("rate lambda must be >= 0");
  if (rate.n_particles < 1) throw ModelError("rate n_particles must be >= 1");
  if (!(rate.kappa >= 0.0) || !std::isfinite(rate.kappa)) throw ModelError("rate kappa must be >= 0");
}

double effective_rate(const RateModel& rate, const SpectralSystem& sys) {
  validate(rate);
  switch (rate.mode) {
    case RateMode::constant: return rate.lambda;
    case RateMode::per_particle: return rate.n_particles * rate.lambda;
    case RateMode::energy_spread: return rate.kappa * sys.energy_spread() / sys.hbar();
  }
  return 0.0;
}

namespace {

std::vector<Complex> amplitudes(const SpectralSystem& sys, double t, const Point& q) {
  std::vector<Complex> b(sys.level_count());
  sys.level_amplitudes(t, q, b);
  return b;
}

double sum_norm(const std::vector<Complex>& b) {
  double s = 0.0;
  for (const auto& v : b) s += std::norm(v);
  return s;
}

Complex combine(const std::vector<Complex>& b, const PhaseVector& theta) {
  Complex z = b[0];
  for (std::size_t i = 1; i < b.size(); ++i) z += b[i] * std::polar(1.0, theta[i - 1]);
  return z;
}

}  // namespace

double gamma_reduced(const SpectralSystem& sys, const Point& q) { return sum_norm(amplitudes(sys, 0.0, q)); }

double gamma(const SpectralSystem& sys, const Point& q) {
  return std::pow(kTwoPi, static_cast<double>(sys.phase_count())) * gamma_reduced(sys, q);
}

double ste_density(const SpectralSystem& sys, double t, const Point& q, const PhaseVector& theta) {
  if (theta.size() != sys.phase_count()) throw ModelError("phase vector length does not match K");
  const auto b = amplitudes(sys, t, q);
  const double s = sum_norm(b);
  if (!(s > 0.0)) throw NumericError("gamma vanishes at the particle position");
  return std::norm(combine(b, theta)) / (std::pow(kTwoPi, static_cast<double>(sys.phase_count())) * s);
}

SteSample sample_ste(const SpectralSystem& sys, double t, const Point& q, Stream& rng,
                     std::uint64_t trial_cap) {
  const auto b = amplitudes(sys, t, q);
  if (!(sum_norm(b) > 0.0)) throw NumericError("gamma vanishes at the particle position");
  const std::size_t k = sys.phase_count();
  SteSample out;
  if (k == 0) {
    out.trials = 1;
    return out;
  }
  double env = 0.0;
  for (const auto& v : b) env += std::abs(v);
  env *= env;
  std::vector<double> proposal(k);
  while (out.trials < trial_cap) {
    ++out.trials;
    Complex z = b[0];
    for (std::size_t i = 0; i < k; ++i) {
      proposal[i] = rng.angle();
      z += b[i + 1] * std::polar(1.0, proposal[i]);
    }
    if (rng.uniform() * env < std::norm(z)) {
      out.theta = PhaseVector(proposal);
      return out;
    }
  }
  throw NumericError("STE sampler exceeded its trial cap of " + std::to_string(trial_cap));
}

std::vector<double> schedule_events(const RateModel& rate, const SpectralSystem& sys, double horizon,
                                    Stream& rng) {
  if (!(horizon >= 0.0)) throw ModelError("horizon must be non-negative");
  const double r = effective_rate(rate, sys);
  std::vector<double> times;
  if (r == 0.0) return times;
  double t = 0.0;
  for (;;) {
    t += rng.exponential(r);
    if (t > horizon) break;
    times.push_back(t);
  }
  return times;
}

double event_probability(double rate, double duration) {
  if (!(rate >= 0.0) || !(duration >= 0.0)) throw ModelError("rate and duration must be non-negative");
  return -std::expm1(-rate * duration);
}

// ---------------------------------------------------------------- kernel

double KernelTable::total() const {
  double s = 0.0;
  for (double v : values) s += v;
  return s * cell;
}

PhaseVector KernelTable::node(std::size_t flat) const {
  std::vector<double> a(k);
  const double step = kTwoPi / static_cast<double>(points);
  for (std::size_t i = 0; i < k; ++i) {
    a[i] = step * static_cast<double>(flat % points);
    flat /= points;
  }
  return PhaseVector(std::move(a));
}

KernelTable transition_kernel(const SpectralSystem& sys, const PhaseVector& theta, double t,
                              std::size_t points) {
  const std::size_t k = sys.phase_count();
  if (k > 2) throw ModelError("transition kernel is tabulated only for K <= 2");
  if (theta.size() != k) throw ModelError("phase vector length does not match K");
  if (points < 3) throw ModelError("kernel needs at least 3 points per phase");
  const std::size_t n = sys.level_count();

  // f(Θ'|Θ) = Σ_ij e^{i(Θ'_j - Θ'_i)} W_ij with W_ij = ∫ b_i* b_j |ψ_Θ|² / Γ dq.
  std::vector<Complex> w(n * n);
  const auto& g = sys.grid();
  const double scale = std::pow(kTwoPi, -static_cast<double>(k));
  for (std::size_t iy = 0; iy < g.points[1]; ++iy) {
    for (std::size_t ix = 0; ix < g.points[0]; ++ix) {
      const Point q{g.node(0, ix), g.dim == 2 ? g.node(1, iy) : 0.0};
      const double wq = g.weight(0, ix) * (g.dim == 2 ? g.weight(1, iy) : 1.0);
      const auto b = amplitudes(sys, t, q);
      const double s = sum_norm(b);
      if (!(s > 1e-300)) continue;
      const double rho = std::norm(combine(b, theta));
      const double f = wq * rho * scale / s;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) w[i * n + j] += std::conj(b[i]) * b[j] * f;
    }
  }

  KernelTable table;
  table.k = k;
  table.points = points;
  table.cell = std::pow(kTwoPi / static_cast<double>(points), static_cast<double>(k));
  std::size_t total = 1;
  for (std::size_t i = 0; i < k; ++i) total *= points;
  table.values.resize(total);
  std::vector<Complex> e(n);
  for (std::size_t flat = 0; flat < total; ++flat) {
    const PhaseVector p = table.node(flat);
    e[0] = 1.0;
    for (std::size_t i = 1; i < n; ++i) e[i] = std::polar(1.0, p[i - 1]);
    Complex v{};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) v += std::conj(e[i]) * e[j] * w[i * n + j];
    table.values[flat] = v.real();
  }
  if (k == 0) table.cell = 1.0;
  return table;
}

DensityField posterior_density(const SpectralSystem& sys, const DensityField& rho,
                               const PhaseVector& theta, double t) {
  if (theta.size() != sys.phase_count()) throw ModelError("phase vector length does not match K");
  DensityField out = rho;
  const CellGrid& g = rho.grid;
  double marginal = 0.0;
  for (std::size_t iy = 0; iy < g.cells[1]; ++iy) {
    for (std::size_t ix = 0; ix < g.cells[0]; ++ix) {
      const std::size_t idx = g.index(ix, iy);
      const auto b = amplitudes(sys, t, g.point(ix, iy));
      const double s = sum_norm(b);
      const double f = s > 0.0 ? std::norm(combine(b, theta)) / s : 0.0;
      out.values[idx] = rho.values[idx] * f;
      marginal += out.values[idx];
    }
  }
  marginal *= g.cell_volume();
  if (!(marginal > 0.0)) throw NumericError("posterior has zero marginal f(theta')");
  for (double& v : out.values) v /= marginal;
  out.t = t;
  return out;
}

std::vector<DqeMember> make_dqe(const SpectralSystem& sys, std::size_t members, std::uint64_t seed,
                                double t, std::uint64_t first_id) {
  if (members == 0) throw ModelError("a DQE ensemble needs at least one member");
  std::vector<DqeMember> out(members);
  const std::size_t k = sys.phase_count();
  for (std::size_t m = 0; m < members; ++m) {
    Stream rng(seed, first_id + m, StreamPurpose::initial);
    std::vector<double> a(k);
    for (auto& x : a) x = rng.angle();
    out[m].theta = PhaseVector(std::move(a));
    out[m].state.t = t;
    out[m].state.q = sample_position(sys, out[m].theta, t, rng);
  }
  return out;
}

bool apply_ste(RunState& state, const SpectralSystem& sys, Stream& rng, std::size_t block) {
  const Point& q = state.particle.q;
  if (!(gamma_reduced(sys, q) > 0.0)) {
    ++state.skipped;
    return false;
  }
  SteSample s = sample_ste(sys, state.particle.t, q, rng);
  SteEvent ev;
  ev.t = state.particle.t;
  ev.block = block;
  ev.before = state.theta;
  ev.after = s.theta;
  ev.q = q;
  ev.trials = s.trials;
  state.theta = std::move(s.theta);
  state.log.push_back(std::move(ev));
  return true;
}

// ---------------------------------------------------------------- post-event moments

PostSteMoments post_ste_moments(const SpectralSystem& sys, const Point& q, int axis) {
  const std::size_t n = sys.level_count();
  std::vector<Complex> phi(n);
  std::vector<double> w(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    phi[i] = sys.level_jet(i, q).value;
    const double c = sys.levels()[i].magnitude;
    w[i] = c * c;
    s += w[i] * std::norm(phi[i]);
  }
  if (!(s > 0.0)) throw NumericError("gamma vanishes at the particle position");
  const auto& mt = sys.moments(axis);
  Complex m1{}, m2{};
  for (std::size_t i = 0; i < n; ++i) {
    m1 += w[i] * mt.position[i * n + i];
    m2 += w[i] * mt.position_sq[i * n + i];
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      const Complex c = w[i] * w[j] * phi[i] * std::conj(phi[j]) / s;
      m1 += c * mt.position[i * n + j];
      m2 += c * mt.position_sq[i * n + j];
    }
  }
  return {m1.real(), m2.real()};
}

stats::Estimate post_ste_variance(const SpectralSystem& sys, double t, const Point& q, int axis,
                                  Stream& rng, std::size_t samples) {
  const std::size_t k = sys.phase_count();
  stats::Estimate out;
  if (k == 0) {
    out.value = fast_observables(sys, PhaseVector{}, t).variance[axis];
    out.n = 1;
    return out;
  }
  if (k <= 2) {
    // The integrand is a trigonometric polynomial of degree ≤ 3 per phase,
    // which the 16-point rectangle rule integrates exactly.
    const std::size_t points = 16;
    std::size_t total = 1;
    for (std::size_t i = 0; i < k; ++i) total *= points;
    const double step = kTwoPi / static_cast<double>(points);
    const double cell = std::pow(step, static_cast<double>(k));
    double acc = 0.0;
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::vector<double> a(k);
      std::size_t f = flat;
      for (std::size_t i = 0; i < k; ++i) {
        a[i] = step * static_cast<double>(f % points);
        f /= points;
      }
      const PhaseVector p(std::move(a));
      acc += ste_density(sys, t, q, p) * fast_observables(sys, p, t).variance[axis];
    }
    out.value = acc * cell;
    out.n = total;
    return out;
  }
  std::vector<double> v(samples);
  for (auto& x : v) x = fast_observables(sys, sample_ste(sys, t, q, rng).theta, t).variance[axis];
  return stats::mean(v);
}

}  // namespace dualwave
