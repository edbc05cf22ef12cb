#include "dualwave/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dualwave/macro.hpp"

namespace dualwave {

const char* to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::box: return "box";
    case ModelKind::oscillator: return "oscillator";
    case ModelKind::free_packet: return "free_packet";
    case ModelKind::two_particle_box: return "two_particle_box";
  }
  return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "box") return ModelKind::box;
  if (name == "oscillator") return ModelKind::oscillator;
  if (name == "free_packet") return ModelKind::free_packet;
  if (name == "two_particle_box") return ModelKind::two_particle_box;
  throw ModelError("unsupported model kind '" + name + "'");
}

ComposedLevel compose_degenerate(std::span<const LevelMember> members) {
  if (members.empty()) throw ModelError("degenerate level has no members");
  double total = 0.0;
  for (const auto& m : members) total += std::norm(m.coeff);
  if (!(total > 0.0)) throw ModelError("all degenerate coefficients are zero");

  ComposedLevel out;
  out.magnitude = std::sqrt(total);
  // Θ_i = θ_i0; when c_i0 vanishes the first non-zero member carries the phase.
  for (const auto& m : members) {
    if (std::abs(m.coeff) > 0.0) {
      out.phase = wrap_angle(std::arg(m.coeff));
      break;
    }
  }
  const Complex c_i = std::polar(out.magnitude, out.phase);
  out.members.reserve(members.size());
  for (const auto& m : members) out.members.push_back({m.mode, m.coeff / c_i});
  return out;
}

// ---------------------------------------------------------------- system

SpectralSystem::SpectralSystem(std::shared_ptr<const EigenBasis> basis, std::vector<Level> levels,
                               std::size_t grid_points)
    : basis_(std::move(basis)), levels_(std::move(levels)) {
  if (!basis_) throw ModelError("spectral system needs a basis");
  if (levels_.empty()) throw ModelError("at least one energy level must be selected");

  std::vector<Mode> all_modes;
  for (auto& level : levels_) {
    if (level.members.empty()) throw ModelError("energy level without members");
    if (!(level.magnitude > 0.0)) throw ModelError("energy level with zero weight");
    level.energy = basis_->energy(level.members.front().mode);
    double sup = 0.0;
    for (std::size_t j = 0; j < level.members.size(); ++j) {
      const auto& m = level.members[j];
      const double e = basis_->energy(m.mode);
      if (std::abs(e - level.energy) > 1e-9 * std::max(1.0, std::abs(level.energy)))
        throw ModelError("members of one level must be degenerate");
      for (std::size_t k = 0; k < j; ++k)
        if (level.members[k].mode == m.mode) throw ModelError("duplicate mode within a level");
      sup += std::abs(m.coeff) * basis_->sup_abs(m.mode);
      all_modes.push_back(m.mode);
    }
    level.sup_abs = sup;
  }
  std::sort(levels_.begin(), levels_.end(),
            [](const Level& a, const Level& b) { return a.energy < b.energy; });
  for (std::size_t i = 1; i < levels_.size(); ++i) {
    const double gap = levels_[i].energy - levels_[i - 1].energy;
    if (!(gap > 1e-12 * std::max(1.0, std::abs(levels_[i].energy))))
      throw ModelError("two selected levels share an energy; list them as one degenerate level");
  }

  double weight = 0.0;
  for (const auto& level : levels_) weight += level.magnitude * level.magnitude;
  const double scale = 1.0 / std::sqrt(weight);
  for (auto& level : levels_) level.magnitude *= scale;

  domain_ = basis_->domain(all_modes);
  domain_.bounded = basis_->bounded();
  grid_.dim = domain_.dim;
  grid_.lo = domain_.lo;
  grid_.hi = domain_.hi;
  if (grid_points == 0) grid_points = domain_.dim == 1 ? 2048 : 256;
  if (grid_points < 16) throw ModelError("quadrature grid needs at least 16 points");
  grid_.points = {grid_points, domain_.dim == 2 ? grid_points : 1};

  for (const auto& level : levels_) {
    const double w = level.magnitude * level.magnitude;
    envelope_max_ += level.magnitude * level.sup_abs;
    mean_energy_ += w * level.energy;
  }
  double spread = 0.0;
  for (const auto& level : levels_) {
    const double d = level.energy - mean_energy_;
    spread += level.magnitude * level.magnitude * d * d;
  }
  energy_spread_ = std::sqrt(spread);

  // Matrix elements on the quadrature grid; also verifies orthonormality.
  const std::size_t n = levels_.size();
  std::vector<Complex> overlap(n * n);
  for (int axis = 0; axis < domain_.dim; ++axis) {
    moments_[axis].position.assign(n * n, 0.0);
    moments_[axis].position_sq.assign(n * n, 0.0);
    moments_[axis].momentum.assign(n * n, 0.0);
  }
  std::vector<Jet> jets(n);
  const double hb = hbar();
  for (std::size_t iy = 0; iy < grid_.points[1]; ++iy) {
    for (std::size_t ix = 0; ix < grid_.points[0]; ++ix) {
      Point q{grid_.node(0, ix), domain_.dim == 2 ? grid_.node(1, iy) : 0.0};
      const double w = grid_.weight(0, ix) * (domain_.dim == 2 ? grid_.weight(1, iy) : 1.0);
      for (std::size_t i = 0; i < n; ++i) jets[i] = level_jet(i, q);
      for (std::size_t i = 0; i < n; ++i) {
        const Complex ci = std::conj(jets[i].value) * w;
        for (std::size_t j = 0; j < n; ++j) {
          overlap[i * n + j] += ci * jets[j].value;
          for (int axis = 0; axis < domain_.dim; ++axis) {
            const double x = q[axis];
            auto& mt = moments_[axis];
            mt.position[i * n + j] += ci * x * jets[j].value;
            mt.position_sq[i * n + j] += ci * x * x * jets[j].value;
            mt.momentum[i * n + j] += ci * Complex(0.0, -hb) * jets[j].d1[axis];
          }
        }
      }
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      worst = std::max(worst, std::abs(overlap[i * n + j] - (i == j ? 1.0 : 0.0)));
  if (worst > 1e-8)
    throw ModelError("composed eigenfunctions are not orthonormal on the quadrature grid (" +
                     std::to_string(worst) + ")");
}

Vec2 SpectralSystem::diffusion() const {
  const Vec2 m = mass();
  return {hbar() / m[0], hbar() / m[1]};
}

PhaseVector SpectralSystem::initial_phases() const {
  std::vector<double> a;
  a.reserve(phase_count());
  for (std::size_t i = 1; i < levels_.size(); ++i) a.push_back(levels_[i].phase0 - levels_[0].phase0);
  return PhaseVector(std::move(a));
}

void SpectralSystem::check_point(const Point& q) const {
  for (int k = 0; k < domain_.dim; ++k)
    if (!std::isfinite(q[k])) throw DomainError("configuration point is not finite");
  if (domain_.bounded && !domain_.contains(q)) throw DomainError("configuration point outside the domain");
}

void SpectralSystem::check_phases(const PhaseVector& theta) const {
  if (theta.size() != phase_count())
    throw ModelError("phase vector length " + std::to_string(theta.size()) + " does not match K = " +
                     std::to_string(phase_count()));
}

Jet SpectralSystem::level_jet(std::size_t i, const Point& q) const {
  Jet out;
  for (const auto& m : levels_[i].members) out += m.coeff * basis_->evaluate(m.mode, q);
  return out;
}

void SpectralSystem::level_amplitudes(double t, const Point& q, std::span<Complex> out) const {
  check_point(q);
  const double hb = hbar();
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    Complex phi{};
    for (const auto& m : levels_[i].members) phi += m.coeff * basis_->evaluate(m.mode, q).value;
    out[i] = levels_[i].magnitude * std::polar(1.0, -levels_[i].energy * t / hb) * phi;
  }
}

Complex SpectralSystem::coefficient(std::size_t i, const PhaseVector& theta, double t) const {
  const double phase = (i == 0 ? 0.0 : theta[i - 1]) - levels_[i].energy * t / hbar();
  return std::polar(levels_[i].magnitude, phase);
}

Complex SpectralSystem::psi(const PhaseVector& theta, double t, const Point& q) const {
  check_phases(theta);
  check_point(q);
  Complex sum{};
  for (std::size_t i = 0; i < levels_.size(); ++i) {
    Complex phi{};
    for (const auto& m : levels_[i].members) phi += m.coeff * basis_->evaluate(m.mode, q).value;
    sum += coefficient(i, theta, t) * phi;
  }
  return sum;
}

Jet SpectralSystem::psi_jet(const PhaseVector& theta, double t, const Point& q) const {
  check_phases(theta);
  check_point(q);
  Jet sum;
  for (std::size_t i = 0; i < levels_.size(); ++i) sum += coefficient(i, theta, t) * level_jet(i, q);
  return sum;
}

PhaseVector initial_phases(const SpectralSystem& sys) { return sys.initial_phases(); }

// ---------------------------------------------------------------- builders

SystemPtr build_model(const ModelSpec& spec) {
  if (spec.kind == ModelKind::free_packet) {
    GaussianPacketSpec packet;
    packet.sigma = spec.packet.sigma;
    packet.velocity = spec.packet.velocity;
    packet.mass = spec.mass[0];
    packet.hbar = spec.hbar;
    packet.levels = spec.packet.levels;
    packet.coverage = spec.packet.coverage;
    return build_gaussian_packet(packet, spec.grid_points);
  }
  if (spec.levels.empty()) throw ModelError("level selection is empty");

  std::shared_ptr<const EigenBasis> basis;
  switch (spec.kind) {
    case ModelKind::box:
      basis = std::make_shared<BoxBasis>(spec.length, spec.mass[0], spec.hbar);
      break;
    case ModelKind::oscillator:
      basis = std::make_shared<OscillatorBasis>(spec.omega, spec.mass[0], spec.hbar);
      break;
    case ModelKind::two_particle_box:
      basis = std::make_shared<TwoParticleBoxBasis>(spec.length, spec.mass, spec.hbar);
      break;
    default:
      throw ModelError("unsupported model kind");
  }

  std::vector<Level> levels;
  levels.reserve(spec.levels.size());
  for (const auto& sel : spec.levels) {
    ComposedLevel c = compose_degenerate(sel.members);
    Level level;
    level.magnitude = c.magnitude;
    level.phase0 = c.phase;
    level.members = std::move(c.members);
    levels.push_back(std::move(level));
  }
  return std::make_shared<const SpectralSystem>(std::move(basis), std::move(levels), spec.grid_points);
}

// ---------------------------------------------------------------- evaluation

namespace {

Vec2 clamp_velocity(Vec2 v, int dim, double density, const SpectralSystem& sys,
                    const DriftLimits& limits) {
  const double env = sys.envelope_max();
  const bool near_node = density < limits.eps_node * env * env;
  double mag = 0.0;
  for (int k = 0; k < dim; ++k) mag += v[k] * v[k];
  mag = std::sqrt(mag);
  if (near_node && (mag > limits.b_max || !std::isfinite(mag))) {
    if (!std::isfinite(mag)) return {0.0, 0.0};
    const double s = limits.b_max / mag;
    for (int k = 0; k < dim; ++k) v[k] *= s;
    return v;
  }
  if (!std::isfinite(mag))
    throw NumericError("non-finite drift (|psi|^2 = " + std::to_string(density) + ")");
  return v;
}

}  // namespace

Vec2 drift(const SpectralSystem& sys, const PhaseVector& theta, double t, const Point& q,
           const DriftLimits& limits) {
  const Jet j = sys.psi_jet(theta, t, q);
  const double density = std::norm(j.value);
  const Vec2 m = sys.mass();
  const double hb = sys.hbar();
  Vec2 b{};
  const int dim = sys.dimension();
  // Exactly on a node the drift is undefined.
  if (density == 0.0) return {0.0, 0.0};
  for (int k = 0; k < dim; ++k) {
    const Complex z = std::conj(j.value) * j.d1[k];
    b[k] = hb / m[k] * (z.real() + z.imag()) / density;
  }
  return clamp_velocity(b, dim, density, sys, limits);
}

Vec2 current_velocity(const SpectralSystem& sys, const PhaseVector& theta, double t, const Point& q,
                      const DriftLimits& limits) {
  const Jet j = sys.psi_jet(theta, t, q);
  const double density = std::norm(j.value);
  const Vec2 m = sys.mass();
  const double hb = sys.hbar();
  const int dim = sys.dimension();
  if (density == 0.0) return {0.0, 0.0};
  Vec2 v{};
  for (int k = 0; k < dim; ++k) {
    const Complex z = std::conj(j.value) * j.d1[k];
    v[k] = hb / m[k] * z.imag() / density;
  }
  return clamp_velocity(v, dim, density, sys, limits);
}

double quantum_potential(const SpectralSystem& sys, const PhaseVector& theta, double t,
                         const Point& q) {
  const Jet j = sys.psi_jet(theta, t, q);
  if (std::norm(j.value) == 0.0) throw NumericError("quantum potential undefined at a node of psi");
  const Vec2 m = sys.mass();
  const double hb = sys.hbar();
  double qp = 0.0;
  for (int k = 0; k < sys.dimension(); ++k) {
    const Complex g = j.d1[k] / j.value;
    const Complex l = j.d2[k] / j.value;
    qp -= hb * hb / (2.0 * m[k]) * (l.real() + g.imag() * g.imag());
  }
  if (!std::isfinite(qp)) throw NumericError("non-finite quantum potential");
  return qp;
}

ObservableSet observables(const SpectralSystem& sys, const PhaseVector& theta, double t,
                          double norm_tolerance) {
  const auto& g = sys.grid();
  const int dim = sys.dimension();
  const double hb = sys.hbar();
  double norm = 0.0;
  Vec2 m1{}, m2{}, p{};
  for (std::size_t iy = 0; iy < g.points[1]; ++iy) {
    for (std::size_t ix = 0; ix < g.points[0]; ++ix) {
      const Point q{g.node(0, ix), dim == 2 ? g.node(1, iy) : 0.0};
      const double w = g.weight(0, ix) * (dim == 2 ? g.weight(1, iy) : 1.0);
      const Jet j = sys.psi_jet(theta, t, q);
      const double rho = std::norm(j.value);
      norm += w * rho;
      for (int k = 0; k < dim; ++k) {
        m1[k] += w * q[k] * rho;
        m2[k] += w * q[k] * q[k] * rho;
        p[k] += w * hb * (std::conj(j.value) * j.d1[k]).imag();
      }
    }
  }
  if (!(std::abs(norm - 1.0) <= norm_tolerance))
    throw NumericError("quadrature did not converge: grid norm = " + std::to_string(norm));
  ObservableSet out;
  out.dim = dim;
  out.norm = norm;
  for (int k = 0; k < dim; ++k) {
    out.mean[k] = m1[k] / norm;
    out.variance[k] = std::max(0.0, m2[k] / norm - out.mean[k] * out.mean[k]);
    out.momentum[k] = p[k] / norm;
  }
  out.energy = sys.mean_energy();
  out.energy_spread = sys.energy_spread();
  return out;
}

ObservableSet fast_observables(const SpectralSystem& sys, const PhaseVector& theta, double t) {
  const std::size_t n = sys.level_count();
  std::vector<Complex> a(n);
  for (std::size_t i = 0; i < n; ++i) a[i] = sys.coefficient(i, theta, t);
  ObservableSet out;
  out.dim = sys.dimension();
  out.norm = 0.0;
  for (std::size_t i = 0; i < n; ++i) out.norm += std::norm(a[i]);
  for (int k = 0; k < out.dim; ++k) {
    const auto& mt = sys.moments(k);
    Complex x{}, x2{}, p{};
    for (std::size_t i = 0; i < n; ++i) {
      const Complex ai = std::conj(a[i]);
      for (std::size_t j = 0; j < n; ++j) {
        // Diagonal weights are |C_i|², free of the time-dependent phase.
        const Complex w = i == j ? Complex(sys.levels()[i].magnitude * sys.levels()[i].magnitude, 0.0) : ai * a[j];
        x += w * mt.position[i * n + j];
        x2 += w * mt.position_sq[i * n + j];
        p += w * mt.momentum[i * n + j];
      }
    }
    out.mean[k] = x.real();
    out.variance[k] = std::max(0.0, x2.real() - x.real() * x.real());
    out.momentum[k] = p.real();
  }
  out.energy = sys.mean_energy();
  out.energy_spread = sys.energy_spread();
  return out;
}

}  // namespace dualwave
