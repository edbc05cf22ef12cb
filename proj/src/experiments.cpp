#include "dualwave/experiments.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/quadrature/gauss.hpp>

#include "dualwave/dynamics.hpp"
#include "dualwave/parallel.hpp"
#include "dualwave/ste.hpp"

namespace dualwave {

namespace {

PhaseVector block_phases(const SimConfig& config, const SpectralSystem& sys) {
  const auto& b = config.blocks.front();
  return b.theta ? *b.theta : sys.initial_phases();
}

}  // namespace

MscReport msc_check(const EnsembleResult& result) {
  MscReport rep;
  for (const auto& m : result.members) {
    for (const auto& ev : m.events) {
      ++rep.events;
      const SpectralSystem& sys = *result.blocks.at(ev.block).system;
      const ObservableSet a = fast_observables(sys, ev.before, ev.t);
      const ObservableSet b = fast_observables(sys, ev.after, ev.t);
      bool ok = a.energy == b.energy && a.energy_spread == b.energy_spread;
      if (sys.phase_count() == 0) ok = ok && ev.before == ev.after;
      if (!ok) ++rep.violations;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

// ---------------------------------------------------------------- oracle

OracleReport run_oracle(const SimConfig& config, const SystemPtr& sys_ptr, std::size_t threads) {
  const SpectralSystem& sys = *sys_ptr;
  const OracleConfig& oc = config.oracle;
  const PhaseVector theta = block_phases(config, sys);
  const SpectralDrift field(sys_ptr, theta, config.integrator.limits, config.integrator.mode);
  const IntegratorConfig& cfg = config.integrator;
  const int dim = sys.dimension();

  OracleReport rep;
  rep.init = oc.init;
  rep.paths = oc.paths;
  if (sys.bounded()) rep.tau = sys.domain().length(0) * sys.domain().length(0) / sys.diffusion()[0];

  std::vector<double> times;
  for (std::size_t c = 0; c <= oc.checkpoints; ++c)
    times.push_back(oc.horizon * static_cast<double>(c) / static_cast<double>(oc.checkpoints));

  std::vector<std::vector<Point>> positions(times.size(), std::vector<Point>(oc.paths));
  std::vector<char> failed(oc.paths, 0);
  const bool uniform = oc.init == "uniform";
  parallel_for(oc.paths, threads, [&](std::size_t p) {
    Stream init(config.seed, p, StreamPurpose::initial);
    Stream dyn(config.seed, p, StreamPurpose::dynamics);
    ParticleState s;
    if (uniform) {
      for (int k = 0; k < dim; ++k) s.q[k] = sys.domain().lo[k] + init.uniform() * sys.domain().length(k);
    } else {
      s.q = sample_position(sys, theta, 0.0, init);
    }
    positions[0][p] = s.q;
    try {
      for (std::size_t c = 1; c < times.size(); ++c) {
        const double span = times[c] - s.t;
        const std::size_t n = step_count(span, cfg.dt);
        const double start = s.t;
        for (std::size_t j = 0; j < n; ++j) {
          const double target = (j + 1 == n) ? times[c] : start + static_cast<double>(j + 1) * cfg.dt;
          double w[2] = {0.0, 0.0};
          if (cfg.mode == IntegratorMode::stochastic)
            for (int k = 0; k < dim; ++k) w[k] = dyn.normal();
          s = em_step(s, field, cfg, std::span<const double>(w, 2), target - s.t);
          s.t = target;
        }
        positions[c][p] = s.q;
      }
    } catch (const NumericError&) {
      failed[p] = 1;
    }
  });
  for (char f : failed) rep.failed_paths += f;

  const CellGrid grid = cell_grid(sys.domain(), oc.cells);
  const DensityField rho0 = uniform ? uniform_density(grid) : psi_density(sys, theta, 0.0, grid);
  const std::vector<DensityField> solver = fp_series(field, rho0, times, oc.solver_dt);

  rep.ks_alpha = 0.05 / static_cast<double>(times.size());
  for (std::size_t c = 0; c < times.size(); ++c) {
    std::vector<Point> samples;
    samples.reserve(oc.paths);
    for (std::size_t p = 0; p < oc.paths; ++p)
      if (!failed[p]) samples.push_back(positions[c][p]);
    OracleCheckpoint cp;
    cp.t = times[c];
    const DensityField target = psi_density(sys, theta, times[c], grid);
    cp.qe = qe_distance(samples, target, oc.l1_bins);
    const DensityField hist = histogram_density(samples, grid);
    cp.l1_paths_solver = l1_distance(rebin(hist, oc.l1_bins), rebin(solver[c], oc.l1_bins));
    cp.l1_solver_psi = l1_distance(solver[c], target);
    if (cp.qe.p_value <= rep.ks_alpha) rep.equilibrium_pass = false;
    if (cp.l1_paths_solver >= oc.l1_tolerance) rep.relaxation_pass = false;
    rep.checkpoints.push_back(cp);
    if (c + 1 == times.size()) {
      rep.solver_final = solver[c];
      rep.psi_final = target;
      rep.histogram_final = hist;
    }
  }
  if (!(rep.checkpoints.back().l1_solver_psi < oc.l1_tolerance)) rep.relaxation_pass = false;
  rep.pass = rep.failed_paths == 0 && (uniform ? rep.relaxation_pass : rep.equilibrium_pass);
  return rep;
}

// ---------------------------------------------------------------- ste-test

namespace {

using Gauss = boost::math::quadrature::gauss<double, 7>;

constexpr std::size_t kChunk = 10000;

}  // namespace

SteTestReport run_ste_test(const SimConfig& config, const SystemPtr& sys_ptr, std::size_t threads) {
  const SpectralSystem& sys = *sys_ptr;
  const SteTestConfig& sc = config.ste_test;
  const std::size_t k = sys.phase_count();
  if (k > 2) throw ModelError("sampler test covers K <= 2");
  SteTestReport rep;
  rep.k = k;
  rep.draws = sc.draws;
  rep.bins = sc.bins;
  rep.significance = config.significance;
  rep.allowed_failures = sc.allowed_failures;
  if (k == 0) return rep;

  // Test points away from the walls and from nodes of Γ.
  std::vector<Point> qs(sc.points);
  std::vector<double> ts(sc.points);
  const Domain& d = sys.domain();
  for (std::size_t i = 0; i < sc.points; ++i) {
    Stream pick(config.seed, i, StreamPurpose::diagnostics);
    ts[i] = sc.t_max * pick.uniform();
    for (;;) {
      Point q{};
      for (int a = 0; a < sys.dimension(); ++a) q[a] = d.lo[a] + (0.05 + 0.9 * pick.uniform()) * d.length(a);
      if (gamma_reduced(sys, q) > 1e-6) {
        qs[i] = q;
        break;
      }
    }
  }

  const std::size_t chunks = (sc.draws + kChunk - 1) / kChunk;
  std::vector<std::vector<PhaseVector>> draws(sc.points * chunks);
  std::vector<std::uint64_t> trials(sc.points * chunks, 0);
  parallel_for(draws.size(), threads, [&](std::size_t job) {
    const std::size_t i = job / chunks, c = job % chunks;
    const std::size_t n = std::min(kChunk, sc.draws - c * kChunk);
    Stream rng(config.seed, i * 65536 + c, StreamPurpose::ste);
    auto& out = draws[job];
    out.reserve(n);
    for (std::size_t s = 0; s < n; ++s) {
      SteSample smp = sample_ste(sys, ts[i], qs[i], rng);
      trials[job] += smp.trials;
      out.push_back(std::move(smp.theta));
    }
  });

  const std::size_t nb = sc.bins;
  const double width = kTwoPi / static_cast<double>(nb);
  const double total = static_cast<double>(sc.draws);
  auto bin_of = [&](double a) { return std::min(static_cast<std::size_t>(a / width), nb - 1); };
  for (std::size_t i = 0; i < sc.points; ++i) {
    std::uint64_t tr = 0;
    for (std::size_t c = 0; c < chunks; ++c) tr += trials[i * chunks + c];
    const double mean_trials = static_cast<double>(tr) / total;
    auto density = [&](double a, double b) {
      std::vector<double> th{a};
      if (k == 2) th.push_back(b);
      return ste_density(sys, ts[i], qs[i], PhaseVector(std::move(th)));
    };
    if (k == 1) {
      std::vector<double> obs(nb, 0.0), exp(nb, 0.0);
      for (std::size_t c = 0; c < chunks; ++c)
        for (const auto& th : draws[i * chunks + c]) obs[bin_of(th[0])] += 1.0;
      double mass = 0.0;
      for (std::size_t b = 0; b < nb; ++b) {
        const double lo = width * static_cast<double>(b);
        exp[b] = Gauss::integrate([&](double a) { return density(a, 0.0); }, lo, lo + width);
        mass += exp[b];
      }
      for (auto& e : exp) e *= total / mass;
      rep.cases.push_back({i, qs[i], ts[i], "theta", stats::chi_square_test(obs, exp), mean_trials});
      if (i == 0) {
        rep.histogram = obs;
        rep.expected = exp;
      }
      continue;
    }
    std::vector<double> obs(nb * nb, 0.0), exp(nb * nb, 0.0);
    for (std::size_t c = 0; c < chunks; ++c)
      for (const auto& th : draws[i * chunks + c]) obs[bin_of(th[0]) * nb + bin_of(th[1])] += 1.0;
    double mass = 0.0;
    for (std::size_t a = 0; a < nb; ++a) {
      const double lo0 = width * static_cast<double>(a);
      for (std::size_t b = 0; b < nb; ++b) {
        const double lo1 = width * static_cast<double>(b);
        exp[a * nb + b] = Gauss::integrate(
            [&](double x) { return Gauss::integrate([&](double y) { return density(x, y); }, lo1, lo1 + width); },
            lo0, lo0 + width);
        mass += exp[a * nb + b];
      }
    }
    for (auto& e : exp) e *= total / mass;
    rep.cases.push_back({i, qs[i], ts[i], "joint", stats::chi_square_test(obs, exp), mean_trials});
    for (int comp = 0; comp < 2; ++comp) {
      std::vector<double> mo(nb, 0.0), me(nb, 0.0);
      for (std::size_t a = 0; a < nb; ++a)
        for (std::size_t b = 0; b < nb; ++b) {
          const std::size_t m = comp == 0 ? a : b;
          mo[m] += obs[a * nb + b];
          me[m] += exp[a * nb + b];
        }
      rep.cases.push_back(
          {i, qs[i], ts[i], "marginal_" + std::to_string(comp), stats::chi_square_test(mo, me), mean_trials});
      if (i == 0 && comp == 0) {
        rep.histogram = mo;
        rep.expected = me;
      }
    }
  }
  for (const auto& c : rep.cases)
    if (!(c.chi.p_value > config.significance)) ++rep.failures;
  rep.pass = rep.failures <= rep.allowed_failures;
  return rep;
}

// ---------------------------------------------------------------- dqe

DqeReport run_dqe(const SimConfig& config, const SystemPtr& sys, std::size_t threads) {
  DqeTestSpec spec;
  spec.members = config.dqe.members;
  spec.init = config.dqe.init;
  spec.theta = config.blocks.front().theta;
  spec.t = config.dqe.t;
  spec.seed = config.seed;
  spec.phase_bins = config.dqe.phase_bins;
  spec.uniformity_bins = config.dqe.uniformity_bins;
  spec.significance = config.significance;
  spec.ks_alpha = config.dqe.ks_alpha;
  return dqe_stationarity_test(sys, spec, threads);
}

// ---------------------------------------------------------------- grw

GrwReport run_grw(const SimConfig& config) {
  const GrwConfig& gc = config.grw;
  validate(HitConfig{gc.alpha, gc.rate});
  GrwReport rep;
  rep.initial = gaussian_wavefunction(gc.lo, gc.hi, gc.points, gc.center, gc.width, gc.wavenumber);
  const double s2 = gc.width * gc.width;

  const HitSampler sampler(rep.initial, gc.alpha);
  rep.f_integral = sampler.total();
  rep.z_grid = sampler.z();
  rep.f_values = sampler.density();
  rep.integral_pass = std::abs(rep.f_integral - 1.0) <= 1e-6;

  rep.posterior_variance = 2.0 * apply_hit(rep.initial, gc.alpha, gc.center).variance();
  rep.posterior_expected = 1.0 / (1.0 / (2.0 * s2) + gc.alpha);
  rep.posterior_pass = std::abs(rep.posterior_variance - rep.posterior_expected) <= 1e-6;

  Stream draw(config.seed, 0, StreamPurpose::diagnostics);
  std::vector<double> zs(gc.draws);
  for (auto& z : zs) z = sampler.sample(draw);
  rep.center_variance = stats::variance(zs);
  rep.center_expected = s2 + 1.0 / (2.0 * gc.alpha);
  rep.center_pass =
      std::abs(rep.center_variance.value - rep.center_expected) <= 3.0 * rep.center_variance.std_error;

  Stream events(config.seed, 0, StreamPurpose::events);
  Stream hits(config.seed, 0, StreamPurpose::ste);
  GridWavefunction psi = rep.initial;
  double t = 0.0;
  for (std::size_t i = 0; i < gc.hits; ++i) {
    t += events.exponential(gc.rate);
    GrwHitRecord h;
    h.index = i;
    h.t = t;
    h.variance_before = psi.variance();
    h.energy_before = psi.kinetic_energy();
    h.z = HitSampler(psi, gc.alpha).sample(hits);
    psi = apply_hit(psi, gc.alpha, h.z);
    h.variance_after = psi.variance();
    h.energy_after = psi.kinetic_energy();
    rep.hits.push_back(h);
  }
  rep.final = std::move(psi);
  rep.pass = rep.integral_pass && rep.posterior_pass && rep.center_pass;
  return rep;
}

// ---------------------------------------------------------------- macro

std::vector<ArithmeticRow> physical_arithmetic() {
  using namespace constants;
  const double tau_p = tau(1.0, proton_mass, single_particle_length, hbar);
  const double tau_e = tau(1.0, electron_mass, single_particle_length, hbar);
  std::vector<ArithmeticRow> rows{
      {"N lambda at N = 1e23 [1/s]", 1e23 * ste_rate, 1e7},
      {"lambda tau(1), proton", ste_rate * tau_p, 1e-23},
      {"tau(1), proton [s]", tau_p, 1e-7},
      {"tau(1), electron [s]", tau_e, 1e-11},
      {"event probability, N = 1e3, T = 10 ms", event_probability(1e3 * ste_rate, 0.01), 1e-15},
  };
  for (auto& r : rows) {
    const double ratio = r.value / r.expected;
    r.pass = ratio >= 0.1 && ratio <= 10.0;
  }
  return rows;
}

MacroReport run_macro(const SimConfig& config, std::size_t threads) {
  const MacroConfig& mc = config.macro;
  const double hbar = config.units == UnitSystem::physical ? constants::hbar : 1.0;
  MacroReport rep;
  rep.mass = mc.particles * mc.particle_mass;

  auto packet = [&](double velocity) {
    GaussianPacketSpec spec;
    spec.sigma = mc.sigma;
    spec.velocity = velocity;
    spec.mass = rep.mass;
    spec.hbar = hbar;
    spec.levels = mc.levels;
    spec.coverage = mc.coverage;
    return spec;
  };

  std::vector<SystemPtr> systems;
  for (double u : mc.velocities) systems.push_back(build_gaussian_packet(packet(u)));

  const std::size_t np = mc.points.size();
  rep.points.resize(mc.velocities.size() * np);
  parallel_for(rep.points.size(), threads, [&](std::size_t job) {
    const std::size_t v = job / np, i = job % np;
    const GaussianPacketSpec spec = packet(mc.velocities[v]);
    DriftPoint& p = rep.points[job];
    p.velocity = spec.velocity;
    p.g = spec.sigma * spec.mass * spec.velocity / hbar;
    p.r_over_sigma = mc.points[i];
    const double r = mc.points[i] * mc.sigma;
    p.closed = mean_drift_closed(spec, r);
    p.weighted = mean_drift_weighted(*systems[v], r);
    Stream rng(config.seed, job, StreamPurpose::ste);
    p.mc = mean_drift_mc(*systems[v], r, mc.samples, rng);
    p.tolerance = 3.0 * p.mc.std_error + std::abs(p.weighted - p.closed);
    p.pass = std::abs(p.mc.value - p.closed) <= p.tolerance;
  });

  for (std::size_t v = 0; v < mc.velocities.size(); ++v) {
    const GaussianPacketSpec spec = packet(mc.velocities[v]);
    DriftScan scan;
    scan.velocity = spec.velocity;
    scan.bound = hbar / (2.0 * rep.mass * mc.sigma);
    for (std::size_t j = 0; j < mc.scan_points; ++j) {
      const double r = mc.sigma * mc.scan_extent *
                       (2.0 * static_cast<double>(j) / static_cast<double>(mc.scan_points - 1) - 1.0);
      scan.r.push_back(r);
      scan.closed.push_back(mean_drift_closed(spec, r));
      scan.weighted.push_back(mean_drift_weighted(*systems[v], r));
      scan.max_deviation = std::max(scan.max_deviation, std::abs(scan.closed.back() - spec.velocity));
    }
    scan.pass = scan.max_deviation <= scan.bound;
    rep.scans.push_back(std::move(scan));
  }

  rep.arithmetic = physical_arithmetic();
  rep.spread = spread_between_events(1e23, constants::proton_mass, constants::ste_rate,
                                     constants::single_particle_length, constants::hbar);

  if (mc.step_members > 0) {
    const ComSystem com = com_reduce(mc.particles, mc.particle_mass, packet(mc.step_velocity), mc.lambda);
    EnsembleSpec spec;
    BlockSpec block;
    block.system = com.system;
    block.rate = RateModel{RateMode::per_particle, mc.lambda, mc.particles, 0.0};
    spec.blocks.push_back(block);
    spec.members = mc.step_members;
    spec.horizon = mc.step_horizon;
    spec.integrator = config.integrator;
    spec.record_stride = step_count(mc.step_horizon, config.integrator.dt) + 1;
    spec.keep_trajectories = false;
    spec.seed = config.seed;
    spec.threads = threads;
    const EnsembleResult result = run_ensemble(spec);
    Moments steps;
    for (const auto& m : result.members) {
      if (!m.error.empty()) continue;
      for (std::size_t e = 1; e < m.events.size(); ++e) steps.add(m.events[e].q[0] - m.events[e - 1].q[0]);
    }
    StepLawReport& s = rep.step;
    s.ran = true;
    s.members = result.member_count - result.failed.size();
    s.intervals = steps.n;
    s.step = steps.estimate();
    s.expected = mc.step_velocity / com.rate;
    s.rate_tau = com.rate * rep.mass * mc.sigma * mc.sigma / hbar;
    s.pass = result.failed.empty() && s.intervals >= 2 &&
             std::abs(s.step.value - s.expected) <= 3.0 * s.step.std_error;
  }

  rep.pass = rep.step.pass;
  for (const auto& p : rep.points) rep.pass = rep.pass && p.pass;
  for (const auto& s : rep.scans) rep.pass = rep.pass && s.pass;
  for (const auto& a : rep.arithmetic) rep.pass = rep.pass && a.pass;
  return rep;
}

}  // namespace dualwave
