#include <cmath>

#include "doctest.h"
#include "helpers.hpp"

#include "dualwave/ensemble.hpp"
#include "dualwave/macro.hpp"

using namespace dualwave;
using namespace testing;

namespace {

EnsembleSpec two_level_spec(double lambda, std::size_t members, double horizon) {
  EnsembleSpec spec;
  BlockSpec b;
  b.system = two_level_box();
  b.rate.lambda = lambda;
  spec.blocks = {b};
  spec.members = members;
  spec.horizon = horizon;
  spec.integrator.dt = 1e-3;
  spec.record_stride = 10;
  spec.seed = 21;
  return spec;
}

bool same_members(const EnsembleResult& a, const EnsembleResult& b) {
  if (a.members.size() != b.members.size()) return false;
  for (std::size_t i = 0; i < a.members.size(); ++i) {
    const MemberRecord& x = a.members[i];
    const MemberRecord& y = b.members[i];
    if (x.t != y.t || x.q != y.q || x.theta != y.theta || x.wave_mean != y.wave_mean ||
        x.wave_variance != y.wave_variance || x.events.size() != y.events.size())
      return false;
    for (std::size_t e = 0; e < x.events.size(); ++e)
      if (x.events[e].t != y.events[e].t || !(x.events[e].after == y.events[e].after)) return false;
    if (x.mean_fit.sxy != y.mean_fit.sxy || x.mean_fit.sxx != y.mean_fit.sxx) return false;
  }
  return true;
}

/// A free packet with σ = 1 on a 16-level lattice, shifted by free evolution
/// over `spread_time` so that it already fills the period window.
BlockSpec spread_packet(double spread_time, double lambda) {
  GaussianPacketSpec p;
  p.levels = 16;
  p.coverage = 4.0;
  BlockSpec b;
  b.system = build_gaussian_packet(p);
  std::vector<double> th(b.system->phase_count());
  const auto& lv = b.system->levels();
  for (std::size_t i = 0; i < th.size(); ++i) {
    const double a = std::fmod(-(lv[i + 1].energy - lv[0].energy) * spread_time, kTwoPi);
    th[i] = a < 0 ? a + kTwoPi : a;
  }
  b.theta = PhaseVector(std::move(th));
  b.rate.lambda = lambda;
  return b;
}

}  // namespace

TEST_CASE("zero horizon echoes the initial condition") {
  EnsembleSpec spec = two_level_spec(0.5, 1, 0.0);
  spec.blocks[0].init = InitPolicy::point;
  spec.blocks[0].position = Point{0.3, 0.0};
  spec.blocks[0].theta = PhaseVector({1.1});
  const EnsembleResult r = run_ensemble(spec);
  REQUIRE(r.members.size() == 1);
  const MemberRecord& m = r.members[0];
  CHECK(m.error.empty());
  CHECK(m.t == std::vector<double>{0.0});
  CHECK(m.q == std::vector<double>{0.3});
  CHECK(m.theta == std::vector<double>{1.1});
  CHECK(m.events.empty());
  REQUIRE(r.series.size() == 1);
  CHECK(r.series[0].particle_mean.value == 0.3);
  CHECK(r.series[0].particle_mean.n == 1);
}

TEST_CASE("rate zero reproduces plain particle dynamics") {
  EnsembleSpec spec = two_level_spec(0.0, 6, 0.5);
  const EnsembleResult r = run_ensemble(spec);
  for (const MemberRecord& m : r.members) {
    CHECK(m.events.empty());
    const SystemPtr& sys = spec.blocks[0].system;
    const PhaseVector theta = sys->initial_phases();
    Stream init(spec.seed, m.id, StreamPurpose::initial);
    const Point q0 = sample_position(*sys, theta, 0.0, init);
    Stream dyn(spec.seed, m.id, StreamPurpose::dynamics);
    const TrajectoryRecord path =
        simulate_path(sys, PhaseSchedule{theta, {}}, ParticleState{q0, 0.0}, spec.integrator, spec.horizon,
                      spec.record_stride, dyn);
    REQUIRE(path.t.size() == m.t.size());
    for (std::size_t i = 0; i < path.t.size(); ++i) {
      CHECK(path.t[i] == m.t[i]);
      CHECK(path.q[i][0] == m.q[i]);
    }
  }
}

TEST_CASE("results do not depend on the worker count") {
  EnsembleSpec spec = two_level_spec(2.0, 12, 0.3);
  spec.fit.mean = true;
  spec.threads = 1;
  const EnsembleResult one = run_ensemble(spec);
  spec.threads = 3;
  const EnsembleResult three = run_ensemble(spec);
  CHECK(one.event_count() > 0);
  CHECK(same_members(one, three));
  REQUIRE(one.series.size() == three.series.size());
  for (std::size_t i = 0; i < one.series.size(); ++i) {
    CHECK(one.series[i].wave_mean.value == three.series[i].wave_mean.value);
    CHECK(one.series[i].wave_mean.std_error == three.series[i].wave_mean.std_error);
  }
  // A different seed changes the draws.
  spec.seed += 1;
  CHECK_FALSE(same_members(one, run_ensemble(spec)));
}

TEST_CASE("invalid ensemble specs are rejected") {
  EnsembleSpec spec = two_level_spec(0.0, 3, 0.1);
  spec.blocks[0].init = InitPolicy::point;
  spec.blocks[0].position = Point{1.5, 0.0};
  CHECK_THROWS_AS(run_ensemble(spec), DomainError);
  spec.blocks[0].position.reset();
  CHECK_THROWS_AS(run_ensemble(spec), ModelError);
  CHECK_THROWS_AS(run_ensemble(two_level_spec(0.1, 0, 1.0)), ModelError);
  CHECK_THROWS_AS(run_ensemble(two_level_spec(0.1, 1, -1.0)), ModelError);
  CHECK_THROWS_AS(run_ensemble(two_level_spec(-0.1, 1, 1.0)), ModelError);
}

TEST_CASE("mean evolution fit") {
  SUBCASE("rate zero gives a relaxation coefficient consistent with zero") {
    EnsembleSpec spec = two_level_spec(0.0, 400, 1.0);
    spec.blocks[0].init = InitPolicy::dqe;
    spec.fit.mean = true;
    spec.keep_trajectories = false;
    const FitRecord f = mean_evolution_check(run_ensemble(spec));
    CHECK_FALSE(f.degenerate);
    CHECK(f.event_windows == 0);
    // Without events every window increment of the relaxation term is zero.
    CHECK(f.rate.value == 0.0);
    CHECK(f.ci_low <= 0.0);
    CHECK(f.ci_high >= 0.0);
  }
  SUBCASE("single level is degenerate and keeps the centroid fixed") {
    EnsembleSpec spec = two_level_spec(1.0, 20, 0.5);
    spec.blocks[0].system = ground_box();
    spec.fit.mean = true;
    const EnsembleResult r = run_ensemble(spec);
    for (const MemberRecord& m : r.members)
      for (double mu : m.wave_mean) CHECK(mu == m.wave_mean.front());
    const FitRecord f = mean_evolution_check(r);
    CHECK(f.degenerate);
    CHECK_FALSE(f.note.empty());
  }
  SUBCASE("two-level box recovers the event rate") {
    EnsembleSpec spec = two_level_spec(0.5, 600, 4.0);
    spec.blocks[0].init = InitPolicy::dqe;
    spec.integrator.dt = 2e-3;
    spec.fit.mean = true;
    spec.keep_trajectories = false;
    const FitRecord f = mean_evolution_check(run_ensemble(spec));
    CHECK_FALSE(f.degenerate);
    CHECK(f.true_rate == 0.5);
    CHECK(std::abs(f.rate.value - 0.5) < 3 * f.rate.std_error);
    // Each jump of μ matches {μ}_p - μ on average.
    CHECK(std::abs(f.jump_residual.value) < 3 * f.jump_residual.std_error + 1e-12);
  }
}

TEST_CASE("variance evolution fit") {
  SUBCASE("rate zero follows the wavefunction variance") {
    EnsembleSpec spec = two_level_spec(0.0, 8, 0.6);
    spec.fit.variance = true;
    const EnsembleResult r = run_ensemble(spec);
    const PhaseVector theta = spec.blocks[0].system->initial_phases();
    for (const SeriesPoint& p : r.series) {
      const ObservableSet o = observables(*spec.blocks[0].system, theta, p.t);
      CHECK(p.wave_variance.value == doctest::Approx(o.variance[0]).epsilon(1e-8));
    }
  }
  SUBCASE("single level keeps the variance constant") {
    EnsembleSpec spec = two_level_spec(1.0, 10, 0.5);
    spec.blocks[0].system = ground_box();
    spec.fit.variance = true;
    const EnsembleResult r = run_ensemble(spec);
    for (const MemberRecord& m : r.members)
      for (double v : m.wave_variance) CHECK(v == m.wave_variance.front());
    CHECK(variance_evolution_check(r).degenerate);
  }
  SUBCASE("events impede the growth of a spread free packet") {
    EnsembleSpec spec;
    spec.blocks = {spread_packet(40.0, 0.5)};
    spec.members = 300;
    spec.horizon = 4.0;
    spec.integrator.dt = 1e-2;
    spec.record_stride = 100;
    spec.keep_trajectories = false;
    spec.fit.variance = true;
    spec.fit.variance_samples = 32;
    spec.seed = 8;
    const SystemPtr& sys = spec.blocks[0].system;
    CHECK(fast_observables(*sys, *spec.blocks[0].theta, 0.0).variance[0] > 150.0);
    const FitRecord f = variance_evolution_check(run_ensemble(spec));
    REQUIRE_FALSE(f.degenerate);
    CHECK(f.event_windows > 0);
    // σ² > {σ²}_p on average, so the relaxation term -[σ² - {σ²}_p]λ is negative.
    CHECK(f.bracket.value + 3 * f.bracket.std_error < 0.0);
    CHECK(f.slope - 3 * f.slope_se > 0.0);
  }
}

TEST_CASE("phase uniformity test") {
  SUBCASE("null calibration") {
    int passes = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
      Stream rng(31, run, StreamPurpose::test);
      std::vector<PhaseVector> s(2000);
      for (auto& p : s) p = PhaseVector({rng.angle(), rng.angle()});
      const UniformityReport r = phase_uniformity_test(s);
      passes += r.components[0].p_value > 0.01 && r.components[1].p_value > 0.01;
    }
    // Two components per run at 1% each: expect about 98 passes.
    CHECK(passes >= 95);
  }
  SUBCASE("per-component pass rate") {
    int passes = 0;
    for (std::uint64_t run = 0; run < 100; ++run) {
      Stream rng(32, run, StreamPurpose::test);
      std::vector<PhaseVector> s(2000);
      for (auto& p : s) p = PhaseVector({rng.angle()});
      passes += phase_uniformity_test(s).min_p > 0.01;
    }
    CHECK(passes >= 98);
  }
  SUBCASE("identical phases fail") {
    std::vector<PhaseVector> s(2000, PhaseVector({1.0, 2.0}));
    const UniformityReport r = phase_uniformity_test(s);
    CHECK(r.min_p < 1e-100);
    CHECK_FALSE(r.pass);
  }
  SUBCASE("empty input") {
    const UniformityReport r = phase_uniformity_test({});
    CHECK(r.n == 0);
    CHECK(r.pass);
  }
}

TEST_CASE("DQE stationarity") {
  SUBCASE("two-level box passes") {
    DqeTestSpec spec;
    spec.members = 4000;
    spec.seed = 2;
    const DqeReport r = dqe_stationarity_test(two_level_box(), spec);
    CHECK(r.uniformity.min_p > 0.01);
    CHECK(r.pooled_d <= r.pooled_critical);
    CHECK(r.pass);
    CHECK(r.posterior_gap < 1e-6);
  }
  SUBCASE("pure initial state leaves a posterior gap") {
    DqeTestSpec spec;
    spec.members = 500;
    spec.init = InitPolicy::pure;
    spec.theta = PhaseVector({0.0});
    const SystemPtr sys = two_level_box();
    const DqeReport r = dqe_stationarity_test(sys, spec);
    CHECK(r.posterior_gap > 0.05);
    // Same gap from a direct Bayes update of |ψ_0|² at the bin centers.
    const CellGrid cg = cell_grid(sys->domain(), 512);
    const DensityField rho0 = psi_density(*sys, PhaseVector({0.0}), 0.0, cg);
    double gap = 0.0;
    for (std::size_t b = 0; b < spec.phase_bins; ++b) {
      const PhaseVector c({kTwoPi * (b + 0.5) / spec.phase_bins});
      const DensityField post = posterior_density(*sys, rho0, c, 0.0);
      const DensityField target = psi_density(*sys, c, 0.0, cg);
      double l1 = 0.0;
      for (std::size_t i = 0; i < post.values.size(); ++i) l1 += std::abs(post.values[i] - target.values[i]) * cg.cell_volume();
      gap += l1;
    }
    CHECK(r.posterior_gap == doctest::Approx(gap / spec.phase_bins).epsilon(1e-9));
  }
  SUBCASE("single level is vacuous") {
    const DqeReport r = dqe_stationarity_test(ground_box(), DqeTestSpec{});
    CHECK(r.vacuous);
    CHECK(r.pass);
  }
}

TEST_CASE("phase spread never shrinks across events") {
  EnsembleSpec spec = two_level_spec(3.0, 400, 2.0);
  spec.blocks[0].system = three_level_box();
  spec.blocks[0].theta = PhaseVector({0.0, 0.0});
  spec.integrator.dt = 5e-3;
  spec.keep_trajectories = false;
  const EnsembleResult r = run_ensemble(spec);
  const IrreversibilityReport rep = irreversibility(r);
  REQUIRE(rep.circular_variance.size() >= 4);
  CHECK(rep.monotone);
  CHECK(rep.circular_variance.front()[0] < 1e-12);
  CHECK(rep.circular_variance.back()[0] > 0.8);
  CHECK(rep.circular_variance.back()[1] > 0.8);
  for (std::size_t e = 0; e < rep.members_at_epoch.size(); ++e) CHECK(rep.members_at_epoch[e] >= 100);
}
