#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"

#include "dualwave/ensemble.hpp"
#include "dualwave/fokker_planck.hpp"
#include "dualwave/ste.hpp"

using namespace dualwave;
using namespace testing;

namespace {

/// a_i = C_i Φ_i(x) e^{-iE_i t} for the equal two-level unit box (ħ = m = 1).
std::array<Complex, 2> two_level_amplitudes(double x, double t) {
  const double c = 1.0 / std::sqrt(2.0);
  std::array<Complex, 2> a;
  for (int i = 0; i < 2; ++i) {
    const int n = i + 1;
    const double e = n * n * kPi * kPi / 2;
    a[i] = c * phi_box(n, x) * std::exp(Complex(0.0, -e * t));
  }
  return a;
}

}  // namespace

TEST_CASE("gamma examples") {
  CHECK(gamma(*two_level_box(), {0.5, 0.0}) == doctest::Approx(kTwoPi).epsilon(1e-14));
  auto g = ground_box();
  for (double x : {0.1, 0.5, 0.77}) CHECK(gamma(*g, {x, 0.0}) == doctest::Approx(std::norm(g->psi({}, 0.0, {x, 0.0}))).epsilon(1e-14));
  CHECK_THROWS_AS(gamma(*g, {1.5, 0.0}), DomainError);
}

TEST_CASE("gamma equals the phase-space integral of |psi|^2") {
  auto k1 = box({level(1, 0.6), level(3, Complex(0.3, 0.5))});
  auto k2 = box({level(1, 0.6), level(2, Complex(0.3, 0.5)), level(4, 0.4)});
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    const double x = u(rng), t = 2.0 * u(rng);
    const double i1 = phase_average([&](double a) { return std::norm(k1->psi(PhaseVector({a}), t, {x, 0.0})); });
    CHECK(gamma(*k1, {x, 0.0}) == doctest::Approx(kTwoPi * i1).epsilon(1e-8));
    const double i2 = phase_average(
        [&](double a) { return phase_average([&](double b) { return std::norm(k2->psi(PhaseVector({a, b}), t, {x, 0.0})); }, 16); },
        16);
    CHECK(gamma(*k2, {x, 0.0}) == doctest::Approx(kTwoPi * kTwoPi * i2).epsilon(1e-8));
  }
}

TEST_CASE("ste_density examples") {
  CHECK(ste_density(*ground_box(), 0.3, {0.4, 0.0}, {}) == doctest::Approx(1.0).epsilon(1e-14));
  auto two = two_level_box();
  for (double th : {0.0, 1.0, 3.0, 5.5})
    CHECK(ste_density(*two, 0.0, {0.5, 0.0}, PhaseVector({th})) == doctest::Approx(1.0 / kTwoPi).epsilon(1e-13));

  // Shifted cosine at x = 0.3: |a0 + a1 e^{iΘ}|² / (2π(|a0|² + |a1|²)).
  const auto a = two_level_amplitudes(0.3, 0.0);
  const double kappa = 2 * std::abs(a[0] * a[1]) / (std::norm(a[0]) + std::norm(a[1]));
  const double phi = std::arg(a[0]) - std::arg(a[1]);
  for (double th : {0.0, 0.8, 2.4, 4.0}) {
    const double expected = (1.0 + kappa * std::cos(th - phi)) / kTwoPi;
    CHECK(ste_density(*two, 0.0, {0.3, 0.0}, PhaseVector({th})) == doctest::Approx(expected).epsilon(1e-12));
  }
  const double total = kTwoPi * phase_average([&](double th) { return ste_density(*two, 0.0, {0.3, 0.0}, PhaseVector({th})); });
  CHECK(total == doctest::Approx(1.0).epsilon(1e-10));
  CHECK_THROWS_AS(ste_density(*two, 0.0, {0.0, 0.0}, PhaseVector({0.0})), NumericError);
}

TEST_CASE("sample_ste") {
  SUBCASE("single level returns the empty vector in one trial") {
    Stream rng(1, 0, StreamPurpose::ste);
    const SteSample s = sample_ste(*ground_box(), 0.0, {0.3, 0.0}, rng);
    CHECK(s.theta.empty());
    CHECK(s.trials == 1);
  }
  SUBCASE("circular moment of the shifted cosine") {
    auto two = two_level_box();
    const auto a = two_level_amplitudes(0.3, 0.0);
    const double kappa = 2 * std::abs(a[0] * a[1]) / (std::norm(a[0]) + std::norm(a[1]));
    const double phi = std::arg(a[0]) - std::arg(a[1]);
    // E[cos(Θ - φ)] by quadrature of the density.
    const double moment = kTwoPi * phase_average([&](double th) {
      return std::cos(th - phi) * ste_density(*two, 0.0, {0.3, 0.0}, PhaseVector({th}));
    });
    CHECK(moment == doctest::Approx(kappa / 2).epsilon(1e-12));
    Stream rng(2, 0, StreamPurpose::ste);
    std::vector<double> c(100000);
    for (auto& v : c) v = std::cos(sample_ste(*two, 0.0, {0.3, 0.0}, rng).theta[0] - phi);
    const stats::Estimate m = stats::mean(c);
    CHECK(std::abs(m.value - kappa / 2) < 3 * m.std_error);
  }
  SUBCASE("three-level joint histogram against quadrature") {
    auto three = three_level_box();
    const Point q{0.37, 0.0};
    const double t = 0.21;
    const std::size_t bins = 64, draws = 100000;
    std::vector<double> observed(bins * bins, 0.0), expected(bins * bins, 0.0);
    Stream rng(3, 0, StreamPurpose::ste);
    for (std::size_t i = 0; i < draws; ++i) {
      const PhaseVector th = sample_ste(*three, t, q, rng).theta;
      const auto ix = std::min(bins - 1, static_cast<std::size_t>(th[0] / kTwoPi * bins));
      const auto iy = std::min(bins - 1, static_cast<std::size_t>(th[1] / kTwoPi * bins));
      observed[iy * bins + ix] += 1.0;
    }
    // Cell integrals by a 4×4 midpoint rule.
    const double h = kTwoPi / bins, sub = h / 4;
    double total = 0.0;
    for (std::size_t iy = 0; iy < bins; ++iy)
      for (std::size_t ix = 0; ix < bins; ++ix) {
        double s = 0.0;
        for (int a = 0; a < 4; ++a)
          for (int b = 0; b < 4; ++b)
            s += ste_density(*three, t, q, PhaseVector({ix * h + (a + 0.5) * sub, iy * h + (b + 0.5) * sub}));
        expected[iy * bins + ix] = s * sub * sub;
        total += s * sub * sub;
      }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    for (auto& e : expected) e *= double(draws) / total;
    CHECK(stats::chi_square_test(observed, expected).p_value > 0.01);
  }
  SUBCASE("a common node is an error") {
    Stream rng(4, 0, StreamPurpose::ste);
    CHECK_THROWS_AS(sample_ste(*two_level_box(), 0.0, {0.0, 0.0}, rng), NumericError);
  }
}

TEST_CASE("envelope bounds |psi|^2 for every drawn phase") {
  auto sys = box({level(1, 0.6), level(2, Complex(0.3, 0.5)), level(4, 0.4)});
  Stream rng(5, 0, StreamPurpose::ste);
  std::vector<Complex> amp(3);
  for (int i = 0; i < 2000; ++i) {
    const Point q{rng.uniform(), 0.0};
    const double t = rng.uniform();
    if (gamma_reduced(*sys, q) == 0.0) continue;
    sys->level_amplitudes(t, q, amp);
    double env = 0.0;
    for (auto a : amp) env += std::abs(a);
    const PhaseVector th = sample_ste(*sys, t, q, rng).theta;
    CHECK(std::norm(sys->psi(th, t, q)) <= env * env * (1 + 1e-12));
  }
}

TEST_CASE("schedule_events") {
  auto two = two_level_box();
  RateModel rate;
  SUBCASE("rate zero") {
    rate.lambda = 0.0;
    Stream rng(1, 0, StreamPurpose::events);
    CHECK(schedule_events(rate, *two, 100.0, rng).empty());
  }
  SUBCASE("Poisson count moments") {
    rate.lambda = 2.0;
    std::vector<double> counts;
    for (std::uint64_t r = 0; r < 100; ++r) {
      Stream rng(2, r, StreamPurpose::events);
      const auto ev = schedule_events(rate, *two, 1000.0, rng);
      for (std::size_t i = 1; i < ev.size(); ++i) CHECK(ev[i] >= ev[i - 1]);
      CHECK(ev.back() <= 1000.0);
      counts.push_back(double(ev.size()));
    }
    const stats::Estimate m = stats::mean(counts);
    CHECK(std::abs(m.value - 2000.0) < 3.0 * std::sqrt(2000.0) / 10.0);
  }
  SUBCASE("per-particle rate scales with N") {
    rate.mode = RateMode::per_particle;
    rate.lambda = 0.5;
    rate.n_particles = 40;
    CHECK(effective_rate(rate, *two) == 20.0);
  }
  SUBCASE("energy eigenstates never undergo events in energy-spread mode") {
    rate.mode = RateMode::energy_spread;
    rate.kappa = 3.0;
    Stream rng(3, 0, StreamPurpose::events);
    CHECK(effective_rate(rate, *ground_box()) == 0.0);
    CHECK(schedule_events(rate, *ground_box(), 1e6, rng).empty());
    CHECK(effective_rate(rate, *two) == doctest::Approx(3.0 * 3 * kPi * kPi / 4));
  }
  SUBCASE("invalid rates") {
    rate.lambda = -1.0;
    CHECK_THROWS_AS(validate(rate), ModelError);
    rate.lambda = 1.0;
    rate.n_particles = 0;
    CHECK_THROWS_AS(validate(rate), ModelError);
  }
}

TEST_CASE("event_probability") {
  CHECK(event_probability(0.0, 10.0) == 0.0);
  CHECK(event_probability(1e3 * 1e-16, 1e-2) == doctest::Approx(1e-15).epsilon(1e-9));
  CHECK(event_probability(std::log(2.0), 1.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("transition_kernel") {
  SUBCASE("single level is trivial") {
    const KernelTable k = transition_kernel(*ground_box(), {}, 0.0);
    CHECK(k.k == 0);
    REQUIRE(k.values.size() == 1);
    CHECK(k.total() == doctest::Approx(1.0));
  }
  SUBCASE("rows are normalized and match a direct double quadrature") {
    auto two = two_level_box();
    const double t = 0.0;
    for (double th0 : {0.0, 0.3, 2.0}) {
      const KernelTable k = transition_kernel(*two, PhaseVector({th0}), t, 64);
      CHECK(k.total() == doctest::Approx(1.0).epsilon(1e-8));
      for (std::size_t i : {0u, 5u, 17u, 40u}) {
        const PhaseVector node = k.node(i);
        // f(Θ'|Θ) = ∫ |ψ_Θ'|²|ψ_Θ|² / Γ dq by Simpson on the unit box.
        const double direct = simpson(
            [&](double x) {
              const double g = gamma(*two, {x, 0.0});
              if (g == 0.0) return 0.0;
              return std::norm(two->psi(node, t, {x, 0.0})) * std::norm(two->psi(PhaseVector({th0}), t, {x, 0.0})) / g;
            },
            0.0, 1.0, 4000);
        CHECK(k.values[i] == doctest::Approx(direct).epsilon(1e-7));
      }
    }
  }
  SUBCASE("kernel is symmetric in its two phase arguments") {
    auto two = two_level_box();
    const std::size_t n = 32;
    const KernelTable a = transition_kernel(*two, PhaseVector({kTwoPi * 3 / n}), 0.0, n);
    const KernelTable b = transition_kernel(*two, PhaseVector({kTwoPi * 11 / n}), 0.0, n);
    CHECK(a.values[11] == doctest::Approx(b.values[3]).epsilon(1e-10));
  }
  SUBCASE("three levels unsupported") {
    auto sys = box({level(1), level(2), level(3), level(4)});
    CHECK_THROWS(transition_kernel(*sys, PhaseVector({0.0, 0.0, 0.0}), 0.0));
  }
}

TEST_CASE("posterior_density") {
  auto two = two_level_box();
  const CellGrid grid = cell_grid(two->domain(), 1024);
  SUBCASE("single level leaves the density unchanged") {
    auto g = ground_box();
    const DensityField rho = psi_density(*g, {}, 0.0, grid);
    CHECK(l1_distance(posterior_density(*g, rho, {}, 0.0), rho) < 1e-12);
  }
  SUBCASE("decoherent mixture updates to |psi_theta'|^2") {
    const DensityField mix = mixture_density(*two, grid);
    for (double th : {0.0, 1.7, 4.4}) {
      const DensityField post = posterior_density(*two, mix, PhaseVector({th}), 0.3);
      const DensityField target = psi_density(*two, PhaseVector({th}), 0.3, grid);
      double worst = 0.0;
      for (std::size_t i = 0; i < grid.size(); ++i) worst = std::max(worst, std::abs(post.values[i] - target.values[i]));
      CHECK(worst < 1e-8);
      CHECK(post.mass() == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
  SUBCASE("pure-state input leaves a gap") {
    const PhaseVector th0({0.0}), th1({2.0});
    const DensityField rho = psi_density(*two, th0, 0.0, grid);
    const DensityField post = posterior_density(*two, rho, th1, 0.0);
    // Direct evaluation: |ψ_Θ|²|ψ_Θ'|²/Γ, normalized on the grid.
    const DensityField direct = density_from_function(grid, [&](const Point& q) {
      return std::norm(two->psi(th0, 0.0, q)) * std::norm(two->psi(th1, 0.0, q)) / gamma(*two, q);
    });
    CHECK(l1_distance(post, direct) < 1e-8);
    CHECK(l1_distance(post, psi_density(*two, th1, 0.0, grid)) > 0.05);
  }
}

TEST_CASE("make_dqe") {
  SUBCASE("single member single level") {
    const auto e = make_dqe(*ground_box(), 1, 9);
    REQUIRE(e.size() == 1);
    CHECK(e[0].theta.empty());
    CHECK(e[0].state.q[0] > 0.0);
    CHECK(e[0].state.q[0] < 1.0);
  }
  SUBCASE("pooled positions follow the decoherent mixture") {
    auto two = two_level_box();
    const std::size_t n = 10000;
    const auto e = make_dqe(*two, n, 21);
    // CDF of sin²(πx) + sin²(2πx) on [0, 1].
    auto cdf = [](double x) { return x - std::sin(kTwoPi * x) / (4 * kPi) - std::sin(4 * kPi * x) / (8 * kPi); };
    std::vector<double> u;
    std::vector<double> phases;
    for (const auto& m : e) {
      u.push_back(cdf(m.state.q[0]));
      phases.push_back(m.theta[0]);
    }
    CHECK(stats::ks_uniform(u) < stats::ks_critical(n, 0.05));
    std::vector<double> hist(32, 0.0), expect(32, double(n) / 32);
    for (double p : phases) hist[std::min<std::size_t>(31, std::size_t(p / kTwoPi * 32))] += 1.0;
    CHECK(stats::chi_square_test(hist, expect).p_value > 0.01);
  }
}

TEST_CASE("apply_ste") {
  SUBCASE("single level: only the log changes") {
    auto g = ground_box();
    RunState s;
    s.particle = {{0.3, 0.0}, 0.5};
    Stream rng(1, 0, StreamPurpose::ste);
    for (int i = 0; i < 50; ++i) CHECK(apply_ste(s, *g, rng));
    CHECK(s.theta.empty());
    CHECK(s.particle.q[0] == 0.3);
    CHECK(s.log.size() == 50);
  }
  SUBCASE("conserved quantities and position are untouched") {
    auto sys = box({level(1, 0.6), level(2, Complex(0.3, 0.5)), level(4, 0.4)});
    RunState s;
    s.theta = PhaseVector({0.1, 0.2});
    s.particle = {{0.43, 0.0}, 1.25};
    Stream rng(2, 0, StreamPurpose::ste);
    const auto levels_before = sys->levels();
    for (int i = 0; i < 200; ++i) {
      const ObservableSet before = fast_observables(*sys, s.theta, s.particle.t);
      const Point q = s.particle.q;
      REQUIRE(apply_ste(s, *sys, rng, 3));
      const ObservableSet after = fast_observables(*sys, s.theta, s.particle.t);
      CHECK(before.energy == after.energy);
      CHECK(before.energy_spread == after.energy_spread);
      CHECK(s.particle.q == q);
      CHECK(s.log.back().block == 3);
      CHECK(s.log.back().after == s.theta);
      CHECK(s.log.back().t == 1.25);
    }
    for (std::size_t i = 0; i < levels_before.size(); ++i) {
      CHECK(sys->levels()[i].magnitude == levels_before[i].magnitude);
      CHECK(sys->levels()[i].members == levels_before[i].members);
    }
  }
  SUBCASE("a common node skips the event") {
    RunState s;
    s.theta = PhaseVector({1.0});
    s.particle = {{0.0, 0.0}, 0.0};
    Stream rng(3, 0, StreamPurpose::ste);
    CHECK_FALSE(apply_ste(s, *two_level_box(), rng));
    CHECK(s.skipped == 1);
    CHECK(s.theta == PhaseVector({1.0}));
    CHECK(s.log.empty());
  }
}

TEST_CASE("a degenerate single level keeps its interference pattern") {
  ModelSpec spec;
  spec.kind = ModelKind::two_particle_box;
  spec.levels = {LevelSelection{{{Mode{{1, 2}, 0.0}, 1.0}, {Mode{{2, 1}, 0.0}, Complex(0.0, 1.0)}}}};
  auto sys = build_model(spec);
  RunState s;
  s.particle = {{0.3, 0.6}, 0.0};
  Stream rng(4, 0, StreamPurpose::ste);
  const DensityField before = psi_density(*sys, s.theta, 0.0, cell_grid(sys->domain(), 32));
  for (int i = 0; i < 20; ++i) apply_ste(s, *sys, rng);
  CHECK(l1_distance(before, psi_density(*sys, s.theta, 0.0, cell_grid(sys->domain(), 32))) == 0.0);
}

TEST_CASE("post-event moments agree with sampled phases") {
  auto sys = box({level(1, 0.6), level(2, Complex(0.3, 0.5)), level(3, 0.4)});
  const Point q{0.41, 0.0};
  const PostSteMoments m = post_ste_moments(*sys, q);
  Stream rng(6, 0, StreamPurpose::ste);
  std::vector<double> mu, second;
  for (int i = 0; i < 40000; ++i) {
    const ObservableSet o = fast_observables(*sys, sample_ste(*sys, 0.0, q, rng).theta, 0.0);
    mu.push_back(o.mean[0]);
    second.push_back(o.variance[0] + o.mean[0] * o.mean[0]);
  }
  const stats::Estimate a = stats::mean(mu), b = stats::mean(second);
  CHECK(std::abs(a.value - m.mean) < 3.5 * a.std_error);
  CHECK(std::abs(b.value - m.second) < 3.5 * b.std_error);

  // Exact quadrature against its Monte Carlo branch.
  const double t = 0.33;
  Stream r1(7, 0), r2(7, 1);
  const stats::Estimate exact = post_ste_variance(*sys, t, q, 0, r1);
  CHECK(exact.std_error == 0.0);
  std::vector<double> vs;
  for (int i = 0; i < 40000; ++i) vs.push_back(fast_observables(*sys, sample_ste(*sys, t, q, r2).theta, t).variance[0]);
  const stats::Estimate mc = stats::mean(vs);
  CHECK(std::abs(mc.value - exact.value) < 3.5 * mc.std_error);
}
