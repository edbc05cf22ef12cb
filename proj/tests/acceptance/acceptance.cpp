// Acceptance run: one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "dualwave/config.hpp"
#include "dualwave/emit.hpp"
#include "dualwave/experiments.hpp"

using namespace dualwave;

namespace {

constexpr std::size_t kThreads = 4;

struct Outcome {
  bool pass = false;
  std::string detail;
};

template <typename... A>
std::string fmt(const char* f, A... a) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

const char* kTwoLevel = R"("model": {"kind": "box", "levels": [{"n": 1, "c": 1}, {"n": 2, "c": 1}]})";
const char* kThreeLevel =
    R"("model": {"kind": "box", "levels": [{"n": 1, "c": 0.6}, {"n": 2, "c": [0.3, 0.5]}, {"n": 3, "c": 0.55}]})";

SimConfig config(const std::string& body) { return parse_config("{" + body + "}"); }

// ---------------------------------------------------------------- 1

std::string msc_body(const char* model, std::uint64_t seed) {
  return fmt(R"("seed": %llu, %s, "rate": {"lambda": 5.0},
              "ensemble": {"members": 40, "horizon": 1.0, "record_stride": 100})",
             static_cast<unsigned long long>(seed), model);
}

Outcome conservation() {
  std::size_t events = 0, violations = 0;
  for (const char* model : {kTwoLevel, kThreeLevel}) {
    const SimConfig c = config(msc_body(model, 1));
    const auto systems = build_systems(c);
    const EnsembleResult r = run_ensemble(ensemble_spec(c, systems, kThreads));
    const MscReport m = msc_check(r);
    events += m.events;
    violations += m.violations;
    // |C_i| and c_ij live in the system, events only carry phases.
    const SpectralSystem& used = *r.blocks[0].system;
    const auto fresh = build_systems(c)[0];
    for (std::size_t i = 0; i < used.level_count(); ++i) {
      const Level& a = used.levels()[i];
      const Level& b = fresh->levels()[i];
      if (a.magnitude != b.magnitude || a.members != b.members || a.energy != b.energy) ++violations;
    }
    for (const auto& mem : r.members)
      for (const auto& ev : mem.events)
        if (ev.before.size() != used.phase_count() || ev.after.size() != used.phase_count()) ++violations;
  }
  // Single level: events leave the state alone.
  const SimConfig g = config(msc_body(R"("model": {"kind": "box", "levels": [{"n": 1, "c": 1}]})", 2));
  const EnsembleResult r0 = run_ensemble(ensemble_spec(g, build_systems(g), kThreads));
  const MscReport m0 = msc_check(r0);
  std::size_t k0_events = m0.events;
  violations += m0.violations;
  for (const auto& mem : r0.members)
    for (const auto& ev : mem.events)
      if (!ev.before.empty() || !ev.after.empty()) ++violations;
  return {events >= 100 && k0_events >= 100 && violations == 0,
          fmt("STEs=%zu (K=0: %zu) violations=%zu", events, k0_events, violations)};
}

// ---------------------------------------------------------------- 2

Outcome sampler_fidelity() {
  const std::string common = R"("ste_test": {"draws": 100000, "points": 5, "bins": 64, "t_max": 1.0})";
  std::size_t tests = 0, failures = 0;
  double worst = 1.0;
  for (const char* model : {kTwoLevel, kThreeLevel}) {
    const SimConfig c = config(std::string(R"("seed": 11, )") + model + ", " + common);
    const SteTestReport rep = run_ste_test(c, build_systems(c)[0], kThreads);
    for (const SteTestCase& t : rep.cases) {
      if (t.kind != "theta" && t.kind != "joint" && t.kind != "marginal_0") continue;
      ++tests;
      worst = std::min(worst, t.chi.p_value);
      if (!(t.chi.p_value > 0.01)) ++failures;
    }
  }
  return {tests == 15 && failures <= 1, fmt("tests=%zu failures=%zu min_p=%.4g", tests, failures, worst)};
}

// ---------------------------------------------------------------- 3

Outcome dqe_stationarity() {
  const SimConfig c = config(std::string(R"("seed": 12, )") + kTwoLevel + R"(, "dqe": {"members": 10000})");
  const DqeReport r = run_dqe(c, build_systems(c)[0], kThreads);
  bool bins_ok = true;
  for (const BinKs& b : r.bins) bins_ok = bins_ok && b.d <= b.critical;
  const bool ok = r.uniformity.min_p > 0.01 && bins_ok && r.pooled_d <= r.pooled_critical;
  return {ok, fmt("members=%zu uniformity_p=%.4g pooled_D=%.4g/%.4g bins_ok=%d", r.members, r.uniformity.min_p,
                  r.pooled_d, r.pooled_critical, int(bins_ok))};
}

// ---------------------------------------------------------------- 4

std::string oracle_body(const char* init, std::size_t paths) {
  return fmt(R"("seed": 13, %s, "integrator": {"dt": 0.001},
              "oracle": {"init": "%s", "paths": %zu, "horizon": 3.0, "checkpoints": 10,
                         "cells": 512, "solver_dt": 0.001, "l1_bins": 16, "l1_tolerance": 0.02})",
             kTwoLevel, init, paths);
}

Outcome quantum_equilibrium() {
  const SimConfig eq = config(oracle_body("equilibrium", 10000));
  const OracleReport a = run_oracle(eq, build_systems(eq)[0], kThreads);
  const SimConfig un = config(oracle_body("uniform", 100000));
  const OracleReport b = run_oracle(un, build_systems(un)[0], kThreads);
  double worst_ks = 0.0, worst_paths = 0.0;
  for (const auto& c : a.checkpoints) worst_ks = std::max(worst_ks, c.qe.ks / stats::ks_critical(c.qe.n, a.ks_alpha));
  for (const auto& c : b.checkpoints) worst_paths = std::max(worst_paths, c.l1_paths_solver);
  const double final_gap = b.checkpoints.back().l1_solver_psi;
  const bool ok = a.equilibrium_pass && b.relaxation_pass && std::abs(a.tau - 1.0) < 1e-12 &&
                  a.checkpoints.back().t == 3.0 * a.tau && final_gap < 0.02 && worst_paths < 0.02;
  return {ok, fmt("tau=%.3g max KS/critical=%.3f final L1(solver,|psi|^2)=%.4f max L1(paths,solver)=%.4f", a.tau,
                  worst_ks, final_gap, worst_paths)};
}

// ---------------------------------------------------------------- 5

std::string mean_body(double lambda) {
  return fmt(R"("seed": 14, %s, "rate": {"lambda": %.17g}, "init": "dqe",
              "integrator": {"dt": 0.002},
              "ensemble": {"members": 10000, "horizon": 4.0, "record_stride": 1000, "keep_trajectories": false,
                           "fit": {"mean": true, "window_steps": 4}})",
             kTwoLevel, lambda);
}

Outcome mean_evolution() {
  const SimConfig c = config(mean_body(0.5));
  const FitRecord f = mean_evolution_check(run_ensemble(ensemble_spec(c, build_systems(c), kThreads)));
  const SimConfig z = config(mean_body(0.0));
  const FitRecord f0 = mean_evolution_check(run_ensemble(ensemble_spec(z, build_systems(z), kThreads)));
  const bool ok = !f.degenerate && std::abs(f.rate.value - 0.5) <= 0.05 && !f0.degenerate && f0.ci_low <= 0.0 &&
                  f0.ci_high >= 0.0;
  return {ok, fmt("lambda_hat=%.4f +- %.4f (windows=%zu) control=%.3g in [%.3g, %.3g]", f.rate.value,
                  f.rate.std_error, f.windows, f0.rate.value, f0.ci_low, f0.ci_high)};
}

// ---------------------------------------------------------------- 6

const char* kMacroDrift = R"("seed": 15, )";

std::string macro_drift_body(std::size_t samples) {
  return std::string(kMacroDrift) + kTwoLevel +
         fmt(R"(, "macro": {"sigma": 1.0, "particles": 1, "particle_mass": 1.0, "velocities": [0, 1, 3],
                 "points": [-3, -1, 0, 1, 3], "samples": %zu, "scan_points": 241, "scan_extent": 6.0})",
             samples);
}

Outcome macro_drift() {
  const SimConfig c = config(macro_drift_body(10000));
  const MacroReport r = run_macro(c, kThreads);
  std::size_t bad = 0;
  double worst = 0.0;
  for (const DriftPoint& p : r.points) {
    bad += !p.pass;
    worst = std::max(worst, std::abs(p.mc.value - p.closed) / p.tolerance);
  }
  bool scans = true;
  double ratio = 0.0;
  for (const DriftScan& s : r.scans) {
    scans = scans && s.pass;
    ratio = std::max(ratio, s.max_deviation / s.bound);
  }
  return {r.points.size() == 15 && bad == 0 && scans,
          fmt("points=%zu failed=%zu max |mc-closed|/tol=%.3f max dev/bound=%.3f", r.points.size(), bad, worst, ratio)};
}

// ---------------------------------------------------------------- 7

std::string step_body(std::size_t members) {
  return fmt(R"("seed": 16, %s,
              "macro": {"sigma": 0.1, "particles": 100, "particle_mass": 1.0, "lambda": 0.1,
                        "velocities": [1.0], "points": [0.0], "samples": 100, "step_members": %zu, "step_horizon": 10.0,
                        "step_velocity": 1.0})",
             kTwoLevel, members);
}

Outcome step_law() {
  const SimConfig c = config(step_body(120));
  const StepLawReport s = run_macro(c, kThreads).step;
  const bool ok = s.ran && s.intervals >= 10000 && s.rate_tau >= 10.0 &&
                  std::abs(s.step.value - s.expected) <= 3 * s.step.std_error;
  return {ok, fmt("N lambda tau=%.3g intervals=%zu step=%.5f +- %.5f expected=%.5f", s.rate_tau, s.intervals,
                  s.step.value, s.step.std_error, s.expected)};
}

// ---------------------------------------------------------------- 8

const char* kGrw = R"("seed": 17, %s, "grw": {"alpha": 10, "width": 0.4, "lo": -6, "hi": 6, "points": 12001,
                      "hits": 5, "draws": 100000})";

Outcome grw() {
  // ∫F dz on random superpositions of Gaussian bumps.
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> c(-2.0, 2.0), w(0.2, 0.8), ph(0.0, kTwoPi), k(-3.0, 3.0), a(0.5, 200.0);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    GridWavefunction psi;
    psi.lo = -8.0;
    psi.dx = 16.0 / 3200;
    psi.amp.assign(3201, 0.0);
    for (int b = 0; b < 3; ++b) {
      const double x0 = c(rng), width = w(rng), phase = ph(rng), kk = k(rng);
      for (std::size_t i = 0; i < psi.size(); ++i) {
        const double x = psi.x(i);
        psi.amp[i] += std::exp(-(x - x0) * (x - x0) / (4 * width * width)) * std::exp(Complex(0.0, phase + kk * x));
      }
    }
    psi.normalize();
    worst = std::max(worst, std::abs(HitSampler(psi, a(rng)).total() - 1.0));
  }
  const SimConfig cfg = config(fmt(kGrw, kTwoLevel));
  const GrwReport r = run_grw(cfg);
  const double post_err = std::abs(r.posterior_variance - r.posterior_expected);
  const double z = std::abs(r.center_variance.value - r.center_expected) / r.center_variance.std_error;
  const bool ok = worst < 1e-6 && r.integral_pass && post_err < 1e-6 && z <= 3.0 && r.center_variance.n == 100000;
  return {ok, fmt("max |intF-1|=%.2e posterior err=%.2e center var=%.5f expected=%.5f (%.2f SE)", worst, post_err,
                  r.center_variance.value, r.center_expected, z)};
}

// ---------------------------------------------------------------- 9

Outcome arithmetic() {
  bool ok = true;
  std::string detail;
  for (const ArithmeticRow& row : physical_arithmetic()) {
    const double ratio = row.value / row.expected;
    const bool good = ratio >= 0.1 && ratio <= 10.0;
    ok = ok && good && row.pass == good;
    detail += fmt("%s=%.3g; ", row.name.c_str(), row.value);
  }
  return {ok, detail};
}

// ---------------------------------------------------------------- 10

using Maker = std::function<Bundle(std::size_t)>;

Outcome reproducibility() {
  std::vector<std::pair<std::string, Maker>> makers;
  makers.emplace_back("run", [](std::size_t th) {
    const SimConfig c = config(msc_body(kThreeLevel, 1));
    return run_bundle(run_ensemble(ensemble_spec(c, build_systems(c), th)), c);
  });
  makers.emplace_back("run-fit", [](std::size_t th) {
    SimConfig c = config(mean_body(0.5));
    c.ensemble.members = 300;
    c.ensemble.keep_trajectories = true;
    return run_bundle(run_ensemble(ensemble_spec(c, build_systems(c), th)), c);
  });
  makers.emplace_back("ste-test", [](std::size_t th) {
    const SimConfig c = config(std::string(R"("seed": 11, )") + kThreeLevel + R"(, "ste_test": {"draws": 20000})");
    return ste_test_bundle(run_ste_test(c, build_systems(c)[0], th), c);
  });
  makers.emplace_back("dqe", [](std::size_t th) {
    const SimConfig c = config(std::string(R"("seed": 12, )") + kTwoLevel + R"(, "dqe": {"members": 2000})");
    return dqe_bundle(run_dqe(c, build_systems(c)[0], th), c);
  });
  makers.emplace_back("oracle", [](std::size_t th) {
    SimConfig c = config(oracle_body("uniform", 100000));
    c.oracle.paths = 2000;
    c.oracle.horizon = 0.5;
    return oracle_bundle(run_oracle(c, build_systems(c)[0], th), c);
  });
  makers.emplace_back("macro", [](std::size_t th) {
    SimConfig c = config(macro_drift_body(500));
    c.macro.step_members = 4;
    c.macro.step_horizon = 2.0;
    return macro_bundle(run_macro(c, th), c);
  });
  makers.emplace_back("grw", [](std::size_t) {
    const SimConfig c = config(fmt(kGrw, kTwoLevel));
    return grw_bundle(run_grw(c), c);
  });
  std::size_t same = 0;
  std::string detail;
  for (const auto& [name, make] : makers) {
    const Bundle one = make(1), four = make(kThreads);
    const bool eq = one.files() == four.files() && !one.files().empty();
    same += eq;
    detail += name + (eq ? "=same " : "=DIFFERENT ");
  }
  return {same == makers.size(), detail};
}

struct Criterion {
  const char* id;
  const char* name;
  double limit_seconds;
  Outcome (*run)();
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"1", "conservation across STEs", 60, conservation},
      {"2", "STE sampler fidelity", 120, sampler_fidelity},
      {"3", "DQE stationarity", 300, dqe_stationarity},
      {"4", "quantum equilibrium preservation and relaxation", 600, quantum_equilibrium},
      {"5", "mean evolution law", 600, mean_evolution},
      {"6", "macroscopic average drift", 300, macro_drift},
      {"7", "large-N step law", 600, step_law},
      {"8", "GRW hits", 120, grw},
      {"9", "physical arithmetic", 1, arithmetic},
      {"10", "reproducibility across worker counts", 0, reproducibility},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_seconds <= 0 || secs < c.limit_seconds;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s A%s %s: %s [%.1f s%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : fmt(", limit %.0f s", c.limit_seconds).c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
