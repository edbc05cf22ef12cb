#include "dualwave/ensemble.hpp"

#include <algorithm>
#include <cmath>

#include "dualwave/fokker_planck.hpp"
#include "dualwave/parallel.hpp"

namespace dualwave {

const char* to_string(InitPolicy policy) {
  switch (policy) {
    case InitPolicy::pure: return "pure";
    case InitPolicy::dqe: return "dqe";
    case InitPolicy::uniform: return "uniform";
    case InitPolicy::point: return "point";
  }
  return "?";
}

InitPolicy init_policy_from_string(const std::string& name) {
  if (name == "pure") return InitPolicy::pure;
  if (name == "dqe") return InitPolicy::dqe;
  if (name == "uniform") return InitPolicy::uniform;
  if (name == "point") return InitPolicy::point;
  throw ModelError("unknown initial-condition policy '" + name + "'");
}

void validate(const EnsembleSpec& spec) {
  if (spec.blocks.empty()) throw ModelError("ensemble needs at least one block");
  if (spec.members < 1) throw ModelError("member count must be >= 1");
  if (!(spec.horizon >= 0.0) || !std::isfinite(spec.horizon)) throw ModelError("horizon must be >= 0");
  if (!(spec.integrator.dt > 0.0)) throw ModelError("dt must be positive");
  if (!(spec.integrator.limits.b_max > 0.0)) throw ModelError("b_max must be positive");
  if (spec.record_stride < 1) throw ModelError("record stride must be >= 1 step");
  if (spec.fit.window_steps < 1) throw ModelError("fit window must be >= 1 step");
  for (const auto& b : spec.blocks) {
    if (!b.system) throw ModelError("block without a system");
    validate(b.rate);
    if (b.theta && b.theta->size() != b.system->phase_count())
      throw ModelError("block phase vector length does not match K");
    if (b.init == InitPolicy::point && !b.position) throw ModelError("point initialization needs a position");
    if (b.position) b.system->check_point(*b.position);
  }
  if (spec.fit.axis < 0 || spec.fit.axis >= spec.blocks.front().system->dimension())
    throw ModelError("fit axis outside the configuration dimension");
}

void FitSums::add(double x, double y) {
  ++windows;
  if (y != 0.0) ++event_windows;
  sxy += x * y;
  sxx += x * x;
  sx2y2 += x * x * y * y;
  sx3y += x * x * x * y;
  sx4 += x * x * x * x;
}

void FitSums::merge(const FitSums& o) {
  windows += o.windows;
  event_windows += o.event_windows;
  sxy += o.sxy;
  sxx += o.sxx;
  sx2y2 += o.sx2y2;
  sx3y += o.sx3y;
  sx4 += o.sx4;
  chi += o.chi;
  chi_sq += o.chi_sq;
}

stats::Estimate Moments::estimate() const {
  stats::Estimate e;
  e.n = n;
  if (n == 0) return e;
  const double m = sum / static_cast<double>(n);
  e.value = m;
  if (n > 1) {
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) / static_cast<double>(n - 1));
    e.std_error = std::sqrt(var / static_cast<double>(n));
  }
  return e;
}

std::size_t EnsembleResult::event_count() const {
  std::size_t n = 0;
  for (const auto& m : members) n += m.events.size();
  return n;
}

// ---------------------------------------------------------------- members

namespace {

struct BlockRun {
  const BlockSpec* spec = nullptr;
  RunState state;
  std::unique_ptr<SpectralDrift> field;
  std::vector<double> events;
  std::size_t next_event = 0;
  std::unique_ptr<Stream> dyn, ste;
};

PhaseVector fixed_phases(const BlockSpec& b) {
  return b.theta ? *b.theta : b.system->initial_phases();
}

void init_block(BlockRun& run, const BlockSpec& b, const EnsembleSpec& spec, std::uint64_t stream_id) {
  run.spec = &b;
  const SpectralSystem& sys = *b.system;
  Stream init(spec.seed, stream_id, StreamPurpose::initial);
  switch (b.init) {
    case InitPolicy::pure:
      run.state.theta = fixed_phases(b);
      run.state.particle.q = sample_position(sys, run.state.theta, 0.0, init);
      break;
    case InitPolicy::dqe: {
      std::vector<double> a(sys.phase_count());
      for (auto& x : a) x = init.angle();
      run.state.theta = PhaseVector(std::move(a));
      run.state.particle.q = sample_position(sys, run.state.theta, 0.0, init);
      break;
    }
    case InitPolicy::uniform: {
      run.state.theta = fixed_phases(b);
      const Domain& d = sys.domain();
      for (int k = 0; k < d.dim; ++k) run.state.particle.q[k] = d.lo[k] + init.uniform() * d.length(k);
      break;
    }
    case InitPolicy::point:
      run.state.theta = fixed_phases(b);
      run.state.particle.q = *b.position;
      break;
  }
  run.state.particle.t = 0.0;
  run.field = std::make_unique<SpectralDrift>(b.system, run.state.theta, spec.integrator.limits,
                                              spec.integrator.mode);
  Stream events(spec.seed, stream_id, StreamPurpose::events);
  run.events = schedule_events(b.rate, sys, spec.horizon, events);
  run.dyn = std::make_unique<Stream>(spec.seed, stream_id, StreamPurpose::dynamics);
  run.ste = std::make_unique<Stream>(spec.seed, stream_id, StreamPurpose::ste);
}

void advance(BlockRun& run, const IntegratorConfig& cfg, double target) {
  const double h = target - run.state.particle.t;
  if (!(h > 0.0)) return;
  double w[2] = {0.0, 0.0};
  if (cfg.mode == IntegratorMode::stochastic)
    for (int k = 0; k < run.field->dimension(); ++k) w[k] = run.dyn->normal();
  run.state.particle = em_step(run.state.particle, *run.field, cfg, std::span<const double>(w, 2), h);
  run.state.particle.t = target;
}

/// Online state of the evolution-law fits for block 0.
struct FitTracker {
  PhaseVector theta;
  double mu = 0.0, mu_p = 0.0, var = 0.0, var_p = 0.0;
  bool valid = false;
};

void fit_refresh(FitTracker& ft, const SpectralSystem& sys, const RunState& s, const FitOptions& opt,
                 Stream& diag, MemberRecord& rec) {
  ft.theta = s.theta;
  const Point& q = s.particle.q;
  const double t = s.particle.t;
  ft.valid = gamma_reduced(sys, q) > 0.0;
  if (!ft.valid) return;
  const ObservableSet o = fast_observables(sys, s.theta, t);
  ft.mu = o.mean[opt.axis];
  ft.var = o.variance[opt.axis];
  if (opt.mean) ft.mu_p = post_ste_moments(sys, q, opt.axis).mean;
  if (opt.variance) {
    ft.var_p = post_ste_variance(sys, t, q, opt.axis, diag, opt.variance_samples).value;
    rec.variance_bracket.add(ft.var_p - ft.var);
  }
}

void fit_window(FitTracker& ft, const SpectralSystem& sys, const RunState& s, const FitOptions& opt,
                double w, Stream& diag, MemberRecord& rec) {
  if (ft.valid) {
    const double t = s.particle.t;
    const bool jumped = !(s.theta == ft.theta);
    const ObservableSet now = fast_observables(sys, s.theta, t);
    const ObservableSet old = jumped ? fast_observables(sys, ft.theta, t) : now;
    if (opt.mean) rec.mean_fit.add(w * (ft.mu_p - ft.mu), now.mean[opt.axis] - old.mean[opt.axis]);
    if (opt.variance) {
      rec.variance_fit.add(w * (ft.var_p - ft.var), now.variance[opt.axis] - old.variance[opt.axis]);
      const double chi = (old.variance[opt.axis] - ft.var) / w;
      rec.variance_fit.chi += chi;
      rec.variance_fit.chi_sq += chi * chi;
    }
  }
  fit_refresh(ft, sys, s, opt, diag, rec);
}

void record_row(MemberRecord& rec, const std::vector<BlockRun>& runs, const EnsembleSpec& spec) {
  const double t = runs.front().state.particle.t;
  const int axis = spec.fit.axis;
  const SpectralSystem& sys0 = *spec.blocks.front().system;
  const ObservableSet o = fast_observables(sys0, runs.front().state.theta, t);
  rec.wave_mean.push_back(o.mean[axis]);
  rec.wave_variance.push_back(o.variance[axis]);
  rec.particle.push_back(runs.front().state.particle.q[axis]);
  if (!spec.keep_trajectories) return;
  rec.t.push_back(t);
  for (const auto& r : runs)
    for (int k = 0; k < r.spec->system->dimension(); ++k) rec.q.push_back(r.state.particle.q[k]);
  for (const auto& r : runs)
    for (double a : r.state.theta.angles) rec.theta.push_back(a);
}

void run_member(const EnsembleSpec& spec, std::size_t id, MemberRecord& rec) {
  rec.id = id;
  const std::size_t nb = spec.blocks.size();
  std::vector<BlockRun> runs(nb);
  const IntegratorConfig& cfg = spec.integrator;
  const std::size_t n = step_count(spec.horizon, cfg.dt);
  const bool fitting = spec.fit.mean || spec.fit.variance;
  const double w = static_cast<double>(spec.fit.window_steps) * cfg.dt;
  const SpectralSystem& sys0 = *spec.blocks.front().system;
  Stream diag(spec.seed, id * nb, StreamPurpose::diagnostics);
  FitTracker tracker;

  try {
    for (std::size_t b = 0; b < nb; ++b) init_block(runs[b], spec.blocks[b], spec, id * nb + b);
    record_row(rec, runs, spec);
    if (fitting) fit_refresh(tracker, sys0, runs[0].state, spec.fit, diag, rec);

    for (std::size_t j = 0; j < n; ++j) {
      const double target = (j + 1 == n) ? spec.horizon : static_cast<double>(j + 1) * cfg.dt;
      for (std::size_t b = 0; b < nb; ++b) {
        BlockRun& r = runs[b];
        const SpectralSystem& sys = *r.spec->system;
        while (r.next_event < r.events.size() && r.events[r.next_event] <= target) {
          advance(r, cfg, r.events[r.next_event]);
          const std::size_t before = r.state.log.size();
          PhaseVector theta_before = r.state.theta;
          if (apply_ste(r.state, sys, *r.ste, b)) {
            r.field->set_phases(r.state.theta);
            if (b == 0 && spec.fit.mean && r.state.log.size() > before) {
              const SteEvent& ev = r.state.log.back();
              const double t = ev.t;
              const double mu_p = post_ste_moments(sys, ev.q, spec.fit.axis).mean;
              const double mu_before = fast_observables(sys, theta_before, t).mean[spec.fit.axis];
              const double mu_after = fast_observables(sys, ev.after, t).mean[spec.fit.axis];
              rec.mean_gap.add(mu_p - ev.q[spec.fit.axis]);
              rec.jump_residual.add((mu_after - mu_before) - (mu_p - mu_before));
            }
          }
          ++r.next_event;
        }
        advance(r, cfg, target);
      }
      if (fitting && (j + 1) % spec.fit.window_steps == 0)
        fit_window(tracker, sys0, runs[0].state, spec.fit, w, diag, rec);
      if ((j + 1) % spec.record_stride == 0 || j + 1 == n) record_row(rec, runs, spec);
    }
  } catch (const NonFiniteState& e) {
    rec.error = std::string(e.what()) + " (last valid t = " + std::to_string(e.last_valid().t) + ")";
  } catch (const std::exception& e) {
    rec.error = e.what();
  }
  for (auto& r : runs) {
    rec.skipped += r.state.skipped;
    for (auto& ev : r.state.log) rec.events.push_back(ev);
    RunState fin = r.state;
    fin.log.clear();
    rec.final_states.push_back(std::move(fin));
  }
  std::stable_sort(rec.events.begin(), rec.events.end(),
                   [](const SteEvent& a, const SteEvent& b) { return a.t < b.t; });
}

stats::Estimate column_estimate(const std::vector<MemberRecord>& members, std::size_t row,
                                std::vector<double> MemberRecord::*column) {
  Moments m;
  for (const auto& rec : members) {
    if (!rec.error.empty()) continue;
    const auto& v = rec.*column;
    if (row < v.size()) m.add(v[row]);
  }
  return m.estimate();
}

}  // namespace

EnsembleResult run_ensemble(const EnsembleSpec& spec) {
  validate(spec);
  EnsembleResult out;
  out.blocks = spec.blocks;
  out.member_count = spec.members;
  out.horizon = spec.horizon;
  out.dt = spec.integrator.dt;
  out.fit_window_steps = spec.fit.window_steps;
  out.fit_axis = spec.fit.axis;
  out.seed = spec.seed;
  out.config_hash = spec.config_hash;
  out.members.resize(spec.members);
  parallel_for(spec.members, spec.threads, [&](std::size_t i) { run_member(spec, i, out.members[i]); });

  std::size_t rows = 0;
  for (const auto& m : out.members) {
    if (!m.error.empty()) {
      out.failed.push_back(m.id);
      continue;
    }
    rows = std::max(rows, m.wave_mean.size());
  }
  const std::size_t n = step_count(spec.horizon, spec.integrator.dt);
  std::vector<double> times;
  times.push_back(0.0);
  for (std::size_t j = 0; j < n; ++j)
    if ((j + 1) % spec.record_stride == 0 || j + 1 == n)
      times.push_back((j + 1 == n) ? spec.horizon : static_cast<double>(j + 1) * spec.integrator.dt);
  for (std::size_t r = 0; r < rows && r < times.size(); ++r) {
    SeriesPoint p;
    p.t = times[r];
    p.wave_mean = column_estimate(out.members, r, &MemberRecord::wave_mean);
    p.wave_variance = column_estimate(out.members, r, &MemberRecord::wave_variance);
    p.particle_mean = column_estimate(out.members, r, &MemberRecord::particle);
    out.series.push_back(p);
  }
  return out;
}

// ---------------------------------------------------------------- fits

namespace {

FitRecord finish_fit(const FitSums& s, double w, double confidence, double true_rate) {
  FitRecord f;
  f.window = w;
  f.windows = s.windows;
  f.event_windows = s.event_windows;
  f.confidence = confidence;
  f.true_rate = true_rate;
  f.rate.n = s.windows;
  if (!(s.sxx > 0.0)) {
    f.degenerate = true;
    f.note = "relaxation term identically zero; nothing to fit";
    return f;
  }
  f.slope = s.sxy / s.sxx;
  const double resid = s.sx2y2 - 2.0 * f.slope * s.sx3y + f.slope * f.slope * s.sx4;
  f.slope_se = std::sqrt(std::max(resid, 0.0)) / s.sxx;
  const double cw = f.slope * w;
  if (!(cw < 1.0)) {
    f.degenerate = true;
    f.note = "slope too large for the window; shorten the fit window";
    return f;
  }
  f.rate.value = -std::log1p(-cw) / w;
  f.rate.std_error = f.slope_se / (1.0 - cw);
  const double z = stats::normal_quantile(0.5 + 0.5 * confidence);
  f.ci_low = f.rate.value - z * f.rate.std_error;
  f.ci_high = f.rate.value + z * f.rate.std_error;
  if (s.event_windows == 0) f.note = "no events in any window";
  return f;
}

template <typename Pick>
FitRecord collect(const EnsembleResult& result, double confidence, Pick pick) {
  FitSums sums;
  Moments gap, residual, bracket;
  for (const auto& m : result.members) {
    if (!m.error.empty()) continue;
    sums.merge(pick(m));
    gap.merge(m.mean_gap);
    residual.merge(m.jump_residual);
    bracket.merge(m.variance_bracket);
  }
  const double w = static_cast<double>(result.fit_window_steps) * result.dt;
  const auto& b0 = result.blocks.front();
  FitRecord f = finish_fit(sums, w, confidence, effective_rate(b0.rate, *b0.system));
  f.mean_gap = gap.estimate();
  f.jump_residual = residual.estimate();
  f.bracket = bracket.estimate();
  if (sums.windows > 0) {
    Moments chi;
    chi.n = sums.windows;
    chi.sum = sums.chi;
    chi.sum_sq = sums.chi_sq;
    f.chi = chi.estimate();
  }
  return f;
}

}  // namespace

FitRecord mean_evolution_check(const EnsembleResult& result, double confidence) {
  if (result.blocks.empty()) throw ModelError("empty ensemble result");
  return collect(result, confidence, [](const MemberRecord& m) { return m.mean_fit; });
}

FitRecord variance_evolution_check(const EnsembleResult& result, double confidence) {
  if (result.blocks.empty()) throw ModelError("empty ensemble result");
  return collect(result, confidence, [](const MemberRecord& m) { return m.variance_fit; });
}

// ---------------------------------------------------------------- phase tests

UniformityReport phase_uniformity_test(const std::vector<PhaseVector>& samples, std::size_t bins,
                                       double significance) {
  if (bins < 2) throw ModelError("uniformity test needs at least two bins");
  UniformityReport r;
  r.n = samples.size();
  r.bins = bins;
  r.significance = significance;
  if (samples.empty()) return r;
  const std::size_t k = samples.front().size();
  const double width = kTwoPi / static_cast<double>(bins);
  std::vector<std::vector<double>> cols(k, std::vector<double>(samples.size()));
  for (std::size_t s = 0; s < samples.size(); ++s)
    for (std::size_t i = 0; i < k; ++i) cols[i][s] = samples[s][i];
  const std::vector<double> expected(bins, static_cast<double>(samples.size()) / static_cast<double>(bins));
  for (std::size_t i = 0; i < k; ++i) {
    std::vector<double> observed(bins, 0.0);
    for (double a : cols[i]) {
      auto b = static_cast<std::size_t>(a / width);
      observed[std::min(b, bins - 1)] += 1.0;
    }
    r.components.push_back(stats::chi_square_test(observed, expected));
    r.min_p = std::min(r.min_p, r.components.back().p_value);
  }
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      const double c = stats::circular_correlation(cols[i], cols[j]);
      r.correlations.push_back(c);
      r.max_abs_correlation = std::max(r.max_abs_correlation, std::abs(c));
    }
  r.pass = k == 0 || r.min_p > significance / static_cast<double>(k);
  return r;
}

DqeReport dqe_stationarity_test(const SystemPtr& sys_ptr, const DqeTestSpec& spec, std::size_t threads) {
  if (!sys_ptr) throw ModelError("DQE test needs a system");
  const SpectralSystem& sys = *sys_ptr;
  if (sys.dimension() != 1) throw ModelError("conditional KS check is implemented for 1-D systems");
  if (spec.members < 1) throw ModelError("DQE test needs at least one member");
  if (spec.phase_bins < 1) throw ModelError("DQE test needs at least one phase bin");
  const std::size_t k = sys.phase_count();
  DqeReport rep;
  rep.members = spec.members;
  rep.k = k;
  if (k == 0) {
    rep.vacuous = true;
    return rep;
  }
  const PhaseVector pure = spec.theta ? *spec.theta : sys.initial_phases();
  if (pure.size() != k) throw ModelError("phase vector length does not match K");

  // Level functions on the quadrature nodes for the per-member CDFs.
  const auto& g = sys.grid();
  const std::size_t nodes = g.points[0];
  const std::size_t nl = sys.level_count();
  std::vector<Complex> phi(nodes * nl);
  std::vector<double> xs(nodes);
  for (std::size_t i = 0; i < nodes; ++i) {
    xs[i] = g.node(0, i);
    for (std::size_t l = 0; l < nl; ++l) phi[i * nl + l] = sys.level_jet(l, {xs[i], 0.0}).value;
  }

  rep.phases_after.resize(spec.members);
  rep.positions.resize(spec.members);
  std::vector<double> pit(spec.members);
  parallel_for(spec.members, threads, [&](std::size_t m) {
    Stream init(spec.seed, m, StreamPurpose::initial);
    Stream ste(spec.seed, m, StreamPurpose::ste);
    PhaseVector theta = pure;
    if (spec.init == InitPolicy::dqe) {
      std::vector<double> a(k);
      for (auto& x : a) x = init.angle();
      theta = PhaseVector(std::move(a));
    } else if (spec.init != InitPolicy::pure) {
      throw ModelError("DQE test supports dqe or pure initialization");
    }
    const Point q = sample_position(sys, theta, spec.t, init);
    const PhaseVector after = sample_ste(sys, spec.t, q, ste).theta;
    rep.phases_after[m] = after;
    rep.positions[m] = q;

    std::vector<Complex> a(nl);
    for (std::size_t l = 0; l < nl; ++l) a[l] = sys.coefficient(l, after, spec.t);
    auto dens = [&](std::size_t i) {
      Complex z{};
      for (std::size_t l = 0; l < nl; ++l) z += a[l] * phi[i * nl + l];
      return std::norm(z);
    };
    double total = 0.0, below = 0.0;
    double prev = dens(0);
    const double dq = std::norm(sys.psi(after, spec.t, q));
    for (std::size_t i = 1; i < nodes; ++i) {
      const double cur = dens(i);
      const double seg = 0.5 * (prev + cur) * (xs[i] - xs[i - 1]);
      if (q[0] >= xs[i]) {
        below += seg;
      } else if (q[0] > xs[i - 1]) {
        below += 0.5 * (prev + dq) * (q[0] - xs[i - 1]);
      }
      total += seg;
      prev = cur;
    }
    pit[m] = std::clamp(below / total, 0.0, 1.0);
  });

  rep.uniformity = phase_uniformity_test(rep.phases_after, spec.uniformity_bins, spec.significance);
  rep.pooled_d = stats::ks_uniform(pit);
  rep.pooled_critical = stats::ks_critical(spec.members, spec.ks_alpha);
  rep.pooled_p = stats::ks_p_value(rep.pooled_d, spec.members);

  const std::size_t nbins = spec.phase_bins;
  rep.bin_alpha = spec.ks_alpha / static_cast<double>(nbins);
  const double width = kTwoPi / static_cast<double>(nbins);
  std::vector<std::vector<double>> per_bin(nbins);
  for (std::size_t m = 0; m < spec.members; ++m) {
    const auto b = std::min(static_cast<std::size_t>(rep.phases_after[m][0] / width), nbins - 1);
    per_bin[b].push_back(pit[m]);
  }
  rep.conditional_pass = rep.pooled_d <= rep.pooled_critical;
  for (std::size_t b = 0; b < nbins; ++b) {
    BinKs bk;
    bk.lo = width * static_cast<double>(b);
    bk.hi = bk.lo + width;
    bk.n = per_bin[b].size();
    if (bk.n > 0) {
      bk.d = stats::ks_uniform(per_bin[b]);
      bk.critical = stats::ks_critical(bk.n, rep.bin_alpha);
      bk.p_value = stats::ks_p_value(bk.d, bk.n);
      if (bk.d > bk.critical) rep.conditional_pass = false;
    }
    rep.bins.push_back(bk);
  }

  // Bayes-update oracle at the bin centers.
  const CellGrid cg = cell_grid(sys.domain(), 512);
  const DensityField rho0 =
      spec.init == InitPolicy::dqe ? mixture_density(sys, cg) : psi_density(sys, pure, spec.t, cg);
  double gap = 0.0;
  for (std::size_t b = 0; b < nbins; ++b) {
    const PhaseVector center(std::vector<double>(k, width * (static_cast<double>(b) + 0.5)));
    gap += l1_distance(posterior_density(sys, rho0, center, spec.t), psi_density(sys, center, spec.t, cg));
  }
  rep.posterior_gap = gap / static_cast<double>(nbins);
  rep.pass = rep.uniformity.pass && rep.conditional_pass;
  return rep;
}

IrreversibilityReport irreversibility(const EnsembleResult& result, std::size_t min_members) {
  IrreversibilityReport rep;
  if (result.blocks.empty()) return rep;
  const std::size_t k = result.blocks.front().system->phase_count();
  if (k == 0) return rep;
  std::vector<std::vector<PhaseVector>> epochs;
  for (const auto& m : result.members) {
    if (!m.error.empty() || m.final_states.empty()) continue;
    std::vector<PhaseVector> seq;
    for (const auto& ev : m.events)
      if (ev.block == 0) {
        if (seq.empty()) seq.push_back(ev.before);
        seq.push_back(ev.after);
      }
    if (seq.empty()) seq.push_back(m.final_states.front().theta);
    for (std::size_t e = 0; e < seq.size(); ++e) {
      if (epochs.size() <= e) epochs.resize(e + 1);
      epochs[e].push_back(seq[e]);
    }
  }
  for (const auto& group : epochs) {
    if (group.size() < min_members) break;
    const double n = static_cast<double>(group.size());
    std::vector<double> cv(k), se(k);
    for (std::size_t i = 0; i < k; ++i) {
      double c = 0, s = 0, cc = 0, ss = 0, cs = 0;
      for (const auto& p : group) {
        const double x = std::cos(p[i]), y = std::sin(p[i]);
        c += x;
        s += y;
        cc += x * x;
        ss += y * y;
        cs += x * y;
      }
      c /= n;
      s /= n;
      const double vc = cc / n - c * c, vs = ss / n - s * s, vcs = cs / n - c * s;
      const double r = std::hypot(c, s);
      cv[i] = 1.0 - r;
      // Delta method for the mean resultant length.
      se[i] = r > 1e-9 ? std::sqrt(std::max(0.0, (c * c * vc + s * s * vs + 2 * c * s * vcs) / (n * r * r)))
                       : std::sqrt(std::max(0.0, (vc + vs) / (2.0 * n)));
    }
    rep.circular_variance.push_back(cv);
    rep.std_error.push_back(se);
    rep.members_at_epoch.push_back(group.size());
  }
  for (std::size_t e = 1; e < rep.circular_variance.size(); ++e)
    for (std::size_t i = 0; i < k; ++i) {
      const double drop = rep.circular_variance[e - 1][i] - rep.circular_variance[e][i];
      const double slack = 3.0 * std::hypot(rep.std_error[e - 1][i], rep.std_error[e][i]);
      if (drop > slack) ++rep.violations;
    }
  rep.monotone = rep.violations == 0;
  return rep;
}

}  // namespace dualwave
