#include "dualwave/emit.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <openssl/evp.h>

namespace dualwave {

const char* version() { return DUALWAVE_VERSION; }

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------- csv

CsvWriter::CsvWriter(const std::vector<std::string>& header) {
  for (const auto& h : header) add(h);
  end_row();
}

void CsvWriter::sep() {
  if (!fresh_) text_.push_back(',');
  fresh_ = false;
}

CsvWriter& CsvWriter::add(double v) {
  sep();
  text_ += format_number(v);
  return *this;
}

CsvWriter& CsvWriter::add(std::uint64_t v) {
  sep();
  text_ += std::to_string(v);
  return *this;
}

CsvWriter& CsvWriter::add(const std::string& v) {
  sep();
  if (v.find_first_of(",\"\n") == std::string::npos) {
    text_ += v;
  } else {
    text_.push_back('"');
    for (char c : v) {
      if (c == '"') text_.push_back('"');
      text_.push_back(c);
    }
    text_.push_back('"');
  }
  return *this;
}

CsvWriter& CsvWriter::skip() {
  sep();
  return *this;
}

void CsvWriter::end_row() {
  text_.push_back('\n');
  fresh_ = true;
}

// ---------------------------------------------------------------- bundle

void Bundle::add(const std::string& path, std::string content) { files_[path] = std::move(content); }

void Bundle::add_json(const std::string& path, const Json& value) { add(path, value.dump(2) + "\n"); }

std::vector<ManifestEntry> Bundle::manifest() const {
  std::vector<ManifestEntry> out;
  for (const auto& [path, content] : files_) out.push_back({path, content.size(), sha256_hex(content)});
  return out;
}

std::vector<ManifestEntry> Bundle::write(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw std::runtime_error(dir.string() + ": " + ec.message());
  const std::vector<ManifestEntry> entries = manifest();
  Json files = Json::array();
  for (const auto& e : entries) files.push_back({{"path", e.path}, {"bytes", e.bytes}, {"sha256", e.sha256}});
  std::map<std::string, std::string> all = files_;
  all["manifest.json"] = Json{{"files", files}}.dump(2) + "\n";
  for (const auto& [path, content] : all) {
    const fs::path target = dir / path;
    fs::create_directories(target.parent_path(), ec);
    if (ec) throw std::runtime_error(target.parent_path().string() + ": " + ec.message());
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error(target.string() + ": write failed");
  }
  return entries;
}

// ---------------------------------------------------------------- json

Json to_json(const stats::Estimate& e) { return {{"value", e.value}, {"std_error", e.std_error}, {"n", e.n}}; }

Json to_json(const stats::ChiSquareResult& r) {
  return {{"statistic", r.statistic}, {"dof", r.dof}, {"p_value", r.p_value}, {"bins", r.bins}};
}

Json to_json(const FitRecord& f) {
  return {{"degenerate", f.degenerate},
          {"note", f.note},
          {"window", f.window},
          {"windows", f.windows},
          {"event_windows", f.event_windows},
          {"slope", f.slope},
          {"slope_se", f.slope_se},
          {"rate", to_json(f.rate)},
          {"ci_low", f.ci_low},
          {"ci_high", f.ci_high},
          {"confidence", f.confidence},
          {"true_rate", f.true_rate},
          {"mean_gap", to_json(f.mean_gap)},
          {"jump_residual", to_json(f.jump_residual)},
          {"bracket", to_json(f.bracket)},
          {"chi", to_json(f.chi)}};
}

Json to_json(const UniformityReport& r) {
  Json comps = Json::array();
  for (const auto& c : r.components) comps.push_back(to_json(c));
  return {{"n", r.n},
          {"bins", r.bins},
          {"components", comps},
          {"min_p", r.min_p},
          {"correlations", r.correlations},
          {"max_abs_correlation", r.max_abs_correlation},
          {"significance", r.significance},
          {"note", "pass requires min_p > significance / K (Bonferroni over components)"},
          {"pass", r.pass}};
}

Json to_json(const DqeReport& r) {
  Json bins = Json::array();
  for (const auto& b : r.bins)
    bins.push_back({{"lo", b.lo}, {"hi", b.hi}, {"n", b.n}, {"d", b.d}, {"critical", b.critical}, {"p_value", b.p_value}});
  return {{"members", r.members},
          {"k", r.k},
          {"vacuous", r.vacuous},
          {"uniformity", to_json(r.uniformity)},
          {"pooled_ks", {{"d", r.pooled_d}, {"critical", r.pooled_critical}, {"p_value", r.pooled_p}}},
          {"bin_alpha", r.bin_alpha},
          {"bins", bins},
          {"posterior_gap", r.posterior_gap},
          {"conditional_pass", r.conditional_pass},
          {"pass", r.pass}};
}

Json to_json(const IrreversibilityReport& r) {
  Json epochs = Json::array();
  for (std::size_t e = 0; e < r.circular_variance.size(); ++e)
    epochs.push_back({{"epoch", e},
                      {"members", r.members_at_epoch[e]},
                      {"circular_variance", r.circular_variance[e]},
                      {"std_error", r.std_error[e]}});
  return {{"epochs", epochs}, {"violations", r.violations}, {"monotone", r.monotone}};
}

Json to_json(const MscReport& r) { return {{"events", r.events}, {"violations", r.violations}, {"pass", r.pass}}; }

Json to_json(const OracleReport& r) {
  Json cps = Json::array();
  for (const auto& c : r.checkpoints)
    cps.push_back({{"t", c.t},
                   {"n", c.qe.n},
                   {"ks", c.qe.ks},
                   {"p_value", c.qe.p_value},
                   {"histogram_l1", c.qe.l1},
                   {"l1_paths_solver", c.l1_paths_solver},
                   {"l1_solver_psi", c.l1_solver_psi}});
  return {{"init", r.init},
          {"paths", r.paths},
          {"failed_paths", r.failed_paths},
          {"tau", r.tau},
          {"ks_alpha", r.ks_alpha},
          {"checkpoints", cps},
          {"equilibrium_pass", r.equilibrium_pass},
          {"relaxation_pass", r.relaxation_pass},
          {"pass", r.pass}};
}

Json to_json(const SteTestReport& r) {
  Json cases = Json::array();
  for (const auto& c : r.cases)
    cases.push_back({{"point", c.point},
                     {"q", {c.q[0], c.q[1]}},
                     {"t", c.t},
                     {"kind", c.kind},
                     {"chi_square", to_json(c.chi)},
                     {"mean_trials", c.mean_trials}});
  return {{"k", r.k},
          {"draws", r.draws},
          {"bins", r.bins},
          {"significance", r.significance},
          {"cases", cases},
          {"failures", r.failures},
          {"allowed_failures", r.allowed_failures},
          {"pass", r.pass}};
}

Json to_json(const GrwReport& r) {
  return {{"f_integral", r.f_integral},
          {"posterior_variance", r.posterior_variance},
          {"posterior_expected", r.posterior_expected},
          {"center_variance", to_json(r.center_variance)},
          {"center_expected", r.center_expected},
          {"hits", r.hits.size()},
          {"integral_pass", r.integral_pass},
          {"posterior_pass", r.posterior_pass},
          {"center_pass", r.center_pass},
          {"pass", r.pass}};
}

Json to_json(const MacroReport& r) {
  Json points = Json::array();
  for (const auto& p : r.points)
    points.push_back({{"velocity", p.velocity},
                      {"g", p.g},
                      {"r_over_sigma", p.r_over_sigma},
                      {"closed", p.closed},
                      {"weighted", p.weighted},
                      {"mc", to_json(p.mc)},
                      {"tolerance", p.tolerance},
                      {"pass", p.pass}});
  Json scans = Json::array();
  for (const auto& s : r.scans)
    scans.push_back(
        {{"velocity", s.velocity}, {"max_deviation", s.max_deviation}, {"bound", s.bound}, {"pass", s.pass}});
  Json arith = Json::array();
  for (const auto& a : r.arithmetic)
    arith.push_back({{"name", a.name}, {"value", a.value}, {"expected", a.expected}, {"pass", a.pass}});
  Json step = {{"ran", r.step.ran}};
  if (r.step.ran) {
    step["members"] = r.step.members;
    step["intervals"] = r.step.intervals;
    step["step"] = to_json(r.step.step);
    step["expected"] = r.step.expected;
    step["rate_tau"] = r.step.rate_tau;
    step["pass"] = r.step.pass;
  }
  return {{"mass", r.mass},
          {"drift_points", points},
          {"drift_scans", scans},
          {"arithmetic", arith},
          {"spread_at_1e23",
           {{"variance", r.spread.variance},
            {"reference", r.spread.reference},
            {"ratio", r.spread.ratio},
            {"negligible", r.spread.negligible}}},
          {"step_law", step},
          {"pass", r.pass}};
}

Json summary_head(const SimConfig& config, const std::string& subcommand) {
  return {{"tool", "dualwave"},
          {"version", version()},
          {"subcommand", subcommand},
          {"seed", config.seed},
          {"config_hash", config_hash(config)},
          {"config", Json::parse(emit_config(config))}};
}

// ---------------------------------------------------------------- run

namespace {

std::vector<PhaseVector> final_phases(const EnsembleResult& result) {
  std::vector<PhaseVector> out;
  for (const auto& m : result.members)
    if (m.error.empty() && !m.final_states.empty()) out.push_back(m.final_states.front().theta);
  return out;
}

}  // namespace

Json run_statistics(const EnsembleResult& result, const SimConfig& config) {
  Json failed = Json::array();
  for (const auto& m : result.members)
    if (!m.error.empty()) failed.push_back({{"member", m.id}, {"error", m.error}});
  std::size_t skipped = 0;
  for (const auto& m : result.members) skipped += m.skipped;
  Json stats = {{"members", result.member_count},
                {"failed", failed},
                {"events", result.event_count()},
                {"skipped_events", skipped},
                {"conservation", to_json(msc_check(result))}};
  if (config.ensemble.fit.mean) stats["mean_fit"] = to_json(mean_evolution_check(result));
  if (config.ensemble.fit.variance) stats["variance_fit"] = to_json(variance_evolution_check(result));
  const std::size_t k = result.blocks.front().system->phase_count();
  if (k > 0) {
    stats["irreversibility"] = to_json(irreversibility(result));
    const auto phases = final_phases(result);
    if (phases.size() >= 2) stats["final_phase_uniformity"] = to_json(phase_uniformity_test(phases, 32, config.significance));
  }
  if (!result.series.empty()) {
    const SeriesPoint& last = result.series.back();
    stats["final"] = {{"t", last.t},
                      {"wave_mean", to_json(last.wave_mean)},
                      {"wave_variance", to_json(last.wave_variance)},
                      {"particle_mean", to_json(last.particle_mean)}};
  }
  return stats;
}

Bundle run_bundle(const EnsembleResult& result, const SimConfig& config) {
  Bundle bundle;
  const std::size_t nb = result.blocks.size();
  std::size_t max_k = 0;
  int max_dim = 1;
  std::vector<std::string> header{"member_id", "t"};
  for (std::size_t b = 0; b < nb; ++b) {
    const auto& sys = *result.blocks[b].system;
    const std::string pre = nb == 1 ? "" : "b" + std::to_string(b) + "_";
    for (int k = 0; k < sys.dimension(); ++k) header.push_back(pre + "q" + std::to_string(k));
    max_k = std::max(max_k, sys.phase_count());
    max_dim = std::max(max_dim, sys.dimension());
  }
  for (std::size_t b = 0; b < nb; ++b) {
    const std::string pre = nb == 1 ? "" : "b" + std::to_string(b) + "_";
    for (std::size_t i = 1; i <= result.blocks[b].system->phase_count(); ++i)
      header.push_back(pre + "theta" + std::to_string(i));
  }
  CsvWriter traj(header);
  const std::size_t qw = header.size() - 2;
  for (const auto& m : result.members) {
    if (m.t.empty()) continue;
    const std::size_t width = (m.q.size() + m.theta.size()) / m.t.size();
    if (width != qw) continue;
    const std::size_t qn = m.q.size() / m.t.size(), tn = m.theta.size() / m.t.size();
    for (std::size_t r = 0; r < m.t.size(); ++r) {
      traj.add(static_cast<std::uint64_t>(m.id)).add(m.t[r]);
      for (std::size_t j = 0; j < qn; ++j) traj.add(m.q[r * qn + j]);
      for (std::size_t j = 0; j < tn; ++j) traj.add(m.theta[r * tn + j]);
      traj.end_row();
    }
  }
  bundle.add("trajectories.csv", traj.str());

  std::vector<std::string> eh{"member_id", "t_event", "block"};
  for (std::size_t i = 1; i <= max_k; ++i) eh.push_back("theta_before" + std::to_string(i));
  for (std::size_t i = 1; i <= max_k; ++i) eh.push_back("theta_after" + std::to_string(i));
  for (int k = 0; k < max_dim; ++k) eh.push_back("q_p" + std::to_string(k));
  eh.push_back("accept_trials");
  CsvWriter ev(eh);
  for (const auto& m : result.members)
    for (const auto& e : m.events) {
      const int dim = result.blocks[e.block].system->dimension();
      ev.add(static_cast<std::uint64_t>(m.id)).add(e.t).add(static_cast<std::uint64_t>(e.block));
      for (std::size_t i = 0; i < max_k; ++i) i < e.before.size() ? ev.add(e.before[i]) : ev.skip();
      for (std::size_t i = 0; i < max_k; ++i) i < e.after.size() ? ev.add(e.after[i]) : ev.skip();
      for (int k = 0; k < max_dim; ++k) k < dim ? ev.add(e.q[k]) : ev.skip();
      ev.add(static_cast<std::uint64_t>(e.trials));
      ev.end_row();
    }
  bundle.add("events.csv", ev.str());

  Json summary = summary_head(config, "run");
  summary["statistics"] = run_statistics(result, config);
  bundle.add_json("summary.json", summary);

  CsvWriter series({"t", "n", "wave_mean", "wave_mean_se", "wave_variance", "wave_variance_se", "particle_mean",
                    "particle_mean_se"});
  for (const auto& p : result.series) {
    series.add(p.t).add(static_cast<std::uint64_t>(p.wave_mean.n));
    series.add(p.wave_mean.value).add(p.wave_mean.std_error);
    series.add(p.wave_variance.value).add(p.wave_variance.std_error);
    series.add(p.particle_mean.value).add(p.particle_mean.std_error);
    series.end_row();
  }
  bundle.add("plotdata/series.csv", series.str());

  const SpectralSystem& sys0 = *result.blocks.front().system;
  const std::size_t k0 = sys0.phase_count();
  const std::size_t hb = 32;
  std::vector<std::string> ph{"bin_lo", "bin_hi"};
  for (std::size_t i = 1; i <= k0; ++i) ph.push_back("count_theta" + std::to_string(i));
  CsvWriter phist(ph);
  std::vector<std::vector<std::uint64_t>> counts(k0, std::vector<std::uint64_t>(hb, 0));
  for (const auto& theta : final_phases(result))
    for (std::size_t i = 0; i < k0; ++i)
      ++counts[i][std::min(static_cast<std::size_t>(theta[i] / (kTwoPi / hb)), hb - 1)];
  for (std::size_t b = 0; b < hb; ++b) {
    phist.add(kTwoPi * static_cast<double>(b) / hb).add(kTwoPi * static_cast<double>(b + 1) / hb);
    for (std::size_t i = 0; i < k0; ++i) phist.add(counts[i][b]);
    phist.end_row();
  }
  bundle.add("plotdata/phase_histogram.csv", phist.str());

  const CellGrid grid = cell_grid(sys0.domain(), 64);
  std::vector<Point> finals;
  for (const auto& m : result.members)
    if (m.error.empty() && !m.final_states.empty()) finals.push_back(m.final_states.front().particle.q);
  const DensityField mix = mixture_density(sys0, grid);
  const DensityField hist = finals.empty() ? DensityField{grid, std::vector<double>(grid.size(), 0.0), 0.0}
                                           : histogram_density(finals, grid);
  CsvWriter dens(sys0.dimension() == 2 ? std::vector<std::string>{"x", "y", "histogram", "mixture"}
                                       : std::vector<std::string>{"x", "histogram", "mixture"});
  for (std::size_t iy = 0; iy < grid.cells[1]; ++iy)
    for (std::size_t ix = 0; ix < grid.cells[0]; ++ix) {
      const Point p = grid.point(ix, iy);
      dens.add(p[0]);
      if (grid.dim == 2) dens.add(p[1]);
      dens.add(hist.values[grid.index(ix, iy)]).add(mix.values[grid.index(ix, iy)]);
      dens.end_row();
    }
  bundle.add("plotdata/density.csv", dens.str());

  // Drift, current velocity and quantum potential along axis 0 at the
  // initial phases (2-D systems: through the middle of axis 1).
  const auto& b0 = config.blocks.front();
  const PhaseVector theta0 = b0.theta ? *b0.theta : sys0.initial_phases();
  const Domain& d = sys0.domain();
  CsvWriter drift_csv({"x", "drift", "current_velocity", "quantum_potential", "density"});
  const std::size_t nscan = 201;
  for (std::size_t i = 0; i < nscan; ++i) {
    Point q{d.lo[0] + d.length(0) * (static_cast<double>(i) + 0.5) / nscan, 0.0};
    if (d.dim == 2) q[1] = 0.5 * (d.lo[1] + d.hi[1]);
    drift_csv.add(q[0])
        .add(drift(sys0, theta0, 0.0, q, config.integrator.limits)[0])
        .add(current_velocity(sys0, theta0, 0.0, q, config.integrator.limits)[0]);
    const double rho = std::norm(sys0.psi(theta0, 0.0, q));
    drift_csv.add(rho > 1e-300 ? quantum_potential(sys0, theta0, 0.0, q) : 0.0).add(rho);
    drift_csv.end_row();
  }
  bundle.add("plotdata/drift_scan.csv", drift_csv.str());
  return bundle;
}

// ---------------------------------------------------------------- others

namespace {

void add_density(Bundle& bundle, const std::string& path, const std::vector<std::string>& names,
                 const std::vector<const DensityField*>& fields) {
  const CellGrid& g = fields.front()->grid;
  std::vector<std::string> header{"x"};
  if (g.dim == 2) header.push_back("y");
  for (const auto& n : names) header.push_back(n);
  CsvWriter csv(header);
  for (std::size_t iy = 0; iy < g.cells[1]; ++iy)
    for (std::size_t ix = 0; ix < g.cells[0]; ++ix) {
      const Point p = g.point(ix, iy);
      csv.add(p[0]);
      if (g.dim == 2) csv.add(p[1]);
      for (const auto* f : fields) csv.add(f->values[g.index(ix, iy)]);
      csv.end_row();
    }
  bundle.add(path, csv.str());
}

}  // namespace

Bundle oracle_bundle(const OracleReport& report, const SimConfig& config) {
  Bundle bundle;
  Json summary = summary_head(config, "oracle");
  summary["statistics"] = to_json(report);
  bundle.add_json("summary.json", summary);
  CsvWriter cps({"t", "n", "ks", "p_value", "histogram_l1", "l1_paths_solver", "l1_solver_psi"});
  for (const auto& c : report.checkpoints) {
    cps.add(c.t).add(static_cast<std::uint64_t>(c.qe.n)).add(c.qe.ks).add(c.qe.p_value).add(c.qe.l1);
    cps.add(c.l1_paths_solver).add(c.l1_solver_psi);
    cps.end_row();
  }
  bundle.add("plotdata/checkpoints.csv", cps.str());
  add_density(bundle, "plotdata/density.csv", {"solver", "psi", "histogram"},
              {&report.solver_final, &report.psi_final, &report.histogram_final});
  return bundle;
}

Bundle ste_test_bundle(const SteTestReport& report, const SimConfig& config) {
  Bundle bundle;
  Json summary = summary_head(config, "ste-test");
  summary["statistics"] = to_json(report);
  bundle.add_json("summary.json", summary);
  CsvWriter hist({"bin_lo", "bin_hi", "observed", "expected"});
  const std::size_t n = report.histogram.size();
  for (std::size_t b = 0; b < n; ++b) {
    hist.add(kTwoPi * static_cast<double>(b) / n).add(kTwoPi * static_cast<double>(b + 1) / n);
    hist.add(report.histogram[b]).add(report.expected[b]);
    hist.end_row();
  }
  bundle.add("plotdata/phase_histogram.csv", hist.str());
  CsvWriter cases({"point", "q0", "q1", "t", "kind", "statistic", "dof", "p_value", "mean_trials"});
  for (const auto& c : report.cases) {
    cases.add(static_cast<std::uint64_t>(c.point)).add(c.q[0]).add(c.q[1]).add(c.t).add(c.kind);
    cases.add(c.chi.statistic).add(c.chi.dof).add(c.chi.p_value).add(c.mean_trials);
    cases.end_row();
  }
  bundle.add("plotdata/tests.csv", cases.str());
  return bundle;
}

Bundle dqe_bundle(const DqeReport& report, const SimConfig& config) {
  Bundle bundle;
  Json summary = summary_head(config, "dqe");
  summary["statistics"] = to_json(report);
  bundle.add_json("summary.json", summary);
  const std::size_t hb = 32;
  std::vector<std::string> ph{"bin_lo", "bin_hi"};
  for (std::size_t i = 1; i <= report.k; ++i) ph.push_back("count_theta" + std::to_string(i));
  CsvWriter phist(ph);
  std::vector<std::vector<std::uint64_t>> counts(report.k, std::vector<std::uint64_t>(hb, 0));
  for (const auto& theta : report.phases_after)
    for (std::size_t i = 0; i < report.k; ++i)
      ++counts[i][std::min(static_cast<std::size_t>(theta[i] / (kTwoPi / hb)), hb - 1)];
  for (std::size_t b = 0; b < hb; ++b) {
    phist.add(kTwoPi * static_cast<double>(b) / hb).add(kTwoPi * static_cast<double>(b + 1) / hb);
    for (std::size_t i = 0; i < report.k; ++i) phist.add(counts[i][b]);
    phist.end_row();
  }
  bundle.add("plotdata/phase_histogram.csv", phist.str());
  CsvWriter bins({"bin_lo", "bin_hi", "n", "d", "critical", "p_value"});
  for (const auto& b : report.bins) {
    bins.add(b.lo).add(b.hi).add(static_cast<std::uint64_t>(b.n)).add(b.d).add(b.critical).add(b.p_value);
    bins.end_row();
  }
  bundle.add("plotdata/conditional_ks.csv", bins.str());
  return bundle;
}

Bundle grw_bundle(const GrwReport& report, const SimConfig& config) {
  Bundle bundle;
  Json summary = summary_head(config, "grw");
  summary["statistics"] = to_json(report);
  bundle.add_json("summary.json", summary);
  CsvWriter ev({"event_index", "t", "z", "variance_before", "variance_after", "energy_before", "energy_after"});
  for (const auto& h : report.hits) {
    ev.add(static_cast<std::uint64_t>(h.index)).add(h.t).add(h.z);
    ev.add(h.variance_before).add(h.variance_after).add(h.energy_before).add(h.energy_after);
    ev.end_row();
  }
  bundle.add("events.csv", ev.str());
  CsvWriter f({"z", "hit_density"});
  for (std::size_t i = 0; i < report.z_grid.size(); ++i) {
    f.add(report.z_grid[i]).add(report.f_values[i]);
    f.end_row();
  }
  bundle.add("plotdata/hit_density.csv", f.str());
  CsvWriter w({"x", "density_initial", "density_final"});
  for (std::size_t i = 0; i < report.initial.size(); ++i) {
    w.add(report.initial.x(i)).add(std::norm(report.initial.amp[i]));
    w.add(i < report.final.size() ? std::norm(report.final.amp[i]) : 0.0);
    w.end_row();
  }
  bundle.add("plotdata/wavefunction.csv", w.str());
  return bundle;
}

Bundle macro_bundle(const MacroReport& report, const SimConfig& config) {
  Bundle bundle;
  Json summary = summary_head(config, "macro");
  summary["statistics"] = to_json(report);
  bundle.add_json("summary.json", summary);
  CsvWriter scan({"velocity", "r", "closed", "weighted"});
  for (const auto& s : report.scans)
    for (std::size_t i = 0; i < s.r.size(); ++i) {
      scan.add(s.velocity).add(s.r[i]).add(s.closed[i]).add(s.weighted[i]);
      scan.end_row();
    }
  bundle.add("plotdata/drift_scan.csv", scan.str());
  CsvWriter pts({"velocity", "g", "r_over_sigma", "closed", "weighted", "mc", "mc_se", "n", "tolerance"});
  for (const auto& p : report.points) {
    pts.add(p.velocity).add(p.g).add(p.r_over_sigma).add(p.closed).add(p.weighted);
    pts.add(p.mc.value).add(p.mc.std_error).add(static_cast<std::uint64_t>(p.mc.n)).add(p.tolerance);
    pts.end_row();
  }
  bundle.add("plotdata/drift_points.csv", pts.str());
  return bundle;
}

CommandResult run_command(const std::string& command, const SimConfig& config, std::size_t threads) {
  const std::vector<SystemPtr> systems = build_systems(config);
  CommandResult out;
  if (command == "run") {
    const EnsembleResult result = run_ensemble(ensemble_spec(config, systems, threads));
    out.bundle = run_bundle(result, config);
    out.pass = result.failed.empty();
    out.line = std::to_string(result.member_count) + " members, " + std::to_string(result.event_count()) +
               " events, " + std::to_string(result.failed.size()) + " failed";
    return out;
  }
  if (command == "oracle") {
    const OracleReport r = run_oracle(config, systems.front(), threads);
    out.bundle = oracle_bundle(r, config);
    out.pass = r.pass;
  } else if (command == "ste-test") {
    const SteTestReport r = run_ste_test(config, systems.front(), threads);
    out.bundle = ste_test_bundle(r, config);
    out.pass = r.pass;
  } else if (command == "dqe") {
    const DqeReport r = run_dqe(config, systems.front(), threads);
    out.bundle = dqe_bundle(r, config);
    out.pass = r.pass;
  } else if (command == "grw") {
    const GrwReport r = run_grw(config);
    out.bundle = grw_bundle(r, config);
    out.pass = r.pass;
  } else if (command == "macro") {
    const MacroReport r = run_macro(config, threads);
    out.bundle = macro_bundle(r, config);
    out.pass = r.pass;
  } else {
    throw std::invalid_argument("unknown command " + command);
  }
  out.line = out.pass ? "PASS" : "FAIL";
  return out;
}

}  // namespace dualwave
