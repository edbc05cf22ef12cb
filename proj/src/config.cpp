#include "dualwave/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "dualwave/emit.hpp"
#include "dualwave/macro.hpp"

namespace dualwave {

using json = nlohmann::ordered_json;

const char* to_string(UnitSystem units) {
  return units == UnitSystem::physical ? "physical" : "natural";
}

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::string s = "invalid configuration";
  for (const auto& e : errors) s += "\n  " + e;
  return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errors)
    : std::runtime_error(join_errors(errors)), errors_(std::move(errors)) {}

namespace {

const json& empty_object() {
  static const json e = json::object();
  return e;
}

/// Reads typed fields from one JSON object, remembering which keys were
/// consumed so that leftovers can be reported as unknown.
class Reader {
 public:
  Reader(const json* node, std::string path, std::vector<std::string>& errors)
      : node_(node ? *node : empty_object()), path_(std::move(path)), errors_(errors) {
    if (!node_.is_object()) {
      errors_.push_back((path_.empty() ? std::string("document") : path_) + ": expected an object");
      valid_ = false;
    }
  }

  std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
  void error(const std::string& key, const std::string& msg) { errors_.push_back(at(key) + ": " + msg); }

  const json* find(const std::string& key) {
    seen_.insert(key);
    if (!valid_) return nullptr;
    auto it = node_.find(key);
    return it == node_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) {
      error(key, "expected a number");
      return fallback;
    }
    return v->get<double>();
  }

  std::uint64_t unsigned_integer(const std::string& key, std::uint64_t fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (v->is_number_unsigned()) return v->get<std::uint64_t>();
    error(key, "expected a non-negative integer");
    return fallback;
  }

  int integer(const std::string& key, int fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) {
      error(key, "expected an integer");
      return fallback;
    }
    return v->get<int>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      error(key, "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) {
      error(key, "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  std::vector<double> numbers(const std::string& key, std::vector<double> fallback) {
    const json* v = find(key);
    if (!v) return fallback;
    if (!v->is_array()) {
      error(key, "expected an array of numbers");
      return fallback;
    }
    std::vector<double> out;
    for (const auto& x : *v) {
      if (!x.is_number()) {
        error(key, "expected an array of numbers");
        return fallback;
      }
      out.push_back(x.get<double>());
    }
    return out;
  }

  void finish() {
    if (!valid_) return;
    for (auto it = node_.begin(); it != node_.end(); ++it)
      if (!seen_.count(it.key())) errors_.push_back(at(it.key()) + ": unknown key");
  }

 private:
  const json& node_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
  bool valid_ = true;
};

template <typename Enum, typename Parse>
Enum enum_field(Reader& r, const std::string& key, Enum fallback, Parse parse) {
  const std::string name = r.text(key, "");
  if (name.empty()) return fallback;
  try {
    return parse(name);
  } catch (const std::exception& e) {
    r.error(key, e.what());
    return fallback;
  }
}

void check(Reader& r, const std::string& key, bool ok, const std::string& msg) {
  if (!ok) r.error(key, msg);
}

// ---------------------------------------------------------------- model

bool parse_complex(const json& v, Complex& out) {
  if (v.is_number()) {
    out = Complex(v.get<double>(), 0.0);
    return true;
  }
  if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
    out = Complex(v[0].get<double>(), v[1].get<double>());
    return true;
  }
  return false;
}

LevelMember parse_member(const json& node, const std::string& path, ModelKind kind,
                         std::vector<std::string>& errors) {
  LevelMember m;
  Reader r(&node, path, errors);
  const json* n = r.find("n");
  const json* p = r.find("p");
  const json* c = r.find("c");
  if (kind == ModelKind::two_particle_box) {
    if (!n || !n->is_array() || n->size() != 2 || !(*n)[0].is_number_integer() || !(*n)[1].is_number_integer())
      r.error("n", "expected [n1, n2]");
    else
      m.mode.n = {(*n)[0].get<int>(), (*n)[1].get<int>()};
  } else if (p) {
    if (!p->is_number()) r.error("p", "expected a number");
    else m.mode.momentum = p->get<double>();
    if (n) r.error("n", "give either n or p");
  } else if (!n || !n->is_number_integer()) {
    r.error("n", "expected an integer quantum number");
  } else {
    m.mode.n = {n->get<int>(), 0};
  }
  if (!c) r.error("c", "missing coefficient");
  else if (!parse_complex(*c, m.coeff)) r.error("c", "expected a number or [re, im]");
  r.finish();
  return m;
}

ModelSpec parse_model(const json* node, const std::string& path, UnitSystem units,
                      std::vector<std::string>& errors) {
  ModelSpec spec;
  Reader r(node, path, errors);
  spec.kind = enum_field(r, "kind", ModelKind::box, model_kind_from_string);
  spec.length = r.number("length", spec.length);
  spec.omega = r.number("omega", spec.omega);
  spec.hbar = r.number("hbar", units == UnitSystem::physical ? constants::hbar : 1.0);
  const double default_mass = units == UnitSystem::physical ? constants::proton_mass : 1.0;
  spec.mass = {default_mass, default_mass};
  if (const json* m = r.find("mass")) {
    if (m->is_number()) {
      spec.mass = {m->get<double>(), m->get<double>()};
    } else if (m->is_array() && m->size() == 2 && (*m)[0].is_number() && (*m)[1].is_number()) {
      spec.mass = {(*m)[0].get<double>(), (*m)[1].get<double>()};
    } else {
      r.error("mass", "expected a number or [m1, m2]");
    }
  }
  spec.grid_points = r.unsigned_integer("grid_points", 0);
  check(r, "length", spec.length > 0.0, "must be positive");
  check(r, "omega", spec.omega > 0.0, "must be positive");
  check(r, "hbar", spec.hbar > 0.0, "must be positive");
  check(r, "mass", spec.mass[0] > 0.0 && spec.mass[1] > 0.0, "must be positive");
  check(r, "grid_points", spec.grid_points == 0 || spec.grid_points >= 16, "must be 0 (default) or >= 16");

  Reader pk(r.find("packet"), r.at("packet"), errors);
  spec.packet.sigma = pk.number("sigma", spec.packet.sigma);
  spec.packet.velocity = pk.number("velocity", spec.packet.velocity);
  spec.packet.levels = pk.integer("levels", spec.packet.levels);
  spec.packet.coverage = pk.number("coverage", spec.packet.coverage);
  check(pk, "sigma", spec.packet.sigma > 0.0, "must be positive");
  check(pk, "levels", spec.packet.levels >= 1, "must be >= 1");
  check(pk, "coverage", std::erf(spec.packet.coverage / std::sqrt(2.0)) >= 0.9999,
        "must cover 99.99% of the momentum distribution (>= 3.9)");
  pk.finish();

  const json* levels = r.find("levels");
  if (spec.kind == ModelKind::free_packet) {
    if (levels) r.error("levels", "free_packet levels are generated from the packet section");
  } else if (!levels || !levels->is_array() || levels->empty()) {
    r.error("levels", "expected a non-empty array of levels");
  } else {
    for (std::size_t i = 0; i < levels->size(); ++i) {
      const json& lv = (*levels)[i];
      const std::string lp = r.at("levels") + "[" + std::to_string(i) + "]";
      LevelSelection sel;
      if (lv.is_array()) {
        if (lv.empty()) errors.push_back(lp + ": empty level");
        for (std::size_t j = 0; j < lv.size(); ++j)
          sel.members.push_back(parse_member(lv[j], lp + "[" + std::to_string(j) + "]", spec.kind, errors));
      } else {
        sel.members.push_back(parse_member(lv, lp, spec.kind, errors));
      }
      spec.levels.push_back(std::move(sel));
    }
  }
  r.finish();
  return spec;
}

json emit_model(const ModelSpec& spec) {
  json j;
  j["kind"] = to_string(spec.kind);
  j["length"] = spec.length;
  j["omega"] = spec.omega;
  if (spec.mass[0] == spec.mass[1]) j["mass"] = spec.mass[0];
  else j["mass"] = {spec.mass[0], spec.mass[1]};
  j["hbar"] = spec.hbar;
  j["grid_points"] = spec.grid_points;
  j["packet"] = {{"sigma", spec.packet.sigma},
                 {"velocity", spec.packet.velocity},
                 {"levels", spec.packet.levels},
                 {"coverage", spec.packet.coverage}};
  if (spec.kind != ModelKind::free_packet) {
    json levels = json::array();
    for (const auto& sel : spec.levels) {
      json members = json::array();
      for (const auto& m : sel.members) {
        json mj;
        if (spec.kind == ModelKind::two_particle_box) mj["n"] = {m.mode.n[0], m.mode.n[1]};
        else if (m.mode.momentum != 0.0) mj["p"] = m.mode.momentum;
        else mj["n"] = m.mode.n[0];
        mj["c"] = {m.coeff.real(), m.coeff.imag()};
        members.push_back(mj);
      }
      levels.push_back(members.size() == 1 ? members[0] : members);
    }
    j["levels"] = levels;
  }
  return j;
}

// ---------------------------------------------------------------- blocks

RateModel parse_rate(const json* node, const std::string& path, std::vector<std::string>& errors) {
  RateModel rate;
  Reader r(node, path, errors);
  rate.mode = enum_field(r, "mode", rate.mode, rate_mode_from_string);
  rate.lambda = r.number("lambda", rate.lambda);
  rate.n_particles = r.integer("particles", rate.n_particles);
  rate.kappa = r.number("kappa", rate.kappa);
  check(r, "lambda", rate.lambda >= 0.0, "must be >= 0");
  check(r, "particles", rate.n_particles >= 1, "must be >= 1");
  check(r, "kappa", rate.kappa >= 0.0, "must be >= 0");
  r.finish();
  return rate;
}

json emit_rate(const RateModel& rate) {
  return {{"mode", to_string(rate.mode)},
          {"lambda", rate.lambda},
          {"particles", rate.n_particles},
          {"kappa", rate.kappa}};
}

void parse_block_fields(Reader& r, BlockConfig& b, UnitSystem units, std::vector<std::string>& errors) {
  b.model = parse_model(r.find("model"), r.at("model"), units, errors);
  b.rate = parse_rate(r.find("rate"), r.at("rate"), errors);
  b.init = enum_field(r, "init", b.init, init_policy_from_string);
  if (r.find("theta")) b.theta = PhaseVector(r.numbers("theta", {}));
  if (const json* p = r.find("position")) {
    const auto v = r.numbers("position", {});
    if (p->is_array() && (v.empty() || v.size() > 2)) r.error("position", "expected 1 or 2 coordinates");
    if (!v.empty() && v.size() <= 2) b.position = Point{v[0], v.size() > 1 ? v[1] : 0.0};
  }
  if (b.init == InitPolicy::point && !b.position) r.error("position", "required when init is point");
}

void emit_block_fields(json& j, const BlockConfig& b) {
  j["model"] = emit_model(b.model);
  j["rate"] = emit_rate(b.rate);
  j["init"] = to_string(b.init);
  if (b.theta) j["theta"] = b.theta->angles;
  if (b.position) {
    const int dim = b.model.kind == ModelKind::two_particle_box ? 2 : 1;
    j["position"] = dim == 2 ? json{(*b.position)[0], (*b.position)[1]} : json{(*b.position)[0]};
  }
}

// ---------------------------------------------------------------- sections

IntegratorConfig parse_integrator(const json* node, std::vector<std::string>& errors) {
  IntegratorConfig c;
  Reader r(node, "integrator", errors);
  c.dt = r.number("dt", c.dt);
  c.mode = enum_field(r, "mode", c.mode, integrator_mode_from_string);
  c.boundary = enum_field(r, "boundary", c.boundary, boundary_policy_from_string);
  c.limits.b_max = r.number("b_max", c.limits.b_max);
  c.limits.eps_node = r.number("eps_node", c.limits.eps_node);
  check(r, "dt", c.dt > 0.0, "must be positive");
  check(r, "b_max", c.limits.b_max > 0.0, "must be positive");
  check(r, "eps_node", c.limits.eps_node >= 0.0 && c.limits.eps_node < 1.0, "must be in [0, 1)");
  r.finish();
  return c;
}

EnsembleConfig parse_ensemble(const json* node, std::vector<std::string>& errors) {
  EnsembleConfig c;
  Reader r(node, "ensemble", errors);
  c.members = r.unsigned_integer("members", c.members);
  c.horizon = r.number("horizon", c.horizon);
  c.record_stride = r.unsigned_integer("record_stride", c.record_stride);
  c.keep_trajectories = r.boolean("keep_trajectories", c.keep_trajectories);
  check(r, "members", c.members >= 1, "must be >= 1");
  check(r, "horizon", c.horizon >= 0.0, "must be >= 0");
  check(r, "record_stride", c.record_stride >= 1, "must be >= 1");
  Reader f(r.find("fit"), r.at("fit"), errors);
  c.fit.mean = f.boolean("mean", c.fit.mean);
  c.fit.variance = f.boolean("variance", c.fit.variance);
  c.fit.window_steps = f.unsigned_integer("window_steps", c.fit.window_steps);
  c.fit.variance_samples = f.unsigned_integer("variance_samples", c.fit.variance_samples);
  c.fit.axis = f.integer("axis", c.fit.axis);
  check(f, "window_steps", c.fit.window_steps >= 1, "must be >= 1");
  check(f, "variance_samples", c.fit.variance_samples >= 2, "must be >= 2");
  check(f, "axis", c.fit.axis == 0 || c.fit.axis == 1, "must be 0 or 1");
  f.finish();
  r.finish();
  return c;
}

OracleConfig parse_oracle(const json* node, std::vector<std::string>& errors) {
  OracleConfig c;
  Reader r(node, "oracle", errors);
  c.init = r.text("init", c.init);
  c.paths = r.unsigned_integer("paths", c.paths);
  c.horizon = r.number("horizon", c.horizon);
  c.checkpoints = r.unsigned_integer("checkpoints", c.checkpoints);
  c.cells = r.unsigned_integer("cells", c.cells);
  c.solver_dt = r.number("solver_dt", c.solver_dt);
  c.l1_bins = r.unsigned_integer("l1_bins", c.l1_bins);
  c.l1_tolerance = r.number("l1_tolerance", c.l1_tolerance);
  check(r, "init", c.init == "equilibrium" || c.init == "uniform", "must be equilibrium or uniform");
  check(r, "paths", c.paths >= 2, "must be >= 2");
  check(r, "horizon", c.horizon > 0.0, "must be positive");
  check(r, "checkpoints", c.checkpoints >= 1, "must be >= 1");
  check(r, "cells", c.cells >= 16, "must be >= 16");
  check(r, "solver_dt", c.solver_dt > 0.0, "must be positive");
  check(r, "l1_bins", c.l1_bins >= 2 && c.l1_bins <= c.cells && c.cells % std::max<std::size_t>(c.l1_bins, 1) == 0,
        "must be >= 2 and divide cells");
  check(r, "l1_tolerance", c.l1_tolerance > 0.0, "must be positive");
  r.finish();
  return c;
}

SteTestConfig parse_ste_test(const json* node, std::vector<std::string>& errors) {
  SteTestConfig c;
  Reader r(node, "ste_test", errors);
  c.draws = r.unsigned_integer("draws", c.draws);
  c.points = r.unsigned_integer("points", c.points);
  c.bins = r.unsigned_integer("bins", c.bins);
  c.t_max = r.number("t_max", c.t_max);
  c.allowed_failures = r.unsigned_integer("allowed_failures", c.allowed_failures);
  check(r, "draws", c.draws >= 100, "must be >= 100");
  check(r, "points", c.points >= 1, "must be >= 1");
  check(r, "bins", c.bins >= 2, "must be >= 2");
  check(r, "t_max", c.t_max >= 0.0, "must be >= 0");
  r.finish();
  return c;
}

DqeConfig parse_dqe(const json* node, std::vector<std::string>& errors) {
  DqeConfig c;
  Reader r(node, "dqe", errors);
  c.members = r.unsigned_integer("members", c.members);
  c.init = enum_field(r, "init", c.init, init_policy_from_string);
  c.t = r.number("t", c.t);
  c.phase_bins = r.unsigned_integer("phase_bins", c.phase_bins);
  c.uniformity_bins = r.unsigned_integer("uniformity_bins", c.uniformity_bins);
  c.ks_alpha = r.number("ks_alpha", c.ks_alpha);
  check(r, "members", c.members >= 1, "must be >= 1");
  check(r, "init", c.init == InitPolicy::dqe || c.init == InitPolicy::pure, "must be dqe or pure");
  check(r, "phase_bins", c.phase_bins >= 1, "must be >= 1");
  check(r, "uniformity_bins", c.uniformity_bins >= 2, "must be >= 2");
  check(r, "ks_alpha", c.ks_alpha > 0.0 && c.ks_alpha < 1.0, "must be in (0, 1)");
  r.finish();
  return c;
}

GrwConfig parse_grw(const json* node, std::vector<std::string>& errors) {
  GrwConfig c;
  Reader r(node, "grw", errors);
  c.alpha = r.number("alpha", c.alpha);
  c.rate = r.number("rate", c.rate);
  c.hits = r.unsigned_integer("hits", c.hits);
  c.lo = r.number("lo", c.lo);
  c.hi = r.number("hi", c.hi);
  c.points = r.unsigned_integer("points", c.points);
  c.center = r.number("center", c.center);
  c.width = r.number("width", c.width);
  c.wavenumber = r.number("wavenumber", c.wavenumber);
  c.draws = r.unsigned_integer("draws", c.draws);
  check(r, "alpha", c.alpha > 0.0, "must be positive");
  check(r, "rate", c.rate > 0.0, "must be positive");
  check(r, "hi", c.hi > c.lo, "must exceed lo");
  check(r, "points", c.points >= 16, "must be >= 16");
  check(r, "width", c.width > 0.0, "must be positive");
  check(r, "draws", c.draws >= 2, "must be >= 2");
  r.finish();
  return c;
}

MacroConfig parse_macro(const json* node, std::vector<std::string>& errors) {
  MacroConfig c;
  Reader r(node, "macro", errors);
  c.sigma = r.number("sigma", c.sigma);
  c.velocities = r.numbers("velocities", c.velocities);
  c.particle_mass = r.number("particle_mass", c.particle_mass);
  c.particles = r.integer("particles", c.particles);
  c.lambda = r.number("lambda", c.lambda);
  c.levels = r.integer("levels", c.levels);
  c.coverage = r.number("coverage", c.coverage);
  c.samples = r.unsigned_integer("samples", c.samples);
  c.points = r.numbers("points", c.points);
  c.scan_points = r.unsigned_integer("scan_points", c.scan_points);
  c.scan_extent = r.number("scan_extent", c.scan_extent);
  c.step_members = r.unsigned_integer("step_members", c.step_members);
  c.step_horizon = r.number("step_horizon", c.step_horizon);
  c.step_velocity = r.number("step_velocity", c.step_velocity);
  c.length_exponent = r.number("length_exponent", c.length_exponent);
  check(r, "sigma", c.sigma > 0.0, "must be positive");
  check(r, "velocities", !c.velocities.empty(), "must not be empty");
  check(r, "particle_mass", c.particle_mass > 0.0, "must be positive");
  check(r, "particles", c.particles >= 1, "must be >= 1");
  check(r, "lambda", c.lambda >= 0.0, "must be >= 0");
  check(r, "levels", c.levels >= 1, "must be >= 1");
  check(r, "coverage", std::erf(c.coverage / std::sqrt(2.0)) >= 0.9999,
        "must cover 99.99% of the momentum distribution (>= 3.9)");
  check(r, "samples", c.samples >= 2, "must be >= 2");
  check(r, "scan_points", c.scan_points >= 2, "must be >= 2");
  check(r, "scan_extent", c.scan_extent > 0.0, "must be positive");
  check(r, "step_horizon", c.step_horizon > 0.0, "must be positive");
  check(r, "length_exponent", c.length_exponent > 0.0, "must be positive");
  r.finish();
  return c;
}

std::size_t line_of(const std::string& text, std::size_t byte, std::size_t& column) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  column = col;
  return line;
}

void check_systems(const SimConfig& cfg, std::vector<std::string>& errors) {
  for (std::size_t b = 0; b < cfg.blocks.size(); ++b) {
    const std::string path = cfg.blocks.size() == 1 ? "model" : "blocks[" + std::to_string(b) + "].model";
    const BlockConfig& bc = cfg.blocks[b];
    try {
      const SystemPtr sys = build_model(bc.model);
      if (bc.theta && bc.theta->size() != sys->phase_count())
        errors.push_back(path + ": theta has " + std::to_string(bc.theta->size()) + " entries but the system has K = " +
                         std::to_string(sys->phase_count()));
      if (bc.position) sys->check_point(*bc.position);
    } catch (const std::exception& e) {
      errors.push_back(path + ": " + e.what());
    }
  }
  if (cfg.blocks.size() > 1 && cfg.ensemble.fit.axis != 0)
    errors.push_back("ensemble.fit.axis: multi-block fits use axis 0");
}

}  // namespace

SimConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text, nullptr, true, true);
  } catch (const json::parse_error& e) {
    std::size_t col = 0;
    const std::size_t line = line_of(text, e.byte > 0 ? e.byte - 1 : 0, col);
    throw ConfigError({"syntax error at line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                       e.what()});
  }
  std::vector<std::string> errors;
  SimConfig cfg;
  Reader r(&doc, "", errors);
  if (!r.find("seed")) r.error("seed", "required (no entropy default)");
  cfg.seed = r.unsigned_integer("seed", 0);
  cfg.units = enum_field(r, "units", cfg.units, [](const std::string& s) {
    if (s == "natural") return UnitSystem::natural;
    if (s == "physical") return UnitSystem::physical;
    throw ModelError("expected natural or physical");
  });
  cfg.output = r.text("output", "");
  cfg.significance = r.number("significance", cfg.significance);
  check(r, "significance", cfg.significance > 0.0 && cfg.significance < 1.0, "must be in (0, 1)");

  const json* model = r.find("model");
  const json* blocks = r.find("blocks");
  if (model && blocks) {
    r.error("blocks", "give either model or blocks, not both");
  } else if (blocks) {
    if (!blocks->is_array() || blocks->empty()) {
      r.error("blocks", "expected a non-empty array");
    } else {
      for (std::size_t i = 0; i < blocks->size(); ++i) {
        Reader br(&(*blocks)[i], "blocks[" + std::to_string(i) + "]", errors);
        BlockConfig b;
        parse_block_fields(br, b, cfg.units, errors);
        br.finish();
        cfg.blocks.push_back(std::move(b));
      }
    }
  } else if (model) {
    // Single-block shorthand: model, rate, init, theta and position at top level.
    BlockConfig b;
    parse_block_fields(r, b, cfg.units, errors);
    cfg.blocks.push_back(std::move(b));
  } else {
    r.error("model", "required (or blocks)");
  }
  if (blocks) {
    for (const char* key : {"rate", "init", "theta", "position"})
      if (r.find(key)) r.error(key, "belongs inside each block when blocks is used");
  }

  cfg.integrator = parse_integrator(r.find("integrator"), errors);
  cfg.ensemble = parse_ensemble(r.find("ensemble"), errors);
  cfg.oracle = parse_oracle(r.find("oracle"), errors);
  cfg.ste_test = parse_ste_test(r.find("ste_test"), errors);
  cfg.dqe = parse_dqe(r.find("dqe"), errors);
  cfg.grw = parse_grw(r.find("grw"), errors);
  cfg.macro = parse_macro(r.find("macro"), errors);
  r.finish();
  if (errors.empty()) check_systems(cfg, errors);
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return cfg;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path + ": cannot open configuration file"});
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string emit_config(const SimConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["units"] = to_string(c.units);
  if (!c.output.empty()) j["output"] = c.output;
  j["significance"] = c.significance;
  if (c.blocks.size() == 1) {
    emit_block_fields(j, c.blocks.front());
  } else {
    json blocks = json::array();
    for (const auto& b : c.blocks) {
      json bj;
      emit_block_fields(bj, b);
      blocks.push_back(bj);
    }
    j["blocks"] = blocks;
  }
  j["integrator"] = {{"dt", c.integrator.dt},
                     {"mode", to_string(c.integrator.mode)},
                     {"boundary", to_string(c.integrator.boundary)},
                     {"b_max", c.integrator.limits.b_max},
                     {"eps_node", c.integrator.limits.eps_node}};
  const auto& e = c.ensemble;
  j["ensemble"] = {{"members", e.members},
                   {"horizon", e.horizon},
                   {"record_stride", e.record_stride},
                   {"keep_trajectories", e.keep_trajectories},
                   {"fit",
                    {{"mean", e.fit.mean},
                     {"variance", e.fit.variance},
                     {"window_steps", e.fit.window_steps},
                     {"variance_samples", e.fit.variance_samples},
                     {"axis", e.fit.axis}}}};
  const auto& o = c.oracle;
  j["oracle"] = {{"init", o.init},          {"paths", o.paths},         {"horizon", o.horizon},
                 {"checkpoints", o.checkpoints}, {"cells", o.cells},     {"solver_dt", o.solver_dt},
                 {"l1_bins", o.l1_bins},    {"l1_tolerance", o.l1_tolerance}};
  const auto& s = c.ste_test;
  j["ste_test"] = {{"draws", s.draws},
                   {"points", s.points},
                   {"bins", s.bins},
                   {"t_max", s.t_max},
                   {"allowed_failures", s.allowed_failures}};
  const auto& d = c.dqe;
  j["dqe"] = {{"members", d.members},       {"init", to_string(d.init)},
              {"t", d.t},                   {"phase_bins", d.phase_bins},
              {"uniformity_bins", d.uniformity_bins}, {"ks_alpha", d.ks_alpha}};
  const auto& g = c.grw;
  j["grw"] = {{"alpha", g.alpha},   {"rate", g.rate},     {"hits", g.hits},
              {"lo", g.lo},         {"hi", g.hi},         {"points", g.points},
              {"center", g.center}, {"width", g.width},   {"wavenumber", g.wavenumber},
              {"draws", g.draws}};
  const auto& m = c.macro;
  j["macro"] = {{"sigma", m.sigma},
                {"velocities", m.velocities},
                {"particle_mass", m.particle_mass},
                {"particles", m.particles},
                {"lambda", m.lambda},
                {"levels", m.levels},
                {"coverage", m.coverage},
                {"samples", m.samples},
                {"points", m.points},
                {"scan_points", m.scan_points},
                {"scan_extent", m.scan_extent},
                {"step_members", m.step_members},
                {"step_horizon", m.step_horizon},
                {"step_velocity", m.step_velocity},
                {"length_exponent", m.length_exponent}};
  return j.dump(2) + "\n";
}

std::string config_hash(const SimConfig& config) { return sha256_hex(emit_config(config)); }

std::vector<SystemPtr> build_systems(const SimConfig& config) {
  std::vector<SystemPtr> out;
  for (const auto& b : config.blocks) out.push_back(build_model(b.model));
  return out;
}

EnsembleSpec ensemble_spec(const SimConfig& config, const std::vector<SystemPtr>& systems, std::size_t threads) {
  if (systems.size() != config.blocks.size()) throw ModelError("one system per block expected");
  EnsembleSpec spec;
  for (std::size_t b = 0; b < systems.size(); ++b) {
    const BlockConfig& bc = config.blocks[b];
    BlockSpec bs;
    bs.system = systems[b];
    bs.rate = bc.rate;
    bs.init = bc.init;
    bs.theta = bc.theta;
    bs.position = bc.position;
    spec.blocks.push_back(std::move(bs));
  }
  spec.members = config.ensemble.members;
  spec.horizon = config.ensemble.horizon;
  spec.integrator = config.integrator;
  spec.record_stride = config.ensemble.record_stride;
  spec.keep_trajectories = config.ensemble.keep_trajectories;
  spec.fit = config.ensemble.fit;
  spec.seed = config.seed;
  spec.threads = threads;
  spec.config_hash = config_hash(config);
  return spec;
}

}  // namespace dualwave
