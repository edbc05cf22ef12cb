#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "dualwave/config.hpp"
#include "dualwave/emit.hpp"
#include "dualwave/experiments.hpp"

namespace {

enum Exit : int { ok = 0, validation = 1, runtime = 2, statistical = 3 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
};

void add_common(CLI::App* sub, Options& opt, bool needs_out) {
  sub->add_option("--config", opt.config, "Configuration file (JSON, comments allowed)")->required();
  auto* out = sub->add_option("--out", opt.out, "Output directory");
  if (needs_out) out->required();
  sub->add_option("--seed", opt.seed, "Override the master seed");
  sub->add_option("--threads", opt.threads, "Worker threads")->check(CLI::PositiveNumber);
}

int dispatch(const std::string& cmd, const Options& opt) {
  using namespace dualwave;
  SimConfig config = load_config(opt.config);
  if (opt.seed) config.seed = *opt.seed;
  if (cmd == "validate") {
    std::cout << emit_config(config);
    if (!opt.out.empty()) {
      Bundle b;
      b.add("config.json", emit_config(config));
      b.write(opt.out);
    }
    return Exit::ok;
  }
  const CommandResult r = run_command(cmd, config, opt.threads);
  r.bundle.write(opt.out);
  std::cout << cmd << ": " << r.line << "  (" << opt.out << ")\n";
  if (r.pass) return Exit::ok;
  return cmd == "run" ? Exit::runtime : Exit::statistical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stochastic pilot-wave simulator with spontaneous phase transitions"};
  app.set_version_flag("--version", dualwave::version());
  app.require_subcommand(1);
  Options opt;
  const std::pair<const char*, const char*> commands[] = {
      {"run", "Ensemble experiment"},
      {"oracle", "Path ensemble against the Fokker-Planck solution"},
      {"ste-test", "Phase sampler against quadrature"},
      {"dqe", "Decoherent equilibrium stationarity suite"},
      {"grw", "Localization hit experiment"},
      {"macro", "Free-packet drift scan, step law and physical arithmetic"},
      {"validate", "Check a configuration and print its canonical form"},
  };
  for (const auto& [name, help] : commands) add_common(app.add_subcommand(name, help), opt, std::string(name) != "validate");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? Exit::ok : Exit::validation;
  }
  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, opt);
  } catch (const dualwave::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return Exit::validation;
  } catch (const dualwave::ModelError& e) {
    std::cerr << "invalid model: " << e.what() << "\n";
    return Exit::validation;
  } catch (const dualwave::DomainError& e) {
    std::cerr << "invalid input: " << e.what() << "\n";
    return Exit::validation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return Exit::runtime;
  }
}
