#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "dualwave/config.hpp"
#include "dualwave/ensemble.hpp"
#include "dualwave/experiments.hpp"

namespace dualwave {

using Json = nlohmann::ordered_json;

const char* version();

std::string sha256_hex(std::string_view data);

/// 17 significant digits; re-parsing gives back the same double.
std::string format_number(double v);

/// Accumulates comma-separated rows.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  CsvWriter& add(double v);
  CsvWriter& add(std::uint64_t v);
  CsvWriter& add(const std::string& v);
  /// An empty cell.
  CsvWriter& skip();
  void end_row();
  const std::string& str() const { return text_; }

 private:
  void sep();
  std::string text_;
  bool fresh_ = true;
};

struct ManifestEntry {
  std::string path;
  std::uint64_t bytes = 0;
  std::string sha256;
};

/// Output files kept in memory until written, keyed by relative path.
class Bundle {
 public:
  void add(const std::string& path, std::string content);
  void add_json(const std::string& path, const Json& value);
  const std::map<std::string, std::string>& files() const { return files_; }
  /// Entries sorted by path.
  std::vector<ManifestEntry> manifest() const;
  /// Writes every file plus manifest.json under `dir`. Throws
  /// std::runtime_error naming the path on I/O failure.
  std::vector<ManifestEntry> write(const std::filesystem::path& dir) const;

 private:
  std::map<std::string, std::string> files_;
};

Json to_json(const stats::Estimate& e);
Json to_json(const stats::ChiSquareResult& r);
Json to_json(const FitRecord& f);
Json to_json(const UniformityReport& r);
Json to_json(const DqeReport& r);
Json to_json(const IrreversibilityReport& r);
Json to_json(const MscReport& r);
Json to_json(const OracleReport& r);
Json to_json(const SteTestReport& r);
Json to_json(const GrwReport& r);
Json to_json(const MacroReport& r);

/// Common head of every summary: tool, version, subcommand, seed,
/// config hash and the canonical config echo.
Json summary_head(const SimConfig& config, const std::string& subcommand);

/// Statistics of an ensemble run: failures, events, conservation, fits,
/// irreversibility and final phase uniformity.
Json run_statistics(const EnsembleResult& result, const SimConfig& config);

Bundle run_bundle(const EnsembleResult& result, const SimConfig& config);
Bundle oracle_bundle(const OracleReport& report, const SimConfig& config);
Bundle ste_test_bundle(const SteTestReport& report, const SimConfig& config);
Bundle dqe_bundle(const DqeReport& report, const SimConfig& config);
Bundle grw_bundle(const GrwReport& report, const SimConfig& config);
Bundle macro_bundle(const MacroReport& report, const SimConfig& config);

struct CommandResult {
  Bundle bundle;
  /// Statistical verdict; for `run`, whether every member finished.
  bool pass = true;
  /// One-line human summary.
  std::string line;
};

/// Runs `run`, `oracle`, `ste-test`, `dqe`, `grw` or `macro` and packages
/// its bundle. Throws std::invalid_argument for any other name.
CommandResult run_command(const std::string& command, const SimConfig& config, std::size_t threads);

}  // namespace dualwave
