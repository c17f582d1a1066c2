#pragma once

#include "biot/errors.hpp"
#include "biot/problems.hpp"
#include "biot/timeslab.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace biot {

enum class Study { Convergence, Benchmark, Single };
enum class CaseKind { Manufactured, Benchmark };

std::string to_string(Study study);
std::string to_string(CaseKind kind);

/// Configuration error; `key` names the offending entry.
class ConfigError : public Error {
public:
  enum class Kind { UnknownKey, InvalidValue, Syntax };
  ConfigError(Kind kind, std::string key, const std::string& message)
      : Error(message), kind_(kind), key_(std::move(key)) {}
  Kind kind() const { return kind_; }
  const std::string& key() const { return key_; }

private:
  Kind kind_;
  std::string key_;
};

using ConfigEntry = std::pair<std::string, std::string>;

/// Reads `key = value` lines; blank lines and lines starting with '#' are skipped.
std::vector<ConfigEntry> read_config_entries(std::istream& in);
std::vector<ConfigEntry> read_config_file(const std::filesystem::path& path);

struct RunConfig {
  Study study = Study::Convergence;
  /// Case of a single run; convergence and benchmark studies imply their case.
  CaseKind case_kind = CaseKind::Manufactured;
  TimeScheme scheme = TimeScheme::dG;
  int k = 2;
  int r = 4;
  std::vector<int> levels{0, 1, 2};
  SolverOptions solver;
  std::filesystem::path out = "out";

  ManufacturedCase manufactured = ManufacturedCase::defaults(4);
  BenchmarkCase benchmark = BenchmarkCase::defaults(4);
  /// Explicit slab length of benchmark runs; 0 selects tau0 / 2^level.
  double tau = 0.0;
  /// Extremum window; negative values select [T - 1, T].
  double window_start = -1.0;
  double window_end = -1.0;
  /// Start of the period estimate; negative selects T / 4.
  double period_start = -1.0;

  bool dump_mesh = false;
  bool dump_matrices = false;
  /// Write a checkpoint every n slabs; 0 disables.
  int checkpoint_every = 0;

  CaseKind effective_case() const;
  double final_time() const;
  std::pair<double, double> window() const;
  double period_from() const;
  /// Throws ConfigError(InvalidValue) on inconsistent settings.
  void validate() const;
};

/// Defaults for a study: the manufactured case for convergence runs, the benchmark for
/// benchmark runs (r = 3, levels 0 and 1).
RunConfig default_config(Study study);

/// Applies entries in order onto the defaults of the study. A `study` entry, if present,
/// overrides `study`.
RunConfig make_config(const std::vector<ConfigEntry>& entries,
                      std::optional<Study> study = std::nullopt);

/// Keys accepted by make_config.
const std::vector<std::string>& config_keys();

/// One line `key=value ...` listing every effective setting, including lambda and mu.
std::string describe(const RunConfig& config);

/// Exit codes of `run`.
inline constexpr int kExitSuccess = 0;
inline constexpr int kExitConfigError = 2;
inline constexpr int kExitSolverFailure = 3;

/// Runs the study and writes its artifacts into config.out. Error messages go to `err`.
int run(const RunConfig& config, std::ostream& err);

} // namespace biot
