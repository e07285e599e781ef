#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "npqs/functionals.hpp"

namespace npqs {

// ---------------------------------------------------------------------------
// Identity and inequality battery

struct CheckResult {
  std::string name;
  bool inequality = false;  // counted as violations rather than max error
  double max_violation = 0.0;
  double tolerance = 0.0;
  std::size_t cases = 0;
  std::size_t violations = 0;
  std::uint64_t worst_index = 0;

  bool passed() const noexcept { return violations == 0; }
};

struct BatteryOptions {
  std::size_t n = 2;
  std::size_t samples = 100'000;
  std::uint64_t seed = 0x6e707173ULL;
  bool identities = true;
  bool inequalities = true;
  /// Run the identities against a map with the sign of s_a flipped.
  bool mutate_s_sign = false;
};

struct BatteryReport {
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::vector<CheckResult> checks;

  bool all_passed() const;
  const CheckResult* find(const std::string& name) const;
};

/// Point used by the battery for case `index`: half uniform in the ball, half
/// with |z| = 1 - 10^{-3U} so the sphere neighbourhood up to 0.999 is covered.
BallPoint battery_point(std::size_t n, std::uint64_t seed, std::uint64_t index,
                        std::uint32_t slot);

BatteryReport run_identity_battery(const BatteryOptions& opts);

void print_battery(std::ostream& os, const BatteryReport& report);

// ---------------------------------------------------------------------------
// Run configuration

struct ParamSpec {
  double p = 2.0;
  double q = 1.0;
  double s = 1.0;
  std::optional<double> alpha;  // default: q+ns-n-1 + 0.5

  SpaceParams resolve(std::size_t n) const;
  friend bool operator==(const ParamSpec&, const ParamSpec&) = default;
};

/// Parses "p=7,q=1,s=1,alpha=0.5" (alpha optional).
ParamSpec parse_param_spec(const std::string& text);

struct RunConfig {
  std::size_t n = 2;
  std::vector<ParamSpec> params;
  std::vector<std::string> corpus;
  std::vector<FunctionalKind> kinds{kAllKinds.begin(), kAllKinds.end()};

  std::uint64_t seed = 0x6e707173ULL;
  std::size_t n_samples = 1'000'000;
  std::size_t inner_samples = 64;
  RadialMode radial_mode = RadialMode::BetaTilt;
  std::size_t shards = 8;
  std::size_t workers = 1;

  double r_max = kDefaultRMax;
  std::size_t sup_budget = kDefaultSupBudget;

  std::string out_dir = "report";
  std::string csv_name = "report.csv";
  std::string summary_name = "summary.json";

  bool override_hw_gate = false;
  bool focus = true;
  bool stop_on_divergence = true;
  bool record_timings = false;
  double wall_clock_budget_s = 0.0;  // 0 disables the cap

  FunctionalConfig functional_config() const;
  /// Throws ParameterError/ParseError if any parameter set or expression is
  /// invalid for n.
  void validate() const;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

std::string run_config_to_json(const RunConfig& cfg);
/// Missing keys take the defaults above, except that a missing "corpus"
/// selects default_corpus(n). Unknown keys are rejected and the result is
/// validated.
RunConfig run_config_from_json(const std::string& text);
RunConfig load_run_config(const std::string& path);

/// Constants, coordinate and mixed monomials, a seeded degree-5 polynomial,
/// (1-<z,b>)^{-t} for t in {0.5, 1, 3}, and log(1-z1).
std::vector<std::string> default_corpus(std::size_t n);

/// The seeded degree-5 polynomial of the default corpus.
std::string seeded_polynomial(std::size_t n, std::uint64_t seed = 5);

// ---------------------------------------------------------------------------
// Equivalence report

struct ReportRow {
  std::string function;
  FunctionalKind kind;
  std::size_t param_index;
  SpaceParams params;
  std::string status;  // "ok", "skipped", "error: ..."
  SupFunctionalResult result;
  double seconds = 0.0;
};

struct EquivalenceReport {
  RunConfig config;
  std::vector<ReportRow> rows;
  std::string csv;
  std::string summary_json;
  bool consistent = true;
};

/// Runs every function x params x kind row. Rows are computed in a fixed
/// order, so identical configs give identical CSV bytes unless
/// record_timings or a wall-clock cap is set.
EquivalenceReport run_equivalence_report(const RunConfig& cfg);

/// Writes the CSV and JSON summary into cfg.out_dir.
void write_report_files(const EquivalenceReport& report);

inline constexpr const char* kCsvHeader =
    "function,kind,n,p,q,s,alpha,a_star,value,std_error,samples,diverged,seconds,seed";

/// RFC 4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace npqs
