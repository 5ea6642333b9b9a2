#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "giem/giem.hpp"

namespace giem {

enum class Abscissa { N, SqrtN };

struct DecayFit {
  double slope = 0;
  double intercept = 0;
  double residual = 0;  // root mean square of the log-value residuals
  std::size_t points = 0;
  std::size_t skipped = 0;  // nonpositive values left out
};

// Least squares of log(value) against n or sqrt(n). Needs four positive
// values (WindowTooShort otherwise).
DecayFit fit_decay(const std::vector<std::pair<double, double>>& series, Abscissa abscissa);

struct Precision {
  bool extended = false;
  int bits = 53;
  std::string text() const;
};

// "binary64" or "extended:<bits>".
Precision parse_precision(const std::string& text);

struct ExperimentConfig {
  nlohmann::json map;  // descriptor, see build_map
  int n_max = 20;
  int grid = 65;
  Precision precision;
  std::vector<std::string> experiments;
  std::string output_dir = "out";
  std::uint64_t seed = 1;
  int samples = 100;           // random points for the oracle checks
  int symbolic_levels = 16;    // deepest cylinder level
  int partition_levels = 25;   // deepest partition level
  int prop31_levels = 10;
};

// Parses and validates a JSON document. Throws ConfigParse. The
// GIEM_PRECISION environment variable, when set, replaces the precision.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Map descriptors:
//   {"kind": "standard", "lengths": [...], "top": [...], "bottom": [...]}
//   {"kind": "standard", "lengths": [...], "monodromy": [...]}
//   {"kind": "piecewise_moebius", "lengths", "image_lengths", permutation as
//    above, "nonlinearity": [...], optional "rotation_number": x}
//   {"kind": "conjugated_rotation", "rotation": x, "conjugacy":
//    {"bump": t} | {"moebius": N}}
//   {"kind": "rotate_after", "map": {...}, "shift": s}
//   {"kind": "catalog", "name": "golden_rotation" | "three_interval_rotation"
//    | "bump_golden" | "moebius_golden" | "zero_mean_golden", "params": [...]}
// Numbers may be JSON numbers or strings (parsed at working precision,
// "golden" allowed). "rotation_number" tunes the map with a rotation
// applied after it.
template <class Real>
Giem<Real> build_map(const nlohmann::json& descriptor);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct RunReport {
  std::string precision;
  std::string stop_reason;
  int levels = 0;
  std::vector<std::pair<std::string, DecayFit>> fits;
  std::vector<CheckResult> checks;
  std::vector<std::string> files;
  std::string error;   // message of a failure that ended the run early
  bool hard = false;   // that failure was a hard one
  int exit_code = 0;   // 0 pass, 1 soft failure, 2 hard failure

  nlohmann::json to_json() const;
};

// Runs the requested experiments. With verify_only the CSVs are skipped
// and only the checks run. Writes report.json (run mode) atomically.
RunReport run_experiment(const ExperimentConfig& config, bool verify_only);

// Writes through a temporary file in the same directory and renames it.
void write_atomic(const std::string& path, const std::string& content);

// %.17g
std::string format_number(double x);

}  // namespace giem
