#pragma once

// End-to-end experiments: many-body runs over particle-number sequences,
// comparison against the Hartree orbitals, rate fits and reports.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mixlab/config.hpp"
#include "mixlab/reduced.hpp"

namespace mixlab {

enum class Pipeline { exact, coherent };
std::string to_string(Pipeline p);

struct ConvergenceRecord {
  Pipeline pipeline = Pipeline::exact;
  int n1 = 0;
  int n2 = 0;
  double t = 0.0;
  double trace_distance = 0.0;
  double p_sum = 0.0;
  double m10 = 0.0;
  double m01 = 0.0;
  double m11 = 0.0;
  /// max of the Hartree mass drifts and the many-body norm drift
  double mass_drift = 0.0;
  double energy_drift = 0.0;
  double truncation_deficit = 0.0;
  double wall_time = 0.0;

  int cutoff1 = 0;
  int cutoff2 = 0;
  bool deficit_flag = false;
  BoundBreakdown bounds;
};

struct ExperimentResult {
  std::vector<ConvergenceRecord> records;
  /// One line per skipped sweep point with the reason.
  std::vector<std::string> skipped;
};

/// Product state u^{⊗N1} ⊗ v^{⊗N2} evolved in its fixed-number sector.
ExperimentResult run_fixed_sector_experiment(const RunConfig& config);

/// Coherent initial state W(sqrt(N1) u, sqrt(N2) v) on the truncated Fock space.
ExperimentResult run_coherent_experiment(const RunConfig& config);

struct RateFit {
  Pipeline pipeline = Pipeline::exact;
  bool valid = false;
  std::string reason;
  double t = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  /// Root-mean-square residual of the log-log fit.
  double residual = 0.0;
  std::vector<int> n_values;
};

/// Least-squares fit of log(distance) against log(N) over records at time t
/// with N1 = N2 = N.
RateFit fit_rate(std::span<const ConvergenceRecord> records, double t);

/// fit_rate per pipeline present in `records` and per time in `times`.
std::vector<RateFit> fit_rates(std::span<const ConvergenceRecord> records,
                               std::span<const double> times);

struct EnvelopeCheck {
  bool valid = false;
  bool passed = false;
  std::string reason;
  int calibration_n = 0;
  double constant = 0.0;  // C
  double growth = 0.0;    // gamma
  /// max over checked records of distance / (slack * envelope)
  double worst_ratio = 0.0;
};

/// Calibrates C e^{gamma t} (1/sqrt(N1) + 1/sqrt(N2)) on the smallest N1 = N2
/// run at two times and checks every larger-N record against `slack` times it.
EnvelopeCheck check_envelope(std::span<const ConvergenceRecord> records, double t_a, double t_b,
                             double slack = 2.0);

/// 10 * deficit * (M1 + 1) * (M2 + 1): allowance for cutoff bias in the
/// distance-versus-bound comparison.
double truncation_slack(const ConvergenceRecord& record);

/// Sorted by (pipeline, N1, N2, t).
void sort_records(std::vector<ConvergenceRecord>& records);

/// Twelve deterministic columns:
/// pipeline,N1,N2,t,trace_distance,p_sum,m10,m01,m11,mass_drift,energy_drift,truncation_deficit
std::string records_csv(std::span<const ConvergenceRecord> records);
std::string bounds_csv(std::span<const ConvergenceRecord> records);
std::string timing_csv(std::span<const ConvergenceRecord> records);
std::string summary_json(std::span<const ConvergenceRecord> records,
                         std::span<const RateFit> fits, const RunConfig& config,
                         std::span<const std::string> skipped);

/// Writes records.csv, bounds.csv, timing.csv and summary.json into `directory`.
/// Throws std::ios_base::failure naming the path on I/O errors.
void emit_report(std::vector<ConvergenceRecord> records, std::span<const RateFit> fits,
                 const RunConfig& config, std::span<const std::string> skipped,
                 const std::filesystem::path& directory);

}  // namespace mixlab
