#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pccb/config.hpp"
#include "pccb/solver.hpp"

namespace pccb {

enum class Method { cbf, pccb };
std::string_view to_string(Method m);

/// Status text used for conventional-beamforming rows, which have no solver run.
inline constexpr std::string_view kClosedFormStatus = "closed_form";
/// Status text for a direction whose setup or solve threw.
inline constexpr std::string_view kFailedStatus = "failed";

struct ComparisonRecord {
  int dir_idx = 0;
  double theta = 0.0;  // radians
  double phi = 0.0;    // radians
  Method method = Method::cbf;
  std::uint64_t seed = 0;  // 0 for CBF rows
  Eigen::Vector3d pco = Eigen::Vector3d::Zero();
  double pco_norm = 0.0;
  double j_pc = 0.0;
  double j_e = 0.0;
  double j_b = 0.0;
  double gain_look_abs = 0.0;
  double gain_null_abs_max = 0.0;  // NaN when no nulls are configured
  std::string status;
  int iterations = 0;

  bool converged() const;
};

/// Weights kept per direction for pattern export.
struct DirectionResult {
  int dir_idx = 0;
  Angles look;
  bool ok = false;
  std::string error;
  Eigen::VectorXcd cbf_w;
  Eigen::VectorXcd pccb_best_w;
  std::vector<OptimizationOutcome> outcomes;
};

struct ComparisonRun {
  std::vector<ComparisonRecord> records;  // canonical order
  std::vector<DirectionResult> directions;
};

using ProgressFn = std::function<void(int dir_idx, int n_dirs)>;

/// CBF plus multi-start PCCB for every configured look direction. Failures
/// are recorded per direction and do not stop the run.
ComparisonRun run_comparison(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// CBF rows only.
ComparisonRun run_steering(const ExperimentConfig& cfg);

/// By direction, then CBF before PCCB, then seed.
void sort_records(std::vector<ComparisonRecord>& records);

void write_records_csv(std::ostream& out, const std::vector<ComparisonRecord>& records);
std::vector<ComparisonRecord> read_records_csv(std::istream& in);

struct FiveNumber {
  std::size_t count = 0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
};

/// Linear-interpolation quartiles; count = 0 for an empty sample.
FiveNumber five_number(std::vector<double> values);

struct Histogram {
  double bin_width = 0.0;
  std::vector<std::size_t> counts;  // bin i covers [i w, (i+1) w)
  std::size_t total() const;
};

Histogram histogram(const std::vector<double>& values, double bin_width);

struct SrBin {
  double lo_deg = 0.0;
  double hi_deg = 0.0;
  FiveNumber cbf;
  FiveNumber pccb_all;
  FiveNumber pccb_best;
};

struct DirectionStats {
  int dir_idx = 0;
  double theta = 0.0;
  double phi = 0.0;
  double steering_range_deg = 0.0;
  double cbf_norm = 0.0;
  double pccb_best_norm = 0.0;
  double ratio = 0.0;  // cbf / best
  FiveNumber pccb_spread;
  std::size_t n_converged = 0;
  std::size_t n_runs = 0;
};

struct StatsBundle {
  // (a) PCO projections: rows [x, y] and [y, z].
  std::vector<Eigen::Vector2d> xy_cbf, xy_pccb, yz_cbf, yz_pccb;
  // (b) all runs, (c) best of the restarts per direction.
  Histogram hist_all_cbf, hist_all_pccb, hist_best_cbf, hist_best_pccb;
  std::size_t excluded_non_finite = 0;
  // (d) steering-range bins.
  std::vector<SrBin> sr_bins;
  std::vector<DirectionStats> per_direction;
  double median_ratio = 0.0;

  std::string to_json() const;
};

/// Best PCCB value per direction: smallest PCO norm among converged rows,
/// or among all finite rows if none converged.
StatsBundle aggregate_stats(const std::vector<ComparisonRecord>& records,
                            const std::vector<double>& sr_edges_deg, double bin_width);

/// Writes records.csv, stats.json, config.txt, directions.csv, outcomes.jsonl
/// and beampattern_<dir>_<method>.csv for every successful direction.
void export_outputs(const ComparisonRun& run, const StatsBundle& bundle,
                    const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

/// k,theta,phi,lambert_a,lambert_b,re,im,abs,phase
void write_beampattern_csv(std::ostream& out, const DirectionSet& dirs,
                           const Eigen::VectorXcd& pattern);

/// Problem for one look direction with the configured nulls.
PccbProblem make_problem(const ExperimentConfig& cfg, const ArrayGeometry& geom,
                         const DirectionSet& dirs, Angles look);

}  // namespace pccb
