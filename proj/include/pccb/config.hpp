#pragma once

#include <filesystem>
#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "pccb/array_model.hpp"
#include "pccb/objective.hpp"
#include "pccb/solver.hpp"
#include "pccb/sphere_sampling.hpp"

namespace pccb {

struct ArraySpec {
  int n_y = 3;
  int n_z = 3;
  double spacing = 0.07;
  std::optional<std::filesystem::path> file;

  ArrayGeometry build() const;
};

enum class SteeringPreset { sky_grid, quad, list };

/// Everything one experiment run depends on. Defaults reproduce the
/// 9-element L1 setup with the regularization weights lambda_e = 10 and
/// lambda_b = 0.1.
struct ExperimentConfig {
  ArraySpec array;
  double frequency_hz = kGpsL1Hz;
  ElementModel element = ElementModel::cosine(1.0);
  int sampling_k = 500;
  Region region = Region::upper_hemisphere();
  SteeringPreset steering = SteeringPreset::sky_grid;
  std::vector<Angles> steering_dirs;  // used when steering == list
  std::vector<Angles> null_dirs;
  PccbSettings pccb;
  SolverConfig solver;
  double init_scale = 0.0;  // <= 0: 1/sqrt(N)
  int threads = 1;
  std::filesystem::path out_dir = "pccb_out";
  std::vector<double> sr_edges_deg = {0.0, 15.0, 30.0, 45.0, 60.0};
  double hist_bin_width_m = 0.002;

  void validate() const;
  std::vector<Angles> resolved_steering() const;

  /// key = value text that parse_config reads back to an identical config.
  std::string echo() const;
};

/// "key = value" lines; '#' starts a comment. Angles in the file are degrees.
/// Unknown keys and malformed values are errors.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::filesystem::path& path);

/// 37 look directions: boresight plus rings at 12, 24, 36, 48 and 60 degrees
/// off boresight with 4, 6, 8, 8 and 10 evenly spaced azimuths.
std::vector<Angles> sky_grid();

/// Four off-boresight look directions used for pattern comparisons.
std::vector<Angles> quad_preset();

}  // namespace pccb
