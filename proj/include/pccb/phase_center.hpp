#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pccb/sphere_sampling.hpp"

namespace pccb {

using Mask = std::vector<bool>;

/// Raised when an iterate produces an all-zero beampattern, where neither
/// phases nor the normalized pattern are defined. The solver backtracks on it.
class DegeneratePattern : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Least-squares design for fitting a point offset to per-direction phase.
///
/// D holds the unit vectors of every sampled direction; only rows selected by
/// the mask take part in the fit. Omega is the Moore-Penrose pseudo-inverse of
/// the masked D, scattered back to K columns with zeros on masked-out rows, so
/// Omega * Phi fits only the masked samples regardless of what the others hold.
class DirectionMatrix {
 public:
  DirectionMatrix(const DirectionSet& dirs, Mask mask);
  /// All directions masked in.
  explicit DirectionMatrix(const DirectionSet& dirs);

  const Eigen::MatrixX3d& d() const { return d_; }
  const Eigen::Matrix3Xd& omega() const { return omega_; }
  const Mask& mask() const { return mask_; }
  Eigen::Index n_used() const { return n_used_; }

  /// Omega^T Omega, K x K. Built on demand; it is never needed inside the
  /// objective, which evaluates ||Omega Phi||^2 directly.
  Eigen::MatrixXd s() const;

 private:
  Eigen::MatrixX3d d_;
  Eigen::Matrix3Xd omega_;
  Mask mask_;
  Eigen::Index n_used_ = 0;
};

struct PhaseVector {
  Eigen::VectorXd phi;  // radians, wrapped to (-pi, pi]
  Mask mask;
};

inline constexpr double kDefaultMaskThreshold = 1e-3;

/// Wrap an angle to (-pi, pi].
double wrap_phase(double a);

/// Phase of B relative to B[anchor]. Directions with |B| below
/// mask_rel_threshold * max|B| are masked out; the anchor never is.
PhaseVector phase_vector(const Eigen::VectorXcd& b, Eigen::Index anchor,
                         double mask_rel_threshold = kDefaultMaskThreshold);

struct PhaseCenterResult {
  Eigen::Vector3d pc = Eigen::Vector3d::Zero();  // meters
  double norm = 0.0;                             // meters
  double residual_rms = 0.0;                     // radians
  Eigen::Index n_used = 0;

  /// {"pc_m": [x, y, z], "norm_m": ..., "residual_rms_rad": ..., "n_used": ...}
  std::string to_json() const;
};

/// P_c = (lambda / 2 pi) Omega Phi over the masked samples.
PhaseCenterResult solve_pco(const DirectionMatrix& dm, const Eigen::VectorXd& phi,
                            double wavelength);

/// Phase vector, masked design and fit in one call.
PhaseCenterResult phase_center_of_pattern(const Eigen::VectorXcd& b, const DirectionSet& dirs,
                                          Eigen::Index anchor, double wavelength,
                                          double mask_rel_threshold = kDefaultMaskThreshold);

}  // namespace pccb
