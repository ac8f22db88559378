#pragma once

#include <ostream>
#include <utility>

#include <Eigen/Dense>

#include "pccb/array_model.hpp"

namespace pccb {

/// Sampling region around the +X boresight.
struct Region {
  enum class Kind { full_sphere, upper_hemisphere, cap };
  Kind kind = Kind::upper_hemisphere;
  double max_angle = 0.0;  // radians, cap only

  static Region full_sphere() { return {Kind::full_sphere, 0.0}; }
  static Region upper_hemisphere() { return {Kind::upper_hemisphere, 0.0}; }
  static Region cap(double max_angle_rad) { return {Kind::cap, max_angle_rad}; }

  double solid_angle() const;
  double min_boresight_cosine() const;
};

class DirectionSet {
 public:
  DirectionSet(Eigen::MatrixX3d unit_vectors, Eigen::VectorXd weights, Region region);

  Eigen::Index size() const { return unit_vectors_.rows(); }
  const Eigen::MatrixX3d& unit_vectors() const { return unit_vectors_; }
  /// Columns: theta (azimuth), phi (elevation).
  const Eigen::MatrixX2d& angles() const { return angles_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  const Region& region() const { return region_; }

  Eigen::Vector3d direction(Eigen::Index k) const { return unit_vectors_.row(k).transpose(); }

  /// Index of the sample with the smallest angular distance to u.
  Eigen::Index nearest(const Eigen::Vector3d& u) const;

  /// CSV with header k,theta_rad,phi_rad,ux,uy,uz,weight_sr.
  void write_csv(std::ostream& out) const;

 private:
  Eigen::MatrixX3d unit_vectors_;
  Eigen::MatrixX2d angles_;
  Eigen::VectorXd weights_;
  Region region_;
};

/// Spherical Fibonacci lattice with its polar axis on +X, clipped to the
/// region. Every kept point carries weight region.solid_angle() / K.
DirectionSet sample_equal_area(int k, Region region = Region::upper_hemisphere());

Eigen::Vector3d direction_from_angles(double theta, double phi);
Eigen::Vector3d direction_from_angles(Angles a);
Angles angles_from_direction(const Eigen::Vector3d& u);

/// Direction alpha radians away from boresight, rotated by beta about +X
/// (beta = 0 tilts toward +Y, beta = pi/2 toward +Z).
Eigen::Vector3d direction_off_boresight(double alpha, double beta);

double angular_distance(const Eigen::Vector3d& u1, const Eigen::Vector3d& u2);

/// Lambert azimuthal equal-area coordinates of u about center.
std::pair<double, double> lambert_project(const Eigen::Vector3d& u,
                                          const Eigen::Vector3d& center = Eigen::Vector3d::UnitX());

}  // namespace pccb
