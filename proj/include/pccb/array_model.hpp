#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <istream>
#include <memory>

#include <Eigen/Dense>

namespace pccb {

class DirectionSet;

using cd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;
inline constexpr double kGpsL1Hz = 1575.42e6;

/// Sensor positions in the array frame, one row per element, meters.
class ArrayGeometry {
 public:
  explicit ArrayGeometry(Eigen::MatrixX3d positions);

  std::size_t size() const { return static_cast<std::size_t>(positions_.rows()); }
  const Eigen::MatrixX3d& positions() const { return positions_; }

  ArrayGeometry translated(const Eigen::Vector3d& offset) const;

 private:
  Eigen::MatrixX3d positions_;
};

/// n_y * n_z elements on a square YZ grid centered on the origin. Rows are
/// z-major: all y positions of the lowest z row first.
ArrayGeometry build_grid_array(int n_y, int n_z, double spacing);

/// Plain-text table, one "x y z" row per element, '#' starts a comment.
ArrayGeometry read_geometry(std::istream& in);
ArrayGeometry read_geometry_file(const std::filesystem::path& path);

class Wavefield {
 public:
  static Wavefield from_frequency(double frequency_hz);
  static Wavefield from_wavelength(double wavelength_m);

  double frequency() const { return frequency_; }
  double wavelength() const { return wavelength_; }
  double wavenumber() const;

 private:
  Wavefield(double f, double lambda) : frequency_(f), wavelength_(lambda) {}
  double frequency_;
  double wavelength_;
};

/// Azimuth theta and elevation phi in radians; boresight (+X) is (0, 0).
struct Angles {
  double theta = 0.0;
  double phi = 0.0;
};

struct ElementModel {
  enum class Kind { isotropic, cosine_power };
  Kind kind = Kind::cosine_power;
  double exponent = 1.0;

  static ElementModel isotropic() { return {Kind::isotropic, 0.0}; }
  static ElementModel cosine(double q = 1.0) { return {Kind::cosine_power, q}; }
};

double element_gain(const Eigen::Vector3d& direction, const ElementModel& elem);

/// Per-element plane-wave response exp(+i k u.p). Equals the YZ-plane form
/// exp(+i k (sin(theta) cos(phi) p_y + sin(phi) p_z)) whenever p_x = 0.
Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double wavelength,
                                 const Eigen::Vector3d& direction);
Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double wavelength, Angles angles);

/// N x K responses, column k scaled by the element gain toward direction k.
class SteeringMatrix {
 public:
  SteeringMatrix(const ArrayGeometry& geom, double wavelength, const DirectionSet& dirs,
                 const ElementModel& elem);

  const Eigen::MatrixXcd& values() const { return values_; }
  Eigen::Index elements() const { return values_.rows(); }
  Eigen::Index directions() const { return values_.cols(); }
  const DirectionSet& direction_set() const { return *dirs_; }

 private:
  Eigen::MatrixXcd values_;
  std::shared_ptr<const DirectionSet> dirs_;
};

/// Column steering response including element gain for an arbitrary direction.
Eigen::VectorXcd element_steering_vector(const ArrayGeometry& geom, double wavelength,
                                         const Eigen::Vector3d& direction,
                                         const ElementModel& elem);

struct Beampattern {
  Eigen::VectorXcd values;
};

/// B_w = w^H V.
Beampattern beampattern(const Eigen::VectorXcd& w, const SteeringMatrix& v);
Eigen::VectorXcd beampattern_values(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& v);

}  // namespace pccb
