#include "pccb/array_model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pccb/sphere_sampling.hpp"

namespace pccb {

ArrayGeometry::ArrayGeometry(Eigen::MatrixX3d positions) : positions_(std::move(positions)) {
  if (positions_.rows() < 1) throw std::invalid_argument("array geometry needs at least one element");
  if (!positions_.allFinite()) throw std::invalid_argument("array geometry has non-finite coordinates");
}

ArrayGeometry ArrayGeometry::translated(const Eigen::Vector3d& offset) const {
  Eigen::MatrixX3d p = positions_;
  p.rowwise() += offset.transpose();
  return ArrayGeometry(std::move(p));
}

ArrayGeometry build_grid_array(int n_y, int n_z, double spacing) {
  if (n_y < 1 || n_z < 1) throw std::invalid_argument("grid counts must be >= 1");
  if (!(spacing > 0.0) || !std::isfinite(spacing)) {
    throw std::invalid_argument("grid spacing must be positive");
  }
  const double y0 = 0.5 * (n_y - 1) * spacing;
  const double z0 = 0.5 * (n_z - 1) * spacing;
  Eigen::MatrixX3d p(n_y * n_z, 3);
  int row = 0;
  for (int iz = 0; iz < n_z; ++iz) {
    for (int iy = 0; iy < n_y; ++iy, ++row) {
      p(row, 0) = 0.0;
      p(row, 1) = iy * spacing - y0;
      p(row, 2) = iz * spacing - z0;
    }
  }
  return ArrayGeometry(std::move(p));
}

ArrayGeometry read_geometry(std::istream& in) {
  std::vector<Eigen::Vector3d> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<double> vals;
    double v;
    while (ss >> v) vals.push_back(v);
    if (!ss.eof()) {
      throw std::invalid_argument("geometry line " + std::to_string(lineno) + ": not a number");
    }
    if (vals.empty()) continue;
    if (vals.size() != 3) {
      throw std::invalid_argument("geometry line " + std::to_string(lineno) +
                                  ": expected 3 columns (x y z), got " + std::to_string(vals.size()));
    }
    rows.emplace_back(vals[0], vals[1], vals[2]);
  }
  if (rows.empty()) throw std::invalid_argument("geometry table has no elements");
  Eigen::MatrixX3d p(static_cast<Eigen::Index>(rows.size()), 3);
  for (std::size_t i = 0; i < rows.size(); ++i) p.row(static_cast<Eigen::Index>(i)) = rows[i];
  return ArrayGeometry(std::move(p));
}

ArrayGeometry read_geometry_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open geometry file " + path.string());
  return read_geometry(in);
}

Wavefield Wavefield::from_frequency(double frequency_hz) {
  if (!(frequency_hz > 0.0) || !std::isfinite(frequency_hz)) {
    throw std::invalid_argument("frequency must be positive");
  }
  return Wavefield(frequency_hz, kSpeedOfLight / frequency_hz);
}

Wavefield Wavefield::from_wavelength(double wavelength_m) {
  if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m)) {
    throw std::invalid_argument("wavelength must be positive");
  }
  return Wavefield(kSpeedOfLight / wavelength_m, wavelength_m);
}

double Wavefield::wavenumber() const { return 2.0 * std::numbers::pi / wavelength_; }

double element_gain(const Eigen::Vector3d& direction, const ElementModel& elem) {
  switch (elem.kind) {
    case ElementModel::Kind::isotropic:
      return 1.0;
    case ElementModel::Kind::cosine_power: {
      const double ux = direction.x();
      if (ux < 0.0) return 0.0;
      return std::pow(ux, elem.exponent);
    }
  }
  return 1.0;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double wavelength,
                                 const Eigen::Vector3d& direction) {
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  const double k = 2.0 * std::numbers::pi / wavelength;
  const Eigen::VectorXd path = geom.positions() * direction;
  Eigen::VectorXcd v(path.size());
  for (Eigen::Index n = 0; n < path.size(); ++n) v(n) = std::polar(1.0, k * path(n));
  return v;
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geom, double wavelength, Angles angles) {
  return steering_vector(geom, wavelength, direction_from_angles(angles));
}

Eigen::VectorXcd element_steering_vector(const ArrayGeometry& geom, double wavelength,
                                         const Eigen::Vector3d& direction,
                                         const ElementModel& elem) {
  return steering_vector(geom, wavelength, direction) * element_gain(direction, elem);
}

SteeringMatrix::SteeringMatrix(const ArrayGeometry& geom, double wavelength,
                               const DirectionSet& dirs, const ElementModel& elem)
    : dirs_(std::make_shared<const DirectionSet>(dirs)) {
  if (dirs.size() == 0) throw std::invalid_argument("steering matrix needs at least one direction");
  values_.resize(static_cast<Eigen::Index>(geom.size()), dirs.size());
  for (Eigen::Index k = 0; k < dirs.size(); ++k) {
    values_.col(k) = element_steering_vector(geom, wavelength, dirs.direction(k), elem);
  }
}

Eigen::VectorXcd beampattern_values(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& v) {
  if (w.size() != v.rows()) {
    throw std::invalid_argument("weight length " + std::to_string(w.size()) +
                                " does not match " + std::to_string(v.rows()) + " elements");
  }
  return (w.adjoint() * v).transpose();
}

Beampattern beampattern(const Eigen::VectorXcd& w, const SteeringMatrix& v) {
  return {beampattern_values(w, v.values())};
}

}  // namespace pccb
