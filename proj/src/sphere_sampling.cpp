#include "pccb/sphere_sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <fmt/format.h>

namespace pccb {

namespace {

constexpr double kPi = std::numbers::pi;

// Golden-angle increment of the spherical Fibonacci lattice.
const double kGoldenAngle = kPi * (3.0 - std::sqrt(5.0));

Eigen::Vector3d lattice_point(int i, int m) {
  const double x = 1.0 - (2.0 * i + 1.0) / m;
  const double r = std::sqrt(std::max(0.0, 1.0 - x * x));
  const double a = kGoldenAngle * i;
  return {x, r * std::cos(a), r * std::sin(a)};
}

// Number of leading lattice points (of m) whose x is >= c.
int kept_count(int m, double c) {
  // 1 - (2i+1)/m >= c  <=>  i <= (m(1-c) - 1) / 2
  const double lim = (m * (1.0 - c) - 1.0) / 2.0;
  if (lim < 0.0) return 0;
  return std::min(m, static_cast<int>(std::floor(lim)) + 1);
}

}  // namespace

double Region::solid_angle() const {
  switch (kind) {
    case Kind::full_sphere:
      return 4.0 * kPi;
    case Kind::upper_hemisphere:
      return 2.0 * kPi;
    case Kind::cap:
      return 2.0 * kPi * (1.0 - std::cos(max_angle));
  }
  return 4.0 * kPi;
}

double Region::min_boresight_cosine() const {
  switch (kind) {
    case Kind::full_sphere:
      return -1.0;
    case Kind::upper_hemisphere:
      return 0.0;
    case Kind::cap:
      return std::cos(max_angle);
  }
  return -1.0;
}

DirectionSet::DirectionSet(Eigen::MatrixX3d unit_vectors, Eigen::VectorXd weights, Region region)
    : unit_vectors_(std::move(unit_vectors)), weights_(std::move(weights)), region_(region) {
  if (unit_vectors_.rows() == 0) throw std::invalid_argument("direction set is empty");
  if (weights_.size() != unit_vectors_.rows()) {
    throw std::invalid_argument("direction set weights do not match the number of directions");
  }
  angles_.resize(unit_vectors_.rows(), 2);
  for (Eigen::Index k = 0; k < unit_vectors_.rows(); ++k) {
    const double n = unit_vectors_.row(k).norm();
    if (std::abs(n - 1.0) > 1e-12) {
      throw std::invalid_argument("direction " + std::to_string(k) + " is not unit norm");
    }
    const Angles a = angles_from_direction(unit_vectors_.row(k).transpose());
    angles_(k, 0) = a.theta;
    angles_(k, 1) = a.phi;
  }
}

Eigen::Index DirectionSet::nearest(const Eigen::Vector3d& u) const {
  Eigen::Index best = 0;
  (unit_vectors_ * u).maxCoeff(&best);
  return best;
}

void DirectionSet::write_csv(std::ostream& out) const {
  out << "k,theta_rad,phi_rad,ux,uy,uz,weight_sr\n";
  for (Eigen::Index k = 0; k < size(); ++k) {
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", k, angles_(k, 0),
                       angles_(k, 1), unit_vectors_(k, 0), unit_vectors_(k, 1),
                       unit_vectors_(k, 2), weights_(k));
  }
}

DirectionSet sample_equal_area(int k, Region region) {
  if (k < 4) throw std::invalid_argument("equal-area sampling needs K >= 4");
  int m = k;
  double c = region.min_boresight_cosine();
  switch (region.kind) {
    case Region::Kind::full_sphere:
      m = k;
      c = -2.0;
      break;
    case Region::Kind::upper_hemisphere:
      m = 2 * k;
      c = 0.0;
      break;
    case Region::Kind::cap: {
      if (!(region.max_angle > 0.0) || region.max_angle > kPi) {
        throw std::invalid_argument("cap angle must lie in (0, pi]");
      }
      const double frac = 0.5 * (1.0 - c);
      m = std::max(k, static_cast<int>(std::floor(k / frac)) - 2);
      while (kept_count(m, c) < k) ++m;
      break;
    }
  }
  const int kept = c < -1.0 ? m : kept_count(m, c);
  Eigen::MatrixX3d u(kept, 3);
  for (int i = 0; i < kept; ++i) u.row(i) = lattice_point(i, m).transpose();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(kept, region.solid_angle() / kept);
  return DirectionSet(std::move(u), std::move(w), region);
}

Eigen::Vector3d direction_from_angles(double theta, double phi) {
  if (!(phi >= -kPi / 2 && phi <= kPi / 2)) {
    throw std::invalid_argument("elevation must lie in [-pi/2, pi/2]");
  }
  return {std::cos(theta) * std::cos(phi), std::sin(theta) * std::cos(phi), std::sin(phi)};
}

Eigen::Vector3d direction_from_angles(Angles a) { return direction_from_angles(a.theta, a.phi); }

Angles angles_from_direction(const Eigen::Vector3d& u) {
  return {std::atan2(u.y(), u.x()), std::atan2(u.z(), std::hypot(u.x(), u.y()))};
}

Eigen::Vector3d direction_off_boresight(double alpha, double beta) {
  const double s = std::sin(alpha);
  return {std::cos(alpha), s * std::cos(beta), s * std::sin(beta)};
}

double angular_distance(const Eigen::Vector3d& u1, const Eigen::Vector3d& u2) {
  return std::atan2(u1.cross(u2).norm(), u1.dot(u2));
}

std::pair<double, double> lambert_project(const Eigen::Vector3d& u, const Eigen::Vector3d& center) {
  const double cosd = u.dot(center);
  if (1.0 + cosd < 1e-9) throw std::invalid_argument("Lambert projection undefined at the antipode");
  Eigen::Vector3d e1;
  Eigen::Vector3d e2;
  if (std::abs(center.z()) < 0.9) {
    e2 = (Eigen::Vector3d::UnitZ() - center.z() * center).normalized();
    e1 = e2.cross(center);
  } else {
    e1 = (Eigen::Vector3d::UnitY() - center.y() * center).normalized();
    e2 = center.cross(e1);
  }
  const double s = std::sqrt(2.0 / (1.0 + cosd));
  return {s * u.dot(e1), s * u.dot(e2)};
}

}  // namespace pccb
