#include "pccb/phase_center.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace pccb {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kRankTol = 1e-9;

}  // namespace

DirectionMatrix::DirectionMatrix(const DirectionSet& dirs)
    : DirectionMatrix(dirs, Mask(static_cast<std::size_t>(dirs.size()), true)) {}

DirectionMatrix::DirectionMatrix(const DirectionSet& dirs, Mask mask)
    : d_(dirs.unit_vectors()), mask_(std::move(mask)) {
  const Eigen::Index k = d_.rows();
  if (static_cast<Eigen::Index>(mask_.size()) != k) {
    throw std::invalid_argument("mask length does not match the direction count");
  }
  for (bool m : mask_) n_used_ += m ? 1 : 0;
  if (n_used_ == 0) throw std::invalid_argument("direction matrix: every direction is masked out");

  Eigen::MatrixX3d dm(n_used_, 3);
  for (Eigen::Index i = 0, r = 0; i < k; ++i) {
    if (mask_[static_cast<std::size_t>(i)]) dm.row(r++) = d_.row(i);
  }

  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(dm, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::Vector3d sv = svd.singularValues();
  const Eigen::Index rank = (sv.array() > kRankTol * sv(0)).count();
  if (rank < 3) {
    std::string missing;
    for (Eigen::Index j = rank; j < 3; ++j) {
      const Eigen::Vector3d n = svd.matrixV().col(j);
      missing += fmt::format(" ({:.6g}, {:.6g}, {:.6g})", n.x(), n.y(), n.z());
    }
    throw std::invalid_argument(
        fmt::format("masked direction matrix has rank {} < 3; no sampled direction has a "
                    "component along{}",
                    rank, missing));
  }
  if (n_used_ < 4) {
    throw std::invalid_argument("phase-center fit needs at least 4 masked directions");
  }

  const Eigen::Matrix3Xd pinv = svd.matrixV() * sv.cwiseInverse().asDiagonal() *
                                svd.matrixU().transpose();
  omega_ = Eigen::Matrix3Xd::Zero(3, k);
  for (Eigen::Index i = 0, r = 0; i < k; ++i) {
    if (mask_[static_cast<std::size_t>(i)]) omega_.col(i) = pinv.col(r++);
  }
}

Eigen::MatrixXd DirectionMatrix::s() const { return omega_.transpose() * omega_; }

double wrap_phase(double a) {
  double r = std::remainder(a, kTwoPi);
  if (r <= -std::numbers::pi) r += kTwoPi;
  return r;
}

PhaseVector phase_vector(const Eigen::VectorXcd& b, Eigen::Index anchor,
                         double mask_rel_threshold) {
  if (anchor < 0 || anchor >= b.size()) throw std::out_of_range("phase anchor out of range");
  const Eigen::VectorXd mag = b.cwiseAbs();
  const double peak = mag.maxCoeff();
  if (!(peak > 0.0)) throw DegeneratePattern("beampattern is identically zero");

  PhaseVector out;
  out.phi.resize(b.size());
  out.mask.resize(static_cast<std::size_t>(b.size()));
  const double ref = std::arg(b(anchor));
  const double cut = mask_rel_threshold * peak;
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    out.phi(k) = k == anchor ? 0.0 : wrap_phase(std::arg(b(k)) - ref);
    out.mask[static_cast<std::size_t>(k)] = k == anchor || mag(k) >= cut;
  }
  return out;
}

std::string PhaseCenterResult::to_json() const {
  nlohmann::ordered_json j;
  j["pc_m"] = {pc.x(), pc.y(), pc.z()};
  j["norm_m"] = norm;
  j["residual_rms_rad"] = residual_rms;
  j["n_used"] = n_used;
  return j.dump();
}

PhaseCenterResult solve_pco(const DirectionMatrix& dm, const Eigen::VectorXd& phi,
                            double wavelength) {
  if (phi.size() != dm.d().rows()) throw std::invalid_argument("phase vector length mismatch");
  if (!(wavelength > 0.0)) throw std::invalid_argument("wavelength must be positive");
  const Mask& mask = dm.mask();
  Eigen::VectorXd masked = Eigen::VectorXd::Zero(phi.size());
  for (Eigen::Index k = 0; k < phi.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) {
      if (!std::isfinite(phi(k))) throw std::invalid_argument("phase vector has non-finite entries");
      masked(k) = phi(k);
    }
  }

  PhaseCenterResult r;
  const double scale = wavelength / kTwoPi;
  r.pc = scale * (dm.omega() * masked);
  r.norm = r.pc.norm();
  r.n_used = dm.n_used();
  const Eigen::VectorXd fitted = (dm.d() * r.pc) / scale;
  double ss = 0.0;
  for (Eigen::Index k = 0; k < phi.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) ss += std::pow(fitted(k) - masked(k), 2);
  }
  r.residual_rms = std::sqrt(ss / static_cast<double>(r.n_used));
  return r;
}

PhaseCenterResult phase_center_of_pattern(const Eigen::VectorXcd& b, const DirectionSet& dirs,
                                          Eigen::Index anchor, double wavelength,
                                          double mask_rel_threshold) {
  PhaseVector pv = phase_vector(b, anchor, mask_rel_threshold);
  const DirectionMatrix dm(dirs, std::move(pv.mask));
  return solve_pco(dm, pv.phi, wavelength);
}

}  // namespace pccb
