#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "pccb/array_model.hpp"
#include "pccb/phase_center.hpp"
#include "pccb/sphere_sampling.hpp"

namespace pccb {

// All gradients are taken with respect to x = [Re w; Im w].
Eigen::VectorXd to_real(const Eigen::VectorXcd& w);
Eigen::VectorXcd to_complex(const Eigen::VectorXd& x);

struct TermValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

/// (1/N) w^H G w with G = V V^H precomputed.
TermValue energy_term(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& gram);
TermValue energy_term(const Eigen::VectorXcd& w, const SteeringMatrix& v);

/// || B_d/||B_d|| - B_w/||B_w|| ||^2.
TermValue fidelity_term(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& v,
                        const Eigen::VectorXcd& desired);

/// Phi^T S Phi = ||Omega Phi||^2 in rad^2, with Phi anchored at `anchor`.
/// The mask comes from the current pattern unless `frozen_mask` is given.
TermValue phase_center_term(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& v,
                            const DirectionSet& dirs, Eigen::Index anchor,
                            double mask_threshold, const Mask* frozen_mask = nullptr);

struct ConstraintValue {
  Eigen::VectorXd residual;  // [Re(w^H C - g); Im(w^H C - g)]
  Eigen::MatrixXd jacobian;  // 2M x 2N, independent of w
};

ConstraintValue constraint_residuals(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& c,
                                     const Eigen::VectorXcd& g);

/// Gaussian draw projected onto {w : w^H C = g} by a minimum-norm correction.
/// scale = 0 gives the minimum-norm feasible point itself.
Eigen::VectorXcd feasible_init(std::uint64_t seed, const Eigen::MatrixXcd& c,
                               const Eigen::VectorXcd& g, double scale);

struct ObjectiveBreakdown {
  double total = 0.0;
  double pc = 0.0;
  double e = 0.0;
  double b = 0.0;
};

struct PccbSettings {
  double lambda_e = 10.0;
  double lambda_b = 0.1;
  double mask_threshold = kDefaultMaskThreshold;
};

/// Everything the PCCB functional needs, assembled once and shared read-only
/// across restarts.
class PccbProblem {
 public:
  PccbProblem(const ArrayGeometry& geom, const Wavefield& wave, const DirectionSet& dirs,
              const ElementModel& elem, std::vector<Eigen::Vector3d> look_dirs,
              std::vector<Eigen::Vector3d> null_dirs, PccbSettings settings = {});

  Eigen::Index n_elements() const { return v_.elements(); }
  double wavelength() const { return wavelength_; }
  const SteeringMatrix& steering() const { return v_; }
  const DirectionSet& directions() const { return v_.direction_set(); }
  const ElementModel& element() const { return elem_; }
  const PccbSettings& settings() const { return settings_; }

  const std::vector<Eigen::Vector3d>& look_dirs() const { return look_dirs_; }
  const std::vector<Eigen::Vector3d>& null_dirs() const { return null_dirs_; }
  /// Sample index used as the phase reference: nearest to the first look direction.
  Eigen::Index anchor() const { return anchor_; }

  const Eigen::MatrixXcd& c() const { return c_; }
  const Eigen::VectorXcd& g() const { return g_; }
  const Eigen::VectorXcd& desired() const { return desired_; }
  const Eigen::MatrixXcd& gram() const { return gram_; }

  ObjectiveBreakdown evaluate(const Eigen::VectorXcd& w) const;

  /// Conventional weights c_look / (c_look^H c_look) for the first look direction.
  Eigen::VectorXcd cbf_weights() const;

  PhaseCenterResult phase_center(const Eigen::VectorXcd& w) const;

 private:
  SteeringMatrix v_;
  ElementModel elem_;
  double wavelength_;
  std::vector<Eigen::Vector3d> look_dirs_;
  std::vector<Eigen::Vector3d> null_dirs_;
  PccbSettings settings_;
  Eigen::Index anchor_ = 0;
  Eigen::MatrixXcd c_;
  Eigen::VectorXcd g_;
  Eigen::VectorXcd desired_;
  Eigen::MatrixXcd gram_;
};

/// Breakdown plus the gradient of J_total.
std::pair<ObjectiveBreakdown, Eigen::VectorXd> total_objective(const Eigen::VectorXcd& w,
                                                               const PccbProblem& problem);

}  // namespace pccb
