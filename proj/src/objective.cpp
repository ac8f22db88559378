#include "pccb/objective.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

namespace pccb {

Eigen::VectorXd to_real(const Eigen::VectorXcd& w) {
  Eigen::VectorXd x(2 * w.size());
  x << w.real(), w.imag();
  return x;
}

Eigen::VectorXcd to_complex(const Eigen::VectorXd& x) {
  if (x.size() % 2 != 0) throw std::invalid_argument("real parameter vector must have even length");
  const Eigen::Index n = x.size() / 2;
  Eigen::VectorXcd w(n);
  w.real() = x.head(n);
  w.imag() = x.tail(n);
  return w;
}

namespace {

// [d/dRe w; d/dIm w]
Eigen::VectorXd stack(const Eigen::VectorXd& re, const Eigen::VectorXd& im) {
  Eigen::VectorXd g(re.size() + im.size());
  g << re, im;
  return g;
}

}  // namespace

TermValue energy_term(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& gram) {
  if (gram.rows() != w.size() || gram.cols() != w.size()) {
    throw std::invalid_argument("energy term: weight length does not match the Gram matrix");
  }
  const double n = static_cast<double>(w.size());
  const Eigen::VectorXcd y = gram * w;
  TermValue t;
  t.value = w.dot(y).real() / n;  // Eigen's dot conjugates the left operand
  t.gradient = stack(2.0 * y.real() / n, 2.0 * y.imag() / n);
  return t;
}

TermValue energy_term(const Eigen::VectorXcd& w, const SteeringMatrix& v) {
  return energy_term(w, Eigen::MatrixXcd(v.values() * v.values().adjoint()));
}

TermValue fidelity_term(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& v,
                        const Eigen::VectorXcd& desired) {
  if (desired.size() != v.cols()) throw std::invalid_argument("desired pattern length mismatch");
  const Eigen::VectorXcd b = beampattern_values(w, v);
  const double s = b.norm();
  const double sd = desired.norm();
  if (!(sd > 0.0)) throw std::invalid_argument("desired beampattern is identically zero");
  if (!(s > 0.0)) throw DegeneratePattern("fidelity term: beampattern is identically zero");

  const Eigen::VectorXcd dhat = desired / sd;
  TermValue t;
  t.value = (dhat - b / s).squaredNorm();

  // J = 2 - 2 Re<dhat, b/s>; differentiate f = Re<dhat, b>/s.
  const double proj = dhat.dot(b).real();
  const Eigen::VectorXcd q = dhat / s - b * (proj / (s * s * s));
  const Eigen::VectorXcd z = v * q.conjugate();
  t.gradient = -2.0 * stack(z.real(), z.imag());
  return t;
}

TermValue phase_center_term(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& v,
                            const DirectionSet& dirs, Eigen::Index anchor, double mask_threshold,
                            const Mask* frozen_mask) {
  if (v.cols() != dirs.size()) throw std::invalid_argument("steering matrix / direction set mismatch");
  const Eigen::VectorXcd b = beampattern_values(w, v);
  PhaseVector pv = phase_vector(b, anchor, mask_threshold);
  if (frozen_mask) {
    if (static_cast<Eigen::Index>(frozen_mask->size()) != b.size()) {
      throw std::invalid_argument("frozen mask length mismatch");
    }
    pv.mask = *frozen_mask;
  }
  const DirectionMatrix dm(dirs, std::move(pv.mask));
  const Mask& mask = dm.mask();

  Eigen::VectorXd phi = Eigen::VectorXd::Zero(b.size());
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    if (mask[static_cast<std::size_t>(k)]) phi(k) = pv.phi(k);
  }
  const Eigen::Vector3d y = dm.omega() * phi;

  TermValue t;
  t.value = y.squaredNorm();

  // dJ/dPhi_k = 2 (Omega^T y)_k. Phi_k = arg B_k - arg B_anchor, and
  // d arg B = Im(dB / B) with dB/da_n = V_nk, dB/db_n = -i V_nk.
  Eigen::VectorXd h = 2.0 * (dm.omega().transpose() * y);
  h(anchor) -= h.sum();
  Eigen::VectorXcd coef = Eigen::VectorXcd::Zero(b.size());
  for (Eigen::Index k = 0; k < b.size(); ++k) {
    if (h(k) == 0.0) continue;
    if (b(k) == cd(0.0, 0.0)) throw DegeneratePattern("phase term: zero gain on a fitted direction");
    coef(k) = h(k) / b(k);
  }
  const Eigen::VectorXcd z = v * coef;
  t.gradient = stack(z.imag(), -z.real());
  return t;
}

ConstraintValue constraint_residuals(const Eigen::VectorXcd& w, const Eigen::MatrixXcd& c,
                                     const Eigen::VectorXcd& g) {
  if (c.rows() != w.size() || c.cols() != g.size()) {
    throw std::invalid_argument("constraint dimensions do not agree");
  }
  const Eigen::Index m = c.cols();
  const Eigen::Index n = c.rows();
  const Eigen::VectorXcd r = (c.adjoint() * w).conjugate() - g;

  ConstraintValue out;
  out.residual.resize(2 * m);
  out.residual << r.real(), r.imag();
  out.jacobian.resize(2 * m, 2 * n);
  const Eigen::MatrixXd cr = c.real().transpose();
  const Eigen::MatrixXd ci = c.imag().transpose();
  out.jacobian << cr, ci, ci, -cr;
  return out;
}

Eigen::VectorXcd feasible_init(std::uint64_t seed, const Eigen::MatrixXcd& c,
                               const Eigen::VectorXcd& g, double scale) {
  if (c.cols() != g.size()) throw std::invalid_argument("constraint dimensions do not agree");
  if (!(scale >= 0.0)) throw std::invalid_argument("init scale must be non-negative");
  const Eigen::Index n = c.rows();
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(c);
  if (cod.rank() < c.cols()) throw std::invalid_argument("constraint matrix is rank deficient");

  Eigen::VectorXcd wr = Eigen::VectorXcd::Zero(n);
  if (scale > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, scale / std::sqrt(static_cast<double>(n)));
    for (Eigen::Index i = 0; i < n; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      wr(i) = cd(re, im);
    }
  }
  // w^H C = g  <=>  C^H w = conj(g)
  const Eigen::MatrixXcd chc = c.adjoint() * c;
  const Eigen::VectorXcd lambda = chc.ldlt().solve(c.adjoint() * wr - g.conjugate());
  return wr - c * lambda;
}

PccbProblem::PccbProblem(const ArrayGeometry& geom, const Wavefield& wave,
                         const DirectionSet& dirs, const ElementModel& elem,
                         std::vector<Eigen::Vector3d> look_dirs,
                         std::vector<Eigen::Vector3d> null_dirs, PccbSettings settings)
    : v_(geom, wave.wavelength(), dirs, elem),
      elem_(elem),
      wavelength_(wave.wavelength()),
      look_dirs_(std::move(look_dirs)),
      null_dirs_(std::move(null_dirs)),
      settings_(settings) {
  if (look_dirs_.empty()) throw std::invalid_argument("at least one look direction is required");
  if (settings_.lambda_e < 0.0 || settings_.lambda_b < 0.0) {
    throw std::invalid_argument("regularization weights must be non-negative");
  }
  if (settings_.mask_threshold < 0.0 || settings_.mask_threshold >= 1.0) {
    throw std::invalid_argument("mask threshold must lie in [0, 1)");
  }
  const Eigen::Index n = v_.elements();
  const auto l = static_cast<Eigen::Index>(look_dirs_.size());
  const auto m = static_cast<Eigen::Index>(null_dirs_.size());
  if (l + m > n) {
    throw std::invalid_argument("more gain/null constraints (" + std::to_string(l + m) +
                                ") than array elements (" + std::to_string(n) + ")");
  }
  c_.resize(n, l + m);
  g_ = Eigen::VectorXcd::Zero(l + m);
  for (Eigen::Index j = 0; j < l; ++j) {
    c_.col(j) = element_steering_vector(geom, wavelength_, look_dirs_[j].normalized(), elem);
    g_(j) = 1.0;
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    c_.col(l + j) = element_steering_vector(geom, wavelength_, null_dirs_[j].normalized(), elem);
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod(c_);
  if (cod.rank() < c_.cols()) {
    throw std::invalid_argument(
        "constraint steering vectors are linearly dependent (duplicate directions or zero element "
        "gain)");
  }

  desired_ = Eigen::VectorXcd::Zero(dirs.size());
  for (Eigen::Index j = 0; j < l; ++j) desired_ += beampattern_values(c_.col(j), v_.values());
  desired_ /= static_cast<double>(l);
  gram_ = v_.values() * v_.values().adjoint();
  anchor_ = dirs.nearest(look_dirs_.front().normalized());
}

ObjectiveBreakdown PccbProblem::evaluate(const Eigen::VectorXcd& w) const {
  return total_objective(w, *this).first;
}

Eigen::VectorXcd PccbProblem::cbf_weights() const {
  const Eigen::VectorXcd c0 = c_.col(0);
  return c0 / c0.squaredNorm();
}

PhaseCenterResult PccbProblem::phase_center(const Eigen::VectorXcd& w) const {
  return phase_center_of_pattern(beampattern_values(w, v_.values()), directions(), anchor_,
                                 wavelength_, settings_.mask_threshold);
}

std::pair<ObjectiveBreakdown, Eigen::VectorXd> total_objective(const Eigen::VectorXcd& w,
                                                               const PccbProblem& problem) {
  if (!w.allFinite()) throw std::invalid_argument("weights must be finite");
  const auto& s = problem.settings();
  const TermValue pc = phase_center_term(w, problem.steering().values(), problem.directions(),
                                         problem.anchor(), s.mask_threshold);
  const TermValue e = energy_term(w, problem.gram());
  const TermValue b = fidelity_term(w, problem.steering().values(), problem.desired());

  ObjectiveBreakdown out;
  out.pc = pc.value;
  out.e = e.value;
  out.b = b.value;
  out.total = pc.value + s.lambda_e * e.value + s.lambda_b * b.value;
  Eigen::VectorXd grad = pc.gradient + s.lambda_e * e.gradient + s.lambda_b * b.gradient;
  return {out, std::move(grad)};
}

}  // namespace pccb
