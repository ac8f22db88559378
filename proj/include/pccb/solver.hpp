#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pccb/objective.hpp"
#include "pccb/phase_center.hpp"

namespace pccb {

struct SolverConfig {
  double step_tol = 1e-9;
  double kkt_tol = 1e-6;
  int max_iters = 500;
  double merit_penalty_init = 1.0;
  double backtrack_factor = 0.5;
  int n_restarts = 50;
  std::uint64_t base_seed = 1;

  void validate() const;
};

enum class SolverStatus { converged_step_tol, converged_kkt, max_iters, degenerate_abort };

std::string_view to_string(SolverStatus s);
SolverStatus solver_status_from_string(std::string_view s);
inline bool is_converged(SolverStatus s) {
  return s == SolverStatus::converged_step_tol || s == SolverStatus::converged_kkt;
}

/// Objective callback: value and gradient. May throw DegeneratePattern.
using ObjectiveFn = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;
/// Constraint callback: residual c(x) (must vanish) and its Jacobian.
using ConstraintFn =
    std::function<void(const Eigen::VectorXd& x, Eigen::VectorXd& c, Eigen::MatrixXd& jac)>;

struct SolveResult {
  Eigen::VectorXd x;
  double f = 0.0;
  double constraint_inf_norm = 0.0;
  double kkt_residual = 0.0;
  SolverStatus status = SolverStatus::max_iters;
  int iterations = 0;
  /// Merit value after each accepted step, starting with the initial point.
  std::vector<double> merit_history;
};

/// Feasible starting point required (|c(x0)|_inf <= 1e-8).
inline constexpr double kInitialFeasibilityTol = 1e-8;
/// Converged exits also require |c(x)|_inf within this bound.
inline constexpr double kConvergedFeasibilityTol = 1e-6;
/// Consecutive degenerate evaluations tolerated before giving up.
inline constexpr int kMaxDegenerateHalvings = 30;

/// SQP with a damped BFGS Hessian approximation and an l1 merit line search.
SolveResult minimize_equality_constrained(const ObjectiveFn& objective,
                                          const ConstraintFn& constraints,
                                          const Eigen::VectorXd& x0, const SolverConfig& cfg);

struct OptimizationOutcome {
  Eigen::VectorXcd w;
  ObjectiveBreakdown breakdown;
  PhaseCenterResult pco;
  double constraint_inf_norm = 0.0;
  SolverStatus status = SolverStatus::max_iters;
  int iterations = 0;
  std::uint64_t seed = 0;

  /// One JSON object on a single line.
  std::string to_json_line() const;
};

/// One restart from feasible_init(seed, ...). `init_scale` <= 0 means 1/sqrt(N).
OptimizationOutcome solve_pccb(const PccbProblem& problem, std::uint64_t seed,
                               const SolverConfig& cfg, double init_scale = 0.0);

class AllRestartsDegenerate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct MultiStartResult {
  OptimizationOutcome best;
  std::vector<OptimizationOutcome> all;  // ordered by seed
};

/// Smallest PCO norm among converged outcomes, ties to the lowest seed; falls
/// back to the smallest J_total when nothing converged.
const OptimizationOutcome& select_best(const std::vector<OptimizationOutcome>& outcomes);

/// Restarts with seeds base_seed + r, r < n_restarts, spread across `threads`
/// workers. The result does not depend on the thread count.
MultiStartResult multi_start(const PccbProblem& problem, const SolverConfig& cfg,
                             int threads = 1, double init_scale = 0.0);

}  // namespace pccb
