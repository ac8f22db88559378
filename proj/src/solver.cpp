#include "pccb/solver.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include <nlohmann/json.hpp>

namespace pccb {

void SolverConfig::validate() const {
  if (!(step_tol > 0.0)) throw std::invalid_argument("step_tol must be positive");
  if (!(kkt_tol > 0.0)) throw std::invalid_argument("kkt_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("max_iters must be >= 1");
  if (!(merit_penalty_init >= 0.0)) throw std::invalid_argument("merit_penalty_init must be >= 0");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0)) {
    throw std::invalid_argument("backtrack_factor must lie in (0, 1)");
  }
  if (n_restarts < 1) throw std::invalid_argument("n_restarts must be >= 1");
}

std::string_view to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged_step_tol:
      return "converged_step_tol";
    case SolverStatus::converged_kkt:
      return "converged_kkt";
    case SolverStatus::max_iters:
      return "max_iters";
    case SolverStatus::degenerate_abort:
      return "degenerate_abort";
  }
  return "unknown";
}

SolverStatus solver_status_from_string(std::string_view s) {
  for (auto st : {SolverStatus::converged_step_tol, SolverStatus::converged_kkt,
                  SolverStatus::max_iters, SolverStatus::degenerate_abort}) {
    if (to_string(st) == s) return st;
  }
  throw std::invalid_argument("unknown solver status '" + std::string(s) + "'");
}

namespace {

constexpr double kArmijo = 1e-4;

// Gradient of the Lagrangian with least-squares multipliers.
double kkt_residual(const Eigen::VectorXd& grad, const Eigen::MatrixXd& jac) {
  if (jac.rows() == 0) return grad.lpNorm<Eigen::Infinity>();
  const Eigen::VectorXd mu = jac.transpose().completeOrthogonalDecomposition().solve(-grad);
  return (grad + jac.transpose() * mu).lpNorm<Eigen::Infinity>();
}

void damped_bfgs_update(Eigen::MatrixXd& h, const Eigen::VectorXd& s, Eigen::VectorXd y) {
  const Eigen::VectorXd hs = h * s;
  const double shs = s.dot(hs);
  if (!(shs > 0.0)) return;
  double sy = s.dot(y);
  // Powell damping keeps H positive definite.
  if (sy < 0.2 * shs) {
    const double theta = 0.8 * shs / (shs - sy);
    y = theta * y + (1.0 - theta) * hs;
    sy = s.dot(y);
  }
  if (!(sy > 0.0)) return;
  h += y * y.transpose() / sy - hs * hs.transpose() / shs;
}

}  // namespace

SolveResult minimize_equality_constrained(const ObjectiveFn& objective,
                                          const ConstraintFn& constraints,
                                          const Eigen::VectorXd& x0, const SolverConfig& cfg) {
  cfg.validate();
  const Eigen::Index n = x0.size();

  SolveResult res;
  res.x = x0;
  Eigen::VectorXd c;
  Eigen::MatrixXd jac;
  constraints(res.x, c, jac);
  const Eigen::Index m = c.size();
  if (c.size() > 0 && c.lpNorm<Eigen::Infinity>() > kInitialFeasibilityTol) {
    throw std::invalid_argument("initial point violates the equality constraints");
  }

  Eigen::VectorXd grad(n);
  try {
    res.f = objective(res.x, grad);
  } catch (const DegeneratePattern&) {
    res.f = std::numeric_limits<double>::quiet_NaN();
    res.status = SolverStatus::degenerate_abort;
    res.constraint_inf_norm = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    return res;
  }

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  bool h_is_identity = true;
  bool h_scaled = false;
  double rho = cfg.merit_penalty_init;
  auto infeas = [&](const Eigen::VectorXd& cv) { return m > 0 ? cv.lpNorm<1>() : 0.0; };
  res.merit_history.push_back(res.f + rho * infeas(c));

  bool done = false;
  res.status = SolverStatus::max_iters;
  for (int iter = 0; iter < cfg.max_iters && !done; ++iter) {
    const double cinf = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
    if (kkt_residual(grad, jac) <= cfg.kkt_tol && cinf <= kConvergedFeasibilityTol) {
      res.status = SolverStatus::converged_kkt;
      break;
    }

    // Equality-constrained QP: [H A^T; A 0] [d; mu] = [-g; -c].
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + m, n + m);
    kkt.topLeftCorner(n, n) = h;
    if (m > 0) {
      kkt.topRightCorner(n, m) = jac.transpose();
      kkt.bottomLeftCorner(m, n) = jac;
    }
    Eigen::VectorXd rhs(n + m);
    rhs << -grad, -c;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    const Eigen::VectorXd d = sol.head(n);
    const Eigen::VectorXd mu = sol.tail(m);
    if (!d.allFinite()) throw std::runtime_error("SQP subproblem produced a non-finite step");

    if (d.lpNorm<Eigen::Infinity>() <= cfg.step_tol) {
      res.status = SolverStatus::converged_step_tol;
      break;
    }

    if (m > 0) {
      const double mu_max = mu.lpNorm<Eigen::Infinity>();
      if (rho < 1.1 * mu_max) rho = 1.5 * mu_max;
    }
    const double phi0 = res.f + rho * infeas(c);
    const double slope = grad.dot(d) - rho * infeas(c);
    if (!(slope < 0.0)) {
      if (!h_is_identity) {
        h.setIdentity();
        h_is_identity = true;
        continue;
      }
      res.status = SolverStatus::converged_step_tol;
      break;
    }

    double alpha = 1.0;
    int degenerate = 0;
    bool accepted = false;
    Eigen::VectorXd xt;
    Eigen::VectorXd gt(n);
    Eigen::VectorXd ct;
    Eigen::MatrixXd jt;
    double ft = 0.0;
    while (true) {
      if (alpha * d.lpNorm<Eigen::Infinity>() <= cfg.step_tol) {
        res.status = SolverStatus::converged_step_tol;
        done = true;
        break;
      }
      xt = res.x + alpha * d;
      try {
        ft = objective(xt, gt);
      } catch (const DegeneratePattern&) {
        if (++degenerate >= kMaxDegenerateHalvings) {
          res.status = SolverStatus::degenerate_abort;
          done = true;
          break;
        }
        alpha *= 0.5;
        continue;
      }
      degenerate = 0;
      constraints(xt, ct, jt);
      const double phit = ft + rho * infeas(ct);
      if (std::isfinite(phit) && phit <= phi0 + kArmijo * alpha * slope) {
        accepted = true;
        res.merit_history.push_back(phit);
        break;
      }
      alpha *= cfg.backtrack_factor;
    }
    if (!accepted) break;

    const Eigen::VectorXd s = xt - res.x;
    Eigen::VectorXd y = gt - grad;
    if (m > 0) y += (jt - jac).transpose() * mu;
    if (!h_scaled) {
      const double sy = s.dot(y);
      if (sy > 0.0) {
        h = Eigen::MatrixXd::Identity(n, n) * (y.squaredNorm() / sy);
        h_scaled = true;
      }
    }
    damped_bfgs_update(h, s, y);
    h_is_identity = false;

    res.x = xt;
    res.f = ft;
    grad = gt;
    c = ct;
    jac = jt;
    res.iterations = iter + 1;

    if (s.lpNorm<Eigen::Infinity>() <= cfg.step_tol) {
      res.status = SolverStatus::converged_step_tol;
      break;
    }
  }

  res.constraint_inf_norm = m > 0 ? c.lpNorm<Eigen::Infinity>() : 0.0;
  res.kkt_residual = kkt_residual(grad, jac);
  if (is_converged(res.status) && res.constraint_inf_norm > kConvergedFeasibilityTol) {
    res.status = SolverStatus::max_iters;
  }
  return res;
}

std::string OptimizationOutcome::to_json_line() const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["status"] = std::string(to_string(status));
  j["iterations"] = iterations;
  j["j_total"] = breakdown.total;
  j["j_pc"] = breakdown.pc;
  j["j_e"] = breakdown.e;
  j["j_b"] = breakdown.b;
  j["constraint_inf_norm"] = constraint_inf_norm;
  j["pco"] = nlohmann::ordered_json::parse(pco.to_json());
  std::vector<double> re(static_cast<std::size_t>(w.size()));
  std::vector<double> im(re.size());
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    re[static_cast<std::size_t>(i)] = w(i).real();
    im[static_cast<std::size_t>(i)] = w(i).imag();
  }
  j["w_re"] = re;
  j["w_im"] = im;
  return j.dump();
}

OptimizationOutcome solve_pccb(const PccbProblem& problem, std::uint64_t seed,
                               const SolverConfig& cfg, double init_scale) {
  const double scale =
      init_scale > 0.0 ? init_scale : 1.0 / std::sqrt(static_cast<double>(problem.n_elements()));
  const Eigen::VectorXcd w0 = feasible_init(seed, problem.c(), problem.g(), scale);

  const ObjectiveFn objective = [&problem](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    auto [breakdown, g] = total_objective(to_complex(x), problem);
    grad = std::move(g);
    return breakdown.total;
  };
  const ConstraintFn constraints = [&problem](const Eigen::VectorXd& x, Eigen::VectorXd& c,
                                              Eigen::MatrixXd& jac) {
    ConstraintValue cv = constraint_residuals(to_complex(x), problem.c(), problem.g());
    c = std::move(cv.residual);
    jac = std::move(cv.jacobian);
  };

  const SolveResult r = minimize_equality_constrained(objective, constraints, to_real(w0), cfg);

  OptimizationOutcome out;
  out.w = to_complex(r.x);
  out.status = r.status;
  out.iterations = r.iterations;
  out.seed = seed;
  out.constraint_inf_norm = r.constraint_inf_norm;
  try {
    out.breakdown = problem.evaluate(out.w);
    out.pco = problem.phase_center(out.w);
  } catch (const DegeneratePattern&) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.breakdown = {nan, nan, nan, nan};
    out.pco.pc.setConstant(nan);
    out.pco.norm = nan;
    out.pco.residual_rms = nan;
    out.status = SolverStatus::degenerate_abort;
  }
  return out;
}

const OptimizationOutcome& select_best(const std::vector<OptimizationOutcome>& outcomes) {
  const OptimizationOutcome* best = nullptr;
  for (const auto& o : outcomes) {
    if (!is_converged(o.status) || !std::isfinite(o.pco.norm)) continue;
    if (!best || o.pco.norm < best->pco.norm ||
        (o.pco.norm == best->pco.norm && o.seed < best->seed)) {
      best = &o;
    }
  }
  if (best) return *best;
  for (const auto& o : outcomes) {
    if (o.status == SolverStatus::degenerate_abort || !std::isfinite(o.breakdown.total)) continue;
    if (!best || o.breakdown.total < best->breakdown.total ||
        (o.breakdown.total == best->breakdown.total && o.seed < best->seed)) {
      best = &o;
    }
  }
  if (!best) throw AllRestartsDegenerate("every restart ended in a degenerate beampattern");
  return *best;
}

MultiStartResult multi_start(const PccbProblem& problem, const SolverConfig& cfg, int threads,
                             double init_scale) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(cfg.n_restarts);
  std::vector<OptimizationOutcome> all(n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t r = next++; r < n; r = next++) {
      try {
        all[r] = solve_pccb(problem, cfg.base_seed + r, cfg, init_scale);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);

  MultiStartResult out;
  out.best = select_best(all);
  out.all = std::move(all);
  return out;
}

}  // namespace pccb
