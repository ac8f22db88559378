// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "oracles.hpp"
#include "pccb/experiment.hpp"

using namespace pccb;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
const Wavefield kWave = Wavefield::from_frequency(kGpsL1Hz);

int g_failures = 0;

void report(const std::string& id, bool ok, const std::string& detail) {
  if (!ok) ++g_failures;
  std::cout << fmt::format("{} {:<5} {}", ok ? "PASS" : "FAIL", id, detail) << std::endl;
}

double median(std::vector<double> v) { return five_number(std::move(v)).median; }

// Ratio CBF / best PCCB over directions with steering range in [lo, hi] degrees.
std::pair<double, std::size_t> band_ratio(const StatsBundle& s, double lo, double hi) {
  std::vector<double> r;
  for (const auto& d : s.per_direction) {
    if (d.steering_range_deg >= lo - 1e-9 && d.steering_range_deg <= hi + 1e-9 && std::isfinite(d.ratio)) {
      r.push_back(d.ratio);
    }
  }
  return {median(r), r.size()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

struct Sweep {
  ExperimentConfig cfg;
  ComparisonRun run;
  StatsBundle stats;
};

Sweep sweep(const ExperimentConfig& cfg) {
  Sweep s{cfg, run_comparison(cfg), {}};
  s.stats = aggregate_stats(s.run.records, cfg.sr_edges_deg, cfg.hist_bin_width_m);
  return s;
}

void ac1_full(const Sweep& full) {
  const auto [ratio, n] = band_ratio(full.stats, 15.0, 60.0);
  report("AC1", n >= 8 && ratio >= 3.0,
         fmt::format("median CBF/PCCB-best PCO ratio {:.3f} over {} directions with steering range "
                     "15-60 deg, {} restarts (need >= 3, >= 8 directions)",
                     ratio, n, full.cfg.solver.n_restarts));
}

void ac1_reduced() {
  ExperimentConfig cfg;
  cfg.steering = SteeringPreset::quad;
  cfg.solver.n_restarts = 10;
  const Sweep s = sweep(cfg);
  report("AC1r", s.stats.median_ratio >= 2.5,
         fmt::format("reduced run, 4 directions x 10 restarts: median ratio {:.3f} (need >= 2.5)",
                     s.stats.median_ratio));
}

// Worst |w^H c - g| over converged outcomes, recomputed from the weights.
std::pair<double, std::size_t> worst_constraint_error(const Sweep& s) {
  const ArrayGeometry geom = s.cfg.array.build();
  const DirectionSet dirs = sample_equal_area(s.cfg.sampling_k, s.cfg.region);
  double worst = 0.0;
  std::size_t n = 0;
  for (const auto& d : s.run.directions) {
    if (!d.ok) continue;
    const PccbProblem p = make_problem(s.cfg, geom, dirs, d.look);
    for (const auto& o : d.outcomes) {
      if (!is_converged(o.status)) continue;
      const Eigen::VectorXcd r = (o.w.adjoint() * p.c()).transpose() - p.g();
      worst = std::max(worst, r.cwiseAbs().maxCoeff());
      ++n;
    }
  }
  return {worst, n};
}

void ac2(const Sweep& full) {
  const auto [err, n] = worst_constraint_error(full);
  ExperimentConfig cfg;
  cfg.steering = SteeringPreset::quad;
  cfg.solver.n_restarts = 10;
  cfg.null_dirs = {{-10.0 * kDeg, -40.0 * kDeg}, {50.0 * kDeg, 30.0 * kDeg}};
  const auto [err_null, n_null] = worst_constraint_error(sweep(cfg));
  report("AC2", n > 0 && n_null > 0 && err <= 1e-6 && err_null <= 1e-6,
         fmt::format("max |w^H C - g| over converged runs: {:.2e} ({} runs, gain only), "
                     "{:.2e} ({} runs, with 2 nulls) (need <= 1e-6)",
                     err, n, err_null, n_null));
}

void ac3() {
  const DirectionSet dirs = sample_equal_area(500);
  const DirectionMatrix dm(dirs);
  const double k = kWave.wavenumber();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector3d t(nd(rng), nd(rng), nd(rng));
    t = t.normalized() * (kWave.wavelength() / 20.0) * ud(rng);
    // phases synthesized element-free, directly from the plane-wave delay
    Eigen::VectorXd phi(dirs.size());
    for (Eigen::Index j = 0; j < dirs.size(); ++j) phi(j) = k * dirs.direction(j).dot(t);
    worst = std::max(worst, (solve_pco(dm, phi, kWave.wavelength()).pc - t).norm());
  }
  report("AC3", worst <= 1e-9,
         fmt::format("PCO recovery from synthesized phases, 100 offsets |t| <= lambda/20, K = 500: "
                     "max error {:.2e} m (need <= 1e-9)",
                     worst));
}

void ac4() {
  const ArrayGeometry geom = build_grid_array(3, 3, 0.07);
  const DirectionSet dirs = sample_equal_area(500);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> alpha(0.0, 60.0 * kDeg), beta(0.0, 2.0 * std::numbers::pi);
  double worst_pc = 0.0, worst_e = 0.0, worst_b = 0.0;
  for (int i = 0; i < 10; ++i) {
    const PccbProblem p(geom, kWave, dirs, ElementModel::cosine(1.0),
                        {direction_off_boresight(alpha(rng), beta(rng))}, {});
    const Eigen::VectorXcd w = feasible_init(100 + i, p.c(), p.g(), 1.0 / 3.0);
    const Eigen::VectorXd x = to_real(w);
    const auto& v = p.steering().values();
    const Mask frozen = phase_vector(beampattern_values(w, v), p.anchor()).mask;

    const auto fpc = [&](const Eigen::VectorXd& y) {
      return phase_center_term(to_complex(y), v, dirs, p.anchor(), 1e-3, &frozen).value;
    };
    const auto fe = [&](const Eigen::VectorXd& y) { return energy_term(to_complex(y), p.gram()).value; };
    const auto fb = [&](const Eigen::VectorXd& y) { return fidelity_term(to_complex(y), v, p.desired()).value; };
    worst_pc = std::max(worst_pc, oracle::rel_err(phase_center_term(w, v, dirs, p.anchor(), 1e-3, &frozen).gradient,
                                                  oracle::fd_gradient(fpc, x, 1e-6)));
    worst_e = std::max(worst_e, oracle::rel_err(energy_term(w, p.gram()).gradient, oracle::fd_gradient(fe, x, 1e-6)));
    worst_b = std::max(worst_b, oracle::rel_err(fidelity_term(w, v, p.desired()).gradient,
                                                oracle::fd_gradient(fb, x, 1e-6)));
  }
  const double worst = std::max({worst_pc, worst_e, worst_b});
  report("AC4", worst <= 1e-5,
         fmt::format("analytic vs central-difference gradients at 10 feasible points: relative error "
                     "J_pc {:.1e}, J_e {:.1e}, J_b {:.1e} (need <= 1e-5)",
                     worst_pc, worst_e, worst_b));
}

void ac5() {
  // CBF pattern on the moved array, same weights. Offsets are orthogonal to
  // the phase reference (the sample nearest the look direction); layouts are
  // chosen so no lobe changes sign.
  const DirectionSet dirs = sample_equal_area(500);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> nd;
  double worst = 0.0;
  struct Case {
    ArrayGeometry geom;
    Angles look;
  };
  const Case cases[] = {
      {build_grid_array(3, 3, 0.05), {0.0, 0.0}},
      {build_grid_array(2, 2, 0.04), {20.0 * kDeg, 10.0 * kDeg}},
      {build_grid_array(2, 2, 0.04), {-35.0 * kDeg, 25.0 * kDeg}},
      {build_grid_array(2, 2, 0.04), {10.0 * kDeg, -50.0 * kDeg}},
  };
  for (const auto& c : cases) {
    const Eigen::Vector3d ua = direction_from_angles(c.look);
    const PccbProblem p(c.geom, kWave, dirs, ElementModel::isotropic(), {ua}, {}, {10.0, 0.1, 0.0});
    const Eigen::VectorXcd w = p.cbf_weights();
    const Eigen::Vector3d base = p.phase_center(w).pc;
    const Eigen::Vector3d ref = dirs.direction(p.anchor());
    for (int i = 0; i < 5; ++i) {
      Eigen::Vector3d t(nd(rng), nd(rng), nd(rng));
      t -= ref * ref.dot(t);
      t = t.normalized() * 0.01;
      const SteeringMatrix vt(c.geom.translated(t), kWave.wavelength(), dirs, ElementModel::isotropic());
      const Eigen::Vector3d moved =
          phase_center_of_pattern(beampattern(w, vt).values, dirs, p.anchor(), kWave.wavelength(), 0.0).pc;
      worst = std::max(worst, (moved - base - t).norm());
    }
  }
  report("AC5", worst <= 1e-6,
         fmt::format("CBF PCO translation covariance, 20 offsets of 1 cm across the phase reference direction: "
                     "max deviation {:.2e} m (need <= 1e-6)",
                     worst));
}

void ac6() {
  std::mt19937_64 rng(6);
  SolverConfig cfg;
  cfg.kkt_tol = 1e-10;
  double worst = 0.0;
  int not_converged = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 4 + trial % 15;
    const int m = 1 + trial % 4;
    const oracle::Qp p = oracle::random_convex_qp(rng, n, m);
    const ObjectiveFn f = [&p](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
      g = p.q_mat * x + p.q_vec;
      return 0.5 * x.dot(p.q_mat * x) + p.q_vec.dot(x);
    };
    const ConstraintFn c = [&p](const Eigen::VectorXd& x, Eigen::VectorXd& r, Eigen::MatrixXd& j) {
      r = p.a * x - p.b;
      j = p.a;
    };
    const Eigen::VectorXd x0 = p.a.completeOrthogonalDecomposition().solve(p.b);
    const SolveResult r = minimize_equality_constrained(f, c, x0, cfg);
    if (!is_converged(r.status)) ++not_converged;
    worst = std::max(worst, (r.x - oracle::kkt_solution(p)).norm());
  }
  report("AC6", worst <= 1e-7 && not_converged == 0,
         fmt::format("20 random convex equality QPs vs direct KKT solve: max |x - x*| {:.2e} "
                     "(need <= 1e-7), {} not converged",
                     worst, not_converged));
}

void ac7(const Sweep& full) {
  const std::size_t ks[] = {1, 5, 10, 25, 50};
  bool monotone = true;
  for (const auto& d : full.run.directions) {
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t k : ks) {
      if (k > d.outcomes.size()) break;
      const std::vector<OptimizationOutcome> prefix(d.outcomes.begin(), d.outcomes.begin() + static_cast<long>(k));
      const double b = select_best(prefix).pco.norm;
      if (b > prev) monotone = false;
      prev = b;
    }
  }
  std::vector<double> all;
  std::vector<double> best;
  std::vector<double> iqr;
  for (const auto& d : full.stats.per_direction) {
    if (std::isfinite(d.pccb_best_norm)) best.push_back(d.pccb_best_norm);
    iqr.push_back(d.pccb_spread.q3 - d.pccb_spread.q1);
  }
  for (const auto& r : full.run.records) {
    if (r.method == Method::pccb && std::isfinite(r.pco_norm)) all.push_back(r.pco_norm);
  }
  const double mb = median(best);
  const double ma = median(all);
  report("AC7", monotone && mb <= ma,
         fmt::format("best-of-K non-increasing over K = 1,5,10,25,50: {}; median best-of {:.4f} m <= "
                     "median all runs {:.4f} m; median per-direction IQR of restarts {:.4f} m",
                     monotone ? "yes" : "no", mb, ma, median(iqr)));
}

void ac8(const Sweep& full) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = 0.0;
  std::string detail;
  for (const auto& b : full.stats.sr_bins) {
    if (b.pccb_best.count == 0) continue;
    lo = std::min(lo, b.pccb_best.median);
    hi = std::max(hi, b.pccb_best.median);
    detail += fmt::format(" [{:g},{:g}) {:.4f}", b.lo_deg, b.hi_deg, b.pccb_best.median);
  }
  report("AC8", hi / lo <= 2.0,
         fmt::format("steering-range flatness: worst/best bin median of best-of PCO {:.3f} (need <= 2);"
                     " bin medians in m:{}",
                     hi / lo, detail));
}

void ac9() {
  double worst = 0.0;
  for (const Region r : {Region::full_sphere(), Region::upper_hemisphere(), Region::cap(60.0 * kDeg)}) {
    for (int k : {500, 1000, 2000}) {
      const DirectionSet d = sample_equal_area(k, r);
      worst = std::max(worst, std::abs(d.weights().sum() - r.solid_angle()) / r.solid_angle());
    }
  }
  const DirectionSet s = sample_equal_area(2000, Region::full_sphere());
  const Eigen::VectorXd x = s.unit_vectors().col(0);
  const double ks = oracle::ks_uniform(std::vector<double>(x.data(), x.data() + x.size()), -1.0, 1.0);
  report("AC9", worst <= 1e-6 && ks <= 0.05,
         fmt::format("sampling: weight sum relative error {:.1e} (need <= 1e-6); KS statistic of the "
                     "boresight cosine at K = 2000 {:.4f} (need <= 0.05)",
                     worst, ks));
}

void ac10() {
  ExperimentConfig cfg;
  cfg.steering = SteeringPreset::quad;
  cfg.solver.n_restarts = 5;
  cfg.solver.base_seed = 7;
  const auto tmp = std::filesystem::temp_directory_path();
  const auto d1 = tmp / "pccb_acceptance_a";
  const auto d2 = tmp / "pccb_acceptance_b";
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
  const Sweep a = sweep(cfg);
  export_outputs(a.run, a.stats, cfg, d1);
  cfg.threads = 3;
  const Sweep b = sweep(cfg);
  export_outputs(b.run, b.stats, cfg, d2);
  const std::string ra = slurp(d1 / "records.csv");
  const std::string rb = slurp(d2 / "records.csv");
  const bool same = !ra.empty() && ra == rb;
  report("AC10", same,
         fmt::format("records.csv from two runs with seed 7 (1 and 3 worker threads): {} ({} bytes)",
                     same ? "byte-identical" : "different", ra.size()));
  std::filesystem::remove_all(d1);
  std::filesystem::remove_all(d2);
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  try {
    ExperimentConfig full_cfg;  // sky grid, 50 restarts, seed 1
    std::cout << fmt::format("full sweep: {} directions x {} restarts ...", sky_grid().size(),
                             full_cfg.solver.n_restarts)
              << std::endl;
    const Sweep full = sweep(full_cfg);

    ac1_full(full);
    ac1_reduced();
    ac2(full);
    ac3();
    ac4();
    ac5();
    ac6();
    ac7(full);
    ac8(full);
    ac9();
    ac10();
  } catch (const std::exception& e) {
    std::cout << "FAIL  error: " << e.what() << std::endl;
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << fmt::format("{} failure(s), {:.1f} s", g_failures, secs) << std::endl;
  return g_failures == 0 ? 0 : 1;
}
