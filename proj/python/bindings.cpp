#include <numbers>
#include <sstream>
#include <string>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "pccb/config.hpp"
#include "pccb/experiment.hpp"

namespace py = pybind11;
using namespace pccb;

namespace {

Region make_region(const std::string& name, double cap_deg) {
  if (name == "full_sphere") return Region::full_sphere();
  if (name == "upper_hemisphere") return Region::upper_hemisphere();
  if (name == "cap") return Region::cap(cap_deg * std::numbers::pi / 180.0);
  throw py::value_error("unknown region '" + name + "'");
}

ElementModel make_element(const std::string& name, double exponent) {
  if (name == "isotropic") return ElementModel::isotropic();
  if (name == "cosine_power") return ElementModel::cosine(exponent);
  throw py::value_error("unknown element model '" + name + "'");
}

DirectionSet direction_set(const Eigen::MatrixX3d& u) {
  return DirectionSet(u, Eigen::VectorXd::Ones(u.rows()), Region::full_sphere());
}

py::dict pco_dict(const PhaseCenterResult& r) {
  py::dict d;
  d["pc"] = Eigen::Vector3d(r.pc);
  d["norm"] = r.norm;
  d["residual_rms"] = r.residual_rms;
  d["n_used"] = r.n_used;
  return d;
}

py::dict breakdown_dict(const ObjectiveBreakdown& b) {
  py::dict d;
  d["total"] = b.total;
  d["pc"] = b.pc;
  d["e"] = b.e;
  d["b"] = b.b;
  return d;
}

py::dict outcome_dict(const OptimizationOutcome& o) {
  py::dict d;
  d["w"] = Eigen::VectorXcd(o.w);
  d["objective"] = breakdown_dict(o.breakdown);
  d["pco"] = pco_dict(o.pco);
  d["constraint_inf_norm"] = o.constraint_inf_norm;
  d["status"] = std::string(to_string(o.status));
  d["converged"] = is_converged(o.status);
  d["iterations"] = o.iterations;
  d["seed"] = o.seed;
  return d;
}

SolverConfig solver_config(int restarts, std::uint64_t seed, int max_iters, double step_tol,
                           double kkt_tol) {
  SolverConfig c;
  c.n_restarts = restarts;
  c.base_seed = seed;
  c.max_iters = max_iters;
  c.step_tol = step_tol;
  c.kkt_tol = kkt_tol;
  c.validate();
  return c;
}

py::dict record_dict(const ComparisonRecord& r) {
  py::dict d;
  d["dir_idx"] = r.dir_idx;
  d["theta"] = r.theta;
  d["phi"] = r.phi;
  d["method"] = std::string(to_string(r.method));
  d["seed"] = r.seed;
  d["pco"] = Eigen::Vector3d(r.pco);
  d["pco_norm"] = r.pco_norm;
  d["j_pc"] = r.j_pc;
  d["j_e"] = r.j_e;
  d["j_b"] = r.j_b;
  d["gain_look_abs"] = r.gain_look_abs;
  d["gain_null_abs_max"] = r.gain_null_abs_max;
  d["status"] = r.status;
  d["iterations"] = r.iterations;
  return d;
}

}  // namespace

PYBIND11_MODULE(_pccb, m) {
  m.doc() = "Phase-center-constrained beamforming core";

  py::register_exception<DegeneratePattern>(m, "DegeneratePattern", PyExc_ArithmeticError);
  py::register_exception<AllRestartsDegenerate>(m, "AllRestartsDegenerate", PyExc_RuntimeError);

  m.attr("GPS_L1_HZ") = kGpsL1Hz;
  m.attr("SPEED_OF_LIGHT") = kSpeedOfLight;

  m.def("wavelength", [](double f) { return Wavefield::from_frequency(f).wavelength(); },
        py::arg("frequency_hz") = kGpsL1Hz);

  m.def("build_grid_array",
        [](int n_y, int n_z, double spacing) { return build_grid_array(n_y, n_z, spacing).positions(); },
        py::arg("n_y") = 3, py::arg("n_z") = 3, py::arg("spacing") = 0.07,
        "Element positions (N x 3, meters) of a centered YZ grid.");

  m.def("steering_vector",
        [](const Eigen::MatrixX3d& positions, double wavelength, double theta, double phi) {
          return steering_vector(ArrayGeometry(positions), wavelength, Angles{theta, phi});
        },
        py::arg("positions"), py::arg("wavelength"), py::arg("theta"), py::arg("phi"));

  m.def("direction_from_angles", [](double t, double p) { return direction_from_angles(t, p); },
        py::arg("theta"), py::arg("phi"));

  m.def("sample_equal_area",
        [](int k, const std::string& region, double cap_deg) {
          const DirectionSet s = sample_equal_area(k, make_region(region, cap_deg));
          py::dict d;
          d["unit_vectors"] = s.unit_vectors();
          d["angles"] = s.angles();
          d["weights"] = s.weights();
          return d;
        },
        py::arg("k"), py::arg("region") = "upper_hemisphere", py::arg("cap_deg") = 90.0);

  m.def("beampattern",
        [](const Eigen::VectorXcd& w, const Eigen::MatrixX3d& positions, double wavelength,
           const Eigen::MatrixX3d& unit_vectors, const std::string& element, double exponent) {
          const SteeringMatrix v(ArrayGeometry(positions), wavelength, direction_set(unit_vectors),
                                 make_element(element, exponent));
          return Eigen::VectorXcd(beampattern(w, v).values);
        },
        py::arg("w"), py::arg("positions"), py::arg("wavelength"), py::arg("unit_vectors"),
        py::arg("element") = "cosine_power", py::arg("exponent") = 1.0);

  m.def("solve_pco",
        [](const Eigen::VectorXd& phi, const Eigen::MatrixX3d& unit_vectors, double wavelength) {
          const DirectionMatrix dm(direction_set(unit_vectors));
          return pco_dict(solve_pco(dm, phi, wavelength));
        },
        py::arg("phi"), py::arg("unit_vectors"), py::arg("wavelength"),
        "Least-squares offset for per-direction phases (radians).");

  m.def("phase_center",
        [](const Eigen::VectorXcd& pattern, const Eigen::MatrixX3d& unit_vectors, Eigen::Index anchor,
           double wavelength, double mask_threshold) {
          return pco_dict(phase_center_of_pattern(pattern, direction_set(unit_vectors), anchor,
                                                  wavelength, mask_threshold));
        },
        py::arg("pattern"), py::arg("unit_vectors"), py::arg("anchor"), py::arg("wavelength"),
        py::arg("mask_threshold") = kDefaultMaskThreshold);

  py::class_<PccbProblem>(m, "Problem")
      .def(py::init([](const Eigen::MatrixX3d& positions, double theta, double phi,
                       const std::vector<std::pair<double, double>>& nulls, double frequency_hz,
                       int k, const std::string& element, double exponent, double lambda_e,
                       double lambda_b, double mask_threshold) {
             std::vector<Eigen::Vector3d> null_dirs;
             for (const auto& [t, p] : nulls) null_dirs.push_back(direction_from_angles(t, p));
             return PccbProblem(ArrayGeometry(positions), Wavefield::from_frequency(frequency_hz),
                                sample_equal_area(k), make_element(element, exponent),
                                {direction_from_angles(theta, phi)}, std::move(null_dirs),
                                PccbSettings{lambda_e, lambda_b, mask_threshold});
           }),
           py::arg("positions"), py::arg("theta"), py::arg("phi"),
           py::arg("nulls") = std::vector<std::pair<double, double>>{},
           py::arg("frequency_hz") = kGpsL1Hz, py::arg("k") = 500,
           py::arg("element") = "cosine_power", py::arg("exponent") = 1.0,
           py::arg("lambda_e") = 10.0, py::arg("lambda_b") = 0.1,
           py::arg("mask_threshold") = kDefaultMaskThreshold)
      .def_property_readonly("n_elements", &PccbProblem::n_elements)
      .def_property_readonly("wavelength", &PccbProblem::wavelength)
      .def_property_readonly("anchor", &PccbProblem::anchor)
      .def_property_readonly("unit_vectors",
                             [](const PccbProblem& p) { return p.directions().unit_vectors(); })
      .def_property_readonly("constraint_matrix", [](const PccbProblem& p) { return p.c(); })
      .def_property_readonly("constraint_values", [](const PccbProblem& p) { return p.g(); })
      .def("cbf_weights", &PccbProblem::cbf_weights)
      .def("beampattern",
           [](const PccbProblem& p, const Eigen::VectorXcd& w) {
             return Eigen::VectorXcd(beampattern(w, p.steering()).values);
           })
      .def("evaluate", [](const PccbProblem& p, const Eigen::VectorXcd& w) {
        return breakdown_dict(p.evaluate(w));
      })
      .def("gradient",
           [](const PccbProblem& p, const Eigen::VectorXcd& w) { return total_objective(w, p).second; },
           "Gradient of J_total with respect to [Re w; Im w].")
      .def("phase_center",
           [](const PccbProblem& p, const Eigen::VectorXcd& w) { return pco_dict(p.phase_center(w)); })
      .def("feasible_init",
           [](const PccbProblem& p, std::uint64_t seed, double scale) {
             return feasible_init(seed, p.c(), p.g(), scale);
           },
           py::arg("seed"), py::arg("scale"))
      .def("solve",
           [](const PccbProblem& p, std::uint64_t seed, int max_iters, double step_tol,
              double kkt_tol, double init_scale) {
             const SolverConfig cfg = solver_config(1, seed, max_iters, step_tol, kkt_tol);
             OptimizationOutcome o;
             {
               py::gil_scoped_release nogil;
               o = solve_pccb(p, seed, cfg, init_scale);
             }
             return outcome_dict(o);
           },
           py::arg("seed") = 1, py::arg("max_iters") = 500, py::arg("step_tol") = 1e-9,
           py::arg("kkt_tol") = 1e-6, py::arg("init_scale") = 0.0)
      .def("multi_start",
           [](const PccbProblem& p, int restarts, std::uint64_t seed, int threads, int max_iters,
              double step_tol, double kkt_tol, double init_scale) {
             const SolverConfig cfg = solver_config(restarts, seed, max_iters, step_tol, kkt_tol);
             MultiStartResult r;
             {
               py::gil_scoped_release nogil;
               r = multi_start(p, cfg, threads, init_scale);
             }
             py::dict d;
             d["best"] = outcome_dict(r.best);
             py::list all;
             for (const auto& o : r.all) all.append(outcome_dict(o));
             d["all"] = all;
             return d;
           },
           py::arg("restarts") = 50, py::arg("seed") = 1, py::arg("threads") = 1,
           py::arg("max_iters") = 500, py::arg("step_tol") = 1e-9, py::arg("kkt_tol") = 1e-6,
           py::arg("init_scale") = 0.0);

  m.def("run_comparison",
        [](const std::string& config_text, const std::string& out_dir) {
          std::istringstream in(config_text);
          const ExperimentConfig cfg = parse_config(in);
          ComparisonRun run;
          StatsBundle stats;
          {
            py::gil_scoped_release nogil;
            run = run_comparison(cfg);
            stats = aggregate_stats(run.records, cfg.sr_edges_deg, cfg.hist_bin_width_m);
            if (!out_dir.empty()) export_outputs(run, stats, cfg, out_dir);
          }
          py::list records;
          for (const auto& r : run.records) records.append(record_dict(r));
          py::dict d;
          d["records"] = records;
          d["median_ratio"] = stats.median_ratio;
          d["stats_json"] = stats.to_json();
          std::ostringstream csv;
          write_records_csv(csv, run.records);
          d["records_csv"] = csv.str();
          return d;
        },
        py::arg("config_text") = "", py::arg("out_dir") = "",
        "CBF vs multi-start PCCB for every configured look direction. The config uses the "
        "same key = value format as the command-line tool.");

  m.def("default_config", [] { return ExperimentConfig{}.echo(); },
        "Default experiment config as key = value text.");
}
