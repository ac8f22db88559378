#include "pccb/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

namespace pccb {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::string_view kRecordsHeader =
    "dir_idx,theta_rad,phi_rad,method,seed,pco_x_m,pco_y_m,pco_z_m,pco_norm_m,j_pc,j_e,j_b,"
    "gain_look_abs,gain_null_abs_max,status,iterations";

struct Gains {
  double look = kNaN;
  double null_max = kNaN;
};

Gains constraint_gains(const PccbProblem& p, const Eigen::VectorXcd& w) {
  Gains g;
  const Eigen::VectorXcd r = (p.c().adjoint() * w).conjugate();
  g.look = std::abs(r(0));
  const auto l = static_cast<Eigen::Index>(p.look_dirs().size());
  for (Eigen::Index j = l; j < r.size(); ++j) {
    g.null_max = std::isnan(g.null_max) ? std::abs(r(j)) : std::max(g.null_max, std::abs(r(j)));
  }
  return g;
}

ComparisonRecord base_record(int dir_idx, Angles look, Method m) {
  ComparisonRecord r;
  r.dir_idx = dir_idx;
  r.theta = look.theta;
  r.phi = look.phi;
  r.method = m;
  return r;
}

ComparisonRecord failed_record(int dir_idx, Angles look, Method m, std::uint64_t seed) {
  ComparisonRecord r = base_record(dir_idx, look, m);
  r.seed = seed;
  r.pco.setConstant(kNaN);
  r.pco_norm = r.j_pc = r.j_e = r.j_b = r.gain_look_abs = r.gain_null_abs_max = kNaN;
  r.status = std::string(kFailedStatus);
  return r;
}

ComparisonRecord cbf_record(const PccbProblem& p, int dir_idx, Angles look,
                            const Eigen::VectorXcd& w) {
  ComparisonRecord r = base_record(dir_idx, look, Method::cbf);
  const PhaseCenterResult pco = p.phase_center(w);
  const ObjectiveBreakdown b = p.evaluate(w);
  const Gains g = constraint_gains(p, w);
  r.pco = pco.pc;
  r.pco_norm = pco.norm;
  r.j_pc = b.pc;
  r.j_e = b.e;
  r.j_b = b.b;
  r.gain_look_abs = g.look;
  r.gain_null_abs_max = g.null_max;
  r.status = std::string(kClosedFormStatus);
  return r;
}

ComparisonRecord pccb_record(const PccbProblem& p, int dir_idx, Angles look,
                             const OptimizationOutcome& o) {
  ComparisonRecord r = base_record(dir_idx, look, Method::pccb);
  const Gains g = constraint_gains(p, o.w);
  r.seed = o.seed;
  r.pco = o.pco.pc;
  r.pco_norm = o.pco.norm;
  r.j_pc = o.breakdown.pc;
  r.j_e = o.breakdown.e;
  r.j_b = o.breakdown.b;
  r.gain_look_abs = g.look;
  r.gain_null_abs_max = g.null_max;
  r.status = std::string(to_string(o.status));
  r.iterations = o.iterations;
  return r;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

double to_double(const std::string& s, int lineno) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    throw std::invalid_argument(fmt::format("records line {}: bad number '{}'", lineno, s));
  }
  return d;
}

long long to_int(const std::string& s, int lineno) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != s.size()) {
    throw std::invalid_argument(fmt::format("records line {}: bad integer '{}'", lineno, s));
  }
  return v;
}

nlohmann::ordered_json five_json(const FiveNumber& f) {
  nlohmann::ordered_json j;
  j["count"] = f.count;
  j["min"] = f.min;
  j["q1"] = f.q1;
  j["median"] = f.median;
  j["q3"] = f.q3;
  j["max"] = f.max;
  return j;
}

nlohmann::ordered_json hist_json(const Histogram& h) {
  nlohmann::ordered_json j;
  j["bin_width_m"] = h.bin_width;
  j["counts"] = h.counts;
  j["total"] = h.total();
  return j;
}

nlohmann::ordered_json points_json(const std::vector<Eigen::Vector2d>& pts) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& p : pts) j.push_back({p.x(), p.y()});
  return j;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  return f;
}

void close_out(std::ofstream& f, const std::filesystem::path& path) {
  f.close();
  if (!f) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

std::string_view to_string(Method m) { return m == Method::cbf ? "cbf" : "pccb"; }

bool ComparisonRecord::converged() const {
  return status == to_string(SolverStatus::converged_step_tol) ||
         status == to_string(SolverStatus::converged_kkt);
}

PccbProblem make_problem(const ExperimentConfig& cfg, const ArrayGeometry& geom,
                         const DirectionSet& dirs, Angles look) {
  std::vector<Eigen::Vector3d> nulls;
  for (const auto& a : cfg.null_dirs) nulls.push_back(direction_from_angles(a));
  return PccbProblem(geom, Wavefield::from_frequency(cfg.frequency_hz), dirs, cfg.element,
                     {direction_from_angles(look)}, std::move(nulls), cfg.pccb);
}

namespace {

ComparisonRun run_impl(const ExperimentConfig& cfg, bool with_pccb, const ProgressFn& progress) {
  cfg.validate();
  const ArrayGeometry geom = cfg.array.build();
  const DirectionSet dirs = sample_equal_area(cfg.sampling_k, cfg.region);
  const std::vector<Angles> looks = cfg.resolved_steering();

  ComparisonRun run;
  for (std::size_t i = 0; i < looks.size(); ++i) {
    const int idx = static_cast<int>(i);
    if (progress) progress(idx, static_cast<int>(looks.size()));
    DirectionResult dr;
    dr.dir_idx = idx;
    dr.look = looks[i];
    bool cbf_done = false;
    try {
      const PccbProblem problem = make_problem(cfg, geom, dirs, looks[i]);
      dr.cbf_w = problem.cbf_weights();
      run.records.push_back(cbf_record(problem, idx, looks[i], dr.cbf_w));
      cbf_done = true;
      if (with_pccb) {
        MultiStartResult ms = multi_start(problem, cfg.solver, cfg.threads, cfg.init_scale);
        for (const auto& o : ms.all) run.records.push_back(pccb_record(problem, idx, looks[i], o));
        dr.pccb_best_w = ms.best.w;
        dr.outcomes = std::move(ms.all);
      }
      dr.ok = true;
    } catch (const std::exception& e) {
      dr.error = e.what();
      if (!cbf_done) run.records.push_back(failed_record(idx, looks[i], Method::cbf, 0));
      if (with_pccb) {
        run.records.push_back(failed_record(idx, looks[i], Method::pccb, cfg.solver.base_seed));
      }
    }
    run.directions.push_back(std::move(dr));
  }
  sort_records(run.records);
  return run;
}

}  // namespace

ComparisonRun run_comparison(const ExperimentConfig& cfg, const ProgressFn& progress) {
  return run_impl(cfg, true, progress);
}

ComparisonRun run_steering(const ExperimentConfig& cfg) { return run_impl(cfg, false, {}); }

void sort_records(std::vector<ComparisonRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.dir_idx != b.dir_idx) return a.dir_idx < b.dir_idx;
    if (a.method != b.method) return a.method == Method::cbf;
    return a.seed < b.seed;
  });
}

void write_records_csv(std::ostream& out, const std::vector<ComparisonRecord>& records) {
  out << kRecordsHeader << '\n';
  for (const auto& r : records) {
    out << fmt::format(
        "{},{:.17g},{:.17g},{},{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},"
        "{:.17g},{},{}\n",
        r.dir_idx, r.theta, r.phi, to_string(r.method), r.seed, r.pco.x(), r.pco.y(), r.pco.z(),
        r.pco_norm, r.j_pc, r.j_e, r.j_b, r.gain_look_abs, r.gain_null_abs_max, r.status,
        r.iterations);
  }
}

std::vector<ComparisonRecord> read_records_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kRecordsHeader) {
    throw std::invalid_argument("records.csv: unexpected header");
  }
  std::vector<ComparisonRecord> out;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 16) {
      throw std::invalid_argument(
          fmt::format("records line {}: expected 16 fields, got {}", lineno, f.size()));
    }
    ComparisonRecord r;
    r.dir_idx = static_cast<int>(to_int(f[0], lineno));
    r.theta = to_double(f[1], lineno);
    r.phi = to_double(f[2], lineno);
    if (f[3] == "cbf") {
      r.method = Method::cbf;
    } else if (f[3] == "pccb") {
      r.method = Method::pccb;
    } else {
      throw std::invalid_argument(fmt::format("records line {}: unknown method '{}'", lineno, f[3]));
    }
    r.seed = static_cast<std::uint64_t>(to_int(f[4], lineno));
    r.pco = {to_double(f[5], lineno), to_double(f[6], lineno), to_double(f[7], lineno)};
    r.pco_norm = to_double(f[8], lineno);
    r.j_pc = to_double(f[9], lineno);
    r.j_e = to_double(f[10], lineno);
    r.j_b = to_double(f[11], lineno);
    r.gain_look_abs = to_double(f[12], lineno);
    r.gain_null_abs_max = to_double(f[13], lineno);
    r.status = f[14];
    r.iterations = static_cast<int>(to_int(f[15], lineno));
    out.push_back(std::move(r));
  }
  return out;
}

FiveNumber five_number(std::vector<double> v) {
  FiveNumber f;
  f.count = v.size();
  if (v.empty()) {
    f.min = f.q1 = f.median = f.q3 = f.max = kNaN;
    return f;
  }
  std::sort(v.begin(), v.end());
  auto q = [&v](double p) {
    const double h = (static_cast<double>(v.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  f.min = v.front();
  f.q1 = q(0.25);
  f.median = q(0.5);
  f.q3 = q(0.75);
  f.max = v.back();
  return f;
}

std::size_t Histogram::total() const {
  std::size_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram histogram(const std::vector<double>& values, double bin_width) {
  if (!(bin_width > 0.0)) throw std::invalid_argument("histogram bin width must be positive");
  Histogram h;
  h.bin_width = bin_width;
  for (double v : values) {
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("histogram value out of range");
    const auto bin = static_cast<std::size_t>(std::floor(v / bin_width));
    if (bin >= h.counts.size()) h.counts.resize(bin + 1, 0);
    ++h.counts[bin];
  }
  return h;
}

StatsBundle aggregate_stats(const std::vector<ComparisonRecord>& records,
                            const std::vector<double>& sr_edges_deg, double bin_width) {
  if (sr_edges_deg.size() < 2) throw std::invalid_argument("need at least two steering-range edges");
  StatsBundle s;
  std::vector<double> all_cbf;
  std::vector<double> all_pccb;
  std::map<int, std::vector<const ComparisonRecord*>> by_dir;
  for (const auto& r : records) {
    by_dir[r.dir_idx].push_back(&r);
    if (!std::isfinite(r.pco_norm)) {
      ++s.excluded_non_finite;
      continue;
    }
    const bool cbf = r.method == Method::cbf;
    (cbf ? s.xy_cbf : s.xy_pccb).emplace_back(r.pco.x(), r.pco.y());
    (cbf ? s.yz_cbf : s.yz_pccb).emplace_back(r.pco.y(), r.pco.z());
    (cbf ? all_cbf : all_pccb).push_back(r.pco_norm);
  }
  s.hist_all_cbf = histogram(all_cbf, bin_width);
  s.hist_all_pccb = histogram(all_pccb, bin_width);

  const std::size_t n_bins = sr_edges_deg.size() - 1;
  struct BinValues {
    std::vector<double> cbf, all, best;
  };
  std::vector<BinValues> bins(n_bins);
  std::vector<double> best_cbf;
  std::vector<double> best_pccb;
  std::vector<double> ratios;
  constexpr double kEdgeEps = 1e-9;

  for (const auto& [idx, rows] : by_dir) {
    DirectionStats d;
    d.dir_idx = idx;
    d.theta = rows.front()->theta;
    d.phi = rows.front()->phi;
    d.steering_range_deg =
        angular_distance(direction_from_angles(d.theta, d.phi), Eigen::Vector3d::UnitX()) / kDeg;
    d.cbf_norm = kNaN;
    d.pccb_best_norm = kNaN;
    std::vector<double> pccb_norms;
    double best_conv = kNaN;
    double best_any = kNaN;
    for (const auto* r : rows) {
      if (r->method == Method::cbf) {
        d.cbf_norm = r->pco_norm;
        continue;
      }
      ++d.n_runs;
      if (r->converged()) ++d.n_converged;
      if (!std::isfinite(r->pco_norm)) continue;
      pccb_norms.push_back(r->pco_norm);
      if (std::isnan(best_any) || r->pco_norm < best_any) best_any = r->pco_norm;
      if (r->converged() && (std::isnan(best_conv) || r->pco_norm < best_conv)) {
        best_conv = r->pco_norm;
      }
    }
    d.pccb_best_norm = std::isnan(best_conv) ? best_any : best_conv;
    d.pccb_spread = five_number(pccb_norms);
    d.ratio = d.cbf_norm / d.pccb_best_norm;
    if (std::isfinite(d.cbf_norm)) best_cbf.push_back(d.cbf_norm);
    if (std::isfinite(d.pccb_best_norm)) best_pccb.push_back(d.pccb_best_norm);
    if (std::isfinite(d.ratio)) ratios.push_back(d.ratio);

    const double sr = d.steering_range_deg;
    if (sr >= sr_edges_deg.front() - kEdgeEps && sr <= sr_edges_deg.back() + kEdgeEps) {
      std::size_t b = 0;
      while (b + 1 < n_bins && sr >= sr_edges_deg[b + 1] - kEdgeEps) ++b;
      if (std::isfinite(d.cbf_norm)) bins[b].cbf.push_back(d.cbf_norm);
      if (std::isfinite(d.pccb_best_norm)) bins[b].best.push_back(d.pccb_best_norm);
      bins[b].all.insert(bins[b].all.end(), pccb_norms.begin(), pccb_norms.end());
    }
    s.per_direction.push_back(std::move(d));
  }
  s.hist_best_cbf = histogram(best_cbf, bin_width);
  s.hist_best_pccb = histogram(best_pccb, bin_width);
  for (std::size_t b = 0; b < n_bins; ++b) {
    SrBin bin;
    bin.lo_deg = sr_edges_deg[b];
    bin.hi_deg = sr_edges_deg[b + 1];
    bin.cbf = five_number(bins[b].cbf);
    bin.pccb_all = five_number(bins[b].all);
    bin.pccb_best = five_number(bins[b].best);
    s.sr_bins.push_back(bin);
  }
  s.median_ratio = five_number(ratios).median;
  return s;
}

std::string StatsBundle::to_json() const {
  nlohmann::ordered_json j;
  j["projections"]["xy"]["cbf"] = points_json(xy_cbf);
  j["projections"]["xy"]["pccb"] = points_json(xy_pccb);
  j["projections"]["yz"]["cbf"] = points_json(yz_cbf);
  j["projections"]["yz"]["pccb"] = points_json(yz_pccb);
  j["histograms"]["all_runs"]["cbf"] = hist_json(hist_all_cbf);
  j["histograms"]["all_runs"]["pccb"] = hist_json(hist_all_pccb);
  j["histograms"]["best_of_restarts"]["cbf"] = hist_json(hist_best_cbf);
  j["histograms"]["best_of_restarts"]["pccb"] = hist_json(hist_best_pccb);
  j["excluded_non_finite"] = excluded_non_finite;
  auto& sr = j["steering_range"] = nlohmann::ordered_json::array();
  for (const auto& b : sr_bins) {
    nlohmann::ordered_json e;
    e["lo_deg"] = b.lo_deg;
    e["hi_deg"] = b.hi_deg;
    e["cbf"] = five_json(b.cbf);
    e["pccb_all"] = five_json(b.pccb_all);
    e["pccb_best"] = five_json(b.pccb_best);
    sr.push_back(std::move(e));
  }
  auto& pd = j["per_direction"] = nlohmann::ordered_json::array();
  for (const auto& d : per_direction) {
    nlohmann::ordered_json e;
    e["dir_idx"] = d.dir_idx;
    e["theta_rad"] = d.theta;
    e["phi_rad"] = d.phi;
    e["steering_range_deg"] = d.steering_range_deg;
    e["cbf_norm_m"] = d.cbf_norm;
    e["pccb_best_norm_m"] = d.pccb_best_norm;
    e["ratio"] = d.ratio;
    e["pccb_spread"] = five_json(d.pccb_spread);
    e["n_converged"] = d.n_converged;
    e["n_runs"] = d.n_runs;
    pd.push_back(std::move(e));
  }
  j["median_ratio_cbf_over_best"] = median_ratio;
  return j.dump(2) + "\n";
}

void write_beampattern_csv(std::ostream& out, const DirectionSet& dirs,
                           const Eigen::VectorXcd& pattern) {
  if (pattern.size() != dirs.size()) throw std::invalid_argument("pattern length mismatch");
  out << "k,theta,phi,lambert_a,lambert_b,re,im,abs,phase\n";
  for (Eigen::Index k = 0; k < dirs.size(); ++k) {
    double a = kNaN;
    double b = kNaN;
    try {
      std::tie(a, b) = lambert_project(dirs.direction(k));
    } catch (const std::invalid_argument&) {
    }
    const cd v = pattern(k);
    out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", k,
                       dirs.angles()(k, 0), dirs.angles()(k, 1), a, b, v.real(), v.imag(),
                       std::abs(v), std::arg(v));
  }
}

void export_outputs(const ComparisonRun& run, const StatsBundle& bundle,
                    const ExperimentConfig& cfg, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + out_dir.string());

  auto write = [&](const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = out_dir / name;
    std::ofstream f = open_out(path);
    body(f);
    close_out(f, path);
  };

  write("records.csv", [&](std::ostream& o) { write_records_csv(o, run.records); });
  write("stats.json", [&](std::ostream& o) { o << bundle.to_json(); });
  write("config.txt", [&](std::ostream& o) { o << cfg.echo(); });

  const DirectionSet dirs = sample_equal_area(cfg.sampling_k, cfg.region);
  write("directions.csv", [&](std::ostream& o) { dirs.write_csv(o); });
  write("outcomes.jsonl", [&](std::ostream& o) {
    for (const auto& d : run.directions) {
      for (const auto& oc : d.outcomes) {
        o << fmt::format("{{\"dir_idx\":{},\"outcome\":{}}}\n", d.dir_idx, oc.to_json_line());
      }
    }
  });

  const ArrayGeometry geom = cfg.array.build();
  const SteeringMatrix v(geom, Wavefield::from_frequency(cfg.frequency_hz).wavelength(), dirs,
                         cfg.element);
  for (const auto& d : run.directions) {
    if (!d.ok) continue;
    const std::pair<Method, const Eigen::VectorXcd*> weights[] = {{Method::cbf, &d.cbf_w},
                                                                  {Method::pccb, &d.pccb_best_w}};
    for (const auto& [m, w] : weights) {
      if (w->size() == 0) continue;
      write(fmt::format("beampattern_{}_{}.csv", d.dir_idx, to_string(m)), [&](std::ostream& o) {
        write_beampattern_csv(o, dirs, beampattern(*w, v).values);
      });
    }
  }
}

}  // namespace pccb
