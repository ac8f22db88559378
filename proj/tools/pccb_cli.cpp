// pccb: conventional vs phase-center-constrained beamforming experiments.
//
//   pccb steer  [--config c] [--out dir]                  CBF only
//   pccb pccb   [--config c] [--theta-deg t --phi-deg p]  one look direction
//   pccb sweep  [--config c] [--seed s] [--restarts r]    full comparison
//   pccb stats  --records records.csv [--config c]        re-aggregate

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "pccb/config.hpp"
#include "pccb/experiment.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<long long> seed;
  std::optional<int> restarts;
  std::optional<std::string> out;
  std::optional<int> threads;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "key = value experiment config")->check(CLI::ExistingFile);
  app->add_option("--seed", f.seed, "base seed for the random restarts")->check(CLI::NonNegativeNumber);
  app->add_option("--restarts", f.restarts, "random restarts per direction")->check(CLI::PositiveNumber);
  app->add_option("--out", f.out, "output directory");
  app->add_option("--threads", f.threads, "worker threads for restarts")->check(CLI::PositiveNumber);
}

pccb::ExperimentConfig resolve(const CommonFlags& f) {
  pccb::ExperimentConfig cfg = f.config.empty() ? pccb::ExperimentConfig{} : pccb::load_config(f.config);
  if (f.seed) cfg.solver.base_seed = static_cast<std::uint64_t>(*f.seed);
  if (f.restarts) cfg.solver.n_restarts = *f.restarts;
  if (f.out) cfg.out_dir = *f.out;
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  return cfg;
}

void summarize(const pccb::StatsBundle& s) {
  for (const auto& d : s.per_direction) {
    std::cout << fmt::format(
        "dir {:3d}  SR {:5.1f} deg  CBF PCO {:.3e} m  PCCB best {:.3e} m  ratio {:6.2f}  "
        "converged {}/{}\n",
        d.dir_idx, d.steering_range_deg, d.cbf_norm, d.pccb_best_norm, d.ratio, d.n_converged,
        d.n_runs);
  }
  if (!s.per_direction.empty() && s.per_direction.front().n_runs > 0) {
    std::cout << fmt::format("median CBF/PCCB-best PCO ratio: {:.3f}\n", s.median_ratio);
  }
}

int run_and_export(const pccb::ExperimentConfig& cfg, bool with_pccb) {
  const auto progress = [](int i, int n) { std::cerr << fmt::format("\rdirection {}/{}", i + 1, n) << std::flush; };
  const pccb::ComparisonRun run =
      with_pccb ? pccb::run_comparison(cfg, progress) : pccb::run_steering(cfg);
  if (with_pccb) std::cerr << '\n';
  const pccb::StatsBundle stats =
      pccb::aggregate_stats(run.records, cfg.sr_edges_deg, cfg.hist_bin_width_m);
  pccb::export_outputs(run, stats, cfg, cfg.out_dir);
  summarize(stats);
  int failures = 0;
  for (const auto& d : run.directions) {
    if (!d.ok) {
      std::cerr << fmt::format("direction {} failed: {}\n", d.dir_idx, d.error);
      ++failures;
    }
  }
  std::cout << "wrote " << cfg.out_dir.string() << '\n';
  return failures == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-center-constrained beamforming experiments"};
  app.require_subcommand(1);

  CommonFlags steer_flags;
  CommonFlags pccb_flags;
  CommonFlags sweep_flags;
  CommonFlags stats_flags;
  std::optional<double> theta_deg;
  std::optional<double> phi_deg;
  std::string records_path;

  auto* steer = app.add_subcommand("steer", "conventional beamforming PCO for each look direction");
  add_common(steer, steer_flags);

  auto* single = app.add_subcommand("pccb", "multi-start PCCB for a single look direction");
  add_common(single, pccb_flags);
  auto* theta_opt = single->add_option("--theta-deg", theta_deg, "look azimuth in degrees");
  auto* phi_opt = single->add_option("--phi-deg", phi_deg, "look elevation in degrees");
  theta_opt->needs(phi_opt);
  phi_opt->needs(theta_opt);

  auto* sweep = app.add_subcommand("sweep", "CBF vs PCCB over all configured look directions");
  add_common(sweep, sweep_flags);

  auto* stats = app.add_subcommand("stats", "aggregate statistics from an existing records.csv");
  add_common(stats, stats_flags);
  stats->add_option("--records", records_path, "records.csv to aggregate")
      ->required()
      ->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (steer->parsed()) return run_and_export(resolve(steer_flags), false);
    if (sweep->parsed()) return run_and_export(resolve(sweep_flags), true);
    if (single->parsed()) {
      pccb::ExperimentConfig cfg = resolve(pccb_flags);
      if (theta_deg) {
        constexpr double deg = std::numbers::pi / 180.0;
        cfg.steering = pccb::SteeringPreset::list;
        cfg.steering_dirs = {{*theta_deg * deg, *phi_deg * deg}};
      } else {
        cfg.steering = pccb::SteeringPreset::list;
        cfg.steering_dirs = {cfg.resolved_steering().front()};
      }
      cfg.validate();
      return run_and_export(cfg, true);
    }
    if (stats->parsed()) {
      const pccb::ExperimentConfig cfg = resolve(stats_flags);
      std::ifstream in(records_path);
      if (!in) throw std::runtime_error("cannot open " + records_path);
      const auto records = pccb::read_records_csv(in);
      const pccb::StatsBundle s = pccb::aggregate_stats(records, cfg.sr_edges_deg, cfg.hist_bin_width_m);
      const std::filesystem::path out = stats_flags.out.value_or(".");
      std::filesystem::create_directories(out);
      std::ofstream f(out / "stats.json", std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + (out / "stats.json").string());
      f << s.to_json();
      summarize(s);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
