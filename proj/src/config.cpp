#include "pccb/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <set>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace pccb {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double d = 0.0;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || trim(v.substr(pos)).size() != 0) {
    throw std::invalid_argument("config key '" + key + "': '" + v + "' is not a number");
  }
  return d;
}

long long parse_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long i = 0;
  try {
    i = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || trim(v.substr(pos)).size() != 0) {
    throw std::invalid_argument("config key '" + key + "': '" + v + "' is not an integer");
  }
  return i;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_double(key, item));
  }
  return out;
}

// "theta phi; theta phi" in degrees.
std::vector<Angles> parse_angle_pairs(const std::string& key, const std::string& v) {
  std::vector<Angles> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ';')) {
    item = trim(item);
    if (item.empty()) continue;
    std::istringstream pair(item);
    std::string a;
    std::string b;
    std::string extra;
    pair >> a >> b;
    if (a.empty() || b.empty() || (pair >> extra)) {
      throw std::invalid_argument("config key '" + key + "': expected 'theta phi' pairs, got '" +
                                  item + "'");
    }
    out.push_back({parse_double(key, a) * kDeg, parse_double(key, b) * kDeg});
  }
  return out;
}

std::string format_angle_pairs(const std::vector<Angles>& dirs) {
  std::string s;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    if (i) s += "; ";
    s += fmt::format("{:.17g} {:.17g}", dirs[i].theta / kDeg, dirs[i].phi / kDeg);
  }
  return s;
}

std::string region_name(const Region& r) {
  switch (r.kind) {
    case Region::Kind::full_sphere:
      return "full_sphere";
    case Region::Kind::upper_hemisphere:
      return "upper_hemisphere";
    case Region::Kind::cap:
      return "cap";
  }
  return "upper_hemisphere";
}

std::string steering_name(SteeringPreset s) {
  switch (s) {
    case SteeringPreset::sky_grid:
      return "sky_grid";
    case SteeringPreset::quad:
      return "quad";
    case SteeringPreset::list:
      return "list";
  }
  return "sky_grid";
}

}  // namespace

ArrayGeometry ArraySpec::build() const {
  if (file) return read_geometry_file(*file);
  return build_grid_array(n_y, n_z, spacing);
}

std::vector<Angles> sky_grid() {
  std::vector<Angles> out{{0.0, 0.0}};
  const std::pair<double, int> rings[] = {{12.0, 4}, {24.0, 6}, {36.0, 8}, {48.0, 8}, {60.0, 10}};
  for (const auto& [alpha, count] : rings) {
    for (int j = 0; j < count; ++j) {
      const double beta = 2.0 * std::numbers::pi * j / count;
      out.push_back(angles_from_direction(direction_off_boresight(alpha * kDeg, beta)));
    }
  }
  return out;
}

std::vector<Angles> quad_preset() {
  return {{20.0 * kDeg, 0.0}, {0.0, 30.0 * kDeg}, {-40.0 * kDeg, 15.0 * kDeg},
          {35.0 * kDeg, -45.0 * kDeg}};
}

std::vector<Angles> ExperimentConfig::resolved_steering() const {
  switch (steering) {
    case SteeringPreset::sky_grid:
      return sky_grid();
    case SteeringPreset::quad:
      return quad_preset();
    case SteeringPreset::list:
      return steering_dirs;
  }
  return steering_dirs;
}

void ExperimentConfig::validate() const {
  if (!array.file && (array.n_y < 1 || array.n_z < 1 || !(array.spacing > 0.0))) {
    throw std::invalid_argument("array grid needs n_y, n_z >= 1 and a positive spacing");
  }
  if (!(frequency_hz > 0.0)) throw std::invalid_argument("frequency_hz must be positive");
  if (element.kind == ElementModel::Kind::cosine_power && !(element.exponent >= 0.0)) {
    throw std::invalid_argument("element_exponent must be >= 0");
  }
  if (sampling_k < 4) throw std::invalid_argument("sampling_k must be >= 4");
  if (region.kind == Region::Kind::cap &&
      !(region.max_angle > 0.0 && region.max_angle <= std::numbers::pi)) {
    throw std::invalid_argument("sampling_cap_deg must lie in (0, 180]");
  }
  if (resolved_steering().empty()) throw std::invalid_argument("no steering directions configured");
  for (const auto& a : resolved_steering()) {
    if (std::abs(a.phi) > std::numbers::pi / 2) {
      throw std::invalid_argument("steering elevation outside [-90, 90] degrees");
    }
  }
  for (const auto& a : null_dirs) {
    if (std::abs(a.phi) > std::numbers::pi / 2) {
      throw std::invalid_argument("null elevation outside [-90, 90] degrees");
    }
  }
  if (pccb.lambda_e < 0.0 || pccb.lambda_b < 0.0) {
    throw std::invalid_argument("lambda_e and lambda_b must be >= 0");
  }
  if (pccb.mask_threshold < 0.0 || pccb.mask_threshold >= 1.0) {
    throw std::invalid_argument("mask_threshold must lie in [0, 1)");
  }
  solver.validate();
  if (threads < 1) throw std::invalid_argument("threads must be >= 1");
  if (sr_edges_deg.size() < 2) throw std::invalid_argument("sr_edges_deg needs at least two edges");
  for (std::size_t i = 1; i < sr_edges_deg.size(); ++i) {
    if (!(sr_edges_deg[i] > sr_edges_deg[i - 1])) {
      throw std::invalid_argument("sr_edges_deg must be strictly increasing");
    }
  }
  if (!(hist_bin_width_m > 0.0)) throw std::invalid_argument("hist_bin_width_m must be positive");
}

std::string ExperimentConfig::echo() const {
  std::string s;
  auto line = [&s](std::string_view k, const std::string& v) { s += fmt::format("{} = {}\n", k, v); };
  auto num = [](double d) { return fmt::format("{}", d); };
  if (array.file) {
    line("array_file", array.file->string());
  } else {
    line("array_ny", std::to_string(array.n_y));
    line("array_nz", std::to_string(array.n_z));
    line("array_spacing_m", num(array.spacing));
  }
  line("frequency_hz", num(frequency_hz));
  line("element", element.kind == ElementModel::Kind::isotropic ? "isotropic" : "cosine_power");
  line("element_exponent", num(element.exponent));
  line("sampling_k", std::to_string(sampling_k));
  line("sampling_region", region_name(region));
  if (region.kind == Region::Kind::cap) line("sampling_cap_deg", num(region.max_angle / kDeg));
  line("steering", steering_name(steering));
  if (steering == SteeringPreset::list) line("steering_dirs_deg", format_angle_pairs(steering_dirs));
  if (!null_dirs.empty()) line("null_dirs_deg", format_angle_pairs(null_dirs));
  line("lambda_e", num(pccb.lambda_e));
  line("lambda_b", num(pccb.lambda_b));
  line("mask_threshold", num(pccb.mask_threshold));
  line("init_scale", num(init_scale));
  line("step_tol", num(solver.step_tol));
  line("kkt_tol", num(solver.kkt_tol));
  line("max_iters", std::to_string(solver.max_iters));
  line("merit_penalty_init", num(solver.merit_penalty_init));
  line("backtrack_factor", num(solver.backtrack_factor));
  line("restarts", std::to_string(solver.n_restarts));
  line("seed", std::to_string(solver.base_seed));
  line("threads", std::to_string(threads));
  line("out_dir", out_dir.string());
  std::string edges;
  for (std::size_t i = 0; i < sr_edges_deg.size(); ++i) {
    edges += (i ? ", " : "") + num(sr_edges_deg[i]);
  }
  line("sr_edges_deg", edges);
  line("hist_bin_width_m", num(hist_bin_width_m));
  return s;
}

ExperimentConfig parse_config(std::istream& in) {
  ExperimentConfig cfg;
  std::optional<double> cap_deg;

  using Setter = std::function<void(const std::string& key, const std::string& value)>;
  const std::map<std::string, Setter, std::less<>> setters = {
      {"array_ny", [&](auto& k, auto& v) { cfg.array.n_y = static_cast<int>(parse_int(k, v)); }},
      {"array_nz", [&](auto& k, auto& v) { cfg.array.n_z = static_cast<int>(parse_int(k, v)); }},
      {"array_spacing_m", [&](auto& k, auto& v) { cfg.array.spacing = parse_double(k, v); }},
      {"array_file", [&](auto&, auto& v) { cfg.array.file = v; }},
      {"frequency_hz", [&](auto& k, auto& v) { cfg.frequency_hz = parse_double(k, v); }},
      {"element",
       [&](auto& k, auto& v) {
         if (v == "isotropic") {
           cfg.element.kind = ElementModel::Kind::isotropic;
         } else if (v == "cosine_power") {
           cfg.element.kind = ElementModel::Kind::cosine_power;
         } else {
           throw std::invalid_argument("config key '" + k + "': unknown element model '" + v + "'");
         }
       }},
      {"element_exponent", [&](auto& k, auto& v) { cfg.element.exponent = parse_double(k, v); }},
      {"sampling_k", [&](auto& k, auto& v) { cfg.sampling_k = static_cast<int>(parse_int(k, v)); }},
      {"sampling_region",
       [&](auto& k, auto& v) {
         if (v == "full_sphere") {
           cfg.region = Region::full_sphere();
         } else if (v == "upper_hemisphere") {
           cfg.region = Region::upper_hemisphere();
         } else if (v == "cap") {
           cfg.region.kind = Region::Kind::cap;
         } else {
           throw std::invalid_argument("config key '" + k + "': unknown region '" + v + "'");
         }
       }},
      {"sampling_cap_deg", [&](auto& k, auto& v) { cap_deg = parse_double(k, v); }},
      {"steering",
       [&](auto& k, auto& v) {
         if (v == "sky_grid") {
           cfg.steering = SteeringPreset::sky_grid;
         } else if (v == "quad") {
           cfg.steering = SteeringPreset::quad;
         } else if (v == "list") {
           cfg.steering = SteeringPreset::list;
         } else {
           throw std::invalid_argument("config key '" + k + "': unknown steering preset '" + v + "'");
         }
       }},
      {"steering_dirs_deg", [&](auto& k, auto& v) { cfg.steering_dirs = parse_angle_pairs(k, v); }},
      {"null_dirs_deg", [&](auto& k, auto& v) { cfg.null_dirs = parse_angle_pairs(k, v); }},
      {"lambda_e", [&](auto& k, auto& v) { cfg.pccb.lambda_e = parse_double(k, v); }},
      {"lambda_b", [&](auto& k, auto& v) { cfg.pccb.lambda_b = parse_double(k, v); }},
      {"mask_threshold", [&](auto& k, auto& v) { cfg.pccb.mask_threshold = parse_double(k, v); }},
      {"init_scale", [&](auto& k, auto& v) { cfg.init_scale = parse_double(k, v); }},
      {"step_tol", [&](auto& k, auto& v) { cfg.solver.step_tol = parse_double(k, v); }},
      {"kkt_tol", [&](auto& k, auto& v) { cfg.solver.kkt_tol = parse_double(k, v); }},
      {"max_iters", [&](auto& k, auto& v) { cfg.solver.max_iters = static_cast<int>(parse_int(k, v)); }},
      {"merit_penalty_init",
       [&](auto& k, auto& v) { cfg.solver.merit_penalty_init = parse_double(k, v); }},
      {"backtrack_factor", [&](auto& k, auto& v) { cfg.solver.backtrack_factor = parse_double(k, v); }},
      {"restarts", [&](auto& k, auto& v) { cfg.solver.n_restarts = static_cast<int>(parse_int(k, v)); }},
      {"seed",
       [&](auto& k, auto& v) {
         const long long s = parse_int(k, v);
         if (s < 0) throw std::invalid_argument("config key 'seed' must be non-negative");
         cfg.solver.base_seed = static_cast<std::uint64_t>(s);
       }},
      {"threads", [&](auto& k, auto& v) { cfg.threads = static_cast<int>(parse_int(k, v)); }},
      {"out_dir", [&](auto&, auto& v) { cfg.out_dir = v; }},
      {"sr_edges_deg", [&](auto& k, auto& v) { cfg.sr_edges_deg = parse_list(k, v); }},
      {"hist_bin_width_m", [&](auto& k, auto& v) { cfg.hist_bin_width_m = parse_double(k, v); }},
  };

  std::set<std::string> seen;
  std::string raw;
  int lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument(fmt::format("config line {}: expected 'key = value'", lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw std::invalid_argument(fmt::format("config line {}: unknown key '{}'", lineno, key));
    }
    if (!seen.insert(key).second) {
      throw std::invalid_argument(fmt::format("config line {}: duplicate key '{}'", lineno, key));
    }
    it->second(key, value);
  }

  if (cfg.region.kind == Region::Kind::cap) {
    if (!cap_deg) throw std::invalid_argument("sampling_region = cap requires sampling_cap_deg");
    cfg.region.max_angle = *cap_deg * kDeg;
  } else if (cap_deg) {
    throw std::invalid_argument("sampling_cap_deg is only valid with sampling_region = cap");
  }
  if (cfg.steering != SteeringPreset::list && seen.count("steering_dirs_deg")) {
    throw std::invalid_argument("steering_dirs_deg requires steering = list");
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path.string());
  return parse_config(in);
}

}  // namespace pccb
