// config.hpp
// Flat key-value run configuration: parsing with collected human-readable
// errors, a canonical content hash embedded in outputs, and builders for the
// simulation objects.

#pragma once

#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nchns/dynamics.hpp"
#include "nchns/grid.hpp"
#include "nchns/kernel.hpp"
#include "nchns/potential.hpp"
#include "nchns/steady.hpp"

namespace nchns {

struct config_error : std::runtime_error {
  std::vector<std::string> errors;
  explicit config_error(std::vector<std::string> errs)
      : std::runtime_error(join(errs)), errors(std::move(errs)) {}
  static std::string join(const std::vector<std::string>& errs) {
    std::string s = "configuration errors:";
    for (const auto& e : errs) s += "\n  " + e;
    return s;
  }
};

struct CoefficientSpec {
  std::string model = "constant";  // constant | affine
  double value = 1.0;
  double slope = 0.0;  // affine: c(s) = value + slope*s on [-1,1]

  bool constant() const { return model == "constant" || slope == 0.0; }
  double min_value() const { return value - std::abs(slope); }
  double max_value() const { return value + std::abs(slope); }
  std::function<double(double)> evaluator() const {
    const double v = value, sl = model == "affine" ? slope : 0.0;
    return [v, sl](double s) { return v + sl * s; };
  }
};

struct RunConfig {
  double Lx = 1.0, Ly = 1.0;
  int nx = 64, ny = 64;
  KernelSpec kernel;
  PotentialSpec potential;
  CoefficientSpec viscosity, mobility;
  std::string forcing_type = "zero";  // zero | solenoidal
  double forcing_amplitude = 0.0;
  std::string initial_type = "constant";  // constant | perturbed
  double initial_k = 0.0;
  double initial_amplitude = 0.0;
  unsigned initial_seed = 1;
  double dt = 1e-3;
  double T_end = 1.0;
  int sample_every = 1;
  double steady_tol = 1e-9;
  long steady_max_steps = 200000;
  double steady_perturb_amplitude = 0.05;
  double C_embed = 1.0;
  // user-supplied norms for the three-dimensional certificate formulas
  bool has_user_norms = false;
  double lambda1_user = 0.0;
  double h_dual_user = 0.0;
  std::string out_dir = ".";

  std::string hash;  // canonical FNV-1a content hash, set by the parser
};

namespace detail {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hash_pairs(const std::map<std::string, std::string>& kv) {
  std::string canon;
  for (const auto& [k, v] : kv) canon += k + "\x1f" + v + "\x1e";
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

}  // namespace detail

// Parses `key value` lines ('=' separators tolerated, '#' comments). Unknown
// keys, bad values, and structural violations are all reported together.
inline RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error({"cannot open config file: " + path});
  std::map<std::string, std::string> kv;
  std::vector<std::string> errs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const size_t hashpos = line.find('#');
    if (hashpos != std::string::npos) line.erase(hashpos);
    for (char& c : line)
      if (c == '=') c = ' ';
    std::istringstream ls(line);
    std::string key, val, extra;
    if (!(ls >> key)) continue;
    if (!(ls >> val)) {
      errs.push_back("line " + std::to_string(lineno) + ": key '" + key +
                     "' has no value");
      continue;
    }
    if (ls >> extra)
      errs.push_back("line " + std::to_string(lineno) + ": trailing token '" + extra +
                     "' after '" + key + " " + val + "'");
    if (kv.count(key))
      errs.push_back("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    kv[key] = val;
  }

  RunConfig cfg;
  auto take = [&](const std::string& key, auto& dst) {
    auto it = kv.find(key);
    if (it == kv.end()) return;
    std::istringstream vs(it->second);
    if (!(vs >> dst) || !vs.eof())
      errs.push_back("key '" + key + "': cannot parse value '" + it->second + "'");
    kv.erase(it);
  };

  take("grid.Lx", cfg.Lx);
  take("grid.Ly", cfg.Ly);
  take("grid.nx", cfg.nx);
  take("grid.ny", cfg.ny);
  std::string family = "gaussian";
  take("kernel.family", family);
  take("kernel.amplitude", cfg.kernel.amplitude);
  take("kernel.width", cfg.kernel.width);
  take("potential.theta", cfg.potential.theta);
  take("potential.theta_c", cfg.potential.theta_c);
  take("potential.delta", cfg.potential.delta);
  take("potential.q", cfg.potential.q);
  take("viscosity.model", cfg.viscosity.model);
  take("viscosity.value", cfg.viscosity.value);
  take("viscosity.slope", cfg.viscosity.slope);
  take("mobility.model", cfg.mobility.model);
  take("mobility.value", cfg.mobility.value);
  take("mobility.slope", cfg.mobility.slope);
  take("forcing.type", cfg.forcing_type);
  take("forcing.amplitude", cfg.forcing_amplitude);
  take("initial.type", cfg.initial_type);
  take("initial.k", cfg.initial_k);
  take("initial.amplitude", cfg.initial_amplitude);
  take("initial.seed", cfg.initial_seed);
  take("time.dt", cfg.dt);
  take("time.T_end", cfg.T_end);
  take("time.sample_every", cfg.sample_every);
  take("steady.tol", cfg.steady_tol);
  take("steady.max_steps", cfg.steady_max_steps);
  take("steady.perturb_amplitude", cfg.steady_perturb_amplitude);
  take("certify.C_embed", cfg.C_embed);
  cfg.has_user_norms = kv.count("certify.lambda1") && kv.count("certify.h_dual");
  take("certify.lambda1", cfg.lambda1_user);
  take("certify.h_dual", cfg.h_dual_user);
  take("output.dir", cfg.out_dir);
  for (const auto& entry : kv) errs.push_back("unknown key '" + entry.first + "'");

  try {
    cfg.kernel.family = kernel_family_from_string(family);
  } catch (const std::invalid_argument& e) {
    errs.push_back(e.what());
  }
  try {
    make_grid(cfg.Lx, cfg.Ly, cfg.nx, cfg.ny);
  } catch (const std::invalid_argument& e) {
    errs.push_back(e.what());
  }
  try {
    cfg.potential.validate();
  } catch (const std::invalid_argument& e) {
    errs.push_back(e.what());
  }
  for (const auto* co : {&cfg.viscosity, &cfg.mobility}) {
    const char* what = co == &cfg.viscosity ? "viscosity" : "mobility";
    if (co->model != "constant" && co->model != "affine")
      errs.push_back(std::string(what) + ".model must be 'constant' or 'affine'");
    if (!(co->min_value() > 0.0))
      errs.push_back(std::string(what) + " must be positive on [-1,1] (lower bound " +
                     std::to_string(co->min_value()) + ")");
  }
  if (cfg.forcing_type != "zero" && cfg.forcing_type != "solenoidal")
    errs.push_back("forcing.type must be 'zero' or 'solenoidal'");
  if (cfg.initial_type != "constant" && cfg.initial_type != "perturbed")
    errs.push_back("initial.type must be 'constant' or 'perturbed'");
  if (!(cfg.initial_k > -1.0 && cfg.initial_k < 1.0))
    errs.push_back("initial.k must lie in (-1,1)");
  if (!(cfg.dt > 0.0)) errs.push_back("time.dt must be positive");
  if (cfg.T_end < 0.0) errs.push_back("time.T_end must be nonnegative");
  if (cfg.sample_every < 1) errs.push_back("time.sample_every must be >= 1");
  if (!(cfg.steady_tol > 0.0)) errs.push_back("steady.tol must be positive");
  if (cfg.steady_max_steps < 1) errs.push_back("steady.max_steps must be >= 1");
  if (!(cfg.kernel.width > 0.0)) errs.push_back("kernel.width must be positive");
  if (cfg.kernel.amplitude < 0.0) errs.push_back("kernel.amplitude must be >= 0");
  if (cfg.C_embed < 1.0) errs.push_back("certify.C_embed must be >= 1");

  if (!errs.empty()) throw config_error(std::move(errs));

  std::map<std::string, std::string> canon;
  std::ifstream in2(path);
  while (std::getline(in2, line)) {
    const size_t hashpos = line.find('#');
    if (hashpos != std::string::npos) line.erase(hashpos);
    for (char& c : line)
      if (c == '=') c = ' ';
    std::istringstream ls(line);
    std::string key, val;
    if (ls >> key >> val) canon[key] = val;
  }
  cfg.hash = detail::hash_pairs(canon);
  return cfg;
}

inline GridSpec config_grid(const RunConfig& cfg) {
  return make_grid(cfg.Lx, cfg.Ly, cfg.nx, cfg.ny);
}

// solenoidal forcing: amplitude * curl(sin^2 stream), discretely div-free
inline VectorField config_forcing(const RunConfig& cfg, const GridSpec& g) {
  if (cfg.forcing_type == "zero" || cfg.forcing_amplitude == 0.0) return VectorField();
  VectorField h = curl_of_stream(g, [&](double x, double y) {
    const double sx = std::sin(M_PI * x / g.Lx);
    const double sy = std::sin(M_PI * y / g.Ly);
    return cfg.forcing_amplitude * sx * sx * sy * sy;
  });
  return h;
}

inline SimParams config_sim_params(const RunConfig& cfg, const GridSpec& g) {
  SimParams p;
  p.nu = cfg.viscosity.evaluator();
  p.m = cfg.mobility.evaluator();
  p.nu_min = cfg.viscosity.min_value();
  p.nu_max = cfg.viscosity.max_value();
  p.m_min = cfg.mobility.min_value();
  p.m_max = cfg.mobility.max_value();
  p.dt = cfg.dt;
  p.T_end = cfg.T_end;
  p.h = config_forcing(cfg, g);
  return p;
}

// constant-k or seeded zero-mean perturbation around k
inline State config_initial_state(const RunConfig& cfg, const GridSpec& g,
                                  unsigned seed_override = 0) {
  State s;
  s.t = 0.0;
  s.u = VectorField(g);
  s.phi = ScalarField(g, cfg.initial_k);
  if (cfg.initial_type == "perturbed" && cfg.initial_amplitude > 0.0) {
    const unsigned seed = seed_override ? seed_override : cfg.initial_seed;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-cfg.initial_amplitude,
                                                cfg.initial_amplitude);
    for (double& v : s.phi.values) v += dist(rng);
    s.phi = project_zero_mean(s.phi);
    for (double& v : s.phi.values) v += cfg.initial_k;
  }
  return s;
}

}  // namespace nchns
