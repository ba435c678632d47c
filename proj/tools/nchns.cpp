// nchns: command-line driver for the nonlocal phase-field / flow laboratory.
// Subcommands: validate, steady, evolve, certify, decay.
// Exit codes: 0 success, 2 config/validation, 3 numerical non-convergence,
// 4 certificate refusal / conditions not met.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include "nchns/analysis.hpp"
#include "nchns/config.hpp"
#include "nchns/dynamics.hpp"
#include "nchns/field_io.hpp"
#include "nchns/steady.hpp"

namespace fs = std::filesystem;
using namespace nchns;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;
constexpr int kExitRefusal = 4;

struct Loaded {
  RunConfig cfg;
  GridSpec grid;
  Kernel kernel;
  SimParams params;
};

Loaded load(const std::string& config_path) {
  Loaded L;
  L.cfg = parse_config(config_path);
  L.grid = config_grid(L.cfg);
  L.kernel = build_kernel(L.cfg.kernel, L.grid);
  L.params = config_sim_params(L.cfg, L.grid);
  return L;
}

std::string out_path(const RunConfig& cfg, const std::string& out_override,
                     const std::string& name) {
  const std::string dir = out_override.empty() ? cfg.out_dir : out_override;
  fs::create_directories(dir);
  return (fs::path(dir) / name).string();
}

SnapshotMeta base_meta(const RunConfig& cfg) {
  SnapshotMeta m;
  m.kv["config_hash"] = cfg.hash;
  return m;
}

void require_hash(const SnapshotMeta& meta, const RunConfig& cfg,
                  const std::string& path) {
  auto it = meta.kv.find("config_hash");
  if (it == meta.kv.end() || it->second != cfg.hash)
    throw config_error({"snapshot " + path + " was produced under a different " +
                        "configuration (hash " +
                        (it == meta.kv.end() ? std::string("missing") : it->second) +
                        " != " + cfg.hash + ")"});
}

struct SteadyFiles {
  std::string u, phi, mu, meta;
};

SteadyFiles steady_files(const std::string& dir) {
  return {(fs::path(dir) / "steady_u.dat").string(),
          (fs::path(dir) / "steady_phi.dat").string(),
          (fs::path(dir) / "steady_mu.dat").string(),
          (fs::path(dir) / "steady_meta.txt").string()};
}

SteadyState read_steady(const std::string& dir, const Loaded& L) {
  const SteadyFiles f = steady_files(dir);
  SnapshotMeta mu_meta, mphi, mmu;
  SteadyState s;
  s.u_e = read_vector_snapshot(f.u, &mu_meta);
  s.phi_e = read_scalar_snapshot(f.phi, &mphi);
  s.mu_e = read_scalar_snapshot(f.mu, &mmu);
  require_hash(mu_meta, L.cfg, f.u);
  require_hash(mphi, L.cfg, f.phi);
  require_hash(mmu, L.cfg, f.mu);
  check_same_grid(s.phi_e.grid, L.grid, "steady snapshot");
  check_same_grid(s.u_e.grid, L.grid, "steady snapshot");
  s.k = mean(s.phi_e);
  auto it = mphi.kv.find("seed");
  if (it != mphi.kv.end()) s.seed = static_cast<unsigned>(std::stoul(it->second));
  weak_residuals(s, L.params, L.kernel, L.cfg.potential);
  return s;
}

void require_constant_coefficients(const Loaded& L) {
  if (!L.params.nu_constant() || !L.params.m_constant())
    throw certificate_refusal(
        "certificates require constant viscosity and mobility; configured "
        "profiles are variable");
}

Constants make_constants(const Loaded& L) {
  Constants c;
  const StokesEigen eig = stokes_lambda1(L.grid);
  c.lambda1 = eig.conservative();
  c.C_Omega = poincare_constant(L.grid);
  c.C0 = compute_c0(L.cfg.potential, L.kernel);
  c.norm_J_L1 = L.kernel.norm_J_L1;
  c.norm_gradJ_L1 = L.kernel.norm_gradJ_L1;
  c.nu = L.params.nu_min;
  c.m = L.params.m_min;
  c.kappa = L.cfg.potential.theta_c;
  c.C_embed = L.cfg.C_embed;
  c.norm_h_dual =
      L.params.has_forcing() ? forcing_dual_norm(L.params.h, c.lambda1) : 0.0;
  return c;
}

int cmd_validate(const std::string& config_path) {
  const Loaded L = load(config_path);
  const AssumptionReport rep =
      check_assumptions(L.cfg.potential, L.kernel, L.params.nu_min, L.params.nu_max,
                        L.params.m_min, L.params.m_max);
  std::printf("config_hash %s\n", L.cfg.hash.c_str());
  for (const auto& c : rep.checks)
    std::printf("%-3s %-4s %s\n", c.name.c_str(), c.pass ? "pass" : "FAIL",
                c.detail.c_str());
  std::printf("C0 %.12g\nnorm_J_L1 %.12g\nnorm_gradJ_L1 %.12g\n", rep.c0,
              rep.norm_J_L1, rep.norm_gradJ_L1);
  std::printf("overall %s\n", rep.all_pass() ? "pass" : "FAIL");
  return rep.all_pass() ? 0 : kExitConfig;
}

int cmd_steady(const std::string& config_path, const std::string& out_override,
               unsigned seed_override) {
  const Loaded L = load(config_path);
  const unsigned seed = seed_override ? seed_override : L.cfg.initial_seed;
  SteadyState s;
  try {
    s = steady_solve(L.grid, L.params, L.kernel, L.cfg.potential, L.cfg.initial_k,
                     L.cfg.steady_tol, L.cfg.steady_max_steps, seed,
                     L.cfg.steady_perturb_amplitude);
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitNoConvergence;
  }
  SnapshotMeta meta = base_meta(L.cfg);
  meta.kv["k"] = detail::fmt_real(s.k);
  meta.kv["seed"] = std::to_string(s.seed);
  const SteadyFiles f = steady_files(out_override.empty() ? L.cfg.out_dir : out_override);
  fs::create_directories(fs::path(f.u).parent_path());
  write_snapshot(f.u, s.u_e, meta);
  write_snapshot(f.phi, s.phi_e, meta);
  write_snapshot(f.mu, s.mu_e, meta);
  std::ofstream mf(f.meta);
  mf << "config_hash " << L.cfg.hash << "\nk " << detail::fmt_real(s.k) << "\nseed "
     << s.seed << "\nr_phi " << detail::fmt_real(s.r_phi) << "\nr_mu "
     << detail::fmt_real(s.r_mu) << "\nr_u " << detail::fmt_real(s.r_u) << "\n";
  std::printf("steady state written; residuals r_phi %.3e r_mu %.3e r_u %.3e\n",
              s.r_phi, s.r_mu, s.r_u);
  return 0;
}

int cmd_evolve(const std::string& config_path, const std::string& out_override,
               const std::string& steady_dir, unsigned seed_override) {
  const Loaded L = load(config_path);
  State initial = config_initial_state(L.cfg, L.grid, seed_override);
  std::optional<State> ref;
  if (!steady_dir.empty()) {
    const SteadyState s = read_steady(steady_dir, L);
    ref = State{0.0, s.u_e, s.phi_e};
  }
  reset_clamp_count();
  Trajectory traj;
  try {
    traj = evolve(initial, L.params, L.kernel, L.cfg.potential, L.cfg.sample_every,
                  ref ? &*ref : nullptr);
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitNoConvergence;
  }
  write_trajectory_csv(out_path(L.cfg, out_override, "trajectory.csv"), traj,
                       L.cfg.hash);
  SnapshotMeta meta = base_meta(L.cfg);
  meta.kv["t"] = detail::fmt_real(traj.final_state.t);
  write_snapshot(out_path(L.cfg, out_override, "final_phi.dat"), traj.final_state.phi,
                 meta);
  write_snapshot(out_path(L.cfg, out_override, "final_u.dat"), traj.final_state.u,
                 meta);
  std::printf("evolved to t = %g with %zu samples\n", traj.final_state.t,
              traj.samples.size());
  return 0;
}

int cmd_certify(const std::string& config_path, const std::string& out_override,
                const std::string& steady_dir, const std::string& mode,
                unsigned seed_override) {
  const Loaded L = load(config_path);
  require_constant_coefficients(L);
  Certificate cert;
  if (mode == "uniqueness3d") {
    if (!(L.cfg.lambda1_user > 0.0) || !(L.cfg.h_dual_user >= 0.0) ||
        !L.cfg.has_user_norms)
      throw config_error(
          {"uniqueness3d certificates use user-supplied three-dimensional norms;",
           "required config keys: certify.lambda1 (> 0) and certify.h_dual (>= 0)"});
    Constants c;
    c.lambda1 = L.cfg.lambda1_user;
    c.C_Omega = poincare_constant(L.grid);
    c.C0 = compute_c0(L.cfg.potential, L.kernel);
    c.norm_J_L1 = L.kernel.norm_J_L1;
    c.norm_gradJ_L1 = L.kernel.norm_gradJ_L1;
    c.nu = L.params.nu_min;
    c.m = L.params.m_min;
    c.kappa = L.cfg.potential.theta_c;
    c.C_embed = L.cfg.C_embed;
    c.norm_h_dual = L.cfg.h_dual_user;
    cert = uniqueness_certificate(c, 3);
  } else if (mode == "uniqueness2d") {
    const Constants c = make_constants(L);
    cert = uniqueness_certificate(c, 2);
  } else if (mode == "stability2d") {
    if (steady_dir.empty())
      throw config_error({"stability2d requires --steady DIR (the steady snapshots)"});
    const SteadyState s = read_steady(steady_dir, L);
    const Constants c = make_constants(L);
    const State initial = config_initial_state(L.cfg, L.grid, seed_override);
    cert = stability_certificate(s, c, initial, L.kernel, L.cfg.potential);
  } else {
    throw config_error({"unknown --mode '" + mode +
                        "' (expected uniqueness2d, uniqueness3d, or stability2d)"});
  }
  const std::string report = certificate_report(cert, L.cfg.hash);
  std::fputs(report.c_str(), stdout);
  std::ofstream out(out_path(L.cfg, out_override, "certificate.txt"));
  out << report;
  return 0;
}

int cmd_decay(const std::string& config_path, const std::string& out_override,
              const std::string& steady_dir, unsigned seed_override) {
  const Loaded L = load(config_path);
  require_constant_coefficients(L);
  if (steady_dir.empty())
    throw config_error({"decay requires --steady DIR (the steady snapshots)"});
  const SteadyState s = read_steady(steady_dir, L);
  const Constants c = make_constants(L);
  State initial = config_initial_state(L.cfg, L.grid, seed_override);
  const Certificate cert =
      stability_certificate(s, c, initial, L.kernel, L.cfg.potential);
  const std::string report = certificate_report(cert, L.cfg.hash);
  std::fputs(report.c_str(), stdout);
  std::ofstream(out_path(L.cfg, out_override, "certificate.txt")) << report;
  if (!cert.overall) {
    std::fprintf(stderr, "stability conditions not met; no simulation run\n");
    return kExitRefusal;
  }
  const State ref{0.0, s.u_e, s.phi_e};
  reset_clamp_count();
  Trajectory traj;
  try {
    traj = evolve(initial, L.params, L.kernel, L.cfg.potential, L.cfg.sample_every,
                  &ref);
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitNoConvergence;
  }
  write_trajectory_csv(out_path(L.cfg, out_override, "trajectory.csv"), traj,
                       L.cfg.hash);
  const DecayReport rep = verify_decay(traj, cert);
  std::ostringstream os;
  os << "# config_hash " << L.cfg.hash << "\nviolations " << rep.violations
     << "\nworst_ratio " << detail::fmt_real(rep.worst_ratio) << "\nsaturated "
     << (rep.fit.saturated ? 1 : 0) << "\nalpha_hat "
     << detail::fmt_real(rep.fit.alpha_hat) << "\nr_squared "
     << detail::fmt_real(rep.fit.r_squared) << "\nrho " << detail::fmt_real(cert.rho)
     << "\nmargin " << detail::fmt_real(rep.margin) << "\n";
  std::fputs(os.str().c_str(), stdout);
  std::ofstream(out_path(L.cfg, out_override, "decay_report.txt")) << os.str();
  return rep.violations == 0 ? 0 : kExitNoConvergence;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonlocal phase-field / incompressible flow laboratory"};
  app.require_subcommand(1);
  std::string config_path, out_dir, steady_dir, mode = "stability2d";
  unsigned seed = 0;

  auto add_common = [&](CLI::App* sub, bool needs_steady_flag, bool needs_mode) {
    sub->add_option("--config", config_path, "configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides output.dir)");
    sub->add_option("--seed", seed, "seed override for perturbed initial data");
    if (needs_steady_flag)
      sub->add_option("--steady", steady_dir, "directory with steady snapshots");
    if (needs_mode)
      sub->add_option("--mode", mode,
                      "certificate kind: uniqueness2d|uniqueness3d|stability2d");
  };
  CLI::App* validate = app.add_subcommand("validate", "check structural assumptions");
  add_common(validate, false, false);
  CLI::App* steady = app.add_subcommand("steady", "compute a stationary state");
  add_common(steady, false, false);
  CLI::App* evolve_cmd = app.add_subcommand("evolve", "run the transient solver");
  add_common(evolve_cmd, true, false);
  CLI::App* certify = app.add_subcommand("certify", "evaluate a certificate");
  add_common(certify, true, true);
  CLI::App* decay = app.add_subcommand("decay", "certify, evolve, verify decay");
  add_common(decay, true, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(config_path);
    if (steady->parsed()) return cmd_steady(config_path, out_dir, seed);
    if (evolve_cmd->parsed()) return cmd_evolve(config_path, out_dir, steady_dir, seed);
    if (certify->parsed())
      return cmd_certify(config_path, out_dir, steady_dir, mode, seed);
    if (decay->parsed()) return cmd_decay(config_path, out_dir, steady_dir, seed);
  } catch (const config_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  } catch (const certificate_refusal& e) {
    std::fprintf(stderr, "refused: %s\n", e.what());
    return kExitRefusal;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitConfig;
  } catch (const std::runtime_error& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kExitNoConvergence;
  }
  return 0;
}
