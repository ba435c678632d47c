// dynamics.hpp
// Transient solver: semi-implicit convex-splitting step for the coupled
// phase-field / momentum system, energy and mass diagnostics, trajectories.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nchns/field_io.hpp"
#include "nchns/grid.hpp"
#include "nchns/kernel.hpp"
#include "nchns/operators.hpp"
#include "nchns/potential.hpp"

namespace nchns {

struct State {
  double t = 0.0;
  VectorField u;
  ScalarField phi;
};

// Coefficient evaluators plus their declared bounds on [-1,1]. The bounds are
// what the structural assumptions and certificates consume; certificates
// additionally require nu_min == nu_max (constant coefficients).
struct SimParams {
  std::function<double(double)> nu = [](double) { return 1.0; };
  std::function<double(double)> m = [](double) { return 1.0; };
  double nu_min = 1.0, nu_max = 1.0;
  double m_min = 1.0, m_max = 1.0;
  double dt = 1e-3;
  double T_end = 1.0;
  VectorField h;  // time-independent forcing; empty grid means zero

  bool nu_constant() const { return nu_min == nu_max; }
  bool m_constant() const { return m_min == m_max; }
  bool has_forcing() const { return h.grid.nx > 0; }
};

namespace detail {

// face-interpolated mobility from cell values of m(phi)
struct FaceMobility {
  std::vector<double> mx;  // (nx+1)*ny, zero flux on boundary faces
  std::vector<double> my;  // nx*(ny+1)
};

inline FaceMobility face_mobility(const ScalarField& mcell) {
  const GridSpec& g = mcell.grid;
  FaceMobility f;
  f.mx.assign(static_cast<size_t>(g.nx + 1) * g.ny, 0.0);
  f.my.assign(static_cast<size_t>(g.nx) * (g.ny + 1), 0.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      f.mx[static_cast<size_t>(j) * (g.nx + 1) + i] =
          0.5 * (mcell(i - 1, j) + mcell(i, j));
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.my[static_cast<size_t>(j) * g.nx + i] = 0.5 * (mcell(i, j - 1) + mcell(i, j));
  return f;
}

// div(m grad s) with zero-flux walls
inline ScalarField div_m_grad(const ScalarField& s, const FaceMobility& fm) {
  const GridSpec& g = s.grid;
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double fe = (i + 1 < g.nx)
                            ? fm.mx[static_cast<size_t>(j) * (g.nx + 1) + i + 1] *
                                  (s(i + 1, j) - s(i, j)) / g.hx
                            : 0.0;
      const double fw = (i > 0) ? fm.mx[static_cast<size_t>(j) * (g.nx + 1) + i] *
                                      (s(i, j) - s(i - 1, j)) / g.hx
                                : 0.0;
      const double fn = (j + 1 < g.ny) ? fm.my[static_cast<size_t>(j + 1) * g.nx + i] *
                                             (s(i, j + 1) - s(i, j)) / g.hy
                                       : 0.0;
      const double fs = (j > 0) ? fm.my[static_cast<size_t>(j) * g.nx + i] *
                                      (s(i, j) - s(i, j - 1)) / g.hy
                                : 0.0;
      out(i, j) = (fe - fw) / g.hx + (fn - fs) / g.hy;
    }
  return out;
}

// integral m |grad s|^2 with the same face quadrature as div_m_grad
inline double m_grad_sq(const ScalarField& s, const FaceMobility& fm) {
  const GridSpec& g = s.grid;
  double q = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) {
      const double d = (s(i, j) - s(i - 1, j)) / g.hx;
      q += fm.mx[static_cast<size_t>(j) * (g.nx + 1) + i] * d * d;
    }
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double d = (s(i, j) - s(i, j - 1)) / g.hy;
      q += fm.my[static_cast<size_t>(j) * g.nx + i] * d * d;
    }
  return q * g.cell_area();
}

// conservative transport div(u phibar) with arithmetic face means; boundary
// faces carry u = 0, so the column sum telescopes to zero exactly
inline ScalarField transport_divergence(const VectorField& u, const ScalarField& phi) {
  const GridSpec& g = phi.grid;
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double fe = (i + 1 < g.nx) ? u.U(i + 1, j) * 0.5 * (phi(i, j) + phi(i + 1, j))
                                       : 0.0;
      const double fw = (i > 0) ? u.U(i, j) * 0.5 * (phi(i - 1, j) + phi(i, j)) : 0.0;
      const double fn = (j + 1 < g.ny) ? u.V(i, j + 1) * 0.5 * (phi(i, j) + phi(i, j + 1))
                                       : 0.0;
      const double fs = (j > 0) ? u.V(i, j) * 0.5 * (phi(i, j - 1) + phi(i, j)) : 0.0;
      out(i, j) = (fe - fw) / g.hx + (fn - fs) / g.hy;
    }
  return out;
}

// capillary force mu-bar grad(phi) at interior faces
inline VectorField capillary_force(const ScalarField& mu, const ScalarField& phi) {
  const GridSpec& g = phi.grid;
  VectorField f(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i)
      f.U(i, j) = 0.5 * (mu(i - 1, j) + mu(i, j)) * (phi(i, j) - phi(i - 1, j)) / g.hx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      f.V(i, j) = 0.5 * (mu(i, j - 1) + mu(i, j)) * (phi(i, j) - phi(i, j - 1)) / g.hy;
  return f;
}

inline double sf_dot(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.values.size(); ++k) s += a.values[k] * b.values[k];
  return s;
}

inline ScalarField sf_cg(const std::function<ScalarField(const ScalarField&)>& apply,
                         const ScalarField& b, double rel_tol, int max_iter) {
  ScalarField x(b.grid);
  ScalarField r = b;
  ScalarField p = r;
  double rs = sf_dot(r, r);
  const double b2 = rs;
  if (b2 == 0.0) return x;
  for (int it = 0; it < max_iter; ++it) {
    ScalarField Ap = apply(p);
    const double alpha = rs / sf_dot(p, Ap);
    for (size_t k = 0; k < x.values.size(); ++k) {
      x.values[k] += alpha * p.values[k];
      r.values[k] -= alpha * Ap.values[k];
    }
    const double rs_new = sf_dot(r, r);
    if (rs_new <= rel_tol * rel_tol * b2) return x;
    const double beta = rs_new / rs;
    rs = rs_new;
    for (size_t k = 0; k < p.values.size(); ++k)
      p.values[k] = r.values[k] + beta * p.values[k];
  }
  throw std::runtime_error("sf_cg: no convergence");
}

// viscosity samples at centers and corners from phi
inline void viscosity_samples(const ScalarField& phi, const std::function<double(double)>& nu,
                              std::vector<double>& nuc, std::vector<double>& nun) {
  const GridSpec& g = phi.grid;
  nuc.resize(phi.values.size());
  for (size_t k = 0; k < nuc.size(); ++k) nuc[k] = nu(phi.values[k]);
  nun.resize(static_cast<size_t>(g.nx + 1) * (g.ny + 1));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      double s = 0.0;
      int c = 0;
      for (int dj = -1; dj <= 0; ++dj)
        for (int di = -1; di <= 0; ++di) {
          const int ci = i + di, cj = j + dj;
          if (ci >= 0 && ci < g.nx && cj >= 0 && cj < g.ny) {
            s += phi(ci, cj);
            ++c;
          }
        }
      nun[static_cast<size_t>(j) * (g.nx + 1) + i] = nu(s / c);
    }
}

}  // namespace detail

// mu at the implicit level of the splitting: a phi_new + G'(phi_new)
// - J*phi_old - kappa phi_old
inline ScalarField scheme_mu(const ScalarField& phi_new, const ScalarField& phi_old,
                             const Kernel& K, const SplitPotential& sp) {
  ScalarField conv_old = convolve(K, phi_old);
  ScalarField mu(phi_new.grid);
  for (size_t k = 0; k < mu.values.size(); ++k)
    mu.values[k] = K.a.values[k] * phi_new.values[k] + sp.Gp(phi_new.values[k]) -
                   conv_old.values[k] - sp.kappa * phi_old.values[k];
  return mu;
}

// One semi-implicit step: energy-stable convex-splitting update of phi with a
// safeguarded Newton solve, then a semi-implicit momentum step with
// skew-symmetric advection and a pressure projection.
inline State step(const State& state, const SimParams& p, const Kernel& K,
                  const PotentialSpec& spec) {
  const GridSpec& g = state.phi.grid;
  const double cfl = 0.5 * std::min(g.hx, g.hy) / std::max(1.0, linf_norm(state.u));
  if (p.dt > cfl) {
    std::ostringstream os;
    os << "step: dt = " << p.dt << " exceeds the advective guard " << cfl
       << "; reduce dt";
    throw std::invalid_argument(os.str());
  }
  const SplitPotential sp = convex_split(spec);
  const double lim = 1.0 - spec.delta;

  // ---- phase-field update -------------------------------------------
  ScalarField mcell(g);
  for (size_t k = 0; k < mcell.values.size(); ++k)
    mcell.values[k] = p.m(state.phi.values[k]);
  const detail::FaceMobility fm = detail::face_mobility(mcell);
  const ScalarField transport = detail::transport_divergence(state.u, state.phi);
  const ScalarField conv_old = convolve(K, state.phi);

  auto residual = [&](const ScalarField& phi) {
    ScalarField mu(g);
    for (size_t k = 0; k < mu.values.size(); ++k)
      mu.values[k] = K.a.values[k] * phi.values[k] + sp.Gp(phi.values[k]) -
                     conv_old.values[k] - sp.kappa * state.phi.values[k];
    ScalarField diff = detail::div_m_grad(mu, fm);
    ScalarField r(g);
    for (size_t k = 0; k < r.values.size(); ++k)
      r.values[k] = (phi.values[k] - state.phi.values[k]) / p.dt +
                    transport.values[k] - diff.values[k];
    return r;
  };

  ScalarField phi = state.phi;
  for (double& v : phi.values) v = std::min(lim, std::max(-lim, v));
  ScalarField r = residual(phi);
  double rnorm = std::sqrt(detail::sf_dot(r, r));
  // absolute floor: round-off in the residual scales with the data and the
  // operator norm 1/dt + m (a + G'') 8/h^2; without it a state that is
  // already stationary could never "converge" 12 digits further
  double dmax = 0.0, mmax = 0.0;
  for (size_t k = 0; k < phi.values.size(); ++k) {
    dmax = std::max(dmax, K.a.values[k] + sp.Gpp(phi.values[k]));
    mmax = std::max(mmax, mcell.values[k]);
  }
  const double noise_floor =
      64.0 * std::numeric_limits<double>::epsilon() *
      (linf_norm(state.phi) + linf_norm(state.u)) *
      (1.0 / p.dt +
       mmax * dmax * (4.0 / (g.hx * g.hx) + 4.0 / (g.hy * g.hy)));
  const double rtarget = std::max(1e-12 * rnorm, noise_floor);
  for (int newton = 0; rnorm > rtarget; ++newton) {
    if (newton >= 50)
      throw std::runtime_error("step: phase-field Newton stalled; reduce dt");
    // Jacobian J psi = psi/dt + div(m grad((a + G'') psi)) solved through the
    // substitution chi = (a + G'') psi, which makes the operator SPD.
    std::vector<double> diag(phi.values.size());
    for (size_t k = 0; k < diag.size(); ++k)
      diag[k] = K.a.values[k] + sp.Gpp(phi.values[k]);
    auto apply = [&](const ScalarField& chi) {
      ScalarField out = detail::div_m_grad(chi, fm);
      for (size_t k = 0; k < out.values.size(); ++k)
        out.values[k] = chi.values[k] / (diag[k] * p.dt) - out.values[k];
      return out;
    };
    ScalarField rhs = r;
    for (double& v : rhs.values) v = -v;
    ScalarField chi = detail::sf_cg(apply, rhs, 1e-13, 20000);
    ScalarField psi(g);
    for (size_t k = 0; k < psi.values.size(); ++k)
      psi.values[k] = chi.values[k] / diag[k];

    double alpha = 1.0;
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      ScalarField trial(g);
      bool inside = true;
      for (size_t k = 0; k < trial.values.size(); ++k) {
        trial.values[k] = phi.values[k] + alpha * psi.values[k];
        if (std::abs(trial.values[k]) >= lim) inside = false;
      }
      if (inside) {
        ScalarField rt = residual(trial);
        const double rtn = std::sqrt(detail::sf_dot(rt, rt));
        if (rtn <= (1.0 - 1e-4 * alpha) * rnorm || rtn <= rtarget) {
          phi = trial;
          r = rt;
          rnorm = rtn;
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted)
      throw std::runtime_error(
          "step: line search cannot keep the order parameter inside (-1,1); reduce dt");
  }
  // conservative fluxes keep the mean to round-off; restore it exactly
  {
    const double drift = mean(state.phi) - mean(phi);
    for (double& v : phi.values) v += drift;
  }
  const ScalarField mu = scheme_mu(phi, state.phi, K, sp);

  // ---- momentum update ----------------------------------------------
  std::vector<double> nuc, nun;
  detail::viscosity_samples(phi, p.nu, nuc, nun);
  VectorField rhs(g);
  {
    const VectorField adv = adv_skew(state.u, state.u);
    const VectorField fcap = detail::capillary_force(mu, phi);
    for (size_t k = 0; k < rhs.u.size(); ++k)
      rhs.u[k] = state.u.u[k] / p.dt - adv.u[k] + fcap.u[k];
    for (size_t k = 0; k < rhs.v.size(); ++k)
      rhs.v[k] = state.u.v[k] / p.dt - adv.v[k] + fcap.v[k];
    if (p.has_forcing()) {
      for (size_t k = 0; k < rhs.u.size(); ++k) rhs.u[k] += p.h.u[k];
      for (size_t k = 0; k < rhs.v.size(); ++k) rhs.v[k] += p.h.v[k];
    }
    rhs.enforce_no_slip();
  }
  auto apply_mom = [&](const VectorField& w) {
    VectorField out = viscous_apply(w, nuc, nun);
    for (size_t k = 0; k < out.u.size(); ++k) out.u[k] += w.u[k] / p.dt;
    for (size_t k = 0; k < out.v.size(); ++k) out.v[k] += w.v[k] / p.dt;
    out.enforce_no_slip();
    return out;
  };
  VectorField ustar = detail::cg_solve(apply_mom, rhs, 1e-13, 20000);
  VectorField unew = helmholtz_project(ustar);
  unew.enforce_no_slip();

  State next;
  next.t = state.t + p.dt;
  next.u = std::move(unew);
  next.phi = std::move(phi);
  return next;
}

// E = (1/2)||u||^2 + (1/2)[(a phi, phi) - (J*phi, phi)] + int F(phi).
// The bracket equals the double-sum (1/4) iint J(x-y)(phi(x)-phi(y))^2.
inline double energy(const State& s, const SimParams&, const Kernel& K,
                     const PotentialSpec& spec) {
  const ScalarField conv = convolve(K, s.phi);
  double nonlocal = 0.0, bulk = 0.0;
  for (size_t k = 0; k < s.phi.values.size(); ++k) {
    const double ph = s.phi.values[k];
    nonlocal += 0.5 * (K.a.values[k] * ph - conv.values[k]) * ph;
    bulk += f_value(spec, ph);
  }
  const double w = s.phi.grid.cell_area();
  const double un = l2_norm(s.u);
  return 0.5 * un * un + nonlocal * w + bulk * w;
}

// r = [E(after) - E(before)]/dt + 2 int nu |Du|^2 + int m |grad mu|^2 - (h,u),
// dissipation evaluated at the implicit level.
inline double energy_identity_residual(const State& before, const State& after,
                                       const SimParams& p, const Kernel& K,
                                       const PotentialSpec& spec) {
  const double de = (energy(after, p, K, spec) - energy(before, p, K, spec)) / p.dt;
  std::vector<double> nuc, nun;
  detail::viscosity_samples(after.phi, p.nu, nuc, nun);
  const double visc = viscous_dissipation(after.u, nuc, nun);
  ScalarField mcell(before.phi.grid);
  for (size_t k = 0; k < mcell.values.size(); ++k)
    mcell.values[k] = p.m(before.phi.values[k]);
  const detail::FaceMobility fm = detail::face_mobility(mcell);
  const ScalarField mu = scheme_mu(after.phi, before.phi, K, convex_split(spec));
  const double chem = detail::m_grad_sq(mu, fm);
  const double work = p.has_forcing() ? l2_inner(p.h, after.u) : 0.0;
  return de + visc + chem - work;
}

struct TrajectorySample {
  double t = 0.0;
  double u_l2sq = 0.0;       // ||u - u_ref||^2 when a reference is given
  double phi_dist_sq = 0.0;  // ||phi - phi_ref||^2, 0 without a reference
  double energy = 0.0;
  double mass = 0.0;
  std::int64_t clamps = 0;
  double energy_residual = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  State final_state;
};

inline Trajectory evolve(const State& initial, const SimParams& p, const Kernel& K,
                         const PotentialSpec& spec, int sample_every = 1,
                         const State* reference = nullptr) {
  if (sample_every < 1) throw std::invalid_argument("evolve: sample_every must be >= 1");
  Trajectory traj;
  State cur = initial;
  auto record = [&](const State& s, double resid) {
    TrajectorySample smp;
    smp.t = s.t;
    if (reference) {
      VectorField du = s.u;
      for (size_t k = 0; k < du.u.size(); ++k) du.u[k] -= reference->u.u[k];
      for (size_t k = 0; k < du.v.size(); ++k) du.v[k] -= reference->u.v[k];
      const double n = l2_norm(du);
      smp.u_l2sq = n * n;
      ScalarField dp = s.phi;
      for (size_t k = 0; k < dp.values.size(); ++k)
        dp.values[k] -= reference->phi.values[k];
      const double np = l2_norm(dp);
      smp.phi_dist_sq = np * np;
    } else {
      const double n = l2_norm(s.u);
      smp.u_l2sq = n * n;
    }
    smp.energy = energy(s, p, K, spec);
    smp.mass = mean(s.phi);
    smp.clamps = clamp_count();
    smp.energy_residual = resid;
    traj.samples.push_back(smp);
  };
  record(cur, 0.0);
  const long nsteps = std::lround(p.T_end / p.dt);
  for (long n = 1; n <= nsteps; ++n) {
    State next = step(cur, p, K, spec);
    if (n % sample_every == 0 || n == nsteps)
      record(next, energy_identity_residual(cur, next, p, K, spec));
    cur = std::move(next);
  }
  traj.final_state = std::move(cur);
  return traj;
}

inline void write_trajectory_csv(const std::string& path, const Trajectory& traj,
                                 const std::string& config_hash = "") {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  if (!config_hash.empty()) out << "# config_hash " << config_hash << "\n";
  out << "t,u_l2sq,phi_dist_sq,energy,mass,clamps,energy_residual\n";
  for (const auto& s : traj.samples)
    out << detail::fmt_real(s.t) << "," << detail::fmt_real(s.u_l2sq) << ","
        << detail::fmt_real(s.phi_dist_sq) << "," << detail::fmt_real(s.energy) << ","
        << detail::fmt_real(s.mass) << "," << s.clamps << ","
        << detail::fmt_real(s.energy_residual) << "\n";
}

}  // namespace nchns
