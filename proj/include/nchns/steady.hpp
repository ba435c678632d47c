// steady.hpp
// Stationary solutions by pseudo-time marching of the transient system, plus
// verification against the weak formulation on a finite smooth test basis.

#pragma once

#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "nchns/dynamics.hpp"
#include "nchns/grid.hpp"
#include "nchns/kernel.hpp"
#include "nchns/operators.hpp"
#include "nchns/potential.hpp"

namespace nchns {

struct SteadyState {
  VectorField u_e;
  ScalarField phi_e;
  ScalarField mu_e;
  double k = 0.0;
  double r_phi = 0.0, r_mu = 0.0, r_u = 0.0;
  unsigned seed = 0;  // recorded so divergent basins are reproducible
};

// discretely divergence-free test field from a corner stream function
inline VectorField curl_of_stream(const GridSpec& g,
                                  const std::function<double(double, double)>& zeta) {
  std::vector<double> zc(static_cast<size_t>(g.nx + 1) * (g.ny + 1));
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      zc[static_cast<size_t>(j) * (g.nx + 1) + i] = zeta(i * g.hx, j * g.hy);
  VectorField w(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i)
      w.U(i, j) = (zc[static_cast<size_t>(j + 1) * (g.nx + 1) + i] -
                   zc[static_cast<size_t>(j) * (g.nx + 1) + i]) /
                  g.hy;
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      w.V(i, j) = -(zc[static_cast<size_t>(j) * (g.nx + 1) + i + 1] -
                    zc[static_cast<size_t>(j) * (g.nx + 1) + i]) /
                  g.hx;
  w.enforce_no_slip();
  return w;
}

// ||h||_{V'} <= ||h||_{L2}/sqrt(lambda1): the conservative duality bound fed
// to the certificates.
inline double forcing_dual_norm(const VectorField& h, double lambda1) {
  if (!(lambda1 > 0.0)) throw std::invalid_argument("forcing_dual_norm: lambda1 <= 0");
  return l2_norm(h) / std::sqrt(lambda1);
}

// Residuals of the stationary weak formulation against 16 smooth test modes
// per equation, measured with the same discrete operators the march uses, and
// normalized by the H1 norm of each test function.
inline void weak_residuals(SteadyState& s, const SimParams& p, const Kernel& K,
                           const PotentialSpec& spec) {
  const GridSpec& g = s.phi_e.grid;
  ScalarField mcell(g);
  for (size_t k = 0; k < mcell.values.size(); ++k)
    mcell.values[k] = p.m(s.phi_e.values[k]);
  const detail::FaceMobility fm = detail::face_mobility(mcell);

  // scalar equation: div(u phi) - div(m grad mu) tested against cosines
  {
    ScalarField res = detail::transport_divergence(s.u_e, s.phi_e);
    ScalarField diff = detail::div_m_grad(s.mu_e, fm);
    for (size_t k = 0; k < res.values.size(); ++k) res.values[k] -= diff.values[k];
    double worst = 0.0;
    std::vector<std::pair<int, int>> modes;
    for (int q = 0; q <= 3; ++q)
      for (int pm = 0; pm <= 3; ++pm)
        if (pm || q) modes.emplace_back(pm, q);
    modes.emplace_back(4, 0);
    for (auto [pm, q] : modes) {
      ScalarField psi(g);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
          psi(i, j) = std::cos(pm * M_PI * g.xc(i) / g.Lx) *
                      std::cos(q * M_PI * g.yc(j) / g.Ly);
      const double h1 = h1_seminorm(psi), l2 = l2_norm(psi);
      const double vnorm = std::sqrt(h1 * h1 + l2 * l2);
      worst = std::max(worst, std::abs(l2_inner(res, psi)) / vnorm);
    }
    s.r_phi = worst;
  }

  // chemical potential consistency: mu - (a phi - J*phi + F'(phi))
  {
    ScalarField def = chemical_potential(s.phi_e, K, spec);
    for (size_t k = 0; k < def.values.size(); ++k)
      def.values[k] = s.mu_e.values[k] - def.values[k];
    s.r_mu = l2_norm(def) / std::sqrt(g.area());
  }

  // momentum equation tested against divergence-free stream-curl modes
  {
    std::vector<double> nuc, nun;
    detail::viscosity_samples(s.phi_e, p.nu, nuc, nun);
    VectorField res = adv_skew(s.u_e, s.u_e);
    const VectorField visc = viscous_apply(s.u_e, nuc, nun);
    const VectorField fcap = detail::capillary_force(s.mu_e, s.phi_e);
    for (size_t k = 0; k < res.u.size(); ++k)
      res.u[k] += visc.u[k] - fcap.u[k] - (p.has_forcing() ? p.h.u[k] : 0.0);
    for (size_t k = 0; k < res.v.size(); ++k)
      res.v[k] += visc.v[k] - fcap.v[k] - (p.has_forcing() ? p.h.v[k] : 0.0);
    double worst = 0.0;
    for (int pm = 1; pm <= 4; ++pm)
      for (int q = 1; q <= 4; ++q) {
        VectorField v = curl_of_stream(g, [&](double x, double y) {
          const double sx = std::sin(pm * M_PI * x / g.Lx);
          const double sy = std::sin(q * M_PI * y / g.Ly);
          return sx * sx * sy * sy;
        });
        const double h1 = std::sqrt(vector_grad_sq(v)), l2 = l2_norm(v);
        const double vnorm = std::sqrt(h1 * h1 + l2 * l2);
        worst = std::max(worst, std::abs(l2_inner(res, v)) / vnorm);
      }
    s.r_u = worst;
  }
}

// Pseudo-time marching to a stationary state: starts from phi = k + zero-mean
// seeded perturbation, u = 0, and advances the energy-stable stepper until the
// discrete time derivative falls below tol. The conservative march preserves
// the mean constraint exactly.
inline SteadyState steady_solve(const GridSpec& g, const SimParams& p, const Kernel& K,
                                const PotentialSpec& spec, double k, double tol_steady,
                                long max_steps, unsigned seed,
                                double perturb_amplitude = 0.05) {
  if (!(k > -1.0 && k < 1.0))
    throw std::invalid_argument("steady_solve: mean k must lie in (-1,1)");
  if (!(tol_steady > 0.0))
    throw std::invalid_argument("steady_solve: tolerance must be positive");

  State cur;
  cur.t = 0.0;
  cur.u = VectorField(g);
  cur.phi = ScalarField(g, k);
  if (perturb_amplitude > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-perturb_amplitude, perturb_amplitude);
    for (double& v : cur.phi.values) v += dist(rng);
    cur.phi = project_zero_mean(cur.phi);
    for (double& v : cur.phi.values) v += k;
  }

  double resid = 0.0;
  bool converged = false;
  for (long n = 0; n < max_steps; ++n) {
    State next = step(cur, p, K, spec);
    VectorField du = next.u;
    detail::vf_axpy(du, -1.0, cur.u);
    ScalarField dp = next.phi;
    for (size_t i = 0; i < dp.values.size(); ++i) dp.values[i] -= cur.phi.values[i];
    resid = std::max(l2_norm(du), l2_norm(dp)) / p.dt;
    cur = std::move(next);
    if (resid < tol_steady) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    std::ostringstream os;
    os << "steady_solve: no convergence after " << max_steps
       << " steps; final residual " << resid << " (tolerance " << tol_steady << ")";
    throw std::runtime_error(os.str());
  }

  SteadyState s;
  s.u_e = cur.u;
  s.phi_e = cur.phi;
  s.mu_e = chemical_potential(cur.phi, K, spec);
  s.k = k;
  s.seed = seed;
  weak_residuals(s, p, K, spec);
  return s;
}

}  // namespace nchns
