// operators.hpp
// Discrete functional-analytic machinery: chemical potential assembly, the
// zero-mean Neumann inverse and its dual norm, Helmholtz-Hodge projection,
// skew-symmetrized advection / trilinear form, viscous stress operator, and
// the spectral constants lambda_1 and C_Omega.

#pragma once

#include <fftw3.h>

#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <random>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "nchns/grid.hpp"
#include "nchns/kernel.hpp"
#include "nchns/potential.hpp"

namespace nchns {

// mu = a phi - J*phi + F'(phi), pointwise at cell centers.
inline ScalarField chemical_potential(const ScalarField& phi, const Kernel& K,
                                      const PotentialSpec& spec) {
  check_same_grid(phi.grid, K.grid, "chemical_potential");
  ScalarField conv = convolve(K, phi);
  ScalarField mu(phi.grid);
  for (size_t k = 0; k < mu.values.size(); ++k)
    mu.values[k] = K.a.values[k] * phi.values[k] - conv.values[k] +
                   f_prime(spec, phi.values[k]);
  return mu;
}

namespace detail {

// Cosine-transform Poisson solver on the cell-centered grid. REDFT10/01
// diagonalize the 5-point homogeneous-Neumann Laplacian exactly.
class NeumannPoisson {
 public:
  explicit NeumannPoisson(const GridSpec& g) : g_(g) {
    const size_t n = static_cast<size_t>(g.nx) * g.ny;
    buf_ = fftw_alloc_real(n);
    fwd_ = fftw_plan_r2r_2d(g.ny, g.nx, buf_, buf_, FFTW_REDFT10, FFTW_REDFT10,
                            FFTW_ESTIMATE);
    bwd_ = fftw_plan_r2r_2d(g.ny, g.nx, buf_, buf_, FFTW_REDFT01, FFTW_REDFT01,
                            FFTW_ESTIMATE);
    eigx_.resize(g.nx);
    eigy_.resize(g.ny);
    for (int k = 0; k < g.nx; ++k)
      eigx_[k] = (2.0 - 2.0 * std::cos(M_PI * k / g.nx)) / (g.hx * g.hx);
    for (int l = 0; l < g.ny; ++l)
      eigy_[l] = (2.0 - 2.0 * std::cos(M_PI * l / g.ny)) / (g.hy * g.hy);
  }
  ~NeumannPoisson() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(buf_);
  }
  NeumannPoisson(const NeumannPoisson&) = delete;
  NeumannPoisson& operator=(const NeumannPoisson&) = delete;

  // solves -Lap u = f with zero-mean u; the k=l=0 mode of f is discarded
  ScalarField solve(const ScalarField& f) {
    std::lock_guard<std::mutex> lock(mu_);
    const size_t n = f.values.size();
    for (size_t k = 0; k < n; ++k) buf_[k] = f.values[k];
    fftw_execute(fwd_);
    const double scale = 1.0 / (4.0 * g_.nx * g_.ny);
    for (int l = 0; l < g_.ny; ++l)
      for (int k = 0; k < g_.nx; ++k) {
        const size_t idx = static_cast<size_t>(l) * g_.nx + k;
        const double lam = eigx_[k] + eigy_[l];
        buf_[idx] = (lam > 0.0) ? buf_[idx] / lam * scale : 0.0;
      }
    fftw_execute(bwd_);
    ScalarField u(f.grid);
    for (size_t k = 0; k < n; ++k) u.values[k] = buf_[k];
    return u;
  }

 private:
  GridSpec g_;
  double* buf_;
  fftw_plan fwd_, bwd_;
  std::vector<double> eigx_, eigy_;
  std::mutex mu_;
};

inline std::shared_ptr<NeumannPoisson> poisson_for(const GridSpec& g) {
  static std::mutex mu;
  static std::map<std::tuple<int, int, double, double>, std::shared_ptr<NeumannPoisson>>
      cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[{g.nx, g.ny, g.Lx, g.Ly}];
  if (!slot) slot = std::make_shared<NeumannPoisson>(g);
  return slot;
}

}  // namespace detail

// 5-point homogeneous-Neumann Laplacian at cell centers.
inline ScalarField neumann_laplacian(const ScalarField& u) {
  const GridSpec& g = u.grid;
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double c = u(i, j);
      const double e = (i + 1 < g.nx) ? u(i + 1, j) : c;
      const double w = (i > 0) ? u(i - 1, j) : c;
      const double n = (j + 1 < g.ny) ? u(i, j + 1) : c;
      const double s = (j > 0) ? u(i, j - 1) : c;
      out(i, j) = (e - 2.0 * c + w) / (g.hx * g.hx) + (n - 2.0 * c + s) / (g.hy * g.hy);
    }
  return out;
}

// Solves -Lap u = f, homogeneous Neumann, mean(u) = 0. Requires mean(f) ~ 0.
inline ScalarField neumann_solve(const ScalarField& f) {
  const double fm = mean(f);
  const double scale = l2_norm(f) / std::sqrt(f.grid.area()) + 1.0;
  if (std::abs(fm) > 1e-10 * scale)
    throw std::invalid_argument(
        "neumann_solve: right-hand side must have zero mean (solvability)");
  ScalarField u = detail::poisson_for(f.grid)->solve(f);
  return project_zero_mean(u);
}

// ||B^{-1/2} f|| = sqrt((f, B^{-1} f)); the discrete V0' norm.
inline double dual_norm_v0(const ScalarField& f) {
  ScalarField u = neumann_solve(f);
  const double v = l2_inner(f, u);
  return std::sqrt(std::max(0.0, v));
}

// Discrete divergence of a MAC field, at cell centers.
inline ScalarField divergence(const VectorField& w) {
  const GridSpec& g = w.grid;
  ScalarField d(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      d(i, j) = (w.U(i + 1, j) - w.U(i, j)) / g.hx + (w.V(i, j + 1) - w.V(i, j)) / g.hy;
  return d;
}

// w - grad p with p from the pressure Poisson problem; exact discrete
// divergence-free output up to transform round-off.
inline VectorField helmholtz_project(const VectorField& w) {
  const GridSpec& g = w.grid;
  ScalarField d = divergence(w);
  d = project_zero_mean(d);  // compatibility holds analytically; strip round-off
  for (double& v : d.values) v = -v;
  ScalarField p = detail::poisson_for(g)->solve(d);
  VectorField out = w;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) out.U(i, j) -= (p(i, j) - p(i - 1, j)) / g.hx;
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.V(i, j) -= (p(i, j) - p(i, j - 1)) / g.hy;
  return out;
}

// ---- staggered advection machinery ------------------------------------

namespace detail {

// plain (unweighted) dot over all face entries
inline double vf_dot(const VectorField& a, const VectorField& b) {
  double s = 0.0;
  for (size_t k = 0; k < a.u.size(); ++k) s += a.u[k] * b.u[k];
  for (size_t k = 0; k < a.v.size(); ++k) s += a.v[k] * b.v[k];
  return s;
}

// Convective term (u . grad) v at faces: centered differences, wall ghosts by
// reflection against the no-slip value.
inline VectorField convect(const VectorField& u, const VectorField& v) {
  const GridSpec& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  VectorField out(g);
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const double dvxdx = (v.U(i + 1, j) - v.U(i - 1, j)) / (2.0 * g.hx);
      const double vn = (j + 1 < ny) ? v.U(i, j + 1) : -v.U(i, j);
      const double vs = (j > 0) ? v.U(i, j - 1) : -v.U(i, j);
      const double dvxdy = (vn - vs) / (2.0 * g.hy);
      const double uy = 0.25 * (u.V(i - 1, j) + u.V(i, j) + u.V(i - 1, j + 1) +
                                u.V(i, j + 1));
      out.U(i, j) = u.U(i, j) * dvxdx + uy * dvxdy;
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double dvydy = (v.V(i, j + 1) - v.V(i, j - 1)) / (2.0 * g.hy);
      const double ve = (i + 1 < nx) ? v.V(i + 1, j) : -v.V(i, j);
      const double vw = (i > 0) ? v.V(i - 1, j) : -v.V(i, j);
      const double dvydx = (ve - vw) / (2.0 * g.hx);
      const double ux = 0.25 * (u.U(i, j - 1) + u.U(i + 1, j - 1) + u.U(i, j) +
                                u.U(i + 1, j));
      out.V(i, j) = ux * dvydx + u.V(i, j) * dvydy;
    }
  return out;
}

// Adjoint of w -> convect(u, w) in the plain dot product. Mirrors the gather
// above as a scatter so the transpose is exact to round-off.
inline VectorField convect_adjoint(const VectorField& u, const VectorField& w) {
  const GridSpec& g = u.grid;
  const int nx = g.nx, ny = g.ny;
  VectorField out(g);
  for (int j = 0; j < ny; ++j)
    for (int i = 1; i < nx; ++i) {
      const double wx = w.U(i, j);
      if (wx == 0.0) continue;
      const double cux = u.U(i, j) / (2.0 * g.hx);
      out.U(i + 1, j) += wx * cux;
      out.U(i - 1, j) -= wx * cux;
      const double uy = 0.25 * (u.V(i - 1, j) + u.V(i, j) + u.V(i - 1, j + 1) +
                                u.V(i, j + 1));
      const double cuy = uy / (2.0 * g.hy);
      if (j + 1 < ny)
        out.U(i, j + 1) += wx * cuy;
      else
        out.U(i, j) -= wx * cuy;
      if (j > 0)
        out.U(i, j - 1) -= wx * cuy;
      else
        out.U(i, j) += wx * cuy;
    }
  for (int j = 1; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double wy = w.V(i, j);
      if (wy == 0.0) continue;
      const double cvy = u.V(i, j) / (2.0 * g.hy);
      out.V(i, j + 1) += wy * cvy;
      out.V(i, j - 1) -= wy * cvy;
      const double ux = 0.25 * (u.U(i, j - 1) + u.U(i + 1, j - 1) + u.U(i, j) +
                                u.U(i + 1, j));
      const double cvx = ux / (2.0 * g.hx);
      if (i + 1 < nx)
        out.V(i + 1, j) += wy * cvx;
      else
        out.V(i, j) -= wy * cvx;
      if (i > 0)
        out.V(i - 1, j) -= wy * cvx;
      else
        out.V(i, j) += wy * cvx;
    }
  out.enforce_no_slip();
  return out;
}

}  // namespace detail

// Skew-symmetrized advection: (adv_skew(u,v), w) = b~(u,v,w) for all w, so
// b~(u,v,v) = 0 holds exactly.
inline VectorField adv_skew(const VectorField& u, const VectorField& v) {
  VectorField c = detail::convect(u, v);
  VectorField a = detail::convect_adjoint(u, v);
  for (size_t k = 0; k < c.u.size(); ++k) c.u[k] = 0.5 * (c.u[k] - a.u[k]);
  for (size_t k = 0; k < c.v.size(); ++k) c.v[k] = 0.5 * (c.v[k] - a.v[k]);
  return c;
}

// b~(u,v,w) = (1/2)[((u.grad)v, w) - ((u.grad)w, v)], quadrature-weighted.
inline double trilinear(const VectorField& u, const VectorField& v,
                        const VectorField& w) {
  check_same_grid(u.grid, v.grid, "trilinear");
  check_same_grid(u.grid, w.grid, "trilinear");
  const double s = detail::vf_dot(detail::convect(u, v), w) -
                   detail::vf_dot(detail::convect(u, w), v);
  return 0.5 * s * u.grid.cell_area();
}

// ---- viscous stress and vector Laplacian -------------------------------

namespace detail {

// strain components: Dxx, Dyy at centers; Dxy at corners (one-sided against
// the wall with half-cell spacing)
struct Strain {
  std::vector<double> dxx, dyy;  // nx*ny
  std::vector<double> dxy;       // (nx+1)*(ny+1)
};

inline Strain strain_of(const VectorField& w) {
  const GridSpec& g = w.grid;
  const int nx = g.nx, ny = g.ny;
  Strain s;
  s.dxx.resize(static_cast<size_t>(nx) * ny);
  s.dyy.resize(s.dxx.size());
  s.dxy.resize(static_cast<size_t>(nx + 1) * (ny + 1));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      s.dxx[static_cast<size_t>(j) * nx + i] = (w.U(i + 1, j) - w.U(i, j)) / g.hx;
      s.dyy[static_cast<size_t>(j) * nx + i] = (w.V(i, j + 1) - w.V(i, j)) / g.hy;
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      double dudy;
      if (j == 0)
        dudy = w.U(i, 0) / (0.5 * g.hy);
      else if (j == ny)
        dudy = -w.U(i, ny - 1) / (0.5 * g.hy);
      else
        dudy = (w.U(i, j) - w.U(i, j - 1)) / g.hy;
      double dvdx;
      if (i == 0)
        dvdx = w.V(0, j) / (0.5 * g.hx);
      else if (i == nx)
        dvdx = -w.V(nx - 1, j) / (0.5 * g.hx);
      else
        dvdx = (w.V(i, j) - w.V(i - 1, j)) / g.hx;
      s.dxy[static_cast<size_t>(j) * (nx + 1) + i] = 0.5 * (dudy + dvdx);
    }
  return s;
}

inline double corner_wx(const GridSpec& g, int i) {
  return (i == 0 || i == g.nx) ? 0.5 * g.hx : g.hx;
}
inline double corner_wy(const GridSpec& g, int j) {
  return (j == 0 || j == g.ny) ? 0.5 * g.hy : g.hy;
}

}  // namespace detail

// 2 * integral nu |D u|^2, with nu sampled at centers (nuc) and corners (nun).
inline double viscous_dissipation(const VectorField& w, const std::vector<double>& nuc,
                                  const std::vector<double>& nun) {
  const GridSpec& g = w.grid;
  detail::Strain s = detail::strain_of(w);
  double q = 0.0;
  for (size_t k = 0; k < s.dxx.size(); ++k)
    q += 2.0 * nuc[k] * (s.dxx[k] * s.dxx[k] + s.dyy[k] * s.dyy[k]) * g.cell_area();
  for (int j = 0; j <= g.ny; ++j)
    for (int i = 0; i <= g.nx; ++i) {
      const size_t k = static_cast<size_t>(j) * (g.nx + 1) + i;
      q += 4.0 * nun[k] * s.dxy[k] * s.dxy[k] * detail::corner_wx(g, i) *
           detail::corner_wy(g, j);
    }
  return q;
}

// A w = -div(2 nu D w) as the gradient of the dissipation form: symmetric
// positive semidefinite by construction, (A w, w) * hx hy = dissipation(w).
inline VectorField viscous_apply(const VectorField& w, const std::vector<double>& nuc,
                                 const std::vector<double>& nun) {
  const GridSpec& g = w.grid;
  const int nx = g.nx, ny = g.ny;
  detail::Strain s = detail::strain_of(w);
  VectorField out(g);
  const double inv_area = 1.0 / g.cell_area();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const size_t k = static_cast<size_t>(j) * nx + i;
      const double cx = 2.0 * nuc[k] * s.dxx[k] * g.cell_area() / g.hx * inv_area;
      out.U(i + 1, j) += cx;
      out.U(i, j) -= cx;
      const double cy = 2.0 * nuc[k] * s.dyy[k] * g.cell_area() / g.hy * inv_area;
      out.V(i, j + 1) += cy;
      out.V(i, j) -= cy;
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const size_t k = static_cast<size_t>(j) * (nx + 1) + i;
      const double c =
          4.0 * nun[k] * s.dxy[k] * detail::corner_wx(g, i) * detail::corner_wy(g, j) *
          0.5 * inv_area;  // d(2 Dxy^2)/dDxy = 4 Dxy; Dxy carries the 1/2
      // du/dy part
      if (j == 0) {
        out.U(i, 0) += c / (0.5 * g.hy);
      } else if (j == ny) {
        out.U(i, ny - 1) -= c / (0.5 * g.hy);
      } else {
        out.U(i, j) += c / g.hy;
        out.U(i, j - 1) -= c / g.hy;
      }
      // dv/dx part
      if (i == 0) {
        out.V(0, j) += c / (0.5 * g.hx);
      } else if (i == nx) {
        out.V(nx - 1, j) -= c / (0.5 * g.hx);
      } else {
        out.V(i, j) += c / g.hx;
        out.V(i - 1, j) -= c / g.hx;
      }
    }
  out.enforce_no_slip();
  return out;
}

// A w = -Lap w in the full-gradient form whose quadratic form is
// vector_grad_sq; used by the Stokes eigenvalue and the H1 inequalities.
inline VectorField vector_laplacian_apply(const VectorField& w) {
  const GridSpec& g = w.grid;
  const int nx = g.nx, ny = g.ny;
  VectorField out(g);
  const double inv_area = 1.0 / g.cell_area();
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double dudx = (w.U(i + 1, j) - w.U(i, j)) / g.hx;
      const double cu = dudx * g.cell_area() / g.hx * inv_area;
      out.U(i + 1, j) += cu;
      out.U(i, j) -= cu;
      const double dvdy = (w.V(i, j + 1) - w.V(i, j)) / g.hy;
      const double cv = dvdy * g.cell_area() / g.hy * inv_area;
      out.V(i, j + 1) += cv;
      out.V(i, j) -= cv;
    }
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double wgt = detail::corner_wx(g, i) * detail::corner_wy(g, j) * inv_area;
      double dudy;
      if (j == 0)
        dudy = w.U(i, 0) / (0.5 * g.hy);
      else if (j == ny)
        dudy = -w.U(i, ny - 1) / (0.5 * g.hy);
      else
        dudy = (w.U(i, j) - w.U(i, j - 1)) / g.hy;
      const double cu = dudy * wgt;
      if (j == 0) {
        out.U(i, 0) += cu / (0.5 * g.hy);
      } else if (j == ny) {
        out.U(i, ny - 1) -= cu / (0.5 * g.hy);
      } else {
        out.U(i, j) += cu / g.hy;
        out.U(i, j - 1) -= cu / g.hy;
      }
      double dvdx;
      if (i == 0)
        dvdx = w.V(0, j) / (0.5 * g.hx);
      else if (i == nx)
        dvdx = -w.V(nx - 1, j) / (0.5 * g.hx);
      else
        dvdx = (w.V(i, j) - w.V(i - 1, j)) / g.hx;
      const double cv = dvdx * wgt;
      if (i == 0) {
        out.V(0, j) += cv / (0.5 * g.hx);
      } else if (i == nx) {
        out.V(nx - 1, j) -= cv / (0.5 * g.hx);
      } else {
        out.V(i, j) += cv / g.hx;
        out.V(i - 1, j) -= cv / g.hx;
      }
    }
  out.enforce_no_slip();
  return out;
}

// ---- conjugate gradients on staggered fields ---------------------------

namespace detail {

inline void vf_axpy(VectorField& y, double a, const VectorField& x) {
  for (size_t k = 0; k < y.u.size(); ++k) y.u[k] += a * x.u[k];
  for (size_t k = 0; k < y.v.size(); ++k) y.v[k] += a * x.v[k];
}

// CG for SPD operators over no-slip fields; relative residual tolerance.
inline VectorField cg_solve(const std::function<VectorField(const VectorField&)>& apply,
                            const VectorField& b, double rel_tol, int max_iter) {
  VectorField x(b.grid);
  VectorField r = b;
  VectorField p = r;
  double rs = vf_dot(r, r);
  const double b2 = rs;
  if (b2 == 0.0) return x;
  for (int it = 0; it < max_iter; ++it) {
    VectorField Ap = apply(p);
    const double alpha = rs / vf_dot(p, Ap);
    vf_axpy(x, alpha, p);
    vf_axpy(r, -alpha, Ap);
    const double rs_new = vf_dot(r, r);
    if (rs_new <= rel_tol * rel_tol * b2) return x;
    const double beta = rs_new / rs;
    rs = rs_new;
    for (size_t k = 0; k < p.u.size(); ++k) p.u[k] = r.u[k] + beta * p.u[k];
    for (size_t k = 0; k < p.v.size(); ++k) p.v[k] = r.v[k] + beta * p.v[k];
  }
  throw std::runtime_error("cg_solve: no convergence");
}

}  // namespace detail

struct StokesEigen {
  double lambda1 = 0.0;             // inverse-iteration estimate
  double lambda1_lower_bound = 0.0; // analytic Dirichlet-Laplacian bound
  // conservative value for certificates
  double conservative() const { return std::min(lambda1, lambda1_lower_bound); }
};

// Smallest eigenvalue of the discrete Stokes operator (projected vector
// Laplacian with no-slip) by inverse power iteration.
inline StokesEigen stokes_lambda1(const GridSpec& g) {
  StokesEigen res;
  res.lambda1_lower_bound = M_PI * M_PI * (1.0 / (g.Lx * g.Lx) + 1.0 / (g.Ly * g.Ly));

  auto apply_stokes = [&](const VectorField& w) {
    return helmholtz_project(vector_laplacian_apply(w));
  };

  // deterministic start vector, projected into the divergence-free space
  VectorField x(g);
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 1; i < g.nx; ++i) x.U(i, j) = dist(rng);
  for (int j = 1; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) x.V(i, j) = dist(rng);
  x = helmholtz_project(x);

  double lambda = 0.0;
  const int max_outer = 10000;
  for (int it = 0; it < max_outer; ++it) {
    const double nrm = std::sqrt(detail::vf_dot(x, x));
    for (double& e : x.u) e /= nrm;
    for (double& e : x.v) e /= nrm;
    VectorField y = detail::cg_solve(apply_stokes, x, 1e-12, 100000);
    y = helmholtz_project(y);
    const double ray = detail::vf_dot(x, y);  // x' A^{-1} x with |x| = 1
    const double lam_new = 1.0 / ray;
    const bool converged = it > 0 && std::abs(lam_new - lambda) <= 1e-8 * lam_new;
    lambda = lam_new;
    x = y;
    if (converged) {
      res.lambda1 = lambda;
      return res;
    }
  }
  throw std::runtime_error("stokes_lambda1: inverse iteration did not converge");
}

// C_Omega = 1/sqrt(mu_1), mu_1 the first nonzero Neumann eigenvalue of the
// rectangle: pi^2 min(1/Lx^2, 1/Ly^2). Analytic.
inline double poincare_constant(const GridSpec& g) {
  const double mu1 = M_PI * M_PI * std::min(1.0 / (g.Lx * g.Lx), 1.0 / (g.Ly * g.Ly));
  return 1.0 / std::sqrt(mu1);
}

}  // namespace nchns
