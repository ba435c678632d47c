// grid.hpp
// Rectangular-domain discretization: cell-centered scalar fields, MAC
// (face-staggered) vector fields, quadrature, norms, mean projections.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace nchns {

struct GridSpec {
  double Lx = 1.0;
  double Ly = 1.0;
  int nx = 0;
  int ny = 0;
  double hx = 0.0;
  double hy = 0.0;

  double area() const { return Lx * Ly; }
  double cell_area() const { return hx * hy; }
  // cell-center coordinates
  double xc(int i) const { return (i + 0.5) * hx; }
  double yc(int j) const { return (j + 0.5) * hy; }

  bool operator==(const GridSpec& o) const {
    return Lx == o.Lx && Ly == o.Ly && nx == o.nx && ny == o.ny;
  }
  bool operator!=(const GridSpec& o) const { return !(*this == o); }
};

inline GridSpec make_grid(double Lx, double Ly, int nx, int ny) {
  if (!(Lx > 0.0) || !(Ly > 0.0))
    throw std::invalid_argument("make_grid: domain side lengths must be positive");
  if (nx < 8 || ny < 8)
    throw std::invalid_argument("make_grid: cell counts must be >= 8");
  if (nx % 2 != 0 || ny % 2 != 0)
    throw std::invalid_argument("make_grid: cell counts must be even, got " +
                                std::to_string(nx) + "x" + std::to_string(ny));
  GridSpec g;
  g.Lx = Lx;
  g.Ly = Ly;
  g.nx = nx;
  g.ny = ny;
  g.hx = Lx / nx;
  g.hy = Ly / ny;
  return g;
}

// Cell-centered scalar samples, row-major with x fastest.
struct ScalarField {
  GridSpec grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const GridSpec& g, double fill = 0.0)
      : grid(g), values(static_cast<size_t>(g.nx) * g.ny, fill) {}

  double& operator()(int i, int j) { return values[static_cast<size_t>(j) * grid.nx + i]; }
  double operator()(int i, int j) const { return values[static_cast<size_t>(j) * grid.nx + i]; }
};

// MAC velocity: u on x-faces ((nx+1) x ny), v on y-faces (nx x (ny+1)).
// Boundary faces hold exactly zero (no-slip).
struct VectorField {
  GridSpec grid;
  std::vector<double> u;  // (nx+1)*ny
  std::vector<double> v;  // nx*(ny+1)

  VectorField() = default;
  explicit VectorField(const GridSpec& g)
      : grid(g),
        u(static_cast<size_t>(g.nx + 1) * g.ny, 0.0),
        v(static_cast<size_t>(g.nx) * (g.ny + 1), 0.0) {}

  double& U(int i, int j) { return u[static_cast<size_t>(j) * (grid.nx + 1) + i]; }
  double U(int i, int j) const { return u[static_cast<size_t>(j) * (grid.nx + 1) + i]; }
  double& V(int i, int j) { return v[static_cast<size_t>(j) * grid.nx + i]; }
  double V(int i, int j) const { return v[static_cast<size_t>(j) * grid.nx + i]; }

  void enforce_no_slip() {
    for (int j = 0; j < grid.ny; ++j) {
      U(0, j) = 0.0;
      U(grid.nx, j) = 0.0;
    }
    for (int i = 0; i < grid.nx; ++i) {
      V(i, 0) = 0.0;
      V(i, grid.ny) = 0.0;
    }
  }
};

inline void check_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
  if (a != b) throw std::invalid_argument(std::string(where) + ": grid mismatch");
}

inline double mean(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v;
  return s * f.grid.cell_area() / f.grid.area();
}

inline ScalarField project_zero_mean(const ScalarField& f) {
  ScalarField g = f;
  const double m = mean(f);
  for (double& v : g.values) v -= m;
  return g;
}

inline double l2_norm(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v;
  return std::sqrt(s * f.grid.cell_area());
}

inline double l4_norm(const ScalarField& f) {
  double s = 0.0;
  for (double v : f.values) s += v * v * v * v;
  return std::pow(s * f.grid.cell_area(), 0.25);
}

inline double linf_norm(const ScalarField& f) {
  double m = 0.0;
  for (double v : f.values) m = std::max(m, std::abs(v));
  return m;
}

inline double l2_inner(const ScalarField& f, const ScalarField& g) {
  check_same_grid(f.grid, g.grid, "l2_inner");
  double s = 0.0;
  for (size_t k = 0; k < f.values.size(); ++k) s += f.values[k] * g.values[k];
  return s * f.grid.cell_area();
}

// One-sided interior differences; homogeneous Neumann ghosts make
// boundary-face gradients vanish.
inline double h1_seminorm(const ScalarField& f) {
  const GridSpec& g = f.grid;
  double s = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i + 1 < g.nx; ++i) {
      const double d = (f(i + 1, j) - f(i, j)) / g.hx;
      s += d * d;
    }
  for (int j = 0; j + 1 < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const double d = (f(i, j + 1) - f(i, j)) / g.hy;
      s += d * d;
    }
  return std::sqrt(s * g.cell_area());
}

inline double l2_norm(const VectorField& w) {
  double s = 0.0;
  for (double x : w.u) s += x * x;
  for (double x : w.v) s += x * x;
  return std::sqrt(s * w.grid.cell_area());
}

inline double l2_inner(const VectorField& a, const VectorField& b) {
  check_same_grid(a.grid, b.grid, "l2_inner");
  double s = 0.0;
  for (size_t k = 0; k < a.u.size(); ++k) s += a.u[k] * b.u[k];
  for (size_t k = 0; k < a.v.size(); ++k) s += a.v[k] * b.v[k];
  return s * a.grid.cell_area();
}

inline double linf_norm(const VectorField& w) {
  double m = 0.0;
  for (double x : w.u) m = std::max(m, std::abs(x));
  for (double x : w.v) m = std::max(m, std::abs(x));
  return m;
}

// Full discrete gradient energy of a staggered field. Diagonal parts live at
// cell centers, cross parts at cell corners; wall gradients are one-sided
// against the no-slip value with half-cell spacing. Quadrature weights shrink
// to half/quarter cells along walls so the form matches the vector Laplacian
// used for the Stokes eigenvalue.
inline double vector_grad_sq(const VectorField& w) {
  const GridSpec& g = w.grid;
  const int nx = g.nx, ny = g.ny;
  double s = 0.0;
  // du/dx, dv/dy at centers
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const double dudx = (w.U(i + 1, j) - w.U(i, j)) / g.hx;
      const double dvdy = (w.V(i, j + 1) - w.V(i, j)) / g.hy;
      s += (dudx * dudx + dvdy * dvdy) * g.cell_area();
    }
  // du/dy, dv/dx at corners
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
      const double wx = (i == 0 || i == nx) ? 0.5 * g.hx : g.hx;
      const double wy = (j == 0 || j == ny) ? 0.5 * g.hy : g.hy;
      s += (dudy * dudy + dvdx * dvdx) * wx * wy;
    }
  return s;
}

struct VectorNorms {
  double l2 = 0.0;
  double linf = 0.0;
  double h1_seminorm = 0.0;
};

inline VectorNorms vector_norms(const VectorField& w) {
  VectorNorms n;
  n.l2 = l2_norm(w);
  n.linf = linf_norm(w);
  n.h1_seminorm = std::sqrt(vector_grad_sq(w));
  return n;
}

}  // namespace nchns
