// kernel.hpp
// Spatial interaction kernel J: sampled on the offset lattice, the induced
// field a(x) = \int_Omega J(x-y) dy, analytic gradient samples, L1 norms, and
// convolution over Omega (zero extension) via padded FFT.

#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nchns/grid.hpp"

namespace nchns {

enum class KernelFamily { Gaussian, CompactBump };

struct KernelSpec {
  KernelFamily family = KernelFamily::Gaussian;
  double amplitude = 0.0;  // >= 0
  double width = 1.0;      // > 0
};

inline KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "gaussian") return KernelFamily::Gaussian;
  if (s == "compact-bump") return KernelFamily::CompactBump;
  throw std::invalid_argument("unknown kernel family: " + s);
}

namespace detail {

// J(x) for the radially symmetric families. Both are nonnegative and even,
// so (A1) holds by construction.
inline double kernel_value(const KernelSpec& s, double x, double y) {
  const double r2 = x * x + y * y;
  const double w2 = s.width * s.width;
  switch (s.family) {
    case KernelFamily::Gaussian:
      return s.amplitude * std::exp(-0.5 * r2 / w2);
    case KernelFamily::CompactBump: {
      const double q = r2 / w2;
      if (q >= 1.0) return 0.0;
      return s.amplitude * std::exp(1.0 - 1.0 / (1.0 - q));
    }
  }
  return 0.0;
}

// Analytic gradient of the family formula (not a finite difference).
inline void kernel_gradient(const KernelSpec& s, double x, double y, double& gx,
                            double& gy) {
  const double r2 = x * x + y * y;
  const double w2 = s.width * s.width;
  switch (s.family) {
    case KernelFamily::Gaussian: {
      const double J = s.amplitude * std::exp(-0.5 * r2 / w2);
      gx = -x / w2 * J;
      gy = -y / w2 * J;
      return;
    }
    case KernelFamily::CompactBump: {
      const double q = r2 / w2;
      if (q >= 1.0) {
        gx = gy = 0.0;
        return;
      }
      const double om = 1.0 - q;
      const double J = s.amplitude * std::exp(1.0 - 1.0 / om);
      const double dJdq = -J / (om * om);
      gx = dJdq * 2.0 * x / w2;
      gy = dJdq * 2.0 * y / w2;
      return;
    }
  }
  gx = gy = 0.0;
}

inline int next_fast_size(int n) {
  for (;; ++n) {
    int m = n;
    for (int p : {2, 3, 5})
      while (m % p == 0) m /= p;
    if (m == 1) return n;
  }
}

// Real 2D FFT workspace of fixed padded size. Plans and buffers are reused;
// a mutex serializes buffer access so a shared Kernel stays usable from
// several threads.
class Fft2 {
 public:
  Fft2(int px, int py) : px_(px), py_(py), nc_(px / 2 + 1) {
    real_ = fftw_alloc_real(static_cast<size_t>(px_) * py_);
    spec_ = fftw_alloc_complex(static_cast<size_t>(nc_) * py_);
    fwd_ = fftw_plan_dft_r2c_2d(py_, px_, real_, spec_, FFTW_ESTIMATE);
    bwd_ = fftw_plan_dft_c2r_2d(py_, px_, spec_, real_, FFTW_ESTIMATE);
  }
  ~Fft2() {
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(bwd_);
    fftw_free(real_);
    fftw_free(spec_);
  }
  Fft2(const Fft2&) = delete;
  Fft2& operator=(const Fft2&) = delete;

  int px() const { return px_; }
  int py() const { return py_; }
  int nc() const { return nc_; }
  size_t spec_size() const { return static_cast<size_t>(nc_) * py_; }

  // spectrum of a zero-padded real array placed at origin
  std::vector<std::complex<double>> forward(const std::vector<double>& src, int sx,
                                            int sy) {
    std::lock_guard<std::mutex> lock(mu_);
    std::fill(real_, real_ + static_cast<size_t>(px_) * py_, 0.0);
    for (int j = 0; j < sy; ++j)
      for (int i = 0; i < sx; ++i)
        real_[static_cast<size_t>(j) * px_ + i] = src[static_cast<size_t>(j) * sx + i];
    fftw_execute(fwd_);
    std::vector<std::complex<double>> out(spec_size());
    for (size_t k = 0; k < out.size(); ++k) out[k] = {spec_[k][0], spec_[k][1]};
    return out;
  }

  // pointwise product with a stored spectrum, inverse transform, extract a
  // window at (ox, oy)
  void convolve_extract(const std::vector<double>& src, int sx, int sy,
                        const std::vector<std::complex<double>>& khat, double scale,
                        int ox, int oy, std::vector<double>& dst, int dx, int dy) {
    std::lock_guard<std::mutex> lock(mu_);
    std::fill(real_, real_ + static_cast<size_t>(px_) * py_, 0.0);
    for (int j = 0; j < sy; ++j)
      for (int i = 0; i < sx; ++i)
        real_[static_cast<size_t>(j) * px_ + i] = src[static_cast<size_t>(j) * sx + i];
    fftw_execute(fwd_);
    const double norm = scale / (static_cast<double>(px_) * py_);
    for (size_t k = 0; k < spec_size(); ++k) {
      const std::complex<double> z =
          std::complex<double>(spec_[k][0], spec_[k][1]) * khat[k] * norm;
      spec_[k][0] = z.real();
      spec_[k][1] = z.imag();
    }
    fftw_execute(bwd_);
    dst.resize(static_cast<size_t>(dx) * dy);
    for (int j = 0; j < dy; ++j)
      for (int i = 0; i < dx; ++i)
        dst[static_cast<size_t>(j) * dx + i] =
            real_[static_cast<size_t>(j + oy) * px_ + (i + ox)];
  }

 private:
  int px_, py_, nc_;
  double* real_;
  fftw_complex* spec_;
  fftw_plan fwd_, bwd_;
  std::mutex mu_;
};

}  // namespace detail

// Immutable after build_kernel.
struct Kernel {
  KernelSpec spec;
  GridSpec grid;
  std::vector<double> samples;    // J on the (2nx-1)x(2ny-1) offset lattice
  std::vector<double> grad_x;     // dJ/dx, same lattice (analytic)
  std::vector<double> grad_y;     // dJ/dy
  ScalarField a;                  // a(x) = sum_y J(x-y) hx hy over Omega
  double norm_J_L1 = 0.0;
  double norm_gradJ_L1 = 0.0;

  // convolution machinery
  std::shared_ptr<detail::Fft2> fft;
  std::vector<std::complex<double>> jhat, gxhat, gyhat;

  int kx() const { return 2 * grid.nx - 1; }
  int ky() const { return 2 * grid.ny - 1; }
  double sample(int dx, int dy) const {
    return samples[static_cast<size_t>(dy + grid.ny - 1) * kx() + (dx + grid.nx - 1)];
  }
};

inline ScalarField convolve(const Kernel& K, const ScalarField& f) {
  check_same_grid(K.grid, f.grid, "convolve");
  ScalarField out(f.grid);
  K.fft->convolve_extract(f.values, f.grid.nx, f.grid.ny, K.jhat, f.grid.cell_area(),
                          f.grid.nx - 1, f.grid.ny - 1, out.values, f.grid.nx,
                          f.grid.ny);
  return out;
}

// (grad J * f) as a pair of cell-centered components.
inline std::pair<ScalarField, ScalarField> grad_convolve(const Kernel& K,
                                                         const ScalarField& f) {
  check_same_grid(K.grid, f.grid, "grad_convolve");
  std::pair<ScalarField, ScalarField> out{ScalarField(f.grid), ScalarField(f.grid)};
  K.fft->convolve_extract(f.values, f.grid.nx, f.grid.ny, K.gxhat, f.grid.cell_area(),
                          f.grid.nx - 1, f.grid.ny - 1, out.first.values, f.grid.nx,
                          f.grid.ny);
  K.fft->convolve_extract(f.values, f.grid.nx, f.grid.ny, K.gyhat, f.grid.cell_area(),
                          f.grid.nx - 1, f.grid.ny - 1, out.second.values, f.grid.nx,
                          f.grid.ny);
  return out;
}

inline Kernel build_kernel(const KernelSpec& spec, const GridSpec& grid) {
  if (spec.amplitude < 0.0) throw std::invalid_argument("build_kernel: amplitude < 0");
  if (!(spec.width > 0.0)) throw std::invalid_argument("build_kernel: width <= 0");
  const double min_width = 2.0 * std::max(grid.hx, grid.hy);
  if (spec.width < min_width)
    throw std::invalid_argument(
        "build_kernel: kernel width " + std::to_string(spec.width) +
        " under-resolved; minimum for this grid is " + std::to_string(min_width));

  Kernel K;
  K.spec = spec;
  K.grid = grid;
  const int kx = K.kx(), ky = K.ky();
  K.samples.resize(static_cast<size_t>(kx) * ky);
  K.grad_x.resize(K.samples.size());
  K.grad_y.resize(K.samples.size());
  for (int dy = -(grid.ny - 1); dy <= grid.ny - 1; ++dy)
    for (int dx = -(grid.nx - 1); dx <= grid.nx - 1; ++dx) {
      const size_t k =
          static_cast<size_t>(dy + grid.ny - 1) * kx + (dx + grid.nx - 1);
      const double x = dx * grid.hx, y = dy * grid.hy;
      K.samples[k] = detail::kernel_value(spec, x, y);
      detail::kernel_gradient(spec, x, y, K.grad_x[k], K.grad_y[k]);
    }

  double sj = 0.0, sg = 0.0;
  for (size_t k = 0; k < K.samples.size(); ++k) {
    sj += std::abs(K.samples[k]);
    sg += std::hypot(K.grad_x[k], K.grad_y[k]);
  }
  K.norm_J_L1 = sj * grid.cell_area();
  K.norm_gradJ_L1 = sg * grid.cell_area();

  const int px = detail::next_fast_size(3 * grid.nx - 2);
  const int py = detail::next_fast_size(3 * grid.ny - 2);
  K.fft = std::make_shared<detail::Fft2>(px, py);
  K.jhat = K.fft->forward(K.samples, kx, ky);
  K.gxhat = K.fft->forward(K.grad_x, kx, ky);
  K.gyhat = K.fft->forward(K.grad_y, kx, ky);

  ScalarField ones(grid, 1.0);
  K.a = convolve(K, ones);
  for (double& v : K.a.values)
    if (v < 0.0 && v > -1e-14 * K.norm_J_L1) v = 0.0;  // FFT round-off on a >= 0
  return K;
}

inline std::pair<double, double> kernel_norms(const Kernel& K) {
  return {K.norm_J_L1, K.norm_gradJ_L1};
}

// Assemble a kernel from explicit offset-lattice samples (gradients by
// centered differencing of the samples). Used for degenerate cases the
// families cannot express, e.g. single-offset deltas.
inline Kernel build_kernel_from_samples(const GridSpec& grid,
                                        std::vector<double> samples) {
  const int kx = 2 * grid.nx - 1, ky = 2 * grid.ny - 1;
  if (samples.size() != static_cast<size_t>(kx) * ky)
    throw std::invalid_argument("build_kernel_from_samples: size mismatch");
  Kernel K;
  K.spec = KernelSpec{KernelFamily::Gaussian, 0.0, 1.0};
  K.grid = grid;
  K.samples = std::move(samples);
  K.grad_x.assign(K.samples.size(), 0.0);
  K.grad_y.assign(K.samples.size(), 0.0);
  auto at = [&](int ix, int iy) -> double {
    if (ix < 0 || ix >= kx || iy < 0 || iy >= ky) return 0.0;
    return K.samples[static_cast<size_t>(iy) * kx + ix];
  };
  for (int iy = 0; iy < ky; ++iy)
    for (int ix = 0; ix < kx; ++ix) {
      const size_t k = static_cast<size_t>(iy) * kx + ix;
      K.grad_x[k] = (at(ix + 1, iy) - at(ix - 1, iy)) / (2.0 * grid.hx);
      K.grad_y[k] = (at(ix, iy + 1) - at(ix, iy - 1)) / (2.0 * grid.hy);
    }
  double sj = 0.0, sg = 0.0;
  for (size_t k = 0; k < K.samples.size(); ++k) {
    sj += std::abs(K.samples[k]);
    sg += std::hypot(K.grad_x[k], K.grad_y[k]);
  }
  K.norm_J_L1 = sj * grid.cell_area();
  K.norm_gradJ_L1 = sg * grid.cell_area();
  const int px = detail::next_fast_size(3 * grid.nx - 2);
  const int py = detail::next_fast_size(3 * grid.ny - 2);
  K.fft = std::make_shared<detail::Fft2>(px, py);
  K.jhat = K.fft->forward(K.samples, kx, ky);
  K.gxhat = K.fft->forward(K.grad_x, kx, ky);
  K.gyhat = K.fft->forward(K.grad_y, kx, ky);
  ScalarField ones(grid, 1.0);
  K.a = convolve(K, ones);
  return K;
}

}  // namespace nchns
