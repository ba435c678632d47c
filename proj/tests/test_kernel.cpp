#include <doctest.h>

#include <cmath>
#include <random>

#include "nchns/grid.hpp"
#include "nchns/kernel.hpp"

using namespace nchns;

namespace {

ScalarField random_field(const GridSpec& g, std::mt19937_64& rng, double amp = 1.0) {
  std::uniform_real_distribution<double> dist(-amp, amp);
  ScalarField f(g);
  for (double& v : f.values) v = dist(rng);
  return f;
}

// O(N^2) reference: (J*f)(x_i) = sum_j J(x_i - y_j) f(y_j) hx hy
ScalarField brute_convolve(const Kernel& K, const ScalarField& f) {
  const GridSpec& g = f.grid;
  ScalarField out(g);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      long double acc = 0.0L;
      for (int jj = 0; jj < g.ny; ++jj)
        for (int ii = 0; ii < g.nx; ++ii)
          acc += K.sample(i - ii, j - jj) * f(ii, jj);
      out(i, j) = static_cast<double>(acc) * g.cell_area();
    }
  return out;
}

}  // namespace

TEST_SUITE("kernel") {
  TEST_CASE("zero-amplitude kernel") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    Kernel K = build_kernel({KernelFamily::Gaussian, 0.0, 0.3}, g);
    CHECK(K.norm_J_L1 == 0.0);
    CHECK(K.norm_gradJ_L1 == 0.0);
    for (double v : K.a.values) CHECK(v == 0.0);
  }

  TEST_CASE("constant kernel gives a = c|Omega| everywhere") {
    GridSpec g = make_grid(1.0, 1.0, 12, 12);
    const double c = 0.7;
    std::vector<double> samples(static_cast<size_t>(2 * 12 - 1) * (2 * 12 - 1), c);
    Kernel K = build_kernel_from_samples(g, samples);
    for (double v : K.a.values)
      CHECK(v == doctest::Approx(c * g.area()).epsilon(1e-12));
  }

  TEST_CASE("gaussian mass matches the analytic integral") {
    GridSpec g = make_grid(1.0, 1.0, 64, 64);
    const double w = 0.1;
    Kernel K = build_kernel({KernelFamily::Gaussian, 1.0, w}, g);
    const double analytic = 2.0 * M_PI * w * w;  // integral of exp(-r^2/2w^2)
    CHECK(K.norm_J_L1 == doctest::Approx(analytic).epsilon(1e-3));
  }

  TEST_CASE("under-resolved width is rejected with the minimum named") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    try {
      build_kernel({KernelFamily::Gaussian, 1.0, 0.01}, g);
      FAIL("expected an error");
    } catch (const std::invalid_argument& e) {
      CHECK(std::string(e.what()).find("minimum") != std::string::npos);
    }
  }

  TEST_CASE("convolution of a constant reproduces a(x)") {
    GridSpec g = make_grid(1.0, 1.5, 16, 24);
    Kernel K = build_kernel({KernelFamily::CompactBump, 2.0, 0.25}, g);
    ScalarField f(g, 0.4);
    ScalarField conv = convolve(K, f);
    for (size_t k = 0; k < conv.values.size(); ++k)
      CHECK(conv.values[k] == doctest::Approx(0.4 * K.a.values[k]).epsilon(1e-13));
  }

  TEST_CASE("single-offset delta kernel scales the field") {
    GridSpec g = make_grid(1.0, 1.0, 12, 12);
    const int kx = 2 * g.nx - 1, ky = 2 * g.ny - 1;
    std::vector<double> samples(static_cast<size_t>(kx) * ky, 0.0);
    const double A = 3.0;
    samples[static_cast<size_t>(g.ny - 1) * kx + (g.nx - 1)] = A;  // offset (0,0)
    Kernel K = build_kernel_from_samples(g, samples);
    CHECK(K.norm_J_L1 == doctest::Approx(A * g.cell_area()).epsilon(1e-14));
    std::mt19937_64 rng(2);
    ScalarField f = random_field(g, rng);
    ScalarField conv = convolve(K, f);
    for (size_t k = 0; k < f.values.size(); ++k)
      CHECK(conv.values[k] ==
            doctest::Approx(A * g.cell_area() * f.values[k]).epsilon(1e-12));
  }

  TEST_CASE("fast convolution equals the direct double sum") {
    GridSpec g = make_grid(1.1, 0.8, 12, 12);
    std::mt19937_64 rng(17);
    for (auto spec : {KernelSpec{KernelFamily::Gaussian, 1.3, 0.22},
                      KernelSpec{KernelFamily::CompactBump, 0.8, 0.3}}) {
      Kernel K = build_kernel(spec, g);
      for (int trial = 0; trial < 5; ++trial) {
        ScalarField f = random_field(g, rng);
        ScalarField fast = convolve(K, f);
        ScalarField slow = brute_convolve(K, f);
        for (size_t k = 0; k < f.values.size(); ++k)
          CHECK(std::abs(fast.values[k] - slow.values[k]) < 1e-12);
      }
    }
  }

  TEST_CASE("gradient convolution: zero, constant, and random oracle") {
    GridSpec g = make_grid(1.0, 1.0, 12, 12);
    Kernel K = build_kernel({KernelFamily::Gaussian, 1.0, 0.25}, g);
    ScalarField zero(g);
    auto gz = grad_convolve(K, zero);
    for (double v : gz.first.values) CHECK(v == 0.0);
    for (double v : gz.second.values) CHECK(v == 0.0);

    // f = k: (grad J * f) should match interior centered differences of a
    ScalarField cf(g, 2.0);
    auto gc = grad_convolve(K, cf);
    double scale = 0.0;
    for (double v : gc.first.values) scale = std::max(scale, std::abs(v));
    for (int j = 1; j + 1 < g.ny; ++j)
      for (int i = 1; i + 1 < g.nx; ++i) {
        const double dax = 2.0 * (K.a(i + 1, j) - K.a(i - 1, j)) / (2.0 * g.hx);
        CHECK(std::abs(gc.first(i, j) - dax) < 3e-2 * (scale + 1e-12));
      }

    // random oracle against direct summation with the analytic gradient samples
    std::mt19937_64 rng(31);
    ScalarField f = random_field(g, rng);
    auto gf = grad_convolve(K, f);
    const int kx = 2 * g.nx - 1;
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        long double ax = 0.0L, ay = 0.0L;
        for (int jj = 0; jj < g.ny; ++jj)
          for (int ii = 0; ii < g.nx; ++ii) {
            const size_t s =
                static_cast<size_t>(j - jj + g.ny - 1) * kx + (i - ii + g.nx - 1);
            ax += K.grad_x[s] * f(ii, jj);
            ay += K.grad_y[s] * f(ii, jj);
          }
        CHECK(std::abs(gf.first(i, j) - static_cast<double>(ax) * g.cell_area()) <
              1e-12);
        CHECK(std::abs(gf.second(i, j) - static_cast<double>(ay) * g.cell_area()) <
              1e-12);
      }
  }

  TEST_CASE("gaussian gradient L1 norm matches the analytic value") {
    GridSpec g = make_grid(1.0, 1.0, 64, 64);
    const double w = 0.1, A = 1.0;
    Kernel K = build_kernel({KernelFamily::Gaussian, A, w}, g);
    // integral |grad J| = A (r/w^2) e^{-r^2/2w^2} over the plane
    const double analytic = A * 2.0 * M_PI * w * std::sqrt(M_PI / 2.0);
    CHECK(K.norm_gradJ_L1 == doctest::Approx(analytic).epsilon(1e-2));
  }

  TEST_CASE("structural invariants: symmetry, positivity, Young, adjointness") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    Kernel K = build_kernel({KernelFamily::Gaussian, 1.0, 0.2}, g);
    for (int dy = -(g.ny - 1); dy <= g.ny - 1; ++dy)
      for (int dx = -(g.nx - 1); dx <= g.nx - 1; ++dx)
        CHECK(K.sample(dx, dy) == K.sample(-dx, -dy));
    double amax = 0.0;
    for (double v : K.a.values) {
      CHECK(v >= 0.0);
      amax = std::max(amax, v);
    }
    CHECK(amax <= K.norm_J_L1 * (1.0 + 1e-12));

    std::mt19937_64 rng(41);
    for (int trial = 0; trial < 100; ++trial) {
      ScalarField f = random_field(g, rng);
      CHECK(l2_norm(convolve(K, f)) <= K.norm_J_L1 * l2_norm(f) * (1.0 + 1e-12));
    }
    for (int trial = 0; trial < 10; ++trial) {
      ScalarField f = random_field(g, rng);
      ScalarField h = random_field(g, rng);
      CHECK(std::abs(l2_inner(convolve(K, f), h) - l2_inner(f, convolve(K, h))) <
            1e-12);
    }
  }

  TEST_CASE("grid mismatch is rejected") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    GridSpec g2 = make_grid(1.0, 1.0, 12, 12);
    Kernel K = build_kernel({KernelFamily::Gaussian, 1.0, 0.2}, g);
    ScalarField f(g2);
    CHECK_THROWS_AS(convolve(K, f), std::invalid_argument);
  }
}
