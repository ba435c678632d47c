#include <doctest.h>

#include <cmath>

#include "nchns/grid.hpp"
#include "nchns/kernel.hpp"
#include "nchns/potential.hpp"

using namespace nchns;

namespace {
Kernel zero_kernel(const GridSpec& g) {
  return build_kernel({KernelFamily::Gaussian, 0.0, 0.3}, g);
}
}  // namespace

TEST_SUITE("potential") {
  TEST_CASE("values at the origin and a closed-form point") {
    PotentialSpec p{1.0, 0.25, 1e-8, 1};
    CHECK(f_value(p, 0.0) == 0.0);
    CHECK(f_prime(p, 0.0) == 0.0);
    CHECK(f_double_prime(p, 0.0) == doctest::Approx(0.75).epsilon(1e-15));

    PotentialSpec q{1.0, 0.0, 1e-8, 1};
    // F'(1/2) = (1/2) ln 3 for theta = 1, theta_c = 0
    CHECK(f_prime(q, 0.5) ==
          doctest::Approx(0.54930614433405484570).epsilon(1e-15));
  }

  TEST_CASE("spec validation") {
    CHECK_THROWS_AS((PotentialSpec{-1.0, 0.0, 1e-8, 1}).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS((PotentialSpec{1.0, -0.1, 1e-8, 1}).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS((PotentialSpec{1.0, 0.0, 1e-2, 1}).validate(),
                    std::invalid_argument);
    CHECK_THROWS_AS((PotentialSpec{1.0, 0.0, 1e-8, 0}).validate(),
                    std::invalid_argument);
  }

  TEST_CASE("derivatives match finite differences away from the walls") {
    PotentialSpec p{1.3, 0.4, 1e-8, 1};
    const double h = 1e-6;
    for (double s = -0.9; s <= 0.9001; s += 0.05) {
      const double fd1 = (f_value(p, s + h) - f_value(p, s - h)) / (2.0 * h);
      CHECK(f_prime(p, s) == doctest::Approx(fd1).epsilon(1e-6));
      const double fd2 = (f_prime(p, s + h) - f_prime(p, s - h)) / (2.0 * h);
      CHECK(f_double_prime(p, s) == doctest::Approx(fd2).epsilon(1e-6));
    }
  }

  TEST_CASE("tiny arguments stay relatively accurate (log1p path)") {
    PotentialSpec p{1.0, 0.0, 1e-8, 1};
    for (double s : {1e-8, 1e-12, 1e-16, 1e-30, 1e-100}) {
      CHECK(f_prime(p, s) == doctest::Approx(s).epsilon(1e-12));
      CHECK(f_prime(p, -s) == doctest::Approx(-s).epsilon(1e-12));
    }
  }

  TEST_CASE("clamping is counted and monotone convexity holds") {
    PotentialSpec p{1.0, 0.0, 1e-8, 1};
    reset_clamp_count();
    (void)f_prime(p, 1.5);
    (void)f_value(p, -2.0);
    CHECK(clamp_count() == 2);
    reset_clamp_count();
    double prev = f_prime(p, -0.999);
    for (double s = -0.99; s <= 0.9901; s += 0.01) {
      const double cur = f_prime(p, s);
      CHECK(cur > prev);
      prev = cur;
    }
    CHECK(clamp_count() == 0);
  }

  TEST_CASE("convex split: kappa, G'', reconstruction") {
    PotentialSpec p0{1.0, 0.0, 1e-8, 1};
    SplitPotential s0 = convex_split(p0);
    CHECK(s0.kappa == 0.0);
    CHECK(s0.G(0.3) == f_value(p0, 0.3));

    PotentialSpec p{2.0, 1.0, 1e-8, 1};
    SplitPotential sp = convex_split(p);
    CHECK(sp.kappa == 1.0);
    CHECK(sp.Gpp(0.0) == doctest::Approx(2.0).epsilon(1e-15));
    for (int i = 0; i < 1000; ++i) {
      const double s = -0.999 + 1.998 * i / 999.0;
      CHECK(std::abs(sp.G(s) - 0.5 * sp.kappa * s * s - f_value(p, s)) < 1e-14);
      CHECK(sp.Gpp(s) >= 0.0);
    }
  }

  TEST_CASE("entropy-part derivative formula agrees with differencing") {
    PotentialSpec p{1.7, 0.6, 1e-8, 1};
    const double h = 1e-5;
    for (double s : {-0.8, -0.3, 0.0, 0.4, 0.9}) {
      for (int k = 2; k <= 4; ++k) {
        const double fd =
            (f1_derivative(p, k - 1, s + h) - f1_derivative(p, k - 1, s - h)) /
            (2.0 * h);
        CHECK(f1_derivative(p, k, s) == doctest::Approx(fd).epsilon(1e-5));
      }
    }
  }

  TEST_CASE("coercivity constant") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    Kernel Z = zero_kernel(g);
    CHECK(compute_c0({1.0, 0.0, 1e-8, 1}, Z) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(compute_c0({1.0, 0.5, 1e-8, 1}, Z) == doctest::Approx(0.5).epsilon(1e-5));
    CHECK_THROWS_AS(compute_c0({0.5, 1.0, 1e-8, 1}, Z), std::runtime_error);
  }

  TEST_CASE("assumption report: passing configuration") {
    GridSpec g = make_grid(1.0, 1.0, 32, 32);
    // gaussian tuned to ||J||_L1 ~ 0.1
    const double w = 0.1;
    const double amp = 0.1 / (2.0 * M_PI * w * w);
    Kernel K = build_kernel({KernelFamily::Gaussian, amp, w}, g);
    CHECK(K.norm_J_L1 == doctest::Approx(0.1).epsilon(1e-3));
    AssumptionReport rep = check_assumptions({1.0, 0.0, 1e-8, 1}, K, 1.0, 1.0, 1.0, 1.0);
    for (const auto& c : rep.checks) {
      INFO(c.name << ": " << c.detail);
      CHECK(c.pass);
    }
    CHECK(rep.alpha == 1.0);
    CHECK(rep.beta >= 0.0);
    CHECK(rep.c0 > 1.0 - 1e-6);
  }

  TEST_CASE("assumption report: (A9) mass clause fails for a heavy kernel") {
    GridSpec g = make_grid(1.0, 1.0, 32, 32);
    const double w = 0.1;
    const double amp = 2.0 / (2.0 * M_PI * w * w);  // ||J||_L1 ~ 2
    Kernel K = build_kernel({KernelFamily::Gaussian, amp, w}, g);
    AssumptionReport rep = check_assumptions({1.0, 0.0, 1e-8, 1}, K, 1.0, 1.0, 1.0, 1.0);
    bool a9 = true;
    for (const auto& c : rep.checks)
      if (c.name == "A9") a9 = c.pass;
    CHECK_FALSE(a9);
  }

  TEST_CASE("assumption report: zero mobility fails (A8)") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    Kernel Z = zero_kernel(g);
    AssumptionReport rep = check_assumptions({1.0, 0.0, 1e-8, 1}, Z, 1.0, 1.0, 0.0, 0.0);
    bool a8 = true;
    for (const auto& c : rep.checks)
      if (c.name == "A8") a8 = c.pass;
    CHECK_FALSE(a8);
  }
}
