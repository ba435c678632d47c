#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "nchns/field_io.hpp"
#include "nchns/grid.hpp"
#include "nchns/operators.hpp"

using namespace nchns;

namespace {
ScalarField random_field(const GridSpec& g, std::mt19937_64& rng, double amp = 1.0) {
  std::uniform_real_distribution<double> dist(-amp, amp);
  ScalarField f(g);
  for (double& v : f.values) v = dist(rng);
  return f;
}
}  // namespace

TEST_SUITE("grid_io") {
  TEST_CASE("make_grid basic and spacings") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    CHECK(g.hx == doctest::Approx(1.0 / 16).epsilon(1e-15));
    CHECK(g.hy == doctest::Approx(1.0 / 16).epsilon(1e-15));
    GridSpec g2 = make_grid(2.0, 1.0, 32, 16);
    CHECK(g2.hx == doctest::Approx(1.0 / 16).epsilon(1e-15));
    CHECK(g2.hy == doctest::Approx(1.0 / 16).epsilon(1e-15));
  }

  TEST_CASE("make_grid rejects bad inputs") {
    CHECK_THROWS_AS(make_grid(1, 1, 7, 16), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 1, 16, 9), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(0, 1, 16, 16), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, -2, 16, 16), std::invalid_argument);
    CHECK_THROWS_AS(make_grid(1, 1, 4, 16), std::invalid_argument);
  }

  TEST_CASE("mean of constants and symmetric modes") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    ScalarField c(g, 3.25);
    CHECK(mean(c) == doctest::Approx(3.25).epsilon(1e-14));
    ScalarField cosf(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        cosf(i, j) = std::cos(2.0 * M_PI * g.xc(i) / g.Lx);
    CHECK(std::abs(mean(cosf)) < 1e-14);
  }

  TEST_CASE("mean matches extended-precision resummation") {
    GridSpec g = make_grid(1.5, 0.7, 24, 18);
    std::mt19937_64 rng(7);
    ScalarField f = random_field(g, rng);
    long double acc = 0.0L;
    for (double v : f.values) acc += v;
    const double oracle = static_cast<double>(acc * g.hx * g.hy / (g.Lx * g.Ly));
    CHECK(mean(f) == doctest::Approx(oracle).epsilon(1e-13));
  }

  TEST_CASE("project_zero_mean") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    ScalarField c(g, 5.0);
    ScalarField p = project_zero_mean(c);
    for (double v : p.values) CHECK(std::abs(v) < 1e-14);

    std::mt19937_64 rng(3);
    ScalarField f = project_zero_mean(random_field(g, rng));
    CHECK(std::abs(mean(f)) < 1e-13);
    ScalarField again = project_zero_mean(f);
    for (size_t k = 0; k < f.values.size(); ++k)
      CHECK(again.values[k] == doctest::Approx(f.values[k]).epsilon(1e-14));

    ScalarField shifted(g);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        shifted(i, j) = 1.0 + std::cos(2.0 * M_PI * g.xc(i));
    ScalarField mode = project_zero_mean(shifted);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i)
        CHECK(mode(i, j) ==
              doctest::Approx(std::cos(2.0 * M_PI * g.xc(i))).epsilon(1e-12));
  }

  TEST_CASE("scalar norms on simple fields") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    ScalarField one(g, 1.0);
    CHECK(l2_norm(one) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(l4_norm(one) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(linf_norm(one) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(h1_seminorm(one) == 0.0);

    ScalarField cell(g);
    cell(5, 9) = 1.0;
    CHECK(l2_norm(cell) == doctest::Approx(1.0 / 16).epsilon(1e-14));
  }

  TEST_CASE("h1 seminorm of a cosine matches the analytic gradient norm") {
    const double exact = M_PI * std::sqrt(0.5);  // Lx = 1, |Omega| = 1
    double err[2];
    int idx = 0;
    for (int n : {32, 64}) {
      GridSpec g = make_grid(1.0, 1.0, n, n);
      ScalarField f(g);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) f(i, j) = std::cos(M_PI * g.xc(i) / g.Lx);
      err[idx++] = std::abs(h1_seminorm(f) - exact);
    }
    CHECK(err[1] < err[0]);
    CHECK(err[0] / err[1] > 3.0);  // O(h^2)
  }

  TEST_CASE("norm homogeneity is exact") {
    GridSpec g = make_grid(1.0, 2.0, 16, 24);
    std::mt19937_64 rng(11);
    ScalarField f = random_field(g, rng);
    const double c = 0.5;  // power of two: scaling is exact in floating point
    ScalarField cf = f;
    for (double& v : cf.values) v *= c;
    CHECK(l2_norm(cf) == c * l2_norm(f));
    CHECK(l4_norm(cf) == c * l4_norm(f));
    CHECK(linf_norm(cf) == c * linf_norm(f));
  }

  TEST_CASE("vector norms") {
    GridSpec g = make_grid(1.0, 1.0, 16, 16);
    VectorField z(g);
    VectorNorms n0 = vector_norms(z);
    CHECK(n0.l2 == 0.0);
    CHECK(n0.linf == 0.0);
    CHECK(n0.h1_seminorm == 0.0);

    VectorField one_face(g);
    one_face.U(7, 4) = 1.0;
    CHECK(l2_norm(one_face) == doctest::Approx(std::sqrt(g.cell_area())).epsilon(1e-14));
  }

  TEST_CASE("gradient norm of a wall-compatible shear profile converges") {
    // u = (sin(pi x) y(1-y), 0): no-slip on all four walls, analytic
    // ||grad u||^2 = (pi^2/2) * 1/30 + (1/2) * 1/3
    const double exact2 = 0.5 * M_PI * M_PI / 30.0 + 1.0 / 6.0;
    const double exact = std::sqrt(exact2);
    double err[2];
    int idx = 0;
    for (int n : {32, 64}) {
      GridSpec g = make_grid(1.0, 1.0, n, n);
      VectorField u(g);
      for (int j = 0; j < g.ny; ++j)
        for (int i = 1; i < g.nx; ++i) {
          const double y = g.yc(j);
          u.U(i, j) = std::sin(M_PI * i * g.hx) * y * (1.0 - y);
        }
      err[idx++] = std::abs(std::sqrt(vector_grad_sq(u)) - exact);
    }
    CHECK(err[1] < err[0]);
  }

  TEST_CASE("discrete Poincare-Wirtinger with the analytic constant") {
    GridSpec g = make_grid(1.0, 1.0, 32, 32);
    const double comega = poincare_constant(g);
    CHECK(comega == doctest::Approx(1.0 / M_PI).epsilon(1e-14));
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 100; ++trial) {
      ScalarField f = project_zero_mean(random_field(g, rng));
      CHECK(l2_norm(f) <= comega * h1_seminorm(f) * (1.0 + 1e-12));
    }
  }

  TEST_CASE("scalar snapshot round-trips bitwise") {
    GridSpec g = make_grid(0.9, 1.7, 12, 14);
    std::mt19937_64 rng(5);
    ScalarField f = random_field(g, rng, 1e3);
    f(0, 0) = 1.0 / 3.0;
    f(1, 0) = -0.0;
    f(2, 0) = 1e-308;
    SnapshotMeta meta;
    meta.kv["config_hash"] = "deadbeef01234567";
    const std::string path = "snap_scalar_test.dat";
    write_snapshot(path, f, meta);
    SnapshotMeta back;
    ScalarField r = read_scalar_snapshot(path, &back);
    REQUIRE(r.grid == f.grid);
    for (size_t k = 0; k < f.values.size(); ++k) CHECK(r.values[k] == f.values[k]);
    CHECK(back.kv.at("config_hash") == "deadbeef01234567");
    std::remove(path.c_str());
  }

  TEST_CASE("vector snapshot round-trips bitwise") {
    GridSpec g = make_grid(1.0, 1.0, 10, 8);
    std::mt19937_64 rng(6);
    VectorField w(g);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    for (int j = 0; j < g.ny; ++j)
      for (int i = 1; i < g.nx; ++i) w.U(i, j) = dist(rng);
    for (int j = 1; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) w.V(i, j) = dist(rng);
    const std::string path = "snap_vector_test.dat";
    write_snapshot(path, w);
    VectorField r = read_vector_snapshot(path);
    REQUIRE(r.grid == w.grid);
    for (size_t k = 0; k < w.u.size(); ++k) CHECK(r.u[k] == w.u[k]);
    for (size_t k = 0; k < w.v.size(); ++k) CHECK(r.v[k] == w.v[k]);
    std::remove(path.c_str());
  }

  TEST_CASE("snapshot kind and header errors") {
    GridSpec g = make_grid(1.0, 1.0, 8, 8);
    ScalarField f(g, 1.0);
    const std::string path = "snap_kind_test.dat";
    write_snapshot(path, f);
    CHECK_THROWS_AS(read_vector_snapshot(path), std::runtime_error);
    std::ofstream(path) << "BOGUS scalar 8 8 1 1\n";
    CHECK_THROWS_AS(read_scalar_snapshot(path), std::runtime_error);
    std::remove(path.c_str());
    CHECK_THROWS_AS(read_scalar_snapshot("no_such_file.dat"), std::runtime_error);
  }
}
