#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "nchns/config.hpp"

using namespace nchns;

namespace {

struct TempFile {
  std::string path;
  TempFile(const std::string& name, const std::string& body) : path(name) {
    std::ofstream(path) << body;
  }
  ~TempFile() { std::remove(path.c_str()); }
};

const std::string kGood =
    "grid.Lx 1.0\n"
    "grid.Ly 1.0\n"
    "grid.nx 16\n"
    "grid.ny 16\n"
    "kernel.family gaussian\n"
    "kernel.amplitude 1.5\n"
    "kernel.width 0.15\n"
    "potential.theta 1.0\n"
    "potential.theta_c 0.0\n"
    "initial.type perturbed\n"
    "initial.k 0.1\n"
    "initial.amplitude 0.2\n"
    "initial.seed 5\n"
    "time.dt 0.001\n"
    "time.T_end 0.5\n";

bool mentions(const config_error& e, const std::string& needle) {
  for (const auto& msg : e.errors)
    if (msg.find(needle) != std::string::npos) return true;
  return false;
}

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("round trip of a well-formed file") {
    TempFile f("cfg_ok.cfg", kGood);
    RunConfig cfg = parse_config(f.path);
    CHECK(cfg.nx == 16);
    CHECK(cfg.kernel.amplitude == 1.5);
    CHECK(cfg.kernel.width == 0.15);
    CHECK(cfg.potential.theta == 1.0);
    CHECK(cfg.initial_type == "perturbed");
    CHECK(cfg.initial_seed == 5);
    CHECK(cfg.dt == 0.001);
    CHECK(cfg.hash.size() == 16);
  }

  TEST_CASE("hash is stable under reordering and comments, sensitive to values") {
    TempFile a("cfg_a.cfg", kGood);
    TempFile b("cfg_b.cfg",
               "# reordered with comments\ntime.T_end = 0.5\ntime.dt = 0.001\n" +
                   kGood.substr(0, kGood.rfind("time.dt")));
    TempFile c("cfg_c.cfg", [] {
      std::string s = kGood;
      s.replace(s.find("time.dt 0.001"), 13, "time.dt 0.002");
      return s;
    }());
    RunConfig ca = parse_config(a.path);
    RunConfig cb = parse_config(b.path);
    RunConfig cc = parse_config(c.path);
    CHECK(ca.hash == cb.hash);
    CHECK(ca.hash != cc.hash);
  }

  TEST_CASE("equals signs and comments are tolerated") {
    TempFile f("cfg_eq.cfg",
               "grid.nx = 16   # cells\n"
               "grid.ny = 16\n"
               "kernel.amplitude = 0.5\n"
               "kernel.width = 0.2\n");
    RunConfig cfg = parse_config(f.path);
    CHECK(cfg.nx == 16);
    CHECK(cfg.kernel.amplitude == 0.5);
  }

  TEST_CASE("errors are collected with context") {
    TempFile f("cfg_bad.cfg",
               "grid.nx 7\n"
               "grid.nx 16\n"
               "bogus.key 1\n"
               "time.dt -1\n"
               "kernel.width\n"
               "viscosity.value 0 extra\n");
    try {
      parse_config(f.path);
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(e.errors.size() >= 5);
      CHECK(mentions(e, "duplicate key 'grid.nx'"));
      CHECK(mentions(e, "unknown key 'bogus.key'"));
      CHECK(mentions(e, "time.dt must be positive"));
      CHECK(mentions(e, "has no value"));
      CHECK(mentions(e, "trailing token"));
      CHECK(mentions(e, "viscosity must be positive"));
    }
  }

  TEST_CASE("unparseable values are reported by key") {
    TempFile f("cfg_badval.cfg", "grid.nx sixteen\n");
    try {
      parse_config(f.path);
      FAIL("expected config_error");
    } catch (const config_error& e) {
      CHECK(mentions(e, "key 'grid.nx'"));
      CHECK(mentions(e, "sixteen"));
    }
  }

  TEST_CASE("missing file") {
    CHECK_THROWS_AS(parse_config("definitely_missing.cfg"), config_error);
  }

  TEST_CASE("user norm keys must come as a pair to count") {
    TempFile f("cfg_norm1.cfg", kGood + "certify.lambda1 9.8696\n");
    CHECK_FALSE(parse_config(f.path).has_user_norms);
    TempFile g("cfg_norm2.cfg",
               kGood + "certify.lambda1 9.8696\ncertify.h_dual 0.25\n");
    RunConfig cfg = parse_config(g.path);
    CHECK(cfg.has_user_norms);
    CHECK(cfg.lambda1_user == doctest::Approx(9.8696));
    CHECK(cfg.h_dual_user == doctest::Approx(0.25));
  }

  TEST_CASE("initial state: zero-mean perturbation around k, reproducible") {
    TempFile f("cfg_init.cfg", kGood);
    RunConfig cfg = parse_config(f.path);
    GridSpec g = config_grid(cfg);
    State a = config_initial_state(cfg, g);
    State b = config_initial_state(cfg, g);
    CHECK(mean(a.phi) == doctest::Approx(0.1).epsilon(1e-13));
    for (size_t k = 0; k < a.phi.values.size(); ++k)
      CHECK(a.phi.values[k] == b.phi.values[k]);
    State c = config_initial_state(cfg, g, 99);
    bool differs = false;
    for (size_t k = 0; k < a.phi.values.size(); ++k)
      differs = differs || a.phi.values[k] != c.phi.values[k];
    CHECK(differs);
    CHECK(mean(c.phi) == doctest::Approx(0.1).epsilon(1e-13));
    for (double v : a.u.u) CHECK(v == 0.0);
  }

  TEST_CASE("solenoidal forcing is discretely divergence-free") {
    TempFile f("cfg_force.cfg",
               kGood + "forcing.type solenoidal\nforcing.amplitude 0.05\n");
    RunConfig cfg = parse_config(f.path);
    GridSpec g = config_grid(cfg);
    VectorField h = config_forcing(cfg, g);
    REQUIRE(h.grid.nx == g.nx);
    ScalarField d = divergence(h);
    for (double v : d.values) CHECK(std::abs(v) < 1e-12);
    CHECK(l2_norm(h) > 0.0);

    SimParams p = config_sim_params(cfg, g);
    CHECK(p.has_forcing());
    TempFile z("cfg_zero.cfg", kGood);
    SimParams pz = config_sim_params(parse_config(z.path), g);
    CHECK_FALSE(pz.has_forcing());
  }

  TEST_CASE("affine coefficients carry their exact bounds") {
    TempFile f("cfg_aff.cfg",
               kGood +
                   "viscosity.model affine\nviscosity.value 1.0\n"
                   "viscosity.slope -0.25\n"
                   "mobility.model affine\nmobility.value 2.0\nmobility.slope 0.5\n");
    RunConfig cfg = parse_config(f.path);
    GridSpec g = config_grid(cfg);
    SimParams p = config_sim_params(cfg, g);
    CHECK(p.nu_min == 0.75);
    CHECK(p.nu_max == 1.25);
    CHECK(p.m_min == 1.5);
    CHECK(p.m_max == 2.5);
    CHECK(p.nu(0.4) == doctest::Approx(0.9).epsilon(1e-15));
    CHECK(p.m(-1.0) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK_FALSE(p.nu_constant());

    TempFile bad("cfg_affbad.cfg",
                 kGood + "viscosity.model affine\nviscosity.value 0.2\n"
                         "viscosity.slope 0.5\n");
    CHECK_THROWS_AS(parse_config(bad.path), config_error);
  }
}
