// potential.hpp
// Singular logarithmic potential F, its derivatives, the convex/concave
// splitting F = G - (kappa/2) s^2, the coercivity constant C0, and sampled
// validation of the structural assumptions on (J, F, nu, m).

#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nchns/kernel.hpp"

namespace nchns {

struct PotentialSpec {
  double theta = 1.0;    // entropy temperature, > 0
  double theta_c = 0.0;  // critical temperature, >= 0
  double delta = 1e-8;   // clamp distance from +-1, in (0, 1e-3]
  int q = 1;             // derivative order parameter in the sign checks

  void validate() const {
    if (!(theta > 0.0)) throw std::invalid_argument("potential: theta must be > 0");
    if (theta_c < 0.0) throw std::invalid_argument("potential: theta_c must be >= 0");
    if (!(delta > 0.0) || delta > 1e-3)
      throw std::invalid_argument("potential: delta must be in (0, 1e-3]");
    if (q < 1) throw std::invalid_argument("potential: q must be >= 1");
  }
};

namespace detail {
// Evaluations outside the open interval clamp and count; the stepper keeps
// phi inside (-1,1) in practice, so a nonzero count is a warning sign.
inline std::atomic<std::int64_t>& clamp_counter() {
  static std::atomic<std::int64_t> c{0};
  return c;
}
inline double clamp_s(const PotentialSpec& p, double s) {
  const double lim = 1.0 - p.delta;
  if (s > lim || s < -lim) {
    clamp_counter().fetch_add(1, std::memory_order_relaxed);
    return s > lim ? lim : -lim;
  }
  return s;
}
}  // namespace detail

inline std::int64_t clamp_count() { return detail::clamp_counter().load(); }
inline void reset_clamp_count() { detail::clamp_counter().store(0); }

// F(s) = (theta/2)((1+s)ln(1+s) + (1-s)ln(1-s)) - (theta_c/2) s^2
inline double f_value(const PotentialSpec& p, double s) {
  s = detail::clamp_s(p, s);
  // log1p keeps the entropy part accurate down to |s| ~ denormal
  const double ent = (1.0 + s) * std::log1p(s) + (1.0 - s) * std::log1p(-s);
  return 0.5 * p.theta * ent - 0.5 * p.theta_c * s * s;
}

inline double f_prime(const PotentialSpec& p, double s) {
  s = detail::clamp_s(p, s);
  return 0.5 * p.theta * (std::log1p(s) - std::log1p(-s)) - p.theta_c * s;
}

inline double f_double_prime(const PotentialSpec& p, double s) {
  s = detail::clamp_s(p, s);
  return p.theta / ((1.0 - s) * (1.0 + s)) - p.theta_c;
}

// Convex entropy part G and its derivatives (kappa = theta_c).
inline double g_value(const PotentialSpec& p, double s) {
  return f_value(p, s) + 0.5 * p.theta_c * s * s;
}
inline double g_prime(const PotentialSpec& p, double s) {
  return f_prime(p, s) + p.theta_c * s;
}
inline double g_double_prime(const PotentialSpec& p, double s) {
  return f_double_prime(p, s) + p.theta_c;
}

struct SplitPotential {
  double kappa = 0.0;
  PotentialSpec spec;
  double G(double s) const { return g_value(spec, s); }
  double Gp(double s) const { return g_prime(spec, s); }
  double Gpp(double s) const { return g_double_prime(spec, s); }
};

inline SplitPotential convex_split(const PotentialSpec& p) {
  p.validate();
  return SplitPotential{p.theta_c, p};
}

// k-th derivative of the entropy part F1, k >= 2:
//   F1^(k)(s) = (theta/2) (k-2)! [ 1/(1-s)^(k-1) + (-1)^k / (1+s)^(k-1) ]
inline double f1_derivative(const PotentialSpec& p, int k, double s) {
  if (k == 0) return f_value(p, s) + 0.5 * p.theta_c * s * s;
  if (k == 1) return f_prime(p, s) + p.theta_c * s;
  s = detail::clamp_s(p, s);
  double fact = 1.0;
  for (int i = 2; i < k; ++i) fact *= i - 1;
  const double sign = (k % 2 == 0) ? 1.0 : -1.0;
  return 0.5 * p.theta * fact *
         (std::pow(1.0 - s, -(k - 1)) + sign * std::pow(1.0 + s, -(k - 1)));
}

// C0 := min over s and x of F''(s) + a(x), sampled on a 4096-point s-grid.
inline double compute_c0(const PotentialSpec& p, const Kernel& K) {
  p.validate();
  double amin = K.a.values.empty() ? 0.0 : K.a.values[0];
  for (double v : K.a.values) amin = std::min(amin, v);
  const int N = 4096;
  const double lim = 1.0 - p.delta;
  double fmin = f_double_prime(p, 0.0);
  for (int i = 0; i < N; ++i) {
    const double s = -lim + (2.0 * lim) * i / (N - 1);
    fmin = std::min(fmin, f_double_prime(p, s));
  }
  const double c0 = fmin + amin;
  if (!(c0 > 0.0))
    throw std::runtime_error("assumption (A9) violated for this configuration: C0 = " +
                             std::to_string(c0));
  return c0;
}

struct AssumptionCheck {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct AssumptionReport {
  std::vector<AssumptionCheck> checks;
  double c0 = 0.0;        // 0 when (A9) fails outright
  double alpha = 0.0;     // F1'' lower bound (= theta)
  double beta = 0.0;      // min_x a(x)
  double norm_J_L1 = 0.0;
  double norm_gradJ_L1 = 0.0;
  bool all_pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

// Sampled verdicts for (A1)-(A9). nu/m bounds are supplied by the caller
// (the configured coefficient ranges).
inline AssumptionReport check_assumptions(const PotentialSpec& p, const Kernel& K,
                                          double nu_min, double nu_max,
                                          double m_min, double m_max) {
  p.validate();
  AssumptionReport rep;
  rep.norm_J_L1 = K.norm_J_L1;
  rep.norm_gradJ_L1 = K.norm_gradJ_L1;
  auto add = [&](const std::string& name, bool pass, const std::string& detail) {
    rep.checks.push_back({name, pass, detail});
  };

  // (A1): even, nonnegative samples; a >= 0
  {
    bool sym = true, nonneg = true, apos = true;
    const int kx = K.kx(), ky = K.ky();
    for (int iy = 0; iy < ky && sym; ++iy)
      for (int ix = 0; ix < kx; ++ix) {
        const double d = K.samples[static_cast<size_t>(iy) * kx + ix] -
                         K.samples[static_cast<size_t>(ky - 1 - iy) * kx + (kx - 1 - ix)];
        if (d != 0.0) { sym = false; break; }
      }
    for (double v : K.samples)
      if (v < 0.0) nonneg = false;
    for (double v : K.a.values)
      if (v < 0.0) apos = false;
    add("A1", sym && nonneg && apos, "J even, J >= 0, a >= 0");
  }
  add("A2", nu_min > 0.0 && nu_max >= nu_min,
      "nu in [" + std::to_string(nu_min) + ", " + std::to_string(nu_max) + "]");

  const double lim = 1.0 - p.delta;
  const double eps0 = 0.05;
  const int M = 512;
  // (A3): F1^(2+2q) bounded below by a positive constant near +-1
  {
    bool ok = true;
    for (int i = 0; i < M; ++i) {
      const double t = lim - eps0 + eps0 * i / (M - 1);
      if (f1_derivative(p, 2 + 2 * p.q, t) <= 0.0 ||
          f1_derivative(p, 2 + 2 * p.q, -t) <= 0.0)
        ok = false;
    }
    add("A3", ok, "F1^(2+2q) > 0 near +-1");
  }
  // (A4): sign pattern of the F1 derivatives near the walls
  {
    bool ok = true;
    for (int i = 0; i < M; ++i) {
      const double t = lim - eps0 + eps0 * i / (M - 1);
      for (int k = 0; k <= 2 + 2 * p.q && ok; ++k)
        if (f1_derivative(p, k, t) <= 0.0) ok = false;
      for (int j = 0; j <= p.q && ok; ++j) {
        if (f1_derivative(p, 2 * j + 2, -t) < 0.0) ok = false;
        if (f1_derivative(p, 2 * j + 1, -t) > 0.0) ok = false;
      }
      if (!ok) break;
    }
    add("A4", ok, "derivative sign pattern near +-1");
  }
  // (A5): monotonicity of the top derivative near the walls
  {
    bool ok = true;
    double prev = f1_derivative(p, 2 + 2 * p.q, lim - eps0);
    for (int i = 1; i < M; ++i) {
      const double t = lim - eps0 + eps0 * i / (M - 1);
      const double cur = f1_derivative(p, 2 + 2 * p.q, t);
      if (cur < prev) ok = false;
      prev = cur;
    }
    prev = f1_derivative(p, 2 + 2 * p.q, -(lim - eps0));
    for (int i = 1; i < M; ++i) {
      const double t = lim - eps0 + eps0 * i / (M - 1);
      const double cur = f1_derivative(p, 2 + 2 * p.q, -t);
      if (cur < prev) ok = false;
      prev = cur;
    }
    add("A5", ok, "F1^(2+2q) monotone toward the walls");
  }
  // (A6): F1'' >= alpha with alpha = theta; beta = min a; alpha + beta > theta_c
  {
    rep.alpha = p.theta;
    double amin = K.a.values.empty() ? 0.0 : K.a.values[0];
    for (double v : K.a.values) amin = std::min(amin, v);
    rep.beta = amin;
    add("A6", rep.alpha + rep.beta > p.theta_c,
        "alpha + beta = " + std::to_string(rep.alpha + rep.beta) + " > theta_c");
  }
  // (A7): monotone blow-up of F1' at the walls, checked on samples
  {
    bool ok = true;
    double prev = f1_derivative(p, 1, 0.0);
    for (int i = 1; i < M; ++i) {
      const double t = lim * i / (M - 1);
      const double cur = f1_derivative(p, 1, t);
      if (cur <= prev) ok = false;
      prev = cur;
    }
    ok = ok && f1_derivative(p, 1, lim) > 10.0 * f1_derivative(p, 1, 0.5);
    add("A7", ok, "F1' increases without bound toward +1 (and by symmetry -1)");
  }
  add("A8", m_min > 0.0 && m_max >= m_min,
      "m in [" + std::to_string(m_min) + ", " + std::to_string(m_max) + "]");
  // (A9): C0 > 0 and ||J||_L1 <= C0 + kappa
  {
    bool ok = false;
    std::string det;
    try {
      rep.c0 = compute_c0(p, K);
      const double kappa = p.theta_c;
      ok = K.norm_J_L1 <= rep.c0 + kappa;
      std::ostringstream os;
      os << "C0 = " << rep.c0 << ", ||J||_L1 = " << K.norm_J_L1
         << (ok ? " <= " : " > ") << "C0 + kappa = " << rep.c0 + kappa;
      det = os.str();
    } catch (const std::runtime_error& e) {
      rep.c0 = 0.0;
      det = e.what();
    }
    add("A9", ok, det);
  }
  return rep;
}

}  // namespace nchns
