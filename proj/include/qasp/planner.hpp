#pragma once

#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qasp/estimators.hpp"

namespace qasp {

/// Scalar inputs of the runtime model. `r` is the per-two-qubit-gate noise
/// exponent (amplitude retention e^{-r} per gate); `g` the mean two-qubit
/// gates per rotation.
struct CostInputs {
  double mu_I = 0.0;
  double mu_B = 0.0;
  double zeta = 0.5;
  double T = 0.0;
  double g = 0.0;
  double r = 0.0;
  double delta = 1e-3;
  double delta0 = 1e-3;
  long L = 0;

  void validate() const {
    if (mu_I < 0 || mu_B < 0 || zeta < 0 || T < 0 || g < 0 || r < 0)
      throw std::invalid_argument("cost inputs must be nonnegative");
  }
};

/// Total-runtime density for measuring an observable in the adiabatically
/// prepared state: R(tau)/eps^2 two-qubit gates for precision eps.
///   R(tau) = 2 zeta T mu_I g / sin(tau)
///            * exp(4 r zeta T mu_I g / sin(tau) + 4 tan(tau/2) zeta T mu_I)
inline double runtime_R(const CostInputs& in, double tau) {
  if (!(tau > 0.0) || !(tau < std::numbers::pi / 2))
    throw std::invalid_argument("runtime_R: tau outside (0, pi/2)");
  const double st = std::sin(tau);
  const double K = in.zeta * in.T * in.mu_I;
  return 2 * K * in.g / st * std::exp(4 * in.r * K * in.g / st + 4 * std::tan(tau / 2) * K);
}

namespace detail {

// golden-section minimum of f on [lo, hi]; f assumed unimodal there
template <class F>
inline double golden_minimize(F&& f, double lo, double hi, double tol) {
  constexpr double phi = 0.6180339887498949;
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = f(x1), f2 = f(x2);
  while (b - a > tol) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = f(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = f(x2);
    }
  }
  return (a + b) / 2;
}

// coarse log-spaced scan to bracket the minimum before refining
template <class F>
inline std::pair<double, double> bracket_minimum(F&& f, double lo, double hi, int points) {
  double best_x = lo, best_f = f(lo);
  const double ratio = std::pow(hi / lo, 1.0 / (points - 1));
  double x = lo;
  std::vector<double> xs(points);
  for (int i = 0; i < points; ++i, x *= ratio) {
    xs[i] = std::min(x, hi);
    double v = f(xs[i]);
    if (v < best_f) {
      best_f = v;
      best_x = xs[i];
    }
  }
  double left = lo, right = hi;
  for (int i = 1; i < points; ++i) {
    if (xs[i] >= best_x) {
      left = xs[i - 1];
      right = std::min(hi, xs[std::min(points - 1, i + 1)]);
      break;
    }
  }
  return {left, right};
}

}  // namespace detail

struct OptimalAngle {
  double tau_star = 0.0;
  double R_star = 0.0;
};

/// Direct numerical minimization of runtime_R over (0, pi/2); reproduces the
/// printed asymptotes tau* -> 1/(2 zeta T mu_I) (r = 0) and tau* -> sqrt(2rg)
/// (r > 0, large T mu_I). The quartic stationarity condition is kept as a
/// diagnostic only; see quartic_residuals.
inline OptimalAngle optimal_gate_angle(const CostInputs& in) {
  in.validate();
  if (in.mu_I * in.T * in.zeta <= 0)
    throw std::invalid_argument("optimal_gate_angle: need zeta T mu_I > 0");
  auto f = [&in](double tau) { return std::log(runtime_R(in, tau)); };
  const double lo = 1e-9, hi = std::numbers::pi / 2 - 1e-9;
  auto [a, b] = detail::bracket_minimum(f, lo, hi, 400);
  double tau = detail::golden_minimize(f, a, b, 1e-10);
  return {tau, runtime_R(in, tau)};
}

/// Residuals of the quartic stationarity equation at x = tan(tau/2).
/// `printed` follows the published sign pattern; `derived` is the actual
/// derivative condition of R(tau), whose r = 0 root matches 1/(2 zeta T mu_I).
/// The two differ in the signs of the x^3 and x terms.
struct QuarticResiduals {
  double printed = 0.0;
  double derived = 0.0;
};

inline QuarticResiduals quartic_residuals(const CostInputs& in, double tau) {
  const double x = std::tan(tau / 2);
  const double K = in.zeta * in.T * in.mu_I;
  const double rg = in.r * in.g;
  const double x2 = x * x, x3 = x2 * x, x4 = x2 * x2;
  QuarticResiduals q;
  q.printed = x4 * (4 + 2 * rg) * K - x3 + 4 * x2 * K + x - 2 * rg * K;
  q.derived = x4 * (4 + 2 * rg) * K + x3 + 4 * x2 * K - x - 2 * rg * K;
  return q;
}

/// Total runtime of one binary-search sign query at offset delta, given the
/// bound |delta| <= delta0:
///   R^Q = (s + 2 zeta T) / sin^2(s delta) * mu_I g / sin(tau)
///         * exp(2 (s + 2 zeta T) u(tau)),
/// with s from central_time_s and u from central_time_u.
inline double runtime_RQ(const CostInputs& in, double tau) {
  if (std::abs(in.delta) > in.delta0 + 1e-15)
    throw std::invalid_argument("runtime_RQ: |delta| must not exceed delta0");
  const double u = central_time_u(tau, in.mu_I, in.r, in.g);
  const double s = central_time_s(in.delta0, u);
  const double sd = std::sin(s * in.delta);
  if (std::abs(sd) < 1e-12)
    throw NumericalError("runtime_RQ: sin(s delta) vanishes");
  const double depth = s + 2 * in.zeta * in.T;
  return depth / (sd * sd) * in.mu_I * in.g / std::sin(tau) * std::exp(2 * depth * u);
}

inline OptimalAngle minimize_runtime_RQ(const CostInputs& in) {
  auto f = [&in](double tau) { return std::log(runtime_RQ(in, tau)); };
  const double lo = 1e-9, hi = std::numbers::pi / 2 - 1e-9;
  auto [a, b] = detail::bracket_minimum(f, lo, hi, 400);
  double tau = detail::golden_minimize(f, a, b, 1e-10);
  return {tau, runtime_RQ(in, tau)};
}

/// Noiseless large-mu_I T closed form of ten sign queries at delta = delta0:
///   10 R^Q = 10 e g mu_I^2 (pi/(2 delta) + 2 zeta T)^2.
inline double binary_search_closed_form(double g, double mu_I, double delta, double zeta,
                                        double T) {
  const double depth = std::numbers::pi / (2 * delta) + 2 * zeta * T;
  return 10 * std::numbers::e * g * mu_I * mu_I * depth * depth;
}

/// Preparation/measurement cost scalars under the g = L/2, zeta = 1/2
/// conventions: C_prepare = L mu_I^2 T^2, C_measure = 10^6 L mu_I^2.
struct AspCosts {
  double c_prepare = 0.0;
  double c_measure = 0.0;
  double c_total = 0.0;
};

inline AspCosts asp_costs(long L, double mu_I, double T) {
  AspCosts c;
  c.c_prepare = static_cast<double>(L) * mu_I * mu_I * T * T;
  c.c_measure = 1e6 * static_cast<double>(L) * mu_I * mu_I;
  c.c_total = c.c_prepare + c.c_measure;
  return c;
}

/// Published scaling fits of the reduced interaction norm.
inline double mu_I_fit_hydrogen_chain(long L) { return 0.2 * std::pow(L, 2.13); }
inline double mu_I_fit_generic(long L) { return 0.007 * std::pow(L, 2.84); }

/// Published hydrogen-chain total-cost scaling, 1e-3 L^6.6 (1e3 + L)^2.
inline double total_cost_scaling_hydrogen_chain(long L) {
  return 1e-3 * std::pow(L, 6.6) * std::pow(1e3 + L, 2.0);
}

/// Rotation-count comparison against Trotterized ASP and the LCU crossover.
struct TrotterLcuReport {
  double trotter_rotations = 0.0;  // steps x N_terms
  double tetris_rotations = 0.0;   // mu_I^2 T^2 / 2
  double ratio = 0.0;              // trotter / tetris
  double lcu_crossover_T = 0.0;    // TETRIS wins for T below C L^4 / mu
};

inline TrotterLcuReport compare_trotter_lcu(long L, double mu, double mu_I, double T,
                                            long trotter_steps, long n_terms,
                                            double lcu_prefactor = 1.0) {
  TrotterLcuReport rep;
  rep.trotter_rotations = static_cast<double>(trotter_steps) * n_terms;
  rep.tetris_rotations = 0.5 * mu_I * mu_I * T * T;
  rep.ratio = rep.tetris_rotations > 0 ? rep.trotter_rotations / rep.tetris_rotations : 0.0;
  rep.lcu_crossover_T = mu > 0 ? lcu_prefactor * std::pow(L, 4) / mu : 0.0;
  return rep;
}

/// H6/STO-3G reference point: 919 Pauli terms, reduced mu_I = 11.7, adiabatic
/// time T = 7, and the ~200 Trotter steps needed for chemical precision.
struct H6Preset {
  long L = 12;
  long n_terms = 919;
  double mu_I = 11.7;
  double T = 7.0;
  long trotter_steps = 200;
};

inline TrotterLcuReport compare_h6_preset(double mu = 0.0, double lcu_prefactor = 1.0) {
  H6Preset p;
  return compare_trotter_lcu(p.L, mu > 0 ? mu : 100.0 * p.L, p.mu_I, p.T, p.trotter_steps,
                             p.n_terms, lcu_prefactor);
}

}  // namespace qasp
