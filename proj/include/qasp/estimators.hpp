#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "qasp/chem.hpp"
#include "qasp/engine.hpp"
#include "qasp/statevector.hpp"

namespace qasp {

/// Circuit-depth coefficient of the central evolution,
///   u(tau) = r g mu_I / sin(tau) + tan(tau/2) mu_I.
inline double central_time_u(double tau, double mu_I, double r, double g) {
  if (!(tau > 0.0) || !(tau < std::numbers::pi / 2))
    throw std::invalid_argument("central_time_u: tau outside (0, pi/2)");
  return r * g * mu_I / std::sin(tau) + std::tan(tau / 2) * mu_I;
}

/// Central time maximizing the damped signal given |delta| <= delta0:
///   s = arctan(delta0 / u) / delta0, with the u -> 0 limit pi / (2 delta0).
inline double central_time_s(double delta0, double u) {
  if (!(delta0 > 0.0)) throw std::invalid_argument("central_time_s: delta0 must be positive");
  if (u < 0.0) throw std::invalid_argument("central_time_s: u must be nonnegative");
  if (u == 0.0) return std::numbers::pi / (2 * delta0);
  return std::atan(delta0 / u) / delta0;
}

struct EnergyWindow {
  double lo = 0.0, hi = 0.0;

  double width() const { return hi - lo; }
  double midpoint() const { return (lo + hi) / 2; }
  double delta0() const { return width() / 2; }

  void validate() const {
    if (!(lo < hi)) throw std::invalid_argument("energy window: need lo < hi");
  }
};

/// A rho(s) measurement: mean, standard error and the gates it consumed.
struct RhoSample {
  double mean = 0.0;
  double std_error = 0.0;
  double gates = 0.0;
};

/// rho oracle: (E, s, shots) -> RhoSample.
using RhoOracle = std::function<RhoSample(double, double, long)>;

struct TraceRow {
  long iteration = 0;
  double energy_query = 0.0;
  double s = 0.0;
  double mean = 0.0;
  double std_error = 0.0;
  std::string decision;
};

struct EnergyEstimate {
  double energy = 0.0;
  double uncertainty = 0.0;
  long shots_used = 0;
  double gates_used = 0.0;
  long queries = 0;
  bool flagged = false;
  std::string flag_reason;
  std::vector<TraceRow> trace;
};

struct BinarySearchConfig {
  long shots_per_query = 1000;
  double confidence_multiple = 3.0;  // declare a sign at |mean| >= k sigma
  int max_shot_doublings = 6;
  double u_tau = 0.0;  // noise/depth coefficient feeding central_time_s
};

/// Bisects on the sign of rho(s) at the window midpoint. delta0 is the
/// current half-width, halving after each decided query with s recomputed
/// via central_time_s. Runs exactly ceil(log2(width/eps)) queries unless a
/// sign stays indeterminate after the shot budget (window kept, flagged).
inline EnergyEstimate binary_search_energy(const RhoOracle& rho, EnergyWindow window,
                                           double target_precision,
                                           const BinarySearchConfig& cfg = {}) {
  window.validate();
  if (!(target_precision > 0.0))
    throw std::invalid_argument("binary_search_energy: need positive precision");
  EnergyEstimate out;
  const long total_queries =
      window.width() <= target_precision
          ? 0
          : static_cast<long>(std::ceil(std::log2(window.width() / target_precision)));
  for (long k = 0; k < total_queries; ++k) {
    const double mid = window.midpoint();
    const double s = central_time_s(window.delta0(), cfg.u_tau);
    long shots = cfg.shots_per_query;
    RhoSample sample;
    bool decided = false;
    for (int attempt = 0; attempt <= cfg.max_shot_doublings; ++attempt) {
      sample = rho(mid, s, shots);
      out.shots_used += shots;
      out.gates_used += sample.gates;
      if (std::abs(sample.mean) >= cfg.confidence_multiple * sample.std_error) {
        decided = true;
        break;
      }
      shots *= 2;
    }
    ++out.queries;
    TraceRow row{k, mid, s, sample.mean, sample.std_error, ""};
    if (!decided) {
      row.decision = "indeterminate";
      out.trace.push_back(row);
      out.flagged = true;
      out.flag_reason = "indeterminate sign after shot budget";
      break;
    }
    // rho > 0 means the state's energy lies below the midpoint
    if (sample.mean > 0) {
      window.hi = mid;
      row.decision = "below";
    } else {
      window.lo = mid;
      row.decision = "above";
    }
    out.trace.push_back(row);
  }
  out.energy = window.midpoint();
  out.uncertainty = window.width() / 2;
  return out;
}

struct ArctanFit {
  double energy = 0.0;
  bool flagged = false;
  std::string flag_reason;
};

/// E_GS = E_test + arctan( tan(s eps) (rho+ + rho-) / (rho- - rho+) ) / s.
/// Exact whenever rho(+/-) = q sin(s(E_test +/- eps - E_GS)) for any damping
/// q > 0, which is what makes the formula depolarizing-invariant.
inline ArctanFit arctan_fit_energy(double rho_plus, double rho_minus, double E_test, double eps,
                                   double s) {
  if (!(s > 0.0) || !(eps > 0.0))
    throw std::invalid_argument("arctan_fit_energy: need positive s and eps");
  if (!(s * eps < std::numbers::pi / 2))
    throw std::invalid_argument("arctan_fit_energy: s*eps must stay below pi/2");
  if (rho_minus == rho_plus)
    throw std::invalid_argument("arctan_fit_energy: rho- equals rho+ (degenerate ratio)");
  ArctanFit fit;
  const double arg = std::tan(s * eps) * (rho_plus + rho_minus) / (rho_minus - rho_plus);
  const double correction = std::atan(arg) / s;
  fit.energy = E_test + correction;
  if (std::abs(correction) * s >= 0.95 * (std::numbers::pi / 2)) {
    fit.flagged = true;
    fit.flag_reason = "estimate approaches the principal-branch edge; use a coarser s";
  }
  return fit;
}

/// Step sequence a_n = a0 / n^beta; the Robbins-Monro conditions
/// (sum a_n = inf, sum a_n^2 < inf) hold exactly for 1/2 < beta <= 1.
struct RMConfig {
  double a0 = 10.0;
  double beta = 0.75;
  double s = 20.0;
  long max_iters = 1000;

  void validate() const {
    if (!(a0 > 0.0)) throw std::invalid_argument("robbins-monro: need a0 > 0");
    if (!(beta > 0.5) || !(beta <= 1.0))
      throw std::invalid_argument("robbins-monro: step template requires 1/2 < beta <= 1");
    if (!(s > 0.0)) throw std::invalid_argument("robbins-monro: need s > 0");
    if (max_iters < 1) throw std::invalid_argument("robbins-monro: need iterations");
  }

  double step(long n) const { return a0 / std::pow(static_cast<double>(n), beta); }
};

struct RMResult {
  std::vector<double> iterates;  // E_0 ... E_N
  long clamped = 0;
  bool flagged = false;
};

/// E_{n+1} = E_n - a_n V(E_n) with V a (possibly single-shot) estimate of
/// rho at E_n. Iterates escaping the monotone window [E0 +/- pi/(2s)] are
/// clamped back and flagged.
inline RMResult robbins_monro_energy(const std::function<double(double)>& V, double E0,
                                     const RMConfig& cfg) {
  cfg.validate();
  const double window = std::numbers::pi / (2 * cfg.s);
  const double lo = E0 - window, hi = E0 + window;
  RMResult res;
  res.iterates.reserve(cfg.max_iters + 1);
  res.iterates.push_back(E0);
  double E = E0;
  for (long n = 1; n <= cfg.max_iters; ++n) {
    E -= cfg.step(n) * V(E);
    if (E < lo || E > hi) {
      E = std::clamp(E, lo, hi);
      ++res.clamped;
      res.flagged = true;
    }
    res.iterates.push_back(E);
  }
  return res;
}

/// Direct term-by-term Pauli measurement baseline: M_S = mu^2 / eps^2 shots
/// overall, allocated proportionally to the coefficients.
inline EnergyEstimate direct_pauli_energy(const HamiltonianModel& model, const StateVector& psi,
                                          double eps, std::mt19937_64& rng) {
  if (!(eps > 0.0)) throw std::invalid_argument("direct_pauli_energy: need eps > 0");
  const double mu = model.mu;
  EnergyEstimate out;
  out.energy = model.constant_energy;
  if (mu == 0.0) return out;
  const double total_shots = mu * mu / (eps * eps);

  double variance = 0.0;
  auto measure_terms = [&](const PauliSum& part) {
    for (const auto& t : part.terms()) {
      long m = std::max<long>(1, std::llround(total_shots * t.coefficient / mu));
      StateVector scratch = psi;
      scratch.apply_pauli(t.string);
      double expect = std::clamp(psi.inner(scratch).real(), -1.0, 1.0);
      std::binomial_distribution<long> bin(m, (1.0 + expect) / 2.0);
      double phat = static_cast<double>(bin(rng)) / m;
      double est = 2.0 * phat - 1.0;
      out.energy += t.coefficient * est;
      variance += t.coefficient * t.coefficient * std::max(0.0, 1.0 - est * est) / m;
      out.shots_used += m;
    }
  };
  measure_terms(model.background);
  measure_terms(model.interaction);
  out.uncertainty = std::sqrt(variance);
  return out;
}

}  // namespace qasp
