#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "qasp/chem.hpp"
#include "qasp/schedule.hpp"

namespace qasp {

enum class SamplerVariant { base, background };

inline const char* to_string(SamplerVariant v) {
  return v == SamplerVariant::base ? "base" : "background";
}

struct SamplerConfig {
  double tau = 0.1;   // gate angle, 0 < tau < pi/2
  double total_time = 0.0;
  SamplerVariant variant = SamplerVariant::background;

  void validate() const {
    if (!(tau > 0.0) || !(tau < std::numbers::pi / 2))
      throw std::invalid_argument("sampler: gate angle must satisfy 0 < tau < pi/2");
    if (total_time < 0) throw std::invalid_argument("sampler: negative evolution time");
  }
};

/// One sampled rotation exp(i angle P_n) at its drawn time.
struct GateEvent {
  double time = 0.0;
  std::size_t term_index = 0;  // into interaction terms; base variant uses
                               // indices >= interaction_term_count for background terms
  double angle = 0.0;          // +/- tau
};

/// A drawn TETRIS circuit. Background-variant circuits interleave exact
/// exp(i direction dt H_B) segments between rotations; the segment durations
/// are the gaps between consecutive event times plus the final gap to T.
struct SampledCircuit {
  std::vector<GateEvent> events;
  SamplerVariant variant = SamplerVariant::background;
  double total_time = 0.0;
  double attenuation = 1.0;
  int direction = +1;  // +1 generates exp(+i...) evolution, -1 the inverse
  std::size_t interaction_term_count = 0;

  std::size_t size() const { return events.size(); }

  /// Background segment durations (events.size() + 1 entries summing to T).
  std::vector<double> background_segments() const {
    std::vector<double> seg;
    seg.reserve(events.size() + 1);
    double prev = 0.0;
    for (const auto& e : events) {
      seg.push_back(e.time - prev);
      prev = e.time;
    }
    seg.push_back(total_time - prev);
    return seg;
  }
};

inline double attenuation(const HamiltonianModel& model, const AdiabaticPath& path,
                          const SamplerConfig& cfg) {
  cfg.validate();
  const double t2 = std::tan(cfg.tau / 2);
  if (cfg.variant == SamplerVariant::background)
    return std::exp(-t2 * path.zeta() * cfg.total_time * model.mu_I);
  return std::exp(-t2 * cfg.total_time * (path.zeta() * model.mu_I + model.mu_B));
}

struct GateCounts {
  double rotations = 0.0;
  double two_qubit_gates = 0.0;
};

/// Expected per-circuit gate counts: zeta T mu_I / sin(tau) rotations for the
/// background variant, with the base variant adding the T mu_B-rate terms.
inline GateCounts expected_gate_counts(const HamiltonianModel& model, const AdiabaticPath& path,
                                       const SamplerConfig& cfg) {
  cfg.validate();
  const double st = std::sin(cfg.tau);
  const double zT = path.zeta() * cfg.total_time;
  GateCounts counts;
  counts.rotations = zT * model.mu_I / st;
  double weighted = 0.0;
  const auto& terms = model.interaction.terms();
  for (std::size_t n = 0; n < terms.size(); ++n)
    weighted += terms[n].coefficient * model.g_interaction[n];
  counts.two_qubit_gates = zT * weighted / st;
  if (cfg.variant == SamplerVariant::base) {
    counts.rotations += cfg.total_time * model.mu_B / st;
    double bg_weighted = 0.0;
    const auto& bg = model.background.terms();
    for (std::size_t n = 0; n < bg.size(); ++n)
      bg_weighted += bg[n].coefficient * model.g_background[n];
    counts.two_qubit_gates += cfg.total_time * bg_weighted / st;
  }
  return counts;
}

namespace detail {

inline void draw_poisson_events(std::vector<GateEvent>& events, std::mt19937_64& rng,
                                double rate, std::size_t term_index, double angle,
                                const std::function<double(double)>& time_of) {
  if (rate <= 0) return;
  std::poisson_distribution<long> poisson(rate);
  long m = poisson(rng);
  for (long i = 0; i < m; ++i)
    events.push_back({time_of(std::generate_canonical<double, 53>(rng)), term_index, angle});
}

}  // namespace detail

/// Draws one TETRIS circuit for the adiabatic evolution A(T). Interaction
/// term n receives Poisson(c_n zeta T / sin tau) events at times
/// T z^{-1}(u) with u uniform on [0, zeta]; the base variant also draws
/// background events at rate c_n T / sin tau, uniform on [0, T].
inline SampledCircuit sample_adiabatic(const HamiltonianModel& model, const AdiabaticPath& path,
                                       const SamplerConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  SampledCircuit circuit;
  circuit.variant = cfg.variant;
  circuit.total_time = cfg.total_time;
  circuit.direction = +1;
  circuit.interaction_term_count = model.interaction.term_count();
  circuit.attenuation = attenuation(model, path, cfg);

  const double st = std::sin(cfg.tau);
  const double zeta = path.zeta();
  const double T = cfg.total_time;
  const auto& terms = model.interaction.terms();
  for (std::size_t n = 0; n < terms.size(); ++n) {
    detail::draw_poisson_events(
        circuit.events, rng, terms[n].coefficient * zeta * T / st, n, cfg.tau,
        [&](double x) { return T * path.z_inverse(x * zeta); });
  }
  if (cfg.variant == SamplerVariant::base) {
    const auto& bg = model.background.terms();
    for (std::size_t n = 0; n < bg.size(); ++n) {
      detail::draw_poisson_events(
          circuit.events, rng, bg[n].coefficient * T / st,
          circuit.interaction_term_count + n, cfg.tau, [&](double x) { return T * x; });
    }
  }
  std::stable_sort(circuit.events.begin(), circuit.events.end(),
                   [](const GateEvent& a, const GateEvent& b) { return a.time < b.time; });
  return circuit;
}

/// Constant-Hamiltonian sampler for exp(i sign s h) over a bare Pauli sum:
/// every term is randomized (no background split), so the attenuation is
/// exp(-tan(tau/2) s mu(h)).
inline SampledCircuit sample_constant(const PauliSum& h, double s, double tau, int sign,
                                      std::mt19937_64& rng) {
  if (s < 0) throw std::invalid_argument("sample_constant: negative time");
  SamplerConfig cfg{tau, s, SamplerVariant::base};
  cfg.validate();
  SampledCircuit circuit;
  circuit.variant = SamplerVariant::base;
  circuit.total_time = s;
  circuit.direction = sign >= 0 ? +1 : -1;
  circuit.interaction_term_count = h.term_count();
  circuit.attenuation = std::exp(-std::tan(tau / 2) * s * h.one_norm());
  const double st = std::sin(tau);
  const double angle = circuit.direction * tau;
  const auto& terms = h.terms();
  for (std::size_t n = 0; n < terms.size(); ++n)
    detail::draw_poisson_events(circuit.events, rng, terms[n].coefficient * s / st, n, angle,
                                [&](double x) { return s * x; });
  std::stable_sort(circuit.events.begin(), circuit.events.end(),
                   [](const GateEvent& a, const GateEvent& b) { return a.time < b.time; });
  return circuit;
}

/// Background-variant constant sampler: randomizes only the interaction
/// terms of the model (rate c_n s / sin tau, uniform times) while the
/// background evolves exactly in the interleaved segments; attenuation
/// exp(-tan(tau/2) s mu_I). Used for the central exp(+/- i s H) evolution.
inline SampledCircuit sample_constant(const HamiltonianModel& model, double s, double tau,
                                      int sign, std::mt19937_64& rng) {
  SamplerConfig cfg{tau, s, SamplerVariant::background};
  SampledCircuit circuit = sample_adiabatic(model, AdiabaticPath::constant(), cfg, rng);
  circuit.direction = sign >= 0 ? +1 : -1;
  for (auto& e : circuit.events) e.angle *= circuit.direction;
  return circuit;
}

/// Line-oriented replay format: keyword header then one `t n angle` per line.
inline void write_sampled_circuit(std::ostream& os, const SampledCircuit& c,
                                  std::uint64_t seed) {
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "variant " << to_string(c.variant) << '\n'
     << "lambda " << num(c.attenuation) << '\n'
     << "seed " << seed << '\n'
     << "T " << num(c.total_time) << '\n'
     << "direction " << c.direction << '\n'
     << "interaction_terms " << c.interaction_term_count << '\n'
     << "events " << c.events.size() << '\n';
  for (const auto& e : c.events)
    os << num(e.time) << ' ' << e.term_index << ' ' << num(e.angle) << '\n';
}

inline SampledCircuit parse_sampled_circuit(std::istream& is) {
  SampledCircuit c;
  std::string key;
  std::size_t n_events = 0;
  while (is >> key) {
    if (key == "variant") {
      std::string v;
      is >> v;
      c.variant = v == "base" ? SamplerVariant::base : SamplerVariant::background;
    } else if (key == "lambda") {
      is >> c.attenuation;
    } else if (key == "seed") {
      std::uint64_t ignored;
      is >> ignored;
    } else if (key == "T") {
      is >> c.total_time;
    } else if (key == "direction") {
      is >> c.direction;
    } else if (key == "interaction_terms") {
      is >> c.interaction_term_count;
    } else if (key == "events") {
      is >> n_events;
      break;
    } else {
      throw std::runtime_error("sampled circuit: unknown header key " + key);
    }
  }
  for (std::size_t i = 0; i < n_events; ++i) {
    GateEvent e;
    if (!(is >> e.time >> e.term_index >> e.angle))
      throw std::runtime_error("sampled circuit: truncated event list");
    c.events.push_back(e);
  }
  return c;
}

}  // namespace qasp
