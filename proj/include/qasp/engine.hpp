#pragma once

#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "qasp/chem.hpp"
#include "qasp/circuit.hpp"
#include "qasp/rng.hpp"
#include "qasp/sampler.hpp"
#include "qasp/schedule.hpp"
#include "qasp/statevector.hpp"

namespace qasp {

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Depolarizing trajectory noise: after every ZZ gate, with probability
/// p_depol a uniformly random non-identity two-qubit Pauli hits the gate's
/// qubit pair.
struct NoiseModel {
  enum class Mode { off, trajectory };
  double p_depol = 0.0;
  Mode mode = Mode::off;

  bool active() const { return mode == Mode::trajectory && p_depol > 0; }
};

/// Config conventions for turning a quoted noise figure into p_depol:
///  - pauli_probability: the figure is p_depol itself
///  - depolarizing: the figure is the depolarizing-channel amplitude;
///    the non-identity Pauli probability is 15/16 of it
///  - fidelity: the figure is the per-gate process fidelity, p = 1 - f
inline double depolarizing_probability(const std::string& convention, double amplitude) {
  if (convention == "pauli_probability") return amplitude;
  if (convention == "depolarizing") return amplitude * 15.0 / 16.0;
  if (convention == "fidelity") return 1.0 - amplitude;
  throw std::invalid_argument("unknown noise convention: " + convention);
}

enum class ExecMode { analytic, circuit };
enum class Part { real_part, imag_part };
enum class FilterPolicy { none, discard_parity_violations, particle_number_zero_contribution };

inline FilterPolicy filter_policy_from_string(const std::string& s) {
  if (s == "none") return FilterPolicy::none;
  if (s == "discard") return FilterPolicy::discard_parity_violations;
  if (s == "particle_zero") return FilterPolicy::particle_number_zero_contribution;
  throw std::invalid_argument("unknown filter policy: " + s);
}

/// One Hadamard-test outcome with its symmetry metadata.
struct ShotRecord {
  int ancilla_outcome = +1;  // +/-1
  std::uint64_t system_bits = 0;
  bool up_parity_ok = true;
  bool down_parity_ok = true;
  bool particle_number_ok = true;
  double weight = 1.0;  // 1/lambda of the generating circuit triple
};

struct AmplitudeEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long shots_used = 0;
  long shots_filtered = 0;
  bool valid = false;
  double mean_two_qubit_gates = 0.0;  // circuit mode diagnostic
  double lambda_total = 1.0;
};

/// lambda^{-1} B(outcome); contributes zero for particle-number-violating
/// shots under the zero-contribution rule. Var <= 1/lambda^2 by construction.
inline double single_shot_estimator(const ShotRecord& record, double lambda_total,
                                    FilterPolicy policy = FilterPolicy::none) {
  if (!(lambda_total > 0.0) || lambda_total > 1.0 + 1e-12)
    throw std::invalid_argument("single_shot_estimator: lambda must be in (0, 1]");
  if (policy == FilterPolicy::particle_number_zero_contribution && !record.particle_number_ok)
    return 0.0;
  return record.ancilla_outcome / lambda_total;
}

/// Aggregates shot records under a symmetry-filtering policy. The discard
/// policy removes parity-violating shots from numerator and denominator;
/// the particle-number policy zeroes violating shots but keeps them counted.
inline AmplitudeEstimate parity_filter(const std::vector<ShotRecord>& records,
                                       FilterPolicy policy) {
  AmplitudeEstimate est;
  double sum = 0, sumsq = 0;
  long n = 0;
  for (const auto& r : records) {
    double v;
    switch (policy) {
      case FilterPolicy::none:
        v = r.weight * r.ancilla_outcome;
        break;
      case FilterPolicy::discard_parity_violations:
        if (!r.up_parity_ok || !r.down_parity_ok) {
          ++est.shots_filtered;
          continue;
        }
        v = r.weight * r.ancilla_outcome;
        break;
      case FilterPolicy::particle_number_zero_contribution:
        if (!r.particle_number_ok) {
          ++est.shots_filtered;
          v = 0.0;
        } else {
          v = r.weight * r.ancilla_outcome;
        }
        break;
      default:
        v = 0.0;
    }
    sum += v;
    sumsq += v * v;
    ++n;
  }
  est.shots_used = n;
  if (n == 0) return est;  // everything filtered: flagged, not silent
  est.valid = true;
  est.mean = sum / n;
  if (n > 1) {
    double var = (sumsq - n * est.mean * est.mean) / (n - 1);
    est.std_error = std::sqrt(std::max(0.0, var) / n);
  }
  return est;
}

// ---------------------------------------------------------------------------
// Sampled-circuit execution (exact rotations, exact background segments)
// ---------------------------------------------------------------------------

/// Applies a circuit drawn against a HamiltonianModel. Background-variant
/// circuits evolve exp(i direction dt H_B) in the gaps between rotations.
inline void apply_sampled_circuit(StateVector& psi, const SampledCircuit& c,
                                  const HamiltonianModel& model) {
  const auto& interaction = model.interaction.terms();
  const auto& background = model.background.terms();
  if (c.variant == SamplerVariant::background) {
    double prev = 0.0;
    for (const auto& e : c.events) {
      double dt = e.time - prev;
      if (dt != 0.0) psi.apply_diagonal_evolution(model.background, c.direction * dt);
      psi.apply_pauli_rotation(interaction[e.term_index].string, e.angle);
      prev = e.time;
    }
    if (c.total_time - prev != 0.0)
      psi.apply_diagonal_evolution(model.background, c.direction * (c.total_time - prev));
  } else {
    for (const auto& e : c.events) {
      const PauliString& p = e.term_index < c.interaction_term_count
                                 ? interaction[e.term_index].string
                                 : background[e.term_index - c.interaction_term_count].string;
      psi.apply_pauli_rotation(p, e.angle);
    }
  }
}

/// Applies a base-variant constant-Hamiltonian circuit drawn over h's terms.
inline void apply_sampled_circuit(StateVector& psi, const SampledCircuit& c, const PauliSum& h) {
  for (const auto& e : c.events) psi.apply_pauli_rotation(h.terms()[e.term_index].string, e.angle);
}

// ---------------------------------------------------------------------------
// Exact reference evolution (adaptive Dormand-Prince 4(5))
// ---------------------------------------------------------------------------

namespace detail {

/// Matrix-free evaluator for the time-dependent Hamiltonian H(u), shared by
/// the ODE reference and the Trotter baseline.
class ScheduleTerms {
 public:
  explicit ScheduleTerms(const HamiltonianSchedule& sched)
      : path_(sched.path), snapshot_(sched.is_snapshot()) {
    qubits_ = sched.is_snapshot() ? sched.snapshots.front().qubit_count
                                  : sched.model.qubit_count;
    if (!snapshot_) {
      for (const auto& t : sched.model.background.terms())
        terms_.push_back({t.string, x_mask(t.string), t.coefficient, false, {}});
      for (const auto& t : sched.model.interaction.terms())
        terms_.push_back({t.string, x_mask(t.string), t.coefficient, true, {}});
    } else {
      const std::size_t K = sched.snapshots.size();
      std::map<std::vector<Pauli>, std::size_t> where;
      for (std::size_t j = 0; j < K; ++j) {
        PauliSum full(qubits_);
        full.add(sched.snapshots[j].background);
        full.add(sched.snapshots[j].interaction);
        for (const auto& t : full.terms()) {
          auto [it, inserted] = where.try_emplace(t.string.letters, terms_.size());
          if (inserted) {
            PauliString s;
            s.letters = t.string.letters;
            terms_.push_back({s, x_mask(s), 0.0, false, std::vector<double>(K, 0.0)});
          }
          terms_[it->second].snapshots[j] = t.signed_coefficient();
        }
      }
    }
  }

  std::size_t qubit_count() const { return qubits_; }
  std::size_t term_count() const { return terms_.size(); }
  const PauliString& string(std::size_t j) const { return terms_[j].string; }

  double coefficient(std::size_t j, double u) const {
    const Term& t = terms_[j];
    if (!snapshot_) return t.weighted ? t.c * path_.weight(u) : t.c;
    const std::size_t segments = t.snapshots.size() - 1;
    double x = u * segments;
    std::size_t seg = std::min(static_cast<std::size_t>(x), segments - 1);
    double f = x - seg;
    return (1 - f) * t.snapshots[seg] + f * t.snapshots[seg + 1];
  }

  /// out = i * H(u) * y
  void derivative(double u, const std::vector<std::complex<double>>& y,
                  std::vector<std::complex<double>>& out) const {
    std::fill(out.begin(), out.end(), std::complex<double>(0, 0));
    for (std::size_t j = 0; j < terms_.size(); ++j) {
      const Term& t = terms_[j];
      const std::complex<double> ic(0.0, coefficient(j, u));
      if (ic.imag() == 0.0) continue;
      for (std::size_t b = 0; b < y.size(); ++b)
        out[b ^ t.xmask] += ic * transition_factor(t.string, b) * y[b];
    }
  }

 private:
  struct Term {
    PauliString string;  // weight mode keeps the model sign on the string
    std::size_t xmask;
    double c;      // weight mode: bare coefficient (>= 0)
    bool weighted; // true for interaction terms (scaled by w(u))
    std::vector<double> snapshots;  // snapshot mode: signed coefficients
  };

  AdiabaticPath path_;
  bool snapshot_;
  std::size_t qubits_ = 0;
  std::vector<Term> terms_;
};

}  // namespace detail

/// Integrates d psi / dt = i H(t/T) psi from 0 to T with adaptive
/// Dormand-Prince 4(5), relative tolerance 1e-10 by default. Norm drift
/// beyond 1e-8 or step exhaustion raises NumericalError.
inline StateVector run_exact_reference(const HamiltonianSchedule& sched, StateVector psi,
                                       double rel_tol = 1e-10) {
  const double T = sched.total_time;
  if (T == 0.0) return psi;
  detail::ScheduleTerms H(sched);
  if (psi.qubit_count() != H.qubit_count())
    throw std::invalid_argument("run_exact_reference: state size mismatch");

  using Vec = std::vector<std::complex<double>>;
  Vec y = psi.amplitudes();
  const std::size_t dim = y.size();
  const double norm0 = psi.norm();
  const double abs_tol = 1e-12;

  // Dormand-Prince coefficients
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static constexpr double e1 = 35.0 / 384 - 5179.0 / 57600, e3 = 500.0 / 1113 - 7571.0 / 16695,
                          e4 = 125.0 / 192 - 393.0 / 640, e5 = -2187.0 / 6784 + 92097.0 / 339200,
                          e6 = 11.0 / 84 - 187.0 / 2100, e7 = -1.0 / 40;

  Vec k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), ytmp(dim), ynew(dim);
  auto axpy = [&](Vec& out, const Vec& base, std::initializer_list<std::pair<double, const Vec*>> terms,
                  double h) {
    for (std::size_t b = 0; b < dim; ++b) {
      std::complex<double> acc = base[b];
      for (const auto& [coef, k] : terms) acc += h * coef * (*k)[b];
      out[b] = acc;
    }
  };

  double t = 0.0;
  double h = std::min(T, 0.05 / (1.0 + H.term_count()));
  long steps = 0;
  const long max_steps = 4000000;
  while (t < T) {
    if (++steps > max_steps)
      throw NumericalError("run_exact_reference: tolerance not achieved within step budget");
    h = std::min(h, T - t);
    H.derivative(t / T, y, k1);
    axpy(ytmp, y, {{a21, &k1}}, h);
    H.derivative((t + c2 * h) / T, ytmp, k2);
    axpy(ytmp, y, {{a31, &k1}, {a32, &k2}}, h);
    H.derivative((t + c3 * h) / T, ytmp, k3);
    axpy(ytmp, y, {{a41, &k1}, {a42, &k2}, {a43, &k3}}, h);
    H.derivative((t + c4 * h) / T, ytmp, k4);
    axpy(ytmp, y, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}, h);
    H.derivative((t + c5 * h) / T, ytmp, k5);
    axpy(ytmp, y, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}, h);
    H.derivative((t + h) / T, ytmp, k6);
    axpy(ynew, y, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}}, h);
    H.derivative((t + h) / T, ynew, k7);

    double err = 0.0;
    for (std::size_t b = 0; b < dim; ++b) {
      std::complex<double> e = h * (e1 * k1[b] + e3 * k3[b] + e4 * k4[b] + e5 * k5[b] +
                                    e6 * k6[b] + e7 * k7[b]);
      double scale = abs_tol + rel_tol * std::max(std::abs(y[b]), std::abs(ynew[b]));
      double r = std::abs(e) / scale;
      err = std::max(err, r);
    }
    if (err <= 1.0) {
      t += h;
      y.swap(ynew);
    }
    double factor = err > 0 ? 0.9 * std::pow(err, -0.2) : 5.0;
    h *= std::clamp(factor, 0.2, 5.0);
    if (h < T * 1e-14)
      throw NumericalError("run_exact_reference: step size underflow");
  }

  StateVector out(psi.qubit_count());
  out.amplitudes() = std::move(y);
  if (std::abs(out.norm() - norm0) > 1e-8)
    throw NumericalError("run_exact_reference: norm drift above 1e-8");
  return out;
}

inline StateVector run_exact_reference(const HamiltonianSchedule& sched, std::size_t ini_index,
                                       double rel_tol = 1e-10) {
  std::size_t qubits =
      sched.is_snapshot() ? sched.snapshots.front().qubit_count : sched.model.qubit_count;
  return run_exact_reference(sched, StateVector(qubits, ini_index), rel_tol);
}

/// First-order Trotter ASP: steps product terms exp(i dt c_n(u) P_n) with H
/// evaluated at t = 0, dt, ..., T - dt. Term order is the model's stored
/// order (background first); a seed permutes it reproducibly.
inline StateVector run_trotter_asp(const HamiltonianSchedule& sched, long steps,
                                   std::size_t ini_index,
                                   std::optional<std::uint64_t> permutation_seed = {}) {
  if (steps < 1) throw std::invalid_argument("run_trotter_asp: need steps >= 1");
  detail::ScheduleTerms H(sched);
  std::vector<std::size_t> order(H.term_count());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  if (permutation_seed) {
    auto rng = stream_rng(*permutation_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  StateVector psi(H.qubit_count(), ini_index);
  const double dt = sched.total_time / steps;
  for (long m = 0; m < steps; ++m) {
    const double u = static_cast<double>(m) / steps;
    for (std::size_t j : order) {
      double c = H.coefficient(j, u);
      if (c != 0.0) psi.apply_pauli_rotation(H.string(j), dt * c);
    }
  }
  return psi;
}

/// <psi| H |psi> + identity constant.
inline double energy_expectation(const HamiltonianModel& model, const StateVector& psi) {
  return psi.expectation(model.background) + psi.expectation(model.interaction) +
         model.constant_energy;
}

// ---------------------------------------------------------------------------
// Hadamard test
// ---------------------------------------------------------------------------

/// The three sampled circuits of one amplitude <ini| U1^dag e^{i phase} U' U2 |ini>.
/// `central` may be null (phase-only). `phase` already excludes the identity
/// part of the Hamiltonian (handled classically by the caller).
struct HadamardBranches {
  const SampledCircuit* backward = nullptr;  // U1, controlled on ancilla = 0
  const SampledCircuit* forward = nullptr;   // U2, controlled on ancilla = 1
  const SampledCircuit* central = nullptr;   // U', controlled on ancilla = 1
  double phase = 0.0;

  double lambda() const {
    double l = backward->attenuation * forward->attenuation;
    if (central) l *= central->attenuation;
    return l;
  }
};

namespace detail {

inline void append_controlled_sampled(NativeCircuit& c, const SampledCircuit& sc,
                                      const HamiltonianModel& model, int ancilla,
                                      bool control_value) {
  const auto& interaction = model.interaction.terms();
  const auto& background = model.background.terms();
  if (sc.variant == SamplerVariant::background) {
    double prev = 0.0;
    for (const auto& e : sc.events) {
      if (e.time != prev)
        c.append(compile_diagonal_evolution(model.background, sc.direction * (e.time - prev),
                                            ancilla, control_value));
      c.append(compile_rotation(interaction[e.term_index].string, e.angle, ancilla, control_value));
      prev = e.time;
    }
    if (sc.total_time != prev)
      c.append(compile_diagonal_evolution(model.background, sc.direction * (sc.total_time - prev),
                                          ancilla, control_value));
  } else {
    for (const auto& e : sc.events) {
      const PauliString& p = e.term_index < sc.interaction_term_count
                                 ? interaction[e.term_index].string
                                 : background[e.term_index - sc.interaction_term_count].string;
      c.append(compile_rotation(p, e.angle, ancilla, control_value));
    }
  }
}

}  // namespace detail

/// Ancilla layout: the ancilla is qubit L. Forward branch (U2, then U', then
/// the phase as an ancilla Rz) is controlled on ancilla = 1; the backward
/// branch U1 on ancilla = 0. The trailing basis rotation selects Re (X basis)
/// or Im (Y basis) of the amplitude.
inline NativeCircuit build_hadamard_test(const HamiltonianModel& model,
                                         const HadamardBranches& branches, Part part) {
  const int ancilla = static_cast<int>(model.qubit_count);
  NativeCircuit c;
  c.push(GateKind::H, ancilla);
  detail::append_controlled_sampled(c, *branches.forward, model, ancilla, true);
  if (branches.central)
    detail::append_controlled_sampled(c, *branches.central, model, ancilla, true);
  if (branches.phase != 0.0) c.rz(ancilla, -branches.phase / 2);  // diag(1, e^{i phase})
  detail::append_controlled_sampled(c, *branches.backward, model, ancilla, false);
  if (part == Part::imag_part) c.push(GateKind::Sdg, ancilla);
  c.push(GateKind::H, ancilla);
  return c;
}

namespace detail {

struct ParityContext {
  std::uint64_t up_mask = 0, down_mask = 0;
  bool up_parity = false, down_parity = false;
  int electron_count = 0;

  static ParityContext from_initial(std::size_t ini, std::size_t qubits) {
    ParityContext ctx;
    for (std::size_t q = 0; q < qubits; ++q)
      (q % 2 == 0 ? ctx.up_mask : ctx.down_mask) |= std::uint64_t{1} << q;
    ctx.up_parity = std::popcount(ini & ctx.up_mask) % 2;
    ctx.down_parity = std::popcount(ini & ctx.down_mask) % 2;
    ctx.electron_count = std::popcount(std::uint64_t{ini});
    return ctx;
  }

  void fill(ShotRecord& r) const {
    r.up_parity_ok = (std::popcount(r.system_bits & up_mask) % 2) == (up_parity ? 1 : 0);
    r.down_parity_ok = (std::popcount(r.system_bits & down_mask) % 2) == (down_parity ? 1 : 0);
    r.particle_number_ok = std::popcount(r.system_bits) == electron_count;
  }
};

}  // namespace detail

/// Executes a compiled Hadamard-test circuit for one shot, inserting
/// trajectory depolarizing noise after each ZZ gate, then measures the
/// ancilla in the selected basis and the system in Z.
inline ShotRecord run_circuit_shot(const NativeCircuit& circuit, std::size_t system_qubits,
                                   std::size_t ini_index, const NoiseModel& noise,
                                   double weight, std::mt19937_64& rng) {
  StateVector psi(system_qubits + 1, ini_index);
  std::bernoulli_distribution error(noise.active() ? noise.p_depol : 0.0);
  std::uniform_int_distribution<int> pauli15(1, 15);
  for (const auto& g : circuit.gates) {
    psi.apply_gate(g);
    if (g.kind == GateKind::ZZ && noise.active() && error(rng)) {
      int idx = pauli15(rng);
      auto kick = [&psi](int which, int q) {
        if (which == 1) psi.apply_x(q);
        else if (which == 2) psi.apply_y(q);
        else if (which == 3) psi.apply_z(q);
      };
      kick(idx & 3, g.q0);
      kick(idx >> 2, g.q1);
    }
  }
  std::size_t bits = psi.sample_basis_index(rng);
  ShotRecord r;
  r.ancilla_outcome = ((bits >> system_qubits) & 1) ? -1 : +1;
  r.system_bits = bits & ((std::uint64_t{1} << system_qubits) - 1);
  r.weight = weight;
  detail::ParityContext::from_initial(ini_index, system_qubits).fill(r);
  return r;
}

/// One analytic-mode shot: the amplitude of the sampled triple is computed
/// densely and a single Bernoulli outcome is drawn. Noiseless by definition,
/// so parity metadata is trivially clean.
inline ShotRecord run_analytic_shot(const HamiltonianModel& model, std::size_t ini_index,
                                    const HadamardBranches& branches, Part part,
                                    double weight, std::mt19937_64& rng) {
  StateVector a(model.qubit_count, ini_index);
  apply_sampled_circuit(a, *branches.backward, model);
  StateVector b(model.qubit_count, ini_index);
  apply_sampled_circuit(b, *branches.forward, model);
  if (branches.central) apply_sampled_circuit(b, *branches.central, model);
  std::complex<double> z = a.inner(b) * std::polar(1.0, branches.phase);
  double val = std::clamp(part == Part::imag_part ? z.imag() : z.real(), -1.0, 1.0);
  std::bernoulli_distribution plus((1.0 + val) / 2.0);
  ShotRecord r;
  r.ancilla_outcome = plus(rng) ? +1 : -1;
  r.system_bits = ini_index;
  r.weight = weight;
  return r;
}

/// Full Hadamard-test shot against explicit circuits (spec surface); picks
/// the analytic or compiled path per `mode`.
inline ShotRecord hadamard_test_shot(const HamiltonianModel& model, std::size_t ini_index,
                                     const HadamardBranches& branches, Part part,
                                     const NoiseModel& noise, ExecMode mode,
                                     std::mt19937_64& rng) {
  const double weight = 1.0 / branches.lambda();
  if (mode == ExecMode::analytic) {
    if (noise.active())
      throw std::invalid_argument("analytic mode cannot carry trajectory noise");
    return run_analytic_shot(model, ini_index, branches, part, weight, rng);
  }
  NativeCircuit c = build_hadamard_test(model, branches, part);
  return run_circuit_shot(c, model.qubit_count, ini_index, noise, weight, rng);
}

// ---------------------------------------------------------------------------
// rho(s) estimation
// ---------------------------------------------------------------------------

/// Shot plan for rho(s) = Im <ini| A(T)^dag e^{i s (E - H)} A(T) |ini>.
/// Fresh (U1, U2, U') triples are drawn per sample; shots_per_sample > 1
/// re-executes the same triple with fresh noise and measurement.
struct RhoPlan {
  double total_time = 0.0;
  double tau = 0.1;
  double energy = 0.0;        // E, including the identity constant
  double central_time = 0.0;  // s
  long samples = 1000;
  long shots_per_sample = 1;
  Part part = Part::imag_part;
  ExecMode mode = ExecMode::analytic;
  NoiseModel noise;
  FilterPolicy policy = FilterPolicy::none;
  AdiabaticPath path = AdiabaticPath::linear();
  std::uint64_t seed = 0;
  int threads = 1;
};

namespace detail {
inline constexpr std::uint64_t kShotStreamSalt = 0x9e0ddf5a5b3c4d2eULL;
}

inline std::vector<ShotRecord> collect_rho_shots(const HamiltonianModel& model,
                                                 std::size_t ini_index, const RhoPlan& plan,
                                                 double* mean_two_qubit_gates = nullptr,
                                                 double* lambda_out = nullptr) {
  if (plan.samples < 1 || plan.shots_per_sample < 1)
    throw std::invalid_argument("collect_rho_shots: need positive sample counts");
  const long S = plan.shots_per_sample;
  std::vector<ShotRecord> records(static_cast<std::size_t>(plan.samples) * S);
  std::vector<double> tqg(plan.samples, 0.0);
  double lambda_formula = 0.0;

  auto run_sample = [&](long i) {
    auto rng = stream_rng(plan.seed, static_cast<std::uint64_t>(i));
    SamplerConfig scfg{plan.tau, plan.total_time, SamplerVariant::background};
    SampledCircuit u1 = sample_adiabatic(model, plan.path, scfg, rng);
    SampledCircuit u2 = sample_adiabatic(model, plan.path, scfg, rng);
    SampledCircuit uc;
    HadamardBranches branches;
    branches.backward = &u1;
    branches.forward = &u2;
    if (plan.central_time > 0.0) {
      uc = sample_constant(model, plan.central_time, plan.tau, -1, rng);
      branches.central = &uc;
    }
    branches.phase = plan.central_time * (plan.energy - model.constant_energy);
    const double weight = 1.0 / branches.lambda();
    if (plan.mode == ExecMode::analytic) {
      StateVector a(model.qubit_count, ini_index);
      apply_sampled_circuit(a, *branches.backward, model);
      StateVector b(model.qubit_count, ini_index);
      apply_sampled_circuit(b, *branches.forward, model);
      if (branches.central) apply_sampled_circuit(b, *branches.central, model);
      std::complex<double> z = a.inner(b) * std::polar(1.0, branches.phase);
      double val = std::clamp(plan.part == Part::imag_part ? z.imag() : z.real(), -1.0, 1.0);
      for (long j = 0; j < S; ++j) {
        auto shot_rng = stream_rng(plan.seed ^ detail::kShotStreamSalt,
                                   static_cast<std::uint64_t>(i) * S + j);
        std::bernoulli_distribution plus((1.0 + val) / 2.0);
        ShotRecord r;
        r.ancilla_outcome = plus(shot_rng) ? +1 : -1;
        r.system_bits = ini_index;
        r.weight = weight;
        records[static_cast<std::size_t>(i) * S + j] = r;
      }
    } else {
      NativeCircuit circuit = build_hadamard_test(model, branches, plan.part);
      tqg[i] = circuit.two_qubit_count;
      for (long j = 0; j < S; ++j) {
        auto shot_rng = stream_rng(plan.seed ^ detail::kShotStreamSalt,
                                   static_cast<std::uint64_t>(i) * S + j);
        records[static_cast<std::size_t>(i) * S + j] = run_circuit_shot(
            circuit, model.qubit_count, ini_index, plan.noise, weight, shot_rng);
      }
    }
  };

  const int threads = std::max(1, plan.threads);
  if (threads == 1) {
    for (long i = 0; i < plan.samples; ++i) run_sample(i);
  } else {
    std::vector<std::thread> pool;
    std::atomic<long> next{0};
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (long i = next.fetch_add(1); i < plan.samples; i = next.fetch_add(1)) run_sample(i);
      });
    for (auto& th : pool) th.join();
  }

  {
    // formula value for diagnostics (identical across samples)
    SamplerConfig scfg{plan.tau, plan.total_time, SamplerVariant::background};
    double la = attenuation(model, plan.path, scfg);
    lambda_formula = la * la;
    if (plan.central_time > 0.0)
      lambda_formula *= std::exp(-std::tan(plan.tau / 2) * plan.central_time * model.mu_I);
  }
  if (mean_two_qubit_gates) {
    double sum = 0;
    for (double g : tqg) sum += g;
    *mean_two_qubit_gates = plan.samples > 0 ? sum / plan.samples : 0.0;
  }
  if (lambda_out) *lambda_out = lambda_formula;
  return records;
}

/// lambda^{-1}-scaled estimate of rho at the plan's (E, s), with filtering.
inline AmplitudeEstimate estimate_rho(const HamiltonianModel& model, std::size_t ini_index,
                                      const RhoPlan& plan) {
  double tqg = 0.0, lambda = 1.0;
  std::vector<ShotRecord> records = collect_rho_shots(model, ini_index, plan, &tqg, &lambda);
  AmplitudeEstimate est = parity_filter(records, plan.policy);
  est.mean_two_qubit_gates = tqg;
  est.lambda_total = lambda;
  return est;
}

}  // namespace qasp
