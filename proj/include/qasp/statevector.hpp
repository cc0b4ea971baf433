#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "qasp/circuit.hpp"
#include "qasp/pauli.hpp"

namespace qasp {
namespace detail {

/// Bitmask of qubits where p has an X or Y letter (the basis flips).
inline std::size_t x_mask(const PauliString& p) {
  std::size_t m = 0;
  for (std::size_t q = 0; q < p.size(); ++q)
    if (p.letters[q] == Pauli::X || p.letters[q] == Pauli::Y) m |= std::size_t{1} << q;
  return m;
}

/// Amplitude factor of p on |b> (the target index is b ^ x_mask(p)).
inline std::complex<double> transition_factor(const PauliString& p, std::size_t b) {
  std::complex<double> f = static_cast<double>(p.sign);
  for (std::size_t q = 0; q < p.size(); ++q) {
    switch (p.letters[q]) {
      case Pauli::I: break;
      case Pauli::X: break;
      case Pauli::Y:
        f *= ((b >> q) & 1) ? std::complex<double>(0, -1) : std::complex<double>(0, 1);
        break;
      case Pauli::Z:
        if ((b >> q) & 1) f = -f;
        break;
    }
  }
  return f;
}

}  // namespace detail

/// Dense complex statevector over n qubits. Basis index bit q holds the
/// occupation of qubit q (qubit 0 is the least significant bit).
class StateVector {
 public:
  using Complex = std::complex<double>;

  explicit StateVector(std::size_t qubits, std::size_t basis_index = 0)
      : n_(qubits), amp_(std::size_t{1} << qubits, Complex(0, 0)) {
    amp_.at(basis_index) = Complex(1, 0);
  }

  std::size_t qubit_count() const { return n_; }
  std::size_t dim() const { return amp_.size(); }
  const std::vector<Complex>& amplitudes() const { return amp_; }
  std::vector<Complex>& amplitudes() { return amp_; }

  double norm() const {
    double s = 0;
    for (const Complex& a : amp_) s += std::norm(a);
    return std::sqrt(s);
  }

  Complex inner(const StateVector& other) const {  // <this|other>
    Complex s = 0;
    for (std::size_t b = 0; b < amp_.size(); ++b) s += std::conj(amp_[b]) * other.amp_[b];
    return s;
  }

  void apply_h(int q) {
    const std::size_t mask = std::size_t{1} << q;
    const double inv = std::numbers::sqrt2 / 2;
    for (std::size_t b = 0; b < amp_.size(); ++b) {
      if (b & mask) continue;
      Complex a0 = amp_[b], a1 = amp_[b | mask];
      amp_[b] = inv * (a0 + a1);
      amp_[b | mask] = inv * (a0 - a1);
    }
  }

  void apply_x(int q) {
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t b = 0; b < amp_.size(); ++b)
      if (!(b & mask)) std::swap(amp_[b], amp_[b | mask]);
  }

  void apply_y(int q) {
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t b = 0; b < amp_.size(); ++b)
      if (!(b & mask)) {
        Complex a0 = amp_[b], a1 = amp_[b | mask];
        amp_[b] = Complex(0, -1) * a1;
        amp_[b | mask] = Complex(0, 1) * a0;
      }
  }

  void apply_z(int q) {
    const std::size_t mask = std::size_t{1} << q;
    for (std::size_t b = 0; b < amp_.size(); ++b)
      if (b & mask) amp_[b] = -amp_[b];
  }

  void apply_s(int q, bool dagger = false) {
    const std::size_t mask = std::size_t{1} << q;
    const Complex f = dagger ? Complex(0, -1) : Complex(0, 1);
    for (std::size_t b = 0; b < amp_.size(); ++b)
      if (b & mask) amp_[b] *= f;
  }

  void apply_rz(int q, double angle) {  // exp(i angle Z_q)
    const std::size_t mask = std::size_t{1} << q;
    const Complex up = std::polar(1.0, angle), down = std::polar(1.0, -angle);
    for (std::size_t b = 0; b < amp_.size(); ++b) amp_[b] *= (b & mask) ? down : up;
  }

  void apply_zz(int q0, int q1, double angle) {  // exp(i angle Z_q0 Z_q1)
    const std::size_t m0 = std::size_t{1} << q0, m1 = std::size_t{1} << q1;
    const Complex same = std::polar(1.0, angle), diff = std::polar(1.0, -angle);
    for (std::size_t b = 0; b < amp_.size(); ++b)
      amp_[b] *= (((b & m0) != 0) == ((b & m1) != 0)) ? same : diff;
  }

  void apply_gate(const NativeGate& g) {
    switch (g.kind) {
      case GateKind::X: apply_x(g.q0); break;
      case GateKind::Y: apply_y(g.q0); break;
      case GateKind::Z: apply_z(g.q0); break;
      case GateKind::S: apply_s(g.q0, false); break;
      case GateKind::Sdg: apply_s(g.q0, true); break;
      case GateKind::H: apply_h(g.q0); break;
      case GateKind::Rz: apply_rz(g.q0, g.angle); break;
      case GateKind::ZZ: apply_zz(g.q0, g.q1, g.angle); break;
    }
  }

  void apply_circuit(const NativeCircuit& c) {
    for (const auto& g : c.gates) apply_gate(g);
  }

  /// Multiplies by dense(p). The factor for |b> -> |b ^ xmask> follows the
  /// letterwise action (X: 1, Y: +/-i, Z: +/-1) times the string sign.
  void apply_pauli(const PauliString& p) {
    if (p.size() > n_) throw std::invalid_argument("apply_pauli: string too long");
    std::size_t xmask = 0;
    for (std::size_t q = 0; q < p.size(); ++q)
      if (p.letters[q] == Pauli::X || p.letters[q] == Pauli::Y) xmask |= std::size_t{1} << q;
    for (std::size_t b = 0; b < amp_.size(); ++b) {
      std::size_t b2 = b ^ xmask;
      if (b2 < b) continue;  // handle each pair once (b2 == b when xmask == 0)
      Complex f12 = transition_factor(p, b);       // |b> -> |b2>
      if (xmask == 0) {
        amp_[b] *= f12;
      } else {
        Complex f21 = transition_factor(p, b2);    // |b2> -> |b>
        Complex a1 = amp_[b], a2 = amp_[b2];
        amp_[b2] = f12 * a1;
        amp_[b] = f21 * a2;
      }
    }
  }

  /// exp(i angle P) applied exactly: cos(angle) psi + i sin(angle) P psi.
  void apply_pauli_rotation(const PauliString& p, double angle) {
    if (p.size() > n_) throw std::invalid_argument("apply_pauli_rotation: string too long");
    std::size_t xmask = 0;
    for (std::size_t q = 0; q < p.size(); ++q)
      if (p.letters[q] == Pauli::X || p.letters[q] == Pauli::Y) xmask |= std::size_t{1} << q;
    const double c = std::cos(angle);
    const Complex is = Complex(0, 1) * std::sin(angle);
    if (xmask == 0) {
      for (std::size_t b = 0; b < amp_.size(); ++b)
        amp_[b] *= c + is * transition_factor(p, b);
      return;
    }
    for (std::size_t b = 0; b < amp_.size(); ++b) {
      std::size_t b2 = b ^ xmask;
      if (b2 < b) continue;
      Complex f12 = transition_factor(p, b);   // factor on |b> -> |b2>
      Complex f21 = transition_factor(p, b2);
      Complex a1 = amp_[b], a2 = amp_[b2];
      amp_[b] = c * a1 + is * f21 * a2;
      amp_[b2] = c * a2 + is * f12 * a1;
    }
  }

  /// exp(i t zsum) for a Z-only sum: a pure per-basis phase.
  void apply_diagonal_evolution(const PauliSum& zsum, double t) {
    for (std::size_t b = 0; b < amp_.size(); ++b) {
      double e = 0;
      for (const auto& term : zsum.terms()) {
        int sign = term.string.sign;
        for (std::size_t q = 0; q < term.string.size(); ++q)
          if (term.string.letters[q] == Pauli::Z && ((b >> q) & 1)) sign = -sign;
        e += term.coefficient * sign;
      }
      amp_[b] *= std::polar(1.0, t * e);
    }
  }

  /// out += scale * h |psi>, matrix-free. transition_factor already carries
  /// the string sign, so each term enters with its bare coefficient.
  void accumulate_apply(const PauliSum& h, Complex scale, std::vector<Complex>& out) const {
    for (const auto& term : h.terms()) {
      std::size_t xmask = 0;
      for (std::size_t q = 0; q < term.string.size(); ++q)
        if (term.string.letters[q] == Pauli::X || term.string.letters[q] == Pauli::Y)
          xmask |= std::size_t{1} << q;
      const Complex cs = scale * term.coefficient;
      for (std::size_t b = 0; b < amp_.size(); ++b)
        out[b ^ xmask] += cs * transition_factor(term.string, b) * amp_[b];
    }
  }

  /// Re <psi| h |psi> (h Hermitian).
  double expectation(const PauliSum& h) const {
    std::vector<Complex> hpsi(amp_.size(), Complex(0, 0));
    accumulate_apply(h, Complex(1, 0), hpsi);
    Complex e = 0;
    for (std::size_t b = 0; b < amp_.size(); ++b) e += std::conj(amp_[b]) * hpsi[b];
    return e.real();
  }

  /// Samples a basis index from |amplitude|^2.
  std::size_t sample_basis_index(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng);
    double acc = 0;
    for (std::size_t b = 0; b < amp_.size(); ++b) {
      acc += std::norm(amp_[b]);
      if (r < acc) return b;
    }
    return amp_.size() - 1;  // numerical leftovers
  }

 private:
  static Complex transition_factor(const PauliString& p, std::size_t b) {
    return detail::transition_factor(p, b);
  }

  std::size_t n_;
  std::vector<Complex> amp_;
};

}  // namespace qasp
