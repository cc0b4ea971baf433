#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qasp/pauli.hpp"

namespace qasp {

/// Native gate set: Paulis, S, S-dagger, Hadamard, Z rotations and the
/// two-qubit coupling gate ZZ(theta) = exp(i theta Z o Z).
/// Angle conventions: Rz(theta) = exp(i theta Z), ZZ(theta) = exp(i theta Z o Z).
enum class GateKind : std::uint8_t { X, Y, Z, S, Sdg, H, Rz, ZZ };

struct NativeGate {
  GateKind kind;
  int q0 = 0;
  int q1 = -1;        // second qubit for ZZ
  double angle = 0.0; // Rz / ZZ only
};

struct NativeCircuit {
  std::vector<NativeGate> gates;
  int two_qubit_count = 0;

  void push(NativeGate g) {
    if (g.kind == GateKind::ZZ) ++two_qubit_count;
    gates.push_back(g);
  }
  void push(GateKind kind, int q) { push({kind, q, -1, 0.0}); }
  void rz(int q, double angle) { push({GateKind::Rz, q, -1, angle}); }
  void zz(int q0, int q1, double angle) { push({GateKind::ZZ, q0, q1, angle}); }
  void append(const NativeCircuit& other) {
    gates.insert(gates.end(), other.gates.begin(), other.gates.end());
    two_qubit_count += other.two_qubit_count;
  }
};

/// Two-qubit gate cost of exp(i tau P): 2(weight-1) plain, plus 2*weight for
/// the ancilla-controlled construction.
inline int rotation_two_qubit_count(int weight, bool controlled = false) {
  if (weight < 1) return 0;
  return controlled ? 2 * (weight - 1) + 2 * weight : 2 * (weight - 1);
}

namespace detail {

// CNOT(control, target) up to the phase e^{i pi/4}:
//   V = e^{-i pi/4} CX = H_t Rz_c(-pi/4) Rz_t(-pi/4) ZZ(pi/4) H_t.
// Ladder pairs use V ... V^dag so the phases cancel exactly.
inline void push_cx_v(NativeCircuit& c, int control, int target, bool dagger) {
  const double a = dagger ? -std::numbers::pi / 4 : std::numbers::pi / 4;
  c.push(GateKind::H, target);
  c.zz(control, target, a);
  c.rz(target, -a);
  c.rz(control, -a);
  c.push(GateKind::H, target);
}

}  // namespace detail

/// Compiles exp(i angle P) into native gates: per-qubit basis changes, a
/// ladder of (weight-1) ZZ-based conjugations on each side, and a central Rz.
/// The dense product equals exp(i angle P) exactly, global phase included.
inline NativeCircuit compile_rotation(const PauliString& p, double angle) {
  const int w = p.weight();
  if (w < 1)
    throw std::invalid_argument("compile_rotation: weight-0 string is a pure phase");
  NativeCircuit c;
  std::vector<int> support;
  for (std::size_t q = 0; q < p.size(); ++q)
    if (p.letters[q] != Pauli::I) support.push_back(static_cast<int>(q));

  // basis changes mapping each letter to Z: X -> H, Y -> S^dag then H
  for (int q : support) {
    Pauli l = p.letters[q];
    if (l == Pauli::Y) c.push(GateKind::Sdg, q);
    if (l != Pauli::Z) c.push(GateKind::H, q);
  }
  // applied order: V^dag up the ladder, central Rz, V back down
  for (std::size_t j = 0; j + 1 < support.size(); ++j)
    detail::push_cx_v(c, support[j], support[j + 1], true);
  c.rz(support.back(), angle * p.sign);
  for (std::size_t j = support.size() - 1; j-- > 0;)
    detail::push_cx_v(c, support[j], support[j + 1], false);

  for (int q : support) {
    Pauli l = p.letters[q];
    if (l != Pauli::Z) c.push(GateKind::H, q);
    if (l == Pauli::Y) c.push(GateKind::S, q);
  }
  return c;
}

/// Controlled rotation on an ancilla: exp(i a/2 P) * exp(-/+ i a/2 Z_anc o P),
/// active when the ancilla equals control_value. Costs 2(w-1) + 2w ZZ gates.
inline NativeCircuit compile_rotation(const PauliString& p, double angle, int ancilla,
                                      bool control_value = true) {
  const int w = p.weight();
  if (w < 1)
    throw std::invalid_argument("compile_rotation: weight-0 string is a pure phase");
  if (ancilla < static_cast<int>(p.size()))
    throw std::invalid_argument("compile_rotation: ancilla overlaps the string");
  NativeCircuit c = compile_rotation(p, angle / 2);
  PauliString ext = p;
  ext.letters.resize(static_cast<std::size_t>(ancilla) + 1, Pauli::I);
  ext.letters[ancilla] = Pauli::Z;
  const double sign = control_value ? -1.0 : 1.0;
  c.append(compile_rotation(ext, sign * angle / 2));
  return c;
}

/// Exact native compilation of exp(i t H_B) for a diagonal (Z-only) H_B.
/// Weight-1 terms become Rz, weight-2 terms the native ZZ gate, higher
/// weights a ladder. With `ancilla >= 0` the evolution is controlled on the
/// ancilla holding `control_value`, at one extra ZZ per weight-1 term.
inline NativeCircuit compile_diagonal_evolution(const PauliSum& zsum, double t,
                                                int ancilla = -1, bool control_value = true) {
  NativeCircuit c;
  auto push_z_rotation = [&c](const std::vector<int>& zs, double angle) {
    if (zs.size() == 1) {
      c.rz(zs[0], angle);
    } else if (zs.size() == 2) {
      c.zz(zs[0], zs[1], angle);
    } else {
      for (std::size_t j = 0; j + 1 < zs.size(); ++j)
        detail::push_cx_v(c, zs[j], zs[j + 1], true);
      c.rz(zs.back(), angle);
      for (std::size_t j = zs.size() - 1; j-- > 0;)
        detail::push_cx_v(c, zs[j], zs[j + 1], false);
    }
  };

  for (const auto& term : zsum.terms()) {
    if (!term.string.is_z_only())
      throw std::invalid_argument("compile_diagonal_evolution: non-diagonal term");
    std::vector<int> zs;
    for (std::size_t q = 0; q < term.string.size(); ++q)
      if (term.string.letters[q] == Pauli::Z) zs.push_back(static_cast<int>(q));
    if (zs.empty()) continue;  // identity handled classically
    const double theta = t * term.signed_coefficient();
    if (ancilla < 0) {
      push_z_rotation(zs, theta);
    } else {
      push_z_rotation(zs, theta / 2);
      std::vector<int> ext = zs;
      ext.push_back(ancilla);
      push_z_rotation(ext, (control_value ? -1.0 : 1.0) * theta / 2);
    }
  }
  return c;
}

}  // namespace qasp
