#pragma once

#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <regex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qasp/circuit.hpp"
#include "qasp/pauli.hpp"

namespace qasp {

/// Second-quantized integrals over L spin-orbitals:
///   H = core + sum_pq h1[p,q] c+_p c_q + sum_pqrs h2[p,q,r,s] c+_p c+_q c_r c_s
/// Spin-orbitals are interleaved up,down,up,down over the spatial orbitals.
struct MolecularIntegrals {
  std::size_t orbital_count = 0;  // spin-orbitals
  int electron_count = 0;
  int ms2 = 0;
  double core_energy = 0.0;
  std::vector<double> h1;  // L*L
  std::vector<double> h2;  // L^4

  explicit MolecularIntegrals(std::size_t L = 0)
      : orbital_count(L), h1(L * L, 0.0), h2(L * L * L * L, 0.0) {}

  double& one_body(std::size_t p, std::size_t q) { return h1[p * orbital_count + q]; }
  double one_body(std::size_t p, std::size_t q) const { return h1[p * orbital_count + q]; }
  double& two_body(std::size_t p, std::size_t q, std::size_t r, std::size_t s) {
    std::size_t L = orbital_count;
    return h2[((p * L + q) * L + r) * L + s];
  }
  double two_body(std::size_t p, std::size_t q, std::size_t r, std::size_t s) const {
    std::size_t L = orbital_count;
    return h2[((p * L + q) * L + r) * L + s];
  }
};

namespace detail {

inline double parse_fortran_double(std::string token, std::size_t lineno) {
  for (char& c : token)
    if (c == 'D' || c == 'd') c = 'E';
  try {
    std::size_t used = 0;
    double v = std::stod(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("fcidump line " + std::to_string(lineno) +
                             ": bad numeric value '" + token + "'");
  }
}

}  // namespace detail

/// Parses the FCIDUMP convention: namelist header with NORB/NELEC/MS2,
/// then `value i j k l` records with chemists' index ordering (ij|kl) and
/// 8-fold permutational symmetry. Spatial integrals are expanded to
/// interleaved spin-orbitals. Records `e i 0 0 0` (orbital energies) are
/// accepted and ignored.
inline MolecularIntegrals parse_fcidump(std::istream& is) {
  std::string header;
  std::string line;
  std::size_t lineno = 0;

  // header runs until &END or a bare '/'
  bool header_done = false;
  while (!header_done && std::getline(is, line)) {
    ++lineno;
    header += line + "\n";
    std::string upper;
    for (char c : line) upper.push_back(std::toupper(static_cast<unsigned char>(c)));
    if (upper.find("&END") != std::string::npos || line.find('/') != std::string::npos)
      header_done = true;
  }
  if (!header_done) throw std::runtime_error("fcidump: missing namelist terminator (&END or /)");

  std::string upper_header;
  for (char c : header) upper_header.push_back(std::toupper(static_cast<unsigned char>(c)));
  if (upper_header.find("&FCI") == std::string::npos)
    throw std::runtime_error("fcidump: header does not start with &FCI");

  auto header_int = [&](const std::string& key) -> std::optional<long> {
    std::regex re(key + "\\s*=\\s*(-?\\d+)");
    std::smatch m;
    if (std::regex_search(upper_header, m, re)) return std::stol(m[1]);
    return std::nullopt;
  };

  auto norb = header_int("NORB");
  if (!norb || *norb < 1) throw std::runtime_error("fcidump: missing or invalid NORB");
  const long n_spatial = *norb;
  const long nelec = header_int("NELEC").value_or(0);
  const long ms2 = header_int("MS2").value_or(0);

  // spatial-orbital records, canonicalized under the declared symmetries
  std::map<std::array<long, 4>, double> two_e;
  std::map<std::array<long, 2>, double> one_e;
  double core = 0.0;
  bool have_core = false;

  auto canon2 = [](long i, long j, long k, long l) -> std::array<long, 4> {
    auto key = [](long a, long b, long c, long d) { return std::array<long, 4>{a, b, c, d}; };
    std::array<long, 4> best = key(i, j, k, l);
    for (auto cand : {key(j, i, k, l), key(i, j, l, k), key(j, i, l, k), key(k, l, i, j),
                      key(l, k, i, j), key(k, l, j, i), key(l, k, j, i)})
      best = std::min(best, cand);
    return best;
  };

  while (std::getline(is, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string vtok;
    if (!(ls >> vtok)) continue;
    double value = detail::parse_fortran_double(vtok, lineno);
    long i, j, k, l;
    if (!(ls >> i >> j >> k >> l))
      throw std::runtime_error("fcidump line " + std::to_string(lineno) +
                               ": expected `value i j k l`");
    for (long idx : {i, j, k, l})
      if (idx < 0 || idx > n_spatial)
        throw std::runtime_error("fcidump line " + std::to_string(lineno) +
                                 ": orbital index out of range");
    if (i == 0 && j == 0 && k == 0 && l == 0) {
      if (have_core && std::abs(core - value) > 1e-12)
        throw std::runtime_error("fcidump line " + std::to_string(lineno) +
                                 ": conflicting core-energy records");
      core = value;
      have_core = true;
    } else if (k == 0 && l == 0 && j == 0) {
      // orbital energy record, not part of the Hamiltonian
      continue;
    } else if (k == 0 && l == 0) {
      if (i == 0 || j == 0)
        throw std::runtime_error("fcidump line " + std::to_string(lineno) +
                                 ": malformed one-electron record");
      std::array<long, 2> kk{std::min(i, j), std::max(i, j)};
      auto it = one_e.find(kk);
      if (it != one_e.end() && std::abs(it->second - value) > 1e-12)
        throw std::runtime_error("fcidump line " + std::to_string(lineno) +
                                 ": conflicting one-electron records");
      one_e[kk] = value;
    } else {
      if (i == 0 || j == 0 || k == 0 || l == 0)
        throw std::runtime_error("fcidump line " + std::to_string(lineno) +
                                 ": malformed two-electron record");
      auto kk = canon2(i, j, k, l);
      auto it = two_e.find(kk);
      if (it != two_e.end() && std::abs(it->second - value) > 1e-12)
        throw std::runtime_error("fcidump line " + std::to_string(lineno) +
                                 ": conflicting two-electron records");
      two_e[kk] = value;
    }
  }

  // expand to spin orbitals: spatial i (1-based) -> spin 2(i-1) up, 2(i-1)+1 down
  MolecularIntegrals ints(2 * static_cast<std::size_t>(n_spatial));
  ints.electron_count = static_cast<int>(nelec);
  ints.ms2 = static_cast<int>(ms2);
  ints.core_energy = core;

  auto spin_orb = [](long spatial_1based, int sigma) {
    return static_cast<std::size_t>(2 * (spatial_1based - 1) + sigma);
  };

  for (const auto& [key, value] : one_e) {
    auto [i, j] = std::pair(key[0], key[1]);
    for (int s = 0; s < 2; ++s) {
      ints.one_body(spin_orb(i, s), spin_orb(j, s)) = value;
      ints.one_body(spin_orb(j, s), spin_orb(i, s)) = value;
    }
  }

  for (const auto& [key, value] : two_e) {
    // all 8 chemists' permutations of (ij|kl)
    auto [i0, j0, k0, l0] = std::tuple(key[0], key[1], key[2], key[3]);
    std::array<std::array<long, 4>, 8> perms{{{i0, j0, k0, l0},
                                              {j0, i0, k0, l0},
                                              {i0, j0, l0, k0},
                                              {j0, i0, l0, k0},
                                              {k0, l0, i0, j0},
                                              {l0, k0, i0, j0},
                                              {k0, l0, j0, i0},
                                              {l0, k0, j0, i0}}};
    std::sort(perms.begin(), perms.end());
    auto end = std::unique(perms.begin(), perms.end());
    for (auto it = perms.begin(); it != end; ++it) {
      auto [i, j, k, l] = std::tuple((*it)[0], (*it)[1], (*it)[2], (*it)[3]);
      // 1/2 (ij|kl) c+_{i sigma} c+_{k tau} c_{l tau} c_{j sigma}
      for (int sigma = 0; sigma < 2; ++sigma)
        for (int tau = 0; tau < 2; ++tau)
          ints.two_body(spin_orb(i, sigma), spin_orb(k, tau), spin_orb(l, tau),
                        spin_orb(j, sigma)) += 0.5 * value;
    }
  }
  return ints;
}

inline MolecularIntegrals parse_fcidump(const std::string& text) {
  std::istringstream is(text);
  return parse_fcidump(is);
}

namespace detail {

// complex-coefficient Pauli accumulator used while multiplying ladder operators
using CPauliMap = std::map<std::vector<Pauli>, std::complex<double>>;

inline CPauliMap ladder_operator(std::size_t L, std::size_t p, bool dagger) {
  // c_p   = 1/2 (X_p + i Y_p) Z_{p-1} ... Z_0
  // c+_p  = 1/2 (X_p - i Y_p) Z_{p-1} ... Z_0
  CPauliMap out;
  std::vector<Pauli> x(L, Pauli::I), y(L, Pauli::I);
  for (std::size_t q = 0; q < p; ++q) x[q] = y[q] = Pauli::Z;
  x[p] = Pauli::X;
  y[p] = Pauli::Y;
  out[x] = {0.5, 0.0};
  out[y] = dagger ? std::complex<double>(0.0, -0.5) : std::complex<double>(0.0, 0.5);
  return out;
}

inline CPauliMap multiply_maps(const CPauliMap& a, const CPauliMap& b) {
  CPauliMap out;
  for (const auto& [la, ca] : a)
    for (const auto& [lb, cb] : b) {
      PauliString sa, sb;
      sa.letters = la;
      sb.letters = lb;
      PauliProduct prod = multiply(sa, sb);
      std::complex<double> c = ca * cb * prod.phase;
      auto [it, inserted] = out.try_emplace(prod.string.letters, c);
      if (!inserted) it->second += c;
    }
  return out;
}

inline void accumulate(CPauliMap& into, const CPauliMap& from, double scale) {
  for (const auto& [l, c] : from) {
    auto [it, inserted] = into.try_emplace(l, scale * c);
    if (!inserted) it->second += scale * c;
  }
}

}  // namespace detail

/// Jordan-Wigner image of the second-quantized Hamiltonian. The result is
/// Hermitian, so all coefficients come out real; an imaginary residue above
/// 1e-10 indicates non-Hermitian input and throws.
inline PauliSum jordan_wigner(const MolecularIntegrals& ints) {
  const std::size_t L = ints.orbital_count;
  if (L < 1) throw std::invalid_argument("jordan_wigner: need at least one orbital");

  std::vector<detail::CPauliMap> create(L), annihilate(L);
  for (std::size_t p = 0; p < L; ++p) {
    create[p] = detail::ladder_operator(L, p, true);
    annihilate[p] = detail::ladder_operator(L, p, false);
  }

  detail::CPauliMap acc;
  acc[std::vector<Pauli>(L, Pauli::I)] = ints.core_energy;

  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t q = 0; q < L; ++q) {
      double h = ints.one_body(p, q);
      if (h == 0.0) continue;
      detail::accumulate(acc, detail::multiply_maps(create[p], annihilate[q]), h);
    }

  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t q = 0; q < L; ++q) {
      if (p == q) continue;  // c+_p c+_q = 0 at p == q
      detail::CPauliMap left = detail::multiply_maps(create[p], create[q]);
      for (std::size_t r = 0; r < L; ++r)
        for (std::size_t s = 0; s < L; ++s) {
          if (r == s) continue;
          double h = ints.two_body(p, q, r, s);
          if (h == 0.0) continue;
          detail::accumulate(
              acc, detail::multiply_maps(left, detail::multiply_maps(annihilate[r], annihilate[s])), h);
        }
    }

  PauliSum out(L);
  for (const auto& [letters, c] : acc) {
    if (std::abs(c.imag()) > 1e-10)
      throw std::runtime_error("jordan_wigner: non-Hermitian input (imaginary coefficient)");
    PauliString s;
    s.letters = letters;
    out.add(c.real(), s);
  }
  return out;
}

/// Which Z-only strings are treated as background Hamiltonian.
enum class BackgroundRule { z_weight_le_1, z_weight_le_2 };

inline const char* to_string(BackgroundRule r) {
  return r == BackgroundRule::z_weight_le_1 ? "z_weight_le_1" : "z_weight_le_2";
}

inline BackgroundRule background_rule_from_string(const std::string& s) {
  if (s == "z_weight_le_1") return BackgroundRule::z_weight_le_1;
  if (s == "z_weight_le_2") return BackgroundRule::z_weight_le_2;
  throw std::invalid_argument("unknown background rule: " + s);
}

/// A Hamiltonian split into background (Z-only, diagonal) and interaction
/// parts, with cached norms and per-rotation two-qubit gate costs. The
/// identity component is kept out of both parts and added back to reported
/// energies classically.
struct HamiltonianModel {
  std::size_t qubit_count = 0;
  BackgroundRule rule = BackgroundRule::z_weight_le_1;
  PauliSum background;   // Z-only strings selected by the rule, no identity
  PauliSum interaction;  // everything else
  double constant_energy = 0.0;
  double mu_B = 0.0;
  double mu_I = 0.0;
  double mu = 0.0;                   // mu_B + mu_I
  std::vector<int> g_interaction;    // parallel to interaction.terms()
  std::vector<int> g_background;     // parallel to background.terms()
  double g_avg = 0.0;                // coefficient-weighted over interaction

  /// background + interaction + identity, reassembled term by term.
  PauliSum full() const {
    PauliSum h(qubit_count);
    h.add(background);
    h.add(interaction);
    if (constant_energy != 0.0) h.add(constant_energy, PauliString(qubit_count));
    return h;
  }
};

inline HamiltonianModel split(const PauliSum& h, BackgroundRule rule) {
  HamiltonianModel m;
  m.qubit_count = h.qubit_count();
  m.rule = rule;
  m.background = PauliSum(m.qubit_count);
  m.interaction = PauliSum(m.qubit_count);
  const int zmax = rule == BackgroundRule::z_weight_le_1 ? 1 : 2;
  for (const auto& t : h.terms()) {
    if (t.string.is_identity()) {
      m.constant_energy += t.signed_coefficient();
    } else if (t.string.is_z_only() && t.string.z_weight() <= zmax) {
      m.background.add(t);
    } else {
      m.interaction.add(t);
    }
  }
  m.background = m.background.sorted();
  m.interaction = m.interaction.sorted();
  m.mu_B = m.background.one_norm();
  m.mu_I = m.interaction.one_norm();
  m.mu = m.mu_B + m.mu_I;
  double weighted = 0.0;
  for (const auto& t : m.interaction.terms()) {
    int g = rotation_two_qubit_count(t.string.weight());
    m.g_interaction.push_back(g);
    weighted += t.coefficient * g;
  }
  for (const auto& t : m.background.terms())
    m.g_background.push_back(rotation_two_qubit_count(t.string.weight()));
  m.g_avg = m.mu_I > 0 ? weighted / m.mu_I : 0.0;
  return m;
}

/// Subtracts alpha * N_part^2 (particle number squared, JW image) choosing
/// alpha/2 as the median of the two-Z coefficients, which minimizes the
/// post-subtraction 1-norm of those terms. Per particle-number sector k the
/// spectrum shifts by exactly -alpha k^2; eigenvectors are unchanged.
struct NormReduction {
  PauliSum reduced;
  double alpha = 0.0;
};

inline NormReduction reduce_norm_particle_number(const PauliSum& h) {
  const std::size_t L = h.qubit_count();
  std::vector<double> two_z;  // over all qubit pairs, absent strings count 0
  bool any_present = false;
  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t q = p + 1; q < L; ++q) {
      std::vector<Pauli> letters(L, Pauli::I);
      letters[p] = letters[q] = Pauli::Z;
      if (h.contains(letters)) any_present = true;
      two_z.push_back(h.coefficient_of(letters));
    }
  if (!any_present) return {h, 0.0};

  std::sort(two_z.begin(), two_z.end());
  double median = two_z[(two_z.size() - 1) / 2];  // lower median for even counts
  double alpha = 2.0 * median;
  if (alpha == 0.0) return {h, 0.0};

  // JW(N^2) = (L^2+L)/4 I - (L/2) sum_q Z_q + 1/2 sum_{p<q} Z_p Z_q
  PauliSum reduced = h;
  double dL = static_cast<double>(L);
  reduced.add(-alpha * (dL * dL + dL) / 4.0, PauliString(L));
  for (std::size_t q = 0; q < L; ++q) {
    PauliString z(L);
    z.set(q, Pauli::Z);
    reduced.add(alpha * dL / 2.0, z);
  }
  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t q = p + 1; q < L; ++q) {
      PauliString zz(L);
      zz.set(p, Pauli::Z);
      zz.set(q, Pauli::Z);
      reduced.add(-alpha / 2.0, zz);
    }
  return {reduced.sorted(), alpha};
}

/// Enumeration bound for exact sector minimization (matches the dense cap).
inline constexpr std::size_t kInitialStateEnumCap = 12;

/// Ground state of the (diagonal) background Hamiltonian within the fixed
/// electron-count sector. Ties resolve to the smallest basis index, i.e. the
/// lexicographically smallest bitstring written most-significant qubit first.
struct InitialState {
  std::size_t basis_index = 0;
  double background_energy = 0.0;
  std::size_t minimizer_count = 1;  // > 1 reports a tie
};

inline InitialState initial_state(const HamiltonianModel& model, int electron_count) {
  const std::size_t L = model.qubit_count;
  if (electron_count < 0 || static_cast<std::size_t>(electron_count) > L)
    throw std::invalid_argument("initial_state: electron count out of range");
  for (const auto& t : model.background.terms())
    if (!t.string.is_z_only())
      throw std::invalid_argument("initial_state: background is not Z-only");

  // diagonal energy of basis state b (occupied qubit -> Z eigenvalue -1)
  auto diag_energy = [&](std::size_t b) {
    double e = 0.0;
    for (const auto& t : model.background.terms()) {
      int sign = 1;
      for (std::size_t q = 0; q < L; ++q)
        if (t.string.letters[q] == Pauli::Z && ((b >> q) & 1)) sign = -sign;
      e += t.signed_coefficient() * sign;
    }
    return e;
  };

  bool multi_z = false;
  for (const auto& t : model.background.terms())
    if (t.string.z_weight() > 1) multi_z = true;

  if (multi_z && L > kInitialStateEnumCap)
    throw std::invalid_argument("initial_state: multi-Z background above the enumeration cap");
  if (multi_z || L <= kInitialStateEnumCap) {
    // exact enumeration of the k-hot sector
    std::size_t best = 0;
    double best_e = 0.0;
    std::size_t count = 0;
    const std::size_t dim = std::size_t{1} << L;
    for (std::size_t b = 0; b < dim; ++b) {
      if (std::popcount(b) != electron_count) continue;
      double e = diag_energy(b);
      if (count == 0 || e < best_e - 1e-12) {
        best = b;
        best_e = e;
        count = 1;
      } else if (std::abs(e - best_e) <= 1e-12) {
        ++count;  // smallest index seen first, keep it
      }
    }
    return {best, best_e, count == 0 ? std::size_t{1} : count};
  }

  // large L, single-Z fields only: occupy the largest fields greedily
  std::vector<double> field(L, 0.0);
  for (const auto& t : model.background.terms())
    for (std::size_t q = 0; q < L; ++q)
      if (t.string.letters[q] == Pauli::Z) field[q] = t.signed_coefficient();
  std::vector<std::size_t> order(L);
  for (std::size_t q = 0; q < L; ++q) order[q] = q;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (field[a] != field[b]) return field[a] > field[b];
    return a < b;
  });
  std::size_t bits = 0;
  for (int k = 0; k < electron_count; ++k) bits |= std::size_t{1} << order[k];
  return {bits, diag_energy(bits), 1};
}

/// Every interaction term of a molecular Hamiltonian must preserve both
/// spin-sector occupation parities; this is what licenses parity filtering.
inline void verify_spin_parity_conservation(const PauliSum& h) {
  auto partition = interleaved_spin_partition(h.qubit_count());
  for (const auto& t : h.terms()) {
    auto [up, down] = spin_sector_parity_signature(t.string, partition);
    if (up || down)
      throw std::runtime_error("hamiltonian term " + t.string.letters_string() +
                               " breaks a spin-sector parity; refusing to ingest");
  }
}

/// Plain key-value sidecar describing an ingested Hamiltonian.
inline void write_model_metadata(std::ostream& os, const HamiltonianModel& model,
                                 int electron_count, double alpha) {
  char buf[64];
  auto num = [&buf](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "qubits " << model.qubit_count << '\n'
     << "electrons " << electron_count << '\n'
     << "mu " << num(model.mu) << '\n'
     << "mu_I " << num(model.mu_I) << '\n'
     << "mu_B " << num(model.mu_B) << '\n'
     << "alpha " << num(alpha) << '\n'
     << "g_avg " << num(model.g_avg) << '\n'
     << "constant_energy " << num(model.constant_energy) << '\n'
     << "background_rule " << to_string(model.rule) << '\n'
     << "ordering interleaved_up_down\n";
}

}  // namespace qasp
