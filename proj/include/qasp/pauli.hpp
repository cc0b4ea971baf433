#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qasp {

/// Single-qubit Pauli letter.
enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

inline char pauli_char(Pauli p) { return "IXYZ"[static_cast<int>(p)]; }

inline Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': return Pauli::I;
    case 'X': return Pauli::X;
    case 'Y': return Pauli::Y;
    case 'Z': return Pauli::Z;
    default: throw std::invalid_argument(std::string("not a Pauli letter: ") + c);
  }
}

/// Signed tensor product of Pauli letters. The sign is restricted to +/-1;
/// the +/-i phases arising from products are reported separately by
/// multiply() and never stored.
struct PauliString {
  std::vector<Pauli> letters;
  int sign = +1;

  PauliString() = default;
  explicit PauliString(std::size_t n, int s = +1) : letters(n, Pauli::I), sign(s) {}
  PauliString(std::string_view text, int s = +1) : sign(s) {
    letters.reserve(text.size());
    for (char c : text) letters.push_back(pauli_from_char(c));
  }

  std::size_t size() const { return letters.size(); }

  Pauli at(std::size_t q) const { return letters.at(q); }
  void set(std::size_t q, Pauli p) { letters.at(q) = p; }

  /// Number of non-identity letters.
  int weight() const {
    int w = 0;
    for (Pauli p : letters) w += (p != Pauli::I);
    return w;
  }

  /// Number of Z letters.
  int z_weight() const {
    int w = 0;
    for (Pauli p : letters) w += (p == Pauli::Z);
    return w;
  }

  bool is_identity() const { return weight() == 0; }

  /// True if every letter is I or Z (diagonal in the computational basis).
  bool is_z_only() const {
    return std::all_of(letters.begin(), letters.end(),
                       [](Pauli p) { return p == Pauli::I || p == Pauli::Z; });
  }

  std::string letters_string() const {
    std::string s;
    s.reserve(letters.size());
    for (Pauli p : letters) s.push_back(pauli_char(p));
    return s;
  }

  bool operator==(const PauliString& o) const = default;
};

/// Result of a Pauli string product: phase in {1, i, -1, -i} and the
/// product string. Input signs are folded into the product's sign; the
/// phase carries only the letter algebra.
struct PauliProduct {
  std::complex<double> phase;
  PauliString string;
};

namespace detail {

// per-position product: returns (letter, power of i in the phase)
inline std::pair<Pauli, int> letter_product(Pauli a, Pauli b) {
  if (a == Pauli::I) return {b, 0};
  if (b == Pauli::I) return {a, 0};
  if (a == b) return {Pauli::I, 0};
  // XY=iZ, YZ=iX, ZX=iY and reversed orders pick up -i
  static constexpr int ipow[4][4] = {
      {0, 0, 0, 0}, {0, 0, 1, 3}, {0, 3, 0, 1}, {0, 1, 3, 0}};
  int ia = static_cast<int>(a), ib = static_cast<int>(b);
  Pauli prod = static_cast<Pauli>(ia ^ ib);
  return {prod, ipow[ia][ib]};
}

inline std::complex<double> i_to_the(int k) {
  switch (((k % 4) + 4) % 4) {
    case 0: return {1, 0};
    case 1: return {0, 1};
    case 2: return {-1, 0};
    default: return {0, -1};
  }
}

}  // namespace detail

/// dense(a)*dense(b) == phase * dense(product).
inline PauliProduct multiply(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("multiply: Pauli string lengths differ");
  PauliString out(a.size(), a.sign * b.sign);
  int ipow = 0;
  for (std::size_t q = 0; q < a.size(); ++q) {
    auto [p, k] = detail::letter_product(a.letters[q], b.letters[q]);
    out.letters[q] = p;
    ipow += k;
  }
  return {detail::i_to_the(ipow), std::move(out)};
}

/// True iff [dense(a), dense(b)] = 0; equivalently the count of positions
/// where both letters are non-I and differ is even.
inline bool commutes(const PauliString& a, const PauliString& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("commutes: Pauli string lengths differ");
  int anticommuting = 0;
  for (std::size_t q = 0; q < a.size(); ++q) {
    Pauli pa = a.letters[q], pb = b.letters[q];
    if (pa != Pauli::I && pb != Pauli::I && pa != pb) ++anticommuting;
  }
  return anticommuting % 2 == 0;
}

enum class Spin : std::uint8_t { up, down };

/// Whether applying p flips the occupation parity of the spin-up and
/// spin-down sectors. A sector parity flips iff the count of X/Y letters
/// on that sector is odd.
inline std::pair<bool, bool> spin_sector_parity_signature(
    const PauliString& p, const std::vector<Spin>& partition) {
  if (partition.size() != p.size())
    throw std::invalid_argument("parity signature: partition does not cover all qubits");
  int up = 0, down = 0;
  for (std::size_t q = 0; q < p.size(); ++q) {
    Pauli l = p.letters[q];
    if (l == Pauli::X || l == Pauli::Y)
      (partition[q] == Spin::up ? up : down) += 1;
  }
  return {up % 2 == 1, down % 2 == 1};
}

/// Interleaved spin-orbital convention: qubit 0 is up, qubit 1 is down, ...
inline std::vector<Spin> interleaved_spin_partition(std::size_t qubit_count) {
  std::vector<Spin> part(qubit_count);
  for (std::size_t q = 0; q < qubit_count; ++q)
    part[q] = (q % 2 == 0) ? Spin::up : Spin::down;
  return part;
}

/// One term of a Hamiltonian: coefficient >= 0 times a signed Pauli string.
struct PauliTerm {
  double coefficient = 0.0;  // >= 0, sign lives on the string
  PauliString string;

  double signed_coefficient() const { return coefficient * string.sign; }
};

/// Hamiltonian as a merged list of Pauli terms. No two stored terms share a
/// letters sequence; terms with |coefficient| <= 1e-12 are dropped on merge.
class PauliSum {
 public:
  static constexpr double kMergeTolerance = 1e-12;

  PauliSum() = default;
  explicit PauliSum(std::size_t qubit_count) : qubit_count_(qubit_count) {}

  std::size_t qubit_count() const { return qubit_count_; }
  const std::vector<PauliTerm>& terms() const { return terms_; }
  std::size_t term_count() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /// Adds signed_coeff * letters, merging with an existing equal-letters term.
  void add(double signed_coeff, const PauliString& s) {
    if (s.size() != qubit_count_)
      throw std::invalid_argument("PauliSum::add: qubit count mismatch");
    double c = signed_coeff * s.sign;
    auto it = index_.find(s.letters);
    if (it == index_.end()) {
      if (std::abs(c) <= kMergeTolerance) return;
      PauliTerm t;
      t.coefficient = std::abs(c);
      t.string.letters = s.letters;
      t.string.sign = c >= 0 ? +1 : -1;
      index_.emplace(s.letters, terms_.size());
      terms_.push_back(std::move(t));
    } else {
      PauliTerm& t = terms_[it->second];
      double merged = t.signed_coefficient() + c;
      if (std::abs(merged) <= kMergeTolerance) {
        // swap-remove, fixing the displaced index
        std::size_t pos = it->second;
        index_.erase(it);
        if (pos + 1 != terms_.size()) {
          index_[terms_.back().string.letters] = pos;
          terms_[pos] = std::move(terms_.back());
        }
        terms_.pop_back();
      } else {
        t.coefficient = std::abs(merged);
        t.string.sign = merged >= 0 ? +1 : -1;
      }
    }
  }

  // add(value, s) adds value * dense(s), with s's own sign folded in
  void add(const PauliTerm& t) { add(t.coefficient, t.string); }

  void add(const PauliSum& other) {
    for (const auto& t : other.terms()) add(t);
  }

  /// Signed coefficient of the given letters sequence (0 if absent).
  double coefficient_of(const std::vector<Pauli>& letters) const {
    auto it = index_.find(letters);
    return it == index_.end() ? 0.0 : terms_[it->second].signed_coefficient();
  }

  bool contains(const std::vector<Pauli>& letters) const {
    return index_.count(letters) != 0;
  }

  /// Sum of coefficients c_n (all >= 0).
  double one_norm() const {
    double s = 0;
    for (const auto& t : terms_) s += t.coefficient;
    return s;
  }

  PauliSum scaled(double factor) const {
    PauliSum out(qubit_count_);
    for (const auto& t : terms_) out.add(factor * t.coefficient, t.string);
    return out;
  }

  /// Deterministic term order (sorted by letters sequence).
  PauliSum sorted() const {
    PauliSum out(qubit_count_);
    out.terms_ = terms_;
    std::sort(out.terms_.begin(), out.terms_.end(),
              [](const PauliTerm& a, const PauliTerm& b) {
                return a.string.letters < b.string.letters;
              });
    out.index_.clear();
    for (std::size_t i = 0; i < out.terms_.size(); ++i)
      out.index_[out.terms_[i].string.letters] = i;
    return out;
  }

 private:
  std::size_t qubit_count_ = 0;
  std::vector<PauliTerm> terms_;
  std::map<std::vector<Pauli>, std::size_t> index_;
};

/// Text format: one `<coefficient> <letters>` pair per line, '#' comments.
/// Round-trips losslessly at 17 significant digits.
inline void write_pauli_sum(std::ostream& os, const PauliSum& h) {
  char buf[64];
  const PauliSum ordered = h.sorted();
  for (const auto& t : ordered.terms()) {
    std::snprintf(buf, sizeof buf, "%.17g", t.signed_coefficient());
    os << buf << ' ' << t.string.letters_string() << '\n';
  }
}

inline std::string to_text(const PauliSum& h) {
  std::ostringstream os;
  write_pauli_sum(os, h);
  return os.str();
}

inline PauliSum parse_pauli_sum(std::istream& is) {
  PauliSum h;
  std::size_t qubits = 0;
  bool first = true;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double coeff;
    std::string letters;
    if (!(ls >> coeff)) continue;  // blank or comment-only line
    if (!(ls >> letters))
      throw std::runtime_error("pauli sum line " + std::to_string(lineno) +
                               ": missing letters");
    PauliString s(letters);
    if (first) {
      qubits = s.size();
      h = PauliSum(qubits);
      first = false;
    } else if (s.size() != qubits) {
      throw std::runtime_error("pauli sum line " + std::to_string(lineno) +
                               ": inconsistent qubit count");
    }
    h.add(coeff, s);
  }
  return h;
}

inline PauliSum parse_pauli_sum(const std::string& text) {
  std::istringstream is(text);
  return parse_pauli_sum(is);
}

}  // namespace qasp
