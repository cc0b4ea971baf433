#pragma once

// Test-only oracles, deliberately independent of the library's
// implementation paths: dense Kronecker products for Pauli strings, dense
// fermionic ladder operators in the occupation-number basis, a fine-step
// ordered-product integrator for time-ordered exponentials, and a
// Kolmogorov-Smirnov uniformity test.

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <sstream>
#include <cmath>
#include <complex>
#include <random>
#include <string>
#include <vector>

#include "qasp/chem.hpp"
#include "qasp/dense.hpp"
#include "qasp/pauli.hpp"
#include "qasp/schedule.hpp"

namespace testutil {

using qasp::DenseMatrix;
using Complex = std::complex<double>;

inline DenseMatrix pauli_matrix(qasp::Pauli p) {
  DenseMatrix m(2, 2);
  switch (p) {
    case qasp::Pauli::I: m << 1, 0, 0, 1; break;
    case qasp::Pauli::X: m << 0, 1, 1, 0; break;
    case qasp::Pauli::Y: m << 0, Complex(0, -1), Complex(0, 1), 0; break;
    case qasp::Pauli::Z: m << 1, 0, 0, -1; break;
  }
  return m;
}

inline DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Kronecker-product realization with qubit 0 as the least significant
/// factor: M = A_{L-1} (x) ... (x) A_0.
inline DenseMatrix kron_string(const qasp::PauliString& p) {
  DenseMatrix m = DenseMatrix::Identity(1, 1);
  for (std::size_t q = 0; q < p.size(); ++q) m = kron(pauli_matrix(p.letters[q]), m);
  return static_cast<double>(p.sign) * m;
}

inline DenseMatrix kron_sum(const qasp::PauliSum& h) {
  const std::size_t dim = std::size_t{1} << h.qubit_count();
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  for (const auto& t : h.terms()) m += t.coefficient * kron_string(t.string);
  return m;
}

/// Dense annihilation operator in the occupation basis with fermionic signs:
/// c_p |n> = (-1)^{sum_{q<p} n_q} |n - 1_p> when n_p = 1.
inline DenseMatrix ladder_annihilate(std::size_t modes, std::size_t p) {
  const std::size_t dim = std::size_t{1} << modes;
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  for (std::size_t n = 0; n < dim; ++n) {
    if (!((n >> p) & 1)) continue;
    int sign = 1;
    for (std::size_t q = 0; q < p; ++q)
      if ((n >> q) & 1) sign = -sign;
    m(n ^ (std::size_t{1} << p), n) = sign;
  }
  return m;
}

/// Dense second-quantized Hamiltonian built directly from ladder matrices.
inline DenseMatrix dense_fermionic_hamiltonian(const qasp::MolecularIntegrals& ints) {
  const std::size_t L = ints.orbital_count;
  const std::size_t dim = std::size_t{1} << L;
  std::vector<DenseMatrix> a(L), ad(L);
  for (std::size_t p = 0; p < L; ++p) {
    a[p] = ladder_annihilate(L, p);
    ad[p] = a[p].adjoint();
  }
  DenseMatrix h = ints.core_energy * DenseMatrix::Identity(dim, dim);
  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t q = 0; q < L; ++q)
      if (ints.one_body(p, q) != 0.0) h += ints.one_body(p, q) * ad[p] * a[q];
  for (std::size_t p = 0; p < L; ++p)
    for (std::size_t q = 0; q < L; ++q)
      for (std::size_t r = 0; r < L; ++r)
        for (std::size_t s = 0; s < L; ++s)
          if (ints.two_body(p, q, r, s) != 0.0)
            h += ints.two_body(p, q, r, s) * ad[p] * ad[q] * a[r] * a[s];
  return h;
}

/// Fine-step ordered product approximating T exp(i int_0^T H(t/T) dt).
inline DenseMatrix ordered_product_evolution(const qasp::HamiltonianSchedule& sched,
                                             double dt = 1e-4) {
  const std::size_t qubits = sched.is_snapshot() ? sched.snapshots.front().qubit_count
                                                 : sched.model.qubit_count;
  const std::size_t dim = std::size_t{1} << qubits;
  DenseMatrix u = DenseMatrix::Identity(dim, dim);
  const double T = sched.total_time;
  const long steps = std::max<long>(1, std::llround(T / dt));
  const double h = T / steps;
  for (long m = 0; m < steps; ++m) {
    double t_mid = (m + 0.5) * h;
    DenseMatrix hm = kron_sum(qasp::hamiltonian_at(sched, t_mid / T));
    Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hm);
    DenseMatrix expm = es.eigenvectors() *
                       (Complex(0, 1) * h * es.eigenvalues().array()).exp().matrix().asDiagonal() *
                       es.eigenvectors().adjoint();
    u = expm * u;
  }
  return u;
}

inline DenseMatrix matrix_exponential_i(const DenseMatrix& hermitian, double t) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(hermitian);
  return es.eigenvectors() *
         (Complex(0, 1) * t * es.eigenvalues().array()).exp().matrix().asDiagonal() *
         es.eigenvectors().adjoint();
}

/// One-sample Kolmogorov-Smirnov p-value against U[0, hi].
inline double ks_uniform_pvalue(std::vector<double> samples, double hi) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double cdf = samples[i] / hi;
    d = std::max(d, std::abs((i + 1) / n - cdf));
    d = std::max(d, std::abs(cdf - i / n));
  }
  double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  double p = 0;
  for (int j = 1; j <= 100; ++j)
    p += 2 * std::pow(-1.0, j - 1) * std::exp(-2.0 * j * j * lambda * lambda);
  return std::clamp(p, 0.0, 1.0);
}

/// Seeded random Hamiltonian: `terms` random non-identity strings on
/// `qubits` qubits with coefficients uniform in (0, max_coeff].
inline qasp::PauliSum random_hamiltonian(std::size_t qubits, int terms, double max_coeff,
                                         std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> letter(0, 3);
  std::uniform_real_distribution<double> coeff(0.05, max_coeff);
  std::uniform_int_distribution<int> sign(0, 1);
  qasp::PauliSum h(qubits);
  int added = 0;
  while (added < terms) {
    qasp::PauliString s(qubits);
    for (std::size_t q = 0; q < qubits; ++q)
      s.letters[q] = static_cast<qasp::Pauli>(letter(rng));
    if (s.is_identity()) continue;
    if (h.contains(s.letters)) continue;
    h.add((sign(rng) ? 1 : -1) * coeff(rng), s);
    ++added;
  }
  return h;
}

inline std::string fixture_path(const std::string& name) {
  return std::string(QASP_SOURCE_DIR) + "/fixtures/" + name;
}

inline std::string experiment_path(const std::string& name) {
  return std::string(QASP_SOURCE_DIR) + "/experiments/" + name;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("test fixture missing: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace testutil
