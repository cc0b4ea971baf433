#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>

#include "qasp/pauli.hpp"

namespace qasp {

using Complex = std::complex<double>;
using DenseMatrix = Eigen::MatrixXcd;
using DenseVector = Eigen::VectorXcd;

/// Largest qubit count realized densely by default (4096^2 matrices).
inline constexpr std::size_t kDenseCap = 12;

/// Basis convention: basis index b has bit q equal to the occupation of
/// qubit q, so qubit 0 is the least significant bit.
inline DenseMatrix to_dense(const PauliString& p) {
  const std::size_t n = p.size();
  if (n > kDenseCap) throw std::invalid_argument("to_dense: qubit count above dense cap");
  const std::size_t dim = std::size_t{1} << n;
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  for (std::size_t col = 0; col < dim; ++col) {
    std::size_t row = col;
    Complex amp = static_cast<double>(p.sign);
    for (std::size_t q = 0; q < n; ++q) {
      bool bit = (col >> q) & 1;
      switch (p.letters[q]) {
        case Pauli::I: break;
        case Pauli::X: row ^= std::size_t{1} << q; break;
        case Pauli::Y:
          row ^= std::size_t{1} << q;
          amp *= bit ? Complex(0, -1) : Complex(0, 1);
          break;
        case Pauli::Z:
          if (bit) amp = -amp;
          break;
      }
    }
    m(row, col) += amp;
  }
  return m;
}

inline DenseMatrix to_dense(const PauliSum& h, std::size_t cap = kDenseCap) {
  const std::size_t n = h.qubit_count();
  if (n > cap) throw std::invalid_argument("to_dense: qubit count above dense cap");
  const std::size_t dim = std::size_t{1} << n;
  DenseMatrix m = DenseMatrix::Zero(dim, dim);
  for (const auto& t : h.terms()) {
    const PauliString& p = t.string;
    double c = t.signed_coefficient();
    for (std::size_t col = 0; col < dim; ++col) {
      std::size_t row = col;
      Complex amp = c;
      for (std::size_t q = 0; q < n; ++q) {
        bool bit = (col >> q) & 1;
        switch (p.letters[q]) {
          case Pauli::I: break;
          case Pauli::X: row ^= std::size_t{1} << q; break;
          case Pauli::Y:
            row ^= std::size_t{1} << q;
            amp *= bit ? Complex(0, -1) : Complex(0, 1);
            break;
          case Pauli::Z:
            if (bit) amp = -amp;
            break;
        }
      }
      m(row, col) += amp;
    }
  }
  return m;
}

/// Smallest eigenvalue of the (Hermitian) dense realization.
inline double ground_energy(const PauliSum& h, std::size_t cap = kDenseCap) {
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(to_dense(h, cap));
  return solver.eigenvalues().minCoeff();
}

}  // namespace qasp
