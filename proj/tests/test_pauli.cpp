#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "qasp/dense.hpp"
#include "qasp/pauli.hpp"
#include "test_util.hpp"

using namespace qasp;
using testutil::kron_string;
using testutil::kron_sum;

namespace {

PauliString str(const std::string& letters, int sign = +1) { return PauliString(letters, sign); }

PauliString random_string(std::size_t n, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> letter(0, 3), sign(0, 1);
  PauliString s(n, sign(rng) ? +1 : -1);
  for (std::size_t q = 0; q < n; ++q) s.letters[q] = static_cast<Pauli>(letter(rng));
  return s;
}

}  // namespace

TEST(PauliMultiply, Involution) {
  auto [phase, prod] = multiply(str("X"), str("X"));
  EXPECT_EQ(phase, std::complex<double>(1, 0));
  EXPECT_EQ(prod.letters_string(), "I");
  EXPECT_EQ(prod.sign, +1);
}

TEST(PauliMultiply, XYGivesIZ) {
  auto [phase, prod] = multiply(str("X"), str("Y"));
  EXPECT_EQ(phase, std::complex<double>(0, 1));
  EXPECT_EQ(prod.letters_string(), "Z");
}

TEST(PauliMultiply, TwoQubitAgainstDenseOracle) {
  // X1 Z2 times Y1 Z2 -> (i, Z1 I2), checked against 4x4 multiplication
  auto [phase, prod] = multiply(str("XZ"), str("YZ"));
  EXPECT_EQ(prod.letters_string(), "ZI");
  DenseMatrix lhs = kron_string(str("XZ")) * kron_string(str("YZ"));
  DenseMatrix rhs = phase * kron_string(prod);
  EXPECT_LT((lhs - rhs).norm(), 1e-14);
}

TEST(PauliMultiply, DenseFaithfulExhaustiveL2) {
  for (int a = 0; a < 16; ++a)
    for (int b = 0; b < 16; ++b)
      for (int sa : {+1, -1})
        for (int sb : {+1, -1}) {
          PauliString pa(2, sa), pb(2, sb);
          pa.letters = {static_cast<Pauli>(a & 3), static_cast<Pauli>(a >> 2)};
          pb.letters = {static_cast<Pauli>(b & 3), static_cast<Pauli>(b >> 2)};
          auto [phase, prod] = multiply(pa, pb);
          EXPECT_LT((kron_string(pa) * kron_string(pb) - phase * kron_string(prod)).norm(), 1e-13);
        }
}

TEST(PauliMultiply, AssociativeRandomizedL6) {
  std::mt19937_64 rng(7);
  for (int it = 0; it < 200; ++it) {
    auto a = random_string(6, rng), b = random_string(6, rng), c = random_string(6, rng);
    auto [p1, ab] = multiply(a, b);
    auto [p2, ab_c] = multiply(ab, c);
    auto [p3, bc] = multiply(b, c);
    auto [p4, a_bc] = multiply(a, bc);
    EXPECT_EQ(ab_c.letters, a_bc.letters);
    EXPECT_NEAR(std::abs(p1 * p2 * static_cast<double>(ab_c.sign) -
                         p3 * p4 * static_cast<double>(a_bc.sign)),
                0.0, 1e-14);
  }
}

TEST(PauliCommutes, Examples) {
  EXPECT_TRUE(commutes(str("X"), str("X")));
  EXPECT_FALSE(commutes(str("X"), str("Z")));
  EXPECT_TRUE(commutes(str("XX"), str("ZZ")));
}

TEST(PauliCommutes, MatchesDenseCommutator) {
  std::mt19937_64 rng(11);
  for (int it = 0; it < 200; ++it) {
    auto a = random_string(3, rng), b = random_string(3, rng);
    DenseMatrix comm = kron_string(a) * kron_string(b) - kron_string(b) * kron_string(a);
    EXPECT_EQ(commutes(a, b), comm.norm() < 1e-12);
  }
}

TEST(PauliStringOps, LengthMismatchThrows) {
  EXPECT_THROW(multiply(str("X"), str("XX")), std::invalid_argument);
  EXPECT_THROW(commutes(str("X"), str("XX")), std::invalid_argument);
}

TEST(ToDense, HalfZ) {
  PauliSum h(1);
  h.add(0.5, str("Z"));
  DenseMatrix m = to_dense(h);
  EXPECT_NEAR(m(0, 0).real(), 0.5, 1e-15);
  EXPECT_NEAR(m(1, 1).real(), -0.5, 1e-15);
  EXPECT_NEAR(std::abs(m(0, 1)) + std::abs(m(1, 0)), 0.0, 1e-15);
}

TEST(ToDense, EmptySumIsZero) {
  PauliSum h(2);
  EXPECT_NEAR(to_dense(h).norm(), 0.0, 1e-15);
}

TEST(ToDense, HoppingTermAgainstKroneckerOracle) {
  PauliSum h(2);
  h.add(0.5, str("XX"));
  h.add(0.5, str("YY"));
  DenseMatrix m = to_dense(h);
  EXPECT_LT((m - kron_sum(h)).norm(), 1e-14);
  // ones exactly at the (01, 10) pair of matrix entries
  EXPECT_NEAR(m(1, 2).real(), 1.0, 1e-14);
  EXPECT_NEAR(m(2, 1).real(), 1.0, 1e-14);
  EXPECT_NEAR(m.cwiseAbs().sum(), 2.0, 1e-12);
}

TEST(ToDense, CapEnforced) {
  PauliSum h(13);
  h.add(1.0, PauliString(std::string(13, 'Z')));
  EXPECT_THROW(to_dense(h), std::invalid_argument);
}

TEST(ToDense, RandomSumsMatchKroneckerOracle) {
  std::mt19937_64 rng(3);
  for (int it = 0; it < 20; ++it) {
    PauliSum h = testutil::random_hamiltonian(3, 5, 1.0, 100 + it);
    EXPECT_LT((to_dense(h) - kron_sum(h)).norm(), 1e-12);
    // Hermitian with real eigenvalues
    DenseMatrix m = to_dense(h);
    EXPECT_LT((m - m.adjoint()).norm(), 1e-12);
  }
}

TEST(SpinParity, Examples) {
  std::vector<Spin> both_up{Spin::up, Spin::up};
  auto [u1, d1] = spin_sector_parity_signature(str("XX"), both_up);
  EXPECT_FALSE(u1);
  EXPECT_FALSE(d1);

  auto [u2, d2] = spin_sector_parity_signature(str("X"), {Spin::up});
  EXPECT_TRUE(u2);
  EXPECT_FALSE(d2);
}

TEST(SpinParity, DenseOccupationOracle) {
  // Y1 X3 with qubits 1 up, 2 up, 3 down: apply to |000>, check parities
  PauliString p = str("YIX");
  std::vector<Spin> part{Spin::up, Spin::up, Spin::down};
  auto [up_flip, down_flip] = spin_sector_parity_signature(p, part);
  EXPECT_TRUE(up_flip);
  EXPECT_TRUE(down_flip);

  DenseMatrix m = kron_string(p);
  // the image of |000> is a single basis state; find it
  Eigen::Index hit = -1;
  for (Eigen::Index rr = 0; rr < m.rows(); ++rr)
    if (std::abs(m(rr, 0)) > 0.5) hit = rr;
  ASSERT_GE(hit, 0);
  int up_occ = 0, down_occ = 0;
  for (int q = 0; q < 3; ++q)
    if ((hit >> q) & 1) (part[q] == Spin::up ? up_occ : down_occ)++;
  EXPECT_EQ(up_occ % 2 == 1, up_flip);
  EXPECT_EQ(down_occ % 2 == 1, down_flip);
}

TEST(SpinParity, PartitionMustCoverAllQubits) {
  EXPECT_THROW(spin_sector_parity_signature(str("XX"), {Spin::up}), std::invalid_argument);
}

TEST(PauliSum, MergesDuplicatesAndDropsZeros) {
  PauliSum h(2);
  h.add(0.5, str("XZ"));
  h.add(0.25, str("XZ"));
  EXPECT_EQ(h.term_count(), 1u);
  EXPECT_NEAR(h.coefficient_of(str("XZ").letters), 0.75, 1e-15);
  h.add(-0.75, str("XZ"));
  EXPECT_EQ(h.term_count(), 0u);
}

TEST(PauliSum, SignFlipNormalization) {
  PauliSum h(1);
  h.add(-0.4, str("X"));
  ASSERT_EQ(h.term_count(), 1u);
  EXPECT_NEAR(h.terms()[0].coefficient, 0.4, 1e-15);
  EXPECT_EQ(h.terms()[0].string.sign, -1);
  EXPECT_NEAR(h.one_norm(), 0.4, 1e-15);
}

TEST(PauliSum, OneNormInvariantUnderReorderingAndSigns) {
  std::mt19937_64 rng(5);
  PauliSum h = testutil::random_hamiltonian(4, 8, 1.0, 42);
  double norm = h.one_norm();
  // re-add in reverse order with flipped sign conventions
  PauliSum g(4);
  auto terms = h.terms();
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
    PauliString flipped = it->string;
    flipped.sign = -flipped.sign;
    g.add(-it->coefficient, flipped);
  }
  EXPECT_NEAR(g.one_norm(), norm, 1e-13);
  for (const auto& t : h.terms())
    EXPECT_NEAR(g.coefficient_of(t.string.letters), t.signed_coefficient(), 1e-14);
}

TEST(PauliText, RoundTripLossless) {
  PauliSum h = testutil::random_hamiltonian(4, 9, 1.0, 77);
  h.add(1.0 / 3.0, str("IIII"));
  std::string text = to_text(h);
  PauliSum back = parse_pauli_sum(text);
  EXPECT_EQ(back.term_count(), h.term_count());
  for (const auto& t : h.terms())
    EXPECT_EQ(back.coefficient_of(t.string.letters), t.signed_coefficient());
  EXPECT_EQ(to_text(back), text);
}

TEST(PauliText, CommentsAndErrors) {
  PauliSum h = parse_pauli_sum("# comment\n0.25 XX\n\n-0.5 ZZ # trailing\n");
  EXPECT_EQ(h.term_count(), 2u);
  EXPECT_NEAR(h.coefficient_of(str("ZZ").letters), -0.5, 1e-15);
  EXPECT_THROW(parse_pauli_sum("0.5 XX\n0.5 XXX\n"), std::runtime_error);
  EXPECT_THROW(parse_pauli_sum("0.5\n"), std::runtime_error);
}
