#include <gtest/gtest.h>

#include <bit>
#include <sstream>

#include "qasp/chem.hpp"
#include "qasp/dense.hpp"
#include "test_util.hpp"

using namespace qasp;
using testutil::dense_fermionic_hamiltonian;

namespace {

MolecularIntegrals h2_integrals() {
  return parse_fcidump(testutil::read_file(testutil::fixture_path("h2_sto3g.fcidump")));
}

std::vector<double> sector_eigenvalues(const DenseMatrix& h, std::size_t qubits, int electrons) {
  std::vector<std::size_t> basis;
  for (std::size_t b = 0; b < (std::size_t{1} << qubits); ++b)
    if (std::popcount(b) == static_cast<unsigned>(electrons)) basis.push_back(b);
  DenseMatrix sub(basis.size(), basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i)
    for (std::size_t j = 0; j < basis.size(); ++j) sub(i, j) = h(basis[i], basis[j]);
  Eigen::SelfAdjointEigenSolver<DenseMatrix> es(sub);
  return {es.eigenvalues().data(), es.eigenvalues().data() + basis.size()};
}

}  // namespace

TEST(Fcidump, SingleRecordExpandsToBothSpins) {
  MolecularIntegrals ints = parse_fcidump("&FCI NORB=2,NELEC=2,MS2=0,\n&END\n1.0 1 1 0 0\n");
  ASSERT_EQ(ints.orbital_count, 4u);
  EXPECT_EQ(ints.electron_count, 2);
  EXPECT_NEAR(ints.one_body(0, 0), 1.0, 1e-15);
  EXPECT_NEAR(ints.one_body(1, 1), 1.0, 1e-15);
  EXPECT_NEAR(ints.one_body(2, 2), 0.0, 1e-15);
  double sum = 0;
  for (double v : ints.h1) sum += std::abs(v);
  for (double v : ints.h2) sum += std::abs(v);
  EXPECT_NEAR(sum, 2.0, 1e-15);
}

TEST(Fcidump, EmptyBodyGivesZeroTensors) {
  MolecularIntegrals ints = parse_fcidump("&FCI NORB=1,NELEC=0,MS2=0 &END\n");
  EXPECT_EQ(ints.orbital_count, 2u);
  EXPECT_EQ(ints.core_energy, 0.0);
  for (double v : ints.h1) EXPECT_EQ(v, 0.0);
  for (double v : ints.h2) EXPECT_EQ(v, 0.0);
}

TEST(Fcidump, EightFoldSymmetryAgainstBruteForceOracle) {
  // independent expansion: spatial tensors built by explicit permutation loops
  std::string text = testutil::read_file(testutil::fixture_path("h2_sto3g.fcidump"));
  MolecularIntegrals ints = parse_fcidump(text);

  struct Rec { double v; int i, j, k, l; };
  std::vector<Rec> recs;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    Rec r;
    if (ls >> r.v >> r.i >> r.j >> r.k >> r.l) recs.push_back(r);
  }
  ASSERT_FALSE(recs.empty());

  const int n_spatial = 2;
  std::vector<double> eri(16, 0.0);
  auto at = [&](int i, int j, int k, int l) -> double& {
    return eri[(((i - 1) * n_spatial + (j - 1)) * n_spatial + (k - 1)) * n_spatial + (l - 1)];
  };
  for (const Rec& r : recs) {
    if (r.i == 0 || r.k == 0) continue;  // core / one-electron records
    at(r.i, r.j, r.k, r.l) = r.v;
    at(r.j, r.i, r.k, r.l) = r.v;
    at(r.i, r.j, r.l, r.k) = r.v;
    at(r.j, r.i, r.l, r.k) = r.v;
    at(r.k, r.l, r.i, r.j) = r.v;
    at(r.l, r.k, r.i, r.j) = r.v;
    at(r.k, r.l, r.j, r.i) = r.v;
    at(r.l, r.k, r.j, r.i) = r.v;
  }
  for (int i = 1; i <= n_spatial; ++i)
    for (int j = 1; j <= n_spatial; ++j)
      for (int k = 1; k <= n_spatial; ++k)
        for (int l = 1; l <= n_spatial; ++l)
          for (int sigma = 0; sigma < 2; ++sigma)
            for (int tau = 0; tau < 2; ++tau)
              EXPECT_NEAR(ints.two_body(2 * (i - 1) + sigma, 2 * (k - 1) + tau,
                                        2 * (l - 1) + tau, 2 * (j - 1) + sigma),
                          0.5 * at(i, j, k, l), 1e-14);
}

TEST(Fcidump, Errors) {
  EXPECT_THROW(parse_fcidump("NORB=2\n/\n"), std::runtime_error);          // no &FCI
  EXPECT_THROW(parse_fcidump("&FCI NELEC=2 &END\n"), std::runtime_error);  // no NORB
  EXPECT_THROW(parse_fcidump("&FCI NORB=2 &END\n1.0 3 1 0 0\n"), std::runtime_error);
  EXPECT_THROW(parse_fcidump("&FCI NORB=2 &END\n1.0 1 1 0 0\n2.0 1 1 0 0\n"),
               std::runtime_error);  // conflicting duplicates
  EXPECT_NO_THROW(parse_fcidump("&FCI NORB=2 &END\n1.0 1 1 0 0\n1.0 1 1 0 0\n"));
  EXPECT_THROW(parse_fcidump("&FCI NORB=2 &END\nnot_a_number 1 1 0 0\n"), std::runtime_error);
}

TEST(JordanWigner, NumberOperatorOneMode) {
  MolecularIntegrals ints(1);
  ints.one_body(0, 0) = 1.0;
  PauliSum h = jordan_wigner(ints);
  EXPECT_NEAR(h.coefficient_of({Pauli::I}), 0.5, 1e-14);
  EXPECT_NEAR(h.coefficient_of({Pauli::Z}), -0.5, 1e-14);
  EXPECT_EQ(h.term_count(), 2u);
  EXPECT_LT((to_dense(h) - dense_fermionic_hamiltonian(ints)).norm(), 1e-13);
}

TEST(JordanWigner, HoppingTwoModes) {
  MolecularIntegrals ints(2);
  ints.one_body(0, 1) = 1.0;
  ints.one_body(1, 0) = 1.0;
  PauliSum h = jordan_wigner(ints);
  EXPECT_NEAR(h.coefficient_of({Pauli::X, Pauli::X}), 0.5, 1e-14);
  EXPECT_NEAR(h.coefficient_of({Pauli::Y, Pauli::Y}), 0.5, 1e-14);
  EXPECT_EQ(h.term_count(), 2u);
  EXPECT_LT((to_dense(h) - dense_fermionic_hamiltonian(ints)).norm(), 1e-12);
}

TEST(JordanWigner, ZeroTensorsLeaveOnlyCoreEnergy) {
  MolecularIntegrals ints(2);
  ints.core_energy = 0.25;
  PauliSum h = jordan_wigner(ints);
  ASSERT_EQ(h.term_count(), 1u);
  EXPECT_NEAR(h.coefficient_of({Pauli::I, Pauli::I}), 0.25, 1e-15);
}

TEST(JordanWigner, MatchesDenseFermionicOracleOnH2) {
  MolecularIntegrals ints = h2_integrals();
  PauliSum h = jordan_wigner(ints);
  EXPECT_LT((to_dense(h) - dense_fermionic_hamiltonian(ints)).norm(), 1e-12);
  EXPECT_NEAR(ground_energy(h), -1.137, 5e-3);
}

TEST(JordanWigner, RandomTwoModeIntegralsMatchOracle) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int it = 0; it < 10; ++it) {
    MolecularIntegrals ints(2);
    ints.one_body(0, 0) = u(rng);
    ints.one_body(1, 1) = u(rng);
    double off = u(rng);
    ints.one_body(0, 1) = off;
    ints.one_body(1, 0) = off;
    double w = u(rng);
    ints.two_body(0, 1, 1, 0) = w;
    ints.two_body(1, 0, 0, 1) = w;
    PauliSum h = jordan_wigner(ints);
    EXPECT_LT((to_dense(h) - dense_fermionic_hamiltonian(ints)).norm(), 1e-12);
  }
}

TEST(JordanWigner, LadderAnticommutation) {
  // {c_p, c+_q} = delta_pq, {c_p, c_q} = 0 as dense matrices, L <= 4
  for (std::size_t L = 1; L <= 4; ++L) {
    const std::size_t dim = std::size_t{1} << L;
    std::vector<DenseMatrix> a(L), ad(L);
    for (std::size_t p = 0; p < L; ++p) {
      DenseMatrix m = DenseMatrix::Zero(dim, dim);
      for (const auto& [letters, coeff] : detail::ladder_operator(L, p, false)) {
        PauliString s;
        s.letters = letters;
        m += coeff * testutil::kron_string(s);
      }
      a[p] = m;
      ad[p] = m.adjoint();
    }
    for (std::size_t p = 0; p < L; ++p)
      for (std::size_t q = 0; q < L; ++q) {
        DenseMatrix anti = a[p] * ad[q] + ad[q] * a[p];
        DenseMatrix expected =
            (p == q) ? DenseMatrix(DenseMatrix::Identity(dim, dim)) : DenseMatrix(DenseMatrix::Zero(dim, dim));
        EXPECT_LT((anti - expected).norm(), 1e-12);
        EXPECT_LT((a[p] * a[q] + a[q] * a[p]).norm(), 1e-12);
      }
  }
}

TEST(Split, RuleBoundaries) {
  PauliSum h(2);
  h.add(0.3, PauliString("ZI"));
  h.add(0.2, PauliString("XX"));
  HamiltonianModel m1 = split(h, BackgroundRule::z_weight_le_1);
  EXPECT_NEAR(m1.mu_B, 0.3, 1e-15);
  EXPECT_NEAR(m1.mu_I, 0.2, 1e-15);
  EXPECT_NEAR(m1.mu, 0.5, 1e-15);

  PauliSum zz(2);
  zz.add(0.3, PauliString("ZZ"));
  HamiltonianModel m2 = split(zz, BackgroundRule::z_weight_le_1);
  EXPECT_NEAR(m2.mu_I, 0.3, 1e-15);  // weight-2 Z string excluded from H_B
  EXPECT_NEAR(m2.mu_B, 0.0, 1e-15);
  HamiltonianModel m3 = split(zz, BackgroundRule::z_weight_le_2);
  EXPECT_NEAR(m3.mu_B, 0.3, 1e-15);
  EXPECT_NEAR(m3.mu_I, 0.0, 1e-15);
}

TEST(Split, ReconstructsTermwiseAndSeparatesConstant) {
  PauliSum h = jordan_wigner(h2_integrals());
  HamiltonianModel m = split(h, BackgroundRule::z_weight_le_1);
  PauliSum back = m.full();
  EXPECT_EQ(back.term_count(), h.term_count());
  for (const auto& t : h.terms())
    EXPECT_NEAR(back.coefficient_of(t.string.letters), t.signed_coefficient(), 1e-12);
  EXPECT_NEAR(m.mu, m.mu_B + m.mu_I, 1e-13);
  EXPECT_FALSE(m.background.contains(std::vector<Pauli>(4, Pauli::I)));
  EXPECT_FALSE(m.interaction.contains(std::vector<Pauli>(4, Pauli::I)));
  double weighted = 0;
  for (std::size_t n = 0; n < m.interaction.term_count(); ++n)
    weighted += m.interaction.terms()[n].coefficient * m.g_interaction[n];
  EXPECT_NEAR(m.g_avg, weighted / m.mu_I, 1e-13);
}

TEST(NormReduction, MedianExampleOnThreeQubits) {
  PauliSum h(3);
  h.add(0.1, PauliString("ZZI"));
  h.add(0.2, PauliString("ZIZ"));
  h.add(0.7, PauliString("IZZ"));
  h.add(0.5, PauliString("XXI"));
  auto [reduced, alpha] = reduce_norm_particle_number(h);
  EXPECT_NEAR(alpha, 0.4, 1e-13);
  double two_z_norm = std::abs(reduced.coefficient_of(PauliString("ZZI").letters)) +
                      std::abs(reduced.coefficient_of(PauliString("ZIZ").letters)) +
                      std::abs(reduced.coefficient_of(PauliString("IZZ").letters));
  EXPECT_NEAR(two_z_norm, 0.6, 1e-13);

  // grid-scan oracle: no alpha beats the median choice
  auto objective = [](double a) {
    return std::abs(0.1 - a / 2) + std::abs(0.2 - a / 2) + std::abs(0.7 - a / 2);
  };
  for (double a = -0.5; a <= 2.0; a += 0.01)
    EXPECT_GE(objective(a) + 1e-12, objective(alpha));
}

TEST(NormReduction, ConstantCoefficientsVanish) {
  PauliSum h(3);
  h.add(0.3, PauliString("ZZI"));
  h.add(0.3, PauliString("ZIZ"));
  h.add(0.3, PauliString("IZZ"));
  auto [reduced, alpha] = reduce_norm_particle_number(h);
  EXPECT_NEAR(alpha, 0.6, 1e-13);
  for (const auto& t : reduced.terms()) EXPECT_LT(t.string.z_weight(), 2);
}

TEST(NormReduction, NoTwoZStringsIsDegenerate) {
  PauliSum h(2);
  h.add(0.5, PauliString("XX"));
  auto [reduced, alpha] = reduce_norm_particle_number(h);
  EXPECT_EQ(alpha, 0.0);
  EXPECT_NEAR(reduced.coefficient_of(PauliString("XX").letters), 0.5, 1e-15);
}

TEST(NormReduction, SectorSpectraShiftExactly) {
  PauliSum h = jordan_wigner(h2_integrals());
  auto [reduced, alpha] = reduce_norm_particle_number(h);
  ASSERT_NE(alpha, 0.0);
  DenseMatrix dh = to_dense(h), dr = to_dense(reduced);
  for (int k = 0; k <= 4; ++k) {
    auto ev_h = sector_eigenvalues(dh, 4, k);
    auto ev_r = sector_eigenvalues(dr, 4, k);
    for (std::size_t i = 0; i < ev_h.size(); ++i)
      EXPECT_NEAR(ev_r[i], ev_h[i] - alpha * k * k, 1e-10);
  }
  double mu_before = split(h, BackgroundRule::z_weight_le_1).mu_I;
  double mu_after = split(reduced, BackgroundRule::z_weight_le_1).mu_I;
  EXPECT_LE(mu_after, mu_before + 1e-12);
}

TEST(InitialState, EnumerationOracleTwoQubits) {
  // H_B = -0.5 Z1 + 0.5 Z2 with one electron: occupying qubit 2 minimizes
  PauliSum h(2);
  h.add(-0.5, PauliString("ZI"));
  h.add(0.5, PauliString("IZ"));
  HamiltonianModel m = split(h, BackgroundRule::z_weight_le_1);
  InitialState ini = initial_state(m, 1);
  DenseMatrix d = to_dense(h);
  std::size_t expected = d(1, 1).real() < d(2, 2).real() ? 1 : 2;
  EXPECT_EQ(ini.basis_index, expected);
  EXPECT_EQ(ini.basis_index, 2u);
  EXPECT_NEAR(ini.background_energy, -1.0, 1e-14);
}

TEST(InitialState, TieBreaksToSmallestIndex) {
  PauliSum h(4);  // empty background
  HamiltonianModel m = split(h, BackgroundRule::z_weight_le_1);
  for (int k = 0; k <= 4; ++k) {
    InitialState ini = initial_state(m, k);
    EXPECT_EQ(ini.basis_index, (std::size_t{1} << k) - 1);
    if (k > 0 && k < 4) EXPECT_GT(ini.minimizer_count, 1u);
  }
}

TEST(InitialState, IdentityOnlyBackgroundSameTieBreak) {
  PauliSum h(3);
  h.add(0.7, PauliString("III"));
  HamiltonianModel m = split(h, BackgroundRule::z_weight_le_1);
  EXPECT_EQ(initial_state(m, 2).basis_index, 3u);
}

TEST(InitialState, GreedyMatchesEnumerationOnRandomFields) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int it = 0; it < 20; ++it) {
    PauliSum h(5);
    for (int q = 0; q < 5; ++q) {
      PauliString z(5);
      z.set(q, Pauli::Z);
      h.add(u(rng), z);
    }
    HamiltonianModel m = split(h, BackgroundRule::z_weight_le_1);
    DenseMatrix d = to_dense(h);
    for (int k = 0; k <= 5; ++k) {
      InitialState ini = initial_state(m, k);
      double best = 1e300;
      std::size_t best_b = 0;
      for (std::size_t b = 0; b < 32; ++b) {
        if (std::popcount(b) != static_cast<unsigned>(k)) continue;
        if (d(b, b).real() < best - 1e-12) {
          best = d(b, b).real();
          best_b = b;
        }
      }
      EXPECT_EQ(ini.basis_index, best_b);
    }
  }
}

TEST(ParityConservation, MolecularHamiltonianPassesCheck) {
  PauliSum h = jordan_wigner(h2_integrals());
  EXPECT_NO_THROW(verify_spin_parity_conservation(h));
  auto partition = interleaved_spin_partition(4);
  for (const auto& t : h.terms()) {
    auto [up, down] = spin_sector_parity_signature(t.string, partition);
    EXPECT_FALSE(up);
    EXPECT_FALSE(down);
  }
  PauliSum bad(2);
  bad.add(0.1, PauliString("XI"));
  EXPECT_THROW(verify_spin_parity_conservation(bad), std::runtime_error);
}

TEST(Metadata, SidecarCarriesTheContract) {
  PauliSum h = jordan_wigner(h2_integrals());
  auto [reduced, alpha] = reduce_norm_particle_number(h);
  HamiltonianModel m = split(reduced, BackgroundRule::z_weight_le_1);
  std::ostringstream os;
  write_model_metadata(os, m, 2, alpha);
  std::string text = os.str();
  EXPECT_NE(text.find("qubits 4"), std::string::npos);
  EXPECT_NE(text.find("electrons 2"), std::string::npos);
  EXPECT_NE(text.find("ordering interleaved_up_down"), std::string::npos);
  EXPECT_NE(text.find("alpha "), std::string::npos);
}
