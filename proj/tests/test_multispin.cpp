#include <catch2/catch.hpp>

#include <random>

#include "spinsim/multispin.hpp"

using namespace spinsim;

namespace {
const PhysicalConstants kC;

Eigen::MatrixXcd random_hermitian(std::mt19937& rng, int n) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXcd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(u(rng), u(rng));
  return 0.5 * (m + m.adjoint().eval());
}

std::vector<double> sorted_eigs(const Eigen::MatrixXcd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(m, Eigen::EigenvaluesOnly);
  std::vector<double> out(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(out.begin(), out.end());
  return out;
}
}  // namespace

TEST_CASE("kronecker_sum", "[multispin]") {
  SECTION("diag operands: eigenvalues are all pairwise sums") {
    Eigen::MatrixXcd a = Eigen::Vector2cd(cplx(1, 0), cplx(-1, 0)).asDiagonal();
    Eigen::MatrixXcd b = Eigen::Vector2cd(cplx(2, 0), cplx(-2, 0)).asDiagonal();
    const auto eigs = sorted_eigs(kronecker_sum(a, b));
    const std::vector<double> want{-3.0, -1.0, 1.0, 3.0};
    for (int i = 0; i < 4; ++i) REQUIRE(eigs[i] == Approx(want[i]).margin(1e-12));
  }
  SECTION("summing with a 1x1 zero is the identity of the sum") {
    std::mt19937 rng(1);
    const Eigen::MatrixXcd a = random_hermitian(rng, 3);
    const Eigen::MatrixXcd z = Eigen::MatrixXcd::Zero(1, 1);
    REQUIRE((kronecker_sum(a, z) - a).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("dimension law") {
    std::mt19937 rng(2);
    const auto s = kronecker_sum(random_hermitian(rng, 3), random_hermitian(rng, 5));
    REQUIRE(s.rows() == 15);
    REQUIRE(s.cols() == 15);
  }
  SECTION("two identical static spins") {
    const auto h = hamiltonian_static(FieldConfig(2.0, 0, 0, 0), kC);
    const auto eigs = sorted_eigs(kronecker_sum(h.m, h.m));
    const double e = kC.gamma_proton * kC.hbar * 2.0;  // gamma hbar B0
    REQUIRE(eigs[0] == Approx(-e).epsilon(1e-12));
    REQUIRE(eigs[1] == Approx(0.0).margin(1e-12 * e));
    REQUIRE(eigs[2] == Approx(0.0).margin(1e-12 * e));
    REQUIRE(eigs[3] == Approx(e).epsilon(1e-12));
  }
  SECTION("non-square operands rejected") {
    Eigen::MatrixXcd rect = Eigen::MatrixXcd::Zero(2, 3);
    REQUIRE_THROWS_AS(kronecker_sum(rect, rect), NonSquare);
  }
  SECTION("additivity for random hermitian operands up to 8x8") {
    std::mt19937 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const int na = 2 + trial % 3, nb = 2 + (trial / 3) % 3;
      const Eigen::MatrixXcd a = random_hermitian(rng, na);
      const Eigen::MatrixXcd b = random_hermitian(rng, nb);
      const auto sum_eigs = sorted_eigs(kronecker_sum(a, b));
      std::vector<double> pairwise;
      for (double ea : sorted_eigs(a))
        for (double eb : sorted_eigs(b)) pairwise.push_back(ea + eb);
      std::sort(pairwise.begin(), pairwise.end());
      const double scale = std::max(1.0, kronecker_sum(a, b).norm());
      for (std::size_t i = 0; i < pairwise.size(); ++i)
        REQUIRE(std::abs(sum_eigs[i] - pairwise[i]) < 1e-10 * scale);
    }
  }
}

TEST_CASE("n_spin_hamiltonian", "[multispin]") {
  SECTION("single spin is unchanged") {
    const auto h = hamiltonian_static(FieldConfig(1.0, 0, 0, 0), kC);
    const auto big = n_spin_hamiltonian({h});
    REQUIRE(big.n == 1);
    REQUIRE((big.m - h.m).cwiseAbs().maxCoeff() == 0.0);
  }
  SECTION("three identical static spins: +-3e once, +-e three times") {
    const auto h = hamiltonian_static(FieldConfig(1.0, 0, 0, 0), kC);
    const auto big = n_spin_hamiltonian({h, h, h});
    REQUIRE(big.m.rows() == 8);
    const double e = 0.5 * kC.gamma_proton * kC.hbar;
    auto eigs = big.eigenvalues();
    std::vector<double> want{-3 * e, -e, -e, -e, e, e, e, 3 * e};
    for (int i = 0; i < 8; ++i) REQUIRE(eigs(i) == Approx(want[i]).epsilon(1e-10));
  }
  SECTION("heterogeneous pair has four distinct pairwise-sum eigenvalues") {
    const auto ha = hamiltonian_static(FieldConfig(1.0, 0, 0, 0), kC);
    const auto hb = hamiltonian_static(FieldConfig(0.4, 0, 0, 0), kC);
    const auto big = n_spin_hamiltonian({ha, hb});
    const double ea = 0.5 * kC.gamma_proton * kC.hbar;
    const double eb = 0.4 * ea;
    auto eigs = big.eigenvalues();
    std::vector<double> want{-ea - eb, -ea + eb, ea - eb, ea + eb};
    for (int i = 0; i < 4; ++i) REQUIRE(eigs(i) == Approx(want[i]).epsilon(1e-10));
  }
  SECTION("empty list rejected") {
    REQUIRE_THROWS_AS(n_spin_hamiltonian({}), EmptyList);
  }
  SECTION("spin cap enforced") {
    const auto h = hamiltonian_static(FieldConfig(1.0, 0, 0, 0), kC);
    REQUIRE_THROWS_AS(n_spin_hamiltonian(std::vector<Hamiltonian2>(13, h)), Error);
  }
}

TEST_CASE("product_state_evolution", "[multispin]") {
  std::mt19937 rng(5);
  std::uniform_real_distribution<double> radius(0.1, 1.0), angle(-M_PI, M_PI), tm(0.1, 2.0);
  auto rand_state = [&] { return make_spinor(radius(rng), angle(rng), radius(rng), angle(rng)); };

  SECTION("single spin reduces to direct application") {
    const Spinor s = rand_state();
    const auto p = free_evolution(2.0, 0.7);
    const Eigen::VectorXcd out = product_state_evolution({s}, {p});
    const Spinor direct = p * s;
    REQUIRE(std::abs(out(0) - direct.x2) < 1e-15);
    REQUIRE(std::abs(out(1) - direct.x1) < 1e-15);
  }
  SECTION("identity propagators give the plain tensor product") {
    const Spinor a = rand_state(), b = rand_state();
    const Eigen::VectorXcd out =
        product_state_evolution({a, b}, {Propagator::identity(), Propagator::identity()});
    REQUIRE(std::abs(out(0) - a.x2 * b.x2) < 1e-15);
    REQUIRE(std::abs(out(1) - a.x2 * b.x1) < 1e-15);
    REQUIRE(std::abs(out(2) - a.x1 * b.x2) < 1e-15);
    REQUIRE(std::abs(out(3) - a.x1 * b.x1) < 1e-15);
  }
  SECTION("three random static spins match the full-space exponential") {
    std::uniform_real_distribution<double> field(0.1, 3.0);
    for (int trial = 0; trial < 20; ++trial) {
      const double t = tm(rng);
      std::vector<Hamiltonian2> hs;
      std::vector<Spinor> states;
      std::vector<Propagator> props;
      Eigen::VectorXcd joint = Eigen::VectorXcd::Ones(1);
      for (int i = 0; i < 3; ++i) {
        const FieldConfig fc(field(rng) / kC.gamma_proton, 0, 0, 0);
        hs.push_back(hamiltonian_static(fc, kC));
        states.push_back(rand_state());
        props.push_back(free_evolution(fc.omega0(kC), t));
        Eigen::VectorXcd grown(joint.size() * 2);
        for (Eigen::Index q = 0; q < joint.size(); ++q) {
          grown(2 * q) = joint(q) * states.back().x2;
          grown(2 * q + 1) = joint(q) * states.back().x1;
        }
        joint.swap(grown);
      }
      const Eigen::VectorXcd fast = product_state_evolution(states, props);
      const Eigen::VectorXcd slow = full_space_propagator(n_spin_hamiltonian(hs), t, kC) * joint;
      REQUIRE((fast - slow).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
  SECTION("length mismatch rejected") {
    REQUIRE_THROWS_AS(product_state_evolution({Spinor{}}, {}), LengthMismatch);
  }
  SECTION("empty lists rejected") {
    REQUIRE_THROWS_AS(product_state_evolution({}, {}), EmptyList);
  }
}
