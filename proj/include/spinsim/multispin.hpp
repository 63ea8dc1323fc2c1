#pragma once

#include <Eigen/Dense>
#include <vector>

#include "spinsim/errors.hpp"
#include "spinsim/hamiltonian.hpp"
#include "spinsim/propagator.hpp"
#include "spinsim/spinor.hpp"

namespace spinsim {

constexpr int kMaxSpins = 12;  // dense 4096x4096 is the desk-scale ceiling

/// Composite Hamiltonian of n non-interacting spins, dimension 2^n.
struct MultiSpinHamiltonian {
  int n = 0;
  Eigen::MatrixXcd m;

  /// Ascending real spectrum via Hermitian eigendecomposition.
  Eigen::VectorXd eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(m, Eigen::EigenvaluesOnly).eigenvalues();
  }
};

inline Eigen::MatrixXcd kronecker_product(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Kronecker sum  A (+) B = A x I_n + I_m x B.  Its spectrum is the set of
/// pairwise sums of the operand spectra, which is what makes it the right
/// composition for energies of independent subsystems.
inline Eigen::MatrixXcd kronecker_sum(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
  if (a.rows() != a.cols() || b.rows() != b.cols()) throw NonSquare();
  const Eigen::MatrixXcd ia = Eigen::MatrixXcd::Identity(a.rows(), a.rows());
  const Eigen::MatrixXcd ib = Eigen::MatrixXcd::Identity(b.rows(), b.rows());
  return kronecker_product(a, ib) + kronecker_product(ia, b);
}

/// Left fold of kronecker_sum over per-spin Hamiltonians. The fold order is
/// fixed left-to-right; different orders agree on the spectrum but not
/// entry-wise.
inline MultiSpinHamiltonian n_spin_hamiltonian(const std::vector<Hamiltonian2>& hs) {
  if (hs.empty()) throw EmptyList();
  if (hs.size() > static_cast<std::size_t>(kMaxSpins))
    throw Error("spin count exceeds the dense-matrix cap");
  Eigen::MatrixXcd acc = hs.front().m;
  for (std::size_t i = 1; i < hs.size(); ++i) acc = kronecker_sum(acc, hs[i].m);
  return {static_cast<int>(hs.size()), std::move(acc)};
}

/// Tensor product of independently propagated spinors: the full 2^n state of
/// non-interacting spins.
inline Eigen::VectorXcd product_state_evolution(const std::vector<Spinor>& states,
                                                const std::vector<Propagator>& propagators) {
  if (states.size() != propagators.size()) throw LengthMismatch();
  if (states.empty()) throw EmptyList();
  if (states.size() > static_cast<std::size_t>(kMaxSpins))
    throw Error("spin count exceeds the dense-matrix cap");
  Eigen::VectorXcd acc = (propagators[0] * states[0]).vec();
  for (std::size_t i = 1; i < states.size(); ++i) {
    const Eigen::Vector2cd next = (propagators[i] * states[i]).vec();
    Eigen::VectorXcd grown(acc.size() * 2);
    for (Eigen::Index j = 0; j < acc.size(); ++j) {
      grown(2 * j) = acc(j) * next(0);
      grown(2 * j + 1) = acc(j) * next(1);
    }
    acc.swap(grown);
  }
  return acc;
}

/// exp(-i H t / hbar) on the full 2^n space, via eigendecomposition. Used to
/// cross-check product_state_evolution against the composite Hamiltonian.
inline Eigen::MatrixXcd full_space_propagator(const MultiSpinHamiltonian& h, double t,
                                              const PhysicalConstants& c = {}) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h.m);
  const Eigen::VectorXd& ev = es.eigenvalues();
  Eigen::VectorXcd phases(ev.size());
  for (Eigen::Index i = 0; i < ev.size(); ++i) phases(i) = std::polar(1.0, -ev(i) * t / c.hbar);
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

}  // namespace spinsim
