#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/field_config.hpp"
#include "spinsim/spinor.hpp"

namespace spinsim {

/// 2x2 Hermitian single-spin Hamiltonian, entries in joule.
struct Hamiltonian2 {
  Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();

  bool is_hermitian(double rel_tol = 1e-15) const {
    const double scale = std::max(m.cwiseAbs().maxCoeff(), 1e-300);
    return (m - m.adjoint()).cwiseAbs().maxCoeff() <= rel_tol * scale;
  }
};

/// Zeeman term for the static field: -1/2 gamma hbar diag(B0, -B0), written as
/// hbar/2 diag(w0, -w0) so the kinetic and general builders reduce to it
/// bit-exactly. Eigenvalues are -/+ gamma hbar B0 / 2, excited row on top.
inline Hamiltonian2 hamiltonian_static(const FieldConfig& fc, const PhysicalConstants& c = {}) {
  Hamiltonian2 h;
  const double f = 0.5 * c.hbar;
  const double w0 = fc.omega0(c);
  h.m << cplx(f * w0, 0.0), cplx(0.0, 0.0),
         cplx(0.0, 0.0), cplx(f * -w0, 0.0);
  return h;
}

/// Zeeman term plus a transverse field of amplitude b1 rotating at omega_rf:
/// hbar/2 [[w0, w1 e^{-i w t}], [w1 e^{+i w t}, -w0]].
inline Hamiltonian2 hamiltonian_rf(const FieldConfig& fc, double t, const PhysicalConstants& c = {}) {
  if (fc.b1 <= 0.0) throw NoRFField();
  Hamiltonian2 h;
  const double f = 0.5 * c.hbar;
  const cplx off = f * fc.omega1_rf(c) * std::polar(1.0, -fc.omega_rf * t);
  h.m << cplx(f * fc.omega0(c), 0.0), off,
         std::conj(off), cplx(f * -fc.omega0(c), 0.0);
  return h;
}

/// Static Zeeman term completed by the scalar kinetic energy K', which enters
/// every entry: H = K' * ones(2) - mu.B0 = hbar/2 [[w0+K, K], [K, -w0+K]].
inline Hamiltonian2 hamiltonian_kinetic(const FieldConfig& fc, const PhysicalConstants& c = {}) {
  Hamiltonian2 h;
  const double w0 = fc.omega0(c);
  const double k = fc.kinetic_rate(c);
  const double f = 0.5 * c.hbar;
  h.m << cplx(f * (w0 + k), 0.0), cplx(f * k, 0.0),
         cplx(f * k, 0.0), cplx(f * (-w0 + k), 0.0);
  return h;
}

/// Full constant-field Hamiltonian with transverse components and kinetic
/// scalar: hbar/2 [[W+K, wx-i wy+K], [wx+i wy+K, -W+K]] where W is the total
/// z frequency -gamma (b0 + bz_offset). Reduces to hamiltonian_kinetic when
/// bx = by = bz_offset = 0 and to hamiltonian_static when K' = 0 as well.
inline Hamiltonian2 hamiltonian_general(const FieldConfig& fc, const PhysicalConstants& c = {}) {
  Hamiltonian2 h;
  const double w_total = -c.gamma_proton * (fc.b0 + fc.bz_offset);
  const double wx = fc.omega_x(c);
  const double wy = fc.omega_y(c);
  const double k = fc.kinetic_rate(c);
  const double f = 0.5 * c.hbar;
  const cplx off = f * cplx(wx + k, -wy);
  h.m << cplx(f * (w_total + k), 0.0), off,
         std::conj(off), cplx(f * (-w_total + k), 0.0);
  return h;
}

}  // namespace spinsim
