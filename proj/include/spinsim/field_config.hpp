#pragma once

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"

namespace spinsim {

/// Magnetic-field environment of one spin. b0 is the static field along Oz;
/// bx, by and bz_offset describe additional components relative to b0.
/// Angular frequencies derived from fields keep the signed convention
/// omega = -gamma * B throughout (gamma > 0 for protons, so omega0 < 0).
struct FieldConfig {
  double b0 = 0.0;         // T, static field along Oz
  double b1 = 0.0;         // T, RF amplitude (0 if absent)
  double omega_rf = 0.0;   // rad/s, RF carrier angular velocity
  double kprime = 0.0;     // J, scalar kinetic energy K'
  double bx = 0.0;         // T
  double by = 0.0;         // T
  double bz_offset = 0.0;  // T, z component relative to b0

  FieldConfig() = default;
  FieldConfig(double b0_, double b1_, double omega_rf_, double kprime_,
              double bx_ = 0.0, double by_ = 0.0, double bz_offset_ = 0.0)
      : b0(b0_), b1(b1_), omega_rf(omega_rf_), kprime(kprime_),
        bx(bx_), by(by_), bz_offset(bz_offset_) {
    if (b0 < 0.0) throw Error("b0 must be non-negative");
    if (b1 < 0.0) throw Error("b1 must be non-negative");
    if (kprime < 0.0) throw Error("kprime must be non-negative");
  }

  double omega0(const PhysicalConstants& c) const { return -c.gamma_proton * b0; }
  double omega1_rf(const PhysicalConstants& c) const { return -c.gamma_proton * b1; }
  double omega_x(const PhysicalConstants& c) const { return -c.gamma_proton * bx; }
  double omega_y(const PhysicalConstants& c) const { return -c.gamma_proton * by; }
  double omega_z(const PhysicalConstants& c) const { return -c.gamma_proton * bz_offset; }

  /// Kinetic coupling rate K = 2 K' / hbar.
  double kinetic_rate(const PhysicalConstants& c) const { return 2.0 * kprime / c.hbar; }
};

}  // namespace spinsim
