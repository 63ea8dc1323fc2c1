#pragma once

namespace spinsim {

/// SI constants for the proton system. All values CODATA-2018.
struct PhysicalConstants {
  double hbar = 1.054571817e-34;          // J s
  double proton_mass = 1.67262192e-27;    // kg
  double gamma_proton = 2.6752218744e8;   // rad s^-1 T^-1
};

/// Kinetic-energy scalar K' = hbar^2 / (2 m) used by the spin-noise estimate.
inline double proton_kinetic_kprime(const PhysicalConstants& c = {}) {
  return c.hbar * c.hbar / (2.0 * c.proton_mass);
}

}  // namespace spinsim
