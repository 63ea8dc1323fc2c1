#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <complex>

#include "spinsim/errors.hpp"

namespace spinsim {

using cplx = std::complex<double>;

/// Normalized two-level state. Component order is fixed: x2 (excited, top row
/// of the column vector) first, x1 (ground, bottom row) second. Index 1 is the
/// low-energy level.
struct Spinor {
  cplx x2{0.0, 0.0};
  cplx x1{1.0, 0.0};

  double norm() const { return std::sqrt(std::norm(x1) + std::norm(x2)); }

  Eigen::Vector2cd vec() const { return {x2, x1}; }
  static Spinor from_vec(const Eigen::Vector2cd& v) { return {v(0), v(1)}; }
};

/// Builds the state r2 e^{i phi2}|excited> + r1 e^{i phi1}|ground>, rescaled to
/// unit norm. The radii may carry any common positive scale.
inline Spinor make_spinor(double r1, double phi1, double r2, double phi2) {
  if (r1 < 0.0 || r2 < 0.0) throw Error("spinor radii must be non-negative");
  const double mag = std::sqrt(r1 * r1 + r2 * r2);
  if (mag == 0.0) throw ZeroState();
  return {std::polar(r2 / mag, phi2), std::polar(r1 / mag, phi1)};
}

inline double distance(const Spinor& a, const Spinor& b) {
  return std::sqrt(std::norm(a.x2 - b.x2) + std::norm(a.x1 - b.x1));
}

}  // namespace spinsim
