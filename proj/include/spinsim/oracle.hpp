#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <ostream>
#include <vector>

#include "spinsim/constants.hpp"
#include "spinsim/errors.hpp"
#include "spinsim/hamiltonian.hpp"
#include "spinsim/spinor.hpp"

// Ground-truth integrator for the time-dependent two-level Schroedinger
// equation. Kept independent of the closed-form propagators on purpose: this
// header must not include propagator.hpp.

namespace spinsim {

using HamiltonianFunction = std::function<Hamiltonian2(double)>;

struct Trajectory {
  std::vector<double> times;
  std::vector<Spinor> states;

  std::size_t size() const { return times.size(); }
};

namespace oracle_detail {

inline Eigen::Vector2cd rhs(const HamiltonianFunction& h, double t,
                            const Eigen::Vector2cd& x, double hbar, double dt) {
  const Hamiltonian2 ham = h(t);
  if (!ham.is_hermitian(1e-12)) throw NonHermitianSample();
  const double hnorm = ham.m.norm();  // Frobenius
  if (dt * hnorm / hbar > 0.1) throw StepTooLarge();
  return cplx(0.0, -1.0 / hbar) * (ham.m * x);
}

}  // namespace oracle_detail

/// Classical fixed-step RK4 on  dx/dt = -(i/hbar) H(t) x.  No renormalization
/// is applied along the way, so the norm drift stays visible as a diagnostic.
inline Trajectory integrate(const HamiltonianFunction& h, const Spinor& x0, double t_end,
                            double dt, const PhysicalConstants& c = {}) {
  if (dt <= 0.0 || dt > t_end) throw Error("require 0 < dt <= t_end");
  const double hbar = c.hbar;
  Trajectory traj;
  const auto n_steps = static_cast<std::size_t>(std::llround(t_end / dt));
  traj.times.reserve(n_steps + 1);
  traj.states.reserve(n_steps + 1);

  Eigen::Vector2cd x = x0.vec();
  double t = 0.0;
  traj.times.push_back(t);
  traj.states.push_back(x0);
  for (std::size_t i = 0; i < n_steps; ++i) {
    const Eigen::Vector2cd k1 = oracle_detail::rhs(h, t, x, hbar, dt);
    const Eigen::Vector2cd k2 = oracle_detail::rhs(h, t + 0.5 * dt, x + 0.5 * dt * k1, hbar, dt);
    const Eigen::Vector2cd k3 = oracle_detail::rhs(h, t + 0.5 * dt, x + 0.5 * dt * k2, hbar, dt);
    const Eigen::Vector2cd k4 = oracle_detail::rhs(h, t + dt, x + dt * k3, hbar, dt);
    x += (dt / 6.0) * (k1 + 2.0 * (k2 + k3) + k4);
    t = static_cast<double>(i + 1) * dt;
    traj.times.push_back(t);
    traj.states.push_back(Spinor::from_vec(x));
  }
  return traj;
}

/// Step chosen as 1/1000 of the shortest period among the supplied angular
/// rates (zero rates are ignored).
inline double default_step(std::initializer_list<double> rates, double divisions = 1000.0) {
  double wmax = 0.0;
  for (double w : rates) wmax = std::max(wmax, std::abs(w));
  if (wmax == 0.0) throw Error("default_step needs at least one nonzero rate");
  return (2.0 * M_PI / wmax) / divisions;
}

/// Largest pointwise 2-norm gap between the trajectory and a closed form,
/// optionally after removing the best-fit global phase.
inline double max_deviation(const Trajectory& traj, const std::function<Spinor(double)>& closed_form,
                            bool phase_align = false) {
  std::vector<Spinor> ref(traj.size());
  for (std::size_t i = 0; i < traj.size(); ++i) ref[i] = closed_form(traj.times[i]);

  cplx phase(1.0, 0.0);
  if (phase_align) {
    cplx overlap(0.0, 0.0);
    for (std::size_t i = 0; i < traj.size(); ++i) {
      overlap += std::conj(ref[i].x2) * traj.states[i].x2 + std::conj(ref[i].x1) * traj.states[i].x1;
    }
    if (std::abs(overlap) > 0.0) phase = overlap / std::abs(overlap);
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const cplx d2 = traj.states[i].x2 - phase * ref[i].x2;
    const cplx d1 = traj.states[i].x1 - phase * ref[i].x1;
    worst = std::max(worst, std::sqrt(std::norm(d2) + std::norm(d1)));
  }
  return worst;
}

/// Worst |norm - 1| along the trajectory.
inline double max_norm_drift(const Trajectory& traj) {
  double worst = 0.0;
  for (const Spinor& s : traj.states) worst = std::max(worst, std::abs(s.norm() - 1.0));
  return worst;
}

/// CSV export, one row per sample: t, re_x2, im_x2, re_x1, im_x1, norm.
inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                                 const std::string& header_comment = {}) {
  if (!header_comment.empty()) os << "# " << header_comment << "\n";
  os << "t,re_x2,im_x2,re_x1,im_x1,norm\n";
  char buf[256];
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const Spinor& s = traj.states[i];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", traj.times[i],
                  s.x2.real(), s.x2.imag(), s.x1.real(), s.x1.imag(), s.norm());
    os << buf;
  }
}

}  // namespace spinsim
