#pragma once

#include <numbers>

namespace eptrecon {

inline constexpr double kMu0 = 4.0 * std::numbers::pi * 1e-7;  // H/m
inline constexpr double kEpsFree = 8.85e-12;                   // F/m
inline constexpr double kLarmor3T = 128e6;                     // Hz
inline constexpr double kDefaultOmega = 2.0 * std::numbers::pi * kLarmor3T;

// Physical constants threaded through the solvers. Everything is SI.
struct Physics {
  double omega = kDefaultOmega;
  double mu0 = kMu0;
  double eps_free = kEpsFree;

  double omega_mu0() const { return omega * mu0; }
};

}  // namespace eptrecon
