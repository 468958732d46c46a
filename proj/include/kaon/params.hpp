// Copyright 2026 The kaon-lindblad Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "kaon/errors.hpp"

namespace kaon {

using Complex = std::complex<double>;

// Units: time in ns, rates and mass difference in 1/ns (hbar = 1).
namespace pdg {
inline constexpr double kTauShortNs = 0.08954;
inline constexpr double kTauLongNs = 51.16;
inline constexpr double kDeltaMassPerNs = 5.293;
inline constexpr double kAsymmetry = 0.00332;
inline constexpr double kMeanMassMeV = 497.614;
}  // namespace pdg

/// Physical constants of a neutral meson pair plus the derived decay widths
/// and K_S/K_L mixing amplitudes.
///
/// Construct through pdg_defaults() or from_raw(); the derived fields are
/// filled in there and the object is treated as immutable afterwards.
struct PhysParams {
  double tau_S = 0.0;
  double tau_L = 0.0;
  double gamma_S = 0.0;
  double gamma_L = 0.0;
  double gamma = 0.0;        // (gamma_S + gamma_L) / 2
  double delta_gamma = 0.0;  // gamma_S - gamma_L
  double delta_m = 0.0;      // m_L - m_S
  double mass_mean = 0.0;    // MeV; only a phase on equal-number terms
  double A_L = 0.0;          // |p|^2 - |q|^2
  double phase_pq = 0.0;     // arg(p/q)
  Complex p;
  Complex q;

  friend bool operator==(const PhysParams&, const PhysParams&) = default;
};

/// Builds a parameter set from lifetimes, mass difference, asymmetry and
/// the phase of p/q. Throws DomainError naming the offending field.
inline PhysParams from_raw(double tau_S, double tau_L, double delta_m, double A_L,
                           double phase_pq, double mass_mean = pdg::kMeanMassMeV) {
  if (!(tau_S > 0.0) || !std::isfinite(tau_S)) {
    throw DomainError("tau_S must be positive and finite, got " + std::to_string(tau_S));
  }
  if (!(tau_L > 0.0) || !std::isfinite(tau_L)) {
    throw DomainError("tau_L must be positive and finite, got " + std::to_string(tau_L));
  }
  if (!(std::abs(A_L) < 1.0)) {
    throw DomainError("A_L must satisfy |A_L| < 1, got " + std::to_string(A_L));
  }
  if (!std::isfinite(delta_m)) throw DomainError("delta_m must be finite");
  if (!std::isfinite(phase_pq)) throw DomainError("phase_pq must be finite");

  PhysParams out;
  out.tau_S = tau_S;
  out.tau_L = tau_L;
  out.gamma_S = 1.0 / tau_S;
  out.gamma_L = 1.0 / tau_L;
  out.gamma = 0.5 * (out.gamma_S + out.gamma_L);
  out.delta_gamma = out.gamma_S - out.gamma_L;
  out.delta_m = delta_m;
  out.mass_mean = mass_mean;
  out.A_L = A_L;
  out.phase_pq = phase_pq;
  out.p = std::polar(std::sqrt(0.5 * (1.0 + A_L)), 0.5 * phase_pq);
  out.q = std::polar(std::sqrt(0.5 * (1.0 - A_L)), -0.5 * phase_pq);
  return out;
}

/// Experimental kaon values with arg(p/q) = 0.
inline PhysParams pdg_defaults() {
  return from_raw(pdg::kTauShortNs, pdg::kTauLongNs, pdg::kDeltaMassPerNs, pdg::kAsymmetry,
                  0.0, pdg::kMeanMassMeV);
}

/// Copy of `base` with A_L replaced (A_L = 0 gives the CP-preserving twin).
inline PhysParams with_asymmetry(const PhysParams& base, double A_L) {
  return from_raw(base.tau_S, base.tau_L, base.delta_m, A_L, base.phase_pq, base.mass_mean);
}

}  // namespace kaon
