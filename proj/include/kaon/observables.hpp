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

// Catalog of the physical observables: initial coefficient vectors, closed
// mean values in flavor and K_S/K_L states, their CP-preserving limits and
// the leading-order CP differences.

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <type_traits>
#include <variant>

#include "kaon/errors.hpp"
#include "kaon/heisenberg.hpp"
#include "kaon/params.hpp"

namespace kaon {

enum class ObservableKind { TotalNumber, Strangeness, NumberK0, NumberK0bar, NumberKS, NumberKL };

inline constexpr ObservableKind kAllObservableKinds[] = {
    ObservableKind::TotalNumber, ObservableKind::Strangeness, ObservableKind::NumberK0,
    ObservableKind::NumberK0bar, ObservableKind::NumberKS,    ObservableKind::NumberKL};

inline std::string_view to_string(ObservableKind kind) {
  switch (kind) {
    case ObservableKind::TotalNumber: return "total-number";
    case ObservableKind::Strangeness: return "strangeness";
    case ObservableKind::NumberK0: return "number-k0";
    case ObservableKind::NumberK0bar: return "number-k0bar";
    case ObservableKind::NumberKS: return "number-ks";
    case ObservableKind::NumberKL: return "number-kl";
  }
  return "unknown";
}

inline std::optional<ObservableKind> parse_observable_kind(std::string_view name) {
  for (auto kind : kAllObservableKinds) {
    if (to_string(kind) == name) return kind;
  }
  return std::nullopt;
}

/// |n, n_bar>: n neutral kaons and n_bar antikaons.
struct FlavorCount {
  unsigned n = 0;
  unsigned n_bar = 0;
  unsigned total() const { return n + n_bar; }
  friend bool operator==(const FlavorCount&, const FlavorCount&) = default;
};

// Real-valued occupations. The mean-value formulas are linear in n and
// n_bar, so curve families can be evaluated at arbitrary (sum, difference)
// combinations.
struct FlavorWeights {
  double n = 0.0;
  double n_bar = 0.0;
  FlavorWeights() = default;
  FlavorWeights(double n_, double n_bar_) : n(n_), n_bar(n_bar_) {}
  FlavorWeights(FlavorCount c) : n(c.n), n_bar(c.n_bar) {}  // NOLINT(implicit)
  static FlavorWeights from_sum_difference(double sum, double diff) {
    return {0.5 * (sum + diff), 0.5 * (sum - diff)};
  }
};

struct ShortLivedState {
  unsigned n = 0;  // |n_S>
};
struct LongLivedState {
  unsigned n = 0;  // |n_L>
};
/// Single-particle mixed state
/// p1|K0><K0| + p2|K0bar><K0bar| + w|K0><K0bar| + h.c. + (1-p1-p2)|0><0|.
struct MixedSingleState {
  double p1 = 0.0;
  double p2 = 0.0;
  Complex w{};
};

using InitialState = std::variant<FlavorCount, ShortLivedState, LongLivedState, MixedSingleState>;

inline void validate(const MixedSingleState& s, double tol = 1e-12) {
  if (!(s.p1 >= -tol && s.p1 <= 1.0 + tol)) throw DomainError("mixed state: p1 outside [0, 1]");
  if (!(s.p2 >= -tol && s.p2 <= 1.0 + tol)) throw DomainError("mixed state: p2 outside [0, 1]");
  if (!(s.p1 + s.p2 >= -tol && s.p1 + s.p2 <= 1.0 + tol)) {
    throw DomainError("mixed state: p1 + p2 outside [0, 1]");
  }
  if (!(std::norm(s.w) <= s.p1 * s.p2 + tol)) throw DomainError("mixed state: |w|^2 > p1 p2");
}

/// Number of particles present at t = 0 (the Fock cutoff the state needs).
inline unsigned particle_count(const InitialState& state) {
  return std::visit(
      [](const auto& s) -> unsigned {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, FlavorCount>) return s.total();
        else if constexpr (std::is_same_v<S, MixedSingleState>) return 1;
        else return s.n;
      },
      state);
}

/// One-body moments G(x, y) = <x^+ y> for x, y in {a, b}; the mean of a
/// bilinear observable is sum_xy w_xy G(x, y).
inline Eigen::Matrix2cd one_body_moments(const InitialState& state, const PhysParams& params) {
  return std::visit(
      [&params](const auto& s) -> Eigen::Matrix2cd {
        using S = std::decay_t<decltype(s)>;
        Eigen::Matrix2cd g = Eigen::Matrix2cd::Zero();
        if constexpr (std::is_same_v<S, FlavorCount>) {
          g(0, 0) = static_cast<double>(s.n);
          g(1, 1) = static_cast<double>(s.n_bar);
        } else if constexpr (std::is_same_v<S, MixedSingleState>) {
          validate(s);
          g(0, 0) = s.p1;
          g(0, 1) = std::conj(s.w);
          g(1, 0) = s.w;
          g(1, 1) = s.p2;
        } else {
          // |n_S>, |n_L>: n quanta in the mode p a^+ + (+-q) b^+.
          const double sign = std::is_same_v<S, ShortLivedState> ? 1.0 : -1.0;
          const Complex u_a = params.p;
          const Complex u_b = sign * params.q;
          const double n = static_cast<double>(s.n);
          g(0, 0) = n * std::norm(u_a);
          g(0, 1) = n * std::conj(u_a) * u_b;
          g(1, 0) = n * std::conj(u_b) * u_a;
          g(1, 1) = n * std::norm(u_b);
        }
        return g;
      },
      state);
}

/// <Omega> given the one-body moments; real part of a Hermitian pairing.
inline double expectation(const BilinearObservable& obs, const Eigen::Matrix2cd& moments) {
  const Complex v = obs.w_aa * moments(0, 0) + obs.w_ab * moments(0, 1) +
                    obs.w_ba * moments(1, 0) + obs.w_bb * moments(1, 1);
  return v.real();
}

/// Diagonal matrix element in |n, n_bar>; off-diagonal monomials vanish.
inline double expectation_flavor(const BilinearObservable& obs, FlavorWeights state) {
  if (!obs.is_hermitian(1e-9 * (1.0 + obs.max_abs()))) {
    throw DomainError("expectation_flavor: observable is not Hermitian");
  }
  return obs.w_aa.real() * state.n + obs.w_bb.real() * state.n_bar;
}

inline BilinearObservable make_initial(ObservableKind kind, const PhysParams& params) {
  switch (kind) {
    case ObservableKind::TotalNumber: return {1.0, 0.0, 0.0, 1.0};
    case ObservableKind::Strangeness: return {1.0, 0.0, 0.0, -1.0};
    case ObservableKind::NumberK0: return {1.0, 0.0, 0.0, 0.0};
    case ObservableKind::NumberK0bar: return {0.0, 0.0, 0.0, 1.0};
    case ObservableKind::NumberKS:
    case ObservableKind::NumberKL: {
      if (params.p == 0.0 || params.q == 0.0) {
        throw DomainError("make_initial: K_S/K_L number needs p, q != 0");
      }
      // c^+ c with c = p* a +- q* b.
      const double sign = kind == ObservableKind::NumberKS ? 1.0 : -1.0;
      const double A = params.A_L;
      return {0.5 * (1.0 + A), sign * 0.5 * (1.0 - A) * (params.p / params.q),
              sign * 0.5 * (1.0 + A) * (params.q / params.p), 0.5 * (1.0 - A)};
    }
  }
  throw DomainError("make_initial: unknown observable kind");
}

// Closed mean values in |n, n_bar>.

inline double mean_total_number(const PhysParams& params, FlavorWeights s, double t) {
  detail::require_forward_time(t);
  const detail::DampedFactors f(params, t);
  const double A = params.A_L;
  return ((f.ch - A * A * f.co) * (s.n + s.n_bar) - A * (f.ch - f.co) * (s.n - s.n_bar)) /
         (1.0 - A * A);
}

inline double mean_strangeness(const PhysParams& params, FlavorWeights s, double t) {
  detail::require_forward_time(t);
  const detail::DampedFactors f(params, t);
  const double A = params.A_L;
  return ((f.co - A * A * f.ch) * (s.n - s.n_bar) + A * (f.ch - f.co) * (s.n + s.n_bar)) /
         (1.0 - A * A);
}

inline double mean_number_K0(const PhysParams& params, FlavorWeights s, double t) {
  detail::require_forward_time(t);
  const detail::DampedFactors f(params, t);
  const double A = params.A_L;
  return 0.5 * ((f.ch + f.co) * s.n + (1.0 + A) / (1.0 - A) * (f.ch - f.co) * s.n_bar);
}

inline double mean_number_K0bar(const PhysParams& params, FlavorWeights s, double t) {
  detail::require_forward_time(t);
  const detail::DampedFactors f(params, t);
  const double A = params.A_L;
  return 0.5 * ((1.0 - A) / (1.0 + A) * (f.ch - f.co) * s.n + (f.ch + f.co) * s.n_bar);
}

// CP-preserving displays; A_L is ignored.

inline double mean_total_number_cp(const PhysParams& params, FlavorWeights s, double t) {
  const detail::DampedFactors f(params, t);
  return f.ch * (s.n + s.n_bar);
}

inline double mean_strangeness_cp(const PhysParams& params, FlavorWeights s, double t) {
  const detail::DampedFactors f(params, t);
  return f.co * (s.n - s.n_bar);
}

inline double mean_number_K0_cp(const PhysParams& params, FlavorWeights s, double t) {
  const detail::DampedFactors f(params, t);
  return 0.5 * f.ch * (s.n + s.n_bar) + 0.5 * f.co * (s.n - s.n_bar);
}

inline double mean_number_K0bar_cp(const PhysParams& params, FlavorWeights s, double t) {
  const detail::DampedFactors f(params, t);
  return 0.5 * f.ch * (s.n + s.n_bar) - 0.5 * f.co * (s.n - s.n_bar);
}

/// Closed flavor-state mean for the four flavor-diagonal kinds.
inline double mean_flavor(ObservableKind kind, const PhysParams& params, FlavorWeights s,
                          double t) {
  switch (kind) {
    case ObservableKind::TotalNumber: return mean_total_number(params, s, t);
    case ObservableKind::Strangeness: return mean_strangeness(params, s, t);
    case ObservableKind::NumberK0: return mean_number_K0(params, s, t);
    case ObservableKind::NumberK0bar: return mean_number_K0bar(params, s, t);
    default: break;
  }
  throw DomainError("mean_flavor: no closed flavor-state display for " +
                    std::string(to_string(kind)));
}

inline double mean_flavor_cp(ObservableKind kind, const PhysParams& params, FlavorWeights s,
                             double t) {
  switch (kind) {
    case ObservableKind::TotalNumber: return mean_total_number_cp(params, s, t);
    case ObservableKind::Strangeness: return mean_strangeness_cp(params, s, t);
    case ObservableKind::NumberK0: return mean_number_K0_cp(params, s, t);
    case ObservableKind::NumberK0bar: return mean_number_K0bar_cp(params, s, t);
    default: break;
  }
  throw DomainError("mean_flavor_cp: unsupported kind " + std::string(to_string(kind)));
}

/// Leading O(A_L) part of <X> - <X>_CP; the O(A_L^2) remainder is dropped.
inline double cp_difference_leading(ObservableKind kind, const PhysParams& params,
                                    FlavorWeights s, double t) {
  detail::require_forward_time(t);
  const detail::DampedFactors f(params, t);
  const double bracket = params.A_L * (f.ch - f.co);
  switch (kind) {
    case ObservableKind::TotalNumber: return -bracket * (s.n - s.n_bar);
    case ObservableKind::Strangeness: return bracket * (s.n + s.n_bar);
    case ObservableKind::NumberK0: return bracket * s.n_bar;
    case ObservableKind::NumberK0bar: return -bracket * s.n;
    default: break;
  }
  throw DomainError("cp_difference_leading: unsupported kind " + std::string(to_string(kind)));
}

// Means of the K_S / K_L number in |n_S> and |n_L>.

inline double mean_KS_in_nS(const PhysParams& params, unsigned n, double t) {
  detail::require_forward_time(t);
  return n * std::exp(-params.gamma_S * t);
}

inline double mean_KL_in_nL(const PhysParams& params, unsigned n, double t) {
  detail::require_forward_time(t);
  return n * std::exp(-params.gamma_L * t);
}

inline double mean_KS_in_nL(const PhysParams& params, unsigned n, double t) {
  detail::require_forward_time(t);
  return n * params.A_L * params.A_L * std::exp(-params.gamma_L * t);
}

inline double mean_KL_in_nS(const PhysParams& params, unsigned n, double t) {
  detail::require_forward_time(t);
  return n * params.A_L * params.A_L * std::exp(-params.gamma_S * t);
}

/// Mean through the Heisenberg route: propagate the coefficients in closed
/// form and pair them with the state's one-body moments.
inline double mean_heisenberg(ObservableKind kind, const PhysParams& params,
                              const InitialState& state, double t) {
  const auto obs = propagate_closed_form(params, make_initial(kind, params), t);
  return expectation(obs, one_body_moments(state, params));
}

/// Best closed-form mean: a displayed formula when one exists for this
/// (observable, state) pair, otherwise the Heisenberg route.
inline double mean_closed_form(ObservableKind kind, const PhysParams& params,
                               const InitialState& state, double t) {
  if (const auto* flavor = std::get_if<FlavorCount>(&state)) {
    if (kind != ObservableKind::NumberKS && kind != ObservableKind::NumberKL) {
      return mean_flavor(kind, params, *flavor, t);
    }
  } else if (const auto* s = std::get_if<ShortLivedState>(&state)) {
    if (kind == ObservableKind::NumberKS) return mean_KS_in_nS(params, s->n, t);
    if (kind == ObservableKind::NumberKL) return mean_KL_in_nS(params, s->n, t);
  } else if (const auto* l = std::get_if<LongLivedState>(&state)) {
    if (kind == ObservableKind::NumberKL) return mean_KL_in_nL(params, l->n, t);
    if (kind == ObservableKind::NumberKS) return mean_KS_in_nL(params, l->n, t);
  }
  return mean_heisenberg(kind, params, state, t);
}

}  // namespace kaon
