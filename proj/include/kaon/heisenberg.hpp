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

// Heisenberg-picture evolution of observables bilinear in the flavor
// annihilation operators a (K0) and b (anti-K0):
//
//   Omega = w_aa a^+a + w_ab a^+b + w_ba b^+a + w_bb b^+b.
//
// The Lindblad generator maps this four-dimensional space into itself, so
// every operation below works on the coefficient vector, always ordered
// (w_aa, w_ab, w_ba, w_bb).

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <span>
#include <string>
#include <vector>

#include "kaon/errors.hpp"
#include "kaon/ode.hpp"
#include "kaon/params.hpp"

namespace kaon {

struct BilinearObservable {
  Complex w_aa{};
  Complex w_ab{};
  Complex w_ba{};
  Complex w_bb{};

  static BilinearObservable hermitian(double aa, Complex ab, double bb) {
    return {aa, ab, std::conj(ab), bb};
  }

  static BilinearObservable from_vector(const Eigen::Vector4cd& v) {
    return {v(0), v(1), v(2), v(3)};
  }

  Eigen::Vector4cd as_vector() const { return {w_aa, w_ab, w_ba, w_bb}; }

  /// Largest violation of w_ab = conj(w_ba), Im w_aa = 0, Im w_bb = 0.
  double hermiticity_defect() const {
    return std::max({std::abs(w_ab - std::conj(w_ba)), std::abs(w_aa.imag()),
                     std::abs(w_bb.imag())});
  }

  bool is_hermitian(double tol = 1e-12) const { return hermiticity_defect() <= tol; }

  double max_abs() const { return as_vector().cwiseAbs().maxCoeff(); }

  friend BilinearObservable operator+(const BilinearObservable& x, const BilinearObservable& y) {
    return {x.w_aa + y.w_aa, x.w_ab + y.w_ab, x.w_ba + y.w_ba, x.w_bb + y.w_bb};
  }
  friend BilinearObservable operator-(const BilinearObservable& x, const BilinearObservable& y) {
    return {x.w_aa - y.w_aa, x.w_ab - y.w_ab, x.w_ba - y.w_ba, x.w_bb - y.w_bb};
  }
  friend BilinearObservable operator*(Complex s, const BilinearObservable& x) {
    return {s * x.w_aa, s * x.w_ab, s * x.w_ba, s * x.w_bb};
  }
  friend bool operator==(const BilinearObservable&, const BilinearObservable&) = default;
};

/// Linear map taking w(0) to w(t).
struct Propagator {
  Eigen::Matrix4cd m;
  double t = 0.0;

  BilinearObservable apply(const BilinearObservable& obs) const {
    return BilinearObservable::from_vector(m * obs.as_vector());
  }
};

namespace detail {

// p/q and q/p diverge as |A_L| -> 1.
inline void require_heisenberg_domain(const PhysParams& params) {
  if (!(std::abs(params.A_L) <= 0.999)) {
    throw DomainError("heisenberg: |A_L| must not exceed 0.999, got " +
                      std::to_string(params.A_L));
  }
}

inline void require_forward_time(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw DomainError("time must be finite and >= 0 (forward-only semigroup), got " +
                      std::to_string(t));
  }
}

// Damped hyperbolic/trigonometric factors of the closed-form solution.
// e^{-Gamma t} cosh(dGamma t / 2) and e^{-Gamma t} sinh(dGamma t / 2) are
// formed from e^{-Gamma_S t} and e^{-Gamma_L t} directly, which neither
// overflows nor cancels for large t.
struct DampedFactors {
  double ch;  // e^{-G t} cosh(dG t / 2)
  double sh;  // e^{-G t} sinh(dG t / 2)
  double co;  // e^{-G t} cos(dm t)
  double si;  // e^{-G t} sin(dm t)

  DampedFactors(const PhysParams& params, double t) {
    const double e_short = std::exp(-params.gamma_S * t);
    const double e_long = std::exp(-params.gamma_L * t);
    const double e_mean = std::exp(-params.gamma * t);
    ch = 0.5 * (e_short + e_long);
    sh = 0.5 * (e_long - e_short);
    co = e_mean * std::cos(params.delta_m * t);
    si = e_mean * std::sin(params.delta_m * t);
  }
};

}  // namespace detail

/// Matrix of the generator on the coefficient vector: d/dt w = G w.
inline Eigen::Matrix4cd generator_matrix(const PhysParams& params) {
  detail::require_heisenberg_domain(params);
  const double A = params.A_L;
  const Complex pq = params.p * std::conj(params.q);  // p q*
  const Complex qp = params.q * std::conj(params.p);  // q p*
  const Complex u_minus{0.5 * params.delta_gamma, -params.delta_m};
  const Complex u_plus{0.5 * params.delta_gamma, params.delta_m};
  const double g = params.gamma;

  Eigen::Matrix4cd gen = Eigen::Matrix4cd::Zero();
  gen(0, 0) = -g;
  gen(0, 1) = -qp / (1.0 + A) * u_minus;
  gen(0, 2) = -pq / (1.0 + A) * u_plus;

  gen(1, 0) = -pq / (1.0 - A) * u_minus;
  gen(1, 1) = -g;
  gen(1, 3) = -pq / (1.0 + A) * u_plus;

  gen(2, 0) = -qp / (1.0 - A) * u_plus;
  gen(2, 2) = -g;
  gen(2, 3) = -qp / (1.0 + A) * u_minus;

  gen(3, 1) = -qp / (1.0 - A) * u_plus;
  gen(3, 2) = -pq / (1.0 - A) * u_minus;
  gen(3, 3) = -g;
  return gen;
}

/// Coefficients of L[Omega] for Omega given by `obs`.
inline BilinearObservable generator_apply(const PhysParams& params,
                                          const BilinearObservable& obs) {
  return BilinearObservable::from_vector(generator_matrix(params) * obs.as_vector());
}

/// Exact solution w(t) for initial coefficients `obs0`.
inline BilinearObservable propagate_closed_form(const PhysParams& params,
                                                const BilinearObservable& obs0, double t) {
  detail::require_heisenberg_domain(params);
  detail::require_forward_time(t);
  if (t == 0.0) return obs0;

  const double A = params.A_L;
  const double r = (1.0 - A) / (1.0 + A);
  const double r_inv = (1.0 + A) / (1.0 - A);
  const Complex p_over_q = params.p / params.q;
  const Complex q_over_p = params.q / params.p;
  const detail::DampedFactors f(params, t);

  const double c_plus = f.ch + f.co;
  const double c_minus = f.ch - f.co;
  const Complex s_minus{f.sh, -f.si};
  const Complex s_plus{f.sh, f.si};

  const auto& [aa, ab, ba, bb] = obs0;
  BilinearObservable out;
  out.w_aa = 0.5 * (c_plus * aa - q_over_p * s_minus * ab - r * p_over_q * s_plus * ba +
                    r * c_minus * bb);
  out.w_ab = 0.5 * (-p_over_q * s_minus * aa + c_plus * ab +
                    r * p_over_q * p_over_q * c_minus * ba - r * p_over_q * s_plus * bb);
  out.w_ba = 0.5 * (-r_inv * q_over_p * s_plus * aa + r_inv * q_over_p * q_over_p * c_minus * ab +
                    c_plus * ba - q_over_p * s_minus * bb);
  out.w_bb = 0.5 * (r_inv * c_minus * aa - r_inv * q_over_p * s_plus * ab -
                    p_over_q * s_minus * ba + c_plus * bb);
  return out;
}

/// M(t) with propagate_closed_form(params, v, t) = M(t) v.
inline Propagator propagator_matrix(const PhysParams& params, double t) {
  detail::require_heisenberg_domain(params);
  detail::require_forward_time(t);
  Propagator prop;
  prop.t = t;
  for (int j = 0; j < 4; ++j) {
    Eigen::Vector4cd e = Eigen::Vector4cd::Zero();
    e(j) = 1.0;
    prop.m.col(j) = propagate_closed_form(params, BilinearObservable::from_vector(e), t).as_vector();
  }
  return prop;
}

/// Numerical solution of d/dt w = G w sampled at each of `times`.
inline std::vector<BilinearObservable> propagate_ode_grid(const PhysParams& params,
                                                          const BilinearObservable& obs0,
                                                          std::span<const double> times,
                                                          const ode::Options& opt = {}) {
  for (double t : times) detail::require_forward_time(t);
  const Eigen::Matrix4cd gen = generator_matrix(params);
  auto rhs = [&gen](double, const Eigen::Vector4cd& w) -> Eigen::Vector4cd { return gen * w; };
  const auto states = ode::integrate_grid(rhs, obs0.as_vector(), 0.0, times, opt);
  std::vector<BilinearObservable> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(BilinearObservable::from_vector(s));
  return out;
}

inline BilinearObservable propagate_ode(const PhysParams& params, const BilinearObservable& obs0,
                                        double t, double rel_tol = 1e-10, double abs_tol = 1e-12) {
  detail::require_forward_time(t);
  ode::Options opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  const double times[] = {t};
  return propagate_ode_grid(params, obs0, times, opt).front();
}

}  // namespace kaon
