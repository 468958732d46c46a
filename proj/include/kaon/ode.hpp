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

// Adaptive Dormand-Prince 5(4) integrator with PI step-size control.
//
// State is any dense Eigen type (vector or matrix, real or complex). The
// error norm is the max over all entries of |err| / (abs_tol + rel_tol*|y|),
// so entries that stay exactly zero never influence the step sequence.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "kaon/errors.hpp"

namespace kaon::ode {

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-12;
  double max_step = std::numeric_limits<double>::infinity();
  std::size_t max_steps = 50'000'000;
};

struct Stats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t rhs_calls = 0;
};

namespace detail {

// Butcher tableau (Hairer, Norsett & Wanner, DOPRI5).
inline constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
inline constexpr double a21 = 1.0 / 5;
inline constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
inline constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
inline constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                        a54 = -212.0 / 729;
inline constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                        a64 = 49.0 / 176, a65 = -5103.0 / 18656;
inline constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192,
                        a75 = -2187.0 / 6784, a76 = 11.0 / 84;
// Difference between the 5th and embedded 4th order weights.
inline constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                        e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

template <class State>
double scaled_norm(const State& err, const State& y0, const State& y1, const Options& opt) {
  const auto scale =
      (opt.abs_tol + opt.rel_tol * y0.cwiseAbs().array().max(y1.cwiseAbs().array())).eval();
  return (err.cwiseAbs().array() / scale).maxCoeff();
}

}  // namespace detail

/// Integrates dy/dt = rhs(t, y) and returns the state at every entry of
/// `times` (which must be non-decreasing and start at or after t0).
///
/// `on_accept(y)` runs after each accepted step and may project the state
/// (e.g. restore Hermiticity). Throws IntegrationError on step-size
/// underflow or when max_steps is exhausted.
template <class State, class Rhs, class OnAccept>
std::vector<State> integrate_grid(Rhs&& rhs, State y, double t0, std::span<const double> times,
                                  const Options& opt, OnAccept&& on_accept,
                                  Stats* stats = nullptr) {
  using namespace detail;
  if (!(opt.rel_tol > 0.0) || !(opt.abs_tol > 0.0)) {
    throw DomainError("integrator tolerances must be positive");
  }
  std::vector<State> out;
  out.reserve(times.size());
  Stats local;

  double t = t0;
  State k1 = rhs(t, y);
  ++local.rhs_calls;

  // Initial step from the ratio of state and derivative magnitudes.
  double h;
  {
    const State zero = State::Zero(y.rows(), y.cols());
    const double d0 = scaled_norm(y, zero, zero, opt);
    const double d1 = scaled_norm(k1, zero, zero, opt);
    h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h = std::min(h, opt.max_step);
  }

  constexpr double kSafety = 0.9;
  constexpr double kBeta = 0.04;
  constexpr double kExpo = 0.2 - 0.75 * kBeta;
  double err_old = 1e-4;

  for (const double target : times) {
    if (target < t) {
      throw DomainError("output times must be non-decreasing and >= t0");
    }
    while (t < target) {
      if (local.accepted + local.rejected >= opt.max_steps) {
        throw IntegrationError("step budget exhausted at t = " + std::to_string(t));
      }
      const bool last = t + h >= target;
      const double step = last ? target - t : h;
      if (step < 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t)) &&
          !last) {
        throw IntegrationError("step size underflow at t = " + std::to_string(t));
      }

      const State k2 = rhs(t + c2 * step, (y + step * (a21 * k1)).eval());
      const State k3 = rhs(t + c3 * step, (y + step * (a31 * k1 + a32 * k2)).eval());
      const State k4 = rhs(t + c4 * step, (y + step * (a41 * k1 + a42 * k2 + a43 * k3)).eval());
      const State k5 = rhs(t + c5 * step,
                           (y + step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4)).eval());
      const State k6 =
          rhs(t + step, (y + step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5)).eval());
      State y_new = y + step * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      const State k7 = rhs(t + step, y_new);
      local.rhs_calls += 6;

      const State err = step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
      const double en = scaled_norm(err, y, y_new, opt);

      if (en <= 1.0) {
        t = last ? target : t + step;
        y = std::move(y_new);
        on_accept(y);
        k1 = rhs(t, y);  // not FSAL after projection
        ++local.rhs_calls;
        ++local.accepted;
        double factor = kSafety * std::pow(std::max(en, 1e-10), -kExpo) * std::pow(err_old, kBeta);
        factor = std::clamp(factor, 0.2, 10.0);
        err_old = std::max(en, 1e-4);
        // A step clipped to land on an output time keeps the previous proposal.
        if (!last) h = std::min(step * factor, opt.max_step);
      } else {
        ++local.rejected;
        h = step * std::max(0.2, kSafety * std::pow(en, -kExpo));
        if (h < 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t))) {
          throw IntegrationError("step size underflow at t = " + std::to_string(t));
        }
      }
    }
    out.push_back(y);
  }
  if (stats) *stats = local;
  return out;
}

template <class State, class Rhs>
std::vector<State> integrate_grid(Rhs&& rhs, State y, double t0, std::span<const double> times,
                                  const Options& opt, Stats* stats = nullptr) {
  return integrate_grid(std::forward<Rhs>(rhs), std::move(y), t0, times, opt,
                        [](State&) {}, stats);
}

/// Single-endpoint convenience wrapper.
template <class State, class Rhs>
State integrate(Rhs&& rhs, State y, double t0, double t1, const Options& opt,
                Stats* stats = nullptr) {
  const double times[] = {t1};
  return integrate_grid(std::forward<Rhs>(rhs), std::move(y), t0, times, opt, stats).front();
}

}  // namespace kaon::ode
