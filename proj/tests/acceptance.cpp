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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "kaon/fock.hpp"
#include "kaon/observables.hpp"

namespace {

using namespace kaon;
using K = ObservableKind;

int g_failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %2d: %s (%s)\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  if (!ok) ++g_failures;
}

std::string fmt(const char* pattern, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, pattern, a, b);
  return buf;
}

std::vector<double> linspace(double a, double b, int n) {
  std::vector<double> out(n);
  for (int k = 0; k < n; ++k) out[k] = k + 1 == n ? b : a + (b - a) * k / (n - 1);
  return out;
}

double max_abs(const Eigen::MatrixXcd& m) { return m.cwiseAbs().maxCoeff(); }

// Density-matrix sanity collected over every Fock evolution in the suite.
struct Sanity {
  double trace = 0.0;
  double negativity = 0.0;
  double n_rise = 0.0;  // largest increase of <N> between grid neighbours
  std::size_t evolutions = 0;

  void record(const std::vector<DensityMatrix>& states, bool track_number) {
    ++evolutions;
    for (std::size_t k = 0; k < states.size(); ++k) {
      const auto d = states[k].diagnostics();
      trace = std::max(trace, d.trace_error);
      negativity = std::max(negativity, -d.min_eigenvalue);
      if (track_number && k > 0) {
        const auto n_op = observable_matrix(states[k].basis(), {1, 0, 0, 1});
        n_rise = std::max(n_rise, states[k].expectation(n_op) - states[k - 1].expectation(n_op));
      }
    }
  }
} g_sanity;

std::vector<InitialState> states_up_to(unsigned total) {
  std::vector<InitialState> out;
  for (unsigned n = 0; n <= total; ++n)
    for (unsigned nb = 0; n + nb <= total; ++nb) out.push_back(FlavorCount{n, nb});
  for (unsigned n = 1; n <= total; ++n) out.push_back(ShortLivedState{n});
  for (unsigned n = 1; n <= total; ++n) out.push_back(LongLivedState{n});
  out.push_back(MixedSingleState{0.4, 0.5, Complex(0.2, -0.3)});
  return out;
}

DensityMatrix to_density(const FockBasis& basis, const PhysParams& pp, const InitialState& s) {
  return std::visit(
      [&](const auto& st) -> DensityMatrix {
        using S = std::decay_t<decltype(st)>;
        if constexpr (std::is_same_v<S, FlavorCount>) return make_state_flavor(basis, st.n, st.n_bar);
        else if constexpr (std::is_same_v<S, ShortLivedState>) return make_state_KS(basis, pp, st.n);
        else if constexpr (std::is_same_v<S, LongLivedState>) return make_state_KL(basis, pp, st.n);
        else return make_state_mixed_single(basis, st.p1, st.p2, st.w);
      },
      s);
}

PhysParams random_params(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> tau_s(0.05, 0.2), tau_l(10.0, 100.0), dm(1.0, 10.0),
      asym(-0.01, 0.01), phase(0.0, 2.0 * std::numbers::pi);
  for (;;) {
    const auto pp = from_raw(tau_s(rng), tau_l(rng), dm(rng), asym(rng), phase(rng));
    if (detail::short_jump_radicand(pp) > 0.0) return pp;
  }
}

void criterion_1() {
  const auto pp = pdg_defaults();
  const auto times = linspace(0.0, 9.0, 20);
  const FockBasis basis(3);
  const auto ops = build_lindblad_set(pp, basis);

  std::vector<std::vector<BilinearObservable>> ode_obs;
  std::vector<OperatorMatrix> fock_ops;
  for (auto kind : kAllObservableKinds) {
    ode_obs.push_back(propagate_ode_grid(pp, make_initial(kind, pp), times));
    fock_ops.push_back(observable_matrix(basis, make_initial(kind, pp)));
  }
  double ode_dev = 0.0, fock_dev = 0.0;
  std::size_t cases = 0;
  for (const auto& state : states_up_to(3)) {
    const auto rhos = evolve_density_grid(ops, to_density(basis, pp, state), times);
    g_sanity.record(rhos, false);
    const auto moments = one_body_moments(state, pp);
    for (std::size_t j = 0; j < std::size(kAllObservableKinds); ++j) {
      for (std::size_t k = 0; k < times.size(); ++k) {
        const double closed = mean_closed_form(kAllObservableKinds[j], pp, state, times[k]);
        ode_dev = std::max(ode_dev, std::abs(closed - expectation(ode_obs[j][k], moments)));
        fock_dev = std::max(fock_dev, std::abs(closed - rhos[k].expectation(fock_ops[j])));
        ++cases;
      }
    }
  }
  report(1, "tri-oracle agreement", ode_dev <= 1e-9 && fock_dev <= 1e-8,
         fmt("ode %.2e <= 1e-9, fock %.2e <= 1e-8", ode_dev, fock_dev) + ", " +
             std::to_string(cases) + " cases");
}

void criterion_2() {
  const auto pp = pdg_defaults();
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1.0, 1.0), ut(0.0, 10.0 * pp.tau_S);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const auto obs = BilinearObservable::hermitian(u(rng), Complex(u(rng), u(rng)), u(rng));
    worst = std::max(worst, propagate_closed_form(pp, obs, ut(rng)).hermiticity_defect());
  }
  report(2, "Hermiticity preservation", worst <= 1e-12, fmt("max defect %.2e <= %.0e", worst, 1e-12));
}

void criterion_3() {
  const auto pp = with_asymmetry(pdg_defaults(), 0.0);
  double worst = 0.0;
  for (double t : linspace(0.0, 9.0, 901)) {
    const double ch = 0.5 * (std::exp(-pp.gamma_S * t) + std::exp(-pp.gamma_L * t));
    const double osc = std::exp(-pp.gamma * t) * std::cos(pp.delta_m * t);
    for (unsigned n = 0; n <= 5; ++n) {
      for (unsigned nb = 0; n + nb <= 5; ++nb) {
        const FlavorCount s{n, nb};
        const double n_want = ch * (n + nb);
        const double s_want = osc * (double(n) - double(nb));
        for (const auto& [got, want] : {std::pair{mean_total_number(pp, s, t), n_want},
                                         std::pair{mean_strangeness(pp, s, t), s_want}}) {
          const double dev = want == 0.0 ? std::abs(got) : std::abs(got - want) / std::abs(want);
          worst = std::max(worst, dev);
        }
      }
    }
  }
  report(3, "CP-preserved limits", worst <= 1e-14, fmt("max relative %.2e <= %.0e", worst, 1e-14));
}

void criterion_4() {
  const auto pp = pdg_defaults();
  const FockBasis basis(3);
  const auto ops = build_lindblad_set(pp, basis);
  const auto ns = observable_matrix(basis, make_initial(K::NumberKS, pp));
  const auto nl = observable_matrix(basis, make_initial(K::NumberKL, pp));
  const std::vector<double> times{0.0, 0.05, 0.1, 0.5, 1.0};
  double worst = 0.0;
  for (unsigned n = 1; n <= 3; ++n) {
    const auto rs = evolve_density_grid(ops, make_state_KS(basis, pp, n), times);
    const auto rl = evolve_density_grid(ops, make_state_KL(basis, pp, n), times);
    g_sanity.record(rs, false);
    g_sanity.record(rl, false);
    for (std::size_t k = 0; k < times.size(); ++k) {
      worst = std::max(worst, std::abs(rs[k].expectation(ns) - n * std::exp(-pp.gamma_S * times[k])));
      worst = std::max(worst, std::abs(rl[k].expectation(nl) - n * std::exp(-pp.gamma_L * times[k])));
    }
  }
  report(4, "Geiger-Nuttall decay of mass modes", worst <= 1e-8, fmt("max %.2e <= %.0e", worst, 1e-8));
}

void criterion_5() {
  const auto pp = pdg_defaults();
  const double a2 = pp.A_L * pp.A_L;
  const std::vector<double> times{0.0, 0.05, 0.1, 0.5, 1.0};
  double worst = std::abs(a2 - 1.10224e-5) / 1.10224e-5;
  for (unsigned n = 1; n <= 3; ++n) {
    for (double t : times) {
      const double ks_in_l = mean_heisenberg(K::NumberKS, pp, LongLivedState{n}, t);
      const double kl_in_s = mean_heisenberg(K::NumberKL, pp, ShortLivedState{n}, t);
      const double want_l = n * a2 * std::exp(-pp.gamma_L * t);
      const double want_s = n * a2 * std::exp(-pp.gamma_S * t);
      worst = std::max({worst, std::abs(ks_in_l - want_l) / want_l, std::abs(kl_in_s - want_s) / want_s});
    }
  }

  // Same quantities from the density-matrix engine. Reported only: the
  // K_L fraction of a decaying K_S state is ~1e-10 against O(1) matrix
  // entries, and both the RK and the matrix-exponential paths bottom out
  // near 1e-6 relative there.
  const FockBasis basis(3);
  const auto ops = build_lindblad_set(pp, basis);
  const auto ns = observable_matrix(basis, make_initial(K::NumberKS, pp));
  const auto nl = observable_matrix(basis, make_initial(K::NumberKL, pp));
  ode::Options tight;
  tight.rel_tol = 1e-13;
  tight.abs_tol = 1e-18;
  const std::vector<double> fock_times{0.0, 0.05, 0.1, 0.5, 1.0};
  double fock_worst = 0.0;
  for (unsigned n = 1; n <= 3; ++n) {
    const auto rl = evolve_density_grid(ops, make_state_KL(basis, pp, n), fock_times, tight);
    const auto rs = evolve_density_grid(ops, make_state_KS(basis, pp, n), fock_times, tight);
    g_sanity.record(rl, false);
    g_sanity.record(rs, false);
    for (std::size_t k = 0; k < fock_times.size(); ++k) {
      const double want_l = n * a2 * std::exp(-pp.gamma_L * fock_times[k]);
      const double want_s = n * a2 * std::exp(-pp.gamma_S * fock_times[k]);
      fock_worst = std::max({fock_worst, std::abs(rl[k].expectation(ns) - want_l) / want_l,
                             std::abs(rs[k].expectation(nl) - want_s) / want_s});
    }
  }
  report(5, "cross-flavor A_L^2 fractions", worst <= 1e-6,
         fmt("relative %.2e <= 1e-6; fock engine %.2e, informational", worst, fock_worst));
}

void criterion_6() {
  const auto pp = from_raw(0.08954, 51.16, 5.293, 0.00332, 0.9);
  const FockBasis b1(1), b4(4);
  const double braket =
      std::abs(mass_eigen_ket(b1, pp, 1, +1).dot(mass_eigen_ket(b1, pp, 1, -1)) - pp.A_L);
  const auto cs = short_lived_annihilator(b4, pp);
  const auto cl = long_lived_annihilator(b4, pp);
  const auto p = interior_projector(b4);
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(b4.size(), b4.size());
  const double comm = max_abs(p * (cs * cl.adjoint() - cl.adjoint() * cs - pp.A_L * id) * p);
  report(6, "non-orthogonality and mode algebra", braket <= 1e-12 && comm <= 1e-12,
         fmt("<1_S|1_L> dev %.2e, [c_S,c_L^+] dev %.2e, both <= 1e-12", braket, comm));
}

void criterion_7() {
  const auto pp = pdg_defaults();
  const FockBasis basis(3);
  const auto ops = build_lindblad_set(pp, basis);
  const auto times = linspace(0.0, 9.0, 200);
  for (const auto& state : states_up_to(3)) {
    g_sanity.record(evolve_density_grid(ops, to_density(basis, pp, state), times), true);
  }
  // <N> rises of a few ulp are rounding, not growth.
  const double rise_tol = 1e-15;
  const bool ok = g_sanity.trace <= 1e-9 && g_sanity.negativity <= 1e-9 && g_sanity.n_rise <= rise_tol;
  report(7, "density-matrix sanity", ok,
         fmt("trace %.2e, negativity %.2e <= 1e-9", g_sanity.trace, g_sanity.negativity) +
             fmt(", max <N> rise %.2e <= %.0e", g_sanity.n_rise, rise_tol) + ", " +
             std::to_string(g_sanity.evolutions) + " evolutions");
}

void criterion_8() {
  std::mt19937_64 rng(8);
  std::vector<PhysParams> sets{pdg_defaults()};
  for (int k = 0; k < 10; ++k) sets.push_back(random_params(rng));
  double worst = 0.0;
  for (const auto& pp : sets) {
    const auto flavor = build_lindblad_set(pp, FockBasis(1));
    const auto mass = build_mass_basis_set(pp);
    worst = std::max({worst, max_abs(flavor.hamiltonian - mass.hamiltonian),
                      max_abs(flavor.jump_short - mass.jump_short),
                      max_abs(flavor.jump_long - mass.jump_long),
                      max_abs(flavor.dissipative - mass.dissipative)});
  }
  report(8, "mass-basis operator equivalence", worst <= 1e-12,
         fmt("max entry dev %.2e <= %.0e", worst, 1e-12) + ", 11 parameter sets");
}

void criterion_9() {
  double worst = 0.0;
  for (double t : {0.1, 1.0, 5.0}) {
    worst = std::max(worst, check_two_particle_factorization(pdg_defaults(), t).max_deviation);
  }
  report(9, "two-particle factorization", worst <= 1e-8, fmt("max dev %.2e <= %.0e", worst, 1e-8));
}

void criterion_10() {
  const auto pp = pdg_defaults();
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const double t1 = u(rng), t2 = u(rng);
    const Eigen::Matrix4cd d =
        propagator_matrix(pp, t1 + t2).m - propagator_matrix(pp, t2).m * propagator_matrix(pp, t1).m;
    worst = std::max(worst, d.cwiseAbs().maxCoeff());
  }
  report(10, "semigroup property", worst <= 1e-10, fmt("max dev %.2e <= %.0e", worst, 1e-10));
}

void criterion_11() {
  const auto pp = pdg_defaults();
  const double a2 = pp.A_L * pp.A_L;
  double worst = 0.0;  // in units of A_L^2 per particle
  for (auto kind : {K::TotalNumber, K::Strangeness, K::NumberK0, K::NumberK0bar}) {
    for (unsigned n = 0; n <= 5; ++n) {
      for (unsigned nb = 0; n + nb <= 5; ++nb) {
        if (n + nb == 0) continue;
        const FlavorCount s{n, nb};
        for (double t : linspace(0.0, 9.0, 901)) {
          const double exact = mean_heisenberg(kind, pp, s, t) - mean_flavor_cp(kind, pp, s, t);
          const double leading = cp_difference_leading(kind, pp, s, t);
          worst = std::max(worst, std::abs(exact - leading) / (a2 * s.total()));
        }
      }
    }
  }
  report(11, "leading-order CP differences", worst <= 10.0,
         fmt("max |exact - leading| = %.3f A_L^2 per particle <= %g", worst, 10.0));
}

}  // namespace

int main() {
  const auto start = std::chrono::steady_clock::now();
  try {
    criterion_1();
    criterion_2();
    criterion_3();
    criterion_4();
    criterion_5();
    criterion_6();
    criterion_7();
    criterion_8();
    criterion_9();
    criterion_10();
    criterion_11();
  } catch (const std::exception& e) {
    std::printf("[FAIL] aborted: %s\n", e.what());
    return 1;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("%d criteria failed, %.1f s\n", g_failures, secs);
  return g_failures == 0 ? 0 : 1;
}
