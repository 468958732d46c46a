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

// Schrodinger-picture engine on the truncated two-mode Fock space
// {|n, n_bar> : n + n_bar <= cutoff}. The generator never raises the total
// particle number, so the truncated space is exactly invariant and the
// results are exact up to integrator error.

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "kaon/errors.hpp"
#include "kaon/heisenberg.hpp"
#include "kaon/ode.hpp"
#include "kaon/params.hpp"

namespace kaon {

using OperatorMatrix = Eigen::MatrixXcd;

/// Basis ordering: ascending total number, then ascending n_bar.
class FockBasis {
 public:
  explicit FockBasis(unsigned cutoff) : cutoff_(cutoff) {
    labels_.reserve(dim_for(cutoff));
    for (unsigned total = 0; total <= cutoff; ++total) {
      for (unsigned n_bar = 0; n_bar <= total; ++n_bar) labels_.emplace_back(total - n_bar, n_bar);
    }
  }

  static std::size_t dim_for(unsigned cutoff) {
    return static_cast<std::size_t>(cutoff + 1) * (cutoff + 2) / 2;
  }

  unsigned cutoff() const { return cutoff_; }
  std::size_t dim() const { return labels_.size(); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(labels_.size()); }

  bool contains(unsigned n, unsigned n_bar) const { return n + n_bar <= cutoff_; }

  std::size_t index(unsigned n, unsigned n_bar) const {
    if (!contains(n, n_bar)) {
      throw DomainError("state |" + std::to_string(n) + ", " + std::to_string(n_bar) +
                        "> exceeds Fock cutoff " + std::to_string(cutoff_));
    }
    const std::size_t total = n + n_bar;
    return total * (total + 1) / 2 + n_bar;
  }

  /// (n, n_bar) of basis vector i.
  std::pair<unsigned, unsigned> label(std::size_t i) const { return labels_.at(i); }
  unsigned total(std::size_t i) const { return labels_.at(i).first + labels_.at(i).second; }

  friend bool operator==(const FockBasis& x, const FockBasis& y) { return x.cutoff_ == y.cutoff_; }

 private:
  unsigned cutoff_;
  std::vector<std::pair<unsigned, unsigned>> labels_;
};

inline FockBasis build_basis(unsigned cutoff) { return FockBasis(cutoff); }

enum class Mode { A, B };  // K0, anti-K0

/// Annihilation operator of the given flavor mode; creation is its adjoint.
inline OperatorMatrix build_ladder(const FockBasis& basis, Mode mode) {
  OperatorMatrix m = OperatorMatrix::Zero(basis.size(), basis.size());
  for (std::size_t col = 0; col < basis.dim(); ++col) {
    const auto [n, n_bar] = basis.label(col);
    if (mode == Mode::A && n > 0) {
      m(basis.index(n - 1, n_bar), col) = std::sqrt(static_cast<double>(n));
    } else if (mode == Mode::B && n_bar > 0) {
      m(basis.index(n, n_bar - 1), col) = std::sqrt(static_cast<double>(n_bar));
    }
  }
  return m;
}

/// Annihilator of the mode whose creator is u_a a^+ + u_b b^+,
/// i.e. conj(u_a) a + conj(u_b) b.
inline OperatorMatrix mode_annihilator(const FockBasis& basis, Complex u_a, Complex u_b) {
  return std::conj(u_a) * build_ladder(basis, Mode::A) + std::conj(u_b) * build_ladder(basis, Mode::B);
}

inline OperatorMatrix short_lived_annihilator(const FockBasis& basis, const PhysParams& params) {
  return mode_annihilator(basis, params.p, params.q);
}

inline OperatorMatrix long_lived_annihilator(const FockBasis& basis, const PhysParams& params) {
  return mode_annihilator(basis, params.p, -params.q);
}

/// Projector onto total number <= cutoff - 1, where [x, y^+] is exact.
inline OperatorMatrix interior_projector(const FockBasis& basis) {
  OperatorMatrix m = OperatorMatrix::Zero(basis.size(), basis.size());
  for (std::size_t i = 0; i < basis.dim(); ++i) {
    if (basis.total(i) + 1 <= basis.cutoff()) m(i, i) = 1.0;
  }
  return m;
}

/// w_aa a^+a + w_ab a^+b + w_ba b^+a + w_bb b^+b.
inline OperatorMatrix observable_matrix(const FockBasis& basis, const BilinearObservable& obs) {
  const OperatorMatrix a = build_ladder(basis, Mode::A);
  const OperatorMatrix b = build_ladder(basis, Mode::B);
  return obs.w_aa * (a.adjoint() * a) + obs.w_ab * (a.adjoint() * b) +
         obs.w_ba * (b.adjoint() * a) + obs.w_bb * (b.adjoint() * b);
}

/// Hamiltonian, the two jump operators and K = -(L1^+ L1 + L2^+ L2)/2.
struct LindbladSet {
  FockBasis basis{0};
  OperatorMatrix hamiltonian;
  OperatorMatrix jump_short;  // L1
  OperatorMatrix jump_long;   // L2
  OperatorMatrix dissipative; // K

  std::array<const OperatorMatrix*, 2> jumps() const { return {&jump_short, &jump_long}; }
};

namespace detail {

inline double short_jump_radicand(const PhysParams& params) {
  const double A = params.A_L;
  return params.gamma_S -
         A * A * (params.gamma * params.gamma + params.delta_m * params.delta_m) / params.gamma_L;
}

inline void require_lindblad_domain(const PhysParams& params) {
  if (!(std::abs(params.A_L) < 1.0)) {
    throw DomainError("lindblad set: |A_L| must be < 1, got " + std::to_string(params.A_L));
  }
  if (short_jump_radicand(params) < 0.0) {
    throw DomainError(
        "lindblad set: gamma_S - A_L^2 (gamma^2 + delta_m^2) / gamma_L is negative; "
        "these parameters admit no completely positive semigroup");
  }
}

}  // namespace detail

/// Operators of the master equation written with flavor ladder operators.
inline LindbladSet build_lindblad_set(const PhysParams& params, const FockBasis& basis) {
  detail::require_lindblad_domain(params);
  const double A = params.A_L;
  const Complex pq = params.p * std::conj(params.q);
  const Complex qp = params.q * std::conj(params.p);
  const Complex i{0.0, 1.0};
  const double g = params.gamma;
  const double dg = params.delta_gamma;
  const double dm = params.delta_m;
  const double sqrt_gl = std::sqrt(params.gamma_L);
  const Complex z = (g - i * dm) / sqrt_gl;

  const OperatorMatrix a = build_ladder(basis, Mode::A);
  const OperatorMatrix b = build_ladder(basis, Mode::B);
  const OperatorMatrix n_total = a.adjoint() * a + b.adjoint() * b;
  const OperatorMatrix ab = a.adjoint() * b;
  const OperatorMatrix ba = b.adjoint() * a;

  LindbladSet set;
  set.basis = basis;
  set.hamiltonian = params.mass_mean * n_total - pq / (1.0 - A * A) * (dm + 0.5 * i * A * dg) * ab -
                    qp / (1.0 - A * A) * (dm - 0.5 * i * A * dg) * ba;
  set.jump_short = std::sqrt(detail::short_jump_radicand(params)) *
                   (std::conj(params.p) / (1.0 + A) * a + std::conj(params.q) / (1.0 - A) * b);
  set.jump_long = std::conj(params.p) / (1.0 + A) * (sqrt_gl + A * z) * a -
                  std::conj(params.q) / (1.0 - A) * (sqrt_gl - A * z) * b;
  set.dissipative = -0.5 * g * n_total - pq / (1.0 - A * A) * (0.5 * dg - i * A * dm) * ab -
                    qp / (1.0 - A * A) * (0.5 * dg + i * A * dm) * ba;
  return set;
}

/// The same operators written in the non-orthogonal {|K_S>, |K_L>} basis
/// on the cutoff-1 space {|0>, |K0>, |K0bar>}. Used only to confirm that
/// both forms give one and the same master equation.
inline LindbladSet build_mass_basis_set(const PhysParams& params) {
  detail::require_lindblad_domain(params);
  const FockBasis basis(1);
  const double A = params.A_L;
  const double norm = 1.0 / (1.0 - A * A);
  const Complex i{0.0, 1.0};
  const double m = params.mass_mean;
  const double m_short = m - 0.5 * params.delta_m;
  const double m_long = m + 0.5 * params.delta_m;
  const double sqrt_gl = std::sqrt(params.gamma_L);
  const Complex z = (params.gamma - i * params.delta_m) / sqrt_gl;

  Eigen::Vector3cd vac = Eigen::Vector3cd::Zero();
  vac(basis.index(0, 0)) = 1.0;
  Eigen::Vector3cd ks = Eigen::Vector3cd::Zero();
  ks(basis.index(1, 0)) = params.p;
  ks(basis.index(0, 1)) = params.q;
  Eigen::Vector3cd kl = Eigen::Vector3cd::Zero();
  kl(basis.index(1, 0)) = params.p;
  kl(basis.index(0, 1)) = -params.q;
  const auto ket_bra = [](const Eigen::Vector3cd& x, const Eigen::Vector3cd& y) -> OperatorMatrix {
    return x * y.adjoint();
  };

  LindbladSet set;
  set.basis = basis;
  set.hamiltonian =
      norm * (m_short * ket_bra(ks, ks) + m_long * ket_bra(kl, kl) -
              A * ((m - 0.25 * i * params.delta_gamma) * ket_bra(ks, kl) +
                   (m + 0.25 * i * params.delta_gamma) * ket_bra(kl, ks)));
  set.jump_short = norm * std::sqrt(detail::short_jump_radicand(params)) *
                   (ket_bra(vac, ks) - A * ket_bra(vac, kl));
  set.jump_long = norm * ((sqrt_gl - A * A * z) * ket_bra(vac, kl) -
                          A * (sqrt_gl - z) * ket_bra(vac, ks));
  set.dissipative = -0.5 * (set.jump_short.adjoint() * set.jump_short +
                            set.jump_long.adjoint() * set.jump_long);
  return set;
}

/// Hermitian, unit-trace, positive semidefinite state on a FockBasis.
class DensityMatrix {
 public:
  struct Diagnostics {
    double hermiticity = 0.0;  // max |rho - rho^+|
    double trace_error = 0.0;  // |Tr rho - 1|
    double min_eigenvalue = 0.0;
  };

  DensityMatrix(FockBasis basis, Eigen::MatrixXcd rho) : basis_(std::move(basis)), rho_(std::move(rho)) {
    if (rho_.rows() != basis_.size() || rho_.cols() != basis_.size()) {
      throw DomainError("density matrix dimension does not match the Fock basis");
    }
  }

  const FockBasis& basis() const { return basis_; }
  const Eigen::MatrixXcd& matrix() const { return rho_; }

  Diagnostics diagnostics() const {
    Diagnostics d;
    d.hermiticity = (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
    d.trace_error = std::abs(rho_.trace() - Complex(1.0, 0.0));
    const Eigen::MatrixXcd sym = 0.5 * (rho_ + rho_.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sym, Eigen::EigenvaluesOnly);
    d.min_eigenvalue = es.eigenvalues().minCoeff();
    return d;
  }

  /// Throws `Error` if any invariant is violated beyond tolerance.
  template <class Error = DomainError>
  void validate(double herm_tol = 1e-10, double trace_tol = 1e-10, double eig_tol = 1e-9) const {
    const auto d = diagnostics();
    if (d.hermiticity > herm_tol) {
      throw Error("density matrix not Hermitian: defect " + std::to_string(d.hermiticity));
    }
    if (d.trace_error > trace_tol) {
      throw Error("density matrix trace off by " + std::to_string(d.trace_error));
    }
    if (d.min_eigenvalue < -eig_tol) {
      throw Error("density matrix has eigenvalue " + std::to_string(d.min_eigenvalue));
    }
  }

  /// Tr[rho M].
  double expectation(const OperatorMatrix& op) const { return (rho_ * op).trace().real(); }

 private:
  FockBasis basis_;
  Eigen::MatrixXcd rho_;
};

inline DensityMatrix pure_state(const FockBasis& basis, const Eigen::VectorXcd& ket) {
  const double nrm = ket.norm();
  if (!(nrm > 0.0)) throw DomainError("pure_state: zero vector");
  const Eigen::VectorXcd k = ket / nrm;
  return DensityMatrix(basis, k * k.adjoint());
}

inline Eigen::VectorXcd flavor_ket(const FockBasis& basis, unsigned n, unsigned n_bar) {
  Eigen::VectorXcd ket = Eigen::VectorXcd::Zero(basis.size());
  ket(basis.index(n, n_bar)) = 1.0;
  return ket;
}

/// |n_S> (sign = +1) or |n_L> (sign = -1) from the binomial expansion
/// sum_k sqrt(C(n,k)) p^{n-k} (sign q)^k |n-k, k>.
inline Eigen::VectorXcd mass_eigen_ket(const FockBasis& basis, const PhysParams& params, unsigned n,
                                       int sign) {
  if (n > basis.cutoff()) {
    throw DomainError("K_S/K_L state with " + std::to_string(n) + " particles exceeds cutoff " +
                      std::to_string(basis.cutoff()));
  }
  Eigen::VectorXcd ket = Eigen::VectorXcd::Zero(basis.size());
  double binom = 1.0;
  for (unsigned k = 0; k <= n; ++k) {
    const Complex coeff = std::sqrt(binom) * std::pow(params.p, static_cast<int>(n - k)) *
                          std::pow(static_cast<double>(sign) * params.q, static_cast<int>(k));
    ket(basis.index(n - k, k)) = coeff;
    binom = binom * (n - k) / (k + 1);
  }
  return ket;
}

inline DensityMatrix make_state_flavor(const FockBasis& basis, unsigned n, unsigned n_bar) {
  return pure_state(basis, flavor_ket(basis, n, n_bar));
}

inline DensityMatrix make_state_KS(const FockBasis& basis, const PhysParams& params, unsigned n) {
  const Eigen::VectorXcd ket = mass_eigen_ket(basis, params, n, +1);
  if (std::abs(ket.norm() - 1.0) > 1e-12) throw DomainError("|n_S> is not normalized");
  return DensityMatrix(basis, ket * ket.adjoint());
}

inline DensityMatrix make_state_KL(const FockBasis& basis, const PhysParams& params, unsigned n) {
  const Eigen::VectorXcd ket = mass_eigen_ket(basis, params, n, -1);
  if (std::abs(ket.norm() - 1.0) > 1e-12) throw DomainError("|n_L> is not normalized");
  return DensityMatrix(basis, ket * ket.adjoint());
}

/// p1|K0><K0| + p2|K0bar><K0bar| + w|K0><K0bar| + w*|K0bar><K0| + (1-p1-p2)|0><0|.
inline DensityMatrix make_state_mixed_single(const FockBasis& basis, double p1, double p2, Complex w) {
  if (basis.cutoff() < 1) throw DomainError("single-particle state needs cutoff >= 1");
  if (!(p1 >= 0.0 && p1 <= 1.0)) throw DomainError("mixed state: p1 outside [0, 1]");
  if (!(p2 >= 0.0 && p2 <= 1.0)) throw DomainError("mixed state: p2 outside [0, 1]");
  if (!(p1 + p2 <= 1.0)) throw DomainError("mixed state: p1 + p2 > 1");
  if (!(std::norm(w) <= p1 * p2)) throw DomainError("mixed state: |w|^2 > p1 p2");
  const std::size_t vac = basis.index(0, 0);
  const std::size_t k0 = basis.index(1, 0);
  const std::size_t k0bar = basis.index(0, 1);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  rho(k0, k0) = p1;
  rho(k0bar, k0bar) = p2;
  rho(k0, k0bar) = w;
  rho(k0bar, k0) = std::conj(w);
  rho(vac, vac) = 1.0 - p1 - p2;
  return DensityMatrix(basis, std::move(rho));
}

/// Right-hand side -i[H, X] + {K, X} + sum_i L_i X L_i^+ for any matrix X.
inline Eigen::MatrixXcd master_rhs(const LindbladSet& ops, const Eigen::MatrixXcd& x) {
  const Complex i{0.0, 1.0};
  Eigen::MatrixXcd out = -i * (ops.hamiltonian * x - x * ops.hamiltonian) + ops.dissipative * x +
                         x * ops.dissipative;
  for (const auto* jump : ops.jumps()) out.noalias() += (*jump) * x * jump->adjoint();
  return out;
}

/// Linear propagation of an arbitrary (not necessarily Hermitian) matrix.
inline std::vector<Eigen::MatrixXcd> propagate_operator_grid(const LindbladSet& ops,
                                                             const Eigen::MatrixXcd& x0,
                                                             std::span<const double> times,
                                                             const ode::Options& opt = {}) {
  for (double t : times) detail::require_forward_time(t);
  auto rhs = [&ops](double, const Eigen::MatrixXcd& x) { return master_rhs(ops, x); };
  return ode::integrate_grid(rhs, x0, 0.0, times, opt);
}

/// Density matrices at each of `times` (measured from the initial state).
///
/// Re-symmetrizes after each accepted step; Hermiticity drift above 1e-10
/// in a single step, or an output violating the density-matrix invariants,
/// raises IntegrationError.
inline std::vector<DensityMatrix> evolve_density_grid(const LindbladSet& ops, const DensityMatrix& rho0,
                                                      std::span<const double> times,
                                                      const ode::Options& opt = {}) {
  if (!(rho0.basis() == ops.basis)) throw DomainError("state and operators use different cutoffs");
  rho0.validate();
  for (double t : times) detail::require_forward_time(t);
  auto rhs = [&ops](double, const Eigen::MatrixXcd& x) { return master_rhs(ops, x); };
  auto resymmetrize = [](Eigen::MatrixXcd& x) {
    const double drift = (x - x.adjoint()).cwiseAbs().maxCoeff();
    if (drift > 1e-10) {
      throw IntegrationError("Hermiticity drift " + std::to_string(drift) + " in one step");
    }
    x = (0.5 * (x + x.adjoint())).eval();
  };
  const auto states = ode::integrate_grid(rhs, rho0.matrix(), 0.0, times, opt, resymmetrize);
  std::vector<DensityMatrix> out;
  out.reserve(states.size());
  for (const auto& s : states) {
    DensityMatrix rho(ops.basis, s);
    rho.validate<IntegrationError>();
    out.push_back(std::move(rho));
  }
  return out;
}

inline DensityMatrix evolve_density(const LindbladSet& ops, const DensityMatrix& rho0, double t,
                                    double rel_tol = 1e-10, double abs_tol = 1e-12) {
  ode::Options opt;
  opt.rel_tol = rel_tol;
  opt.abs_tol = abs_tol;
  const double times[] = {t};
  return evolve_density_grid(ops, rho0, times, opt).front();
}

/// Liouvillian acting on column-stacked vec(rho), for the matrix-exponential
/// cross-check.
inline Eigen::MatrixXcd liouvillian_matrix(const LindbladSet& ops) {
  const Eigen::Index d = ops.basis.size();
  const Eigen::Index d2 = d * d;
  Eigen::MatrixXcd out(d2, d2);
  Eigen::MatrixXcd unit = Eigen::MatrixXcd::Zero(d, d);
  for (Eigen::Index col = 0; col < d2; ++col) {
    unit.setZero();
    unit(col % d, col / d) = 1.0;
    out.col(col) = master_rhs(ops, unit).reshaped();
  }
  return out;
}

inline DensityMatrix evolve_density_expm(const LindbladSet& ops, const DensityMatrix& rho0, double t) {
  detail::require_forward_time(t);
  const Eigen::Index d = ops.basis.size();
  const Eigen::MatrixXcd prop = (liouvillian_matrix(ops) * Complex(t, 0.0)).exp();
  const Eigen::VectorXcd v = prop * rho0.matrix().reshaped();
  return DensityMatrix(ops.basis, v.reshaped(d, d));
}

struct FactorizationReport {
  double max_deviation = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::size_t cases = 0;
};

namespace detail {

// Two-particle check for single-particle modes x and y (normalized C^2
// vectors in the (K0, K0bar) basis). Returns the largest mismatch between
// the cutoff-2 evolution of the Fock state x^+ y^+ |0> and the image of the
// evolved first-quantized pair state under the occupation-number map.
inline double two_particle_deviation(const LindbladSet& single, const LindbladSet& pair,
                                     const Eigen::Vector2cd& x, const Eigen::Vector2cd& y, double t,
                                     const ode::Options& opt) {
  // Single-particle channel on the matrix units of the one-particle sector;
  // the pair state never populates the others.
  std::array<std::array<Eigen::Matrix3cd, 3>, 3> channel;
  const double times[] = {t};
  for (int i = 1; i < 3; ++i) {
    for (int j = 1; j < 3; ++j) {
      Eigen::MatrixXcd unit = Eigen::MatrixXcd::Zero(3, 3);
      unit(i, j) = 1.0;
      channel[i][j] = propagate_operator_grid(single, unit, times, opt).front();
    }
  }

  // First-quantized symmetric pair state; index 0 is the decayed slot.
  Eigen::Matrix3cd psi = Eigen::Matrix3cd::Zero();
  for (int i = 0; i < 2; ++i) {
    for (int k = 0; k < 2; ++k) psi(i + 1, k + 1) = x(i) * y(k) + y(i) * x(k);
  }
  psi /= psi.norm();

  // rho2[i][k][j][l] = <ik| (Phi x Phi)(|psi><psi|) |jl>.
  Complex rho2[3][3][3][3] = {};
  for (int i0 = 1; i0 < 3; ++i0)
    for (int k0 = 1; k0 < 3; ++k0)
      for (int j0 = 1; j0 < 3; ++j0)
        for (int l0 = 1; l0 < 3; ++l0) {
          const Complex c = psi(i0, k0) * std::conj(psi(j0, l0));
          if (c == 0.0) continue;
          const auto& left = channel[i0][j0];
          const auto& right = channel[k0][l0];
          for (int i = 0; i < 3; ++i)
            for (int k = 0; k < 3; ++k)
              for (int j = 0; j < 3; ++j)
                for (int l = 0; l < 3; ++l) rho2[i][k][j][l] += c * left(i, j) * right(k, l);
        }

  const FockBasis& basis = pair.basis;
  const auto occupation = [](int i, int k) {
    return std::pair<unsigned, unsigned>((i == 1) + (k == 1), (i == 2) + (k == 2));
  };
  const auto count = [](int i, int k) { return (i != 0) + (k != 0); };

  Eigen::MatrixXcd mapped = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  double unmapped = 0.0;

  // Two-particle sector through symmetric unit vectors.
  const std::pair<unsigned, unsigned> two[] = {{2, 0}, {1, 1}, {0, 2}};
  const auto sym_vector = [&](std::pair<unsigned, unsigned> occ) {
    Eigen::Matrix3cd v = Eigen::Matrix3cd::Zero();
    for (int i = 1; i < 3; ++i)
      for (int k = 1; k < 3; ++k)
        if (occupation(i, k) == occ) v(i, k) = 1.0;
    return Eigen::Matrix3cd(v / v.norm());
  };
  for (auto o : two) {
    for (auto o2 : two) {
      const Eigen::Matrix3cd u = sym_vector(o);
      const Eigen::Matrix3cd v = sym_vector(o2);
      Complex acc = 0.0;
      for (int i = 1; i < 3; ++i)
        for (int k = 1; k < 3; ++k)
          for (int j = 1; j < 3; ++j)
            for (int l = 1; l < 3; ++l) acc += std::conj(u(i, k)) * rho2[i][k][j][l] * v(j, l);
      mapped(basis.index(o.first, o.second), basis.index(o2.first, o2.second)) = acc;
    }
  }
  // Weight outside the symmetric two-particle subspace is lost by the map.
  for (int i = 1; i < 3; ++i)
    for (int k = 1; k < 3; ++k)
      for (int j = 1; j < 3; ++j)
        for (int l = 1; l < 3; ++l) {
          Complex sym = 0.0;
          for (auto o : two)
            for (auto o2 : two) {
              const Eigen::Matrix3cd u = sym_vector(o);
              const Eigen::Matrix3cd v = sym_vector(o2);
              sym += u(i, k) * mapped(basis.index(o.first, o.second),
                                       basis.index(o2.first, o2.second)) *
                     std::conj(v(j, l));
            }
          unmapped = std::max(unmapped, std::abs(rho2[i][k][j][l] - sym));
        }

  // One surviving particle: merge "first decayed" and "second decayed".
  for (int v = 1; v < 3; ++v) {
    for (int w = 1; w < 3; ++w) {
      const auto ov = occupation(v, 0);
      const auto ow = occupation(w, 0);
      mapped(basis.index(ov.first, ov.second), basis.index(ow.first, ow.second)) =
          rho2[v][0][w][0] + rho2[0][v][0][w];
      unmapped = std::max(unmapped, std::abs(rho2[v][0][0][w]));
      unmapped = std::max(unmapped, std::abs(rho2[0][v][w][0]));
    }
  }
  mapped(basis.index(0, 0), basis.index(0, 0)) = rho2[0][0][0][0];

  // Coherences between sectors with different particle numbers.
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l)
          if (count(i, k) != count(j, l)) unmapped = std::max(unmapped, std::abs(rho2[i][k][j][l]));

  // Fock side.
  Eigen::VectorXcd ket = Eigen::VectorXcd::Zero(basis.size());
  ket(basis.index(0, 0)) = 1.0;
  const OperatorMatrix a = build_ladder(basis, Mode::A);
  const OperatorMatrix b = build_ladder(basis, Mode::B);
  ket = (y(0) * a.adjoint() + y(1) * b.adjoint()) * ket;
  ket = (x(0) * a.adjoint() + x(1) * b.adjoint()) * ket;
  const DensityMatrix rho0 = pure_state(basis, ket);
  const DensityMatrix rho_t = evolve_density_grid(pair, rho0, times, opt).front();

  return std::max(unmapped, (rho_t.matrix() - mapped).cwiseAbs().maxCoeff());
}

}  // namespace detail

/// Compares the cutoff-2 evolution of two-particle states with the
/// symmetrized tensor product of two single-particle (cutoff-1) evolutions.
inline FactorizationReport check_two_particle_factorization(const PhysParams& params, double t,
                                                            double tol = 1e-8) {
  detail::require_forward_time(t);
  const LindbladSet single = build_lindblad_set(params, FockBasis(1));
  const LindbladSet pair = build_lindblad_set(params, FockBasis(2));
  ode::Options opt;
  opt.rel_tol = 1e-12;
  opt.abs_tol = 1e-14;

  const Eigen::Vector2cd k0(1.0, 0.0);
  const Eigen::Vector2cd k0bar(0.0, 1.0);
  const Eigen::Vector2cd ks(params.p, params.q);
  const Eigen::Vector2cd kl(params.p, -params.q);
  const std::pair<Eigen::Vector2cd, Eigen::Vector2cd> cases[] = {
      {k0, k0}, {k0, k0bar}, {k0bar, k0bar}, {ks, ks}, {ks, kl}, {k0, kl}};

  FactorizationReport report;
  report.tolerance = tol;
  for (const auto& [x, y] : cases) {
    report.max_deviation =
        std::max(report.max_deviation, detail::two_particle_deviation(single, pair, x, y, t, opt));
    ++report.cases;
  }
  report.passed = report.max_deviation <= tol;
  return report;
}

}  // namespace kaon
