// Copyright 2026 The ncbmo Authors
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

#include <memory>
#include <optional>
#include <vector>

#include "ncbmo/linalg.hpp"

namespace ncbmo {

/// Unital *-subalgebra of M_N, stored through a trace-orthonormal basis
/// (⟨a,b⟩ = Tr(a*b)). The full algebra keeps no explicit basis.
class Subalgebra {
 public:
  /// Orthonormalizes a spanning set without checking closure. Used by the
  /// structured builders below whose output is closed by construction.
  static Subalgebra from_spanning_set(
      Index ambient_dim, const std::vector<Matrix>& spanning);

  static Subalgebra full(Index ambient_dim);

  Index ambient_dim() const { return n_; }
  /// Dimension of the algebra as a vector space.
  Index dim() const { return full_ ? n_ * n_ : basis_.cols(); }
  bool is_full() const { return full_; }
  bool contains_unit() const { return unit_; }

  /// Basis matrices. Materialized on demand; avoid for large full algebras.
  std::vector<Matrix> basis() const;
  /// N² × dim matrix whose columns are vec(b_i). Empty for full algebras.
  const Matrix& basis_columns() const { return basis_; }

  /// Trace-orthogonal projection onto the algebra.
  Matrix project(const Matrix& x) const;
  /// ‖x − project(x)‖_F / max(1, ‖x‖_F).
  double membership_residual(const Matrix& x) const;
  bool contains(const Matrix& x, double tol = 1e-9) const {
    return membership_residual(x) <= tol;
  }

  /// Largest membership residual of b_i* and b_i b_j over the basis.
  double closure_residual() const;
  /// Largest deviation of the basis Gram matrix from the identity.
  double orthonormality_residual() const;
  /// Largest ‖b_i b_j − b_j b_i‖_F over the basis.
  double commutator_residual() const;

 private:
  Subalgebra(Index n, Matrix basis, bool full);

  Index n_ = 0;
  Matrix basis_;
  bool full_ = false;
  bool unit_ = false;
};

/// (block_size, multiplicity) pair of the canonical form ⊕_k M_{d_k} ⊗ 1_{m_k}.
struct BlockSpec {
  Index block_size;
  Index multiplicity;
};

/// Smallest unital *-subalgebra containing the generators.
Subalgebra build_subalgebra(Index ambient_dim, const std::vector<Matrix>& generators);

/// ⊕_k M_{d_k} ⊗ 1_{m_k} with consecutive blocks of size d_k·m_k.
Subalgebra block_subalgebra(const std::vector<BlockSpec>& spec);

Subalgebra diagonal_algebra(Index n);
Subalgebra scalar_algebra(Index n);
/// A ⊗ B inside M_{N_A} ⊗ M_{N_B}, first factor major.
Subalgebra tensor(const Subalgebra& a, const Subalgebra& b);

/// Faithful state φ(x) = Tr(Dx).
class State {
 public:
  /// Validates Hermiticity, Tr D = 1 to 1e-12 and min eigenvalue > 1e-12.
  explicit State(Matrix density);

  static State tracial(Index n);

  Index dim() const { return density_.rows(); }
  const Matrix& density() const { return density_; }
  const HermitianEig& eig() const { return eig_; }

  /// D^s for real s.
  Matrix power(double s) const;
  /// D^{it}.
  Matrix imaginary_power(double t) const;
  Complex expect(const Matrix& x) const;
  bool is_tracial(double tol = 1e-12) const;

 private:
  Matrix density_;
  HermitianEig eig_;
};

/// State-preserving conditional expectation onto one filtration level,
/// realized as the orthogonal projection for ⟨a,b⟩_φ = Tr(D a* b).
class ConditionalExpectation {
 public:
  static ConditionalExpectation zero(Index n);
  static ConditionalExpectation identity(Index n);
  static ConditionalExpectation onto(const Subalgebra& level, const State& state);

  Matrix apply(const Matrix& x) const;
  /// N² × N² matrix S with S vec(x) = vec(E(x)).
  Matrix superoperator() const;
  /// Choi matrix Σ e_ij ⊗ E(e_ij).
  Matrix choi() const;
  Index ambient_dim() const { return n_; }

 private:
  enum class Kind { Zero, Identity, Projection };
  Index n_ = 0;
  Kind kind_ = Kind::Zero;
  Matrix q_;  // vec of a φ-orthonormal basis
  Matrix w_;  // vec of q_i D
};

/// Validated increasing chain N_0 ⊆ … ⊆ N_M with its conditional
/// expectations. Immutable once built.
class Filtration {
 public:
  const State& state() const { return state_; }
  const std::vector<Subalgebra>& levels() const { return levels_; }
  /// Number of levels M + 1.
  int size() const { return static_cast<int>(levels_.size()); }
  int top() const { return size() - 1; }
  Index ambient_dim() const { return state_.dim(); }
  /// E_n for -1 ≤ n ≤ M; E_{-1} is the zero map.
  const ConditionalExpectation& expectation(int n) const;
  Matrix expect(int n, const Matrix& x) const { return expectation(n).apply(x); }
  /// Residual of Ad_D(N_n) ⊆ N_n measured during validation.
  double modular_residual(int n) const { return modular_residuals_.at(n); }

 private:
  friend Filtration validate_filtration(State, std::vector<Subalgebra>);
  Filtration(State state, std::vector<Subalgebra> levels);

  State state_;
  std::vector<Subalgebra> levels_;
  std::vector<ConditionalExpectation> exps_;
  ConditionalExpectation zero_;
  std::vector<double> modular_residuals_;
};

/// Checks the inclusion chain, faithfulness, D ∈ N_M and Ad_D(N_n) = N_n,
/// then builds E_n. Throws NotIncreasing, NotModularInvariant or
/// StateNotFaithful with the offending level in the message.
Filtration validate_filtration(State state, std::vector<Subalgebra> levels);

inline const ConditionalExpectation& conditional_expectation(
    const Filtration& f, int n) {
  return f.expectation(n);
}

/// Conditional expectation extended to L_p elements:
/// z = D^{(1-θ)/p} x D^{θ/p} ↦ D^{(1-θ)/p} E_n(x) D^{θ/p}. Independent of θ on
/// validated filtrations.
Matrix expect_lp(const Filtration& f, int n, const Matrix& z, double p, double theta = 0.5);

/// σ_t(x) = D^{it} x D^{-it}.
Matrix modular_flow(const State& state, const Matrix& x, double t);

struct LpElement {
  Matrix matrix;
  double p;
  double eta;
  std::optional<Matrix> provenance;
};

/// D^{(1-η)/p} x D^{η/p}; p = ∞ returns x.
LpElement embed_lp(const State& state, const Matrix& x, double p, double eta);

/// Schatten p-norm of embed_lp(state, x, p, eta).
double lp_norm(const State& state, const Matrix& x, double p, double eta = 0.5);

}  // namespace ncbmo
