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

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ncbmo/martingale.hpp"

namespace ncbmo {

/// Result of a norm evaluation. `value` is exact for closed-form norms and a
/// certified lower bound for optimization-defined ones.
struct NormReport {
  std::string name;
  double value = 0.0;
  std::optional<double> upper_bound;
  /// Maximizing multiplier (BMO_p) or dual sequence (sup-norms).
  std::vector<Matrix> witness;
  /// Pair (n, m) attaining the value, when meaningful.
  int level_n = -1;
  int level_m = -1;
  bool adjoint = false;  // witness belongs to x* rather than x
  int iterations = 0;
  int restarts = 0;
  bool converged = true;
};

// BMO^c and friends

/// sup_{n≤m} ‖E_n((x_m − x_{n−1})*(x_m − x_{n−1}))‖^{1/2}.
double bmo_c(const Martingale& mart);
double bmo_r(const Martingale& mart);
double bmo(const Martingale& mart);

/// ‖E_n(x*x)‖^{1/2}.
double conditioned_linf_c(const Martingale& mart, int n);

/// ‖(Σ_k a_k* a_k)^{1/2}‖_p with a_k = embed_lp(d_k, p, eta).
double hp_c(const Martingale& mart, double p, double eta = 0.5);
double hp(const Martingale& mart, double p, double eta = 0.5);

/// ‖(Σ_k z_k* z_k)^{1/2}‖_p for matrices already in L_p.
double lp_l2c_norm(const std::vector<Matrix>& terms, double p);

/// (E_n(x_n))_n. Throws LengthMismatch unless there is one term per level.
std::vector<Matrix> stein_projection(const std::vector<Matrix>& terms, const Filtration& f);

// Vector-valued sup-norm

/// Optional factorization x_k = a w_k a* with Hermitian w_k, giving the
/// majorant ‖w‖_∞ a a*.
struct SupNormFactorization {
  Matrix a;
  std::vector<Matrix> w;
};

struct SupNormProblem {
  std::vector<Matrix> terms;  // PSD
  double q = 1.0;
  std::optional<SupNormFactorization> factorization;
};

struct SupNormOptions {
  int restarts = 4;
  int max_iterations = 400;
  std::uint64_t seed = 0x5eed;
  double tolerance = 1e-12;
};

/// Brackets ‖sup_k x_k‖_q. The lower bound is the objective of a feasible dual
/// sequence (returned as the witness); the upper bound is the best of
/// ‖Σ x_k‖_q, the caller's factorization, and a majorant a ≥ x_k built from
/// the dual iterate. Commuting terms are solved exactly. Throws NotPSD.
NormReport sup_norm_bracket(const SupNormProblem& problem, const SupNormOptions& options = {});

/// Objective Σ Tr(x_k y_k) and the feasibility ratio ‖Σ y_k‖_{q'}.
double sup_norm_objective(const std::vector<Matrix>& terms, const std::vector<Matrix>& dual);
double sup_norm_dual_norm(const std::vector<Matrix>& dual, double q);

/// sup_m ‖sup_{n≤m} D^{1/p} s_{c,n,m} D^{1/p}‖_{p/2}^{1/2}. Throws BadExponent for
/// p < 2; p = ∞ gives bmo_c.
NormReport lp_c_mo(const Martingale& mart, double p, const SupNormOptions& options = {});

// BMO_p

struct BmoPOptions {
  int restarts = 8;  // total starts including the deterministic seeds
  int max_iterations = 500;
  std::uint64_t seed = 0xb3a0;
  /// Stop when the relative gain over `window` steps is below `tolerance`.
  double tolerance = 1e-9;
  int window = 20;
  /// Restrict to positive multipliers a ≥ 0.
  bool positive = false;
  /// Also scan m < M. By contraction of E_m these never exceed m = M.
  bool all_pairs = false;
};

/// sup_{n≤m} sup_{a∈L_p(N_n),‖a‖_p≤1} ‖(x_m − x_{n−1}) a‖_p as a lower bound with
/// the maximizing a as witness. L_p(N_n) is modelled as N_n D^{1/p}.
/// Throws BadExponent (p < 2) and OptimizerDiverged.
NormReport bmo_p_c(const Martingale& mart, double p, const BmoPOptions& options = {});
NormReport bmo_p(const Martingale& mart, double p, const BmoPOptions& options = {});

/// ‖y a‖_p / ‖a‖_p.
double bmo_p_objective(const Matrix& y, const Matrix& a, double p);

/// Best value of the deterministic seed a = P D^{1/p} over n and over x, x*,
/// with P the top spectral projection of E_n(y*y). It is at least bmo(x).
double bmo_p_seeded(const Martingale& mart, double p);

/// sup_{n≤m} max_atoms E_n(|x_m − x_{n−1}|^p)^{1/p} for simultaneously
/// diagonal instances. Throws NotCommutative.
double classical_bmo_p_oracle(const Martingale& mart, double p);

/// sup_{n} ‖E_n(|x − x_{n−1}|^p)‖^{1/p}, the quantity of the open problem on
/// the noncommutative BMO_p. Not a norm in general.
double conditioned_p_quantity(const Martingale& mart, double p);

// Cell-encoded martingales

double cell_lp_norm(const CellMartingale& x, double p, double eta = 0.5);
double cell_bmo_c(const CellMartingale& x);
double cell_bmo_r(const CellMartingale& x);

}  // namespace ncbmo
