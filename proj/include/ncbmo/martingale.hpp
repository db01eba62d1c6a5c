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
#include <memory>
#include <vector>

#include "ncbmo/algebra.hpp"

namespace ncbmo {

/// A martingale identified with its last value x = x_M, together with the
/// adapted sequence x_n = E_n(x) and the differences d_n = x_n − x_{n−1}.
class Martingale {
 public:
  const Filtration& filtration() const { return *filtration_; }
  const std::shared_ptr<const Filtration>& filtration_ptr() const { return filtration_; }

  const Matrix& limit() const { return x_; }
  int size() const { return static_cast<int>(values_.size()); }
  /// x_n for -1 ≤ n ≤ M; x_{-1} = 0.
  Matrix value(int n) const;
  const std::vector<Matrix>& values() const { return values_; }
  const std::vector<Matrix>& differences() const { return diffs_; }

  /// The martingale of x*.
  Martingale adjoint() const;
  Martingale scaled(Complex lambda) const;

  /// max ‖E_n(x_m) − x_{min(n,m)}‖_F / max(1, ‖x‖_F).
  double martingale_residual() const;
  /// max |φ(d_j* d_k)| over j ≠ k, relative to φ(x*x).
  double orthogonality_residual() const;

 private:
  friend Martingale decompose(std::shared_ptr<const Filtration>, const Matrix&);
  Martingale() = default;

  std::shared_ptr<const Filtration> filtration_;
  Matrix x_;
  std::vector<Matrix> values_;
  std::vector<Matrix> diffs_;
};

/// x must lie in the top level N_M. Throws DimensionMismatch otherwise.
Martingale decompose(std::shared_ptr<const Filtration> filtration, const Matrix& x);
Martingale decompose(const Filtration& filtration, const Matrix& x);

struct SquareFunctions {
  Matrix column;  // Σ d_k* d_k
  Matrix row;     // Σ d_k d_k*
  /// conditioned[m][n] = E_n((x_m − x_{n−1})*(x_m − x_{n−1})) for n ≤ m.
  std::vector<std::vector<Matrix>> conditioned;
};

SquareFunctions square_functions(const Martingale& mart);

/// (Dyadic step functions at scale 2^{-j}) ⊗ M_k for j = 0..depth, stored
/// cell-major (index = cell·k + fiber index), with density
/// (1/2^depth) ⊗ fiber. Throws TooLarge when 2^depth·k > 64.
Filtration dyadic_classical_filtration(int depth, Index fiber_dim, const State& fiber);

/// The k-th Rademacher function on 2^depth cells, k = 1..depth:
/// +1 where the k-th binary digit (most significant first) is 0.
double rademacher(int k, Index cell, int depth);

enum class SignMode {
  Rademacher,  // ε_k(t) = r_k(t)
  Constant,    // ε_k ≡ +1
};

/// Martingale valued in L_∞([0,1], 2^depth cells) ⊗ M_k with a fiber density,
/// stored as one k×k matrix per cell. E_j averages over dyadic blocks of
/// 2^{depth−j} cells. Used where the dense encoding would be too large.
struct CellMartingale {
  int depth = 0;
  State fiber = State::tracial(1);
  std::vector<Matrix> cells;  // x, one entry per cell

  Index fiber_dim() const { return fiber.dim(); }
  Index num_cells() const { return Index{1} << depth; }
  /// Cells of x_j = E_j(x); j = -1 gives zeros.
  std::vector<Matrix> value(int j) const;
  /// Cells of E_j(y) for an arbitrary cell list y.
  std::vector<Matrix> expect(int j, const std::vector<Matrix>& y) const;
  CellMartingale adjoint() const;
  /// Dense block-diagonal matrix on the dyadic_classical_filtration ambient.
  Matrix dense() const;
};

/// Cell encoding of x = Σ_{k=1}^n ε_k ⊗ e_{1k} at depth n with normalized
/// trace on M_n. Throws TooLarge when 2^n·n > 4096.
CellMartingale rademacher_cells(int n, SignMode mode = SignMode::Rademacher);

struct RademacherExample {
  std::shared_ptr<const Filtration> filtration;
  Martingale martingale;
};

/// Dense version of rademacher_cells on dyadic_classical_filtration(n, n).
/// Throws TooLarge when 2^n·n > 64 (n ≤ 4).
RademacherExample rademacher_matrix_martingale(int n, SignMode mode = SignMode::Rademacher);

enum class Normalize { Bmo, Lp, None };

struct RandomMartingaleOptions {
  Normalize normalize = Normalize::Bmo;
  bool hermitian = false;
  double p = 2.0;  // exponent for Normalize::Lp
};

/// Gaussian element of the top level, rescaled so the chosen norm is 1.
Martingale random_martingale(std::shared_ptr<const Filtration> filtration,
                             std::uint64_t seed,
                             const RandomMartingaleOptions& options = {});

}  // namespace ncbmo
