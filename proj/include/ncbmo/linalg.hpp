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

#include <Eigen/Dense>
#include <complex>
#include <limits>
#include <random>

namespace ncbmo {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Eigenvalues ascending; eigenvectors are the columns of a unitary matrix.
/// Each eigenvector's phase is fixed so that its largest-modulus entry (first
/// one on ties) is real and positive, which makes the output reproducible.
struct HermitianEig {
  RealVector eigenvalues;
  Matrix eigenvectors;

  /// U f(Λ) U*.
  template <typename F>
  Matrix apply(F&& f) const {
    RealVector mapped(eigenvalues.size());
    for (Index i = 0; i < eigenvalues.size(); ++i) mapped(i) = f(eigenvalues(i));
    return eigenvectors * mapped.asDiagonal() * eigenvectors.adjoint();
  }
};

/// Orthogonal projection, P = P* = P².
struct Projection {
  Matrix matrix;
  Index rank = 0;
};

/// Relative Hermiticity residual ‖H − H*‖_F / max(1, ‖H‖_F).
double hermiticity_residual(const Matrix& h);

/// Throws NonHermitian when the residual exceeds 1e-10.
HermitianEig herm_eig(const Matrix& h);

/// A^s for positive semidefinite A. Negative powers require a strictly
/// positive input (smallest eigenvalue above 1e-12·λ_max).
Matrix mat_power(const Matrix& a, double s);

/// (Σ σ_i^p)^{1/p} with the unnormalized trace; p = kInf gives σ_max.
double schatten_norm(const Matrix& a, double p);

/// Operator norm σ_max.
double op_norm(const Matrix& a);

/// Singular values, descending.
RealVector singular_values(const Matrix& a);

/// |A| = (A*A)^{1/2}.
Matrix op_abs(const Matrix& a);

/// Sum of eigenprojections of H with eigenvalue in [lo, hi].
Projection spectral_projection(const Matrix& h, double lo, double hi);

/// The element N of the dual Schatten class with ‖N‖_{p'} = 1 and
/// Re tr(N* z) = ‖z‖_p, namely U Σ^{p-1} V* / ‖z‖_p^{p-1}. Zero for z = 0.
Matrix norming_element(const Matrix& z, double p);

/// Conjugate exponent, 1/p + 1/p' = 1.
double conjugate_exponent(double p);

Matrix hermitian_part(const Matrix& a);

/// Independent standard complex Gaussian entries (real and imaginary parts
/// each N(0,1)).
Matrix random_gaussian(Index rows, Index cols, std::mt19937_64& rng);

/// Kronecker product A ⊗ B.
Matrix kron(const Matrix& a, const Matrix& b);

/// Matrix unit e_{ij} of size n.
Matrix matrix_unit(Index n, Index i, Index j);

/// Column-major vectorisation and its inverse.
Eigen::VectorXcd vec(const Matrix& a);
Matrix unvec(const Eigen::VectorXcd& v, Index n);

}  // namespace ncbmo
