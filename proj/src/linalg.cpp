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

#include "ncbmo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ncbmo/error.hpp"

namespace ncbmo {

namespace {

constexpr double kHermitianTol = 1e-10;
constexpr double kRankTol = 1e-12;

void fix_phases(Matrix& u) {
  for (Index c = 0; c < u.cols(); ++c) {
    Index best = 0;
    double best_abs = -1.0;
    for (Index r = 0; r < u.rows(); ++r) {
      double a = std::abs(u(r, c));
      // strict comparison keeps the first index on ties
      if (a > best_abs * (1.0 + 1e-12)) {
        best_abs = a;
        best = r;
      }
    }
    if (best_abs > 0.0) u.col(c) *= std::conj(u(best, c)) / best_abs;
  }
}

// Eigenpairs of A*A. Much cheaper than an SVD at the sizes used here and
// accurate for the p >= 2 quantities built from it.
Eigen::SelfAdjointEigenSolver<Matrix> gram_eig(const Matrix& a) {
  Matrix g = a.adjoint() * a;
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (g + g.adjoint()));
}

// (Σ λ_i^{p/2})^{1/p} for λ the clipped eigenvalues of A*A.
double schatten_from_gram(const RealVector& lambda, double p) {
  RealVector l = lambda.cwiseMax(0.0);
  double lmax = l.size() ? l.maxCoeff() : 0.0;
  if (lmax == 0.0) return 0.0;
  if (std::isinf(p)) return std::sqrt(lmax);
  double acc = 0.0;
  for (Index i = 0; i < l.size(); ++i) acc += std::pow(l(i) / lmax, p / 2.0);
  return std::sqrt(lmax) * std::pow(acc, 1.0 / p);
}

}  // namespace

double hermiticity_residual(const Matrix& h) {
  if (h.rows() != h.cols()) return kInf;
  double scale = std::max(1.0, h.norm());
  return (h - h.adjoint()).norm() / scale;
}

HermitianEig herm_eig(const Matrix& h) {
  if (h.rows() != h.cols() || h.rows() == 0)
    throw Error(ErrorCode::NonHermitian, "matrix is not square");
  double res = hermiticity_residual(h);
  if (!(res <= kHermitianTol))
    throw Error(
        ErrorCode::NonHermitian,
        "Hermiticity residual " + std::to_string(res) + " exceeds 1e-10");
  Matrix sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> solver(sym);
  HermitianEig out{solver.eigenvalues(), solver.eigenvectors()};
  fix_phases(out.eigenvectors);
  return out;
}

Matrix mat_power(const Matrix& a, double s) {
  HermitianEig eig = herm_eig(a);
  double lmax = std::max(0.0, eig.eigenvalues.maxCoeff());
  double cutoff = kRankTol * lmax;
  double lmin = eig.eigenvalues.minCoeff();
  if (lmin < -1e-9 * std::max(1.0, lmax))
    throw Error(ErrorCode::NotPSD, "mat_power needs a positive semidefinite input");
  if (s < 0.0 && !(lmin > cutoff))
    throw Error(
        ErrorCode::SingularPower,
        "negative power of a matrix with eigenvalue " + std::to_string(lmin) +
            " below the rank tolerance");
  return eig.apply([&](double l) {
    if (l <= cutoff) return 0.0;
    return s == 0.0 ? 1.0 : std::pow(l, s);
  });
}

RealVector singular_values(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues();
}

double schatten_norm(const Matrix& a, double p) {
  if (!(p >= 1.0))
    throw Error(ErrorCode::BadExponent, "Schatten exponent must be >= 1");
  if (p == 2.0) return a.norm();
  if (a.size() == 0) return 0.0;
  if (p > 2.0) return schatten_from_gram(gram_eig(a).eigenvalues(), p);
  RealVector s = singular_values(a);
  if (s.size() == 0) return 0.0;
  double smax = s.maxCoeff();
  if (std::isinf(p) || smax == 0.0) return smax;
  // scale by σ_max so large p does not overflow
  double acc = 0.0;
  for (Index i = 0; i < s.size(); ++i) acc += std::pow(s(i) / smax, p);
  return smax * std::pow(acc, 1.0 / p);
}

double op_norm(const Matrix& a) { return schatten_norm(a, kInf); }

Matrix op_abs(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullV);
  const Matrix& v = svd.matrixV();
  RealVector s = RealVector::Zero(a.cols());
  s.head(svd.singularValues().size()) = svd.singularValues();
  return v * s.asDiagonal() * v.adjoint();
}

Projection spectral_projection(const Matrix& h, double lo, double hi) {
  HermitianEig eig = herm_eig(h);
  Index n = h.rows();
  Projection out{Matrix::Zero(n, n), 0};
  for (Index i = 0; i < n; ++i) {
    double l = eig.eigenvalues(i);
    if (l >= lo && l <= hi) {
      out.matrix += eig.eigenvectors.col(i) * eig.eigenvectors.col(i).adjoint();
      ++out.rank;
    }
  }
  return out;
}

Matrix norming_element(const Matrix& z, double p) {
  if (!(p >= 1.0))
    throw Error(ErrorCode::BadExponent, "norming element needs p >= 1");
  if (z.size() == 0) return z;
  if (p >= 2.0) {
    // U Σ^{p-1} V* = z · V Σ^{p-2} V*, with no negative powers for p ≥ 2
    auto eig = gram_eig(z);
    RealVector l = eig.eigenvalues().cwiseMax(0.0);
    Index n = l.size();
    if (l(n - 1) == 0.0) return Matrix::Zero(z.rows(), z.cols());
    RealVector w = RealVector::Zero(n);
    if (std::isinf(p)) {
      w(n - 1) = 1.0 / std::sqrt(l(n - 1));
    } else {
      double norm = schatten_from_gram(l, p);
      for (Index i = 0; i < n; ++i)
        w(i) = std::pow(std::sqrt(l(i)) / norm, p - 2.0) / norm;
    }
    const Matrix& v = eig.eigenvectors();
    return z * (v * w.cast<Complex>().asDiagonal() * v.adjoint());
  }
  Eigen::JacobiSVD<Matrix> svd(z, Eigen::ComputeThinU | Eigen::ComputeThinV);
  RealVector s = svd.singularValues();
  if (s.size() == 0 || s(0) == 0.0) return Matrix::Zero(z.rows(), z.cols());
  RealVector w(s.size());
  if (std::isinf(p)) {
    // dual of the operator norm: rank-one on the top singular pair
    w.setZero();
    w(0) = 1.0;
  } else {
    double norm = schatten_norm(z, p);
    for (Index i = 0; i < s.size(); ++i)
      w(i) = s(i) > 0.0 ? std::pow(s(i) / norm, p - 1.0) : 0.0;
  }
  return svd.matrixU() * w.asDiagonal() * svd.matrixV().adjoint();
}

double conjugate_exponent(double p) {
  if (std::isinf(p)) return 1.0;
  if (p == 1.0) return kInf;
  return p / (p - 1.0);
}

Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

Matrix random_gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix m(rows, cols);
  // fill row by row so the draw order does not depend on storage order
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) {
      double re = normal(rng);
      double im = normal(rng);
      m(r, c) = Complex(re, im);
    }
  return m;
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Index i = 0; i < a.rows(); ++i)
    for (Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

Matrix matrix_unit(Index n, Index i, Index j) {
  Matrix e = Matrix::Zero(n, n);
  e(i, j) = 1.0;
  return e;
}

Eigen::VectorXcd vec(const Matrix& a) {
  return Eigen::Map<const Eigen::VectorXcd>(a.data(), a.size());
}

Matrix unvec(const Eigen::VectorXcd& v, Index n) {
  return Eigen::Map<const Matrix>(v.data(), n, n);
}

}  // namespace ncbmo
