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

#include "ncbmo/algebra.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "ncbmo/error.hpp"

namespace ncbmo {

namespace {

constexpr double kSpanTol = 1e-9;
constexpr double kInvarianceTol = 1e-8;

// Appends the normalized component of v orthogonal to the columns of q.
// Returns false when v already lies in their span.
bool append_orthonormal(Matrix& q, Eigen::VectorXcd v) {
  double scale = std::max(1.0, v.norm());
  for (int pass = 0; pass < 2; ++pass)
    if (q.cols() > 0) v -= q * (q.adjoint() * v);
  double r = v.norm();
  if (r <= kSpanTol * scale) return false;
  q.conservativeResize(v.size(), q.cols() + 1);
  q.col(q.cols() - 1) = v / r;
  return true;
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Subalgebra

Subalgebra::Subalgebra(Index n, Matrix basis, bool full)
    : n_(n), basis_(std::move(basis)), full_(full) {
  if (!full_ && basis_.cols() == n_ * n_) {
    full_ = true;
    basis_.resize(0, 0);
  }
  Matrix id = Matrix::Identity(n_, n_);
  unit_ = full_ || membership_residual(id) <= kSpanTol;
}

Subalgebra Subalgebra::from_spanning_set(
    Index ambient_dim, const std::vector<Matrix>& spanning) {
  Matrix q(ambient_dim * ambient_dim, 0);
  for (const Matrix& m : spanning) {
    if (m.rows() != ambient_dim || m.cols() != ambient_dim)
      throw Error(ErrorCode::DimensionMismatch, "spanning matrix has wrong size");
    append_orthonormal(q, vec(m));
  }
  return Subalgebra(ambient_dim, std::move(q), false);
}

Subalgebra Subalgebra::full(Index ambient_dim) {
  return Subalgebra(ambient_dim, Matrix(0, 0), true);
}

std::vector<Matrix> Subalgebra::basis() const {
  std::vector<Matrix> out;
  if (full_) {
    for (Index j = 0; j < n_; ++j)
      for (Index i = 0; i < n_; ++i) out.push_back(matrix_unit(n_, i, j));
    return out;
  }
  for (Index c = 0; c < basis_.cols(); ++c)
    out.push_back(unvec(basis_.col(c), n_));
  return out;
}

Matrix Subalgebra::project(const Matrix& x) const {
  if (full_) return x;
  Eigen::VectorXcd v = vec(x);
  return unvec(basis_ * (basis_.adjoint() * v), n_);
}

double Subalgebra::membership_residual(const Matrix& x) const {
  if (full_) return 0.0;
  return (x - project(x)).norm() / std::max(1.0, x.norm());
}

double Subalgebra::closure_residual() const {
  if (full_) return 0.0;
  std::vector<Matrix> b = basis();
  double worst = 0.0;
  for (size_t i = 0; i < b.size(); ++i) {
    worst = std::max(worst, membership_residual(b[i].adjoint()));
    for (size_t j = 0; j < b.size(); ++j)
      worst = std::max(worst, membership_residual(b[i] * b[j]));
  }
  return worst;
}

double Subalgebra::orthonormality_residual() const {
  if (full_) return 0.0;
  Matrix gram = basis_.adjoint() * basis_;
  return (gram - Matrix::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
}

double Subalgebra::commutator_residual() const {
  std::vector<Matrix> b = basis();
  double worst = 0.0;
  for (size_t i = 0; i < b.size(); ++i)
    for (size_t j = i + 1; j < b.size(); ++j)
      worst = std::max(worst, (b[i] * b[j] - b[j] * b[i]).norm());
  return worst;
}

Subalgebra build_subalgebra(Index ambient_dim, const std::vector<Matrix>& generators) {
  if (ambient_dim < 1)
    throw Error(ErrorCode::DimensionMismatch, "ambient dimension must be positive");
  std::vector<Matrix> gens;
  for (const Matrix& g : generators) {
    if (g.rows() != ambient_dim || g.cols() != ambient_dim)
      throw Error(ErrorCode::DimensionMismatch, "generator has wrong size");
    gens.push_back(g);
    gens.push_back(g.adjoint());
  }
  // span of words in the generators: close {1} under left multiplication
  Matrix q(ambient_dim * ambient_dim, 0);
  append_orthonormal(q, vec(Matrix::Identity(ambient_dim, ambient_dim)));
  for (Index i = 0; i < q.cols(); ++i) {
    Matrix b = unvec(q.col(i), ambient_dim);
    for (const Matrix& g : gens) append_orthonormal(q, vec(g * b));
    if (q.cols() == ambient_dim * ambient_dim) break;
  }
  return Subalgebra::from_spanning_set(ambient_dim, [&] {
    std::vector<Matrix> out;
    for (Index c = 0; c < q.cols(); ++c) out.push_back(unvec(q.col(c), ambient_dim));
    return out;
  }());
}

Subalgebra block_subalgebra(const std::vector<BlockSpec>& spec) {
  if (spec.empty()) throw Error(ErrorCode::BadSpec, "empty block specification");
  Index n = 0;
  for (const BlockSpec& b : spec) {
    if (b.block_size < 1 || b.multiplicity < 1)
      throw Error(ErrorCode::BadSpec, "block size and multiplicity must be positive");
    n += b.block_size * b.multiplicity;
  }
  std::vector<Matrix> basis;
  Index offset = 0;
  for (const BlockSpec& b : spec) {
    double w = 1.0 / std::sqrt(static_cast<double>(b.multiplicity));
    for (Index a = 0; a < b.block_size; ++a)
      for (Index c = 0; c < b.block_size; ++c) {
        Matrix e = Matrix::Zero(n, n);
        for (Index r = 0; r < b.multiplicity; ++r)
          e(offset + a * b.multiplicity + r, offset + c * b.multiplicity + r) = w;
        basis.push_back(std::move(e));
      }
    offset += b.block_size * b.multiplicity;
  }
  return Subalgebra::from_spanning_set(n, basis);
}

Subalgebra diagonal_algebra(Index n) {
  return block_subalgebra(std::vector<BlockSpec>(n, BlockSpec{1, 1}));
}

Subalgebra scalar_algebra(Index n) { return block_subalgebra({BlockSpec{1, n}}); }

Subalgebra tensor(const Subalgebra& a, const Subalgebra& b) {
  Index n = a.ambient_dim() * b.ambient_dim();
  if (a.is_full() && b.is_full()) return Subalgebra::full(n);
  std::vector<Matrix> basis;
  for (const Matrix& x : a.basis())
    for (const Matrix& y : b.basis()) basis.push_back(kron(x, y));
  return Subalgebra::from_spanning_set(n, basis);
}

// ---------------------------------------------------------------------------
// State

State::State(Matrix density) : density_(std::move(density)) {
  if (density_.rows() != density_.cols() || density_.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch, "density must be square");
  if (hermiticity_residual(density_) > 1e-10)
    throw Error(ErrorCode::StateNotFaithful, "density is not Hermitian");
  density_ = hermitian_part(density_);
  double tr = density_.trace().real();
  if (std::abs(tr - 1.0) > 1e-12)
    throw Error(ErrorCode::StateNotFaithful,
                "density trace " + std::to_string(tr) + " differs from 1");
  eig_ = herm_eig(density_);
  if (!(eig_.eigenvalues.minCoeff() > 1e-12))
    throw Error(ErrorCode::StateNotFaithful,
                "density has eigenvalue " + fmt_double(eig_.eigenvalues.minCoeff()) +
                    " <= 1e-12");
}

State State::tracial(Index n) {
  return State(Matrix::Identity(n, n) / static_cast<double>(n));
}

Matrix State::power(double s) const {
  return eig_.apply([s](double l) { return std::pow(l, s); });
}

Matrix State::imaginary_power(double t) const {
  const Matrix& u = eig_.eigenvectors;
  Eigen::VectorXcd phases(u.cols());
  for (Index i = 0; i < u.cols(); ++i)
    phases(i) = std::exp(Complex(0.0, t * std::log(eig_.eigenvalues(i))));
  return u * phases.asDiagonal() * u.adjoint();
}

Complex State::expect(const Matrix& x) const { return (density_ * x).trace(); }

bool State::is_tracial(double tol) const {
  Index n = dim();
  return (density_ - Matrix::Identity(n, n) / static_cast<double>(n)).norm() <= tol;
}

// ---------------------------------------------------------------------------
// ConditionalExpectation

ConditionalExpectation ConditionalExpectation::zero(Index n) {
  ConditionalExpectation e;
  e.n_ = n;
  e.kind_ = Kind::Zero;
  return e;
}

ConditionalExpectation ConditionalExpectation::identity(Index n) {
  ConditionalExpectation e;
  e.n_ = n;
  e.kind_ = Kind::Identity;
  return e;
}

ConditionalExpectation ConditionalExpectation::onto(
    const Subalgebra& level, const State& state) {
  Index n = level.ambient_dim();
  if (state.dim() != n)
    throw Error(ErrorCode::DimensionMismatch, "state and level dimensions differ");
  if (level.is_full()) return identity(n);
  const Matrix& b = level.basis_columns();
  const Matrix& d = state.density();
  Matrix bd(b.rows(), b.cols());
  for (Index c = 0; c < b.cols(); ++c) bd.col(c) = vec(unvec(b.col(c), n) * d);
  // Gram matrix of the GNS inner product Tr(D b_i* b_j)
  Matrix gram = bd.adjoint() * b;
  gram = hermitian_part(gram);
  Eigen::LLT<Matrix> llt(gram);
  if (llt.info() != Eigen::Success)
    throw Error(ErrorCode::StateNotFaithful, "GNS Gram matrix is not positive definite");
  Matrix l = llt.matrixL();
  ConditionalExpectation e;
  e.n_ = n;
  e.kind_ = Kind::Projection;
  e.q_ = l.triangularView<Eigen::Lower>().solve(b.adjoint()).adjoint();
  e.w_ = l.triangularView<Eigen::Lower>().solve(bd.adjoint()).adjoint();
  return e;
}

Matrix ConditionalExpectation::apply(const Matrix& x) const {
  switch (kind_) {
    case Kind::Zero: return Matrix::Zero(n_, n_);
    case Kind::Identity: return x;
    case Kind::Projection: break;
  }
  Eigen::VectorXcd coeff = w_.adjoint() * vec(x);
  return unvec(q_ * coeff, n_);
}

Matrix ConditionalExpectation::superoperator() const {
  Index n2 = n_ * n_;
  switch (kind_) {
    case Kind::Zero: return Matrix::Zero(n2, n2);
    case Kind::Identity: return Matrix::Identity(n2, n2);
    case Kind::Projection: break;
  }
  return q_ * w_.adjoint();
}

Matrix ConditionalExpectation::choi() const {
  Matrix c = Matrix::Zero(n_ * n_, n_ * n_);
  for (Index i = 0; i < n_; ++i)
    for (Index j = 0; j < n_; ++j)
      c.block(i * n_, j * n_, n_, n_) = apply(matrix_unit(n_, i, j));
  return c;
}

// ---------------------------------------------------------------------------
// Filtration

Filtration::Filtration(State state, std::vector<Subalgebra> levels)
    : state_(std::move(state)), levels_(std::move(levels)),
      zero_(ConditionalExpectation::zero(state_.dim())) {}

const ConditionalExpectation& Filtration::expectation(int n) const {
  if (n < 0) return zero_;
  return exps_.at(static_cast<size_t>(n));
}

Filtration validate_filtration(State state, std::vector<Subalgebra> levels) {
  if (levels.empty()) throw Error(ErrorCode::BadSpec, "filtration needs at least one level");
  Index n = state.dim();
  for (size_t k = 0; k < levels.size(); ++k) {
    if (levels[k].ambient_dim() != n)
      throw Error(ErrorCode::DimensionMismatch,
                  "level " + std::to_string(k) + " has the wrong ambient dimension");
    if (!levels[k].contains_unit())
      throw Error(ErrorCode::BadSpec, "level " + std::to_string(k) + " is not unital");
  }
  for (size_t k = 1; k < levels.size(); ++k) {
    const Subalgebra& lo = levels[k - 1];
    const Subalgebra& hi = levels[k];
    if (lo.dim() >= hi.dim())
      throw Error(ErrorCode::NotIncreasing,
                  "level " + std::to_string(k) + " is not strictly larger than level " +
                      std::to_string(k - 1));
    if (!hi.is_full())
      for (const Matrix& b : lo.basis())
        if (!hi.contains(b))
          throw Error(ErrorCode::NotIncreasing,
                      "level " + std::to_string(k - 1) + " is not contained in level " +
                          std::to_string(k));
  }
  if (!levels.back().contains(state.density()))
    throw Error(ErrorCode::BadSpec, "density does not belong to the top level");

  Filtration f(std::move(state), std::move(levels));
  const Matrix& d = f.state_.density();
  Matrix d_inv = f.state_.power(-1.0);
  for (size_t k = 0; k < f.levels_.size(); ++k) {
    const Subalgebra& level = f.levels_[k];
    double worst = 0.0;
    if (!level.is_full())
      for (const Matrix& b : level.basis()) {
        Matrix conj = d * b * d_inv;
        worst = std::max(worst, level.membership_residual(conj));
      }
    f.modular_residuals_.push_back(worst);
    if (worst > kInvarianceTol)
      throw Error(ErrorCode::NotModularInvariant,
                  "level " + std::to_string(k) + " is not invariant under Ad_D (residual " +
                      fmt_double(worst) + ")");
    f.exps_.push_back(ConditionalExpectation::onto(level, f.state_));
  }
  return f;
}

Matrix expect_lp(const Filtration& f, int n, const Matrix& z, double p, double theta) {
  if (std::isinf(p)) return f.expect(n, z);
  const State& s = f.state();
  double left = (1.0 - theta) / p;
  double right = theta / p;
  Matrix x = s.power(-left) * z * s.power(-right);
  return s.power(left) * f.expect(n, x) * s.power(right);
}

// ---------------------------------------------------------------------------
// Modular flow and L_p embeddings

Matrix modular_flow(const State& state, const Matrix& x, double t) {
  Matrix u = state.imaginary_power(t);
  return u * x * u.adjoint();
}

LpElement embed_lp(const State& state, const Matrix& x, double p, double eta) {
  if (!(p >= 1.0)) throw Error(ErrorCode::BadExponent, "L_p exponent must be >= 1");
  if (!(eta >= 0.0 && eta <= 1.0))
    throw Error(ErrorCode::BadExponent, "embedding split must lie in [0,1]");
  if (x.rows() != state.dim() || x.cols() != state.dim())
    throw Error(ErrorCode::DimensionMismatch, "element and state dimensions differ");
  if (std::isinf(p)) return LpElement{x, p, eta, x};
  Matrix m = state.power((1.0 - eta) / p) * x * state.power(eta / p);
  return LpElement{std::move(m), p, eta, x};
}

double lp_norm(const State& state, const Matrix& x, double p, double eta) {
  return schatten_norm(embed_lp(state, x, p, eta).matrix, p);
}

}  // namespace ncbmo
