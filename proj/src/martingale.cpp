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

#include "ncbmo/martingale.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ncbmo/error.hpp"
#include "ncbmo/norms.hpp"

namespace ncbmo {

Matrix Martingale::value(int n) const {
  if (n < 0) return Matrix::Zero(x_.rows(), x_.cols());
  return values_.at(n);
}

Martingale Martingale::adjoint() const { return decompose(filtration_, x_.adjoint()); }

Martingale Martingale::scaled(Complex lambda) const {
  Martingale out = *this;
  out.x_ *= lambda;
  for (Matrix& v : out.values_) v *= lambda;
  for (Matrix& d : out.diffs_) d *= lambda;
  return out;
}

double Martingale::martingale_residual() const {
  double worst = 0.0;
  double scale = std::max(1.0, x_.norm());
  for (int n = 0; n < size(); ++n)
    for (int m = 0; m < size(); ++m) {
      Matrix r = filtration_->expect(n, values_[m]) - values_[std::min(n, m)];
      worst = std::max(worst, r.norm() / scale);
    }
  return worst;
}

double Martingale::orthogonality_residual() const {
  const State& s = filtration_->state();
  double scale = std::max(1e-300, std::abs(s.expect(x_.adjoint() * x_)));
  double worst = 0.0;
  for (int j = 0; j < size(); ++j)
    for (int k = 0; k < size(); ++k)
      if (j != k)
        worst = std::max(worst, std::abs(s.expect(diffs_[j].adjoint() * diffs_[k])) / scale);
  return worst;
}

Martingale decompose(std::shared_ptr<const Filtration> filtration, const Matrix& x) {
  Index n = filtration->ambient_dim();
  if (x.rows() != n || x.cols() != n)
    throw Error(ErrorCode::DimensionMismatch,
                "element is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                    ", ambient dimension is " + std::to_string(n));
  const Subalgebra& top = filtration->levels().back();
  double res = top.membership_residual(x);
  if (res > 1e-9)
    throw Error(ErrorCode::DimensionMismatch,
                "element is not in the top level (residual " + std::to_string(res) + ")");
  Martingale m;
  m.x_ = x;
  Matrix prev = Matrix::Zero(n, n);
  for (int k = 0; k < filtration->size(); ++k) {
    Matrix v = k == filtration->top() ? x : filtration->expect(k, x);
    m.diffs_.push_back(v - prev);
    m.values_.push_back(v);
    prev = std::move(v);
  }
  m.filtration_ = std::move(filtration);
  return m;
}

Martingale decompose(const Filtration& filtration, const Matrix& x) {
  return decompose(std::make_shared<const Filtration>(filtration), x);
}

SquareFunctions square_functions(const Martingale& mart) {
  Index n = mart.limit().rows();
  SquareFunctions out;
  out.column = Matrix::Zero(n, n);
  out.row = Matrix::Zero(n, n);
  for (const Matrix& d : mart.differences()) {
    out.column += d.adjoint() * d;
    out.row += d * d.adjoint();
  }
  for (int m = 0; m < mart.size(); ++m) {
    std::vector<Matrix> row;
    for (int k = 0; k <= m; ++k) {
      Matrix y = mart.values()[m] - mart.value(k - 1);
      row.push_back(hermitian_part(mart.filtration().expect(k, y.adjoint() * y)));
    }
    out.conditioned.push_back(std::move(row));
  }
  return out;
}

Filtration dyadic_classical_filtration(int depth, Index fiber_dim, const State& fiber) {
  if (depth < 0 || fiber_dim < 1)
    throw Error(ErrorCode::BadSpec, "depth must be >= 0 and fiber dimension >= 1");
  if (depth > 6 || (Index{1} << depth) * fiber_dim > 64)
    throw Error(ErrorCode::TooLarge, "2^depth * fiber_dim exceeds 64");
  if (fiber.dim() != fiber_dim)
    throw Error(ErrorCode::DimensionMismatch, "fiber state has the wrong dimension");
  Index cells = Index{1} << depth;
  Index n = cells * fiber_dim;
  std::vector<Subalgebra> levels;
  for (int j = 0; j <= depth; ++j) {
    Index width = cells >> j;
    std::vector<Matrix> span;
    for (Index b = 0; b < (Index{1} << j); ++b)
      for (Index r = 0; r < fiber_dim; ++r)
        for (Index c = 0; c < fiber_dim; ++c) {
          Matrix e = Matrix::Zero(n, n);
          for (Index cell = b * width; cell < (b + 1) * width; ++cell)
            e(cell * fiber_dim + r, cell * fiber_dim + c) = 1.0;
          span.push_back(e);
        }
    levels.push_back(Subalgebra::from_spanning_set(n, span));
  }
  Matrix uniform = Matrix::Identity(cells, cells) / static_cast<double>(cells);
  return validate_filtration(State(kron(uniform, fiber.density())), std::move(levels));
}

double rademacher(int k, Index cell, int depth) {
  return ((cell >> (depth - k)) & 1) ? -1.0 : 1.0;
}

std::vector<Matrix> CellMartingale::expect(int j, const std::vector<Matrix>& y) const {
  Index k = fiber_dim();
  if (j < 0) return std::vector<Matrix>(y.size(), Matrix::Zero(k, k));
  Index width = num_cells() >> std::min(j, depth);
  std::vector<Matrix> out(y.size());
  for (Index b = 0; b < num_cells(); b += width) {
    Matrix avg = Matrix::Zero(k, k);
    for (Index c = b; c < b + width; ++c) avg += y[c];
    avg /= static_cast<double>(width);
    for (Index c = b; c < b + width; ++c) out[c] = avg;
  }
  return out;
}

std::vector<Matrix> CellMartingale::value(int j) const { return expect(j, cells); }

CellMartingale CellMartingale::adjoint() const {
  CellMartingale out = *this;
  for (Matrix& c : out.cells) c = c.adjoint().eval();
  return out;
}

Matrix CellMartingale::dense() const {
  Index k = fiber_dim();
  Matrix out = Matrix::Zero(num_cells() * k, num_cells() * k);
  for (Index c = 0; c < num_cells(); ++c) out.block(c * k, c * k, k, k) = cells[c];
  return out;
}

CellMartingale rademacher_cells(int n, SignMode mode) {
  if (n < 1) throw Error(ErrorCode::BadSpec, "n must be positive");
  if (n > 12 || (Index{1} << n) * n > 4096)
    throw Error(ErrorCode::TooLarge, "2^n * n exceeds 4096");
  CellMartingale out;
  out.depth = n;
  out.fiber = State::tracial(n);
  for (Index c = 0; c < out.num_cells(); ++c) {
    Matrix x = Matrix::Zero(n, n);
    for (int k = 1; k <= n; ++k)
      x(0, k - 1) = mode == SignMode::Rademacher ? rademacher(k, c, n) : 1.0;
    out.cells.push_back(x);
  }
  return out;
}

RademacherExample rademacher_matrix_martingale(int n, SignMode mode) {
  if (n < 1) throw Error(ErrorCode::BadSpec, "n must be positive");
  if (n > 4) throw Error(ErrorCode::TooLarge, "dense encoding needs 2^n * n <= 64");
  auto f = std::make_shared<const Filtration>(
      dyadic_classical_filtration(n, n, State::tracial(n)));
  Martingale m = decompose(f, rademacher_cells(n, mode).dense());
  return {f, std::move(m)};
}

Martingale random_martingale(std::shared_ptr<const Filtration> filtration,
                             std::uint64_t seed, const RandomMartingaleOptions& options) {
  std::mt19937_64 rng(seed);
  Index n = filtration->ambient_dim();
  Matrix x = filtration->expect(filtration->top(), random_gaussian(n, n, rng));
  if (options.hermitian) x = hermitian_part(x);
  Martingale m = decompose(filtration, x);
  double norm = 1.0;
  switch (options.normalize) {
    case Normalize::Bmo: norm = bmo(m); break;
    case Normalize::Lp: norm = lp_norm(filtration->state(), x, options.p); break;
    case Normalize::None: break;
  }
  if (norm > 0.0 && norm != 1.0) m = m.scaled(1.0 / norm);
  return m;
}

}  // namespace ncbmo
