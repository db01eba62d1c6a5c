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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "ncbmo/error.hpp"
#include "ncbmo/norms.hpp"

using namespace ncbmo;

namespace {

Matrix diag_matrix(const RealVector& v) { return v.cast<Complex>().asDiagonal(); }

Matrix random_density(Index n, std::mt19937_64& rng) {
  Matrix g = random_gaussian(n, n, rng);
  Matrix d = g * g.adjoint() + 0.2 * Matrix::Identity(n, n);
  return d / d.trace().real();
}

// Atoms of a commutative chain on 8 points:
// {all} ⊃ {0..3},{4..7} ⊃ {0,1},{2,3},{4,5},{6,7} ⊃ singletons.
const std::vector<std::vector<std::vector<Index>>> kAtoms = {
    {{0, 1, 2, 3, 4, 5, 6, 7}},
    {{0, 1, 2, 3}, {4, 5, 6, 7}},
    {{0, 1}, {2, 3}, {4, 5}, {6, 7}},
    {{0}, {1}, {2}, {3}, {4}, {5}, {6}, {7}}};

struct Classical {
  std::shared_ptr<const Filtration> filtration;
  RealVector weights;
};

Classical classical_chain(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.3, 1.0);
  RealVector w(8);
  for (Index i = 0; i < 8; ++i) w(i) = u(rng);
  w /= w.sum();
  std::vector<Subalgebra> levels{scalar_algebra(8), block_subalgebra({{1, 4}, {1, 4}}),
                                 block_subalgebra({{1, 2}, {1, 2}, {1, 2}, {1, 2}}),
                                 diagonal_algebra(8)};
  return {std::make_shared<const Filtration>(
              validate_filtration(State(diag_matrix(w)), std::move(levels))),
          w};
}

Matrix random_diagonal(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix out = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) out(i, i) = Complex(g(rng), g(rng));
  return out;
}

// sup over pairs and atoms of (Σ_A w_i |y_i|^p / Σ_A w_i)^{1/p}.
double brute_force_bmo_p(const Martingale& m, const RealVector& w, double p) {
  double best = 0.0;
  for (int mm = 0; mm < m.size(); ++mm)
    for (int n = 0; n <= mm; ++n) {
      Matrix y = m.values()[mm] - m.value(n - 1);
      for (const auto& atom : kAtoms[n]) {
        double num = 0.0, den = 0.0;
        for (Index i : atom) {
          num += w(i) * std::pow(std::abs(y(i, i)), p);
          den += w(i);
        }
        best = std::max(best, num / den);
      }
    }
  return std::pow(best, 1.0 / p);
}

std::shared_ptr<const Filtration> quantum_chain(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix d1 = Matrix::Zero(2, 2);
  d1(0, 0) = 0.35;
  d1(1, 1) = 0.65;
  std::vector<Subalgebra> levels{block_subalgebra({{1, 2}, {1, 2}}),
                                 block_subalgebra({{2, 2}}), Subalgebra::full(4)};
  return std::make_shared<const Filtration>(
      validate_filtration(State(kron(d1, random_density(2, rng))), std::move(levels)));
}

template <typename F>
void expect_error(ErrorCode code, F&& f) {
  try {
    f();
    FAIL("expected " << code_name(code));
  } catch (const Error& e) {
    CHECK(e.code() == code);
  }
}

}  // namespace

TEST_CASE("bmo examples") {
  auto f = quantum_chain(1);
  CHECK(bmo(decompose(f, Matrix::Identity(4, 4))) == doctest::Approx(1.0));
  for (int n = 1; n <= 3; ++n) {
    RademacherExample ex = rademacher_matrix_martingale(n);
    CHECK(bmo_c(ex.martingale) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(bmo_r(ex.martingale) == doctest::Approx(std::sqrt(n)).epsilon(1e-12));
    CHECK(bmo(ex.martingale) == doctest::Approx(std::sqrt(n)).epsilon(1e-12));
  }
  auto two = std::make_shared<const Filtration>(
      dyadic_classical_filtration(1, 1, State::tracial(1)));
  Matrix r1 = Matrix::Zero(2, 2);
  r1(0, 0) = 1.0;
  r1(1, 1) = -1.0;
  CHECK(bmo(decompose(two, r1)) == doctest::Approx(1.0));
}

TEST_CASE("conditioned_linf_c examples") {
  auto f = quantum_chain(2);
  std::mt19937_64 rng(3);
  Matrix x1 = f->expect(1, random_gaussian(4, 4, rng));
  Martingale m1 = decompose(f, x1);
  CHECK(conditioned_linf_c(m1, 1) == doctest::Approx(op_norm(x1)).epsilon(1e-10));
  CHECK(conditioned_linf_c(m1.scaled(2.0), 1) ==
        doctest::Approx(2.0 * conditioned_linf_c(m1, 1)).epsilon(1e-12));

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.3;
  d(1, 1) = 0.7;
  auto g = std::make_shared<const Filtration>(
      validate_filtration(State(d), {diagonal_algebra(2), Subalgebra::full(2)}));
  CHECK(conditioned_linf_c(decompose(g, matrix_unit(2, 0, 1)), 0) == doctest::Approx(1.0));
}

TEST_CASE("hp_c examples") {
  auto f = quantum_chain(4);
  std::mt19937_64 rng(5);
  Matrix x0 = f->expect(0, random_gaussian(4, 4, rng));
  for (double p : {1.0, 2.0, 3.0})
    CHECK(hp_c(decompose(f, x0), p) ==
          doctest::Approx(lp_norm(f->state(), x0, p)).epsilon(1e-10));

  RademacherExample ex = rademacher_matrix_martingale(3);
  CHECK(hp_c(ex.martingale, 2.0) ==
        doctest::Approx(lp_norm(ex.filtration->state(), ex.martingale.limit(), 2.0)).epsilon(1e-10));

  Classical c = classical_chain(rng);
  Martingale m = decompose(c.filtration, random_diagonal(8, rng));
  for (double p : {1.5, 3.0, 5.0}) {
    double acc = 0.0;
    for (Index i = 0; i < 8; ++i) {
      double s = 0.0;
      for (const Matrix& dk : m.differences()) s += std::norm(dk(i, i));
      acc += c.weights(i) * std::pow(s, p / 2.0);
    }
    CHECK(hp_c(m, p) == doctest::Approx(std::pow(acc, 1.0 / p)).epsilon(1e-10));
  }
  expect_error(ErrorCode::BadExponent, [&] { hp_c(m, 0.5); });
}

TEST_CASE("sup_norm_bracket examples") {
  std::mt19937_64 rng(6);
  std::vector<Matrix> terms;
  for (int k = 0; k < 3; ++k) {
    Matrix g = random_gaussian(4, 4, rng);
    terms.push_back(g * g.adjoint());
  }
  NormReport inf = sup_norm_bracket({terms, kInf, std::nullopt});
  double expected = 0.0;
  for (const Matrix& t : terms) expected = std::max(expected, op_norm(t));
  CHECK(inf.value == doctest::Approx(expected).epsilon(1e-12));
  CHECK(*inf.upper_bound == doctest::Approx(expected).epsilon(1e-12));

  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  b(1, 1) = 2.0;
  NormReport diag = sup_norm_bracket({{a, b}, 1.0, std::nullopt});
  CHECK(diag.value == doctest::Approx(3.0));
  CHECK(*diag.upper_bound == doctest::Approx(3.0));
  CHECK(sup_norm_dual_norm(diag.witness, 1.0) <= 1.0 + 1e-12);

  for (double q : {1.0, 1.5, 3.0}) {
    NormReport single = sup_norm_bracket({{terms[0]}, q, std::nullopt});
    CHECK(single.value == doctest::Approx(schatten_norm(terms[0], q)).epsilon(1e-10));
    CHECK(*single.upper_bound == doctest::Approx(single.value).epsilon(1e-10));
  }

  for (double q : {1.0, 2.0, 4.0}) {
    NormReport r = sup_norm_bracket({terms, q, std::nullopt});
    CHECK(r.value <= *r.upper_bound);
    CHECK(sup_norm_dual_norm(r.witness, q) <= 1.0 + 1e-9);
    CHECK(sup_norm_objective(terms, r.witness) == doctest::Approx(r.value).epsilon(1e-9));
    for (const Matrix& y : r.witness) CHECK(herm_eig(y).eigenvalues.minCoeff() >= -1e-12);
    CHECK(*r.upper_bound - r.value <= 1e-5 * r.value);
    // the bracket sits between max_k ‖x_k‖_q and ‖Σ x_k‖_q
    double lower_simple = 0.0;
    Matrix sum = Matrix::Zero(4, 4);
    for (const Matrix& t : terms) {
      lower_simple = std::max(lower_simple, schatten_norm(t, q));
      sum += t;
    }
    CHECK(r.value >= lower_simple * (1.0 - 1e-9));
    CHECK(*r.upper_bound <= schatten_norm(sum, q) * (1.0 + 1e-12));
  }

  // factorization bound: x_k = a w_k a*
  Matrix fa = random_gaussian(4, 4, rng);
  std::vector<Matrix> w, fx;
  for (int k = 0; k < 2; ++k) {
    RealVector v(4);
    for (Index i = 0; i < 4; ++i) v(i) = 0.25 * (i + k + 1);
    w.push_back(diag_matrix(v));
    fx.push_back(fa * w.back() * fa.adjoint());
  }
  NormReport fr = sup_norm_bracket({fx, 2.0, SupNormFactorization{fa, w}});
  CHECK(*fr.upper_bound <= 1.25 * std::pow(schatten_norm(fa, 4.0), 2.0) * (1 + 1e-12));

  Matrix bad = Matrix::Identity(2, 2);
  bad(1, 1) = -1.0;
  expect_error(ErrorCode::NotPSD, [&] { sup_norm_bracket({{bad}, 2.0, std::nullopt}); });
}

TEST_CASE("elementary inequalities for the sup-norm") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<Matrix> x;
    for (int k = 0; k < 3; ++k) {
      Matrix g = random_gaussian(3, 3, rng);
      x.push_back(g * g.adjoint());
    }
    Matrix ga = random_gaussian(3, 3, rng);
    Matrix a = ga * ga.adjoint();
    Matrix a_half = mat_power(a, 0.5);
    // 1/p = 1/q + 1/s with p = 2, q = 4, s = 4
    std::vector<Matrix> conj;
    for (const Matrix& xk : x) conj.push_back(a_half * xk * a_half);
    NormReport lhs = sup_norm_bracket({conj, 2.0, std::nullopt});
    NormReport rhs = sup_norm_bracket({x, 4.0, std::nullopt});
    CHECK(lhs.value <= schatten_norm(a, 4.0) * *rhs.upper_bound * (1.0 + 1e-9));

    Matrix gb = random_gaussian(3, 3, rng);
    Matrix b = gb * gb.adjoint();
    std::vector<Matrix> inner;
    for (const Matrix& xk : x) {
      Matrix h = mat_power(xk, 0.5);
      inner.push_back(h * b * h);
    }
    NormReport l3 = sup_norm_bracket({inner, 2.0, std::nullopt});
    NormReport r3 = sup_norm_bracket({x, 2.0, std::nullopt});
    CHECK(l3.value <= op_norm(b) * *r3.upper_bound * (1.0 + 1e-9));
  }
}

TEST_CASE("lp_c_mo examples") {
  auto f = quantum_chain(8);
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 3; ++trial) {
    Martingale m = decompose(f, random_gaussian(4, 4, rng));
    CHECK(lp_c_mo(m, kInf).value == doctest::Approx(bmo_c(m)).epsilon(1e-14));
    NormReport r = lp_c_mo(m, 4.0);
    CHECK(r.value <= *r.upper_bound);
    CHECK(*r.upper_bound - r.value <= 1e-5 * r.value);
  }

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 0.4;
  d(1, 1) = 0.6;
  auto single = std::make_shared<const Filtration>(
      validate_filtration(State(d), {Subalgebra::full(2)}));
  Matrix x = random_gaussian(2, 2, rng);
  Matrix dp = single->state().power(0.25);
  CHECK(lp_c_mo(decompose(single, x), 4.0).value ==
        doctest::Approx(std::sqrt(schatten_norm(dp * x.adjoint() * x * dp, 2.0))).epsilon(1e-10));

  Classical c = classical_chain(rng);
  Martingale m = decompose(c.filtration, random_diagonal(8, rng));
  SquareFunctions sf = square_functions(m);
  for (double p : {2.0, 3.0, 6.0}) {
    double best = 0.0;
    for (int mm = 0; mm < m.size(); ++mm) {
      double acc = 0.0;
      for (Index i = 0; i < 8; ++i) {
        double pointwise = 0.0;
        for (const Matrix& s : sf.conditioned[mm]) pointwise = std::max(pointwise, s(i, i).real());
        acc += c.weights(i) * std::pow(pointwise, p / 2.0);
      }
      best = std::max(best, std::pow(acc, 1.0 / p));
    }
    NormReport r = lp_c_mo(m, p);
    CHECK(r.value == doctest::Approx(best).epsilon(1e-10));
    CHECK(*r.upper_bound == doctest::Approx(best).epsilon(1e-10));
  }
  expect_error(ErrorCode::BadExponent, [&] { lp_c_mo(m, 1.5); });
}

TEST_CASE("bmo_p examples") {
  auto f = quantum_chain(10);
  for (double p : {2.0, 3.0, 8.0})
    CHECK(bmo_p(decompose(f, Matrix::Identity(4, 4)), p).value ==
          doctest::Approx(1.0).epsilon(1e-10));

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    Martingale m = random_martingale(f, 100 + trial);
    for (double p : {2.0, 4.0, 6.0}) {
      NormReport r = bmo_p_c(m, p);
      CHECK(r.value >= bmo_c(m) - 1e-6);
      CHECK(bmo_p_seeded(m, p) >= bmo(m) - 1e-6);
      REQUIRE(r.witness.size() == 1);
      Matrix y = m.values()[r.level_m] - m.value(r.level_n - 1);
      CHECK(bmo_p_objective(y, r.witness[0], p) == doctest::Approx(r.value).epsilon(1e-7));
      // the witness lies in N_n D^{1/p}
      Matrix b = r.witness[0] * f->state().power(-1.0 / p);
      CHECK(f->levels()[r.level_n].membership_residual(b) < 1e-8);
      BmoPOptions pos;
      pos.positive = true;
      CHECK(bmo_p_c(m, p, pos).value <= r.value + 1e-6);
    }
    // p = 2 is the conditioned L_∞ column value on the top pair
    CHECK(bmo_p_c(m, 2.0).value == doctest::Approx(bmo_c(m)).epsilon(1e-7));
  }

  Classical c = classical_chain(rng);
  for (int trial = 0; trial < 5; ++trial) {
    Martingale m = decompose(c.filtration, random_diagonal(8, rng));
    for (double p : {2.0, 4.0, 8.0}) {
      double oracle = classical_bmo_p_oracle(m, p);
      CHECK(oracle == doctest::Approx(brute_force_bmo_p(m, c.weights, p)).epsilon(1e-12));
      CHECK(bmo_p_c(m, p).value == doctest::Approx(oracle).epsilon(1e-5));
      BmoPOptions all;
      all.all_pairs = true;
      CHECK(bmo_p_c(m, p, all).value == doctest::Approx(oracle).epsilon(1e-5));
    }
  }
  expect_error(ErrorCode::BadExponent, [&] { bmo_p_c(decompose(f, Matrix::Identity(4, 4)), 1.5); });
}

TEST_CASE("bmo_p lower bounds grow with p") {
  auto f = quantum_chain(12);
  for (int trial = 0; trial < 3; ++trial) {
    Martingale m = random_martingale(f, 200 + trial);
    double prev = 0.0;
    for (double p : {2.0, 3.0, 4.0, 6.0, 8.0}) {
      double v = bmo_p(m, p).value;
      CHECK(v >= prev - 1e-5);
      prev = v;
    }
    CHECK(bmo_p(m, kInf).value >= prev - 1e-5);
  }
}

TEST_CASE("classical oracle examples") {
  auto two = std::make_shared<const Filtration>(
      dyadic_classical_filtration(1, 1, State::tracial(1)));
  Matrix r1 = Matrix::Zero(2, 2);
  r1(0, 0) = 1.0;
  r1(1, 1) = -1.0;
  CHECK(classical_bmo_p_oracle(decompose(two, r1), 2.0) == doctest::Approx(1.0));
  CHECK(classical_bmo_p_oracle(decompose(two, -2.5 * Matrix::Identity(2, 2)), 3.0) ==
        doctest::Approx(2.5));
  expect_error(ErrorCode::NotCommutative, [] {
    auto f = quantum_chain(13);
    classical_bmo_p_oracle(decompose(f, Matrix::Identity(4, 4)), 2.0);
  });
}

TEST_CASE("stein projection") {
  auto f = quantum_chain(14);
  std::mt19937_64 rng(15);
  std::vector<Matrix> adapted, raw;
  for (int k = 0; k < f->size(); ++k) {
    raw.push_back(random_gaussian(4, 4, rng));
    adapted.push_back(f->expect(k, raw.back()));
  }
  std::vector<Matrix> fixed = stein_projection(adapted, *f);
  for (int k = 0; k < f->size(); ++k) CHECK((fixed[k] - adapted[k]).norm() < 1e-10);

  auto single = std::make_shared<const Filtration>(
      validate_filtration(State::tracial(2), {diagonal_algebra(2), Subalgebra::full(2)}));
  Matrix z = random_gaussian(2, 2, rng);
  std::vector<Matrix> out = stein_projection({z, Matrix::Zero(2, 2)}, *single);
  CHECK((out[0] - single->expect(0, z)).norm() < 1e-12);

  Matrix dq = f->state().power(0.5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Matrix> terms, embedded, projected;
    for (int k = 0; k < f->size(); ++k) terms.push_back(random_gaussian(4, 4, rng));
    for (const Matrix& t : terms) embedded.push_back(t * dq);
    for (const Matrix& t : stein_projection(terms, *f)) projected.push_back(t * dq);
    CHECK(lp_l2c_norm(projected, 2.0) <= lp_l2c_norm(embedded, 2.0) * (1.0 + 1e-12));
  }
  expect_error(ErrorCode::LengthMismatch, [&] { stein_projection({z}, *f); });
}

TEST_CASE("homogeneity and triangle inequality") {
  auto f = quantum_chain(16);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 5; ++trial) {
    Matrix x = random_gaussian(4, 4, rng), y = random_gaussian(4, 4, rng);
    Martingale mx = decompose(f, x), my = decompose(f, y), ms = decompose(f, x + y);
    Complex lambda(-1.3, 2.1);
    Martingale ml = mx.scaled(lambda);
    double al = std::abs(lambda);
    CHECK(bmo(ml) == doctest::Approx(al * bmo(mx)).epsilon(1e-10));
    CHECK(hp_c(ml, 3.0) == doctest::Approx(al * hp_c(mx, 3.0)).epsilon(1e-10));
    CHECK(bmo(ms) <= bmo(mx) + bmo(my) + 1e-10);
    CHECK(hp_c(ms, 3.0) <= hp_c(mx, 3.0) + hp_c(my, 3.0) + 1e-10);
    CHECK(lp_norm(f->state(), x + y, 3.0) <=
          lp_norm(f->state(), x, 3.0) + lp_norm(f->state(), y, 3.0) + 1e-10);
    NormReport lx = lp_c_mo(mx, 4.0), ly = lp_c_mo(my, 4.0), ls = lp_c_mo(ms, 4.0);
    CHECK(ls.value <= *lx.upper_bound + *ly.upper_bound + 1e-10);
    CHECK(lp_c_mo(ml, 4.0).value == doctest::Approx(al * lx.value).epsilon(1e-8));
  }
}

TEST_CASE("cell encoding agrees with the dense encoding") {
  std::mt19937_64 rng(18);
  CellMartingale c;
  c.depth = 2;
  c.fiber = State(random_density(2, rng));
  for (int i = 0; i < 4; ++i) c.cells.push_back(random_gaussian(2, 2, rng));
  auto f = std::make_shared<const Filtration>(dyadic_classical_filtration(2, 2, c.fiber));
  Martingale m = decompose(f, c.dense());
  CHECK(cell_bmo_c(c) == doctest::Approx(bmo_c(m)).epsilon(1e-10));
  CHECK(cell_bmo_r(c) == doctest::Approx(bmo_r(m)).epsilon(1e-10));
  for (double eta : {0.0, 0.5, 1.0})
    CHECK(cell_lp_norm(c, 3.0, eta) == doctest::Approx(lp_norm(f->state(), c.dense(), 3.0, eta)).epsilon(1e-10));
}
