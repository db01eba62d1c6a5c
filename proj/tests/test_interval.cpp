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

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "ncbmo/error.hpp"
#include "ncbmo/interval.hpp"

using namespace ncbmo;

namespace {

StepFunction random_step(int depth, Index k, std::mt19937_64& rng, bool diagonal = false) {
  std::vector<Matrix> cells;
  for (Index c = 0; c < (Index{1} << depth); ++c) {
    Matrix m = random_gaussian(k, k, rng);
    if (diagonal) m = Matrix(m.diagonal().asDiagonal());
    cells.push_back(m);
  }
  return make_step_function(depth, cells);
}

StepFunction reversed(const StepFunction& f) {
  std::vector<Matrix> cells(f.values.rbegin(), f.values.rend());
  return make_step_function(f.depth, cells);
}

IntervalOptions column_only() {
  IntervalOptions o;
  o.with_adjoint = false;
  return o;
}

}  // namespace

TEST_CASE("covering intervals") {
  Covering c = covering_dyadic(make_interval(Rational(2, 5), Rational(1, 5)));
  CHECK(c.grid == Grid::Shifted);
  CHECK(c.level == 1);
  CHECK(c.interval == Interval{Rational(1, 6), Rational(1, 2)});

  Covering d = covering_dyadic(make_interval(Rational(1, 4), Rational(1, 4)));
  CHECK(d.grid == Grid::Dyadic);
  CHECK(d.interval == Interval{Rational(1, 4), Rational(1, 4)});

  CHECK_THROWS_AS(make_interval(0, 0), Error);

  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> num(-5000, 5000), len(1, 4000);
  for (int t = 0; t < 10000; ++t) {
    Interval i = make_interval(Rational(num(rng), 997), Rational(len(rng), 1009));
    Covering cov = covering_dyadic(i);
    REQUIRE(cov.interval.contains(i));
    CHECK(cov.interval.length >= i.length);
    CHECK(cov.interval.length <= 6 * i.length);
  }
}

TEST_CASE("step function construction and file format") {
  std::mt19937_64 rng(3);
  StepFunction f = random_step(2, 2, rng);
  std::stringstream ss;
  write_step_function(ss, f);
  StepFunction g = read_step_function(ss);
  REQUIRE(g.depth == 2);
  for (Index c = 0; c < f.num_cells(); ++c) CHECK((f.values[c] - g.values[c]).norm() == 0.0);

  std::istringstream commented("# header\ndepth 1 fiber 1\n1 0 # first\n-1 0\n");
  CHECK(read_step_function(commented).values[1](0, 0) == Complex(-1, 0));

  auto parse_error_line = [](const std::string& text) {
    std::istringstream in(text);
    try {
      read_step_function(in);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::ParseError);
      return std::string(e.what());
    }
    return std::string("no error");
  };
  CHECK(parse_error_line("depth 1 fiber 1\n1 0\n").find("end of input") != std::string::npos);
  CHECK(parse_error_line("depth 1 fiber 1\n1 0\nx 0\n").find("line 3") != std::string::npos);
  CHECK(parse_error_line("depth 0 fiber 1\n1 0 2 0\n").find("trailing") != std::string::npos);
  CHECK(parse_error_line("deep 1 fiber 1\n").find("line 1") != std::string::npos);

  CHECK_THROWS_AS(make_step_function(2, {Matrix::Identity(2, 2)}), Error);
  CHECK_THROWS_AS(to_grid(f, make_interval(Rational(1, 3), Rational(1, 4))), Error);
  GridInterval gi = to_grid(f, make_interval(Rational(1, 4), Rational(1, 2)));
  CHECK(gi.begin == 1);
  CHECK(gi.end == 3);
  CHECK(to_interval(f, gi) == Interval{Rational(1, 4), Rational(1, 2)});
  CHECK(grid_intervals(f).size() == 10);
  CHECK(grid_intervals(f, true).size() == 7);
}

TEST_CASE("mean oscillation examples") {
  Matrix v(2, 2);
  v << Complex(1, 0), Complex(2, 1), Complex(0, 0), Complex(-1, 0.5);
  StepFunction constant = make_step_function(3, std::vector<Matrix>(8, v));
  CHECK(interval_bmo(constant) == doctest::Approx(0.0));
  CHECK(interval_bmo_p_lower(constant, 4.0).value == doctest::Approx(0.0));

  // first Rademacher function times v
  StepFunction r1 = make_step_function(2, {v, v, -v, -v});
  double vv = op_norm(v.adjoint() * v);
  CHECK(interval_mean_oscillation(r1, {0, 4}) == doctest::Approx(vv).epsilon(1e-12));
  CHECK(interval_mean_oscillation(r1, {0, 2}) == doctest::Approx(0.0));
  CHECK(interval_mean_oscillation(r1, {2, 4}) == doctest::Approx(0.0));
  CHECK(interval_bmo_c(r1, true) == doctest::Approx(vv).epsilon(1e-12));
  CHECK(interval_bmo_c(r1) == doctest::Approx(vv).epsilon(1e-12));
  CHECK(interval_bmo_c_root(r1) == doctest::Approx(std::sqrt(vv)).epsilon(1e-12));
}

TEST_CASE("scalar brute force") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  std::vector<double> x(16);
  std::vector<Matrix> cells;
  for (double& t : x) {
    t = gauss(rng);
    cells.push_back(Matrix::Constant(1, 1, Complex(t, 0)));
  }
  StepFunction f = make_step_function(4, cells);
  double best = 0.0, best_p = 0.0;
  const double p = 3.0;
  for (int b = 0; b < 16; ++b)
    for (int e = b + 1; e <= 16; ++e) {
      double mean = 0.0;
      for (int c = b; c < e; ++c) mean += x[c];
      mean /= e - b;
      double sq = 0.0, pw = 0.0;
      for (int c = b; c < e; ++c) {
        sq += (x[c] - mean) * (x[c] - mean);
        pw += std::pow(std::abs(x[c] - mean), p);
      }
      best = std::max(best, sq / (e - b));
      best_p = std::max(best_p, std::pow(pw / (e - b), 1.0 / p));
    }
  CHECK(interval_bmo_c(f) == doctest::Approx(best).epsilon(1e-12));
  CHECK(interval_bmo(f) == doctest::Approx(best).epsilon(1e-12));
  CHECK(interval_bmo_p_lower(f, p).value == doctest::Approx(best_p).epsilon(1e-10));
}

TEST_CASE("p-oscillation against exact values") {
  std::mt19937_64 rng(8);
  StepFunction f = random_step(3, 3, rng);
  // p = 2 is the square root of the mean oscillation
  for (const GridInterval& g : grid_intervals(f)) {
    double exact = std::sqrt(interval_mean_oscillation(f, g));
    CHECK(interval_p_oscillation(f, g, 2.0, column_only()).value ==
          doctest::Approx(exact).epsilon(1e-9));
  }
  CHECK(interval_bmo_p_lower(f, 2.0).value ==
        doctest::Approx(interval_bmo_root(f)).epsilon(1e-9));

  // diagonal values: the optimum is a rank-one diagonal unit
  StepFunction d = random_step(3, 3, rng, true);
  for (double p : {3.0, 5.0}) {
    for (const GridInterval& g : grid_intervals(d)) {
      Matrix avg = Matrix::Zero(3, 3);
      for (Index c = g.begin; c < g.end; ++c) avg += d.values[c];
      avg /= static_cast<double>(g.size());
      double exact = 0.0;
      for (Index i = 0; i < 3; ++i) {
        double acc = 0.0;
        for (Index c = g.begin; c < g.end; ++c) acc += std::pow(std::abs(d.values[c](i, i) - avg(i, i)), p);
        exact = std::max(exact, std::pow(acc / static_cast<double>(g.size()), 1.0 / p));
      }
      CHECK(interval_p_oscillation(d, g, p, column_only()).value ==
            doctest::Approx(exact).epsilon(1e-8));
    }
  }

  // a depending on t can only help, up to max_c ‖x_c − x_I‖
  IntervalOptions td = column_only();
  td.t_dependent = true;
  for (const GridInterval& g : grid_intervals(f)) {
    double fixed = interval_p_oscillation(f, g, 4.0, column_only()).value;
    double moving = interval_p_oscillation(f, g, 4.0, td).value;
    CHECK(fixed <= moving * (1 + 1e-12));
  }
  CHECK_THROWS_AS(interval_bmo_p_lower(f, 1.5), Error);
}

TEST_CASE("dyadic intervals reproduce the martingale norm") {
  std::mt19937_64 rng(21);
  for (int depth : {1, 2, 3, 4}) {
    StepFunction f = random_step(depth, 2, rng);
    CHECK(interval_bmo_c(f, true) ==
          doctest::Approx(bridged_martingale_bmo_c(f.as_martingale())).epsilon(1e-12));
    CHECK(interval_bmo_c(f, true) <= interval_bmo_c(f) * (1 + 1e-12));
  }
  RademacherExample ex = rademacher_matrix_martingale(3);
  CellMartingale cells = rademacher_cells(3);
  CHECK(bridged_martingale_bmo_c(ex.martingale) ==
        doctest::Approx(bridged_martingale_bmo_c(cells)).epsilon(1e-10));
}

TEST_CASE("reflection invariance") {
  std::mt19937_64 rng(31);
  StepFunction f = random_step(3, 2, rng);
  StepFunction r = reversed(f);
  CHECK(interval_bmo(r) == doctest::Approx(interval_bmo(f)).epsilon(1e-12));
  CHECK(interval_bmo_p_lower(r, 3.0).value ==
        doctest::Approx(interval_bmo_p_lower(f, 3.0).value).epsilon(1e-7));
}

TEST_CASE("comparison between nested intervals") {
  std::mt19937_64 rng(41);
  StepFunction f = random_step(4, 2, rng);
  Interval whole = make_interval(0, 1);
  std::vector<std::pair<Interval, Interval>> pairs = {
      {make_interval(0, Rational(1, 2)), whole},
      {make_interval(Rational(1, 2), Rational(1, 2)), whole}};
  std::uniform_int_distribution<int> cell(0, 15);
  while (pairs.size() < 40) {
    int a = cell(rng), b = cell(rng), c = cell(rng), d = cell(rng);
    std::vector<int> s{a, b, c, d};
    std::sort(s.begin(), s.end());
    if (s[0] == s[1] || s[2] == s[3] || s[1] > s[2]) continue;
    // J = [s0, s3 + 1), I = [s1, s2 + 1)
    pairs.push_back({make_interval(Rational(s[1], 16), Rational(s[2] + 1 - s[1], 16)),
                     make_interval(Rational(s[0], 16), Rational(s[3] + 1 - s[0], 16))});
  }
  for (double p : {2.0, 4.0}) {
    ComparisonReport rep = interval_comparison_check(f, p, pairs);
    CHECK(rep.violations == 0);
    CHECK(rep.max_ratio <= 1.0);
    CHECK(rep.records.size() == pairs.size());
  }
  CHECK_THROWS_AS(interval_comparison_check(f, 3.0, {{whole, pairs[0].first}}), Error);
}
