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
#include "ncbmo/verify.hpp"

using namespace ncbmo;

namespace {

const Instance& find(const std::vector<Instance>& all, const std::string& label) {
  for (const Instance& i : all)
    if (i.label == label) return i;
  throw std::runtime_error("missing instance " + label);
}

Matrix diag(std::initializer_list<double> v) {
  std::vector<double> w(v);
  RealVector r = Eigen::Map<RealVector>(w.data(), static_cast<Index>(w.size()));
  return r.cast<Complex>().asDiagonal();
}

}  // namespace

TEST_CASE("standard instances and ensembles") {
  std::vector<Instance> all = standard_instances(1);
  CHECK(all.size() == 8);
  for (const Instance& i : all) {
    CHECK(i.filtration->ambient_dim() <= 16);
    CHECK(i.tracial == i.filtration->state().is_tracial());
  }
  std::vector<EnsembleSample> a = make_ensemble(all, 20, 5), b = make_ensemble(all, 20, 5);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(bmo(a[k].martingale) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK((a[k].martingale.limit() - b[k].martingale.limit()).norm() == 0.0);
    CHECK(a[k].label == b[k].label);
  }

  // balanced draws spread the φ-norm over the levels
  const Instance& chain = find(all, "tensor-2x2x2");
  Martingale m = balanced_martingale(chain.filtration, 9);
  std::vector<double> norms;
  for (const Matrix& d : m.differences())
    norms.push_back(std::sqrt(chain.filtration->state().expect(d.adjoint() * d).real()));
  double lo = *std::min_element(norms.begin(), norms.end());
  double hi = *std::max_element(norms.begin(), norms.end());
  CHECK(hi - lo < 1e-9 * hi);
}

TEST_CASE("John-Nirenberg check") {
  std::vector<Instance> all = standard_instances(2);
  VerifyConfig config;
  config.p_list = {3.0, 6.0};

  // x = 1
  const Filtration& f = *find(all, "tensor-2x2").filtration;
  Martingale one = decompose(find(all, "tensor-2x2").filtration, Matrix::Identity(4, 4));
  VerifyReport r1 = check_jn(one, config);
  REQUIRE(r1.records.size() == 2);
  for (const SampleRecord& r : r1.records) {
    CHECK(r.pass);
    CHECK(r.values.at("ratio") == doctest::Approx(1.0 / r.values.at("p")).epsilon(1e-9));
  }
  CHECK(f.size() == 3);

  // classical instance: exact oracle, search agrees
  Martingale cl = random_martingale(find(all, "classical-8").filtration, 3);
  for (const SampleRecord& r : check_jn(cl, config).records) {
    REQUIRE(r.values.count("oracle") == 1);
    CHECK(r.values.at("oracle_gap") <= 1e-5);
    CHECK(r.pass);
  }

  // random ensemble, witnesses reproduce the recorded values
  for (const EnsembleSample& s : make_ensemble(all, 8, 4)) {
    VerifyReport rep = check_jn(s.martingale, config, s.label);
    for (const SampleRecord& r : rep.records) {
      CHECK(r.pass);
      CHECK(r.values.at("seeded") >= 1.0 - 1e-6);
      CHECK(jn_witness_residual(s.martingale, r) <= 1e-6);
    }
  }
}

TEST_CASE("inclusion check") {
  VerifyConfig config;
  config.p_list = {3.0, 4.0, 6.0};
  config.record_lp_c_mo = false;
  RademacherExample ex = rademacher_matrix_martingale(3);
  VerifyReport rep = check_bmo_in_lp(ex.martingale, config);
  for (const SampleRecord& r : rep.records) {
    double p = r.values.at("p");
    CHECK(r.values.at("lp_norm") == doctest::Approx(std::pow(3.0, 0.5 - 1.0 / p)).epsilon(1e-9));
    CHECK(r.values.at("bmo") == doctest::Approx(std::sqrt(3.0)).epsilon(1e-9));
    CHECK(r.pass);
  }
  config.record_lp_c_mo = true;
  config.p_list = {6.0};
  std::vector<Instance> all = standard_instances(3);
  Martingale m = random_martingale(find(all, "tensor-2x2").filtration, 2);
  VerifyReport with_mo = check_bmo_in_lp(m, config);
  CHECK(with_mo.records.size() == 4);
  CHECK(with_mo.records.back().check == "lp_c_mo");
  CHECK_FALSE(with_mo.records.back().hard);
  CHECK(with_mo.passed());
}

TEST_CASE("change of state") {
  std::vector<Instance> all = standard_instances(4);
  VerifyConfig config;
  const Instance& chain = find(all, "tensor-2x2x2");
  Martingale m = random_martingale(chain.filtration, 6);
  const State& s = chain.filtration->state();

  // a = D^{1/p} at n = 0 is the embedding with η = 1
  VerifyReport r0 = check_change_of_state(m, 0, s.power(0.25), 4.0, config);
  CHECK(r0.records[0].values.at("lhs") ==
        doctest::Approx(lp_norm(s, m.limit(), 4.0, 1.0)).epsilon(1e-10));
  CHECK(r0.passed());

  // random multipliers from each level
  std::mt19937_64 rng(7);
  for (int n = 0; n < chain.filtration->size(); ++n) {
    for (double p : {1.5, 3.0, 5.0}) {
      Matrix b = chain.filtration->expect(n, random_gaussian(8, 8, rng));
      VerifyReport r = check_change_of_state(m, n, b * s.power(1.0 / p), p, config);
      CHECK(r.passed());
      CHECK(r.records[0].values.at("structural_residual") <= 1e-8);
      CHECK(r.records[0].values.at("shifted_bmo_c") <= r.records[0].values.at("bmo_c") + 1e-12);
    }
  }
  CHECK_THROWS_AS(check_change_of_state(m, 0, random_gaussian(8, 8, rng), 3.0, config), Error);

  // classical change of measure: ‖y a‖_p^p = Σ_i w_i |y_i|^p |b_i|^p
  const Instance& cl = find(all, "classical-8");
  Martingale c = random_martingale(cl.filtration, 8);
  const Matrix& d = cl.filtration->state().density();
  Matrix b = cl.filtration->expect(1, diag({1, 2, 3, 4, 5, 6, 7, 8}));
  double p = 3.0;
  Matrix y = c.limit() - c.value(0);
  double num = 0.0, den = 0.0;
  for (Index i = 0; i < 8; ++i) {
    double w = d(i, i).real(), bi = std::abs(b(i, i));
    num += w * std::pow(std::abs(y(i, i)) * bi, p);
    den += w * std::pow(bi, p);
  }
  VerifyReport rc = check_change_of_state(c, 1, b * cl.filtration->state().power(1.0 / p), p, config);
  CHECK(rc.records[0].values.at("lhs") == doctest::Approx(std::pow(num / den, 1.0 / p)).epsilon(1e-10));
}

TEST_CASE("large deviation") {
  std::vector<Instance> all = standard_instances(5);
  VerifyConfig config;
  const Instance& cl = find(all, "classical-8-tracial");
  Martingale r1 = decompose(cl.filtration, diag({1, 1, 1, 1, -1, -1, -1, -1}));
  CHECK(bmo(r1) == doctest::Approx(1.0));
  for (double t : {1.0, 2.0, 4.0}) {
    LargeDeviationResult ld = large_deviation(r1, t, config);
    CHECK(ld.f.rank == 8);
    CHECK(ld.tail == doctest::Approx(0.0));
    CHECK(ld.pass);
  }
  LargeDeviationResult half = large_deviation(r1, 0.5, config);
  CHECK(half.f.rank == 0);
  CHECK(half.tail == doctest::Approx(1.0));

  Martingale one = decompose(cl.filtration, Matrix::Identity(8, 8));
  CHECK(large_deviation(one, 0.1, config).f.rank == 8);

  std::vector<std::pair<double, double>> points;
  for (const EnsembleSample& s : make_ensemble(all, 16, 6)) {
    for (double t : {1.0, 2.0, 4.0, 8.0}) {
      LargeDeviationResult ld = large_deviation(s.martingale, t, config);
      CHECK(ld.norm_xf <= t + 1e-9);
      CHECK(ld.p_schedule == doctest::Approx(4.0 * t * config.rate()));
      points.emplace_back(t, ld.tail);
    }
  }
  ExponentialFit fit = fit_exponential_tail(points, config.c2);
  for (const auto& [t, tail] : points) CHECK(tail <= fit.c2 * std::exp(-t * fit.c1) * (1 + 1e-12));

  ExponentialFit exact = fit_exponential_tail({{1.0, std::exp(-2.0)}, {2.0, std::exp(-4.0)}}, 1.0);
  CHECK(exact.c1 == doctest::Approx(2.0));
  CHECK_THROWS_AS(fit_exponential_tail({}, 1.0), Error);
}

TEST_CASE("exponential class") {
  CHECK(lexp_norm(2.5 * Matrix::Identity(3, 3)) == doctest::Approx(2.5).epsilon(1e-10));
  CHECK(lexp_norm(Matrix::Zero(3, 3)) == 0.0);
  // τ(e^{|x|/λ−1}) = 1 solved directly for two eigenvalues
  Matrix x = diag({1.0, 3.0});
  double lambda = lexp_norm(x);
  double tau = 0.5 * (std::exp(1.0 / lambda - 1.0) + std::exp(3.0 / lambda - 1.0));
  CHECK(tau == doctest::Approx(1.0).epsilon(1e-9));

  std::vector<Instance> all = standard_instances(6);
  VerifyConfig config;
  for (const EnsembleSample& s : make_ensemble(all, 16, 7)) {
    if (!s.tracial) {
      CHECK_THROWS_AS(lexp_check(s.martingale, config), Error);
      continue;
    }
    CHECK(lexp_check(s.martingale, config).passed());
  }
}

TEST_CASE("Kadison and Stein") {
  Filtration f = validate_filtration(State::tracial(2), {diagonal_algebra(2), Subalgebra::full(2)});
  Matrix e12 = matrix_unit(2, 0, 1);
  CHECK(f.expect(0, e12).norm() < 1e-14);
  CHECK((f.expect(0, e12.adjoint() * e12) - matrix_unit(2, 1, 1)).norm() < 1e-14);

  std::vector<Instance> all = standard_instances(7);
  for (const Instance& i : all) {
    for (int n = 0; n < i.filtration->size(); ++n) {
      KadisonReport k = check_kadison(*i.filtration, n, 10, 3);
      CHECK(k.violations == 0);
      CHECK(k.samples == 10);
    }
    VerifyReport st = check_stein(*i.filtration, {2.0, 4.0}, 5, 4);
    CHECK(st.passed());
    CHECK(st.records[0].values.at("column_ratio") <= 1.0 + 1e-9);
  }

  // elements of N_n: equality
  const Filtration& g = *find(all, "mixed-blocks").filtration;
  std::mt19937_64 rng(1);
  Matrix x = g.expect(1, random_gaussian(6, 6, rng));
  Matrix gap = g.expect(1, x.adjoint() * x) - x.adjoint() * x;
  CHECK(gap.norm() < 1e-10);
}

TEST_CASE("counterexample table") {
  VerifyReport rep = counterexample_report({1, 2, 4, 8}, {3.0, 4.0});
  REQUIRE(rep.counterexample.size() == 8);
  for (const CounterexampleRow& row : rep.counterexample) {
    CHECK(row.pass);
    CHECK(row.bmo_r == doctest::Approx(std::sqrt(row.n)).epsilon(1e-10));
    if (row.n == 1) CHECK(row.lp_norm == doctest::Approx(1.0));
    if (row.n == 4 && row.p == 4.0) CHECK(row.lp_norm == doctest::Approx(std::sqrt(2.0)));
    if (row.n == 8 && row.p == 3.0) CHECK(row.lp_norm == doctest::Approx(std::pow(8.0, 1.0 / 6)));
  }
  CHECK(rep.flags.size() == 2);
  CHECK(rep.passed());
}

TEST_CASE("constant fitting") {
  ConstantFit single = fit_constant({{4.0, 2.0}});
  CHECK(single.c_hat == doctest::Approx(0.5));
  CHECK(single.slope == 0.0);
  ConstantFit linear = fit_constant({{2.0, 1.0}, {4.0, 2.0}, {8.0, 4.0}, {8.0, 1.0}});
  CHECK(linear.slope == doctest::Approx(1.0));
  CHECK(linear.pass);
  ConstantFit quadratic = fit_constant({{2.0, 4.0}, {4.0, 16.0}});
  CHECK(quadratic.slope == doctest::Approx(2.0));
  CHECK_FALSE(quadratic.pass);
  CHECK_THROWS_AS(fit_constant({}), Error);

  VerifyConfig bad;
  bad.p_list = {1.5};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("expectation axioms on the standard instances") {
  for (const Instance& i : standard_instances(8)) {
    AxiomReport rep = check_expectation_axioms(*i.filtration, 10, 2);
    CHECK(rep.samples == 10);
    CHECK(rep.total_violations() == 0);
  }
}
