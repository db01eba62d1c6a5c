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

#include "ncbmo/verify.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "ncbmo/error.hpp"

namespace ncbmo {

namespace {

constexpr double kE = 2.718281828459045;

std::uint64_t mix(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double min_eig(const Matrix& h) { return herm_eig(hermitian_part(h)).eigenvalues.minCoeff(); }

Matrix diag(const std::vector<double>& v) {
  RealVector r = Eigen::Map<const RealVector>(v.data(), static_cast<Index>(v.size()));
  return r.cast<Complex>().asDiagonal();
}

Matrix random_density(Index n, std::mt19937_64& rng) {
  Matrix g = random_gaussian(n, n, rng);
  Matrix d = g * g.adjoint() + 0.3 * Matrix::Identity(n, n);
  return d / d.trace().real();
}

std::vector<double> random_weights(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> w(n);
  for (double& x : w) x = u(rng);
  double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= s;
  return w;
}

std::shared_ptr<const Filtration> share(Filtration f) {
  return std::make_shared<const Filtration>(std::move(f));
}

Matrix top_element(const Filtration& f, std::mt19937_64& rng) {
  Index n = f.ambient_dim();
  return f.expect(f.top(), random_gaussian(n, n, rng));
}

double phi_norm(const State& s, const Matrix& x) {
  return std::sqrt(std::max(0.0, s.expect(x.adjoint() * x).real()));
}

}  // namespace

void VerifyConfig::validate() const {
  for (double p : p_list)
    if (!(p >= 2.0)) throw Error(ErrorCode::BadSpec, "exponents must lie in [2, inf]");
  if (ensemble_size < 1) throw Error(ErrorCode::BadSpec, "ensemble size must be at least 1");
  if (!(c_jn > 0.0) || !(c2 > 0.0)) throw Error(ErrorCode::BadSpec, "constants must be positive");
  for (double eta : eta_list)
    if (eta < 0.0 || eta > 1.0) throw Error(ErrorCode::BadSpec, "eta must lie in [0,1]");
}

double VerifyConfig::rate() const { return c1.value_or(1.0 / (kE * c_jn)); }

bool VerifyReport::passed() const { return failures() == 0; }

int VerifyReport::failures() const {
  int bad = 0;
  for (const SampleRecord& r : records) bad += (r.hard && !r.pass) ? 1 : 0;
  for (const auto& [name, ok] : flags) bad += ok ? 0 : 1;
  for (const CounterexampleRow& row : counterexample) bad += row.pass ? 0 : 1;
  return bad;
}

void VerifyReport::merge(const VerifyReport& other) {
  records.insert(records.end(), other.records.begin(), other.records.end());
  counterexample.insert(counterexample.end(), other.counterexample.begin(),
                        other.counterexample.end());
  for (const auto& [k, v] : other.constants) constants[k] = v;
  for (const auto& [k, v] : other.flags) {
    auto it = flags.find(k);
    flags[k] = it == flags.end() ? v : (it->second && v);
  }
}

// Instances

std::vector<Instance> standard_instances(std::uint64_t seed) {
  std::mt19937_64 rng(mix(seed, 0x1a57));
  std::vector<Instance> out;

  auto classical8 = [](const Matrix& density) {
    return validate_filtration(
        State(density), {scalar_algebra(8), block_subalgebra({{1, 4}, {1, 4}}),
                         block_subalgebra({{1, 2}, {1, 2}, {1, 2}, {1, 2}}), diagonal_algebra(8)});
  };
  out.push_back({"classical-8", share(classical8(diag(random_weights(8, rng)))), true, false});
  out.push_back({"classical-8-tracial", share(classical8(Matrix::Identity(8, 8) / 8.0)), true, true});
  out.push_back({"classical-16-tracial",
                 share(dyadic_classical_filtration(4, 1, State::tracial(1))), true, true});

  Subalgebra c2 = scalar_algebra(2), m2 = Subalgebra::full(2);
  Matrix d1 = random_density(2, rng), d2 = random_density(2, rng), d3 = random_density(2, rng),
         d4 = random_density(2, rng);
  out.push_back({"tensor-2x2",
                 share(validate_filtration(State(kron(d1, d2)),
                                           {scalar_algebra(4), tensor(m2, c2), Subalgebra::full(4)})),
                 false, false});
  out.push_back({"tensor-2x2x2",
                 share(validate_filtration(
                     State(kron(kron(d1, d2), d3)),
                     {scalar_algebra(8), tensor(tensor(m2, c2), c2), tensor(tensor(m2, m2), c2),
                      Subalgebra::full(8)})),
                 false, false});
  out.push_back({"tensor-2x2x2x2",
                 share(validate_filtration(
                     State(kron(kron(kron(d1, d2), d3), d4)),
                     {scalar_algebra(16), tensor(tensor(tensor(m2, c2), c2), c2),
                      tensor(tensor(tensor(m2, m2), c2), c2), tensor(tensor(tensor(m2, m2), m2), c2),
                      Subalgebra::full(16)})),
                 false, false});

  Subalgebra d2alg = diagonal_algebra(2);
  out.push_back({"mixed-diag-matrix",
                 share(validate_filtration(
                     State(kron(diag(random_weights(2, rng)), kron(d2, d3))),
                     {scalar_algebra(8), tensor(tensor(d2alg, c2), c2), tensor(tensor(d2alg, m2), c2),
                      tensor(d2alg, Subalgebra::full(4))})),
                 false, false});

  // M_2 ⊕ (M_2 ⊗ 1_2) inside M_6 with a block density
  Matrix dens = Matrix::Zero(6, 6);
  dens.topLeftCorner(2, 2) = 0.4 * random_density(2, rng);
  dens.bottomRightCorner(4, 4) = 0.6 * kron(random_density(2, rng), random_density(2, rng));
  out.push_back({"mixed-blocks",
                 share(validate_filtration(State(dens),
                                           {scalar_algebra(6), block_subalgebra({{1, 2}, {1, 4}}),
                                            block_subalgebra({{2, 1}, {2, 2}}), Subalgebra::full(6)})),
                 false, false});
  return out;
}

Martingale balanced_martingale(std::shared_ptr<const Filtration> filtration, std::uint64_t seed,
                               bool hermitian) {
  std::mt19937_64 rng(seed);
  const Filtration& f = *filtration;
  Index n = f.ambient_dim();
  Matrix x = Matrix::Zero(n, n);
  for (int k = 0; k < f.size(); ++k) {
    Matrix g = top_element(f, rng);
    if (hermitian) g = hermitian_part(g);
    Matrix d = f.expect(k, g) - f.expect(k - 1, g);
    double norm = phi_norm(f.state(), d);
    if (norm > 1e-12) x += d / norm;
  }
  Martingale m = decompose(filtration, x);
  double b = bmo(m);
  return b > 0.0 ? m.scaled(1.0 / b) : m;
}

std::vector<EnsembleSample> make_ensemble(const std::vector<Instance>& instances, int count,
                                          std::uint64_t seed) {
  if (instances.empty()) throw Error(ErrorCode::BadSpec, "no instances for the ensemble");
  std::vector<EnsembleSample> out;
  for (int i = 0; i < count; ++i) {
    const Instance& inst = instances[static_cast<std::size_t>(i) % instances.size()];
    std::uint64_t s = mix(seed, static_cast<std::uint64_t>(i));
    bool balanced = (i / static_cast<int>(instances.size())) % 2 == 1;
    Martingale m = balanced ? balanced_martingale(inst.filtration, s)
                            : random_martingale(inst.filtration, s);
    out.push_back({inst.label + (balanced ? "/balanced" : "/plain"), std::move(m), inst.classical,
                   inst.tracial});
  }
  return out;
}

// Inequality checks

VerifyReport check_jn(const Martingale& mart, const VerifyConfig& config, const std::string& label,
                      int sample) {
  VerifyReport rep;
  double b = bmo(mart);
  std::optional<double> oracle_base;
  for (double p : config.p_list) {
    SampleRecord r;
    r.check = "jn";
    r.label = label;
    r.sample = sample;
    BmoPOptions opts;
    opts.seed = mix(config.seed, static_cast<std::uint64_t>(sample) * 131 + 7);
    opts.positive = config.positive_witness;
    opts.restarts = config.bmo_p_restarts;
    NormReport lower = bmo_p(mart, p, opts);
    double seeded = bmo_p_seeded(mart, p);
    double value = lower.value;
    r.values["p"] = p;
    r.values["bmo"] = b;
    r.values["seeded"] = seeded;
    r.values["bmo_p_lower"] = lower.value;
    try {
      double oracle = std::max(classical_bmo_p_oracle(mart, p),
                               classical_bmo_p_oracle(mart.adjoint(), p));
      r.values["oracle"] = oracle;
      r.values["oracle_gap"] = std::abs(oracle - lower.value) / std::max(oracle, 1e-300);
      value = oracle;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NotCommutative) throw;
    }
    r.values["bmo_p"] = value;
    r.values["ratio"] = b > 0.0 ? value / (p * b) : 0.0;
    r.witness = lower.witness;
    r.level_n = lower.level_n;
    r.adjoint = lower.adjoint;
    bool left = seeded >= b - config.left_tolerance && value >= b - config.left_tolerance;
    bool right = value <= config.c_jn * p * b * (1.0 + 1e-12) + 1e-15;
    r.values["left_ok"] = left;
    r.values["right_ok"] = right;
    r.pass = left && right;
    rep.records.push_back(std::move(r));
  }
  return rep;
}

double jn_witness_residual(const Martingale& mart, const SampleRecord& record) {
  if (record.witness.empty()) return 0.0;
  Martingale side = record.adjoint ? mart.adjoint() : mart;
  Matrix y = side.limit() - side.value(record.level_n - 1);
  double value = bmo_p_objective(y, record.witness.front(), record.values.at("p"));
  return std::abs(value - record.values.at("bmo_p_lower"));
}

VerifyReport check_bmo_in_lp(const Martingale& mart, const VerifyConfig& config,
                             const std::string& label, int sample) {
  VerifyReport rep;
  double b = bmo(mart);
  const State& s = mart.filtration().state();
  for (double p : config.p_list) {
    for (double eta : config.eta_list) {
      SampleRecord r;
      r.check = "inclusion";
      r.label = label;
      r.sample = sample;
      double lp = lp_norm(s, mart.limit(), p, eta);
      r.values["p"] = p;
      r.values["eta"] = eta;
      r.values["lp_norm"] = lp;
      r.values["bmo"] = b;
      r.values["ratio"] = b > 0.0 ? lp / (p * b) : 0.0;
      r.pass = lp <= config.c_jn * p * b * (1.0 + 1e-12) + 1e-15;
      rep.records.push_back(std::move(r));
    }
    if (config.record_lp_c_mo && p > 4.0 && !std::isinf(p)) {
      SampleRecord r;
      r.check = "lp_c_mo";
      r.label = label;
      r.sample = sample;
      SupNormOptions so;
      so.seed = mix(config.seed, static_cast<std::uint64_t>(sample) * 17 + 3);
      NormReport mo = lp_c_mo(mart, p, so);
      double lp = lp_norm(s, mart.limit(), p, config.eta);
      r.values["p"] = p;
      r.values["lp_c_mo"] = mo.value;
      r.values["lp_norm"] = lp;
      r.values["ratio"] = lp > 0.0 ? mo.value / lp : 0.0;
      r.hard = false;
      rep.records.push_back(std::move(r));
    }
  }
  return rep;
}

VerifyReport check_change_of_state(const Martingale& mart, int n, const Matrix& a, double p,
                                   const VerifyConfig& config, double epsilon) {
  const Filtration& f = mart.filtration();
  if (!(p >= 1.0) || std::isinf(p)) throw Error(ErrorCode::BadExponent, "need 1 <= p < inf");
  if (n < 0 || n > f.top()) throw Error(ErrorCode::BadSpec, "level out of range");
  const State& s = f.state();
  double na = schatten_norm(a, p);
  if (!(na > 0.0)) throw Error(ErrorCode::BadWitness, "a must be nonzero");
  Matrix b = a * s.power(-1.0 / p);
  double membership = f.levels()[n].membership_residual(b);
  if (membership > 1e-8)
    throw Error(ErrorCode::BadWitness,
                "a is not in L_p(N_" + std::to_string(n) + ") (residual " +
                    std::to_string(membership) + ")");

  VerifyReport rep;
  SampleRecord r;
  r.check = "change_of_state";
  r.level_n = n;
  double bm = bmo(mart);
  Matrix y = mart.limit() - mart.value(n - 1);
  double lhs = schatten_norm(y * a, p) / na;
  double bound = config.c_jn * p * bm;
  r.values["p"] = p;
  r.values["bmo"] = bm;
  r.values["lhs"] = lhs;
  r.values["ratio"] = bm > 0.0 ? lhs / (p * bm) : 0.0;
  r.values["membership_residual"] = membership;

  // density of the state tr(a_ε^p ·), a_ε = (|a*|^p + εD)^{1/p} with ‖a‖_p = 1
  Matrix abs_p = mat_power(hermitian_part(a * a.adjoint()) / (na * na), p / 2.0);
  Matrix da = hermitian_part(abs_p + epsilon * s.density());
  da /= da.trace().real();
  State sa(da);
  double lhs_reg = schatten_norm(y * sa.power(1.0 / p), p);
  r.values["lhs_regularized"] = lhs_reg;

  // φ_a(y z) = φ_a(E_m(y) z) for z ∈ N_m, m ≥ n
  std::mt19937_64 rng(mix(config.seed, static_cast<std::uint64_t>(n) + 0xc05));
  double structural = 0.0;
  for (int m = n; m <= f.top(); ++m) {
    for (int trial = 0; trial < 4; ++trial) {
      Matrix w = top_element(f, rng);
      Matrix z = f.expect(m, top_element(f, rng));
      Complex lhs_s = (da * w * z).trace();
      Complex rhs_s = (da * f.expect(m, w) * z).trace();
      structural = std::max(structural, std::abs(lhs_s - rhs_s) / (w.norm() * z.norm()));
    }
  }
  r.values["structural_residual"] = structural;

  // the shifted filtration's BMO norm never exceeds bmo_c
  double shifted = 0.0;
  for (int k = n; k <= f.top(); ++k) {
    Matrix dev = mart.limit() - mart.value(k - 1);
    shifted = std::max(shifted, op_norm(f.expect(k, dev.adjoint() * dev)));
  }
  r.values["shifted_bmo_c"] = std::sqrt(shifted);
  r.values["bmo_c"] = bmo_c(mart);

  r.pass = lhs <= bound * (1.0 + 1e-12) && lhs_reg <= bound * (1.0 + 1e-12) &&
           structural <= config.structural_tolerance &&
           std::sqrt(shifted) <= r.values["bmo_c"] * (1.0 + 1e-12) + 1e-15;
  rep.records.push_back(std::move(r));
  return rep;
}

LargeDeviationResult large_deviation(const Martingale& mart, double t, const VerifyConfig& config) {
  LargeDeviationResult out;
  out.t = t;
  double b = bmo(mart);
  out.scale = b > 1.0 ? b : 1.0;
  Matrix y = (mart.limit() - mart.value(0)) / out.scale;
  Matrix mod = hermitian_part(y.adjoint() * y);
  // |y| ≤ t ⇔ y*y ≤ t²
  out.f = spectral_projection(mod, -std::numeric_limits<double>::infinity(), t * t);
  out.norm_xf = op_norm(y * out.f.matrix);
  Index n = y.rows();
  out.tail = std::max(0.0, mart.filtration().state().expect(Matrix::Identity(n, n) - out.f.matrix).real());
  double c1 = config.rate();
  out.epsilon = std::exp(-t * c1);
  out.p_schedule = 4.0 * t * c1;
  out.bound = config.c2 * out.epsilon;
  out.pass = out.tail < out.bound;
  return out;
}

ExponentialFit fit_exponential_tail(const std::vector<std::pair<double, double>>& points,
                                    double c2) {
  if (points.empty()) throw Error(ErrorCode::EmptyStream, "no large-deviation points");
  ExponentialFit fit;
  fit.c2 = c2;
  fit.c1 = 50.0;
  fit.points = static_cast<int>(points.size());
  for (const auto& [t, tail] : points) {
    if (tail <= 0.0) continue;
    ++fit.positive_tails;
    fit.c1 = std::min(fit.c1, (std::log(c2) - std::log(tail)) / t);
  }
  return fit;
}

double lexp_norm(const Matrix& x) {
  RealVector s = singular_values(x);
  if (s.size() == 0 || s.maxCoeff() == 0.0) return 0.0;
  auto tau = [&](double lambda) {
    double acc = 0.0;
    for (Index i = 0; i < s.size(); ++i) acc += std::exp(s(i) / lambda - 1.0);
    return acc / static_cast<double>(s.size());
  };
  double lo = 1e-6, hi = 1e6;
  if (tau(lo) <= 1.0) return lo;
  for (int it = 0; it < 80; ++it) {
    double mid = std::sqrt(lo * hi);
    (tau(mid) <= 1.0 ? hi : lo) = mid;
  }
  return hi;
}

VerifyReport lexp_check(const Martingale& mart, const VerifyConfig& config) {
  if (!mart.filtration().state().is_tracial())
    throw Error(ErrorCode::NotTracial, "the exponential class needs a tracial state");
  VerifyReport rep;
  SampleRecord r;
  r.check = "lexp";
  double b = bmo(mart);
  double norm = lexp_norm(mart.limit());
  double k = config.c_jn * kE / (1.0 - 1.0 / kE);
  r.values["lexp"] = norm;
  r.values["bmo"] = b;
  r.values["K"] = k;
  r.values["ratio"] = b > 0.0 ? norm / b : 0.0;
  r.pass = norm <= k * b * (1.0 + 1e-12) + 1e-15;
  rep.records.push_back(std::move(r));
  return rep;
}

KadisonReport check_kadison(const Filtration& f, int n, int samples, std::uint64_t seed,
                            double tolerance) {
  KadisonReport rep;
  std::mt19937_64 rng(seed);
  rep.min_eigenvalue = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    Matrix x = top_element(f, rng);
    Matrix ex = f.expect(n, x);
    double m = min_eig(f.expect(n, x.adjoint() * x) - ex.adjoint() * ex) / x.squaredNorm();
    rep.min_eigenvalue = std::min(rep.min_eigenvalue, m);
    rep.violations += m < -tolerance ? 1 : 0;
    ++rep.samples;
  }
  return rep;
}

VerifyReport check_stein(const Filtration& f, const std::vector<double>& p_list, int samples,
                         std::uint64_t seed) {
  VerifyReport rep;
  std::mt19937_64 rng(seed);
  const State& s = f.state();
  for (double p : p_list) {
    Matrix dr = s.power(1.0 / p);
    double worst_c = 0.0, worst_r = 0.0;
    for (int i = 0; i < samples; ++i) {
      std::vector<Matrix> col, qcol, row, qrow;
      for (int k = 0; k < f.size(); ++k) {
        Matrix z = top_element(f, rng);
        Matrix ez = f.expect(k, z);
        col.push_back(z * dr);
        qcol.push_back(ez * dr);
        row.push_back((dr * z).adjoint());
        qrow.push_back((dr * ez).adjoint());
      }
      worst_c = std::max(worst_c, lp_l2c_norm(qcol, p) / lp_l2c_norm(col, p));
      worst_r = std::max(worst_r, lp_l2c_norm(qrow, p) / lp_l2c_norm(row, p));
    }
    SampleRecord r;
    r.check = "stein";
    r.values["p"] = p;
    r.values["column_ratio"] = worst_c;
    r.values["row_ratio"] = worst_r;
    r.pass = p != 2.0 || (worst_c <= 1.0 + 1e-9 && worst_r <= 1.0 + 1e-9);
    rep.records.push_back(std::move(r));
  }
  return rep;
}

VerifyReport counterexample_report(const std::vector<int>& n_list,
                                   const std::vector<double>& p_list) {
  VerifyReport rep;
  std::vector<int> ns = n_list;
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  for (double p : p_list) {
    double previous = -1.0;
    bool increasing = true;
    for (int n : ns) {
      CellMartingale x = rademacher_cells(n);
      CounterexampleRow row;
      row.n = n;
      row.p = p;
      row.lp_norm = cell_lp_norm(x, p);
      row.expected = std::pow(static_cast<double>(n), 0.5 - 1.0 / p);
      row.bmo_c = cell_bmo_c(x);
      row.bmo_r = cell_bmo_r(x);
      row.ratio = row.lp_norm / row.bmo_c;
      row.pass = std::abs(row.lp_norm - row.expected) <= 1e-8 * row.expected &&
                 std::abs(row.bmo_c - 1.0) <= 1e-10;
      if (row.ratio <= previous) increasing = false;
      previous = row.ratio;
      rep.counterexample.push_back(row);
    }
    if (p > 2.0 && ns.size() > 1) {
      std::string key = "counterexample.increasing.p=" + short_number(p);
      rep.flags[key] = increasing;
    }
  }
  return rep;
}

ConstantFit fit_constant(const std::vector<std::pair<double, double>>& points, double slope_limit) {
  if (points.empty()) throw Error(ErrorCode::EmptyStream, "no ratios to fit");
  ConstantFit fit;
  for (const auto& [p, ratio] : points) {
    fit.c_hat = std::max(fit.c_hat, ratio / p);
    auto it = fit.max_ratio.find(p);
    if (it == fit.max_ratio.end() || ratio > it->second) fit.max_ratio[p] = ratio;
  }
  if (fit.max_ratio.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, k = 0;
    for (const auto& [p, ratio] : fit.max_ratio) {
      double lx = std::log(p), ly = std::log(ratio);
      sx += lx;
      sy += ly;
      sxx += lx * lx;
      sxy += lx * ly;
      k += 1;
    }
    fit.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  }
  fit.pass = fit.slope <= slope_limit;
  return fit;
}

std::string short_number(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

int AxiomReport::total_violations() const {
  int total = 0;
  for (const auto& [name, count] : violations) total += count;
  return total;
}

AxiomReport check_expectation_axioms(const Filtration& f, int samples, std::uint64_t seed,
                                     double tolerance) {
  AxiomReport rep;
  std::mt19937_64 rng(seed);
  Index n = f.ambient_dim();
  Matrix one = Matrix::Identity(n, n);
  const State& s = f.state();
  auto record = [&](const std::string& axiom, double residual) {
    double& w = rep.worst[axiom];
    w = std::max(w, residual);
    int& v = rep.violations[axiom];
    v += residual > tolerance ? 1 : 0;
  };
  for (int k = 0; k < f.size(); ++k) {
    const ConditionalExpectation& e = f.expectation(k);
    record("unital", (e.apply(one) - one).norm());
    record("choi_positive", std::max(0.0, -min_eig(e.choi())));
    Matrix so = e.superoperator();
    record("idempotent_superoperator", (so * so - so).norm() / std::max(1.0, so.norm()));
  }
  for (int i = 0; i < samples; ++i) {
    Matrix x = top_element(f, rng);
    double nx = x.norm();
    for (int k = 0; k < f.size(); ++k) {
      Matrix ex = f.expect(k, x);
      Matrix a = f.expect(k, top_element(f, rng));
      Matrix b = f.expect(k, top_element(f, rng));
      record("idempotent", (f.expect(k, ex) - ex).norm() / nx);
      record("state_preserving", std::abs(s.expect(ex) - s.expect(x)) / nx);
      record("module", (f.expect(k, a * x * b) - a * ex * b).norm() / (a.norm() * nx * b.norm()));
      Matrix gap = f.expect(k, x.adjoint() * x) - ex.adjoint() * ex;
      record("kadison", std::max(0.0, -min_eig(gap)) / (nx * nx));
      for (double t : {0.37, -1.9}) {
        Matrix lhs = f.expect(k, modular_flow(s, x, t));
        record("modular", (lhs - modular_flow(s, ex, t)).norm() / nx);
      }
      for (int m = 0; m < f.size(); ++m)
        record("commuting_squares",
               (f.expect(m, ex) - f.expect(std::min(k, m), x)).norm() / nx);
    }
    ++rep.samples;
  }
  return rep;
}

}  // namespace ncbmo
