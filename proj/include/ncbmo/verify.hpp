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
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ncbmo/norms.hpp"

namespace ncbmo {

struct VerifyConfig {
  std::vector<double> p_list{3.0, 4.0, 6.0, 8.0, 12.0};
  std::vector<double> eta_list{0.0, 0.5, 1.0};
  std::vector<double> t_list{1.0, 2.0, 4.0, 8.0};
  int ensemble_size = 1;
  std::uint64_t seed = 1;
  /// Asserted constant c in bmo_p ≤ c·p·bmo. Generous on purpose.
  double c_jn = 16.0;
  /// Large-deviation rate; 1/(e·c_jn) when unset.
  std::optional<double> c1;
  double c2 = 2.718281828459045;
  double eta = 0.5;
  double left_tolerance = 1e-6;
  double witness_tolerance = 1e-6;
  double structural_tolerance = 1e-8;
  bool positive_witness = false;
  /// Record lp_c_mo / lp_norm for p > 4 in check_bmo_in_lp (slow on dim 16).
  bool record_lp_c_mo = true;
  int bmo_p_restarts = 8;

  /// Throws BadSpec unless p_list ⊂ [2,∞] and ensemble_size ≥ 1.
  void validate() const;
  double rate() const;
};

/// One measurement. Values are kept in a sorted map so serialization is
/// deterministic.
struct SampleRecord {
  std::string check;
  std::string label;  // instance name
  int sample = 0;
  std::map<std::string, double> values;
  std::vector<Matrix> witness;
  int level_n = -1;
  bool adjoint = false;
  bool pass = true;
  /// A soft record is reported but never fails the run.
  bool hard = true;
};

struct CounterexampleRow {
  int n = 0;
  double p = 0.0;
  double lp_norm = 0.0;
  double expected = 0.0;
  double bmo_c = 0.0;
  double bmo_r = 0.0;
  double ratio = 0.0;  // lp_norm / bmo_c
  bool pass = true;
};

struct VerifyReport {
  std::vector<SampleRecord> records;
  std::map<std::string, double> constants;
  std::map<std::string, bool> flags;  // hard assertions beyond single records
  std::vector<CounterexampleRow> counterexample;

  bool passed() const;
  int failures() const;
  /// Appends records and rows; constants and flags of `other` win on clash
  /// except flags, which are combined with logical and.
  void merge(const VerifyReport& other);
};

// Instances

struct Instance {
  std::string label;
  std::shared_ptr<const Filtration> filtration;
  bool classical = false;  // every level diagonal
  bool tracial = false;
};

/// Small filtrations covering the classical, tensor-chain and mixed
/// cases, all of ambient dimension at most 16. Deterministic in `seed`.
std::vector<Instance> standard_instances(std::uint64_t seed);

/// x = Σ_k d_k with d_k = (E_k − E_{k−1})(g_k) for Gaussian g_k scaled to
/// equal φ-norms, then rescaled to bmo(x) = 1. Unlike a plain Gaussian
/// element, whose mass sits in the last difference, this spreads the
/// oscillation over all levels.
Martingale balanced_martingale(std::shared_ptr<const Filtration> filtration,
                               std::uint64_t seed, bool hermitian = false);

struct EnsembleSample {
  std::string label;
  Martingale martingale;
  bool classical = false;
  bool tracial = false;
};

/// `count` bmo-normalized martingales, cycling over the instances and
/// alternating plain Gaussian and balanced draws.
std::vector<EnsembleSample> make_ensemble(const std::vector<Instance>& instances, int count,
                                          std::uint64_t seed);

// Inequality checks

/// For each p: seeded lower bound ≥ bmo − tol, and bmo_p ≤ c_jn·p·bmo.
/// Records ratio = bmo_p / (p·bmo) with the optimizer witness. On
/// simultaneously diagonal data the exact classical value replaces the search.
VerifyReport check_jn(const Martingale& mart, const VerifyConfig& config,
                      const std::string& label = "", int sample = 0);

/// ‖bmo_p witness‖ recomputation: |objective(witness) − recorded value|.
double jn_witness_residual(const Martingale& mart, const SampleRecord& record);

/// lp_norm(x, p, η) ≤ c_jn·p·bmo for each p and η in the config.
VerifyReport check_bmo_in_lp(const Martingale& mart, const VerifyConfig& config,
                             const std::string& label = "", int sample = 0);

/// ‖(x − x_{n−1})a‖_p ≤ c_jn·p·bmo·‖a‖_p for a ∈ N_n D^{1/p}, plus the
/// structural identity for the state tr(a_ε^p ·) with a_ε = (|a*|^p + εD)^{1/p}.
/// Throws BadWitness when a is not in the subspace.
VerifyReport check_change_of_state(const Martingale& mart, int n, const Matrix& a, double p,
                                   const VerifyConfig& config, double epsilon = 1e-8);

struct LargeDeviationResult {
  Projection f;
  double t = 0.0;
  double norm_xf = 0.0;  // ‖(x − x_0) f‖
  double tail = 0.0;     // φ(1 − f)
  double bound = 0.0;    // c2·e^{−t·c1}
  bool pass = false;     // tail < bound
  double scale = 1.0;    // x was divided by this to get bmo ≤ 1
  double epsilon = 0.0;  // e^{−t·c1}
  double p_schedule = 0.0;  // 4 ln(1/ε)
};

/// f = 1_{[0,t]}(|x − x_0|) after rescaling to bmo(x) ≤ 1.
LargeDeviationResult large_deviation(const Martingale& mart, double t, const VerifyConfig& config);

struct ExponentialFit {
  double c1 = 0.0;
  double c2 = 0.0;
  int points = 0;
  int positive_tails = 0;
};

/// Largest c1 with tail ≤ c2·e^{−t·c1} on every (t, tail) point for the
/// given c2. Points with zero tail impose nothing; c1 is capped at 50.
ExponentialFit fit_exponential_tail(const std::vector<std::pair<double, double>>& points,
                                    double c2);

/// inf{λ > 0 : τ(e^{|x|/λ − 1}) ≤ 1} with τ the normalized trace.
double lexp_norm(const Matrix& x);

/// ‖x‖_exp ≤ c_jn·e/(1 − 1/e)·bmo(x). Throws NotTracial.
VerifyReport lexp_check(const Martingale& mart, const VerifyConfig& config);

struct KadisonReport {
  double min_eigenvalue = 0.0;  // of E(x*x) − E(x)*E(x) over samples
  int violations = 0;
  int samples = 0;
};

KadisonReport check_kadison(const Filtration& f, int n, int samples, std::uint64_t seed,
                            double tolerance = 1e-9);

/// Ratios ‖Q(z)‖/‖z‖ in L_p(l_2^c) and L_p(l_2^r) for random sequences.
/// At p = 2 both must stay ≤ 1 + 1e-9.
VerifyReport check_stein(const Filtration& f, const std::vector<double>& p_list, int samples,
                         std::uint64_t seed);

/// Closed-form Rademacher table: lp_norm = n^{1/2−1/p}, bmo_c = 1, bmo_r = √n,
/// and lp_norm/bmo_c increasing in n for each p.
VerifyReport counterexample_report(const std::vector<int>& n_list,
                                   const std::vector<double>& p_list);

struct ConstantFit {
  double c_hat = 0.0;  // max ratio / p
  double slope = 0.0;  // least squares of log max-ratio against log p
  bool pass = true;    // slope ≤ 1.15
  std::map<double, double> max_ratio;  // per p
};

/// Points are (p, bmo_p/bmo). Throws EmptyStream.
ConstantFit fit_constant(const std::vector<std::pair<double, double>>& points,
                         double slope_limit = 1.15);

/// Compact text for a number in report keys, e.g. "4" or "2.5".
std::string short_number(double v);

// Conditional expectation axioms

struct AxiomReport {
  std::map<std::string, double> worst;  // largest residual per axiom
  std::map<std::string, int> violations;
  int samples = 0;
  int total_violations() const;
};

/// Unitality, idempotence, Choi positivity, state preservation, module
/// property, commuting squares, Kadison and modular commutation, sampled
/// `samples` times per level.
AxiomReport check_expectation_axioms(const Filtration& f, int samples, std::uint64_t seed,
                                     double tolerance = 1e-9);

}  // namespace ncbmo
