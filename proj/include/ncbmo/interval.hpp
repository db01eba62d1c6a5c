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

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "ncbmo/norms.hpp"

namespace ncbmo {

using Rational = boost::multiprecision::cpp_rational;

/// [left, left + length] with exact endpoints.
struct Interval {
  Rational left;
  Rational length;

  Rational right() const { return left + length; }
  bool contains(const Interval& other) const {
    return left <= other.left && other.right() <= right();
  }
  friend bool operator==(const Interval& a, const Interval& b) {
    return a.left == b.left && a.length == b.length;
  }
};

/// Checks length > 0; throws BadSpec otherwise.
Interval make_interval(const Rational& left, const Rational& length);

enum class Grid { Dyadic, Shifted };

struct Covering {
  Interval interval;
  Grid grid;
  int level;  // J has length 2^{-level}
};

/// Smallest interval J ⊇ I from the dyadic grid or the grid shifted by
/// 1/(3·2^n), among lengths 2^{-n} ∈ [|I|, 6|I|]; ties go to the dyadic grid.
Covering covering_dyadic(const Interval& interval);

/// Matrix-valued step function on 2^depth equal cells of [0,1].
struct StepFunction {
  int depth = 0;
  std::vector<Matrix> values;

  Index num_cells() const { return static_cast<Index>(values.size()); }
  Index fiber_dim() const { return values.empty() ? 0 : values[0].rows(); }
  StepFunction adjoint() const;
  /// Cell encoding with the given fiber state (tracial by default).
  CellMartingale as_martingale() const;
};

/// Validates dimensions and cell count; throws DimensionMismatch.
StepFunction make_step_function(int depth, std::vector<Matrix> values);

/// Text format: "depth <m> fiber <k>" then 2^m·k² pairs "re im", cell-major,
/// row-major within a cell. '#' starts a comment.
StepFunction read_step_function(std::istream& in);
StepFunction read_step_function_file(const std::string& path);
void write_step_function(std::ostream& out, const StepFunction& f);

/// Cells [begin, end) of the grid, i.e. [begin/2^m, end/2^m].
struct GridInterval {
  Index begin = 0;
  Index end = 0;
  Index size() const { return end - begin; }
};

std::vector<GridInterval> grid_intervals(const StepFunction& f, bool dyadic_only = false);
Interval to_interval(const StepFunction& f, const GridInterval& g);
/// Throws BadSpec when the interval is not aligned with the grid of f.
GridInterval to_grid(const StepFunction& f, const Interval& i);

/// ‖avg_{I} (x − x_I)*(x − x_I)‖ on one grid interval (no square root).
double interval_mean_oscillation(const StepFunction& f, const GridInterval& g);

/// sup over grid intervals of the mean oscillation, without the square
/// root. The *_root variants return its square root.
double interval_bmo_c(const StepFunction& f, bool dyadic_only = false);
double interval_bmo(const StepFunction& f, bool dyadic_only = false);
double interval_bmo_c_root(const StepFunction& f, bool dyadic_only = false);
double interval_bmo_root(const StepFunction& f, bool dyadic_only = false);

/// sup_n ‖E_n((x − x_n)*(x − x_n))‖ for the dyadic martingale of f, the
/// quantity that interval_bmo_c(f, true) reproduces.
double bridged_martingale_bmo_c(const CellMartingale& x);
double bridged_martingale_bmo_c(const Martingale& mart);

struct IntervalOptions {
  int restarts = 4;
  int max_iterations = 500;
  std::uint64_t seed = 0x1417;
  double tolerance = 1e-10;
  /// Let a depend on t (a ∈ N ⊗ L_∞) instead of being constant on I.
  bool t_dependent = false;
  /// Take the max with the adjoint function.
  bool with_adjoint = true;
};

/// sup_{‖a‖_p ≤ 1} (avg_{t∈I} ‖(x(t) − x_I) a‖_p^p)^{1/p} on one interval, as a
/// lower bound with witness a. `start` seeds the search when nonempty.
NormReport interval_p_oscillation(const StepFunction& f, const GridInterval& g, double p,
                                  const IntervalOptions& options = {},
                                  const std::vector<Matrix>& start = {});

/// Sup of interval_p_oscillation over all grid intervals. Throws BadExponent
/// for p < 2.
NormReport interval_bmo_p_lower(const StepFunction& f, double p,
                                const IntervalOptions& options = {});

struct ComparisonRecord {
  GridInterval inner;
  GridInterval outer;
  double left = 0.0;    // ‖x‖_{p,I}
  double right = 0.0;   // ‖x‖_{p,J}
  double factor = 0.0;  // 2 (|J|/|I|)^{1/p}
  bool violated = false;
};

struct ComparisonReport {
  std::vector<ComparisonRecord> records;
  int violations = 0;
  double max_ratio = 0.0;  // max left / (factor·right)
};

/// Evaluates ‖x‖_{p,I} ≤ 2 (|J|/|I|)^{1/p} ‖x‖_{p,J} on each pair. The J search
/// starts from the I witness, so the right side is at least its value there.
/// Throws NotNested.
ComparisonReport interval_comparison_check(
    const StepFunction& f, double p, const std::vector<std::pair<Interval, Interval>>& pairs,
    const IntervalOptions& options = {}, double tolerance = 1e-5);

}  // namespace ncbmo
