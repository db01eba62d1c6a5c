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

#include "ncbmo/interval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ncbmo/error.hpp"

namespace ncbmo {

namespace {

using boost::multiprecision::cpp_int;

Rational pow2(int n) {
  cpp_int one = 1;
  return n >= 0 ? Rational(one << n) : Rational(one, one << (-n));
}

cpp_int floor_div(const Rational& r) {
  cpp_int num = boost::multiprecision::numerator(r);
  cpp_int den = boost::multiprecision::denominator(r);
  cpp_int q = num / den;  // truncates toward zero
  if (num < 0 && q * den != num) q -= 1;
  return q;
}

// Smallest n with 2^{-n} ≤ 6|I| and largest n with 2^{-n} ≥ |I|.
std::pair<int, int> level_range(const Rational& length) {
  double approx = static_cast<double>(length);
  int lo = static_cast<int>(std::floor(-std::log2(6.0 * approx))) - 2;
  int hi = static_cast<int>(std::ceil(-std::log2(approx))) + 2;
  while (pow2(-lo) > 6 * length) ++lo;
  while (pow2(-hi) < length) --hi;
  return {lo, hi};
}

}  // namespace

Interval make_interval(const Rational& left, const Rational& length) {
  if (!(length > 0)) throw Error(ErrorCode::BadSpec, "interval length must be positive");
  return {left, length};
}

Covering covering_dyadic(const Interval& interval) {
  auto [lo, hi] = level_range(interval.length);
  // largest n first gives the smallest J
  for (int n = hi; n >= lo; --n) {
    Rational len = pow2(-n);
    for (Grid grid : {Grid::Dyadic, Grid::Shifted}) {
      Rational offset = grid == Grid::Dyadic ? Rational(0) : len / 3;
      Rational k = Rational(floor_div((interval.left - offset) / len));
      Interval j{offset + k * len, len};
      if (j.contains(interval)) return {j, grid, n};
    }
  }
  throw std::logic_error("covering_dyadic: no covering interval found");
}

StepFunction StepFunction::adjoint() const {
  StepFunction out = *this;
  for (Matrix& v : out.values) v = v.adjoint().eval();
  return out;
}

CellMartingale StepFunction::as_martingale() const {
  CellMartingale m;
  m.depth = depth;
  m.fiber = State::tracial(fiber_dim());
  m.cells = values;
  return m;
}

StepFunction make_step_function(int depth, std::vector<Matrix> values) {
  if (depth < 0 || depth > 20) throw Error(ErrorCode::BadSpec, "depth out of range");
  if (static_cast<Index>(values.size()) != (Index{1} << depth))
    throw Error(ErrorCode::DimensionMismatch,
                "expected " + std::to_string(Index{1} << depth) + " cells, got " +
                    std::to_string(values.size()));
  Index k = values[0].rows();
  for (const Matrix& v : values)
    if (v.rows() != k || v.cols() != k || k == 0)
      throw Error(ErrorCode::DimensionMismatch, "cell values must be square of equal size");
  return {depth, std::move(values)};
}

StepFunction read_step_function(std::istream& in) {
  std::vector<std::pair<int, std::string>> tokens;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.emplace_back(line_no, tok);
  }
  std::size_t pos = 0;
  auto fail = [&](const std::string& msg) -> void {
    int at = pos < tokens.size() ? tokens[pos].first : line_no;
    throw Error(ErrorCode::ParseError, "line " + std::to_string(at) + ": " + msg);
  };
  auto next_number = [&](const char* what) {
    if (pos >= tokens.size()) fail(std::string("unexpected end of input, expected ") + what);
    try {
      std::size_t used = 0;
      double v = std::stod(tokens[pos].second, &used);
      if (used != tokens[pos].second.size()) throw std::invalid_argument("trailing");
      ++pos;
      return v;
    } catch (const std::exception&) {
      fail(std::string("expected ") + what + ", got '" + tokens[pos].second + "'");
    }
    return 0.0;
  };
  auto expect_word = [&](const char* word) {
    if (pos >= tokens.size() || tokens[pos].second != word)
      fail(std::string("expected '") + word + "'");
    ++pos;
  };
  expect_word("depth");
  double depth = next_number("depth");
  expect_word("fiber");
  double fiber = next_number("fiber dimension");
  if (depth < 0 || depth > 12 || depth != std::floor(depth)) fail("depth must be an integer in [0,12]");
  if (fiber < 1 || fiber > 64 || fiber != std::floor(fiber)) fail("fiber dimension must be an integer in [1,64]");
  Index cells = Index{1} << static_cast<int>(depth);
  Index k = static_cast<Index>(fiber);
  std::vector<Matrix> values;
  for (Index c = 0; c < cells; ++c) {
    Matrix m(k, k);
    for (Index i = 0; i < k; ++i)
      for (Index j = 0; j < k; ++j) {
        double re = next_number("real part");
        double im = next_number("imaginary part");
        m(i, j) = Complex(re, im);
      }
    values.push_back(m);
  }
  if (pos != tokens.size()) fail("trailing data after the last cell");
  return make_step_function(static_cast<int>(depth), std::move(values));
}

StepFunction read_step_function_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return read_step_function(in);
}

void write_step_function(std::ostream& out, const StepFunction& f) {
  out << "depth " << f.depth << " fiber " << f.fiber_dim() << "\n";
  out << std::setprecision(17);
  for (const Matrix& v : f.values) {
    for (Index i = 0; i < v.rows(); ++i) {
      for (Index j = 0; j < v.cols(); ++j)
        out << (j ? "  " : "") << v(i, j).real() << " " << v(i, j).imag();
      out << "\n";
    }
  }
}

std::vector<GridInterval> grid_intervals(const StepFunction& f, bool dyadic_only) {
  std::vector<GridInterval> out;
  Index cells = f.num_cells();
  if (dyadic_only) {
    for (int n = 0; n <= f.depth; ++n) {
      Index width = cells >> n;
      for (Index b = 0; b < cells; b += width) out.push_back({b, b + width});
    }
  } else {
    for (Index b = 0; b < cells; ++b)
      for (Index e = b + 1; e <= cells; ++e) out.push_back({b, e});
  }
  return out;
}

Interval to_interval(const StepFunction& f, const GridInterval& g) {
  Rational cell = pow2(-f.depth);
  return {Rational(g.begin) * cell, Rational(g.size()) * cell};
}

GridInterval to_grid(const StepFunction& f, const Interval& i) {
  Rational scale = pow2(f.depth);
  Rational b = i.left * scale, e = i.right() * scale;
  if (boost::multiprecision::denominator(b) != 1 || boost::multiprecision::denominator(e) != 1 ||
      b < 0 || e > scale || !(e > b))
    throw Error(ErrorCode::BadSpec, "interval is not aligned with the grid of [0,1]");
  return {static_cast<Index>(boost::multiprecision::numerator(b)),
          static_cast<Index>(boost::multiprecision::numerator(e))};
}

namespace {

Matrix average(const StepFunction& f, const GridInterval& g) {
  Matrix avg = Matrix::Zero(f.fiber_dim(), f.fiber_dim());
  for (Index c = g.begin; c < g.end; ++c) avg += f.values[c];
  return avg / static_cast<double>(g.size());
}

std::vector<Matrix> deviations(const StepFunction& f, const GridInterval& g) {
  Matrix avg = average(f, g);
  std::vector<Matrix> out;
  for (Index c = g.begin; c < g.end; ++c) out.push_back(f.values[c] - avg);
  return out;
}

}  // namespace

double interval_mean_oscillation(const StepFunction& f, const GridInterval& g) {
  Matrix acc = Matrix::Zero(f.fiber_dim(), f.fiber_dim());
  for (const Matrix& y : deviations(f, g)) acc += y.adjoint() * y;
  return op_norm(acc / static_cast<double>(g.size()));
}

double interval_bmo_c(const StepFunction& f, bool dyadic_only) {
  double best = 0.0;
  for (const GridInterval& g : grid_intervals(f, dyadic_only))
    best = std::max(best, interval_mean_oscillation(f, g));
  return best;
}

double interval_bmo(const StepFunction& f, bool dyadic_only) {
  return std::max(interval_bmo_c(f, dyadic_only), interval_bmo_c(f.adjoint(), dyadic_only));
}

double interval_bmo_c_root(const StepFunction& f, bool dyadic_only) {
  return std::sqrt(interval_bmo_c(f, dyadic_only));
}

double interval_bmo_root(const StepFunction& f, bool dyadic_only) {
  return std::sqrt(interval_bmo(f, dyadic_only));
}

double bridged_martingale_bmo_c(const CellMartingale& x) {
  double best = 0.0;
  for (int n = 0; n <= x.depth; ++n) {
    std::vector<Matrix> xn = x.value(n);
    std::vector<Matrix> sq;
    for (std::size_t c = 0; c < xn.size(); ++c) {
      Matrix y = x.cells[c] - xn[c];
      sq.push_back(y.adjoint() * y);
    }
    for (const Matrix& e : x.expect(n, sq)) best = std::max(best, op_norm(e));
  }
  return best;
}

double bridged_martingale_bmo_c(const Martingale& mart) {
  double best = 0.0;
  for (int n = 0; n < mart.size(); ++n) {
    Matrix y = mart.limit() - mart.values()[n];
    best = std::max(best, op_norm(mart.filtration().expect(n, y.adjoint() * y)));
  }
  return best;
}

namespace {

// Power iteration for a ↦ (avg_c ‖y_c a‖_p^p)^{1/p} over the unit sphere of S_p.
class CellOptimizer {
 public:
  CellOptimizer(std::vector<Matrix> y, double p, const IntervalOptions& opt)
      : y_(std::move(y)), p_(p), pc_(conjugate_exponent(p)), opt_(opt) {}

  double value(const Matrix& a) const {
    double na = schatten_norm(a, p_);
    if (!(na > 0.0)) return 0.0;
    double acc = 0.0;
    for (const Matrix& yc : y_) acc += std::pow(schatten_norm(yc * a, p_) / na, p_);
    return std::pow(acc / static_cast<double>(y_.size()), 1.0 / p_);
  }

  std::vector<Matrix> seeds() const {
    Index k = y_[0].cols();
    Matrix sq = Matrix::Zero(k, k), absp = Matrix::Zero(k, k);
    for (const Matrix& yc : y_) {
      sq += yc.adjoint() * yc;
      absp += mat_power(op_abs(yc), p_);
    }
    return {top(sq), Matrix::Identity(k, k), top(absp)};
  }

  Matrix run(Matrix a, double& best, int& iterations) const {
    a = normalize(a);
    Matrix best_a = a;
    best = value(a);
    std::vector<double> history{best};
    for (int it = 0; it < opt_.max_iterations; ++it) {
      ++iterations;
      Matrix g = Matrix::Zero(a.rows(), a.cols());
      double total = 0.0;
      std::vector<double> norms;
      for (const Matrix& yc : y_) {
        norms.push_back(schatten_norm(yc * a, p_));
        total += std::pow(norms.back(), p_);
      }
      if (!(total > 0.0)) break;
      total = std::pow(total, 1.0 / p_);
      for (std::size_t c = 0; c < y_.size(); ++c) {
        if (norms[c] == 0.0) continue;
        Matrix nc = norming_element(y_[c] * a, p_) * std::pow(norms[c] / total, p_ - 1.0);
        g += y_[c].adjoint() * nc;
      }
      Matrix next = norming_element(g, pc_);
      if (!next.allFinite()) throw Error(ErrorCode::OptimizerDiverged, "non-finite iterate");
      if (next.norm() == 0.0) break;
      a = normalize(next);
      double f = value(a);
      history.push_back(f);
      if (f > best) {
        best = f;
        best_a = a;
      }
      std::size_t h = history.size();
      if (std::abs(f - history[h - 2]) <= 1e-14 * std::max(f, 1e-300)) break;
      if (h > 20 && f - history[h - 21] <= opt_.tolerance * std::max(f, 1e-300)) break;
    }
    return best_a;
  }

 private:
  Matrix normalize(const Matrix& a) const {
    double na = schatten_norm(a, p_);
    return na > 0.0 ? Matrix(a / na) : a;
  }
  static Matrix top(const Matrix& h) {
    HermitianEig eig = herm_eig(hermitian_part(h));
    double t = eig.eigenvalues.maxCoeff();
    return spectral_projection(hermitian_part(h), t - 1e-10 * std::max(std::abs(t), 1e-300), kInf)
        .matrix;
  }

  std::vector<Matrix> y_;
  double p_, pc_;
  IntervalOptions opt_;
};

NormReport one_side(const StepFunction& f, const GridInterval& g, double p,
                    const IntervalOptions& options, const std::vector<Matrix>& start,
                    std::uint64_t salt) {
  NormReport rep;
  rep.name = "interval_p_oscillation";
  std::vector<Matrix> y = deviations(f, g);
  double scale = 0.0;
  for (const Matrix& yc : y) scale = std::max(scale, op_norm(yc));
  Index k = f.fiber_dim();
  if (scale == 0.0) {
    rep.witness = {Matrix::Identity(k, k) / schatten_norm(Matrix::Identity(k, k), p)};
    return rep;
  }
  if (options.t_dependent || std::isinf(p)) {
    // concentrating a(t) on the worst cell attains max_c ‖y_c‖
    std::size_t arg = 0;
    for (std::size_t c = 0; c < y.size(); ++c)
      if (op_norm(y[c]) > op_norm(y[arg])) arg = c;
    rep.value = op_norm(y[arg]);
    rep.upper_bound = rep.value;
    rep.level_n = static_cast<int>(g.begin + static_cast<Index>(arg));
    return rep;
  }
  CellOptimizer opt(y, p, options);
  std::vector<Matrix> starts = start;
  for (const Matrix& s : opt.seeds()) starts.push_back(s);
  std::mt19937_64 rng(options.seed ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
  for (int r = 0; r < options.restarts; ++r) starts.push_back(random_gaussian(k, k, rng));
  for (const Matrix& s : starts) {
    double val = 0.0;
    Matrix a = opt.run(s, val, rep.iterations);
    ++rep.restarts;
    if (val > rep.value) {
      rep.value = val;
      rep.witness = {a};
    }
  }
  return rep;
}

}  // namespace

NormReport interval_p_oscillation(const StepFunction& f, const GridInterval& g, double p,
                                  const IntervalOptions& options,
                                  const std::vector<Matrix>& start) {
  if (!(p >= 2.0)) throw Error(ErrorCode::BadExponent, "interval BMO_p needs p >= 2");
  std::uint64_t salt = static_cast<std::uint64_t>(g.begin * 4099 + g.end);
  NormReport col = one_side(f, g, p, options, start, salt);
  if (!options.with_adjoint) return col;
  NormReport row = one_side(f.adjoint(), g, p, options, {}, salt + 0x51);
  row.adjoint = true;
  return row.value > col.value ? row : col;
}

NormReport interval_bmo_p_lower(const StepFunction& f, double p, const IntervalOptions& options) {
  if (!(p >= 2.0)) throw Error(ErrorCode::BadExponent, "interval BMO_p needs p >= 2");
  NormReport best;
  best.name = "interval_bmo_p";
  int iterations = 0, restarts = 0;
  for (const GridInterval& g : grid_intervals(f)) {
    NormReport r = interval_p_oscillation(f, g, p, options);
    iterations += r.iterations;
    restarts += r.restarts;
    if (r.value > best.value) {
      best = r;
      best.name = "interval_bmo_p";
      best.level_n = static_cast<int>(g.begin);
      best.level_m = static_cast<int>(g.end);
    }
  }
  best.iterations = iterations;
  best.restarts = restarts;
  return best;
}

ComparisonReport interval_comparison_check(
    const StepFunction& f, double p, const std::vector<std::pair<Interval, Interval>>& pairs,
    const IntervalOptions& options, double tolerance) {
  IntervalOptions column = options;
  column.with_adjoint = false;
  column.t_dependent = false;
  ComparisonReport rep;
  for (const auto& [inner, outer] : pairs) {
    if (!outer.contains(inner)) throw Error(ErrorCode::NotNested, "I is not contained in J");
    ComparisonRecord rec;
    rec.inner = to_grid(f, inner);
    rec.outer = to_grid(f, outer);
    NormReport left = interval_p_oscillation(f, rec.inner, p, column);
    NormReport right = interval_p_oscillation(f, rec.outer, p, column, left.witness);
    rec.left = left.value;
    rec.right = right.value;
    rec.factor = 2.0 * std::pow(static_cast<double>(rec.outer.size()) /
                                    static_cast<double>(rec.inner.size()), 1.0 / p);
    double bound = rec.factor * rec.right;
    rec.violated = rec.left > bound + tolerance * std::max(1.0, bound);
    if (bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, rec.left / bound);
    rep.violations += rec.violated ? 1 : 0;
    rep.records.push_back(rec);
  }
  return rep;
}

}  // namespace ncbmo
