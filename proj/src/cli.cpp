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

#include "ncbmo/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "ncbmo/error.hpp"

namespace ncbmo {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------- spec parser

struct Line {
  int number;
  std::vector<std::string> tokens;
};

[[noreturn]] void parse_fail(int line, const std::string& msg) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + msg);
}

double parse_real(const Line& l, const std::string& tok) {
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used == tok.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  parse_fail(l.number, "expected a number, got '" + tok + "'");
}

Complex parse_complex(const Line& l, const std::string& tok) {
  auto colon = tok.find(':');
  if (colon == std::string::npos) return {parse_real(l, tok), 0.0};
  return {parse_real(l, tok.substr(0, colon)), parse_real(l, tok.substr(colon + 1))};
}

Index parse_size(const Line& l, const std::string& tok, Index max = 64) {
  double v = parse_real(l, tok);
  if (v < 1 || v > static_cast<double>(max) || v != std::floor(v))
    parse_fail(l.number, "expected an integer in [1," + std::to_string(max) + "], got '" + tok + "'");
  return static_cast<Index>(v);
}

class SpecReader {
 public:
  explicit SpecReader(std::istream& in) {
    std::string text;
    int number = 0;
    while (std::getline(in, text)) {
      ++number;
      if (auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
      std::istringstream ls(text);
      Line l{number, {}};
      std::string tok;
      while (ls >> tok) l.tokens.push_back(tok);
      if (!l.tokens.empty()) lines_.push_back(std::move(l));
    }
  }

  FiltrationSpec parse() {
    for (pos_ = 0; pos_ < lines_.size();) {
      const Line& l = lines_[pos_++];
      const std::string& key = l.tokens[0];
      if (key == "dim") {
        expect_count(l, 2);
        dim_ = parse_size(l, l.tokens[1]);
        dim_line_ = l.number;
      } else if (key == "factors") {
        if (l.tokens.size() < 2) parse_fail(l.number, "factors needs at least one size");
        factors_.clear();
        for (std::size_t i = 1; i < l.tokens.size(); ++i) factors_.push_back(parse_size(l, l.tokens[i]));
        factors_line_ = l.number;
      } else if (key == "density") {
        density_line_ = l;
        if (l.tokens.size() >= 2 && l.tokens[1] == "matrix") density_rows_ = take_rows(l);
      } else if (key == "level") {
        levels_.push_back(l);
      } else if (key == "element") {
        element_line_ = l;
        if (l.tokens.size() >= 2 && l.tokens[1] == "matrix") element_rows_ = take_rows(l);
      } else if (key == "dyadic") {
        if (l.tokens.size() != 5 || l.tokens[1] != "depth" || l.tokens[3] != "fiber")
          parse_fail(l.number, "expected 'dyadic depth <m> fiber <k>'");
        dyadic_ = l;
      } else {
        parse_fail(l.number, "unknown key '" + key + "'");
      }
    }
    return dyadic_ ? build_dyadic() : build_levels();
  }

 private:
  static void expect_count(const Line& l, std::size_t n) {
    if (l.tokens.size() != n)
      parse_fail(l.number, "'" + l.tokens[0] + "' expects " + std::to_string(n - 1) + " value(s)");
  }

  std::vector<Line> take_rows(const Line& header) {
    if (dim_ == 0 && !dyadic_) parse_fail(header.number, "matrix input needs 'dim' first");
    Index rows = dyadic_ ? fiber_dim() : dim_;
    std::vector<Line> out;
    for (Index r = 0; r < rows; ++r) {
      if (pos_ >= lines_.size()) parse_fail(header.number, "matrix ends early, expected " + std::to_string(rows) + " rows");
      out.push_back(lines_[pos_++]);
      if (static_cast<Index>(out.back().tokens.size()) != rows)
        parse_fail(out.back().number, "matrix row needs " + std::to_string(rows) + " entries");
    }
    return out;
  }

  Index fiber_dim() const { return parse_size(*dyadic_, dyadic_->tokens[4]); }

  Matrix read_rows(const std::vector<Line>& rows) const {
    Index n = static_cast<Index>(rows.size());
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) m(i, j) = parse_complex(rows[i], rows[i].tokens[j]);
    return m;
  }

  Matrix diagonal_values(const Line& l, std::size_t from, std::size_t to) const {
    Matrix m = Matrix::Zero(static_cast<Index>(to - from), static_cast<Index>(to - from));
    for (std::size_t i = from; i < to; ++i) m(i - from, i - from) = parse_complex(l, l.tokens[i]);
    return m;
  }

  State build_state(Index n) const {
    if (!density_line_) return State::tracial(n);
    const Line& l = *density_line_;
    if (l.tokens.size() < 2) parse_fail(l.number, "density needs a kind: uniform, diag, tensor or matrix");
    const std::string& kind = l.tokens[1];
    Matrix d;
    if (kind == "uniform") {
      expect_count(l, 2);
      return State::tracial(n);
    } else if (kind == "diag") {
      if (static_cast<Index>(l.tokens.size()) != n + 2)
        parse_fail(l.number, "density diag needs " + std::to_string(n) + " entries");
      d = diagonal_values(l, 2, l.tokens.size());
    } else if (kind == "tensor") {
      d = Matrix::Identity(1, 1);
      std::size_t start = 2;
      for (std::size_t i = 2; i <= l.tokens.size(); ++i) {
        if (i == l.tokens.size() || l.tokens[i] == "|") {
          if (i == start) parse_fail(l.number, "empty tensor factor");
          d = kron(d, diagonal_values(l, start, i));
          start = i + 1;
        }
      }
      if (d.rows() != n)
        parse_fail(l.number, "tensor density has size " + std::to_string(d.rows()) + ", expected " + std::to_string(n));
    } else if (kind == "matrix") {
      d = read_rows(density_rows_);
    } else {
      parse_fail(l.number, "unknown density kind '" + kind + "'");
    }
    if ((d - d.adjoint()).norm() > 1e-12 * std::max(1.0, d.norm()))
      parse_fail(l.number, "density must be Hermitian");
    double trace = d.trace().real();
    if (std::abs(trace - 1.0) > 1e-9) {
      std::ostringstream msg;
      msg << "density trace must be 1, got " << std::setprecision(12) << trace;
      parse_fail(l.number, msg.str());
    }
    d = hermitian_part(d) / trace;
    if (herm_eig(d).eigenvalues.minCoeff() <= 1e-12)
      parse_fail(l.number, "density must be positive definite (faithful state)");
    return State(d);
  }

  Subalgebra build_level(const Line& l) const {
    if (l.tokens.size() < 2) parse_fail(l.number, "level needs a kind");
    const std::string& kind = l.tokens[1];
    auto single = [&](const std::string& k, Index n) -> Subalgebra {
      if (k == "scalar") return scalar_algebra(n);
      if (k == "diagonal") return diagonal_algebra(n);
      if (k == "full") return Subalgebra::full(n);
      parse_fail(l.number, "unknown level kind '" + k + "'");
    };
    if (kind == "scalar" || kind == "diagonal" || kind == "full") {
      expect_count(l, 2);
      return single(kind, dim_);
    }
    if (kind == "blocks") {
      std::vector<BlockSpec> spec;
      Index total = 0;
      for (std::size_t i = 2; i < l.tokens.size(); ++i) {
        const std::string& tok = l.tokens[i];
        auto x = tok.find('x');
        if (x == std::string::npos) parse_fail(l.number, "block '" + tok + "' is not of the form <size>x<multiplicity>");
        BlockSpec b{parse_size(l, tok.substr(0, x)), parse_size(l, tok.substr(x + 1))};
        total += b.block_size * b.multiplicity;
        spec.push_back(b);
      }
      if (spec.empty()) parse_fail(l.number, "blocks needs at least one block");
      if (total != dim_)
        parse_fail(l.number, "blocks cover " + std::to_string(total) + " of " + std::to_string(dim_) + " dimensions");
      return block_subalgebra(spec);
    }
    if (kind == "tensor") {
      if (factors_.empty()) parse_fail(l.number, "tensor levels need a 'factors' line");
      if (l.tokens.size() != factors_.size() + 2)
        parse_fail(l.number, "tensor level needs one kind per factor (" + std::to_string(factors_.size()) + ")");
      Subalgebra acc = single(l.tokens[2], factors_[0]);
      for (std::size_t i = 1; i < factors_.size(); ++i) acc = tensor(acc, single(l.tokens[i + 2], factors_[i]));
      return acc;
    }
    parse_fail(l.number, "unknown level kind '" + kind + "'");
  }

  std::optional<Matrix> build_element(Index n) const {
    if (!element_line_) return std::nullopt;
    const Line& l = *element_line_;
    if (l.tokens.size() < 2) parse_fail(l.number, "element needs a kind: identity, diag or matrix");
    const std::string& kind = l.tokens[1];
    if (kind == "identity") {
      expect_count(l, 2);
      return Matrix::Identity(n, n);
    }
    if (kind == "diag") {
      if (static_cast<Index>(l.tokens.size()) != n + 2)
        parse_fail(l.number, "element diag needs " + std::to_string(n) + " entries");
      return diagonal_values(l, 2, l.tokens.size());
    }
    if (kind == "matrix") return read_rows(element_rows_);
    parse_fail(l.number, "unknown element kind '" + kind + "'");
  }

  FiltrationSpec finish(Filtration f) const {
    FiltrationSpec out;
    auto shared = std::make_shared<const Filtration>(std::move(f));
    out.element = build_element(shared->ambient_dim());
    if (out.element && !shared->levels()[shared->top()].contains(*out.element))
      parse_fail(element_line_->number, "element does not lie in the top level");
    out.filtration = shared;
    return out;
  }

  FiltrationSpec build_dyadic() const {
    const Line& l = *dyadic_;
    double depth = parse_real(l, l.tokens[2]);
    if (depth < 0 || depth > 6 || depth != std::floor(depth)) parse_fail(l.number, "depth must be an integer in [0,6]");
    Index k = fiber_dim();
    if (!levels_.empty()) parse_fail(levels_[0].number, "'level' lines cannot be combined with 'dyadic'");
    Index n = (Index{1} << static_cast<int>(depth)) * k;
    if (dim_ != 0 && dim_ != n) parse_fail(dim_line_, "dim does not match the dyadic shortcut (" + std::to_string(n) + ")");
    if (n > 64) parse_fail(l.number, "dyadic filtration exceeds dimension 64");
    State fiber = build_state(k);
    Filtration f = dyadic_classical_filtration(static_cast<int>(depth), k, fiber);
    return finish(std::move(f));
  }

  FiltrationSpec build_levels() const {
    if (dim_ == 0) parse_fail(lines_.empty() ? 1 : lines_[0].number, "missing 'dim'");
    if (!factors_.empty()) {
      Index product = 1;
      for (Index f : factors_) product *= f;
      if (product != dim_) parse_fail(factors_line_, "factor sizes multiply to " + std::to_string(product) + ", not dim");
    }
    if (levels_.empty()) parse_fail(dim_line_, "at least one 'level' line is required");
    State state = build_state(dim_);
    std::vector<Subalgebra> levels;
    for (const Line& l : levels_) levels.push_back(build_level(l));
    try {
      return finish(validate_filtration(state, levels));
    } catch (const Error& e) {
      if (e.code() == ErrorCode::ParseError) throw;
      parse_fail(levels_.front().number, std::string("invalid filtration: ") + e.what());
    }
  }

  std::vector<Line> lines_;
  std::size_t pos_ = 0;
  Index dim_ = 0;
  int dim_line_ = 1;
  std::vector<Index> factors_;
  int factors_line_ = 1;
  std::optional<Line> density_line_, element_line_, dyadic_;
  std::vector<Line> density_rows_, element_rows_, levels_;
};

// ---------------------------------------------------------------- commands

bool is_classical(const Filtration& f) {
  auto diagonal = [](const Matrix& m) {
    Matrix off = m;
    off.diagonal().setZero();
    return off.norm() <= 1e-12 * std::max(1.0, m.norm());
  };
  if (!diagonal(f.state().density())) return false;
  const Subalgebra& top = f.levels()[f.top()];
  if (top.is_full()) return f.ambient_dim() == 1;
  for (const Matrix& b : top.basis())
    if (!diagonal(b)) return false;
  return true;
}

std::vector<double> effective_p(const RunConfig& c) {
  if (!c.p_list.empty()) return c.p_list;
  if (c.command == "counterexample") return {3.0, 4.0, 6.0};
  if (c.command == "norms") return {4.0};
  if (c.command == "interval") return {2.0, 4.0};
  return {3.0, 4.0, 6.0, 8.0, 12.0};
}

VerifyConfig verify_config(const RunConfig& c) {
  VerifyConfig v;
  v.seed = c.seed;
  v.ensemble_size = c.ensemble;
  v.positive_witness = c.positive_witness;
  v.t_list = c.t_list;
  if (c.command != "counterexample" && c.command != "interval" && c.command != "norms")
    v.p_list = effective_p(c);
  if (c.eta) v.eta_list = {*c.eta};
  if (c.eta) v.eta = *c.eta;
  v.validate();
  return v;
}

std::vector<EnsembleSample> load_samples(const RunConfig& c) {
  if (c.ensemble < 1) throw Error(ErrorCode::BadSpec, "--ensemble must be at least 1");
  if (c.spec_path.empty()) return make_ensemble(standard_instances(c.seed), c.ensemble, c.seed);
  FiltrationSpec spec = parse_filtration_spec_file(c.spec_path);
  bool classical = is_classical(*spec.filtration);
  bool tracial = spec.filtration->state().is_tracial();
  if (spec.element) {
    std::vector<EnsembleSample> out;
    for (int i = 0; i < c.ensemble; ++i)
      out.push_back({"spec", decompose(spec.filtration, *spec.element), classical, tracial});
    return out;
  }
  return make_ensemble({{"spec", spec.filtration, classical, tracial}}, c.ensemble, c.seed);
}

VerifyReport run_norms(const RunConfig& c, const std::vector<EnsembleSample>& samples) {
  VerifyReport rep;
  double eta = c.eta.value_or(0.5);
  int index = 0;
  for (const EnsembleSample& s : samples) {
    const Martingale& m = s.martingale;
    SampleRecord base;
    base.check = "norms";
    base.label = s.label;
    base.sample = index;
    base.values["bmo_c"] = bmo_c(m);
    base.values["bmo_r"] = bmo_r(m);
    base.values["bmo"] = bmo(m);
    rep.records.push_back(base);
    for (double p : effective_p(c)) {
      SampleRecord r;
      r.check = "norms";
      r.label = s.label;
      r.sample = index;
      r.values["p"] = p;
      r.values["eta"] = eta;
      r.values["lp_norm"] = lp_norm(m.filtration().state(), m.limit(), p, eta);
      if (p >= 1.0) {
        r.values["hp_c"] = hp_c(m, p, eta);
        r.values["hp"] = hp(m, p, eta);
      }
      if (p >= 2.0) {
        BmoPOptions bo;
        bo.seed = c.seed + static_cast<std::uint64_t>(index);
        bo.positive = c.positive_witness;
        NormReport b = bmo_p(m, p, bo);
        r.values["bmo_p_lower"] = b.value;
        r.witness = b.witness;
        r.level_n = b.level_n;
        r.adjoint = b.adjoint;
        SupNormOptions so;
        so.seed = c.seed + static_cast<std::uint64_t>(index);
        NormReport mo = lp_c_mo(m, p, so);
        r.values["lp_c_mo_lower"] = mo.value;
        if (mo.upper_bound) r.values["lp_c_mo_upper"] = *mo.upper_bound;
      }
      rep.records.push_back(std::move(r));
    }
    ++index;
  }
  return rep;
}

VerifyReport run_jn(const RunConfig& c, const std::vector<EnsembleSample>& samples) {
  VerifyConfig v = verify_config(c);
  VerifyReport rep;
  std::vector<std::pair<double, double>> points;
  int index = 0;
  for (const EnsembleSample& s : samples) {
    VerifyReport r = check_jn(s.martingale, v, s.label, index++);
    for (const SampleRecord& rec : r.records)
      points.emplace_back(rec.values.at("p"), rec.values.at("bmo_p") / rec.values.at("bmo"));
    rep.merge(r);
  }
  ConstantFit fit = fit_constant(points);
  rep.constants["jn.c_hat"] = fit.c_hat;
  rep.constants["jn.slope"] = fit.slope;
  for (const auto& [p, ratio] : fit.max_ratio)
    rep.constants["jn.max_ratio.p=" + short_number(p)] = ratio;
  rep.flags["jn.growth"] = fit.pass;
  return rep;
}

VerifyReport run_inclusion(const RunConfig& c, const std::vector<EnsembleSample>& samples) {
  VerifyConfig v = verify_config(c);
  VerifyReport rep;
  double worst = 0.0;
  int index = 0;
  for (const EnsembleSample& s : samples) {
    VerifyReport r = check_bmo_in_lp(s.martingale, v, s.label, index++);
    for (const SampleRecord& rec : r.records)
      if (rec.check == "inclusion") worst = std::max(worst, rec.values.at("ratio"));
    rep.merge(r);
  }
  rep.constants["inclusion.c_hat"] = worst;
  return rep;
}

VerifyReport run_largedev(const RunConfig& c, const std::vector<EnsembleSample>& samples) {
  VerifyConfig v = verify_config(c);
  VerifyReport rep;
  std::vector<std::pair<double, double>> all, classical;
  int index = 0;
  for (const EnsembleSample& s : samples) {
    for (double t : v.t_list) {
      LargeDeviationResult ld = large_deviation(s.martingale, t, v);
      SampleRecord r;
      r.check = "largedev";
      r.label = s.label;
      r.sample = index;
      r.values["t"] = t;
      r.values["norm_xf"] = ld.norm_xf;
      r.values["tail"] = ld.tail;
      r.values["bound"] = ld.bound;
      r.values["tail_ok"] = ld.pass;
      r.values["scale"] = ld.scale;
      r.values["epsilon"] = ld.epsilon;
      r.values["p_schedule"] = ld.p_schedule;
      r.values["rank"] = static_cast<double>(ld.f.rank);
      r.pass = ld.norm_xf <= t + 1e-9;
      rep.records.push_back(std::move(r));
      all.emplace_back(t, ld.tail);
      if (s.classical && s.tracial) classical.emplace_back(t, ld.tail);
    }
    ++index;
  }
  ExponentialFit fit = fit_exponential_tail(all, v.c2);
  rep.constants["largedev.c1_hat"] = fit.c1;
  rep.constants["largedev.c2_hat"] = fit.c2;
  rep.constants["largedev.fit_ok"] = fit.c2 <= 10.0 && fit.c1 >= 0.05;
  if (!classical.empty()) {
    ExponentialFit cf = fit_exponential_tail(classical, v.c2);
    rep.constants["largedev.classical.c1_hat"] = cf.c1;
    rep.constants["largedev.classical.c2_hat"] = cf.c2;
    rep.flags["largedev.classical_fit"] = cf.c2 <= 10.0 && cf.c1 >= 0.05;
  }
  return rep;
}

StepFunction load_step(const RunConfig& c) {
  if (!c.spec_path.empty()) return read_step_function_file(c.spec_path);
  std::mt19937_64 rng(c.seed);
  std::vector<Matrix> cells;
  for (int i = 0; i < 8; ++i) cells.push_back(random_gaussian(2, 2, rng));
  return make_step_function(3, cells);
}

VerifyReport run_interval(const RunConfig& c) {
  StepFunction f = load_step(c);
  VerifyReport rep;
  SampleRecord r;
  r.check = "interval";
  r.label = c.spec_path.empty() ? "random" : "spec";
  r.values["bmo_c"] = interval_bmo_c(f);
  r.values["bmo"] = interval_bmo(f);
  r.values["bmo_root"] = interval_bmo_root(f);
  double dyadic = interval_bmo_c(f, true);
  double bridged = bridged_martingale_bmo_c(f.as_martingale());
  r.values["dyadic_bmo_c"] = dyadic;
  r.values["bridged_bmo_c"] = bridged;
  r.pass = std::abs(dyadic - bridged) <= 1e-8 * std::max(1.0, bridged);
  rep.records.push_back(r);

  IntervalOptions io;
  io.seed = c.seed;
  for (double p : effective_p(c)) {
    if (p < 2.0) throw Error(ErrorCode::BadExponent, "interval BMO_p needs p >= 2");
    NormReport b = interval_bmo_p_lower(f, p, io);
    SampleRecord rp;
    rp.check = "interval_bmo_p";
    rp.label = r.label;
    rp.values["p"] = p;
    rp.values["lower"] = b.value;
    rp.values["begin"] = static_cast<double>(b.level_n);
    rp.values["end"] = static_cast<double>(b.level_m);
    rp.witness = b.witness;
    rp.adjoint = b.adjoint;
    rep.records.push_back(std::move(rp));
  }

  // nested grid pairs: the two halves plus random ones
  std::mt19937_64 rng(c.seed ^ 0x17e5);
  Index cells = f.num_cells();
  std::vector<std::pair<Interval, Interval>> pairs;
  Rational cell = Rational(1) / Rational(cells);
  if (cells >= 2) {
    pairs.push_back({make_interval(0, Rational(1, 2)), make_interval(0, 1)});
    pairs.push_back({make_interval(Rational(1, 2), Rational(1, 2)), make_interval(0, 1)});
  }
  std::uniform_int_distribution<Index> pick(0, cells - 1);
  while (pairs.size() < 20) {
    Index a = pick(rng), b = pick(rng), d = pick(rng), e = pick(rng);
    std::vector<Index> s{a, b, d, e};
    std::sort(s.begin(), s.end());
    pairs.push_back({make_interval(Rational(s[1]) * cell, Rational(s[2] + 1 - s[1]) * cell),
                     make_interval(Rational(s[0]) * cell, Rational(s[3] + 1 - s[0]) * cell)});
  }
  for (double p : effective_p(c)) {
    ComparisonReport cmp = interval_comparison_check(f, p, pairs, io);
    rep.constants["interval.comparison.max_ratio.p=" + short_number(p)] = cmp.max_ratio;
    rep.flags["interval.comparison.p=" + short_number(p)] = cmp.violations == 0;
  }

  // covering sweep on random rationals
  std::uniform_int_distribution<int> num(-1000, 1000), len(1, 1000);
  int bad = 0;
  for (int i = 0; i < 1000; ++i) {
    Interval in = make_interval(Rational(num(rng), 997), Rational(len(rng), 991));
    Covering cov = covering_dyadic(in);
    bad += (cov.interval.contains(in) && cov.interval.length <= 6 * in.length) ? 0 : 1;
  }
  rep.flags["interval.covering"] = bad == 0;
  return rep;
}

VerifyReport run_sweep(const RunConfig& c) {
  VerifyReport rep;
  RunConfig sub = c;
  sub.command = "counterexample";
  rep.merge(execute(sub));
  std::vector<EnsembleSample> samples = load_samples(c);
  sub.command = "jn";
  rep.merge(run_jn(sub, samples));
  sub.command = "inclusion";
  rep.merge(run_inclusion(sub, samples));
  sub.command = "largedev";
  rep.merge(run_largedev(sub, samples));

  VerifyConfig v = verify_config(sub);
  int index = 0;
  for (const EnsembleSample& s : samples) {
    if (!s.tracial) continue;
    VerifyReport lx = lexp_check(s.martingale, v);
    for (SampleRecord& r : lx.records) {
      r.label = s.label;
      r.sample = index;
    }
    rep.merge(lx);
    ++index;
  }
  std::vector<Instance> instances =
      c.spec_path.empty()
          ? standard_instances(c.seed)
          : std::vector<Instance>{{"spec", samples.front().martingale.filtration_ptr(), false, false}};
  std::uint64_t salt = 0;
  for (const Instance& inst : instances) {
    AxiomReport ax = check_expectation_axioms(*inst.filtration, 20, c.seed + salt++);
    SampleRecord r;
    r.check = "axioms";
    r.label = inst.label;
    for (const auto& [axiom, worst] : ax.worst) r.values[axiom] = worst;
    r.pass = ax.total_violations() == 0;
    rep.records.push_back(std::move(r));
    VerifyReport st = check_stein(*inst.filtration, {2.0, 4.0}, 5, c.seed + salt++);
    for (SampleRecord& sr : st.records) sr.label = inst.label;
    rep.merge(st);
  }
  if (c.spec_path.empty()) {
    sub.command = "interval";
    sub.p_list = {2.0, 4.0};
    rep.merge(run_interval(sub));
  }
  return rep;
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
    rows.push_back(row);
  }
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

}  // namespace

FiltrationSpec parse_filtration_spec(std::istream& in) { return SpecReader(in).parse(); }

FiltrationSpec parse_filtration_spec_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path);
  return parse_filtration_spec(in);
}

VerifyReport execute(const RunConfig& c) {
  if (c.ensemble < 1) throw Error(ErrorCode::BadSpec, "--ensemble must be at least 1");
  if (c.command == "counterexample") {
    for (int n : c.n_list)
      if (n < 1 || n > 8) throw Error(ErrorCode::BadSpec, "--n values must lie in [1,8]");
    for (double p : effective_p(c))
      if (!(p >= 1.0)) throw Error(ErrorCode::BadExponent, "--p values must be at least 1");
    return counterexample_report(c.n_list, effective_p(c));
  }
  if (c.command == "interval") return run_interval(c);
  if (c.command == "sweep") return run_sweep(c);
  if (c.command == "norms") return run_norms(c, load_samples(c));
  if (c.command == "jn") return run_jn(c, load_samples(c));
  if (c.command == "inclusion") return run_inclusion(c, load_samples(c));
  if (c.command == "largedev") return run_largedev(c, load_samples(c));
  throw Error(ErrorCode::BadSpec, "unknown command '" + c.command + "'");
}

json config_json(const RunConfig& c) {
  VerifyConfig v;
  json j;
  j["command"] = c.command;
  j["spec"] = c.spec_path;
  j["p"] = effective_p(c);
  j["eta"] = c.eta ? json(*c.eta) : json(v.eta_list);
  j["seed"] = c.seed;
  j["ensemble"] = c.ensemble;
  j["format"] = c.format == OutputFormat::Json ? "json" : "csv";
  j["positive_witness"] = c.positive_witness;
  j["t"] = c.t_list;
  j["n"] = c.n_list;
  j["c_jn"] = v.c_jn;
  j["c1"] = v.rate();
  j["c2"] = v.c2;
  j["left_tolerance"] = v.left_tolerance;
  j["structural_tolerance"] = v.structural_tolerance;
  return j;
}

json report_json(const VerifyReport& report, const RunConfig& config) {
  json j;
  j["schema"] = 1;
  j["tool"] = "ncbmo";
  j["version"] = kVersion;
  j["config"] = config_json(config);
  json records = json::array();
  for (const SampleRecord& r : report.records) {
    json jr;
    jr["check"] = r.check;
    jr["label"] = r.label;
    jr["sample"] = r.sample;
    jr["values"] = r.values;
    jr["pass"] = r.pass;
    jr["hard"] = r.hard;
    if (r.level_n >= 0) jr["level_n"] = r.level_n;
    if (r.adjoint) jr["adjoint"] = true;
    if (!r.witness.empty()) {
      json w = json::array();
      for (const Matrix& m : r.witness) w.push_back(matrix_json(m));
      jr["witness"] = w;
    }
    records.push_back(jr);
  }
  j["records"] = records;
  json rows = json::array();
  for (const CounterexampleRow& row : report.counterexample)
    rows.push_back({{"n", row.n}, {"p", row.p}, {"lp_norm", row.lp_norm}, {"expected", row.expected},
                    {"bmo_c", row.bmo_c}, {"bmo_r", row.bmo_r}, {"ratio", row.ratio}, {"pass", row.pass}});
  j["counterexample"] = rows;
  j["constants"] = report.constants;
  j["flags"] = report.flags;
  j["failures"] = report.failures();
  j["passed"] = report.passed();
  return j;
}

std::string report_csv(const VerifyReport& report) {
  std::ostringstream out;
  out << "check,label,sample,key,value,pass,hard\n";
  for (const SampleRecord& r : report.records)
    for (const auto& [key, value] : r.values)
      out << csv_field(r.check) << ',' << csv_field(r.label) << ',' << r.sample << ',' << csv_field(key)
          << ',' << format_number(value) << ',' << (r.pass ? 1 : 0) << ',' << (r.hard ? 1 : 0) << '\n';
  int row_index = 0;
  for (const CounterexampleRow& row : report.counterexample) {
    std::string label = "n=" + std::to_string(row.n);
    for (const auto& [key, value] : std::vector<std::pair<std::string, double>>{
             {"n", row.n}, {"p", row.p}, {"lp_norm", row.lp_norm}, {"expected", row.expected},
             {"bmo_c", row.bmo_c}, {"bmo_r", row.bmo_r}, {"ratio", row.ratio}})
      out << "counterexample," << label << ',' << row_index << ',' << key << ',' << format_number(value)
          << ',' << (row.pass ? 1 : 0) << ",1\n";
    ++row_index;
  }
  for (const auto& [key, value] : report.constants)
    out << "constant,," << 0 << ',' << csv_field(key) << ',' << format_number(value) << ",1,0\n";
  for (const auto& [key, ok] : report.flags)
    out << "flag,," << 0 << ',' << csv_field(key) << ',' << (ok ? 1 : 0) << ',' << (ok ? 1 : 0) << ",1\n";
  return out.str();
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
  VerifyReport report;
  try {
    report = execute(config);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  std::string text = config.format == OutputFormat::Json ? report_json(report, config).dump(2) + "\n"
                                                         : report_csv(report);
  if (config.out_path.empty()) {
    out << text;
  } else {
    std::ofstream file(config.out_path, std::ios::binary);
    if (!file) {
      err << "error: " << code_name(ErrorCode::IoError) << ": cannot write " << config.out_path << "\n";
      return 2;
    }
    file << text;
  }
  if (!report.passed()) err << report.failures() << " assertion(s) failed\n";
  return report.passed() ? 0 : 1;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Numerical checks for martingale BMO spaces over matrix algebras", "ncbmo"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  RunConfig config;
  std::string format = "json";
  std::string p_text, t_text, n_text;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"norms", "Evaluate the martingale norms of a spec element or ensemble"},
      {"jn", "Two-sided John-Nirenberg check with constant fitting"},
      {"inclusion", "BMO into L_p inclusion check over the embedding splits"},
      {"largedev", "Spectral large-deviation projections and tail fit"},
      {"counterexample", "Column/row Rademacher table"},
      {"interval", "Interval BMO of a step function (--spec is a step-function file)"},
      {"sweep", "All checks on one ensemble"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--spec", config.spec_path, "Filtration spec or step-function file")->check(CLI::ExistingFile);
    sub->add_option("--p", p_text, "Comma-separated exponents (inf allowed)");
    sub->add_option("--eta", config.eta, "Embedding split in [0,1]");
    sub->add_option("--seed", config.seed, "Seed for every random component");
    sub->add_option("--ensemble", config.ensemble, "Number of random martingales");
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", config.out_path, "Output file (stdout by default)");
    sub->add_flag("--positive-witness", config.positive_witness, "Restrict BMO_p multipliers to a >= 0");
    sub->add_option("--t", t_text, "Comma-separated large-deviation levels");
    sub->add_option("--n", n_text, "Comma-separated counterexample sizes");
    sub->callback([&config, name = name] { config.command = name; });
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? 0 : 2;
  }
  auto split = [&](const std::string& text, const char* flag) {
    std::vector<double> values;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        double v = std::stod(item, &used);
        if (used != item.size() || std::isnan(v)) throw std::invalid_argument(item);
        values.push_back(v);
      } catch (const std::exception&) {
        err << "error: " << flag << ": cannot read '" << item << "'\n";
        throw;
      }
    }
    return values;
  };
  try {
    if (!p_text.empty()) config.p_list = split(p_text, "--p");
    if (!t_text.empty()) config.t_list = split(t_text, "--t");
    if (!n_text.empty()) {
      config.n_list.clear();
      for (double v : split(n_text, "--n")) {
        if (v != std::floor(v)) throw std::invalid_argument("n");
        config.n_list.push_back(static_cast<int>(v));
      }
    }
  } catch (const std::exception&) {
    return 2;
  }
  if (config.eta && (*config.eta < 0.0 || *config.eta > 1.0)) {
    err << "error: --eta must lie in [0,1]\n";
    return 2;
  }
  config.format = format == "csv" ? OutputFormat::Csv : OutputFormat::Json;
  return run(config, out, err);
}

}  // namespace ncbmo
