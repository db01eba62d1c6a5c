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

#include "ncbmo/norms.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "ncbmo/error.hpp"

namespace ncbmo {

namespace {

double max_op_norm(const std::vector<Matrix>& ms) {
  double out = 0.0;
  for (const Matrix& m : ms) out = std::max(out, op_norm(m));
  return out;
}

// (Σ λ_i^{p/2})^{1/p} for a PSD matrix, valid for every p > 0.
double root_schatten_half(const Matrix& s, double p) {
  RealVector l = herm_eig(hermitian_part(s)).eigenvalues.cwiseMax(0.0);
  double lmax = l.size() ? l.maxCoeff() : 0.0;
  if (lmax == 0.0) return 0.0;
  if (std::isinf(p)) return std::sqrt(lmax);
  double acc = 0.0;
  for (Index i = 0; i < l.size(); ++i) acc += std::pow(l(i) / lmax, p / 2.0);
  return std::sqrt(lmax) * std::pow(acc, 1.0 / p);
}

void require_psd(const Matrix& x, const char* what) {
  if (hermiticity_residual(x) > 1e-9)
    throw Error(ErrorCode::NotPSD, std::string(what) + " is not Hermitian");
  RealVector l = herm_eig(hermitian_part(x)).eigenvalues;
  double scale = std::max(1.0, l.cwiseAbs().maxCoeff());
  if (l.minCoeff() < -1e-9 * scale)
    throw Error(ErrorCode::NotPSD,
                std::string(what) + " has eigenvalue " + std::to_string(l.minCoeff()));
}

Matrix top_projection(const Matrix& h) {
  HermitianEig eig = herm_eig(hermitian_part(h));
  double top = eig.eigenvalues.maxCoeff();
  double slack = 1e-10 * std::max(std::abs(top), 1e-300);
  return spectral_projection(hermitian_part(h), top - slack, kInf).matrix;
}

bool is_diagonal(const Matrix& m, double tol = 1e-10) {
  double off = 0.0;
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (i != j) off = std::max(off, std::abs(m(i, j)));
  return off <= tol;
}

}  // namespace

double bmo_c(const Martingale& mart) {
  double worst = 0.0;
  for (const auto& row : square_functions(mart).conditioned)
    worst = std::max(worst, max_op_norm(row));
  return std::sqrt(worst);
}

double bmo_r(const Martingale& mart) { return bmo_c(mart.adjoint()); }

double bmo(const Martingale& mart) { return std::max(bmo_c(mart), bmo_r(mart)); }

double conditioned_linf_c(const Martingale& mart, int n) {
  const Matrix& x = mart.limit();
  return std::sqrt(op_norm(mart.filtration().expect(n, x.adjoint() * x)));
}

double lp_l2c_norm(const std::vector<Matrix>& terms, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::BadExponent, "p must be >= 1");
  if (terms.empty()) return 0.0;
  Matrix s = Matrix::Zero(terms[0].cols(), terms[0].cols());
  for (const Matrix& z : terms) s += z.adjoint() * z;
  return root_schatten_half(s, p);
}

double hp_c(const Martingale& mart, double p, double eta) {
  if (!(p >= 1.0)) throw Error(ErrorCode::BadExponent, "p must be >= 1");
  std::vector<Matrix> a;
  for (const Matrix& d : mart.differences())
    a.push_back(embed_lp(mart.filtration().state(), d, p, eta).matrix);
  return lp_l2c_norm(a, p);
}

double hp(const Martingale& mart, double p, double eta) {
  return std::max(hp_c(mart, p, eta), hp_c(mart.adjoint(), p, eta));
}

std::vector<Matrix> stein_projection(const std::vector<Matrix>& terms, const Filtration& f) {
  if (static_cast<int>(terms.size()) != f.size())
    throw Error(ErrorCode::LengthMismatch,
                std::to_string(terms.size()) + " terms for " + std::to_string(f.size()) +
                    " levels");
  std::vector<Matrix> out;
  for (int k = 0; k < f.size(); ++k) out.push_back(f.expect(k, terms[k]));
  return out;
}

// ---------------------------------------------------------------------------
// sup-norm

double sup_norm_objective(const std::vector<Matrix>& terms, const std::vector<Matrix>& dual) {
  double acc = 0.0;
  for (std::size_t k = 0; k < terms.size(); ++k) acc += (terms[k] * dual[k]).trace().real();
  return acc;
}

double sup_norm_dual_norm(const std::vector<Matrix>& dual, double q) {
  if (dual.empty()) return 0.0;
  Matrix y = Matrix::Zero(dual[0].rows(), dual[0].cols());
  for (const Matrix& d : dual) y += d;
  return schatten_norm(hermitian_part(y), conjugate_exponent(q));
}

namespace {

struct Bracket {
  double lower = 0.0;
  double upper = kInf;
  std::vector<Matrix> dual;
  int iterations = 0;
};

// Exact solution when all terms share an eigenbasis: the pointwise maximum.
std::optional<Bracket> commuting_bracket(const std::vector<Matrix>& x, double q) {
  Index n = x[0].rows();
  double scale = max_op_norm(x);
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j)
      if ((x[i] * x[j] - x[j] * x[i]).norm() > 1e-10 * std::max(1.0, scale * scale))
        return std::nullopt;
  Matrix c = Matrix::Zero(n, n);
  for (std::size_t k = 0; k < x.size(); ++k)
    c += (1.0 + 0.6180339887498949 * static_cast<double>(k + 1) +
          0.1 * std::sqrt(static_cast<double>(k + 2))) * x[k];
  Matrix u = herm_eig(c).eigenvectors;
  RealVector m = RealVector::Zero(n);
  std::vector<Index> arg(n, 0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    Matrix dk = u.adjoint() * x[k] * u;
    if (!is_diagonal(dk, 1e-9 * std::max(1.0, scale))) return std::nullopt;
    for (Index i = 0; i < n; ++i)
      if (dk(i, i).real() > m(i)) {
        m(i) = dk(i, i).real();
        arg[i] = static_cast<Index>(k);
      }
  }
  Bracket b;
  double value;
  RealVector w(n);
  if (std::isinf(q)) {
    Index i;
    value = m.maxCoeff(&i);
    w.setZero();
    w(i) = 1.0;
  } else {
    value = std::pow(m.array().pow(q).sum(), 1.0 / q);
    for (Index i = 0; i < n; ++i)
      w(i) = value > 0.0 ? (q == 1.0 ? 1.0 : std::pow(m(i) / value, q - 1.0)) : 0.0;
  }
  for (std::size_t k = 0; k < x.size(); ++k) {
    RealVector wk = RealVector::Zero(n);
    for (Index i = 0; i < n; ++i)
      if (arg[i] == static_cast<Index>(k)) wk(i) = w(i);
    b.dual.push_back(u * wk.cast<Complex>().asDiagonal() * u.adjoint());
  }
  b.lower = sup_norm_objective(x, b.dual);
  b.upper = value;
  return b;
}

// Smallest c with c·base ≥ x_k for all k, times ‖base‖_q.
double majorant_bound(const std::vector<Matrix>& x, const Matrix& base, double q) {
  double best = kInf;
  double scale = op_norm(base);
  if (!(scale > 0.0)) return best;
  Index n = base.rows();
  for (double delta : {1e-12, 1e-9, 1e-6, 1e-3}) {
    Matrix b = hermitian_part(base) + delta * scale * Matrix::Identity(n, n);
    Matrix inv_sqrt;
    try {
      inv_sqrt = mat_power(b, -0.5);
    } catch (const Error&) {
      continue;
    }
    double c = 0.0;
    for (const Matrix& xk : x)
      c = std::max(c, herm_eig(hermitian_part(inv_sqrt * xk * inv_sqrt)).eigenvalues.maxCoeff());
    best = std::min(best, c * schatten_norm(b, q));
  }
  return best;
}

// Maximizes F(g) = Σ tr(g_k* x_k g_k) / ‖Σ g_k g_k*‖_r over free g_k by L-BFGS.
// At a stationary point W = Y^{r−1}/‖Y‖_r^{r−1} is a near-optimal majorant
// direction, which gives the upper bound.
class RatioObjective {
 public:
  RatioObjective(const std::vector<Matrix>& x, double r) : x_(x), r_(r), n_(x[0].rows()) {}

  Index size() const { return 2 * n_ * n_ * static_cast<Index>(x_.size()); }

  std::vector<Matrix> unpack(const RealVector& v) const {
    std::vector<Matrix> g;
    Index nn = n_ * n_;
    for (std::size_t k = 0; k < x_.size(); ++k) {
      Matrix gk(n_, n_);
      for (Index i = 0; i < nn; ++i) gk(i) = Complex(v(2 * (k * nn + i)), v(2 * (k * nn + i) + 1));
      g.push_back(gk);
    }
    return g;
  }

  RealVector pack(const std::vector<Matrix>& g) const {
    RealVector v(size());
    Index nn = n_ * n_;
    for (std::size_t k = 0; k < g.size(); ++k)
      for (Index i = 0; i < nn; ++i) {
        v(2 * (k * nn + i)) = g[k](i).real();
        v(2 * (k * nn + i) + 1) = g[k](i).imag();
      }
    return v;
  }

  // Value; fills the gradient and W when requested.
  double eval(const RealVector& v, RealVector* grad, Matrix* weight) const {
    std::vector<Matrix> g = unpack(v);
    Matrix y = Matrix::Zero(n_, n_);
    for (const Matrix& gk : g) y += gk * gk.adjoint();
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(y));
    RealVector l = es.eigenvalues().cwiseMax(0.0);
    double lmax = l.maxCoeff();
    if (!(lmax > 0.0)) return 0.0;
    RealVector rel = l / lmax;
    double nr = std::pow(rel.array().pow(r_).sum(), 1.0 / r_);
    double norm = lmax * nr;
    double num = 0.0;
    for (std::size_t k = 0; k < x_.size(); ++k) num += (g[k].adjoint() * x_[k] * g[k]).trace().real();
    double f = num / norm;
    if (grad || weight) {
      RealVector wl(l.size());
      for (Index i = 0; i < l.size(); ++i) wl(i) = std::pow(rel(i) / nr, r_ - 1.0);
      Matrix w = es.eigenvectors() * wl.cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
      if (grad) {
        std::vector<Matrix> dg;
        for (std::size_t k = 0; k < x_.size(); ++k) dg.push_back((2.0 / norm) * (x_[k] - f * w) * g[k]);
        *grad = pack(dg);
      }
      if (weight) *weight = std::move(w);
    }
    return f;
  }

 private:
  const std::vector<Matrix>& x_;
  double r_;
  Index n_;
};

// L-BFGS ascent with Armijo backtracking. Returns the best point found.
RealVector lbfgs_maximize(const RatioObjective& obj, RealVector v, int max_iterations,
                          double tolerance, int& iterations) {
  const int memory = 12;
  std::vector<RealVector> ss, ys;
  RealVector grad;
  double f = obj.eval(v, &grad, nullptr);
  std::vector<double> history{f};
  for (int it = 0; it < max_iterations; ++it) {
    ++iterations;
    // two-loop recursion on the ascent direction
    RealVector d = grad;
    std::vector<double> alpha(ss.size());
    for (int i = static_cast<int>(ss.size()) - 1; i >= 0; --i) {
      alpha[i] = ss[i].dot(d) / ys[i].dot(ss[i]);
      d -= alpha[i] * ys[i];
    }
    if (!ss.empty()) d *= ss.back().dot(ys.back()) / ys.back().dot(ys.back());
    else d *= 1.0 / std::max(grad.norm(), 1e-300) * 1e-2 * v.norm();
    for (std::size_t i = 0; i < ss.size(); ++i) {
      double beta = ys[i].dot(d) / ys[i].dot(ss[i]);
      d += (alpha[i] - beta) * ss[i];
    }
    // the objective is maximized, so y = -(∇f_new - ∇f_old) in minimization terms
    double slope = grad.dot(d);
    if (!(slope > 0.0)) {
      ss.clear();
      ys.clear();
      d = grad * (1e-2 * v.norm() / std::max(grad.norm(), 1e-300));
      slope = grad.dot(d);
      if (!(slope > 0.0)) break;
    }
    double t = 1.0;
    bool moved = false;
    RealVector nv, ngrad;
    double nf = f;
    for (int tries = 0; tries < 40; ++tries) {
      nv = v + t * d;
      nf = obj.eval(nv, &ngrad, nullptr);
      if (std::isfinite(nf) && nf >= f + 1e-4 * t * slope) {
        moved = true;
        break;
      }
      t *= 0.5;
    }
    if (!moved) break;
    RealVector sv = nv - v, yv = grad - ngrad;
    if (sv.dot(yv) > 1e-12 * sv.norm() * yv.norm()) {
      ss.push_back(sv);
      ys.push_back(yv);
      if (static_cast<int>(ss.size()) > memory) {
        ss.erase(ss.begin());
        ys.erase(ys.begin());
      }
    }
    v = std::move(nv);
    grad = std::move(ngrad);
    f = nf;
    // F is scale invariant; keep the iterate of unit size
    double vn = v.norm();
    if (vn > 1e3 || vn < 1e-3) {
      v /= vn;
      grad *= vn;
      for (std::size_t i = 0; i < ss.size(); ++i) {
        ss[i] /= vn;
        ys[i] *= vn;
      }
    }
    history.push_back(f);
    std::size_t h = history.size();
    if (h > 10 && f - history[h - 11] <= tolerance * std::abs(f)) break;
  }
  return v;
}

// q = 1: the constraint is Σ y_k ≤ 1, a POVM-type set. Starting from the
// surrogate solution, normalize to Σ y_k = 1 and run the fixed-point map
// y_k ← Λ^{-1} x_k y_k x_k Λ^{-1}, Λ = (Σ x_k y_k x_k)^{1/2}, which preserves
// Σ y_k = 1 on the support of Λ. The best iterate is kept.
void polish_trace_case(const std::vector<Matrix>& x, std::vector<Matrix>& y,
                       const SupNormOptions& opt, int& iterations) {
  Index n = x[0].rows();
  auto pinv_root = [&](const Matrix& s, double power) {
    HermitianEig eig = herm_eig(hermitian_part(s));
    double top = std::max(eig.eigenvalues.maxCoeff(), 0.0);
    return eig.apply([&](double l) { return l > 1e-13 * top ? std::pow(l, power) : 0.0; });
  };
  Matrix sum = Matrix::Zero(n, n);
  for (const Matrix& yk : y) sum += yk;
  Matrix norm = pinv_root(sum, -0.5);
  for (Matrix& yk : y) yk = hermitian_part(norm * yk * norm);
  double best = sup_norm_objective(x, y);
  std::vector<Matrix> best_y = y;
  std::vector<double> history{best};
  for (int it = 0; it < 5 * opt.max_iterations; ++it) {
    ++iterations;
    Matrix lam2 = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < x.size(); ++k) lam2 += x[k] * y[k] * x[k];
    Matrix inv = pinv_root(lam2, -0.5);
    for (std::size_t k = 0; k < x.size(); ++k) y[k] = hermitian_part(inv * x[k] * y[k] * x[k] * inv);
    double dn = sup_norm_dual_norm(y, 1.0);
    double f = sup_norm_objective(x, y) / std::max(dn, 1e-300);
    if (!std::isfinite(f)) break;
    if (f > best) {
      best = f;
      best_y = y;
    }
    history.push_back(f);
    std::size_t h = history.size();
    if (h > 20 && std::abs(f - history[h - 21]) <= opt.tolerance * std::abs(f)) break;
  }
  y = std::move(best_y);
}

Bracket ascent_bracket(const std::vector<Matrix>& x, double q, const SupNormOptions& opt) {
  Index n = x[0].rows();
  // q = 1 has a nonsmooth dual norm; a large finite exponent stands in for it
  double r = q == 1.0 ? 64.0 : conjugate_exponent(q);
  double scale = max_op_norm(x);
  RatioObjective obj(x, r);

  std::mt19937_64 rng(opt.seed);
  Bracket best;
  best.lower = -1.0;
  RealVector best_v;
  for (int start = 0; start < std::max(1, opt.restarts); ++start) {
    std::vector<Matrix> g;
    for (const Matrix& xk : x) {
      if (start == 0)
        g.push_back(mat_power(xk + 1e-12 * scale * Matrix::Identity(n, n), 0.5) /
                    std::sqrt(std::max(scale, 1e-300)));
      else
        g.push_back(random_gaussian(n, n, rng));
    }
    RealVector v = lbfgs_maximize(obj, obj.pack(g), opt.max_iterations, opt.tolerance,
                                  best.iterations);
    double f = obj.eval(v, nullptr, nullptr);
    if (f > best.lower) {
      best.lower = f;
      best_v = v;
    }
  }

  Matrix weight;
  obj.eval(best_v, nullptr, &weight);
  // exactly feasible dual sequence from the best iterate
  std::vector<Matrix> y;
  for (const Matrix& gk : obj.unpack(best_v)) y.push_back(hermitian_part(gk * gk.adjoint()));
  if (q == 1.0) {
    polish_trace_case(x, y, opt, best.iterations);
    Matrix r_sum = Matrix::Zero(n, n);
    for (std::size_t k = 0; k < x.size(); ++k) r_sum += x[k] * y[k];
    weight = hermitian_part(r_sum);
  }
  double dn = sup_norm_dual_norm(y, q);
  for (Matrix& yk : y) yk /= dn > 0.0 ? dn : 1.0;
  best.dual = y;
  best.lower = sup_norm_objective(x, y);
  best.upper = majorant_bound(x, weight, q);
  return best;
}

}  // namespace

NormReport sup_norm_bracket(const SupNormProblem& problem, const SupNormOptions& options) {
  if (!(problem.q >= 1.0)) throw Error(ErrorCode::BadExponent, "q must be >= 1");
  NormReport rep;
  rep.name = "sup_norm";
  if (problem.terms.empty()) {
    rep.upper_bound = 0.0;
    return rep;
  }
  std::vector<Matrix> x;
  for (const Matrix& t : problem.terms) {
    require_psd(t, "sup-norm term");
    x.push_back(hermitian_part(t));
  }
  Index n = x[0].rows();
  double q = problem.q;

  if (std::isinf(q)) {
    std::size_t arg = 0;
    double value = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      double v = op_norm(x[k]);
      if (v > value) value = v, arg = k;
    }
    HermitianEig eig = herm_eig(x[arg]);
    Matrix v = eig.eigenvectors.col(n - 1);
    for (std::size_t k = 0; k < x.size(); ++k)
      rep.witness.push_back(k == arg ? Matrix(v * v.adjoint()) : Matrix::Zero(n, n));
    rep.value = value;
    rep.upper_bound = value;
    return rep;
  }

  Matrix sum = Matrix::Zero(n, n);
  for (const Matrix& xk : x) sum += xk;
  double upper = schatten_norm(sum, q);
  if (problem.factorization) {
    const SupNormFactorization& fac = *problem.factorization;
    if (fac.w.size() != x.size())
      throw Error(ErrorCode::LengthMismatch, "factorization has the wrong number of terms");
    double wmax = 0.0;
    for (std::size_t k = 0; k < fac.w.size(); ++k) {
      if ((fac.a * fac.w[k] * fac.a.adjoint() - x[k]).norm() > 1e-8 * std::max(1.0, x[k].norm()))
        throw Error(ErrorCode::BadSpec, "factorization does not reproduce term " +
                                            std::to_string(k));
      wmax = std::max(wmax, op_norm(fac.w[k]));
    }
    upper = std::min(upper, wmax * std::pow(schatten_norm(fac.a, 2.0 * q), 2.0));
  }

  Bracket b;
  if (auto exact = commuting_bracket(x, q)) {
    b = *exact;
  } else {
    b = ascent_bracket(x, q, options);
    rep.converged = false;  // no optimality certificate beyond the bracket
  }
  rep.value = std::max(0.0, b.lower);
  rep.upper_bound = std::max(rep.value, std::min(upper, b.upper));
  rep.witness = std::move(b.dual);
  rep.iterations = b.iterations;
  rep.restarts = options.restarts;
  if (*rep.upper_bound - rep.value <= 1e-9 * std::max(1e-300, *rep.upper_bound))
    rep.converged = true;
  return rep;
}

NormReport lp_c_mo(const Martingale& mart, double p, const SupNormOptions& options) {
  if (!(p >= 2.0)) throw Error(ErrorCode::BadExponent, "L_p^cMO needs p >= 2");
  NormReport rep;
  rep.name = "lp_c_mo";
  SquareFunctions sf = square_functions(mart);
  if (std::isinf(p)) {
    rep.value = bmo_c(mart);
    rep.upper_bound = rep.value;
    return rep;
  }
  Matrix dp = mart.filtration().state().power(1.0 / p);
  double lower = 0.0, upper = 0.0;
  for (int m = 0; m < mart.size(); ++m) {
    SupNormProblem prob;
    prob.q = p / 2.0;
    for (const Matrix& s : sf.conditioned[m]) prob.terms.push_back(hermitian_part(dp * s * dp));
    NormReport b = sup_norm_bracket(prob, options);
    rep.iterations += b.iterations;
    rep.converged = rep.converged && b.converged;
    if (b.value >= lower) {
      lower = b.value;
      rep.witness = b.witness;
      rep.level_m = m;
    }
    upper = std::max(upper, *b.upper_bound);
  }
  rep.value = std::sqrt(lower);
  rep.upper_bound = std::sqrt(upper);
  rep.restarts = options.restarts;
  return rep;
}

// ---------------------------------------------------------------------------
// BMO_p

double bmo_p_objective(const Matrix& y, const Matrix& a, double p) {
  double na = schatten_norm(a, p);
  return na > 0.0 ? schatten_norm(y * a, p) / na : 0.0;
}

namespace {

// One (n, m) pair: maximize ‖y a‖_p over the unit sphere of N_n D^{1/p}.
class PairOptimizer {
 public:
  PairOptimizer(const Filtration& f, int n, Matrix y, double p, const BmoPOptions& opt)
      : f_(f), n_(n), y_(std::move(y)), p_(p), pc_(conjugate_exponent(p)), opt_(opt) {
    const State& s = f.state();
    dp_ = s.power(1.0 / p);
    dp_inv_ = s.power(-1.0 / p);
    dq_ = s.power(1.0 / pc_);
    dq_inv_ = s.power(-1.0 / pc_);
    dhalf_ = s.power(0.5 / p);
  }

  // Deterministic starts. The first one certifies ‖E_n(y*y)‖^{1/2}.
  std::vector<Matrix> seeds() const {
    Matrix cond = f_.expect(n_, y_.adjoint() * y_);
    Matrix proj = top_projection(cond);
    std::vector<Matrix> out;
    if (!opt_.positive) out.push_back(proj * dp_);
    out.push_back(dp_);
    out.push_back(dhalf_ * proj * dhalf_);
    Matrix abs_p = mat_power(op_abs(y_), p_);
    Matrix proj_p = top_projection(f_.expect(n_, abs_p));
    out.push_back(opt_.positive ? Matrix(dhalf_ * proj_p * dhalf_) : Matrix(proj_p * dp_));
    return out;
  }

  Matrix random_start(std::mt19937_64& rng) const {
    Index dim = y_.rows();
    Matrix b = f_.expect(n_, random_gaussian(dim, dim, rng));
    if (opt_.positive) return dhalf_ * (b * b.adjoint()) * dhalf_;
    return b * dp_;
  }

  double value(const Matrix& a) const { return bmo_p_objective(y_, a, p_); }

  // Runs the monotone linearization iteration from `a`.
  Matrix run(Matrix a, double& best, int& iterations, bool& converged) const {
    a = normalize(project(a));
    std::vector<double> history;
    Matrix best_a = a;
    best = -1.0;
    converged = false;
    for (int it = 0; it <= opt_.max_iterations; ++it) {
      if (!a.allFinite()) throw Error(ErrorCode::OptimizerDiverged, "non-finite BMO_p iterate");
      Matrix z = y_ * a;
      double f = schatten_norm(z, p_);
      if (!std::isfinite(f)) throw Error(ErrorCode::OptimizerDiverged, "non-finite value");
      history.push_back(f);
      if (f > best) {
        best = f;
        best_a = a;
      }
      std::size_t h = history.size();
      if (h >= 2 && std::abs(f - history[h - 2]) <= 1e-14 * std::max(f, 1e-300)) {
        converged = true;
        break;
      }
      if (static_cast<int>(h) > opt_.window &&
          f - history[h - 1 - opt_.window] <= opt_.tolerance * std::max(f, 1e-300)) {
        converged = true;
        break;
      }
      if (it == opt_.max_iterations) break;
      ++iterations;
      a = step(a, z);
    }
    return best_a;
  }

 private:
  // Back onto N_n D^{1/p}; removes drift from the model subspace.
  Matrix project(const Matrix& a) const {
    Matrix out = f_.expect(n_, a * dp_inv_) * dp_;
    return opt_.positive ? hermitian_part(out) : out;
  }

  Matrix normalize(const Matrix& a) const {
    double na = schatten_norm(a, p_);
    return na > 0.0 ? Matrix(a / na) : a;
  }

  // Maximizer of Re tr(g* a) over the unit ball of L_p for g in L_{p'},
  // p' ≤ 2: g (g*g)^{(p'-2)/2}, dropping directions below the rank tolerance.
  Matrix dual_norming(const Matrix& g) const {
    Eigen::SelfAdjointEigenSolver<Matrix> es(hermitian_part(g.adjoint() * g));
    RealVector l = es.eigenvalues().cwiseMax(0.0);
    double lmax = l.maxCoeff();
    if (!(lmax > 0.0)) return Matrix::Zero(g.rows(), g.cols());
    RealVector w(l.size());
    for (Index i = 0; i < l.size(); ++i)
      w(i) = l(i) > 1e-13 * lmax ? std::pow(l(i) / lmax, (pc_ - 2.0) / 2.0) : 0.0;
    const Matrix& v = es.eigenvectors();
    return g * (v * w.cast<Complex>().asDiagonal() * v.adjoint());
  }

  Matrix step(const Matrix& a, const Matrix& z) const {
    // gradient of ‖y a‖_p, then its restriction to the dual model N_n D^{1/p'}
    Matrix g = y_.adjoint() * norming_element(z, p_);
    Matrix gr = f_.expect(n_, g * dq_inv_) * dq_;
    Matrix next;
    if (opt_.positive) {
      HermitianEig eig = herm_eig(hermitian_part(gr));
      next = eig.apply([&](double l) { return l > 0.0 ? std::pow(l, pc_ - 1.0) : 0.0; });
    } else {
      next = dual_norming(gr);
    }
    if (next.norm() == 0.0) return a;
    return normalize(project(next));
  }

  const Filtration& f_;
  int n_;
  Matrix y_;
  double p_, pc_;
  BmoPOptions opt_;
  Matrix dp_, dp_inv_, dq_, dq_inv_, dhalf_;
};

void bmo_p_one_side(const Martingale& mart, double p, const BmoPOptions& opt, bool adjoint,
                    NormReport& rep) {
  const Filtration& f = mart.filtration();
  int top = mart.size() - 1;
  for (int m = opt.all_pairs ? 0 : top; m <= top; ++m)
    for (int n = 0; n <= m; ++n) {
      Matrix y = mart.values()[m] - mart.value(n - 1);
      if (y.norm() <= 1e-14 * std::max(1.0, mart.limit().norm())) continue;
      PairOptimizer po(f, n, y, p, opt);
      std::mt19937_64 rng(opt.seed ^ (0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(
                                                     1 + n + 64 * m + (adjoint ? 4096 : 0))));
      std::vector<Matrix> starts = po.seeds();
      int total = std::max(opt.restarts, 1);
      if (static_cast<int>(starts.size()) > total) starts.resize(total);
      while (static_cast<int>(starts.size()) < total) starts.push_back(po.random_start(rng));
      for (const Matrix& s : starts) {
        double val = 0.0;
        bool conv = false;
        Matrix a = po.run(s, val, rep.iterations, conv);
        ++rep.restarts;
        if (val > rep.value) {
          rep.value = val;
          rep.witness = {a};
          rep.level_n = n;
          rep.level_m = m;
          rep.adjoint = adjoint;
          rep.converged = conv;
        }
      }
    }
}

}  // namespace

NormReport bmo_p_c(const Martingale& mart, double p, const BmoPOptions& options) {
  if (!(p >= 2.0)) throw Error(ErrorCode::BadExponent, "BMO_p needs p >= 2");
  NormReport rep;
  rep.name = "bmo_p_c";
  if (std::isinf(p)) {
    for (int n = 0; n < mart.size(); ++n) {
      double v = op_norm(mart.limit() - mart.value(n - 1));
      if (v > rep.value) {
        rep.value = v;
        rep.level_n = n;
        rep.level_m = mart.size() - 1;
      }
    }
    Index d = mart.limit().rows();
    rep.witness = {Matrix::Identity(d, d)};
    rep.upper_bound = rep.value;
    return rep;
  }
  bmo_p_one_side(mart, p, options, false, rep);
  return rep;
}

NormReport bmo_p(const Martingale& mart, double p, const BmoPOptions& options) {
  NormReport col = bmo_p_c(mart, p, options);
  NormReport row = bmo_p_c(mart.adjoint(), p, options);
  NormReport& out = row.value > col.value ? row : col;
  out.adjoint = row.value > col.value;
  out.name = "bmo_p";
  out.iterations = col.iterations + row.iterations;
  out.restarts = col.restarts + row.restarts;
  if (col.upper_bound && row.upper_bound)
    out.upper_bound = std::max(*col.upper_bound, *row.upper_bound);
  return out;
}

double bmo_p_seeded(const Martingale& mart, double p) {
  double best = 0.0;
  for (bool adj : {false, true}) {
    Martingale side = adj ? mart.adjoint() : mart;
    for (int n = 0; n < side.size(); ++n) {
      Matrix y = side.limit() - side.value(n - 1);
      Matrix cond = side.filtration().expect(n, y.adjoint() * y);
      Matrix a = top_projection(cond) * side.filtration().state().power(1.0 / p);
      best = std::max(best, bmo_p_objective(y, a, p));
    }
  }
  return best;
}

double classical_bmo_p_oracle(const Martingale& mart, double p) {
  const Filtration& f = mart.filtration();
  auto check = [](const Matrix& m, const std::string& what) {
    if (!is_diagonal(m))
      throw Error(ErrorCode::NotCommutative, what + " has off-diagonal mass");
  };
  check(f.state().density(), "density");
  check(mart.limit(), "element");
  for (int k = 0; k < f.size(); ++k) {
    if (f.levels()[k].is_full() && f.ambient_dim() > 1)
      throw Error(ErrorCode::NotCommutative, "level " + std::to_string(k) + " is a full matrix algebra");
    for (const Matrix& b : f.levels()[k].basis()) check(b, "level " + std::to_string(k));
  }
  double best = 0.0;
  for (int m = 0; m < mart.size(); ++m)
    for (int n = 0; n <= m; ++n) {
      Matrix y = mart.values()[m] - mart.value(n - 1);
      Index d = y.rows();
      Matrix v = Matrix::Zero(d, d);
      for (Index i = 0; i < d; ++i) v(i, i) = std::pow(std::abs(y(i, i)), p);
      Matrix e = f.expect(n, v);
      for (Index i = 0; i < d; ++i) best = std::max(best, e(i, i).real());
    }
  return std::pow(best, 1.0 / p);
}

double conditioned_p_quantity(const Martingale& mart, double p) {
  if (!(p >= 1.0)) throw Error(ErrorCode::BadExponent, "p must be >= 1");
  double best = 0.0;
  for (int n = 0; n < mart.size(); ++n) {
    Matrix y = mart.limit() - mart.value(n - 1);
    Matrix abs_p = mat_power(op_abs(y), p);
    best = std::max(best, op_norm(mart.filtration().expect(n, abs_p)));
  }
  return std::pow(best, 1.0 / p);
}

// ---------------------------------------------------------------------------
// cell encoding

double cell_lp_norm(const CellMartingale& x, double p, double eta) {
  if (!(p >= 1.0)) throw Error(ErrorCode::BadExponent, "p must be >= 1");
  if (std::isinf(p)) return max_op_norm(x.cells);
  Matrix left = x.fiber.power((1.0 - eta) / p);
  Matrix right = x.fiber.power(eta / p);
  double acc = 0.0;
  for (const Matrix& c : x.cells) acc += std::pow(schatten_norm(left * c * right, p), p);
  return std::pow(acc / static_cast<double>(x.num_cells()), 1.0 / p);
}

double cell_bmo_c(const CellMartingale& x) {
  double worst = 0.0;
  for (int m = 0; m <= x.depth; ++m) {
    std::vector<Matrix> xm = x.value(m);
    for (int n = 0; n <= m; ++n) {
      std::vector<Matrix> prev = x.value(n - 1);
      std::vector<Matrix> sq(xm.size());
      for (std::size_t c = 0; c < xm.size(); ++c) {
        Matrix y = xm[c] - prev[c];
        sq[c] = y.adjoint() * y;
      }
      worst = std::max(worst, max_op_norm(x.expect(n, sq)));
    }
  }
  return std::sqrt(worst);
}

double cell_bmo_r(const CellMartingale& x) { return cell_bmo_c(x.adjoint()); }

}  // namespace ncbmo
