#include "spescreen/ml/gpc.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "spescreen/error.hpp"

namespace spescreen::ml {
namespace {

double sigmoid(double f) { return f >= 0 ? 1.0 / (1.0 + std::exp(-f)) : std::exp(f) / (1.0 + std::exp(f)); }

// log(1 + e^f) without overflow
double softplus(double f) { return f > 0 ? f + std::log1p(std::exp(-f)) : std::log1p(std::exp(f)); }

double log_lik(const Eigen::VectorXd& f, const std::vector<int>& y) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < f.size(); ++i) s += y[static_cast<std::size_t>(i)] * f[i] - softplus(f[i]);
  return s;
}

void check_xy(const Eigen::MatrixXd& x, const std::vector<int>& y) {
  if (x.rows() != static_cast<Eigen::Index>(y.size()) || x.rows() == 0) {
    throw ValidationError("need one label per training row");
  }
  bool zero = false, one = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw ValidationError("labels must be 0 or 1");
    zero |= v == 0;
    one |= v == 1;
  }
  if (!zero || !one) throw ValidationError("training set needs both classes");
  if (!x.allFinite()) throw ValidationError("non-finite training inputs");
}

// Nelder-Mead in two dimensions, points clamped into [lo, hi].
std::array<double, 2> nelder_mead(const auto& fn, std::array<double, 2> x0, std::array<double, 2> lo,
                                  std::array<double, 2> hi, double step, int max_iter) {
  using P = std::array<double, 2>;
  auto clamp = [&](P p) {
    for (int d = 0; d < 2; ++d) p[d] = std::clamp(p[d], lo[d], hi[d]);
    return p;
  };
  std::array<P, 3> s{clamp(x0), clamp({x0[0] + step, x0[1]}), clamp({x0[0], x0[1] + step})};
  std::array<double, 3> v{fn(s[0]), fn(s[1]), fn(s[2])};
  for (int it = 0; it < max_iter; ++it) {
    std::array<int, 3> o{0, 1, 2};
    std::sort(o.begin(), o.end(), [&](int a, int b) { return v[a] < v[b]; });
    const P best = s[o[0]], mid = s[o[1]], worst = s[o[2]];
    const double fb = v[o[0]], fm = v[o[1]], fw = v[o[2]];
    if (std::abs(fw - fb) < 1e-12 && std::hypot(worst[0] - best[0], worst[1] - best[1]) < 1e-9) break;
    const P c{(best[0] + mid[0]) / 2, (best[1] + mid[1]) / 2};
    auto along = [&](double t) { return clamp({c[0] + t * (worst[0] - c[0]), c[1] + t * (worst[1] - c[1])}); };
    const P r = along(-1.0);
    const double fr = fn(r);
    P repl = worst;
    double frepl = fw;
    if (fr < fb) {
      const P e = along(-2.0);
      const double fe = fn(e);
      repl = fe < fr ? e : r;
      frepl = std::min(fe, fr);
    } else if (fr < fm) {
      repl = r;
      frepl = fr;
    } else {
      const P k = fr < fw ? along(-0.5) : along(0.5);
      const double fk = fn(k);
      if (fk < std::min(fr, fw)) {
        repl = k;
        frepl = fk;
      } else {
        // shrink toward the best point
        for (int j : {o[1], o[2]}) {
          s[j] = clamp({best[0] + 0.5 * (s[j][0] - best[0]), best[1] + 0.5 * (s[j][1] - best[1])});
          v[j] = fn(s[j]);
        }
        continue;
      }
    }
    s[o[2]] = repl;
    v[o[2]] = frepl;
  }
  int b = 0;
  for (int j = 1; j < 3; ++j)
    if (v[j] < v[b]) b = j;
  return s[b];
}

}  // namespace

Eigen::MatrixXd rbf_kernel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double amp, double len, Exec exec) {
  if (a.cols() != b.cols()) throw ValidationError("kernel inputs differ in dimension");
  Eigen::MatrixXd k(a.rows(), b.rows());
  const double g = 0.5 / (len * len);
  auto row = [&](Eigen::Index i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) k(i, j) = amp * std::exp(-g * (a.row(i) - b.row(j)).squaredNorm());
  };
  if (exec == Exec::Serial) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) row(i);
  } else {
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < a.rows(); ++i) row(i);
  }
  return k;
}

LaplaceState laplace_mode(const Eigen::MatrixXd& k, const std::vector<int>& y, double tol, int max_iter) {
  const auto n = k.rows();
  LaplaceState st;
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), a = Eigen::VectorXd::Zero(n);
  auto psi = [&](const Eigen::VectorXd& aa, const Eigen::VectorXd& ff) { return -0.5 * aa.dot(ff) + log_lik(ff, y); };
  double obj = psi(a, f);
  Eigen::VectorXd pi(n), grad(n), w(n), sw(n);
  Eigen::LLT<Eigen::MatrixXd> llt;
  auto prepare = [&](const Eigen::VectorXd& ff) {
    for (Eigen::Index i = 0; i < n; ++i) {
      pi[i] = sigmoid(ff[i]);
      grad[i] = y[static_cast<std::size_t>(i)] - pi[i];
      w[i] = pi[i] * (1.0 - pi[i]);
    }
    sw = w.cwiseSqrt();
    const Eigen::MatrixXd b = Eigen::MatrixXd::Identity(n, n) + sw.asDiagonal() * k * sw.asDiagonal();
    llt.compute(b);
    if (llt.info() != Eigen::Success) throw NumericalError("Laplace Cholesky failed");
  };
  prepare(f);
  for (st.iterations = 0; st.iterations < max_iter; ++st.iterations) {
    st.grad_norm = (grad - a).norm();
    if (st.grad_norm < tol) break;
    const Eigen::VectorXd b = w.cwiseProduct(f) + grad;
    const Eigen::VectorXd t = llt.solve(sw.cwiseProduct(k * b));
    Eigen::VectorXd an = b - sw.cwiseProduct(t);
    Eigen::VectorXd fn = k * an;
    double on = psi(an, fn);
    // damp if the full Newton step overshoots
    for (int h = 0; h < 30 && on < obj; ++h) {
      an = 0.5 * (an + a);
      fn = k * an;
      on = psi(an, fn);
    }
    if (on < obj) break;
    a = an;
    f = fn;
    obj = on;
    prepare(f);
  }
  st.grad_norm = (grad - a).norm();
  // a stalled step at round-off level is accepted; anything looser is not
  if (!(st.grad_norm < std::max(tol, 1e-6))) throw NumericalError("Laplace Newton iteration did not converge");
  st.f = f;
  st.grad_log_lik = grad;
  st.sqrt_w = sw;
  st.chol_b = llt.matrixL();
  st.log_marginal = obj - st.chol_b.diagonal().array().log().sum();
  return st;
}

double gpc_log_marginal(const Eigen::MatrixXd& x, const std::vector<int>& y, double amp, double len) {
  check_xy(x, y);
  return laplace_mode(rbf_kernel(x, x, amp, len), y).log_marginal;
}

void GPCModel::latent(const Eigen::MatrixXd& xs, Eigen::VectorXd& mean, Eigen::VectorXd& var) const {
  if (xs.cols() != x.cols()) throw ValidationError("prediction inputs differ in dimension");
  const Eigen::MatrixXd ks = rbf_kernel(x, xs, amp, len);  // n x m
  mean = ks.transpose() * state.grad_log_lik;
  const Eigen::MatrixXd v = state.chol_b.triangularView<Eigen::Lower>().solve(state.sqrt_w.asDiagonal() * ks);
  var = (amp - v.colwise().squaredNorm().array()).max(0.0).matrix().transpose();
}

Eigen::VectorXd GPCModel::predict(const Eigen::MatrixXd& xs) const {
  Eigen::VectorXd mean, var;
  latent(xs, mean, var);
  Eigen::VectorXd p(mean.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    p[i] = sigmoid(mean[i] / std::sqrt(1.0 + std::numbers::pi * var[i] / 8.0));
  }
  return p;
}

GPCModel gpc_train(const Eigen::MatrixXd& x, const std::vector<int>& y, const GPCOptions& opts) {
  check_xy(x, y);
  const auto& bd = opts.bounds;
  if (!(bd.amp_lo > 0 && bd.amp_lo <= bd.amp0 && bd.amp0 <= bd.amp_hi && bd.len_lo > 0 && bd.len_lo <= bd.len0 &&
        bd.len0 <= bd.len_hi)) {
    throw ValidationError("inconsistent GPC hyperparameter bounds");
  }
  GPCModel m;
  m.x = x;
  m.y = y;
  m.amp = bd.amp0;
  m.len = bd.len0;
  if (opts.optimize) {
    const std::array<double, 2> lo{std::log(bd.amp_lo), std::log(bd.len_lo)};
    const std::array<double, 2> hi{std::log(bd.amp_hi), std::log(bd.len_hi)};
    auto neg = [&](std::array<double, 2> p) {
      try {
        return -laplace_mode(rbf_kernel(x, x, std::exp(p[0]), std::exp(p[1])), y, opts.newton_tol, opts.newton_max)
                    .log_marginal;
      } catch (const NumericalError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    std::array<double, 2> best{std::log(bd.amp0), std::log(bd.len0)};
    double fbest = neg(best);
    const int g = std::max(2, opts.grid);
    for (int i = 0; i < g; ++i) {
      for (int j = 0; j < g; ++j) {
        const std::array<double, 2> p{lo[0] + (hi[0] - lo[0]) * i / (g - 1), lo[1] + (hi[1] - lo[1]) * j / (g - 1)};
        const double v = neg(p);
        if (v < fbest) {
          fbest = v;
          best = p;
        }
      }
    }
    best = nelder_mead(neg, best, lo, hi, 0.5, 400);
    m.amp = std::exp(best[0]);
    m.len = std::exp(best[1]);
  }
  m.state = laplace_mode(rbf_kernel(x, x, m.amp, m.len), y, opts.newton_tol, opts.newton_max);
  return m;
}

}  // namespace spescreen::ml
