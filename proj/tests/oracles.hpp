#pragma once

// Reference implementations used only by the tests. Each one is written
// from the defining formula and shares no code with the library beyond the
// Eigen types, so agreement is evidence rather than tautology.

#include <cmath>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline double soft(double x, double t) { return x > t ? x - t : (x < -t ? x + t : 0.0); }

/// Scalar graphical lasso with the diagonal penalized, in the blockwise
/// covariance form of Friedman, Hastie and Tibshirani. W starts at
/// S + lambda I, then for each column a lasso
///   min_beta 1/2 beta^T W11 beta - beta^T s12 + lambda ||beta||_1
/// by coordinate descent, w12 = W11 beta, until W stops moving.
/// Returns the precision matrix.
inline MatrixXd glasso(const MatrixXd& s, double lambda, double tol = 1e-13, int max_outer = 10000) {
  const int p = static_cast<int>(s.rows());
  MatrixXd w = s;
  w.diagonal().array() += lambda;
  MatrixXd beta = MatrixXd::Zero(p - 1, p);
  auto others = [p](int j) {
    std::vector<int> idx;
    for (int i = 0; i < p; ++i)
      if (i != j) idx.push_back(i);
    return idx;
  };
  for (int outer = 0; outer < max_outer; ++outer) {
    double moved = 0.0;
    for (int j = 0; j < p; ++j) {
      const auto idx = others(j);
      MatrixXd w11(p - 1, p - 1);
      VectorXd s12(p - 1);
      for (int r = 0; r < p - 1; ++r) {
        s12(r) = s(idx[r], j);
        for (int c = 0; c < p - 1; ++c) w11(r, c) = w(idx[r], idx[c]);
      }
      VectorXd b = beta.col(j);
      for (int inner = 0; inner < 100000; ++inner) {
        double delta = 0.0;
        for (int k = 0; k < p - 1; ++k) {
          double r = s12(k);
          for (int l = 0; l < p - 1; ++l)
            if (l != k) r -= w11(k, l) * b(l);
          const double nb = soft(r, lambda) / w11(k, k);
          delta = std::max(delta, std::abs(nb - b(k)));
          b(k) = nb;
        }
        if (delta < tol) break;
      }
      beta.col(j) = b;
      const VectorXd w12 = w11 * b;
      for (int r = 0; r < p - 1; ++r) {
        moved = std::max(moved, std::abs(w(idx[r], j) - w12(r)));
        w(idx[r], j) = w12(r);
        w(j, idx[r]) = w12(r);
      }
    }
    if (moved < tol) break;
  }
  MatrixXd omega = MatrixXd::Zero(p, p);
  for (int j = 0; j < p; ++j) {
    const auto idx = others(j);
    double dot = 0.0;
    for (int r = 0; r < p - 1; ++r) dot += w(idx[r], j) * beta(r, j);
    const double ojj = 1.0 / (w(j, j) - dot);
    omega(j, j) = ojj;
    for (int r = 0; r < p - 1; ++r) omega(idx[r], j) = -beta(r, j) * ojj;
  }
  return 0.5 * (omega + omega.transpose());
}

/// Dense inverse by full-pivot LU (the library uses Cholesky).
inline MatrixXd inverse(const MatrixXd& m) { return m.fullPivLu().inverse(); }

/// Irrepresentability quantities from flat indices. Entry (i,j) of the
/// stacked matrix is indexed row-major (i * d + j), blocks are walked in
/// row-major pair order, and H[(i,j),(l,m)] = Sigma_il Sigma_jm is formed
/// entry by entry. The library uses column-major vectorization, so the two
/// only agree if the block bookkeeping is right.
struct FlatTheory {
  double alpha = 1.0;
  double kappa_sigma = 0.0;
  double kappa_h = 0.0;
};

inline FlatTheory flat_theory(const MatrixXd& omega, const std::vector<int>& k) {
  const int p = static_cast<int>(k.size());
  std::vector<int> off(p + 1, 0);
  for (int a = 0; a < p; ++a) off[a + 1] = off[a] + k[a];
  const int d = off[p];
  const MatrixXd sigma = inverse(omega);

  auto block_nonzero = [&](int a, int b) {
    for (int i = off[a]; i < off[a + 1]; ++i)
      for (int j = off[b]; j < off[b + 1]; ++j)
        if (omega(i, j) != 0.0) return true;
    return false;
  };
  struct Pair {
    int a, b;
    std::vector<int> flat;
  };
  std::vector<Pair> tp, np;
  for (int a = 0; a < p; ++a)
    for (int b = 0; b < p; ++b) {
      Pair pr{a, b, {}};
      for (int i = off[a]; i < off[a + 1]; ++i)
        for (int j = off[b]; j < off[b + 1]; ++j) pr.flat.push_back(i * d + j);
      ((a == b || block_nonzero(a, b)) ? tp : np).push_back(pr);
    }
  auto hess = [&](int r, int c) {
    const int i = r / d, j = r % d, l = c / d, m = c % d;
    return sigma(i, l) * sigma(j, m);
  };
  std::vector<int> tf, nf;
  for (const auto& pr : tp) tf.insert(tf.end(), pr.flat.begin(), pr.flat.end());
  for (const auto& pr : np) nf.insert(nf.end(), pr.flat.begin(), pr.flat.end());
  MatrixXd htt(tf.size(), tf.size()), hnt(nf.size(), tf.size());
  for (std::size_t r = 0; r < tf.size(); ++r)
    for (std::size_t c = 0; c < tf.size(); ++c) htt(r, c) = hess(tf[r], tf[c]);
  for (std::size_t r = 0; r < nf.size(); ++r)
    for (std::size_t c = 0; c < tf.size(); ++c) hnt(r, c) = hess(nf[r], tf[c]);
  const MatrixXd htt_inv = inverse(htt);

  // Sum over column pair-blocks of the Frobenius norm, maximized over row pair-blocks.
  auto block_linf = [](const MatrixXd& m, const std::vector<Pair>& rows, const std::vector<Pair>& cols) {
    double best = 0.0;
    int r0 = 0;
    for (const auto& rp : rows) {
      double sum = 0.0;
      int c0 = 0;
      for (const auto& cp : cols) {
        double fro = 0.0;
        for (std::size_t r = 0; r < rp.flat.size(); ++r)
          for (std::size_t c = 0; c < cp.flat.size(); ++c) fro += m(r0 + r, c0 + c) * m(r0 + r, c0 + c);
        sum += std::sqrt(fro);
        c0 += static_cast<int>(cp.flat.size());
      }
      best = std::max(best, sum);
      r0 += static_cast<int>(rp.flat.size());
    }
    return best;
  };

  FlatTheory out;
  out.kappa_h = block_linf(htt_inv, tp, tp);
  if (!np.empty()) out.alpha = 1.0 - block_linf(hnt * htt_inv, np, tp);
  for (int a = 0; a < p; ++a) {
    double sum = 0.0;
    for (int b = 0; b < p; ++b) {
      double fro = 0.0;
      for (int i = off[a]; i < off[a + 1]; ++i)
        for (int j = off[b]; j < off[b + 1]; ++j) fro += sigma(i, j) * sigma(i, j);
      sum += std::sqrt(fro);
    }
    out.kappa_sigma = std::max(out.kappa_sigma, sum);
  }
  return out;
}

/// max over unit u, v of u^T C_ab v / sqrt(u^T C_aa u * v^T C_bb v) by
/// projected gradient ascent on the product of spheres, with backtracking and
/// several random restarts.
inline double pcc_direct(const MatrixXd& caa, const MatrixXd& cbb, const MatrixXd& cab,
                         unsigned seed = 1, int restarts = 8) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  const int ka = static_cast<int>(caa.rows()), kb = static_cast<int>(cbb.rows());
  auto f = [&](const VectorXd& u, const VectorXd& v) {
    return u.dot(cab * v) / std::sqrt(u.dot(caa * u) * v.dot(cbb * v));
  };
  double best = 0.0;
  for (int rs = 0; rs < restarts; ++rs) {
    VectorXd u(ka), v(kb);
    for (int i = 0; i < ka; ++i) u(i) = z(gen);
    for (int i = 0; i < kb; ++i) v(i) = z(gen);
    u.normalize();
    v.normalize();
    if (f(u, v) < 0) v = -v;
    double fv = f(u, v), eta = 1.0;
    for (int it = 0; it < 200000; ++it) {
      const double num = u.dot(cab * v), qa = u.dot(caa * u), qb = v.dot(cbb * v);
      const double den = std::sqrt(qa * qb);
      const VectorXd gu = cab * v / den - num * (caa * u) / (qa * den);
      const VectorXd gv = cab.transpose() * u / den - num * (cbb * v) / (qb * den);
      // Tangent components only; the objective is scale invariant.
      const VectorXd tu = gu - u.dot(gu) * u, tv = gv - v.dot(gv) * v;
      if (std::sqrt(tu.squaredNorm() + tv.squaredNorm()) < 1e-14) break;
      bool moved = false;
      while (eta > 1e-18) {
        VectorXd nu = (u + eta * tu).normalized(), nv = (v + eta * tv).normalized();
        const double fn = f(nu, nv);
        if (fn > fv) {
          u = nu;
          v = nv;
          fv = fn;
          eta *= 2.0;
          moved = true;
          break;
        }
        eta *= 0.5;
      }
      if (!moved) break;
    }
    best = std::max(best, std::abs(fv));
  }
  return best;
}

/// Recovery-bound formulas evaluated in long double with the algebra
/// rearranged (square root split across factors).
inline double prop1_lambda(double smax, double gamma, int k, int p, double n, double tau, double alpha) {
  const long double g = 1.0L + 4.0L * gamma * gamma;
  const long double root = std::sqrt(128.0L) * g * smax / std::sqrt(static_cast<long double>(n)) *
                           std::sqrt(2.0L * std::log(2.0L * k) + tau * std::log(static_cast<long double>(p)));
  return static_cast<double>(8.0L * k * root / alpha);
}

inline double prop1_bound(double ks, double kh, double alpha, int s, int k, int p, double tau,
                          double gamma, double smax) {
  const long double g = 1.0L + 4.0L * gamma * gamma;
  const long double m = std::max<long double>(ks * kh, ks * ks * ks * kh * kh);
  const long double c1 = 4608.0L * g * g * smax * smax * m * m;  // (48 sqrt 2)^2 = 4608
  const long double f = 1.0L + 8.0L / alpha;
  return static_cast<double>(c1 * s * s * k * k * f * f *
                             (tau * std::log(static_cast<long double>(p)) + std::log(4.0L) +
                              2.0L * std::log(static_cast<long double>(k))));
}

}  // namespace oracle
