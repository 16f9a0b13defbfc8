#include "magnet/theory.hpp"

#include <algorithm>
#include <string>

#include "magnet/error.hpp"
#include "magnet/graph.hpp"

namespace magnet {

using Eigen::MatrixXd;

namespace {

MatrixXd covariance_of(const BlockSymMatrix& omega) {
  Eigen::LLT<MatrixXd> llt(omega.dense());
  if (llt.info() != Eigen::Success) throw NumericalError("precision is not positive definite");
  const int d = omega.total_dim();
  return llt.solve(MatrixXd::Identity(d, d));
}

void check_common(double gamma, int k, int p, double tau) {
  if (!(gamma > 0.0)) throw InputError("gamma must be positive");
  if (k < 1 || p < 1) throw InputError("k and p must be positive");
  if (!(tau > 2.0)) throw InputError("tau must exceed 2");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw InputError("alpha must lie in (0, 1]");
}

}  // namespace

MatrixXd hessian(const BlockSymMatrix& omega) {
  const int d = omega.total_dim();
  if (d > kMaxHessianDim)
    throw InputError("hessian: stacked dimension " + std::to_string(d) + " exceeds the limit of " +
                     std::to_string(kMaxHessianDim));
  const MatrixXd sigma = covariance_of(omega);
  MatrixXd h(d * d, d * d);
  for (int j = 0; j < d; ++j)
    for (int m = 0; m < d; ++m) h.block(j * d, m * d, d, d) = sigma(j, m) * sigma;
  return h;
}

std::vector<int> pair_indices(const AttributeLayout& layout, int a, int b) {
  const int d = layout.total_dim();
  std::vector<int> out;
  out.reserve(layout.attr_count(a) * layout.attr_count(b));
  for (int jl = 0; jl < layout.attr_count(b); ++jl)
    for (int il = 0; il < layout.attr_count(a); ++il)
      out.push_back(layout.offset(a) + il + (layout.offset(b) + jl) * d);
  return out;
}

TheoryDiagnostics irrepresentability(const BlockSymMatrix& omega) {
  const auto& layout = omega.layout();
  const int p = layout.node_count();
  const MatrixXd h = hessian(omega);

  std::vector<std::pair<int, int>> t_pairs, n_pairs;
  for (int b = 0; b < p; ++b)
    for (int a = 0; a < p; ++a)
      (a == b || omega.block_norm(a, b) != 0.0 ? t_pairs : n_pairs).emplace_back(a, b);

  // Concatenated flat indices with per-pair block sizes, for C().
  auto gather = [&](const std::vector<std::pair<int, int>>& pairs, std::vector<int>& sizes) {
    std::vector<int> idx;
    for (const auto& [a, b] : pairs) {
      const auto pi = pair_indices(layout, a, b);
      idx.insert(idx.end(), pi.begin(), pi.end());
      sizes.push_back(static_cast<int>(pi.size()));
    }
    return idx;
  };
  std::vector<int> t_sizes, n_sizes;
  const auto ti = gather(t_pairs, t_sizes);
  const auto ni = gather(n_pairs, n_sizes);
  const AttributeLayout t_layout(t_sizes);

  const MatrixXd h_tt = h(ti, ti);
  Eigen::LLT<MatrixXd> llt(h_tt);
  if (llt.info() != Eigen::Success) throw NumericalError("irrepresentability: H_TT is singular");
  const MatrixXd h_tt_inv = llt.solve(MatrixXd::Identity(h_tt.rows(), h_tt.cols()));

  TheoryDiagnostics out;
  out.kappa_h = linf_op_norm(c_operator(h_tt_inv, t_layout, t_layout));
  out.kappa_sigma = linf_op_norm(c_operator(covariance_of(omega), layout, layout));
  if (!n_pairs.empty()) {
    const MatrixXd prod = h(ni, ti) * h_tt_inv;
    out.alpha_irrep = 1.0 - linf_op_norm(c_operator(prod, AttributeLayout(n_sizes), t_layout));
  }
  const MatrixXd sigma = covariance_of(omega);
  out.sigma_max_diag = sigma.diagonal().maxCoeff();
  const Graph g = Graph::from_precision(omega);
  out.max_degree = g.max_degree();
  for (const auto& [a, b] : g.edges()) {
    const double v = omega.block_norm(a, b);
    out.min_signal = std::isnan(out.min_signal) ? v : std::min(out.min_signal, v);
  }
  return out;
}

double prop1_lambda(double sigma_max_diag, double gamma, int k, int p, double n, double tau,
                    double alpha) {
  check_common(gamma, k, p, tau);
  check_alpha(alpha);
  if (!(n >= 1.0)) throw InputError("n must be >= 1");
  if (!(sigma_max_diag > 0.0)) throw InputError("sigma_max must be positive");
  const double g = 1.0 + 4.0 * gamma * gamma;
  const double inner = 128.0 * g * g * sigma_max_diag * sigma_max_diag / n *
                       (2.0 * std::log(2.0 * k) + tau * std::log(double(p)));
  return 8.0 * k / alpha * std::sqrt(inner);
}

double prop1_sample_bound(const TheoryDiagnostics& diag, int s, int k, int p, double tau,
                          double gamma, double sigma_max) {
  check_common(gamma, k, p, tau);
  check_alpha(diag.alpha_irrep);
  if (s < 0) throw InputError("s must be non-negative");
  if (!(sigma_max > 0.0)) throw InputError("sigma_max must be positive");
  const double ks = diag.kappa_sigma, kh = diag.kappa_h;
  const double c1 = std::pow(48.0 * std::sqrt(2.0) * (1.0 + 4.0 * gamma * gamma) * sigma_max *
                                 std::max(ks * kh, ks * ks * ks * kh * kh),
                             2);
  const double a = 1.0 + 8.0 / diag.alpha_irrep;
  return c1 * double(s) * s * double(k) * k * a * a *
         (tau * std::log(double(p)) + std::log(4.0) + 2.0 * std::log(double(k)));
}

double prop1_min_signal(const TheoryDiagnostics& diag, int k, int p, double n, double tau,
                        double gamma, double sigma_max) {
  check_common(gamma, k, p, tau);
  check_alpha(diag.alpha_irrep);
  if (!(n >= 1.0)) throw InputError("n must be >= 1");
  return 16.0 * std::sqrt(2.0) * (1.0 + 4.0 * gamma * gamma) * sigma_max *
         (1.0 + 8.0 / diag.alpha_irrep) * diag.kappa_h * k *
         std::sqrt((tau * std::log(double(p)) + std::log(4.0) + 2.0 * std::log(double(k))) / n);
}

TheoryDiagnostics diagnose(const BlockSymMatrix& omega, const TheoryOptions& options) {
  const auto& layout = omega.layout();
  const int k = layout.attr_count(0);
  for (int a = 0; a < layout.node_count(); ++a)
    if (layout.attr_count(a) != k)
      throw InputError("theory diagnostics assume the same attribute count for every node");
  TheoryDiagnostics d = irrepresentability(omega);
  if (!d.recovery_guaranteed()) return d;
  const int p = layout.node_count();
  const double alpha = std::min(d.alpha_irrep, 1.0);
  TheoryDiagnostics clipped = d;
  clipped.alpha_irrep = alpha;
  d.n_min_prop1 = prop1_sample_bound(clipped, d.max_degree, k, p, options.tau, options.gamma,
                                     d.sigma_max_diag);
  const double n = options.n > 0.0 ? options.n : std::ceil(d.n_min_prop1);
  d.lambda_prop1 = prop1_lambda(d.sigma_max_diag, options.gamma, k, p, n, options.tau, alpha);
  d.min_signal_required =
      prop1_min_signal(clipped, k, p, n, options.tau, options.gamma, d.sigma_max_diag);
  return d;
}

}  // namespace magnet
