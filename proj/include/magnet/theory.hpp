#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "magnet/layout.hpp"

namespace magnet {

/// Largest stacked dimension accepted by hessian(); the Hessian has
/// (pk)^2 rows.
inline constexpr int kMaxHessianDim = 60;

/// Sub-Gaussian parameter of a standard normal under
/// E exp(tZ) <= exp(gamma^2 t^2).
inline const double kGaussianGamma = 1.0 / std::sqrt(2.0);

/// H = Sigma (x) Sigma with Sigma = omega^-1, of size d^2 x d^2 (d = pk).
/// Row r = i + j d corresponds to entry (i, j) of a d x d matrix under
/// column-major vectorization, so H(i + j d, l + m d) = Sigma(i,l) Sigma(j,m).
Eigen::MatrixXd hessian(const BlockSymMatrix& omega);

/// Flat indices (column-major vectorization) of the entries of block (a,b),
/// themselves in column-major order within the block.
std::vector<int> pair_indices(const AttributeLayout& layout, int a, int b);

struct TheoryDiagnostics {
  /// 1 - |||C(H_NT H_TT^-1)|||_inf (1 when N is empty).
  double alpha_irrep = 1.0;
  double kappa_sigma = 0.0;
  double kappa_h = 0.0;
  double lambda_prop1 = NAN;
  double n_min_prop1 = NAN;
  /// min over true edges of ||Omega_ab||_F (NaN for an empty graph).
  double min_signal = NAN;
  /// Signal strength the recovery guarantee asks for at lambda_prop1's n.
  double min_signal_required = NAN;
  double sigma_max_diag = 0.0;
  int max_degree = 0;
  /// alpha_irrep > 0; otherwise the theory does not guarantee recovery.
  bool recovery_guaranteed() const { return alpha_irrep > 0.0; }
};

/// Irrepresentability constant, kappa values, min_signal, sigma_max_diag and
/// max_degree of omega. T is the support of omega over ordered node pairs,
/// diagonal pairs included; N is the rest. Throws InputError past the size
/// guard and NumericalError if H_TT is singular.
TheoryDiagnostics irrepresentability(const BlockSymMatrix& omega);

/// 8 k / alpha * sqrt(128 (1 + 4 gamma^2)^2 sigma_max^2 / n * (2 log 2k + tau log p)).
double prop1_lambda(double sigma_max_diag, double gamma, int k, int p, double n, double tau,
                    double alpha);

/// C1 s^2 k^2 (1 + 8/alpha)^2 (tau log p + log 4 + 2 log k) with
/// C1 = (48 sqrt2 (1 + 4 gamma^2) sigma_max max(kS kH, kS^3 kH^2))^2.
double prop1_sample_bound(const TheoryDiagnostics& diag, int s, int k, int p, double tau,
                          double gamma, double sigma_max);

/// 16 sqrt2 (1 + 4 gamma^2) sigma_max (1 + 8/alpha) kH k sqrt((tau log p + log 4 + 2 log k)/n).
double prop1_min_signal(const TheoryDiagnostics& diag, int k, int p, double n, double tau,
                        double gamma, double sigma_max);

struct TheoryOptions {
  double tau = 3.0;
  double gamma = kGaussianGamma;
  /// Sample size for lambda and the signal requirement; <= 0 uses
  /// ceil(n_min_prop1).
  double n = 0.0;
};

/// irrepresentability() plus the recovery bound's lambda, sample size and
/// signal requirement. Requires a uniform layout; an instance with
/// alpha_irrep <= 0 leaves the three recovery-bound fields NaN.
TheoryDiagnostics diagnose(const BlockSymMatrix& omega, const TheoryOptions& options);

}  // namespace magnet
