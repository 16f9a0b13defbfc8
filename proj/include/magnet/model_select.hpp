#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magnet/data.hpp"
#include "magnet/graph.hpp"
#include "magnet/solver.hpp"

namespace magnet {

/// kLiteral scores  tr(S Omega) - log|Omega| + sum_{a<b} 1{Omega_ab != 0} k_a k_b log n
/// at the penalized estimate. Without a factor n on the likelihood part the
/// complexity term dominates and the empty graph always wins.
/// kDeviance multiplies the likelihood part by n.
/// kRefit is kDeviance with the likelihood part evaluated at the maximum
/// likelihood estimate restricted to the estimated graph, which removes the
/// shrinkage bias that otherwise rewards spurious edges.
enum class BicForm { kLiteral, kDeviance, kRefit };

struct RefitResult {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd omega;
  int iterations = 0;
  bool converged = false;
};

/// Maximum likelihood covariance whose inverse vanishes on every block pair
/// absent from `graph`: Sigma_ab = S_ab on the diagonal blocks and the
/// edges. Solved by cycling over nodes; for node a with neighbours N,
///   Sigma_{-a,a} = Sigma_{-a,N} Sigma_NN^-1 S_Na,   Sigma_aa = S_aa.
/// Throws NumericalError when a subproblem is singular (the restricted MLE
/// does not exist, e.g. too few samples).
RefitResult refit_mle(const BlockSymMatrix& s, const Graph& graph, double tol = 1e-10,
                      int max_iterations = 500);

/// Infinite under kRefit when the restricted MLE does not exist.
double bic(const BlockSymMatrix& s, const BlockSymMatrix& omega_hat, int n,
           BicForm form = BicForm::kRefit);
inline double bic(const BlockSymMatrix& s, const SolverReport& report, int n,
                  BicForm form = BicForm::kRefit) {
  return bic(s, report.omega_hat, n, form);
}

/// `count` log-spaced values from max_offdiag_block_norm(s) down to 1/100 of
/// it. When s has no off-diagonal mass the grid collapses to the single
/// value max_a ||S_aa||_F / 100 and `warning` (if given) is filled in.
std::vector<double> lambda_grid(const BlockSymMatrix& s, int count, std::string* warning = nullptr);

struct PathOptions {
  BicForm bic_form = BicForm::kRefit;
  /// Start each fit from the previous solution (precision and covariance).
  bool warm_start = true;
  /// Solve each fit through estimate_screened.
  bool screened = false;
};

struct PathResult {
  std::vector<double> lambdas;
  std::vector<SolverReport> reports;
  std::vector<double> bic;
  std::vector<int> edge_counts;
  int best_index = 0;
};

/// Fits the grid in order. best_index minimizes bic; ties go to the larger
/// lambda. `cfg.lambda` is ignored.
PathResult fit_path(const CovEstimate& s, const std::vector<double>& grid, const SolverConfig& cfg,
                    const PathOptions& options = {});

struct StabilityConfig {
  int reps = 100;
  double fraction = 0.8;
  int threshold = 95;
  std::uint64_t seed = 0;
  int jobs = 1;
  /// Center each subsample before forming its covariance (ignored when the
  /// dataset carries a mask; the masked estimator is uncentered).
  bool center = false;
  SolverConfig solver;
};

struct StabilityResult {
  Eigen::MatrixXi edge_counts;
  Graph stable_edges;
  double lambda = 0.0;
  int reps = 0;
  int failed = 0;
  double subsample_fraction = 0.0;
  int threshold = 0;
};

/// Refits on `reps` subsamples of floor(fraction * n) rows drawn without
/// replacement; replicate r shuffles with Rng::substream(seed, r). A
/// replicate whose covariance has a non positive definite diagonal block is
/// counted as failed; more than 10% failures throws NumericalError.
StabilityResult stability_select(const Dataset& d, double lambda, const StabilityConfig& cfg);

/// lambda with the smallest BIC over lambda_grid(S, grid_size).
double select_lambda_bic(const CovEstimate& s, int grid_size, const SolverConfig& cfg,
                         BicForm form = BicForm::kRefit);

}  // namespace magnet
