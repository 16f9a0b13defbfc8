#pragma once

#include <limits>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "magnet/data.hpp"
#include "magnet/layout.hpp"

namespace magnet {

/// How a node's step size evolves between visits. kPersistent halves and
/// never grows again; kAdaptive doubles the step (capped at initial_step)
/// before each visit and backtracks from there.
enum class StepPolicy { kAdaptive, kPersistent };

struct SolverConfig {
  double lambda = 0.0;
  /// Duality-gap tolerance.
  double epsilon = 1e-3;
  int max_sweeps = 500;
  double initial_step = 1.0;
  double min_step = 1e-10;
  StepPolicy step_policy = StepPolicy::kAdaptive;
  /// Projected gradient steps on the dual objective taken from the clipped
  /// covariance before each gap evaluation; 0 uses the clipped point as is.
  int dual_ascent_steps = 3;
  /// When > 0, convergence additionally requires kkt_residual <= this.
  double kkt_tolerance = 0.0;
  /// Optional starting point (warm start or random initialization). When only
  /// the precision is given its inverse is computed once.
  std::optional<Eigen::MatrixXd> initial_omega;
  std::optional<Eigen::MatrixXd> initial_sigma;

  void validate() const;
};

struct SolverReport {
  BlockSymMatrix omega_hat;
  BlockSymMatrix sigma_hat;
  /// Objective after initialization, then after every accepted node update.
  std::vector<double> objective_trace;
  /// Duality gap after each sweep (NaN when no dual-feasible point was found).
  std::vector<double> sweep_gaps;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double final_gap = std::numeric_limits<double>::quiet_NaN();
  bool gap_available = false;
  int sweeps = 0;
  int step_halvings = 0;
  int node_updates = 0;
  bool converged = false;
};

/// (1 - t*lambda / ||m||_F)_+ * m. Exact zeros when ||m||_F <= t*lambda.
Eigen::MatrixXd prox_block(const Eigen::Ref<const Eigen::MatrixXd>& m, double t, double lambda);

/// tr(S Omega) - log|Omega| + lambda * sum over all ordered block pairs of
/// ||Omega_ab||_F. Throws NumericalError if omega is not positive definite.
double objective(const BlockSymMatrix& s, const BlockSymMatrix& omega, double lambda);

/// Inverse of the precision with node a's rows and columns removed,
///   Sigma_{-a,-a} - Sigma_{-a,a} Sigma_aa^-1 Sigma_{a,-a},
/// returned at full size with node a's rows and columns set to zero.
Eigen::MatrixXd complement_inverse(const Eigen::Ref<const Eigen::MatrixXd>& sigma,
                                   const AttributeLayout& layout, int a);

/// New covariance after node a's row of the precision changed, using the
/// matrix inversion lemma against the pre-update covariance `sigma_prev`.
/// O(d^2 k); throws NumericalError when the Schur complement of the new
/// precision is not positive definite.
Eigen::MatrixXd cov_update(const Eigen::Ref<const Eigen::MatrixXd>& omega_new,
                           const Eigen::Ref<const Eigen::MatrixXd>& sigma_prev,
                           const AttributeLayout& layout, int a);

/// Inexact block coordinate descent state: one proximal-gradient step on a
/// node's row/column per update and covariance maintenance through
/// cov_update. A trial step is rejected (and the step halved) when the new
/// precision is not positive definite, when the full objective increases, or
/// when the smooth part exceeds its quadratic model at the current iterate
///   f(new) > f(old) + <grad f(old), new - old> + ||new - old||_F^2 / (2t).
class BlockCoordinateDescent {
 public:
  /// Objective may grow by at most this much on an accepted update.
  static constexpr double kDescentSlack = 1e-12;

  BlockCoordinateDescent(const BlockSymMatrix& s, const SolverConfig& cfg);

  struct UpdateOutcome {
    int halvings = 0;
    double objective = 0.0;
  };

  /// Throws NumericalError if the step for node a falls below min_step.
  UpdateOutcome node_update(int a);
  /// Recomputes log|Omega|, Sigma = Omega^-1 and the objective from scratch.
  void refresh();

  const Eigen::MatrixXd& omega() const { return omega_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  double current_objective() const { return objective_; }
  double step(int a) const { return step_.at(a); }
  void set_step(int a, double t) { step_.at(a) = t; }
  const AttributeLayout& layout() const { return layout_; }

 private:
  double penalty_row_delta(const Eigen::MatrixXd& cand, int a) const;

  AttributeLayout layout_;
  Eigen::MatrixXd s_;
  double lambda_;
  double min_step_;
  double initial_step_;
  StepPolicy policy_;
  Eigen::MatrixXd omega_;
  Eigen::MatrixXd sigma_;
  std::vector<double> step_;
  double trace_ = 0.0;
  double logdet_ = 0.0;
  double penalty_ = 0.0;
  double objective_ = 0.0;
};

struct DualPoint {
  Eigen::MatrixXd sigma;
  bool available = false;
  bool fallback_used = false;
  double delta = 0.0;
  double logdet = std::numeric_limits<double>::quiet_NaN();
};

/// Projects each block of sigma_hat (diagonal blocks included) onto the ball
/// ||S_ab - Sigma_ab||_F <= lambda. If the projection is not positive
/// definite, retries with (omega_hat + delta I)^-1 for delta = 1e-10,
/// doubling up to 50 times; reports unavailable otherwise.
DualPoint make_dual_feasible(const Eigen::Ref<const Eigen::MatrixXd>& sigma_hat,
                             const Eigen::Ref<const Eigen::MatrixXd>& omega_hat,
                             const BlockSymMatrix& s, double lambda);

/// Raises the dual objective log|Sigma| of an available dual point by up to
/// `steps` projected gradient steps (gradient Sigma^-1, projection by the
/// same blockwise clipping, backtracking to keep Sigma positive definite and
/// the objective increasing). The point stays dual feasible, so the gap it
/// certifies stays valid and only gets tighter.
void refine_dual(DualPoint& dual, const BlockSymMatrix& s, double lambda, int steps);

/// |primal(Omega) - sum_j k_j - log|Sigma||. Throws InputError if sigma is not
/// dual feasible and NumericalError if either matrix is not positive definite.
double duality_gap(const BlockSymMatrix& omega, const BlockSymMatrix& sigma_feasible,
                   const BlockSymMatrix& s, double lambda);

/// Largest block violation of the optimality conditions
///   S_ab - (Omega^-1)_ab + lambda Omega_ab / ||Omega_ab||_F = 0   (Omega_ab != 0)
///   ||S_ab - (Omega^-1)_ab||_F <= lambda                          (Omega_ab == 0).
double kkt_residual(const BlockSymMatrix& omega, const BlockSymMatrix& s, double lambda);
/// Same, with a precomputed sigma = omega^-1.
double kkt_residual(const Eigen::Ref<const Eigen::MatrixXd>& omega,
                    const Eigen::Ref<const Eigen::MatrixXd>& sigma, const BlockSymMatrix& s,
                    double lambda);

/// Minimizes the block-penalized negative log-likelihood. Starts from the
/// block diagonal of S unless cfg carries an initial point, sweeps nodes in
/// ascending order and stops once the duality gap is <= epsilon (or, when no
/// dual-feasible point is available, once the relative objective change over
/// a sweep is <= 1e-8). Non-convergence within max_sweeps returns the last
/// iterate with converged = false.
SolverReport estimate(const BlockSymMatrix& s, const SolverConfig& cfg);
inline SolverReport estimate(const CovEstimate& s, const SolverConfig& cfg) {
  return estimate(s.s, cfg);
}

}  // namespace magnet
