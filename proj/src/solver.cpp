#include "magnet/solver.hpp"

#include <cmath>
#include <string>

#include "magnet/error.hpp"

namespace magnet {

namespace {

using Eigen::MatrixXd;

double logdet_or_throw(const Eigen::Ref<const MatrixXd>& m, const char* what) {
  const Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " is not positive definite");
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

MatrixXd inverse_or_throw(const Eigen::Ref<const MatrixXd>& m, const char* what) {
  const Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) throw NumericalError(std::string(what) + " is not positive definite");
  MatrixXd inv = llt.solve(MatrixXd::Identity(m.rows(), m.cols()));
  return 0.5 * (inv + inv.transpose());
}

double penalty(const MatrixXd& omega, const AttributeLayout& layout, double lambda) {
  double total = 0.0;
  for (int a = 0; a < layout.node_count(); ++a) {
    total += omega.block(layout.offset(a), layout.offset(a), layout.attr_count(a),
                         layout.attr_count(a))
                 .norm();
    for (int b = a + 1; b < layout.node_count(); ++b)
      total += 2.0 * omega.block(layout.offset(a), layout.offset(b), layout.attr_count(a),
                                 layout.attr_count(b))
                         .norm();
  }
  return lambda * total;
}

void symmetrize(MatrixXd& m) { m = 0.5 * (m + m.transpose()).eval(); }

// Projects every block of m onto ||S_ab - m_ab||_F <= lambda.
void clip_to_dual_ball(MatrixXd& m, const BlockSymMatrix& s, double lambda) {
  const auto& layout = s.layout();
  for (int a = 0; a < layout.node_count(); ++a) {
    for (int b = a; b < layout.node_count(); ++b) {
      auto blk = m.block(layout.offset(a), layout.offset(b), layout.attr_count(a),
                         layout.attr_count(b));
      const auto s_ab = s.block_view(a, b);
      const double dist = (blk - s_ab).norm();
      if (dist <= lambda) continue;
      blk = s_ab + (lambda / dist) * (blk - s_ab);
      if (a != b)
        m.block(layout.offset(b), layout.offset(a), layout.attr_count(b), layout.attr_count(a)) =
            blk.transpose();
    }
  }
  symmetrize(m);
}

}  // namespace

void SolverConfig::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InputError("lambda must be a positive finite number");
  if (!(epsilon > 0.0)) throw InputError("epsilon must be positive");
  if (max_sweeps < 1) throw InputError("max_sweeps must be >= 1");
  if (!(min_step > 0.0 && min_step < initial_step))
    throw InputError("step sizes must satisfy 0 < min_step < initial_step");
  if (dual_ascent_steps < 0) throw InputError("dual_ascent_steps must be >= 0");
  if (!(kkt_tolerance >= 0.0)) throw InputError("kkt_tolerance must be >= 0");
}

MatrixXd prox_block(const Eigen::Ref<const MatrixXd>& m, double t, double lambda) {
  const double nrm = m.norm();
  const double threshold = t * lambda;
  if (nrm <= threshold) return MatrixXd::Zero(m.rows(), m.cols());
  if (threshold == 0.0) return m;
  return (1.0 - threshold / nrm) * m;
}

double objective(const BlockSymMatrix& s, const BlockSymMatrix& omega, double lambda) {
  if (!(s.layout() == omega.layout())) throw InputError("S and Omega layouts differ");
  const double logdet = logdet_or_throw(omega.dense(), "precision matrix");
  return s.dense().cwiseProduct(omega.dense()).sum() - logdet +
         penalty(omega.dense(), omega.layout(), lambda);
}

MatrixXd complement_inverse(const Eigen::Ref<const MatrixXd>& sigma, const AttributeLayout& layout,
                            int a) {
  const int o = layout.offset(a);
  const int k = layout.attr_count(a);
  const Eigen::LLT<MatrixXd> llt(sigma.block(o, o, k, k));
  if (llt.info() != Eigen::Success)
    throw NumericalError("covariance block of node " + std::to_string(a) + " is not positive definite");
  const MatrixXd rows = sigma.middleRows(o, k);  // k x d
  MatrixXd w = sigma - rows.transpose() * llt.solve(rows);
  w.middleRows(o, k).setZero();
  w.middleCols(o, k).setZero();
  symmetrize(w);
  return w;
}

namespace {

// Shared tail of cov_update: given W = (Omega_{-a,-a})^-1 (zero-padded) and the
// candidate row of the precision, returns Sigma-hat, or nullopt when the Schur
// complement is not positive definite. When `logdet_schur` is non-null it
// receives log|Schur|.
std::optional<MatrixXd> finish_cov_update(const MatrixXd& w, const MatrixXd& row, int o, int k,
                                          double* logdet_schur) {
  MatrixXd off = row;
  off.middleCols(o, k).setZero();
  const MatrixXd u = w * off.transpose();  // d x k, zero rows at node a
  MatrixXd schur = row.middleCols(o, k) - off * u;
  symmetrize(schur);
  const Eigen::LLT<MatrixXd> llt(schur);
  if (llt.info() != Eigen::Success) return std::nullopt;
  if (logdet_schur) *logdet_schur = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  MatrixXd schur_inv = llt.solve(MatrixXd::Identity(k, k));
  symmetrize(schur_inv);
  const MatrixXd v = u * schur_inv;  // d x k
  MatrixXd sigma = w + v * u.transpose();
  sigma.middleRows(o, k) = -v.transpose();
  sigma.middleCols(o, k) = -v;
  sigma.block(o, o, k, k) = schur_inv;
  symmetrize(sigma);
  return sigma;
}

}  // namespace

MatrixXd cov_update(const Eigen::Ref<const MatrixXd>& omega_new,
                    const Eigen::Ref<const MatrixXd>& sigma_prev, const AttributeLayout& layout,
                    int a) {
  const int o = layout.offset(a);
  const int k = layout.attr_count(a);
  const MatrixXd w = complement_inverse(sigma_prev, layout, a);
  auto sigma = finish_cov_update(w, omega_new.middleRows(o, k), o, k, nullptr);
  if (!sigma)
    throw NumericalError("Schur complement for node " + std::to_string(a) +
                         " is not positive definite");
  return *sigma;
}

BlockCoordinateDescent::BlockCoordinateDescent(const BlockSymMatrix& s, const SolverConfig& cfg)
    : layout_(s.layout()),
      s_(s.dense()),
      lambda_(cfg.lambda),
      min_step_(cfg.min_step),
      initial_step_(cfg.initial_step),
      policy_(cfg.step_policy),
      step_(s.node_count(), cfg.initial_step) {
  cfg.validate();
  const int d = layout_.total_dim();
  if (cfg.initial_omega) {
    if (cfg.initial_omega->rows() != d || cfg.initial_omega->cols() != d)
      throw InputError("initial precision has the wrong shape");
    omega_ = BlockSymMatrix(layout_, *cfg.initial_omega).dense();
    if (cfg.initial_sigma) {
      if (cfg.initial_sigma->rows() != d || cfg.initial_sigma->cols() != d)
        throw InputError("initial covariance has the wrong shape");
      sigma_ = BlockSymMatrix(layout_, *cfg.initial_sigma).dense();
    } else {
      sigma_ = inverse_or_throw(omega_, "initial precision");
    }
  } else {
    omega_ = MatrixXd::Zero(d, d);
    sigma_ = MatrixXd::Zero(d, d);
    for (int a = 0; a < layout_.node_count(); ++a) {
      const int o = layout_.offset(a);
      const int k = layout_.attr_count(a);
      const MatrixXd s_aa = s_.block(o, o, k, k);
      const Eigen::LLT<MatrixXd> llt(s_aa);
      if (llt.info() != Eigen::Success)
        throw NumericalError("diagonal block of S for node " + std::to_string(a) +
                             " is not positive definite");
      omega_.block(o, o, k, k) = s_aa;
      MatrixXd inv = llt.solve(MatrixXd::Identity(k, k));
      sigma_.block(o, o, k, k) = 0.5 * (inv + inv.transpose());
    }
  }
  trace_ = s_.cwiseProduct(omega_).sum();
  logdet_ = logdet_or_throw(omega_, "initial precision");
  penalty_ = penalty(omega_, layout_, lambda_);
  objective_ = trace_ - logdet_ + penalty_;
}

void BlockCoordinateDescent::refresh() {
  const Eigen::LLT<MatrixXd> llt(omega_);
  if (llt.info() != Eigen::Success) throw NumericalError("precision iterate lost positive definiteness");
  logdet_ = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  sigma_ = llt.solve(MatrixXd::Identity(omega_.rows(), omega_.cols()));
  symmetrize(sigma_);
  trace_ = s_.cwiseProduct(omega_).sum();
  penalty_ = penalty(omega_, layout_, lambda_);
  objective_ = trace_ - logdet_ + penalty_;
}

double BlockCoordinateDescent::penalty_row_delta(const MatrixXd& cand, int a) const {
  const int o = layout_.offset(a);
  const int k = layout_.attr_count(a);
  double delta = 0.0;
  for (int b = 0; b < layout_.node_count(); ++b) {
    const int ob = layout_.offset(b);
    const int kb = layout_.attr_count(b);
    const double change =
        cand.middleCols(ob, kb).norm() - omega_.block(o, ob, k, kb).norm();
    delta += (b == a ? 1.0 : 2.0) * change;
  }
  return lambda_ * delta;
}

BlockCoordinateDescent::UpdateOutcome BlockCoordinateDescent::node_update(int a) {
  const int o = layout_.offset(a);
  const int k = layout_.attr_count(a);
  const MatrixXd w = complement_inverse(sigma_, layout_, a);
  const double logdet_sigma_aa = logdet_or_throw(sigma_.block(o, o, k, k), "covariance block");
  const MatrixXd row_old = omega_.middleRows(o, k);
  // Gradient of the smooth part for the row is S - Sigma; the step moves along
  // Sigma - S.
  const MatrixXd descent = sigma_.middleRows(o, k) - s_.middleRows(o, k);
  const MatrixXd s_row = s_.middleRows(o, k);

  UpdateOutcome out;
  if (policy_ == StepPolicy::kAdaptive) step_[a] = std::min(initial_step_, 2.0 * step_[a]);
  for (;;) {
    const double t = step_[a];
    MatrixXd cand = row_old + t * descent;
    for (int b = 0; b < layout_.node_count(); ++b) {
      const int ob = layout_.offset(b);
      const int kb = layout_.attr_count(b);
      if (b == a) {
        MatrixXd diag = cand.middleCols(o, k);
        symmetrize(diag);
        cand.middleCols(o, k) = prox_block(diag, t, lambda_);
      } else {
        cand.middleCols(ob, kb) = prox_block(cand.middleCols(ob, kb), t, lambda_);
      }
    }

    double logdet_schur = 0.0;
    auto sigma_new = finish_cov_update(w, cand, o, k, &logdet_schur);
    if (sigma_new) {
      const MatrixXd diff = cand - row_old;
      const double trace_new = trace_ + 2.0 * s_row.cwiseProduct(diff).sum() -
                               s_row.middleCols(o, k).cwiseProduct(diff.middleCols(o, k)).sum();
      const double logdet_new = logdet_ + logdet_sigma_aa + logdet_schur;
      const double penalty_new = penalty_ + penalty_row_delta(cand, a);
      const double objective_new = trace_new - logdet_new + penalty_new;
      // Quadratic model of the smooth part at the current iterate, in the
      // full-matrix inner product (off-diagonal blocks of the row count twice).
      // The increments are formed directly rather than by differencing the
      // running totals, and the slack is scaled to their rounding error, so the
      // test stays meaningful when the step is tiny.
      const double d_trace = 2.0 * s_row.cwiseProduct(diff).sum() -
                             s_row.middleCols(o, k).cwiseProduct(diff.middleCols(o, k)).sum();
      const double d_logdet = logdet_sigma_aa + logdet_schur;
      const double smooth_change = d_trace - d_logdet;
      const double linear = -(2.0 * descent.cwiseProduct(diff).sum() -
                              descent.middleCols(o, k).cwiseProduct(diff.middleCols(o, k)).sum());
      const double sq = 2.0 * diff.squaredNorm() - diff.middleCols(o, k).squaredNorm();
      const double noise = 64.0 * std::numeric_limits<double>::epsilon() *
                           (std::abs(d_trace) + std::abs(logdet_sigma_aa) + std::abs(logdet_schur) +
                            std::abs(linear) + sq / (2.0 * t));
      // For convex f, <grad f(new) - grad f(old), diff> <= ||diff||^2/(2t) also
      // implies the quadratic bound. It involves no cancellation between large
      // terms, so it stays reliable near the optimum, where the log-determinant
      // increments are dominated by the rounding of Sigma relative to Omega.
      const MatrixXd dsig = sigma_.middleRows(o, k) - sigma_new->middleRows(o, k);
      const double curvature = 2.0 * dsig.cwiseProduct(diff).sum() -
                               dsig.middleCols(o, k).cwiseProduct(diff.middleCols(o, k)).sum();
      const double margin = linear + sq / (2.0 * t) - smooth_change;
      const bool majorized = margin > noise || curvature <= sq / (2.0 * t);
      if (std::isfinite(objective_new) && objective_new <= objective_ + kDescentSlack && majorized) {
        omega_.middleRows(o, k) = cand;
        omega_.middleCols(o, k) = cand.transpose();
        sigma_ = std::move(*sigma_new);
        trace_ = trace_new;
        logdet_ = logdet_new;
        penalty_ = penalty_new;
        objective_ = objective_new;
        out.objective = objective_;
        return out;
      }
    }
    step_[a] = 0.5 * t;
    ++out.halvings;
    if (step_[a] < min_step_)
      throw NumericalError("step size for node " + std::to_string(a) + " fell below " +
                           std::to_string(min_step_) +
                           "; S or lambda is numerically pathological");
  }
}

DualPoint make_dual_feasible(const Eigen::Ref<const MatrixXd>& sigma_hat,
                             const Eigen::Ref<const MatrixXd>& omega_hat, const BlockSymMatrix& s,
                             double lambda) {
  DualPoint out;
  auto try_point = [&](MatrixXd candidate) {
    clip_to_dual_ball(candidate, s, lambda);
    const Eigen::LLT<MatrixXd> llt(candidate);
    if (llt.info() != Eigen::Success) return false;
    out.logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
    if (!std::isfinite(out.logdet)) return false;
    out.sigma = std::move(candidate);
    out.available = true;
    return true;
  };
  if (try_point(sigma_hat)) return out;

  const auto d = omega_hat.rows();
  double delta = 1e-10;
  for (int i = 0; i < 50; ++i, delta *= 2.0) {
    const Eigen::LLT<MatrixXd> llt(omega_hat + delta * MatrixXd::Identity(d, d));
    if (llt.info() != Eigen::Success) continue;
    if (try_point(llt.solve(MatrixXd::Identity(d, d)))) {
      out.fallback_used = true;
      out.delta = delta;
      return out;
    }
  }
  out.fallback_used = true;
  return out;
}

void refine_dual(DualPoint& dual, const BlockSymMatrix& s, double lambda, int steps) {
  if (!dual.available || steps <= 0) return;
  const auto d = dual.sigma.rows();
  const MatrixXd eye = MatrixXd::Identity(d, d);
  Eigen::LLT<MatrixXd> llt(dual.sigma);
  MatrixXd grad = llt.solve(eye);
  double eta = 1.0;
  for (int step = 0; step < steps; ++step) {
    bool improved = false;
    for (int tries = 0; tries < 30 && !improved; ++tries, eta *= 0.5) {
      MatrixXd candidate = dual.sigma + eta * grad;
      clip_to_dual_ball(candidate, s, lambda);
      llt.compute(candidate);
      if (llt.info() != Eigen::Success) continue;
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      if (!(logdet > dual.logdet)) continue;
      dual.sigma = std::move(candidate);
      dual.logdet = logdet;
      grad = llt.solve(eye);
      improved = true;
    }
    if (!improved) return;
    eta *= 4.0;  // undo the last halving and try a larger step next time
  }
}

double duality_gap(const BlockSymMatrix& omega, const BlockSymMatrix& sigma_feasible,
                   const BlockSymMatrix& s, double lambda) {
  const auto& layout = s.layout();
  for (int a = 0; a < layout.node_count(); ++a)
    for (int b = a; b < layout.node_count(); ++b)
      if ((s.block_view(a, b) - sigma_feasible.block_view(a, b)).norm() > lambda * (1.0 + 1e-9))
        throw InputError("covariance is not dual feasible at block (" + std::to_string(a) + "," +
                         std::to_string(b) + ")");
  const double primal = objective(s, omega, lambda);
  const double dual =
      layout.total_dim() + logdet_or_throw(sigma_feasible.dense(), "dual covariance");
  return std::abs(primal - dual);
}

double kkt_residual(const BlockSymMatrix& omega, const BlockSymMatrix& s, double lambda) {
  return kkt_residual(omega.dense(), inverse_or_throw(omega.dense(), "precision matrix"), s, lambda);
}

double kkt_residual(const Eigen::Ref<const MatrixXd>& omega, const Eigen::Ref<const MatrixXd>& sigma,
                    const BlockSymMatrix& s, double lambda) {
  const auto& layout = s.layout();
  double worst = 0.0;
  for (int a = 0; a < layout.node_count(); ++a) {
    for (int b = a; b < layout.node_count(); ++b) {
      const MatrixXd grad =
          s.block_view(a, b) -
          sigma.block(layout.offset(a), layout.offset(b), layout.attr_count(a), layout.attr_count(b));
      const auto w = omega.block(layout.offset(a), layout.offset(b), layout.attr_count(a),
                                 layout.attr_count(b));
      const double wn = w.norm();
      const double v = wn != 0.0 ? (grad + (lambda / wn) * w).norm()
                                 : std::max(0.0, grad.norm() - lambda);
      worst = std::max(worst, v);
    }
  }
  return worst;
}

SolverReport estimate(const BlockSymMatrix& s, const SolverConfig& cfg) {
  cfg.validate();
  BlockCoordinateDescent bcd(s, cfg);
  const int p = s.node_count();
  SolverReport rep;
  rep.objective_trace.push_back(bcd.current_objective());
  double prev_sweep_objective = bcd.current_objective();

  for (int sweep = 0; sweep < cfg.max_sweeps; ++sweep) {
    for (int a = 0; a < p; ++a) {
      const auto outcome = bcd.node_update(a);
      rep.step_halvings += outcome.halvings;
      ++rep.node_updates;
      rep.objective_trace.push_back(outcome.objective);
    }
    ++rep.sweeps;
    bcd.refresh();

    DualPoint dual = make_dual_feasible(bcd.sigma(), bcd.omega(), s, cfg.lambda);
    refine_dual(dual, s, cfg.lambda, cfg.dual_ascent_steps);
    const double obj = bcd.current_objective();
    if (dual.available) {
      const double gap = obj - (s.total_dim() + dual.logdet);
      rep.sweep_gaps.push_back(gap);
      rep.final_gap = gap;
      rep.gap_available = true;
      if (gap <= cfg.epsilon &&
          (cfg.kkt_tolerance <= 0.0 ||
           kkt_residual(bcd.omega(), bcd.sigma(), s, cfg.lambda) <= cfg.kkt_tolerance)) {
        rep.converged = true;
        break;
      }
    } else {
      rep.sweep_gaps.push_back(std::numeric_limits<double>::quiet_NaN());
      rep.final_gap = std::numeric_limits<double>::quiet_NaN();
      rep.gap_available = false;
      if (std::abs(prev_sweep_objective - obj) <= 1e-8 * std::max(1.0, std::abs(obj))) {
        rep.converged = true;
        break;
      }
    }
    prev_sweep_objective = obj;
  }

  rep.objective = bcd.current_objective();
  rep.omega_hat = BlockSymMatrix(s.layout(), bcd.omega());
  rep.sigma_hat = BlockSymMatrix(s.layout(), bcd.sigma());
  return rep;
}

}  // namespace magnet
