#include "magnet/model_select.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>

#include "magnet/error.hpp"
#include "magnet/parallel.hpp"
#include "magnet/rng.hpp"
#include "magnet/screening.hpp"

namespace magnet {

using Eigen::MatrixXd;

namespace {

double neg_loglik(const BlockSymMatrix& s, const MatrixXd& omega) {
  Eigen::LLT<MatrixXd> llt(omega);
  if (llt.info() != Eigen::Success) throw NumericalError("bic: precision is not positive definite");
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return (s.dense().cwiseProduct(omega)).sum() - logdet;
}

}  // namespace

RefitResult refit_mle(const BlockSymMatrix& s, const Graph& graph, double tol, int max_iterations) {
  const auto& layout = s.layout();
  const int p = layout.node_count();
  if (graph.node_count() != p) throw InputError("refit_mle: graph and layout differ in node count");
  RefitResult out;
  out.sigma = s.dense();
  for (int a = 0; a < p; ++a) {
    Eigen::LLT<MatrixXd> llt(s.block(a, a));
    if (llt.info() != Eigen::Success)
      throw NumericalError("refit_mle: diagonal block of node " + std::to_string(a) +
                           " is not positive definite");
  }
  std::vector<int> all(p);
  std::iota(all.begin(), all.end(), 0);
  const double scale = std::max(1.0, s.dense().cwiseAbs().maxCoeff());
  for (out.iterations = 1; out.iterations <= max_iterations; ++out.iterations) {
    double change = 0.0;
    for (int a = 0; a < p; ++a) {
      std::vector<int> rest;
      for (int c = 0; c < p; ++c)
        if (c != a) rest.push_back(c);
      const auto da = layout.dims_of(std::vector<int>{a});
      const auto dr = layout.dims_of(rest);
      const auto nb = graph.neighbors(a);
      MatrixXd col = MatrixXd::Zero(dr.size(), da.size());
      if (!nb.empty()) {
        const auto dn = layout.dims_of(nb);
        Eigen::LLT<MatrixXd> llt(out.sigma(dn, dn));
        if (llt.info() != Eigen::Success)
          throw NumericalError("refit_mle: restricted maximum likelihood estimate does not exist");
        const MatrixXd beta = llt.solve(s.dense()(dn, da));
        col = out.sigma(dr, dn) * beta;
      }
      change = std::max(change, (col - out.sigma(dr, da)).cwiseAbs().maxCoeff());
      out.sigma(dr, da) = col;
      out.sigma(da, dr) = col.transpose();
    }
    if (change <= tol * scale) {
      out.converged = true;
      break;
    }
  }
  Eigen::LLT<MatrixXd> llt(out.sigma);
  if (llt.info() != Eigen::Success)
    throw NumericalError("refit_mle: restricted maximum likelihood estimate does not exist");
  out.omega = llt.solve(MatrixXd::Identity(s.total_dim(), s.total_dim()));
  return out;
}

double bic(const BlockSymMatrix& s, const BlockSymMatrix& omega_hat, int n, BicForm form) {
  if (n < 2) throw InputError("bic: n must be >= 2");
  double fit = 0.0;
  if (form == BicForm::kRefit) {
    try {
      fit = neg_loglik(s, refit_mle(s, Graph::from_precision(omega_hat)).omega);
    } catch (const NumericalError&) {
      return std::numeric_limits<double>::infinity();
    }
  } else {
    fit = neg_loglik(s, omega_hat.dense());
  }

  const auto& layout = s.layout();
  double complexity = 0.0;
  for (int a = 0; a < layout.node_count(); ++a)
    for (int b = a + 1; b < layout.node_count(); ++b)
      if (omega_hat.block_norm(a, b) != 0.0)
        complexity += layout.attr_count(a) * layout.attr_count(b) * std::log(double(n));
  return (form == BicForm::kLiteral ? fit : n * fit) + complexity;
}

std::vector<double> lambda_grid(const BlockSymMatrix& s, int count, std::string* warning) {
  if (count < 2) throw InputError("lambda_grid: count must be >= 2");
  const double top = max_offdiag_block_norm(s);
  if (top == 0.0) {
    double diag = 0.0;
    for (int a = 0; a < s.node_count(); ++a) diag = std::max(diag, s.block_norm(a, a));
    if (warning)
      *warning = "covariance is already block diagonal; using a single-point lambda grid";
    return {diag / 100.0};
  }
  std::vector<double> grid(count);
  const double log_top = std::log(top);
  const double span = std::log(100.0);
  for (int i = 0; i < count; ++i) grid[i] = std::exp(log_top - span * i / (count - 1));
  grid.front() = top;
  grid.back() = top / 100.0;
  return grid;
}

PathResult fit_path(const CovEstimate& s, const std::vector<double>& grid, const SolverConfig& cfg,
                    const PathOptions& options) {
  if (grid.empty()) throw InputError("fit_path: empty grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] < grid[i - 1])) throw InputError("fit_path: grid must be strictly decreasing");

  PathResult out;
  out.lambdas = grid;
  SolverConfig run = cfg;
  for (double lambda : grid) {
    run.lambda = lambda;
    SolverReport rep =
        options.screened ? estimate_screened(s.s, run) : estimate(s.s, run);
    if (options.warm_start) {
      run.initial_omega = rep.omega_hat.dense();
      run.initial_sigma = rep.sigma_hat.dense();
    }
    out.bic.push_back(bic(s.s, rep, s.n, options.bic_form));
    out.edge_counts.push_back(Graph::from_precision(rep.omega_hat).edge_count());
    out.reports.push_back(std::move(rep));
  }
  for (std::size_t i = 1; i < out.bic.size(); ++i)
    if (out.bic[i] < out.bic[out.best_index]) out.best_index = static_cast<int>(i);
  return out;
}

double select_lambda_bic(const CovEstimate& s, int grid_size, const SolverConfig& cfg,
                         BicForm form) {
  const auto grid = lambda_grid(s.s, grid_size);
  if (grid.size() == 1) return grid.front();
  PathOptions opts;
  opts.bic_form = form;
  const PathResult path = fit_path(s, grid, cfg, opts);
  return path.lambdas[path.best_index];
}

StabilityResult stability_select(const Dataset& d, double lambda, const StabilityConfig& cfg) {
  d.validate();
  const int n = d.sample_count();
  const int m = static_cast<int>(std::floor(cfg.fraction * n));
  if (!(cfg.fraction > 0.0 && cfg.fraction <= 1.0))
    throw InputError("stability_select: fraction must lie in (0, 1]");
  if (m < 2) throw InputError("stability_select: subsample size floor(fraction * n) must be >= 2");
  if (cfg.reps < 1) throw InputError("stability_select: reps must be >= 1");
  if (cfg.threshold < 1 || cfg.threshold > cfg.reps)
    throw InputError("stability_select: threshold must lie in [1, reps]");

  SolverConfig solver = cfg.solver;
  solver.lambda = lambda;
  solver.validate();
  const int p = d.layout.node_count();

  std::vector<std::optional<Graph>> graphs(cfg.reps);
  parallel_for(cfg.reps, cfg.jobs, [&](int r) {
    std::vector<int> rows(n);
    std::iota(rows.begin(), rows.end(), 0);
    Rng rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(r));
    rng.shuffle(rows);
    rows.resize(m);
    std::sort(rows.begin(), rows.end());
    const Dataset sub = d.select_rows(rows);
    try {
      const CovEstimate s = sub.fully_observed() ? sample_covariance(sub, cfg.center)
                                                 : masked_covariance(sub);
      graphs[r] = Graph::from_precision(estimate_screened(s, solver).omega_hat);
    } catch (const NumericalError&) {
      graphs[r].reset();
    } catch (const InputError&) {
      // A subsample can lose every co-observation of a masked column pair.
      graphs[r].reset();
    }
  });

  StabilityResult out;
  out.edge_counts = Eigen::MatrixXi::Zero(p, p);
  out.lambda = lambda;
  out.reps = cfg.reps;
  out.subsample_fraction = cfg.fraction;
  out.threshold = cfg.threshold;
  for (const auto& g : graphs) {
    if (!g) {
      ++out.failed;
      continue;
    }
    for (const auto& [a, b] : g->edges()) {
      ++out.edge_counts(a, b);
      ++out.edge_counts(b, a);
    }
  }
  if (out.failed * 10 > cfg.reps)
    throw NumericalError("stability_select: " + std::to_string(out.failed) + " of " +
                         std::to_string(cfg.reps) + " replicates failed (more than 10%)");
  out.stable_edges = Graph(p);
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      if (out.edge_counts(a, b) >= cfg.threshold) out.stable_edges.add_edge(a, b);
  return out;
}

}  // namespace magnet
