#include "magnet/screening.hpp"

#include <algorithm>
#include <numeric>

#include "magnet/parallel.hpp"

namespace magnet {

using Eigen::MatrixXd;

std::vector<int> ComponentPartition::component_of() const {
  int p = 0;
  for (const auto& c : components) p += static_cast<int>(c.size());
  std::vector<int> out(p, -1);
  for (int i = 0; i < size(); ++i)
    for (int a : components[i]) out.at(a) = i;
  return out;
}

ComponentPartition screen(const BlockSymMatrix& s, double lambda) {
  const int p = s.node_count();
  const BlockNormMatrix c = c_operator(s);

  // Union-find with the smaller index as root keeps labels canonical.
  std::vector<int> parent(p);
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (int a = 0; a < p; ++a)
    for (int b = a + 1; b < p; ++b)
      if (c(a, b) > lambda) {
        const int ra = find(a), rb = find(b);
        if (ra != rb) parent[std::max(ra, rb)] = std::min(ra, rb);
      }

  ComponentPartition out;
  out.lambda = lambda;
  std::vector<int> index(p, -1);
  for (int a = 0; a < p; ++a) {
    const int r = find(a);
    if (index[r] < 0) {
      index[r] = out.size();
      out.components.emplace_back();
    }
    out.components[index[r]].push_back(a);
  }
  return out;
}

bool refines(const ComponentPartition& fine, const ComponentPartition& coarse) {
  const auto owner = coarse.component_of();
  for (const auto& comp : fine.components)
    for (int a : comp)
      if (owner.at(a) != owner.at(comp.front())) return false;
  return true;
}

SolverReport estimate_screened(const BlockSymMatrix& s, const SolverConfig& cfg, int jobs,
                               ComponentPartition* partition_out) {
  cfg.validate();
  const ComponentPartition partition = screen(s, cfg.lambda);
  if (partition_out) *partition_out = partition;
  if (partition.size() == 1) return estimate(s, cfg);

  const int m = partition.size();
  std::vector<SolverReport> parts(m);
  std::vector<std::vector<int>> dims(m);
  for (int i = 0; i < m; ++i) dims[i] = s.layout().dims_of(partition.components[i]);

  parallel_for(m, jobs, [&](int i) {
    SolverConfig sub = cfg;
    sub.initial_omega.reset();
    sub.initial_sigma.reset();
    const auto& d = dims[i];
    if (cfg.initial_omega) sub.initial_omega = (*cfg.initial_omega)(d, d);
    parts[i] = estimate(s.restrict_to(partition.components[i]), sub);
  });

  const int n = s.total_dim();
  MatrixXd omega = MatrixXd::Zero(n, n);
  MatrixXd sigma = MatrixXd::Zero(n, n);
  SolverReport out;
  out.converged = true;
  out.gap_available = true;
  out.objective = 0.0;
  out.final_gap = 0.0;
  double running = 0.0;
  for (const auto& r : parts) running += r.objective_trace.front();
  out.objective_trace.push_back(running);
  std::size_t longest = 0;
  for (int i = 0; i < m; ++i) {
    const auto& r = parts[i];
    omega(dims[i], dims[i]) = r.omega_hat.dense();
    sigma(dims[i], dims[i]) = r.sigma_hat.dense();
    for (std::size_t j = 1; j < r.objective_trace.size(); ++j) {
      running += r.objective_trace[j] - r.objective_trace[j - 1];
      out.objective_trace.push_back(running);
    }
    out.objective += r.objective;
    out.final_gap += r.final_gap;
    out.gap_available = out.gap_available && r.gap_available;
    out.converged = out.converged && r.converged;
    out.sweeps = std::max(out.sweeps, r.sweeps);
    out.step_halvings += r.step_halvings;
    out.node_updates += r.node_updates;
    longest = std::max(longest, r.sweep_gaps.size());
  }
  // Per-sweep total gap, holding finished components at their final value.
  for (std::size_t j = 0; j < longest; ++j) {
    double g = 0.0;
    for (const auto& r : parts) g += r.sweep_gaps[std::min(j, r.sweep_gaps.size() - 1)];
    out.sweep_gaps.push_back(g);
  }
  out.omega_hat = BlockSymMatrix(s.layout(), std::move(omega));
  out.sigma_hat = BlockSymMatrix(s.layout(), std::move(sigma));
  return out;
}

}  // namespace magnet
