#pragma once

#include <vector>

#include "magnet/layout.hpp"
#include "magnet/solver.hpp"

namespace magnet {

/// Connected components of the graph with edges {(a,b) : ||S_ab||_F > lambda}.
/// Components are ordered by their smallest member; members ascend.
struct ComponentPartition {
  std::vector<std::vector<int>> components;
  double lambda = 0.0;

  /// component_of()[a] is the index of the component holding node a.
  std::vector<int> component_of() const;
  int size() const { return static_cast<int>(components.size()); }
};

ComponentPartition screen(const BlockSymMatrix& s, double lambda);

/// True when every component of `fine` lies inside one component of `coarse`.
bool refines(const ComponentPartition& fine, const ComponentPartition& coarse);

/// Solves each component of screen(s, cfg.lambda) separately and reassembles a
/// block-diagonal solution. Component reports are merged as follows:
/// objective and gap are sums (both are separable across components), sweeps
/// is the maximum, halvings and node updates are totals, and the objective
/// trace follows the running total as components are solved in order.
///
/// `jobs` > 1 solves components concurrently; results are identical.
SolverReport estimate_screened(const BlockSymMatrix& s, const SolverConfig& cfg, int jobs = 1,
                               ComponentPartition* partition = nullptr);

inline SolverReport estimate_screened(const CovEstimate& s, const SolverConfig& cfg,
                                      int jobs = 1, ComponentPartition* partition = nullptr) {
  return estimate_screened(s.s, cfg, jobs, partition);
}

}  // namespace magnet
