#include "magnet/graph.hpp"

#include <algorithm>
#include <string>

#include "magnet/error.hpp"
#include "magnet/layout.hpp"

namespace magnet {

Graph::Graph(int nodes) : p_(nodes), adj_(static_cast<std::size_t>(nodes) * nodes, 0) {
  if (nodes < 0) throw InputError("graph node count must be non-negative");
}

Graph Graph::from_precision(const BlockSymMatrix& m) {
  Graph g(m.node_count());
  for (int a = 0; a < g.p_; ++a)
    for (int b = a + 1; b < g.p_; ++b)
      if (m.block_norm(a, b) != 0.0) g.add_edge(a, b);
  return g;
}

Graph Graph::from_edges(int nodes, const std::vector<Edge>& edges) {
  Graph g(nodes);
  for (auto [a, b] : edges) g.add_edge(a, b);
  return g;
}

void Graph::check(int a, int b) const {
  if (a < 0 || b < 0 || a >= p_ || b >= p_)
    throw InputError("edge (" + std::to_string(a) + "," + std::to_string(b) +
                     ") out of range for graph with " + std::to_string(p_) + " nodes");
}

bool Graph::has_edge(int a, int b) const {
  check(a, b);
  return adj_[static_cast<std::size_t>(a) * p_ + b] != 0;
}

void Graph::add_edge(int a, int b) {
  check(a, b);
  if (a == b) throw InputError("self loops are not allowed");
  adj_[static_cast<std::size_t>(a) * p_ + b] = 1;
  adj_[static_cast<std::size_t>(b) * p_ + a] = 1;
}

void Graph::remove_edge(int a, int b) {
  check(a, b);
  adj_[static_cast<std::size_t>(a) * p_ + b] = 0;
  adj_[static_cast<std::size_t>(b) * p_ + a] = 0;
}

int Graph::degree(int a) const {
  check(a, a);
  const auto row = adj_.begin() + static_cast<std::ptrdiff_t>(a) * p_;
  return static_cast<int>(std::count(row, row + p_, std::uint8_t{1}));
}

int Graph::max_degree() const {
  int best = 0;
  for (int a = 0; a < p_; ++a) best = std::max(best, degree(a));
  return best;
}

int Graph::edge_count() const {
  return static_cast<int>(std::count(adj_.begin(), adj_.end(), std::uint8_t{1})) / 2;
}

std::vector<int> Graph::neighbors(int a) const {
  std::vector<int> out;
  for (int b = 0; b < p_; ++b)
    if (b != a && has_edge(a, b)) out.push_back(b);
  return out;
}

std::vector<Graph::Edge> Graph::edges() const {
  std::vector<Edge> out;
  for (int a = 0; a < p_; ++a)
    for (int b = a + 1; b < p_; ++b)
      if (adj_[static_cast<std::size_t>(a) * p_ + b]) out.emplace_back(a, b);
  return out;
}

}  // namespace magnet
