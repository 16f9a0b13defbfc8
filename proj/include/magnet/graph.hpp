#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace magnet {

class BlockSymMatrix;

/// Undirected simple graph over nodes 0..p-1.
class Graph {
 public:
  using Edge = std::pair<int, int>;

  Graph() = default;
  explicit Graph(int nodes);

  /// Edge (a,b) iff ||m_ab||_F != 0, compared literally.
  static Graph from_precision(const BlockSymMatrix& m);
  static Graph from_edges(int nodes, const std::vector<Edge>& edges);

  int node_count() const { return p_; }
  bool has_edge(int a, int b) const;
  void add_edge(int a, int b);
  void remove_edge(int a, int b);
  int degree(int a) const;
  int max_degree() const;
  int edge_count() const;
  std::vector<int> neighbors(int a) const;
  /// Edges with a < b, sorted lexicographically.
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  void check(int a, int b) const;

  int p_ = 0;
  std::vector<std::uint8_t> adj_;
};

}  // namespace magnet
