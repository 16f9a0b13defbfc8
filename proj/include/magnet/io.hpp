#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "magnet/graph.hpp"
#include "magnet/layout.hpp"

namespace magnet::io {

/// Comma-separated numbers, one row per line. A first line containing a
/// non-numeric field is treated as a header and returned in `header`.
/// Empty fields and "NA"/"nan" parse as NaN. Throws InputError on ragged
/// rows or unparsable fields.
Eigen::MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* header = nullptr);

/// Full round-trip precision (17 significant digits).
void write_matrix_csv(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& m,
                      const std::vector<std::string>& header = {});

/// {"attr_counts": [k_1, ..., k_p]}
AttributeLayout read_layout_json(const std::string& path);
void write_layout_json(const std::string& path, const AttributeLayout& layout);

/// node_a,node_b,frobenius_norm with node_a < node_b, sorted.
void write_edges_csv(const std::string& path, const BlockSymMatrix& omega);
void write_edges_csv(const std::string& path, const Graph& graph);
/// Reads the first two columns of an edges file (header optional).
Graph read_edges_csv(const std::string& path, int node_count);

void write_text(const std::string& path, const std::string& text);

}  // namespace magnet::io
