#include "magnet/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "magnet/error.hpp"

namespace magnet::io {

using Eigen::MatrixXd;

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) {
    const auto b = field.find_first_not_of(" \t\r");
    const auto e = field.find_last_not_of(" \t\r");
    out.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& s, double& v) {
  if (s.empty() || s == "NA" || s == "nan" || s == "NaN") {
    v = std::numeric_limits<double>::quiet_NaN();
    return true;
  }
  const char* first = s.data();
  if (*first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot open '" + path + "' for writing");
  out.precision(17);
  return out;
}

}  // namespace

MatrixXd read_matrix_csv(const std::string& path, std::vector<std::string>* header) {
  auto in = open_in(path);
  if (header) header->clear();
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos || line[0] == '#') continue;
    const auto fields = split(line);
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t j = 0; j < fields.size() && numeric; ++j)
      numeric = parse_number(fields[j], row[j]);
    if (!numeric) {
      if (rows.empty() && (!header || header->empty())) {
        if (header) *header = fields;
        continue;
      }
      throw InputError(path + ":" + std::to_string(line_no) + ": non-numeric field");
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw InputError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(rows.front().size()) + " fields, found " +
                       std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw InputError(path + ": no data rows");
  MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows[i].size(); ++j) m(i, j) = rows[i][j];
  return m;
}

void write_matrix_csv(const std::string& path, const Eigen::Ref<const MatrixXd>& m,
                      const std::vector<std::string>& header) {
  auto out = open_out(path);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
  if (!header.empty()) out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << m(i, j);
    out << '\n';
  }
}

AttributeLayout read_layout_json(const std::string& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(path + ": invalid JSON: " + e.what());
  }
  if (!j.is_object() || !j.contains("attr_counts") || !j["attr_counts"].is_array())
    throw InputError(path + ": expected {\"attr_counts\": [...]}");
  std::vector<int> counts;
  for (const auto& v : j["attr_counts"]) {
    if (!v.is_number_integer()) throw InputError(path + ": attr_counts must be integers");
    counts.push_back(v.get<int>());
  }
  return AttributeLayout(std::move(counts));
}

void write_layout_json(const std::string& path, const AttributeLayout& layout) {
  auto out = open_out(path);
  out << nlohmann::json{{"attr_counts", layout.attr_counts()}}.dump() << '\n';
}

void write_edges_csv(const std::string& path, const BlockSymMatrix& omega) {
  auto out = open_out(path);
  out << "node_a,node_b,frobenius_norm\n";
  for (const auto& [a, b] : Graph::from_precision(omega).edges())
    out << a << ',' << b << ',' << omega.block_norm(a, b) << '\n';
}

void write_edges_csv(const std::string& path, const Graph& graph) {
  auto out = open_out(path);
  out << "node_a,node_b\n";
  for (const auto& [a, b] : graph.edges()) out << a << ',' << b << '\n';
}

Graph read_edges_csv(const std::string& path, int node_count) {
  std::vector<std::string> header;
  Graph g(node_count);
  MatrixXd m;
  try {
    m = read_matrix_csv(path, &header);
  } catch (const InputError& e) {
    // A header-only file is an empty edge list.
    if (std::string(e.what()).find("no data rows") != std::string::npos) return g;
    throw;
  }
  if (m.cols() < 2) throw InputError(path + ": edges need at least two columns");
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    const double a = m(i, 0), b = m(i, 1);
    if (a != std::floor(a) || b != std::floor(b) || a < 0 || b < 0 || a >= node_count ||
        b >= node_count || a == b)
      throw InputError(path + ": invalid edge on data row " + std::to_string(i + 1));
    if (!g.has_edge(int(a), int(b))) g.add_edge(int(a), int(b));
  }
  return g;
}

void write_text(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
}

}  // namespace magnet::io
