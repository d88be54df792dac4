#pragma once

#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <utility>

#include "sthgcn/data/csv_io.hpp"
#include "sthgcn/error.hpp"
#include "sthgcn/graph/adjacency.hpp"

// Edge-list files: a `# key=value,...` metadata line, an `i,j` header, then
// one undirected edge per line with 0-based station indices and i < j.

namespace sthgcn::graph {

struct EdgeListFile {
  AdjacencyMatrix adjacency;
  std::map<std::string, std::string> metadata;  // always holds "construction" and "nodes"
};

inline void write_edge_list(std::ostream& out, const AdjacencyMatrix& adj,
                            const std::string& construction,
                            const std::map<std::string, std::string>& params = {}) {
  out << "# construction=" << construction << ",nodes=" << adj.nodes();
  for (const auto& [k, v] : params) out << ',' << k << '=' << v;
  out << "\ni,j\n";
  for (const auto& [i, j] : adj.edges()) out << i << ',' << j << '\n';
}

inline void write_edge_list(const std::string& path, const AdjacencyMatrix& adj,
                            const std::string& construction,
                            const std::map<std::string, std::string>& params = {}) {
  auto out = data::csv::open_out(path);
  write_edge_list(out, adj, construction, params);
}

inline EdgeListFile read_edge_list(std::istream& in, const std::string& name = "edges") {
  std::string line;
  if (!std::getline(in, line) || line.rfind("# ", 0) != 0)
    throw InputError(name + ": missing '# construction=...' metadata line");
  EdgeListFile file;
  for (auto kv : data::csv::split(std::string_view(line).substr(2))) {
    const auto eq = kv.find('=');
    if (eq == std::string_view::npos) throw InputError(name + ": bad metadata entry '" + std::string(kv) + "'");
    file.metadata[std::string(kv.substr(0, eq))] = std::string(kv.substr(eq + 1));
  }
  if (!file.metadata.count("construction") || !file.metadata.count("nodes"))
    throw InputError(name + ": metadata must name construction and nodes");
  const auto n = static_cast<std::size_t>(
      data::csv::parse_double(file.metadata["nodes"], name + ": nodes"));
  file.adjacency = AdjacencyMatrix(n);
  if (!std::getline(in, line) || data::csv::trim(line) != "i,j")
    throw InputError(name + ": expected 'i,j' header");
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (data::csv::trim(line).empty()) continue;
    const auto cells = data::csv::split(line);
    const std::string where = name + ":" + std::to_string(line_no);
    if (cells.size() != 2) throw InputError(where + ": expected 'i,j'");
    const double i = data::csv::parse_double(cells[0], where);
    const double j = data::csv::parse_double(cells[1], where);
    if (i < 0 || j < 0 || i >= static_cast<double>(n) || j >= static_cast<double>(n) || i == j)
      throw InputError(where + ": invalid edge");
    file.adjacency.set_edge(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  }
  return file;
}

inline EdgeListFile read_edge_list(const std::string& path) {
  auto in = data::csv::open_in(path);
  return read_edge_list(in, path);
}

}  // namespace sthgcn::graph
