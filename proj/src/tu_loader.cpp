#include "dgnn/tu_loader.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "dgnn/errors.hpp"

namespace dgnn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

long parse_int(std::string_view token, const std::string& file, std::size_t line_no) {
  token = trim(token);
  long value = 0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw FormatError(file + ":" + std::to_string(line_no) + ": cannot parse integer from '" +
                      std::string(token) + "'");
  }
  return value;
}

// Non-empty trimmed lines of a required file.
std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw IngestError("missing dataset file " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(is, line)) {
    const std::string_view t = trim(line);
    if (!t.empty()) lines.emplace_back(t);
  }
  return lines;
}

}  // namespace

std::filesystem::path tu_dataset_dir(const std::filesystem::path& root, const std::string& name) {
  const std::filesystem::path nested = root / name;
  if (std::filesystem::exists(nested / (name + "_A.txt"))) return nested;
  return root;
}

bool tu_dataset_present(const std::filesystem::path& root, const std::string& name) {
  const std::filesystem::path dir = tu_dataset_dir(root, name);
  return std::filesystem::exists(dir / (name + "_A.txt")) &&
         std::filesystem::exists(dir / (name + "_graph_indicator.txt")) &&
         std::filesystem::exists(dir / (name + "_graph_labels.txt"));
}

RawDataset parse_tu_dataset(const std::filesystem::path& root, const std::string& name) {
  const std::filesystem::path dir = tu_dataset_dir(root, name);
  const std::string indicator_file = (dir / (name + "_graph_indicator.txt")).string();
  const std::string edges_file = (dir / (name + "_A.txt")).string();
  const std::string labels_file = (dir / (name + "_graph_labels.txt")).string();
  const std::filesystem::path node_labels_path = dir / (name + "_node_labels.txt");

  const std::vector<std::string> indicator_lines = read_lines(indicator_file);
  const std::vector<std::string> edge_lines = read_lines(edges_file);
  const std::vector<std::string> label_lines = read_lines(labels_file);

  // Vertex line i (1-based) belongs to graph indicator_lines[i-1]. Graph ids
  // are ordered by sorted distinct value; vertices keep file order within
  // their graph.
  std::vector<long> vertex_graph(indicator_lines.size());
  std::set<long> graph_ids;
  for (std::size_t i = 0; i < indicator_lines.size(); ++i) {
    vertex_graph[i] = parse_int(indicator_lines[i], indicator_file, i + 1);
    graph_ids.insert(vertex_graph[i]);
  }
  std::map<long, std::size_t> graph_index;
  for (long id : graph_ids) graph_index.emplace(id, graph_index.size());

  if (label_lines.size() != graph_index.size()) {
    throw FormatError(labels_file + ": " + std::to_string(label_lines.size()) +
                      " labels for " + std::to_string(graph_index.size()) + " graphs");
  }

  RawDataset raw;
  raw.name = name;
  raw.graphs.resize(graph_index.size());

  // Global 1-based vertex id -> (graph, local id).
  std::vector<std::size_t> local_id(vertex_graph.size());
  for (std::size_t i = 0; i < vertex_graph.size(); ++i) {
    RawGraph& g = raw.graphs[graph_index.at(vertex_graph[i])];
    local_id[i] = g.num_vertices++;
  }
  for (RawGraph& g : raw.graphs) g.neighbors.resize(g.num_vertices);

  std::vector<std::set<std::pair<std::uint32_t, std::uint32_t>>> edge_sets(raw.graphs.size());
  for (std::size_t i = 0; i < edge_lines.size(); ++i) {
    const std::string& line = edge_lines[i];
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw FormatError(edges_file + ":" + std::to_string(i + 1) + ": expected 'u, v'");
    }
    const long u = parse_int(std::string_view(line).substr(0, comma), edges_file, i + 1);
    const long v = parse_int(std::string_view(line).substr(comma + 1), edges_file, i + 1);
    if (u < 1 || v < 1 || u > static_cast<long>(vertex_graph.size()) ||
        v > static_cast<long>(vertex_graph.size())) {
      throw FormatError(edges_file + ":" + std::to_string(i + 1) + ": edge (" +
                        std::to_string(u) + "," + std::to_string(v) +
                        ") references an unknown vertex");
    }
    if (vertex_graph[u - 1] != vertex_graph[v - 1]) {
      throw FormatError(edges_file + ":" + std::to_string(i + 1) + ": edge (" +
                        std::to_string(u) + "," + std::to_string(v) +
                        ") assigns a vertex to two graphs");
    }
    const std::size_t gi = graph_index.at(vertex_graph[u - 1]);
    auto a = static_cast<std::uint32_t>(local_id[u - 1]);
    auto b = static_cast<std::uint32_t>(local_id[v - 1]);
    if (a > b) std::swap(a, b);
    edge_sets[gi].emplace(a, b);
  }
  for (std::size_t gi = 0; gi < raw.graphs.size(); ++gi) {
    RawGraph& g = raw.graphs[gi];
    for (const auto& [a, b] : edge_sets[gi]) {
      g.neighbors[a].push_back(b);
      if (a != b) g.neighbors[b].push_back(a);
    }
    for (auto& nb : g.neighbors) std::sort(nb.begin(), nb.end());
  }

  // Labels remap by sorted distinct source value ({-1,1} and {1..m} both occur).
  std::vector<long> labels(label_lines.size());
  std::set<long> distinct;
  for (std::size_t i = 0; i < label_lines.size(); ++i) {
    labels[i] = parse_int(label_lines[i], labels_file, i + 1);
    distinct.insert(labels[i]);
  }
  std::map<long, int> label_map;
  for (long v : distinct) label_map.emplace(v, static_cast<int>(label_map.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    raw.graphs[i].label = label_map.at(labels[i]);
  }
  raw.num_classes = static_cast<int>(label_map.size());

  if (std::filesystem::exists(node_labels_path)) {
    const std::string node_labels_file = node_labels_path.string();
    const std::vector<std::string> node_label_lines = read_lines(node_labels_file);
    if (node_label_lines.size() != vertex_graph.size()) {
      throw FormatError(node_labels_file + ": " + std::to_string(node_label_lines.size()) +
                        " node labels for " + std::to_string(vertex_graph.size()) + " vertices");
    }
    for (RawGraph& g : raw.graphs) g.node_labels.resize(g.num_vertices);
    for (std::size_t i = 0; i < node_label_lines.size(); ++i) {
      RawGraph& g = raw.graphs[graph_index.at(vertex_graph[i])];
      g.node_labels[local_id[i]] =
          static_cast<int>(parse_int(node_label_lines[i], node_labels_file, i + 1));
    }
    raw.has_node_labels = true;
  }
  return raw;
}

}  // namespace dgnn
