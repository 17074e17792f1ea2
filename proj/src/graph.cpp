#include "dgnn/graph.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "dgnn/errors.hpp"

namespace dgnn {

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(graphs.size());
  for (const Graph& g : graphs) out.push_back(g.label);
  return out;
}

FeatureScheme FeatureScheme::auto_for(const RawDataset& raw) {
  if (raw.has_node_labels) return {Kind::NodeLabelsOneHot, std::nullopt};
  const std::string& n = raw.name;
  if (n.rfind("REDDIT", 0) == 0 || n.rfind("RDT", 0) == 0) {
    return {Kind::ConstantScalar, std::nullopt};
  }
  return {Kind::DegreeOneHot, std::nullopt};
}

FeatureScheme FeatureScheme::parse(const std::string& text) {
  if (text == "node-labels") return {Kind::NodeLabelsOneHot, std::nullopt};
  if (text == "degree") return {Kind::DegreeOneHot, std::nullopt};
  if (text == "constant") return {Kind::ConstantScalar, std::nullopt};
  throw ConfigError("unknown feature scheme '" + text +
                    "' (expected auto, node-labels, degree or constant)");
}

std::string FeatureScheme::describe() const {
  switch (kind) {
    case Kind::NodeLabelsOneHot:
      return "node-labels";
    case Kind::DegreeOneHot:
      return degree_cap ? "degree(cap=" + std::to_string(*degree_cap) + ")" : "degree";
    case Kind::ConstantScalar:
      return "constant";
  }
  return "?";
}

namespace {

Tensor degree_one_hot(const RawGraph& g, std::size_t cap) {
  Tensor features(g.num_vertices, cap + 1);
  for (std::uint32_t v = 0; v < g.num_vertices; ++v) {
    const std::size_t bucket = std::min(g.neighbors[v].size(), cap);
    features.at(v, bucket) = 1.0;
  }
  return features;
}

}  // namespace

Dataset build_features(const RawDataset& raw, const FeatureScheme& scheme) {
  Dataset out;
  out.name = raw.name;
  out.num_classes = raw.num_classes;
  out.graphs.reserve(raw.graphs.size());

  std::size_t feature_dim = 0;
  std::map<int, std::size_t> label_index;

  switch (scheme.kind) {
    case FeatureScheme::Kind::NodeLabelsOneHot: {
      if (!raw.has_node_labels) {
        throw ConfigError("feature scheme node-labels requires a node label file");
      }
      std::set<int> values;
      for (const RawGraph& g : raw.graphs) values.insert(g.node_labels.begin(), g.node_labels.end());
      for (int v : values) label_index.emplace(v, label_index.size());
      feature_dim = label_index.size();
      break;
    }
    case FeatureScheme::Kind::DegreeOneHot: {
      std::size_t max_degree = 0;
      for (const RawGraph& g : raw.graphs) {
        for (const auto& nb : g.neighbors) max_degree = std::max(max_degree, nb.size());
      }
      const std::size_t cap = scheme.degree_cap ? std::min(*scheme.degree_cap, max_degree)
                                                : max_degree;
      feature_dim = cap + 1;
      for (const RawGraph& g : raw.graphs) {
        Graph built{g.num_vertices, g.neighbors, degree_one_hot(g, cap), g.label};
        out.graphs.push_back(std::move(built));
      }
      out.feature_dim = feature_dim;
      return out;
    }
    case FeatureScheme::Kind::ConstantScalar:
      feature_dim = 1;
      break;
  }

  for (const RawGraph& g : raw.graphs) {
    Tensor features(g.num_vertices, feature_dim);
    if (scheme.kind == FeatureScheme::Kind::ConstantScalar) {
      for (std::uint32_t v = 0; v < g.num_vertices; ++v) features.at(v, 0) = 1.0;
    } else {
      for (std::uint32_t v = 0; v < g.num_vertices; ++v) {
        features.at(v, label_index.at(g.node_labels[v])) = 1.0;
      }
    }
    out.graphs.push_back(Graph{g.num_vertices, g.neighbors, std::move(features), g.label});
  }
  out.feature_dim = feature_dim;
  return out;
}

DatasetSummary dataset_summary(const Dataset& dataset) {
  DatasetSummary s;
  s.num_graphs = dataset.graphs.size();
  s.num_classes = dataset.num_classes;
  double total = 0.0;
  for (const Graph& g : dataset.graphs) total += g.num_vertices;
  s.mean_vertices = dataset.graphs.empty() ? 0.0 : total / static_cast<double>(s.num_graphs);
  return s;
}

namespace {

constexpr char kDatasetMagic[] = "DGNN-DATASET-v1";

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw FormatError("dataset file truncated");
  return value;
}

}  // namespace

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestError("cannot open " + path.string() + " for writing");
  os.write(kDatasetMagic, sizeof(kDatasetMagic));
  write_pod(os, static_cast<std::uint64_t>(dataset.name.size()));
  os.write(dataset.name.data(), static_cast<std::streamsize>(dataset.name.size()));
  write_pod(os, static_cast<std::uint64_t>(dataset.graphs.size()));
  write_pod(os, static_cast<std::int32_t>(dataset.num_classes));
  write_pod(os, static_cast<std::uint64_t>(dataset.feature_dim));
  for (const Graph& g : dataset.graphs) {
    write_pod(os, g.num_vertices);
    write_pod(os, static_cast<std::int32_t>(g.label));
    for (const auto& nb : g.neighbors) {
      write_pod(os, static_cast<std::uint32_t>(nb.size()));
      os.write(reinterpret_cast<const char*>(nb.data()),
               static_cast<std::streamsize>(nb.size() * sizeof(std::uint32_t)));
    }
    os.write(reinterpret_cast<const char*>(g.features.data().data()),
             static_cast<std::streamsize>(g.features.size() * sizeof(double)));
  }
  if (!os) throw IngestError("failed writing " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestError("cannot open " + path.string());
  char magic[sizeof(kDatasetMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kDatasetMagic, sizeof(kDatasetMagic)) != 0) {
    throw FormatError(path.string() + " is not a dgnn dataset file");
  }
  Dataset dataset;
  const auto name_len = read_pod<std::uint64_t>(is);
  dataset.name.resize(name_len);
  is.read(dataset.name.data(), static_cast<std::streamsize>(name_len));
  const auto num_graphs = read_pod<std::uint64_t>(is);
  dataset.num_classes = read_pod<std::int32_t>(is);
  dataset.feature_dim = read_pod<std::uint64_t>(is);
  dataset.graphs.resize(num_graphs);
  for (Graph& g : dataset.graphs) {
    g.num_vertices = read_pod<std::uint32_t>(is);
    g.label = read_pod<std::int32_t>(is);
    g.neighbors.resize(g.num_vertices);
    for (auto& nb : g.neighbors) {
      const auto deg = read_pod<std::uint32_t>(is);
      nb.resize(deg);
      is.read(reinterpret_cast<char*>(nb.data()),
              static_cast<std::streamsize>(deg * sizeof(std::uint32_t)));
    }
    g.features = Tensor(g.num_vertices, dataset.feature_dim);
    is.read(reinterpret_cast<char*>(g.features.data().data()),
            static_cast<std::streamsize>(g.features.size() * sizeof(double)));
    if (!is) throw FormatError(path.string() + " truncated");
  }
  return dataset;
}

}  // namespace dgnn
