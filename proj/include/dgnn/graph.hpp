#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dgnn/tensor.hpp"

namespace dgnn {

// Undirected graph with built vertex features. Neighbor lists are sorted,
// duplicate-free and symmetric; immutable once the dataset is constructed.
struct Graph {
  std::uint32_t num_vertices = 0;
  std::vector<std::vector<std::uint32_t>> neighbors;
  Tensor features;  // [num_vertices x feature_dim]
  int label = -1;

  std::size_t degree(std::uint32_t v) const { return neighbors[v].size(); }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.num_vertices == b.num_vertices && a.neighbors == b.neighbors &&
           a.features == b.features && a.label == b.label;
  }
};

struct Dataset {
  std::string name;
  std::vector<Graph> graphs;
  int num_classes = 0;
  std::size_t feature_dim = 0;

  std::vector<int> labels() const;

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.name == b.name && a.num_classes == b.num_classes &&
           a.feature_dim == b.feature_dim && a.graphs == b.graphs;
  }
};

// Ingestion product before feature construction.
struct RawGraph {
  std::uint32_t num_vertices = 0;
  std::vector<std::vector<std::uint32_t>> neighbors;
  std::vector<int> node_labels;  // empty when the dataset has none
  int label = -1;
};

struct RawDataset {
  std::string name;
  std::vector<RawGraph> graphs;
  int num_classes = 0;
  bool has_node_labels = false;
};

struct FeatureScheme {
  enum class Kind { NodeLabelsOneHot, DegreeOneHot, ConstantScalar };

  Kind kind = Kind::DegreeOneHot;
  // DegreeOneHot only: degrees above the cap land in the cap bucket. Default
  // is the observed max degree of the dataset being featurized.
  std::optional<std::size_t> degree_cap;

  // Node labels when present, constant features for REDDIT-family names,
  // degree one-hot otherwise.
  static FeatureScheme auto_for(const RawDataset& raw);

  static FeatureScheme parse(const std::string& text);  // CLI flag values
  std::string describe() const;
};

Dataset build_features(const RawDataset& raw, const FeatureScheme& scheme);

struct DatasetSummary {
  std::size_t num_graphs = 0;
  int num_classes = 0;
  double mean_vertices = 0.0;  // callers format to one decimal
};

DatasetSummary dataset_summary(const Dataset& dataset);

// Internal binary dataset format; exact round-trip.
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_dataset(const std::filesystem::path& path);

}  // namespace dgnn
