#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>

#include "dgnn/errors.hpp"
#include "dgnn/graph.hpp"
#include "dgnn/tu_loader.hpp"
#include "support/testing.hpp"

using namespace dgnn;
namespace dt = dgnn::testing;

TEST_CASE("two-graph fixture parses to the expected dataset") {
  const auto root = dt::make_temp_dir("fixture");
  dt::write_two_graph_fixture(root);
  RawDataset raw = parse_tu_dataset(root, "TINY");
  REQUIRE(raw.graphs.size() == 2);
  CHECK(raw.num_classes == 2);
  CHECK(raw.graphs[0].num_vertices == 2);
  CHECK(raw.graphs[0].neighbors[0] == std::vector<std::uint32_t>{1});
  CHECK(raw.graphs[0].neighbors[1] == std::vector<std::uint32_t>{0});
  CHECK(raw.graphs[1].num_vertices == 1);
  CHECK(raw.graphs[0].label == 0);
  CHECK(raw.graphs[1].label == 1);

  Dataset ds = build_features(raw, {FeatureScheme::Kind::ConstantScalar, std::nullopt});
  const DatasetSummary s = dataset_summary(ds);
  CHECK(s.num_graphs == 2);
  CHECK(s.num_classes == 2);
  CHECK(s.mean_vertices == doctest::Approx(1.5));
}

TEST_CASE("duplicate and reversed edges collapse to one undirected edge") {
  const auto root = dt::make_temp_dir("dedup");
  const auto dir = root / "D";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "D_A.txt") << "1, 2\n1, 2\n2, 1\n";
  std::ofstream(dir / "D_graph_indicator.txt") << "1\n1\n";
  std::ofstream(dir / "D_graph_labels.txt") << "1\n";
  RawDataset raw = parse_tu_dataset(root, "D");
  REQUIRE(raw.graphs.size() == 1);
  CHECK(raw.graphs[0].neighbors[0] == std::vector<std::uint32_t>{1});
  CHECK(raw.graphs[0].neighbors[1] == std::vector<std::uint32_t>{0});
  CHECK(raw.num_classes == 1);
}

TEST_CASE("missing files raise IngestError") {
  const auto root = dt::make_temp_dir("missing");
  CHECK_THROWS_AS(parse_tu_dataset(root, "NOPE"), IngestError);
}

TEST_CASE("edge referencing an unknown vertex raises FormatError") {
  const auto root = dt::make_temp_dir("badedge");
  const auto dir = root / "B";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "B_A.txt") << "1, 7\n";
  std::ofstream(dir / "B_graph_indicator.txt") << "1\n1\n";
  std::ofstream(dir / "B_graph_labels.txt") << "1\n";
  CHECK_THROWS_AS(parse_tu_dataset(root, "B"), FormatError);
}

TEST_CASE("edge across two graphs raises FormatError") {
  const auto root = dt::make_temp_dir("crossedge");
  const auto dir = root / "X";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "X_A.txt") << "1, 2\n2, 3\n";
  std::ofstream(dir / "X_graph_indicator.txt") << "1\n1\n2\n";
  std::ofstream(dir / "X_graph_labels.txt") << "1\n2\n";
  CHECK_THROWS_AS(parse_tu_dataset(root, "X"), FormatError);
}

TEST_CASE("labels {-1,1} remap to {0,1} by sorted value") {
  const auto root = dt::make_temp_dir("labels");
  const auto dir = root / "L";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "L_A.txt") << "";
  std::ofstream(dir / "L_graph_indicator.txt") << "1\n2\n3\n";
  std::ofstream(dir / "L_graph_labels.txt") << "1\n-1\n1\n";
  RawDataset raw = parse_tu_dataset(root, "L");
  CHECK(raw.graphs[0].label == 1);
  CHECK(raw.graphs[1].label == 0);
  CHECK(raw.graphs[2].label == 1);
  CHECK(raw.num_classes == 2);
}

TEST_CASE("degree one-hot features") {
  RawDataset raw;
  raw.name = "T";
  raw.num_classes = 2;
  RawGraph g;
  g.num_vertices = 4;
  // star: vertex 0 has degree 3, leaves have degree 1
  g.neighbors = {{1, 2, 3}, {0}, {0}, {0}};
  g.label = 0;
  raw.graphs.push_back(g);
  RawGraph isolated;
  isolated.num_vertices = 1;
  isolated.neighbors = {{}};
  isolated.label = 1;
  raw.graphs.push_back(isolated);

  SUBCASE("row is one-hot at the degree") {
    Dataset ds = build_features(raw, {FeatureScheme::Kind::DegreeOneHot, 10});
    CHECK(ds.feature_dim == 4);  // min(observed max 3, cap 10) + 1
    CHECK(ds.graphs[0].features.at(0, 3) == 1.0);
    CHECK(ds.graphs[0].features.at(1, 1) == 1.0);
    CHECK(ds.graphs[1].features.at(0, 0) == 1.0);  // isolated vertex -> index 0
    for (const Graph& gr : ds.graphs) {
      for (std::uint32_t v = 0; v < gr.num_vertices; ++v) {
        double sum = 0.0;
        for (std::size_t c = 0; c < ds.feature_dim; ++c) sum += gr.features.at(v, c);
        CHECK(sum == 1.0);
      }
    }
  }
  SUBCASE("degrees above the cap clamp into the cap bucket") {
    Dataset ds = build_features(raw, {FeatureScheme::Kind::DegreeOneHot, 2});
    CHECK(ds.feature_dim == 3);
    CHECK(ds.graphs[0].features.at(0, 2) == 1.0);
  }
  SUBCASE("constant scalar features are a column of ones") {
    Dataset ds = build_features(raw, {FeatureScheme::Kind::ConstantScalar, std::nullopt});
    CHECK(ds.feature_dim == 1);
    for (std::uint32_t v = 0; v < 4; ++v) CHECK(ds.graphs[0].features.at(v, 0) == 1.0);
  }
  SUBCASE("node-label scheme without node labels is a config error") {
    CHECK_THROWS_AS(build_features(raw, {FeatureScheme::Kind::NodeLabelsOneHot, std::nullopt}),
                    ConfigError);
  }
}

TEST_CASE("node-label one-hot uses sorted distinct values") {
  RawDataset raw;
  raw.name = "N";
  raw.num_classes = 2;
  raw.has_node_labels = true;
  RawGraph g;
  g.num_vertices = 3;
  g.neighbors = {{1}, {0, 2}, {1}};
  g.node_labels = {7, -2, 7};
  g.label = 0;
  raw.graphs.push_back(g);
  Dataset ds = build_features(raw, {FeatureScheme::Kind::NodeLabelsOneHot, std::nullopt});
  CHECK(ds.feature_dim == 2);
  CHECK(ds.graphs[0].features.at(0, 1) == 1.0);  // 7 -> index 1
  CHECK(ds.graphs[0].features.at(1, 0) == 1.0);  // -2 -> index 0
}

TEST_CASE("parsed synthetic dataset: adjacency is symmetric, parse is deterministic") {
  const auto root = dt::make_temp_dir("synth");
  dt::SyntheticSpec spec;
  spec.num_graphs = 24;
  dt::write_synthetic_tu(root, spec);
  RawDataset a = parse_tu_dataset(root, spec.name);
  RawDataset b = parse_tu_dataset(root, spec.name);
  REQUIRE(a.graphs.size() == 24);
  for (std::size_t g = 0; g < a.graphs.size(); ++g) {
    CHECK(a.graphs[g].neighbors == b.graphs[g].neighbors);
    CHECK(a.graphs[g].label == b.graphs[g].label);
    for (std::uint32_t v = 0; v < a.graphs[g].num_vertices; ++v) {
      for (std::uint32_t u : a.graphs[g].neighbors[v]) {
        const auto& back = a.graphs[g].neighbors[u];
        CHECK(std::find(back.begin(), back.end(), v) != back.end());
      }
    }
  }
}

TEST_CASE("dataset serialization round-trips exactly") {
  const auto root = dt::make_temp_dir("roundtrip");
  dt::SyntheticSpec spec;
  spec.num_graphs = 12;
  spec.with_node_labels = true;
  dt::write_synthetic_tu(root, spec);
  RawDataset raw = parse_tu_dataset(root, spec.name);
  Dataset ds = build_features(raw, FeatureScheme::auto_for(raw));
  const auto file = root / "ds.bin";
  save_dataset(ds, file);
  Dataset reloaded = load_dataset(file);
  CHECK(ds == reloaded);
}

TEST_CASE("auto feature scheme selection") {
  RawDataset with_labels;
  with_labels.name = "MUTAG";
  with_labels.has_node_labels = true;
  CHECK(FeatureScheme::auto_for(with_labels).kind == FeatureScheme::Kind::NodeLabelsOneHot);

  RawDataset reddit;
  reddit.name = "REDDIT-BINARY";
  CHECK(FeatureScheme::auto_for(reddit).kind == FeatureScheme::Kind::ConstantScalar);
  RawDataset rdt;
  rdt.name = "RDT-M5K";
  CHECK(FeatureScheme::auto_for(rdt).kind == FeatureScheme::Kind::ConstantScalar);

  RawDataset social;
  social.name = "IMDB-BINARY";
  CHECK(FeatureScheme::auto_for(social).kind == FeatureScheme::Kind::DegreeOneHot);
}

// Paper-reported dataset statistics; run only when real TU files are mounted.
TEST_CASE("real dataset summaries match the published table") {
  const auto root = dt::real_data_root();
  if (root.empty()) {
    MESSAGE("DGNN_DATA_ROOT not set; skipping real-dataset checks");
    return;
  }
  struct Expected {
    const char* name;
    std::size_t graphs;
    int classes;
    double mean_vertices;
  };
  const Expected table[] = {
      {"MUTAG", 188, 2, 17.9},
      {"IMDB-BINARY", 1000, 2, 19.8},
      {"PROTEINS", 1113, 2, 39.1},
      {"NCI1", 4110, 2, 29.8},
  };
  for (const Expected& e : table) {
    if (!tu_dataset_present(root, e.name)) {
      MESSAGE("dataset ", e.name, " not present; skipped");
      continue;
    }
    RawDataset raw = parse_tu_dataset(root, e.name);
    Dataset ds = build_features(raw, FeatureScheme::auto_for(raw));
    const DatasetSummary s = dataset_summary(ds);
    CHECK(s.num_graphs == e.graphs);
    CHECK(s.num_classes == e.classes);
    CHECK(std::round(s.mean_vertices * 10.0) / 10.0 == doctest::Approx(e.mean_vertices));
  }
}
