#pragma once

#include <filesystem>
#include <string>

#include "dgnn/graph.hpp"

namespace dgnn {

// Reads the TU Dortmund plain-text bundle <name>_A.txt /
// <name>_graph_indicator.txt / <name>_graph_labels.txt (and the optional
// <name>_node_labels.txt) from `root/name/` or directly from `root/`.
// Edges are deduplicated and symmetrized; graph labels are remapped to
// 0..m-1 preserving their sorted original order.
RawDataset parse_tu_dataset(const std::filesystem::path& root, const std::string& name);

// Directory the loader would read for (root, name); used for checksums.
std::filesystem::path tu_dataset_dir(const std::filesystem::path& root, const std::string& name);

bool tu_dataset_present(const std::filesystem::path& root, const std::string& name);

}  // namespace dgnn
