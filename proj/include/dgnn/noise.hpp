#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dgnn/linalg.hpp"

namespace dgnn {

// Row-stochastic symmetric corruption model: each label is kept with
// probability 1-rate and flips to each of the other m-1 classes with
// probability rate/(m-1).
struct NoiseMatrix {
  int num_classes = 0;
  double rate = 0.0;
  SquareMatrix entries;

  double at(int i, int j) const { return entries.at(i, j); }
};

NoiseMatrix build_noise_matrix(int num_classes, double rate);

struct NoiseInjection {
  std::vector<int> noisy_labels;
  std::vector<bool> flipped;

  std::size_t flip_count() const;
};

// Resamples each label independently from its row of N; deterministic per seed.
NoiseInjection inject_noise(const std::vector<int>& labels, const NoiseMatrix& noise,
                            std::uint64_t seed);

double entrywise_l1_distance(const SquareMatrix& estimate, const NoiseMatrix& noise);

// Audit CSV: graph_index, clean_label, noisy_label rows for the given indices.
void write_noise_audit_csv(const std::filesystem::path& path,
                           const std::vector<std::size_t>& graph_indices,
                           const std::vector<int>& clean_labels,
                           const std::vector<int>& noisy_labels);

}  // namespace dgnn
