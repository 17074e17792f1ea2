#include "dgnn/noise.hpp"

#include <fstream>

#include "dgnn/errors.hpp"
#include "dgnn/rng.hpp"

namespace dgnn {

NoiseMatrix build_noise_matrix(int num_classes, double rate) {
  if (num_classes < 2) {
    throw ConfigError("noise matrix needs at least 2 classes, got " +
                      std::to_string(num_classes));
  }
  if (!(rate >= 0.0 && rate <= 1.0)) {
    throw ConfigError("noise rate must lie in [0, 1], got " + std::to_string(rate));
  }
  NoiseMatrix noise{num_classes, rate, SquareMatrix(num_classes)};
  const double off = rate / static_cast<double>(num_classes - 1);
  for (int i = 0; i < num_classes; ++i) {
    for (int j = 0; j < num_classes; ++j) {
      noise.entries.at(i, j) = (i == j) ? 1.0 - rate : off;
    }
  }
  return noise;
}

std::size_t NoiseInjection::flip_count() const {
  std::size_t count = 0;
  for (bool f : flipped) count += f ? 1 : 0;
  return count;
}

NoiseInjection inject_noise(const std::vector<int>& labels, const NoiseMatrix& noise,
                            std::uint64_t seed) {
  Rng rng(seed);
  NoiseInjection result;
  result.noisy_labels.reserve(labels.size());
  result.flipped.reserve(labels.size());
  for (int label : labels) {
    if (label < 0 || label >= noise.num_classes) {
      throw ConfigError("label " + std::to_string(label) + " outside [0, " +
                        std::to_string(noise.num_classes) + ")");
    }
    const double u = rng.uniform();
    double cumulative = 0.0;
    int sampled = noise.num_classes - 1;
    for (int j = 0; j < noise.num_classes; ++j) {
      cumulative += noise.at(label, j);
      if (u < cumulative) {
        sampled = j;
        break;
      }
    }
    result.noisy_labels.push_back(sampled);
    result.flipped.push_back(sampled != label);
  }
  return result;
}

double entrywise_l1_distance(const SquareMatrix& estimate, const NoiseMatrix& noise) {
  return entrywise_l1(estimate, noise.entries);
}

void write_noise_audit_csv(const std::filesystem::path& path,
                           const std::vector<std::size_t>& graph_indices,
                           const std::vector<int>& clean_labels,
                           const std::vector<int>& noisy_labels) {
  std::ofstream os(path);
  if (!os) throw IngestError("cannot open " + path.string() + " for writing");
  os << "graph_index,clean_label,noisy_label\n";
  for (std::size_t i = 0; i < graph_indices.size(); ++i) {
    os << graph_indices[i] << "," << clean_labels[i] << "," << noisy_labels[i] << "\n";
  }
}

}  // namespace dgnn
