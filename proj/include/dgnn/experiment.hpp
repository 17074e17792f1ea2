#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dgnn/correction.hpp"
#include "dgnn/gin.hpp"
#include "dgnn/graph.hpp"
#include "dgnn/training.hpp"

namespace dgnn {

enum class Variant { Gin, DgnnConservative, DgnnAnchor, DgnnExact };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& text);

enum class NoiseScope { PerFold, Global };

struct ExperimentConfig {
  std::string dataset_name;
  Variant variant = Variant::Gin;
  double noise_rate = 0.2;
  int epochs = 20;
  int batch_size = 64;
  int iters_per_epoch = 0;  // 0 = one pass per epoch; see TrainOptions
  int k_folds = 10;
  std::vector<std::uint64_t> seeds = {1};
  GinConfig gin;
  double learning_rate = 0.01;
  NoiseScope noise_scope = NoiseScope::PerFold;
  double blend_lambda = 0.0;
  // Anchor override: dataset indices, one graph per class, ordered by class.
  std::optional<std::vector<std::size_t>> anchor_indices;
  int jobs = 1;

  void validate() const;
  TrainOptions train_options() const {
    return {epochs, batch_size, learning_rate, iters_per_epoch};
  }
};

struct FoldSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

struct KfoldResult {
  std::vector<FoldSplit> folds;
  bool stratified = true;  // false = some class had fewer members than k
};

// Stratified k-fold split: indices are grouped by class, shuffled with the
// seed, and dealt round-robin with a pointer that continues across classes,
// so fold sizes differ by at most one overall and per class.
KfoldResult kfold_split(const std::vector<int>& labels, int k, std::uint64_t seed);

struct EstimatorDiagnostics {
  SquareMatrix correction;
  SquareMatrix inverse;
  double condition_number = 0.0;
  double average_diagonal = 0.0;
  double l1_distance_to_noise = 0.0;
};

struct FoldRecord {
  int fold = 0;
  std::uint64_t seed = 0;
  std::vector<double> train_accuracy_per_epoch;
  std::vector<double> loss_per_step;
  double test_accuracy = 0.0;
  std::optional<EstimatorDiagnostics> estimator;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
  std::vector<int> noisy_labels;               // aligned with train_indices
  std::vector<std::size_t> corrupted_indices;  // dataset indices whose label flipped
  std::string error;                           // empty when the fold succeeded

  bool ok() const { return error.empty(); }
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<FoldRecord> records;  // ordered by (seed position, fold)
  // Aggregates over successful records; mean is the arithmetic mean and std
  // the population standard deviation of the per-(fold,seed) finals.
  double mean_test_accuracy = 0.0;
  double std_test_accuracy = 0.0;
  std::size_t ok_count = 0;
  bool partial = false;
};

// The full protocol: per seed, split into k folds; per fold, corrupt the
// training labels, train the variant, evaluate on the fold's clean test
// portion. Fold failures (e.g. SingularMatrixError from a collapsed
// estimator) are recorded per fold, not raised. Tasks run on up to
// config.jobs workers; results are deterministic regardless of jobs.
ExperimentResult run_experiment(const Dataset& dataset, const ExperimentConfig& config);

void write_results_json(const ExperimentResult& result, const std::filesystem::path& path);
void write_results_csv(const ExperimentResult& result, const std::filesystem::path& path);
void write_summary_markdown(const ExperimentResult& result, const std::filesystem::path& path);

}  // namespace dgnn
