#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dgnn/adam.hpp"
#include "dgnn/correction.hpp"
#include "dgnn/gin.hpp"
#include "dgnn/graph.hpp"
#include "dgnn/noise.hpp"

namespace dgnn {

struct TrainOptions {
  int epochs = 20;
  int batch_size = 64;
  double learning_rate = 0.01;
  // 0: each epoch is one shuffled pass over the data, chunked into batches
  // with the last partial batch kept. k > 0: each epoch draws k mini-batches,
  // every batch an independently sampled subset of batch_size graphs, the way
  // the reference implementation counts epochs.
  int iters_per_epoch = 0;

  AdamConfig adam() const { return AdamConfig{learning_rate, 0.9, 0.999, 1e-8}; }
};

struct TrainResult {
  ModelParams params;
  // Accuracy against the labels trained on (the noisy ones), one per epoch.
  std::vector<double> train_accuracy_per_epoch;
  // Mini-batch loss in step order; the per-step trajectory.
  std::vector<double> loss_per_step;
};

// Core loop: mini-batch Adam on the backward-corrected loss. Plain GIN is
// this loop with the identity correction, which makes the corrected loss
// bitwise equal to cross-entropy. The seed controls both initialization and
// epoch shuffling. Throws DivergenceError when a batch loss turns non-finite.
TrainResult train_model(const std::vector<const Graph*>& graphs, const std::vector<int>& labels,
                        const GinConfig& gin, std::size_t feature_dim, int num_classes,
                        const TrainOptions& options, const CorrectionMatrix& correction,
                        std::uint64_t seed);

TrainResult train_gin(const std::vector<const Graph*>& graphs, const std::vector<int>& labels,
                      const GinConfig& gin, std::size_t feature_dim, int num_classes,
                      const TrainOptions& options, std::uint64_t seed);

struct DgnnTrainResult {
  TrainResult trained;                // phase-2 model (the D-GNN)
  std::optional<TrainResult> phase1;  // absent for the exact estimator
  CorrectionMatrix correction;
};

// Two-phase protocol: phase 1 fits plain GIN on the noisy labels to feed the
// estimator (skipped for Exact), phase 2 retrains from a fresh initialization
// with the corrected loss under identical hyperparameters and seed.
// `noise` feeds the Exact estimator and is required only for that source.
// `anchors` feed the Anchor estimator (one trusted graph per class).
DgnnTrainResult train_dgnn(const std::vector<const Graph*>& graphs,
                           const std::vector<int>& noisy_labels, const GinConfig& gin,
                           std::size_t feature_dim, int num_classes, const TrainOptions& options,
                           EstimatorKind source, const std::optional<NoiseMatrix>& noise,
                           const std::vector<const Graph*>& anchors, double blend_lambda,
                           std::uint64_t seed);

// Fraction of argmax-logit predictions equal to the given labels.
double evaluate(ModelParams& params, const std::vector<const Graph*>& graphs,
                const std::vector<int>& labels);

}  // namespace dgnn
