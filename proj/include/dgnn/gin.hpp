#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "dgnn/graph.hpp"
#include "dgnn/tape.hpp"

namespace dgnn {

// Message-passing classifier configuration. epochs/batch size live with the
// training options; this is the architecture only.
struct GinConfig {
  int num_layers = 5;      // message-passing hops K
  int num_mlp_layers = 2;  // depth of each COMBINE MLP
  int hidden_dim = 64;
  bool epsilon_learnable = false;  // fixed eps = 0 otherwise
  // Per-graph channel normalization after each MLP linear map. Off by
  // default; stabilizes training at the fixed 20-epoch budget the way the
  // reference implementation's batch norm does, while keeping graphs
  // independent within a batch.
  bool graph_norm = false;

  enum class Readout { SumLastLayer, SumConcatAllLayers };
  Readout readout = Readout::SumConcatAllLayers;

  void validate() const;
};

// All trainable weights. Hidden MLP weights and biases are drawn uniformly
// from +-1/sqrt(fan_in); the classifier starts at zero so an untrained model
// predicts the uniform distribution.
struct ModelParams {
  struct MlpLayer {
    Tensor weight;  // [in x out]
    Tensor bias;    // [1 x out]
    // graph_norm only: affine parameters and (non-trainable) running
    // statistics used at evaluation time.
    Tensor gamma;         // [1 x out]
    Tensor beta;          // [1 x out]
    Tensor running_mean;  // [1 x out]
    Tensor running_var;   // [1 x out]
  };
  struct GinLayer {
    std::vector<MlpLayer> mlp;
    Tensor epsilon;  // [1 x 1]
  };

  GinConfig config;
  std::size_t feature_dim = 0;
  int num_classes = 0;
  std::vector<GinLayer> layers;
  Tensor classifier_weight;  // [readout_dim x num_classes]
  Tensor classifier_bias;    // [1 x num_classes]

  static ModelParams init(const GinConfig& config, std::size_t feature_dim, int num_classes,
                          std::uint64_t seed);

  std::size_t readout_dim() const;
  std::vector<Tensor*> parameters();
  void reset_grads();
  bool all_finite() const;

  friend bool operator==(const ModelParams& a, const ModelParams& b);
};

// Parameter leaves bound once per tape and shared by every graph forward on
// that tape.
struct BoundParams {
  struct BoundMlpLayer {
    Var weight, bias;
    bool normed = false;
    Var gamma, beta;
  };
  struct BoundGinLayer {
    std::vector<BoundMlpLayer> mlp;
    Var epsilon;
  };
  std::vector<BoundGinLayer> layers;
  Var classifier_weight, classifier_bias;
};

BoundParams bind_params(Tape& tape, ModelParams& params);

// AGGREGATE: row v of the result is the sum of h over the neighbors of v.
Var aggregate(Tape& tape, const Graph& graph, Var h_prev);

// COMBINE: MLP((1 + eps) * h + agg) with ReLU between MLP layers.
Var combine(Tape& tape, Var h_prev, Var agg, const BoundParams::BoundGinLayer& layer);

// READOUT over the per-layer vertex embeddings (inputs excluded).
Var readout(Tape& tape, const std::vector<Var>& layer_embeddings, GinConfig::Readout mode);

struct GraphForward {
  Var logits;  // [1 x m]
  Var probs;   // [1 x m], rows sum to 1
};

// A mini-batch as the disjoint union of its graphs: one stacked feature
// matrix, one adjacency, and the row range of every member graph. With
// normalization on, the batch statistics span all vertices of the union the
// way the reference implementation's batch norm does.
struct BatchGraph {
  Tensor features;  // [sum V x f]
  std::vector<std::vector<std::uint32_t>> neighbors;
  std::vector<std::pair<std::size_t, std::size_t>> row_ranges;
};

BatchGraph make_batch(const std::vector<const Graph*>& graphs);

// Forward over a whole batch. `training` selects batch statistics (and
// updates the running buffers) versus the stored running statistics.
std::vector<GraphForward> gin_forward_batch(Tape& tape, const BatchGraph& batch,
                                            const BoundParams& bound, ModelParams& params,
                                            bool training);

// Single-graph evaluation-mode forward.
GraphForward gin_forward(Tape& tape, const Graph& graph, const BoundParams& bound,
                         ModelParams& params);

// Convenience single-graph evaluation on a private tape.
std::vector<double> model_probs(ModelParams& params, const Graph& graph);
std::vector<double> model_logits(ModelParams& params, const Graph& graph);

// Argmax over logits; ties resolve to the lowest class index.
int predict(ModelParams& params, const Graph& graph);

// Versioned binary checkpoint; exact round-trip.
void save_checkpoint(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_checkpoint(const std::filesystem::path& path);

}  // namespace dgnn
