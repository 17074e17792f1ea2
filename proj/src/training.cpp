#include "dgnn/training.hpp"

#include <cmath>

#include "dgnn/errors.hpp"
#include "dgnn/rng.hpp"

namespace dgnn {

namespace {

// Seed-stream tags; fold/variant layers add their own upstream.
constexpr std::uint64_t kInitTag = 0x696e6974;      // "init"
constexpr std::uint64_t kShuffleTag = 0x73687566;  // "shuf"

}  // namespace

TrainResult train_model(const std::vector<const Graph*>& graphs, const std::vector<int>& labels,
                        const GinConfig& gin, std::size_t feature_dim, int num_classes,
                        const TrainOptions& options, const CorrectionMatrix& correction,
                        std::uint64_t seed) {
  if (graphs.empty()) throw ConfigError("training set is empty");
  if (graphs.size() != labels.size()) {
    throw ConfigError("got " + std::to_string(labels.size()) + " labels for " +
                      std::to_string(graphs.size()) + " graphs");
  }
  if (correction.num_classes() != num_classes) {
    throw ShapeError("correction matrix is " + std::to_string(correction.num_classes()) +
                     "-class, dataset has " + std::to_string(num_classes));
  }
  if (options.epochs < 0 || options.batch_size < 1) {
    throw ConfigError("epochs must be >= 0 and batch_size >= 1");
  }

  TrainResult result;
  result.params = ModelParams::init(gin, feature_dim, num_classes,
                                    derive_seed(seed, {kInitTag}));
  Rng shuffle_rng(derive_seed(seed, {kShuffleTag}));
  AdamState adam(options.adam());

  std::vector<std::size_t> order(graphs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  auto train_step = [&](std::size_t begin, std::size_t end, int epoch) {
    Tape tape;
    BoundParams bound = bind_params(tape, result.params);
    std::vector<const Graph*> batch_graphs;
    batch_graphs.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) batch_graphs.push_back(graphs[order[i]]);
    const BatchGraph batch = make_batch(batch_graphs);
    const std::vector<GraphForward> fwds =
        gin_forward_batch(tape, batch, bound, result.params, /*training=*/true);
    std::vector<Var> losses;
    losses.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) {
      losses.push_back(
          backward_loss_node(tape, fwds[i - begin].probs, labels[order[i]], correction));
    }
    const Var batch_loss = tape.scale(tape.add_n(losses), 1.0 / static_cast<double>(end - begin));
    const double loss_value = tape.value(batch_loss)[0];
    if (!std::isfinite(loss_value)) {
      throw DivergenceError("non-finite training loss " + std::to_string(loss_value) +
                                " in epoch " + std::to_string(epoch),
                            epoch);
    }
    tape.backward(batch_loss);
    adam.step(result.params.parameters());
    result.params.reset_grads();
    result.loss_per_step.push_back(loss_value);
  };

  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    if (options.iters_per_epoch > 0) {
      const std::size_t batch =
          std::min(order.size(), static_cast<std::size_t>(options.batch_size));
      for (int it = 0; it < options.iters_per_epoch; ++it) {
        shuffle_rng.shuffle(order);
        train_step(0, batch, epoch);
      }
    } else {
      shuffle_rng.shuffle(order);
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(options.batch_size)) {
        train_step(start,
                   std::min(order.size(), start + static_cast<std::size_t>(options.batch_size)),
                   epoch);
      }
    }
    result.train_accuracy_per_epoch.push_back(evaluate(result.params, graphs, labels));
  }
  return result;
}

TrainResult train_gin(const std::vector<const Graph*>& graphs, const std::vector<int>& labels,
                      const GinConfig& gin, std::size_t feature_dim, int num_classes,
                      const TrainOptions& options, std::uint64_t seed) {
  return train_model(graphs, labels, gin, feature_dim, num_classes, options,
                     identity_correction(num_classes), seed);
}

DgnnTrainResult train_dgnn(const std::vector<const Graph*>& graphs,
                           const std::vector<int>& noisy_labels, const GinConfig& gin,
                           std::size_t feature_dim, int num_classes, const TrainOptions& options,
                           EstimatorKind source, const std::optional<NoiseMatrix>& noise,
                           const std::vector<const Graph*>& anchors, double blend_lambda,
                           std::uint64_t seed) {
  DgnnTrainResult result;

  SquareMatrix entries;
  switch (source) {
    case EstimatorKind::Exact: {
      if (!noise) throw ConfigError("exact estimator needs the true noise matrix");
      entries = noise->entries;
      break;
    }
    case EstimatorKind::Conservative:
    case EstimatorKind::Anchor: {
      result.phase1 = train_model(graphs, noisy_labels, gin, feature_dim, num_classes, options,
                                  identity_correction(num_classes), seed);
      ModelParams& phase1_params = result.phase1->params;
      const GraphProbsFn probs_fn = [&phase1_params](const Graph& g) {
        return model_probs(phase1_params, g);
      };
      entries = (source == EstimatorKind::Conservative)
                    ? conservative_entries(probs_fn, graphs, num_classes)
                    : anchor_entries(probs_fn, anchors);
      break;
    }
    case EstimatorKind::Identity:
      entries = SquareMatrix::identity(num_classes);
      break;
  }
  if (blend_lambda > 0.0) entries = blend_with_identity(std::move(entries), blend_lambda);
  result.correction = invert_correction(std::move(entries), source);

  result.trained = train_model(graphs, noisy_labels, gin, feature_dim, num_classes, options,
                               result.correction, seed);
  return result;
}

double evaluate(ModelParams& params, const std::vector<const Graph*>& graphs,
                const std::vector<int>& labels) {
  if (graphs.empty()) throw ConfigError("evaluate: empty graph set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < graphs.size(); ++i) {
    if (predict(params, *graphs[i]) == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(graphs.size());
}

}  // namespace dgnn
