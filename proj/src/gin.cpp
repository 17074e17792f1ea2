#include "dgnn/gin.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "dgnn/errors.hpp"
#include "dgnn/rng.hpp"

namespace dgnn {

void GinConfig::validate() const {
  if (num_layers < 1) throw ConfigError("num_layers must be >= 1");
  if (num_mlp_layers < 1) throw ConfigError("num_mlp_layers must be >= 1");
  if (hidden_dim < 1) throw ConfigError("hidden_dim must be >= 1");
}

namespace {

Tensor uniform_init(std::size_t rows, std::size_t cols, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  Tensor t(rows, cols);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  t.set_requires_grad(true);
  return t;
}

Tensor zero_param(std::size_t rows, std::size_t cols) {
  Tensor t(rows, cols);
  t.set_requires_grad(true);
  return t;
}

}  // namespace

ModelParams ModelParams::init(const GinConfig& config, std::size_t feature_dim, int num_classes,
                              std::uint64_t seed) {
  config.validate();
  if (feature_dim == 0) throw ConfigError("feature_dim must be >= 1 (features not built?)");
  if (num_classes < 2) throw ConfigError("num_classes must be >= 2");

  Rng rng(seed);
  ModelParams p;
  p.config = config;
  p.feature_dim = feature_dim;
  p.num_classes = num_classes;
  const auto hidden = static_cast<std::size_t>(config.hidden_dim);
  for (int k = 0; k < config.num_layers; ++k) {
    GinLayer layer;
    std::size_t in_dim = (k == 0) ? feature_dim : hidden;
    for (int l = 0; l < config.num_mlp_layers; ++l) {
      MlpLayer mlp;
      mlp.weight = uniform_init(in_dim, hidden, in_dim, rng);
      mlp.bias = uniform_init(1, hidden, in_dim, rng);
      if (config.graph_norm) {
        mlp.gamma = Tensor::full(1, hidden, 1.0);
        mlp.gamma.set_requires_grad(true);
        mlp.beta = zero_param(1, hidden);
        mlp.running_mean = Tensor(1, hidden);
        mlp.running_var = Tensor::full(1, hidden, 1.0);
      }
      layer.mlp.push_back(std::move(mlp));
      in_dim = hidden;
    }
    layer.epsilon = Tensor::scalar(0.0);
    layer.epsilon.set_requires_grad(config.epsilon_learnable);
    p.layers.push_back(std::move(layer));
  }
  p.classifier_weight = zero_param(p.readout_dim(), static_cast<std::size_t>(num_classes));
  p.classifier_bias = zero_param(1, static_cast<std::size_t>(num_classes));
  return p;
}

std::size_t ModelParams::readout_dim() const {
  const auto hidden = static_cast<std::size_t>(config.hidden_dim);
  return config.readout == GinConfig::Readout::SumConcatAllLayers
             ? hidden * static_cast<std::size_t>(config.num_layers)
             : hidden;
}

std::vector<Tensor*> ModelParams::parameters() {
  std::vector<Tensor*> out;
  for (GinLayer& layer : layers) {
    for (MlpLayer& mlp : layer.mlp) {
      out.push_back(&mlp.weight);
      out.push_back(&mlp.bias);
      if (config.graph_norm) {
        out.push_back(&mlp.gamma);
        out.push_back(&mlp.beta);
      }
    }
    if (config.epsilon_learnable) out.push_back(&layer.epsilon);
  }
  out.push_back(&classifier_weight);
  out.push_back(&classifier_bias);
  return out;
}

void ModelParams::reset_grads() {
  for (Tensor* t : parameters()) t->reset_grad();
}

bool ModelParams::all_finite() const {
  for (const GinLayer& layer : layers) {
    for (const MlpLayer& mlp : layer.mlp) {
      if (!mlp.weight.all_finite() || !mlp.bias.all_finite()) return false;
      if (!mlp.gamma.all_finite() || !mlp.beta.all_finite()) return false;
    }
  }
  return classifier_weight.all_finite() && classifier_bias.all_finite();
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  if (a.feature_dim != b.feature_dim || a.num_classes != b.num_classes) return false;
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t k = 0; k < a.layers.size(); ++k) {
    if (a.layers[k].mlp.size() != b.layers[k].mlp.size()) return false;
    if (!(a.layers[k].epsilon == b.layers[k].epsilon)) return false;
    for (std::size_t l = 0; l < a.layers[k].mlp.size(); ++l) {
      if (!(a.layers[k].mlp[l].weight == b.layers[k].mlp[l].weight)) return false;
      if (!(a.layers[k].mlp[l].bias == b.layers[k].mlp[l].bias)) return false;
      if (!(a.layers[k].mlp[l].gamma == b.layers[k].mlp[l].gamma)) return false;
      if (!(a.layers[k].mlp[l].beta == b.layers[k].mlp[l].beta)) return false;
      if (!(a.layers[k].mlp[l].running_mean == b.layers[k].mlp[l].running_mean)) return false;
      if (!(a.layers[k].mlp[l].running_var == b.layers[k].mlp[l].running_var)) return false;
    }
  }
  return a.classifier_weight == b.classifier_weight && a.classifier_bias == b.classifier_bias;
}

BoundParams bind_params(Tape& tape, ModelParams& params) {
  BoundParams bound;
  for (ModelParams::GinLayer& layer : params.layers) {
    BoundParams::BoundGinLayer bl;
    for (ModelParams::MlpLayer& mlp : layer.mlp) {
      BoundParams::BoundMlpLayer bml;
      bml.weight = tape.leaf(mlp.weight);
      bml.bias = tape.leaf(mlp.bias);
      if (params.config.graph_norm) {
        bml.normed = true;
        bml.gamma = tape.leaf(mlp.gamma);
        bml.beta = tape.leaf(mlp.beta);
      }
      bl.mlp.push_back(bml);
    }
    bl.epsilon = tape.leaf(layer.epsilon);
    bound.layers.push_back(std::move(bl));
  }
  bound.classifier_weight = tape.leaf(params.classifier_weight);
  bound.classifier_bias = tape.leaf(params.classifier_bias);
  return bound;
}

Var aggregate(Tape& tape, const Graph& graph, Var h_prev) {
  return tape.neighbor_sum(h_prev, graph.neighbors);
}

namespace {

constexpr double kNormEps = 1e-5;
constexpr double kRunningStatMomentum = 0.1;

}  // namespace

Var combine(Tape& tape, Var h_prev, Var agg, const BoundParams::BoundGinLayer& layer) {
  Var x = tape.add(tape.scale_by_one_plus(h_prev, layer.epsilon), agg);
  for (std::size_t l = 0; l < layer.mlp.size(); ++l) {
    x = tape.add_row_broadcast(tape.matmul(x, layer.mlp[l].weight), layer.mlp[l].bias);
    if (layer.mlp[l].normed) {
      x = tape.column_norm(x, layer.mlp[l].gamma, layer.mlp[l].beta, kNormEps);
    }
    if (l + 1 < layer.mlp.size()) x = tape.relu(x);
  }
  return x;
}

Var readout(Tape& tape, const std::vector<Var>& layer_embeddings, GinConfig::Readout mode) {
  if (layer_embeddings.empty()) throw UsageError("readout: no layer embeddings");
  if (mode == GinConfig::Readout::SumLastLayer) {
    return tape.sum_rows(layer_embeddings.back());
  }
  std::vector<Var> pooled;
  pooled.reserve(layer_embeddings.size());
  for (Var h : layer_embeddings) pooled.push_back(tape.sum_rows(h));
  return tape.concat_cols(pooled);
}

BatchGraph make_batch(const std::vector<const Graph*>& graphs) {
  BatchGraph batch;
  std::size_t total = 0;
  for (const Graph* g : graphs) total += g->num_vertices;
  const std::size_t f = graphs.empty() ? 0 : graphs.front()->features.cols();
  batch.features = Tensor(total, f);
  batch.neighbors.resize(total);
  std::size_t offset = 0;
  for (const Graph* g : graphs) {
    if (g->features.cols() != f) {
      throw ShapeError("make_batch: graphs with differing feature dimensions");
    }
    for (std::uint32_t v = 0; v < g->num_vertices; ++v) {
      for (std::size_t c = 0; c < f; ++c) {
        batch.features.at(offset + v, c) = g->features.at(v, c);
      }
      auto& nb = batch.neighbors[offset + v];
      nb.reserve(g->neighbors[v].size());
      for (std::uint32_t u : g->neighbors[v]) {
        nb.push_back(static_cast<std::uint32_t>(offset + u));
      }
    }
    batch.row_ranges.emplace_back(offset, offset + g->num_vertices);
    offset += g->num_vertices;
  }
  return batch;
}

std::vector<GraphForward> gin_forward_batch(Tape& tape, const BatchGraph& batch,
                                            const BoundParams& bound, ModelParams& params,
                                            bool training) {
  const GinConfig& config = params.config;
  Var h = tape.constant(batch.features);
  std::vector<Var> layer_embeddings;
  layer_embeddings.reserve(bound.layers.size());
  for (std::size_t k = 0; k < bound.layers.size(); ++k) {
    const auto& layer = bound.layers[k];
    const Var agg = tape.neighbor_sum(h, batch.neighbors);
    Var x = tape.add(tape.scale_by_one_plus(h, layer.epsilon), agg);
    for (std::size_t l = 0; l < layer.mlp.size(); ++l) {
      x = tape.add_row_broadcast(tape.matmul(x, layer.mlp[l].weight), layer.mlp[l].bias);
      if (layer.mlp[l].normed) {
        ModelParams::MlpLayer& state = params.layers[k].mlp[l];
        if (training) {
          std::vector<double> mean, var;
          x = tape.column_norm(x, layer.mlp[l].gamma, layer.mlp[l].beta, kNormEps, &mean, &var);
          for (std::size_t c = 0; c < mean.size(); ++c) {
            state.running_mean[c] = (1.0 - kRunningStatMomentum) * state.running_mean[c] +
                                    kRunningStatMomentum * mean[c];
            state.running_var[c] = (1.0 - kRunningStatMomentum) * state.running_var[c] +
                                   kRunningStatMomentum * var[c];
          }
        } else {
          x = tape.column_norm_fixed(x, layer.mlp[l].gamma, layer.mlp[l].beta,
                                     state.running_mean.data(), state.running_var.data(),
                                     kNormEps);
        }
      }
      if (l + 1 < layer.mlp.size()) x = tape.relu(x);
    }
    h = x;
    layer_embeddings.push_back(h);
  }

  std::vector<GraphForward> out;
  out.reserve(batch.row_ranges.size());
  for (const auto& [begin, end] : batch.row_ranges) {
    std::vector<std::size_t> rows(end - begin);
    for (std::size_t r = begin; r < end; ++r) rows[r - begin] = r;
    Var pooled;
    if (config.readout == GinConfig::Readout::SumLastLayer) {
      pooled = tape.sum_rows(tape.index_select(layer_embeddings.back(), rows));
    } else {
      std::vector<Var> parts;
      parts.reserve(layer_embeddings.size());
      for (Var emb : layer_embeddings) {
        parts.push_back(tape.sum_rows(tape.index_select(emb, rows)));
      }
      pooled = tape.concat_cols(parts);
    }
    const Var logits = tape.add_row_broadcast(tape.matmul(pooled, bound.classifier_weight),
                                              bound.classifier_bias);
    out.push_back(GraphForward{logits, tape.row_softmax(logits)});
  }
  return out;
}

GraphForward gin_forward(Tape& tape, const Graph& graph, const BoundParams& bound,
                         ModelParams& params) {
  Tensor features = graph.features;
  Var h = tape.constant(std::move(features));
  std::vector<Var> layer_embeddings;
  layer_embeddings.reserve(bound.layers.size());
  for (std::size_t k = 0; k < bound.layers.size(); ++k) {
    const auto& layer = bound.layers[k];
    const Var agg = aggregate(tape, graph, h);
    Var x = tape.add(tape.scale_by_one_plus(h, layer.epsilon), agg);
    for (std::size_t l = 0; l < layer.mlp.size(); ++l) {
      x = tape.add_row_broadcast(tape.matmul(x, layer.mlp[l].weight), layer.mlp[l].bias);
      if (layer.mlp[l].normed) {
        const ModelParams::MlpLayer& state = params.layers[k].mlp[l];
        x = tape.column_norm_fixed(x, layer.mlp[l].gamma, layer.mlp[l].beta,
                                   state.running_mean.data(), state.running_var.data(),
                                   kNormEps);
      }
      if (l + 1 < layer.mlp.size()) x = tape.relu(x);
    }
    h = x;
    layer_embeddings.push_back(h);
  }
  const Var pooled = readout(tape, layer_embeddings, params.config.readout);
  const Var logits = tape.add_row_broadcast(tape.matmul(pooled, bound.classifier_weight),
                                            bound.classifier_bias);
  return GraphForward{logits, tape.row_softmax(logits)};
}

std::vector<double> model_logits(ModelParams& params, const Graph& graph) {
  Tape tape;
  const BoundParams bound = bind_params(tape, params);
  const GraphForward fwd = gin_forward(tape, graph, bound, params);
  return tape.value(fwd.logits).data();
}

std::vector<double> model_probs(ModelParams& params, const Graph& graph) {
  Tape tape;
  const BoundParams bound = bind_params(tape, params);
  const GraphForward fwd = gin_forward(tape, graph, bound, params);
  return tape.value(fwd.probs).data();
}

int predict(ModelParams& params, const Graph& graph) {
  const std::vector<double> logits = model_logits(params, graph);
  int best = 0;
  for (int j = 1; j < static_cast<int>(logits.size()); ++j) {
    if (logits[j] > logits[best]) best = j;
  }
  return best;
}

namespace {

constexpr char kCheckpointMagic[] = "DGNN-CKPT-v1";

template <typename T>
void write_pod(std::ostream& os, const T& value) {
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!is) throw FormatError("checkpoint truncated");
  return value;
}

void write_tensor(std::ostream& os, const Tensor& t) {
  write_pod(os, static_cast<std::uint64_t>(t.rows()));
  write_pod(os, static_cast<std::uint64_t>(t.cols()));
  os.write(reinterpret_cast<const char*>(t.data().data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
}

Tensor read_tensor(std::istream& is, bool requires_grad) {
  const auto rows = read_pod<std::uint64_t>(is);
  const auto cols = read_pod<std::uint64_t>(is);
  Tensor t(rows, cols);
  is.read(reinterpret_cast<char*>(t.data().data()),
          static_cast<std::streamsize>(t.size() * sizeof(double)));
  if (!is) throw FormatError("checkpoint truncated");
  t.set_requires_grad(requires_grad);
  return t;
}

}  // namespace

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IngestError("cannot open " + path.string() + " for writing");
  os.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  write_pod(os, static_cast<std::int32_t>(params.config.num_layers));
  write_pod(os, static_cast<std::int32_t>(params.config.num_mlp_layers));
  write_pod(os, static_cast<std::int32_t>(params.config.hidden_dim));
  write_pod(os, static_cast<std::uint8_t>(params.config.epsilon_learnable ? 1 : 0));
  write_pod(os, static_cast<std::uint8_t>(
                    params.config.readout == GinConfig::Readout::SumConcatAllLayers ? 1 : 0));
  write_pod(os, static_cast<std::uint8_t>(params.config.graph_norm ? 1 : 0));
  write_pod(os, static_cast<std::uint64_t>(params.feature_dim));
  write_pod(os, static_cast<std::int32_t>(params.num_classes));
  for (const ModelParams::GinLayer& layer : params.layers) {
    for (const ModelParams::MlpLayer& mlp : layer.mlp) {
      write_tensor(os, mlp.weight);
      write_tensor(os, mlp.bias);
      if (params.config.graph_norm) {
        write_tensor(os, mlp.gamma);
        write_tensor(os, mlp.beta);
        write_tensor(os, mlp.running_mean);
        write_tensor(os, mlp.running_var);
      }
    }
    write_tensor(os, layer.epsilon);
  }
  write_tensor(os, params.classifier_weight);
  write_tensor(os, params.classifier_bias);
  if (!os) throw IngestError("failed writing " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IngestError("cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kCheckpointMagic, sizeof(kCheckpointMagic)) != 0) {
    throw FormatError(path.string() + " is not a dgnn checkpoint");
  }
  ModelParams p;
  p.config.num_layers = read_pod<std::int32_t>(is);
  p.config.num_mlp_layers = read_pod<std::int32_t>(is);
  p.config.hidden_dim = read_pod<std::int32_t>(is);
  p.config.epsilon_learnable = read_pod<std::uint8_t>(is) != 0;
  p.config.readout = read_pod<std::uint8_t>(is) != 0 ? GinConfig::Readout::SumConcatAllLayers
                                                     : GinConfig::Readout::SumLastLayer;
  p.config.graph_norm = read_pod<std::uint8_t>(is) != 0;
  p.feature_dim = read_pod<std::uint64_t>(is);
  p.num_classes = read_pod<std::int32_t>(is);
  for (int k = 0; k < p.config.num_layers; ++k) {
    ModelParams::GinLayer layer;
    for (int l = 0; l < p.config.num_mlp_layers; ++l) {
      ModelParams::MlpLayer mlp;
      mlp.weight = read_tensor(is, true);
      mlp.bias = read_tensor(is, true);
      if (p.config.graph_norm) {
        mlp.gamma = read_tensor(is, true);
        mlp.beta = read_tensor(is, true);
        mlp.running_mean = read_tensor(is, false);
        mlp.running_var = read_tensor(is, false);
      }
      layer.mlp.push_back(std::move(mlp));
    }
    layer.epsilon = read_tensor(is, p.config.epsilon_learnable);
    p.layers.push_back(std::move(layer));
  }
  p.classifier_weight = read_tensor(is, true);
  p.classifier_bias = read_tensor(is, true);
  return p;
}

}  // namespace dgnn
