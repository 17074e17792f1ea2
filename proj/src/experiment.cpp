#include "dgnn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "dgnn/errors.hpp"
#include "dgnn/noise.hpp"
#include "dgnn/rng.hpp"

namespace dgnn {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::Gin:
      return "gin";
    case Variant::DgnnConservative:
      return "dgnn-c";
    case Variant::DgnnAnchor:
      return "dgnn-a";
    case Variant::DgnnExact:
      return "dgnn-e";
  }
  return "?";
}

Variant parse_variant(const std::string& text) {
  if (text == "gin") return Variant::Gin;
  if (text == "dgnn-c") return Variant::DgnnConservative;
  if (text == "dgnn-a") return Variant::DgnnAnchor;
  if (text == "dgnn-e") return Variant::DgnnExact;
  throw ConfigError("unknown variant '" + text + "' (expected gin, dgnn-c, dgnn-a or dgnn-e)");
}

void ExperimentConfig::validate() const {
  if (!(noise_rate >= 0.0 && noise_rate <= 1.0)) {
    throw ConfigError("noise rate must lie in [0, 1]");
  }
  if (k_folds < 2) throw ConfigError("k_folds must be >= 2");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (iters_per_epoch < 0) throw ConfigError("iters_per_epoch must be >= 0");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (!(blend_lambda >= 0.0 && blend_lambda <= 1.0)) {
    throw ConfigError("blend lambda must lie in [0, 1]");
  }
  gin.validate();
}

KfoldResult kfold_split(const std::vector<int>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("k must be >= 2");
  if (static_cast<std::size_t>(k) > labels.size()) {
    throw ConfigError("k = " + std::to_string(k) + " folds for " +
                      std::to_string(labels.size()) + " graphs");
  }
  Rng rng(seed);

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);

  KfoldResult result;
  for (const auto& [cls, members] : by_class) {
    if (members.size() < static_cast<std::size_t>(k)) {
      result.stratified = false;
      break;
    }
  }

  std::vector<std::vector<std::size_t>> fold_members(k);
  std::size_t cursor = 0;  // continues across classes so fold sizes stay even
  if (result.stratified) {
    for (auto& [cls, members] : by_class) {
      rng.shuffle(members);
      for (std::size_t idx : members) {
        fold_members[cursor % k].push_back(idx);
        ++cursor;
      }
    }
  } else {
    std::vector<std::size_t> all(labels.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    rng.shuffle(all);
    for (std::size_t idx : all) {
      fold_members[cursor % k].push_back(idx);
      ++cursor;
    }
  }

  result.folds.resize(k);
  for (int f = 0; f < k; ++f) {
    FoldSplit& split = result.folds[f];
    split.test_indices = fold_members[f];
    std::sort(split.test_indices.begin(), split.test_indices.end());
    for (int other = 0; other < k; ++other) {
      if (other == f) continue;
      split.train_indices.insert(split.train_indices.end(), fold_members[other].begin(),
                                 fold_members[other].end());
    }
    std::sort(split.train_indices.begin(), split.train_indices.end());
  }
  return result;
}

namespace {

constexpr std::uint64_t kFoldTag = 0x666f6c64;    // "fold"
constexpr std::uint64_t kNoiseTag = 0x6e6f6973;  // "nois"
constexpr std::uint64_t kTrainTag = 0x7472616e;  // "tran"

EstimatorDiagnostics make_diagnostics(const CorrectionMatrix& c, const NoiseMatrix& noise) {
  EstimatorDiagnostics d;
  d.correction = c.entries;
  d.inverse = c.inverse;
  d.condition_number = c.condition_number;
  d.average_diagonal = c.average_diagonal();
  d.l1_distance_to_noise = entrywise_l1_distance(c.entries, noise);
  return d;
}

void validate_anchor_override(const Dataset& dataset,
                              const std::vector<std::size_t>& override_indices) {
  const int m = dataset.num_classes;
  if (static_cast<int>(override_indices.size()) != m) {
    throw ConfigError("anchor override must list exactly one graph per class");
  }
  for (int cls = 0; cls < m; ++cls) {
    const std::size_t idx = override_indices[cls];
    if (idx >= dataset.graphs.size()) {
      throw ConfigError("anchor index " + std::to_string(idx) + " out of range");
    }
    if (dataset.graphs[idx].label != cls) {
      throw ConfigError("anchor index " + std::to_string(idx) + " has label " +
                        std::to_string(dataset.graphs[idx].label) + ", expected " +
                        std::to_string(cls));
    }
  }
}

// Default anchors: first test graph of each class in index order.
std::vector<const Graph*> pick_anchors(const Dataset& dataset,
                                       const std::vector<std::size_t>& test_indices,
                                       const std::optional<std::vector<std::size_t>>& override) {
  const int m = dataset.num_classes;
  std::vector<const Graph*> anchors(m, nullptr);
  if (override) {
    for (int cls = 0; cls < m; ++cls) anchors[cls] = &dataset.graphs[(*override)[cls]];
    return anchors;
  }
  for (std::size_t idx : test_indices) {
    const int cls = dataset.graphs[idx].label;
    if (anchors[cls] == nullptr) anchors[cls] = &dataset.graphs[idx];
  }
  for (int cls = 0; cls < m; ++cls) {
    if (anchors[cls] == nullptr) {
      throw ConfigError("fold test portion has no graph of class " + std::to_string(cls) +
                        " to use as anchor");
    }
  }
  return anchors;
}

struct Task {
  std::size_t seed_pos;
  int fold;
};

FoldRecord run_fold(const Dataset& dataset, const ExperimentConfig& config,
                    const NoiseMatrix& noise, const FoldSplit& split, std::uint64_t seed,
                    int fold) {
  FoldRecord rec;
  rec.fold = fold;
  rec.seed = seed;
  rec.train_indices = split.train_indices;
  rec.test_indices = split.test_indices;

  const std::vector<int> clean_labels = dataset.labels();

  // Corrupt the training portion only; evaluation labels stay clean.
  std::vector<int> train_clean;
  train_clean.reserve(split.train_indices.size());
  for (std::size_t idx : split.train_indices) train_clean.push_back(clean_labels[idx]);

  std::vector<int> train_noisy;
  if (config.noise_scope == NoiseScope::PerFold) {
    const NoiseInjection inj = inject_noise(
        train_clean, noise, derive_seed(seed, {kNoiseTag, static_cast<std::uint64_t>(fold)}));
    train_noisy = inj.noisy_labels;
    for (std::size_t i = 0; i < split.train_indices.size(); ++i) {
      if (inj.flipped[i]) rec.corrupted_indices.push_back(split.train_indices[i]);
    }
  } else {
    const NoiseInjection inj = inject_noise(clean_labels, noise, derive_seed(seed, {kNoiseTag}));
    train_noisy.reserve(split.train_indices.size());
    for (std::size_t idx : split.train_indices) {
      train_noisy.push_back(inj.noisy_labels[idx]);
      if (inj.flipped[idx]) rec.corrupted_indices.push_back(idx);
    }
  }
  rec.noisy_labels = train_noisy;

  std::vector<const Graph*> train_graphs;
  train_graphs.reserve(split.train_indices.size());
  for (std::size_t idx : split.train_indices) train_graphs.push_back(&dataset.graphs[idx]);
  std::vector<const Graph*> test_graphs;
  std::vector<int> test_labels;
  for (std::size_t idx : split.test_indices) {
    test_graphs.push_back(&dataset.graphs[idx]);
    test_labels.push_back(clean_labels[idx]);
  }

  const std::uint64_t train_seed =
      derive_seed(seed, {kTrainTag, static_cast<std::uint64_t>(fold)});
  const TrainOptions options = config.train_options();

  try {
    TrainResult trained;
    if (config.variant == Variant::Gin) {
      trained = train_gin(train_graphs, train_noisy, config.gin, dataset.feature_dim,
                          dataset.num_classes, options, train_seed);
    } else {
      EstimatorKind source = EstimatorKind::Exact;
      std::vector<const Graph*> anchors;
      if (config.variant == Variant::DgnnConservative) {
        source = EstimatorKind::Conservative;
      } else if (config.variant == Variant::DgnnAnchor) {
        source = EstimatorKind::Anchor;
        anchors = pick_anchors(dataset, split.test_indices, config.anchor_indices);
      }
      DgnnTrainResult dgnn =
          train_dgnn(train_graphs, train_noisy, config.gin, dataset.feature_dim,
                     dataset.num_classes, options, source, noise, anchors, config.blend_lambda,
                     train_seed);
      rec.estimator = make_diagnostics(dgnn.correction, noise);
      trained = std::move(dgnn.trained);
    }
    rec.train_accuracy_per_epoch = std::move(trained.train_accuracy_per_epoch);
    rec.loss_per_step = std::move(trained.loss_per_step);
    rec.test_accuracy = evaluate(trained.params, test_graphs, test_labels);
  } catch (const SingularMatrixError& e) {
    rec.error = std::string("SingularMatrixError: ") + e.what();
  } catch (const DivergenceError& e) {
    rec.error = std::string("DivergenceError: ") + e.what();
  } catch (const Error& e) {
    rec.error = e.what();
  }
  return rec;
}

}  // namespace

ExperimentResult run_experiment(const Dataset& dataset, const ExperimentConfig& config) {
  config.validate();
  if (dataset.graphs.empty()) throw ConfigError("dataset is empty");
  if (static_cast<std::size_t>(config.k_folds) > dataset.graphs.size()) {
    throw ConfigError("more folds than graphs");
  }

  if (config.variant == Variant::DgnnAnchor && config.anchor_indices) {
    validate_anchor_override(dataset, *config.anchor_indices);
  }

  const NoiseMatrix noise = build_noise_matrix(dataset.num_classes, config.noise_rate);
  const std::vector<int> labels = dataset.labels();

  // One split per seed, shared by every variant for comparability.
  std::vector<KfoldResult> splits;
  splits.reserve(config.seeds.size());
  for (std::uint64_t seed : config.seeds) {
    splits.push_back(kfold_split(labels, config.k_folds, derive_seed(seed, {kFoldTag})));
  }

  std::vector<Task> tasks;
  for (std::size_t sp = 0; sp < config.seeds.size(); ++sp) {
    for (int f = 0; f < config.k_folds; ++f) tasks.push_back({sp, f});
  }

  ExperimentResult result;
  result.config = config;
  result.records.resize(tasks.size());

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    while (true) {
      const std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) break;
      const Task& task = tasks[t];
      result.records[t] =
          run_fold(dataset, config, noise, splits[task.seed_pos].folds[task.fold],
                   config.seeds[task.seed_pos], task.fold);
    }
  };

  const std::size_t n_workers =
      std::min<std::size_t>(static_cast<std::size_t>(config.jobs), tasks.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(n_workers);
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  double sum = 0.0;
  for (const FoldRecord& rec : result.records) {
    if (rec.ok()) {
      sum += rec.test_accuracy;
      ++result.ok_count;
    } else {
      result.partial = true;
    }
  }
  if (result.ok_count > 0) {
    result.mean_test_accuracy = sum / static_cast<double>(result.ok_count);
    double sq = 0.0;
    for (const FoldRecord& rec : result.records) {
      if (rec.ok()) {
        const double d = rec.test_accuracy - result.mean_test_accuracy;
        sq += d * d;
      }
    }
    result.std_test_accuracy = std::sqrt(sq / static_cast<double>(result.ok_count));
  } else {
    result.mean_test_accuracy = std::nan("");
    result.std_test_accuracy = std::nan("");
  }
  return result;
}

namespace {

using nlohmann::json;

json matrix_to_json(const SquareMatrix& m) {
  json rows = json::array();
  for (int i = 0; i < m.n; ++i) {
    json row = json::array();
    for (int j = 0; j < m.n; ++j) row.push_back(m.at(i, j));
    rows.push_back(row);
  }
  return rows;
}

json config_to_json(const ExperimentConfig& c) {
  json j;
  j["dataset"] = c.dataset_name;
  j["variant"] = variant_name(c.variant);
  j["noise_rate"] = c.noise_rate;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["iters_per_epoch"] = c.iters_per_epoch;
  j["k_folds"] = c.k_folds;
  j["seeds"] = c.seeds;
  j["learning_rate"] = c.learning_rate;
  j["noise_scope"] = c.noise_scope == NoiseScope::PerFold ? "per-fold" : "global";
  j["blend_lambda"] = c.blend_lambda;
  j["jobs"] = c.jobs;
  j["gin"] = {
      {"num_layers", c.gin.num_layers},
      {"num_mlp_layers", c.gin.num_mlp_layers},
      {"hidden_dim", c.gin.hidden_dim},
      {"epsilon_learnable", c.gin.epsilon_learnable},
      {"graph_norm", c.gin.graph_norm},
      {"readout", c.gin.readout == GinConfig::Readout::SumConcatAllLayers ? "sum-concat-all"
                                                                          : "sum-last"},
  };
  if (c.anchor_indices) j["anchor_indices"] = *c.anchor_indices;
  return j;
}

}  // namespace

void write_results_json(const ExperimentResult& result, const std::filesystem::path& path) {
  json j;
  j["config"] = config_to_json(result.config);
  json records = json::array();
  for (const FoldRecord& rec : result.records) {
    json r;
    r["fold"] = rec.fold;
    r["seed"] = rec.seed;
    if (rec.ok()) {
      r["test_accuracy"] = rec.test_accuracy;
      r["train_accuracy_per_epoch"] = rec.train_accuracy_per_epoch;
      r["loss_per_step"] = rec.loss_per_step;
    } else {
      r["error"] = rec.error;
    }
    if (rec.estimator) {
      r["estimator"] = {
          {"correction", matrix_to_json(rec.estimator->correction)},
          {"inverse", matrix_to_json(rec.estimator->inverse)},
          {"condition_number", rec.estimator->condition_number},
          {"average_diagonal", rec.estimator->average_diagonal},
          {"l1_distance_to_noise", rec.estimator->l1_distance_to_noise},
      };
    }
    r["corrupted_indices"] = rec.corrupted_indices;
    records.push_back(std::move(r));
  }
  j["records"] = std::move(records);
  j["aggregate"] = {
      {"ok_count", result.ok_count},
      {"partial", result.partial},
      {"mean_test_accuracy",
       std::isfinite(result.mean_test_accuracy) ? json(result.mean_test_accuracy) : json()},
      {"std_test_accuracy",
       std::isfinite(result.std_test_accuracy) ? json(result.std_test_accuracy) : json()},
  };
  std::ofstream os(path);
  if (!os) throw IngestError("cannot open " + path.string() + " for writing");
  os << j.dump(2) << "\n";
}

void write_results_csv(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IngestError("cannot open " + path.string() + " for writing");
  os << std::setprecision(17);
  os << "dataset,variant,noise,fold,seed,epoch,split,accuracy\n";
  const std::string prefix = result.config.dataset_name + "," +
                             variant_name(result.config.variant) + ",";
  for (const FoldRecord& rec : result.records) {
    if (!rec.ok()) continue;
    for (std::size_t e = 0; e < rec.train_accuracy_per_epoch.size(); ++e) {
      os << prefix << result.config.noise_rate << "," << rec.fold << "," << rec.seed << "," << e
         << ",train," << rec.train_accuracy_per_epoch[e] << "\n";
    }
    os << prefix << result.config.noise_rate << "," << rec.fold << "," << rec.seed
       << ",,test," << rec.test_accuracy << "\n";
  }
}

void write_summary_markdown(const ExperimentResult& result, const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw IngestError("cannot open " + path.string() + " for writing");
  os << "# Run summary\n\n";
  os << "| dataset | variant | noise | folds x seeds | mean test acc | std | failures |\n";
  os << "|---|---|---|---|---|---|---|\n";
  std::ostringstream mean, sd;
  mean << std::fixed << std::setprecision(4) << result.mean_test_accuracy;
  sd << std::fixed << std::setprecision(4) << result.std_test_accuracy;
  os << "| " << result.config.dataset_name << " | " << variant_name(result.config.variant)
     << " | " << result.config.noise_rate << " | " << result.config.k_folds << " x "
     << result.config.seeds.size() << " | " << (result.ok_count ? mean.str() : "n/a") << " | "
     << (result.ok_count ? sd.str() : "n/a") << " | "
     << (result.records.size() - result.ok_count) << " |\n";
  if (result.partial) {
    os << "\n## Fold failures\n\n";
    for (const FoldRecord& rec : result.records) {
      if (!rec.ok()) {
        os << "- fold " << rec.fold << ", seed " << rec.seed << ": " << rec.error << "\n";
      }
    }
  }
}

}  // namespace dgnn
