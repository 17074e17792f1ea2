#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <fstream>
#include <set>

#include "dgnn/errors.hpp"
#include "dgnn/experiment.hpp"
#include "dgnn/graph.hpp"
#include "dgnn/rng.hpp"
#include "dgnn/tu_loader.hpp"
#include "support/testing.hpp"

using namespace dgnn;
namespace dt = dgnn::testing;

namespace {

Dataset synthetic_dataset(int num_graphs, std::uint64_t seed = 7) {
  static std::map<std::pair<int, std::uint64_t>, Dataset> cache;
  const auto key = std::make_pair(num_graphs, seed);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const auto root = dt::make_temp_dir("exp");
  dt::SyntheticSpec spec;
  spec.num_graphs = num_graphs;
  spec.seed = seed;
  spec.min_vertices = 5;
  spec.max_vertices = 10;
  dt::write_synthetic_tu(root, spec);
  RawDataset raw = parse_tu_dataset(root, spec.name);
  Dataset ds = build_features(raw, FeatureScheme::auto_for(raw));
  cache[key] = ds;
  return ds;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.dataset_name = "SYNTH";
  cfg.epochs = 3;
  cfg.batch_size = 16;
  cfg.k_folds = 4;
  cfg.seeds = {11};
  cfg.gin.num_layers = 2;
  cfg.gin.hidden_dim = 8;
  cfg.noise_rate = 0.2;
  return cfg;
}

bool records_equal(const FoldRecord& a, const FoldRecord& b) {
  return a.fold == b.fold && a.seed == b.seed && a.test_accuracy == b.test_accuracy &&
         a.train_accuracy_per_epoch == b.train_accuracy_per_epoch &&
         a.loss_per_step == b.loss_per_step && a.corrupted_indices == b.corrupted_indices &&
         a.error == b.error;
}

}  // namespace

TEST_CASE("kfold: 10 graphs, k=10 gives singleton test folds") {
  std::vector<int> labels = {0, 1, 0, 1, 0, 1, 0, 1, 0, 1};
  const KfoldResult kf = kfold_split(labels, 10, 3);
  REQUIRE(kf.folds.size() == 10);
  std::set<std::size_t> seen;
  for (const FoldSplit& f : kf.folds) {
    CHECK(f.test_indices.size() == 1);
    CHECK(f.train_indices.size() == 9);
    seen.insert(f.test_indices[0]);
  }
  CHECK(seen.size() == 10);
}

TEST_CASE("kfold: 188 graphs split 10 ways into test sizes 18 or 19") {
  // MUTAG-like label mix: 125 vs 63
  std::vector<int> labels;
  for (int i = 0; i < 125; ++i) labels.push_back(0);
  for (int i = 0; i < 63; ++i) labels.push_back(1);
  const KfoldResult kf = kfold_split(labels, 10, 17);
  CHECK(kf.stratified);
  std::size_t total = 0;
  for (const FoldSplit& f : kf.folds) {
    CHECK(f.test_indices.size() >= 18);
    CHECK(f.test_indices.size() <= 19);
    total += f.test_indices.size();
    // each fold keeps roughly the class mix: class 1 share is 63/188 = 33.5%
    std::size_t ones = 0;
    for (std::size_t idx : f.test_indices) ones += labels[idx];
    CHECK(ones >= 6);
    CHECK(ones <= 7);
  }
  CHECK(total == 188);
}

TEST_CASE("kfold folds are disjoint, covering, and deterministic per seed") {
  Rng rng(23);
  std::vector<int> labels(57);
  for (auto& l : labels) l = static_cast<int>(rng.uniform_index(3));
  const KfoldResult a = kfold_split(labels, 5, 99);
  const KfoldResult b = kfold_split(labels, 5, 99);
  const KfoldResult c = kfold_split(labels, 5, 100);
  bool all_same = true;
  for (int f = 0; f < 5; ++f) {
    CHECK(a.folds[f].test_indices == b.folds[f].test_indices);
    CHECK(a.folds[f].train_indices == b.folds[f].train_indices);
    if (a.folds[f].test_indices != c.folds[f].test_indices) all_same = false;
    std::set<std::size_t> test_set(a.folds[f].test_indices.begin(),
                                   a.folds[f].test_indices.end());
    for (std::size_t idx : a.folds[f].train_indices) CHECK(test_set.count(idx) == 0);
    CHECK(a.folds[f].train_indices.size() + a.folds[f].test_indices.size() == labels.size());
  }
  CHECK_FALSE(all_same);
}

TEST_CASE("kfold: class smaller than k falls back to unstratified") {
  std::vector<int> labels = {0, 0, 0, 0, 0, 0, 0, 1};
  const KfoldResult kf = kfold_split(labels, 4, 1);
  CHECK_FALSE(kf.stratified);
  std::size_t total = 0;
  for (const FoldSplit& f : kf.folds) total += f.test_indices.size();
  CHECK(total == labels.size());
}

TEST_CASE("kfold: k larger than the dataset is a config error") {
  std::vector<int> labels = {0, 1};
  CHECK_THROWS_AS(kfold_split(labels, 3, 1), ConfigError);
}

TEST_CASE("train_gin: zero epochs returns the untouched initialization") {
  Dataset ds = synthetic_dataset(16);
  std::vector<const Graph*> graphs;
  for (const Graph& g : ds.graphs) graphs.push_back(&g);
  TrainOptions opts{0, 16, 0.01};
  TrainResult r = train_gin(graphs, ds.labels(), GinConfig{}, ds.feature_dim, ds.num_classes,
                            opts, 42);
  CHECK(r.loss_per_step.empty());
  CHECK(r.train_accuracy_per_epoch.empty());
  // zero classifier init => uniform predictions
  const std::vector<double> probs = model_probs(r.params, ds.graphs[0]);
  for (double p : probs) CHECK(p == doctest::Approx(1.0 / ds.num_classes).epsilon(1e-15));
}

TEST_CASE("train_gin: one Adam step decreases the loss on one graph") {
  Dataset ds = synthetic_dataset(16);
  std::vector<const Graph*> one = {&ds.graphs[0]};
  std::vector<int> label = {ds.graphs[0].label};
  GinConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_dim = 8;
  TrainOptions opts{1, 1, 0.005};
  TrainResult r = train_gin(one, label, cfg, ds.feature_dim, ds.num_classes, opts, 5);
  REQUIRE(r.loss_per_step.size() == 1);
  // recompute the loss at the post-step parameters
  Tape tape;
  const BoundParams bound = bind_params(tape, r.params);
  const GraphForward fwd = gin_forward(tape, ds.graphs[0], bound, r.params);
  const double after =
      tape.value(backward_loss_node(tape, fwd.probs, label[0],
                                    identity_correction(ds.num_classes)))[0];
  CHECK(after < r.loss_per_step[0]);
  // untrained loss is exactly log(m) with the zero classifier
  CHECK(r.loss_per_step[0] == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("non-finite loss raises DivergenceError with the epoch index") {
  // the clamped log keeps saturated losses finite, so a non-finite loss means
  // the activations themselves overflowed; inputs near DBL_MAX force that
  std::vector<Graph> graphs;
  for (int i = 0; i < 4; ++i) {
    Graph g;
    g.num_vertices = 3;
    g.neighbors = {{1}, {0, 2}, {1}};
    g.features = Tensor::full(3, 2, 1e308);
    g.label = i % 2;
    graphs.push_back(std::move(g));
  }
  std::vector<const Graph*> ptrs;
  std::vector<int> labels;
  for (const Graph& g : graphs) {
    ptrs.push_back(&g);
    labels.push_back(g.label);
  }
  GinConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_dim = 8;
  TrainOptions opts{2, 4, 0.01};
  try {
    train_gin(ptrs, labels, cfg, 2, 2, opts, 5);
    FAIL("expected DivergenceError");
  } catch (const DivergenceError& e) {
    CHECK(e.epoch == 0);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
}

TEST_CASE("evaluate: memorizing oracle scores 1.0, uniform model backs off to class 0") {
  Dataset ds = synthetic_dataset(8);
  std::vector<const Graph*> graphs;
  for (const Graph& g : ds.graphs) graphs.push_back(&g);
  const std::vector<int> labels = ds.labels();

  GinConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_dim = 16;
  TrainOptions opts{60, 8, 0.01};
  TrainResult r = train_gin(graphs, labels, cfg, ds.feature_dim, ds.num_classes, opts, 3);
  CHECK(evaluate(r.params, graphs, labels) == 1.0);  // memorized the 8 graphs

  ModelParams uniform = ModelParams::init(cfg, ds.feature_dim, ds.num_classes, 3);
  double class0 = 0.0;
  for (int l : labels) class0 += (l == 0) ? 1.0 : 0.0;
  CHECK(evaluate(uniform, graphs, labels) ==
        doctest::Approx(class0 / static_cast<double>(labels.size())));

  CHECK_THROWS_AS(evaluate(uniform, {}, {}), ConfigError);
}

TEST_CASE("run_experiment is deterministic bit for bit") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  const ExperimentResult a = run_experiment(ds, cfg);
  const ExperimentResult b = run_experiment(ds, cfg);
  REQUIRE(a.records.size() == b.records.size());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(records_equal(a.records[i], b.records[i]));
  }
  CHECK(a.mean_test_accuracy == b.mean_test_accuracy);
  CHECK(a.std_test_accuracy == b.std_test_accuracy);
}

TEST_CASE("run_experiment results do not depend on the worker count") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  cfg.seeds = {11, 12};
  cfg.jobs = 1;
  const ExperimentResult serial = run_experiment(ds, cfg);
  cfg.jobs = 4;
  const ExperimentResult parallel = run_experiment(ds, cfg);
  REQUIRE(serial.records.size() == parallel.records.size());
  for (std::size_t i = 0; i < serial.records.size(); ++i) {
    CHECK(records_equal(serial.records[i], parallel.records[i]));
  }
}

TEST_CASE("fold hygiene: corruption never touches the fold's test portion") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  cfg.noise_rate = 0.4;
  for (const NoiseScope scope : {NoiseScope::PerFold, NoiseScope::Global}) {
    cfg.noise_scope = scope;
    const ExperimentResult res = run_experiment(ds, cfg);
    for (const FoldRecord& rec : res.records) {
      REQUIRE(rec.ok());
      CHECK(rec.corrupted_indices.size() > 0);  // 0.4 on 24 training graphs
      std::set<std::size_t> test_set(rec.test_indices.begin(), rec.test_indices.end());
      for (std::size_t idx : rec.corrupted_indices) CHECK(test_set.count(idx) == 0);
      // noisy labels align with train indices and differ exactly on the mask
      REQUIRE(rec.noisy_labels.size() == rec.train_indices.size());
      std::set<std::size_t> corrupted(rec.corrupted_indices.begin(),
                                      rec.corrupted_indices.end());
      for (std::size_t i = 0; i < rec.train_indices.size(); ++i) {
        const bool flipped = rec.noisy_labels[i] != ds.graphs[rec.train_indices[i]].label;
        CHECK(flipped == (corrupted.count(rec.train_indices[i]) > 0));
      }
    }
  }
}

TEST_CASE("n=0: gin and dgnn-e trajectories are bitwise identical") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  cfg.noise_rate = 0.0;
  cfg.variant = Variant::Gin;
  const ExperimentResult gin = run_experiment(ds, cfg);
  cfg.variant = Variant::DgnnExact;
  const ExperimentResult dgnn = run_experiment(ds, cfg);
  REQUIRE(gin.records.size() == dgnn.records.size());
  for (std::size_t i = 0; i < gin.records.size(); ++i) {
    CHECK(gin.records[i].loss_per_step == dgnn.records[i].loss_per_step);
    CHECK(gin.records[i].train_accuracy_per_epoch == dgnn.records[i].train_accuracy_per_epoch);
    CHECK(gin.records[i].test_accuracy == dgnn.records[i].test_accuracy);
  }
  CHECK(gin.mean_test_accuracy == dgnn.mean_test_accuracy);
  // the exact estimator at n=0 is the identity with zero distance
  for (const FoldRecord& rec : dgnn.records) {
    REQUIRE(rec.estimator.has_value());
    CHECK(rec.estimator->l1_distance_to_noise == 0.0);
    CHECK(rec.estimator->condition_number == doctest::Approx(1.0));
  }
}

TEST_CASE("estimator diagnostics are attached for dgnn variants") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  cfg.variant = Variant::DgnnAnchor;
  const ExperimentResult res = run_experiment(ds, cfg);
  for (const FoldRecord& rec : res.records) {
    REQUIRE(rec.ok());
    REQUIRE(rec.estimator.has_value());
    CHECK(rec.estimator->correction.n == ds.num_classes);
    CHECK(rec.estimator->l1_distance_to_noise >= 0.0);
    CHECK(std::isfinite(rec.estimator->condition_number));
    // anchor rows are softmax outputs: they sum to one
    for (int i = 0; i < ds.num_classes; ++i) {
      double row = 0.0;
      for (int j = 0; j < ds.num_classes; ++j) row += rec.estimator->correction.at(i, j);
      CHECK(std::fabs(row - 1.0) <= 1e-6);
    }
  }
}

TEST_CASE("conservative estimation on an untrained constant model is recorded as singular") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  cfg.variant = Variant::DgnnConservative;
  cfg.epochs = 0;  // phase-1 model stays at the uniform initialization
  const ExperimentResult res = run_experiment(ds, cfg);
  CHECK(res.partial);
  CHECK(res.ok_count == 0);
  for (const FoldRecord& rec : res.records) {
    CHECK(rec.error.find("SingularMatrixError") != std::string::npos);
  }
  CHECK(std::isnan(res.mean_test_accuracy));
}

TEST_CASE("aggregate mean and std follow the population formulas") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  const ExperimentResult res = run_experiment(ds, cfg);
  REQUIRE(res.ok_count == res.records.size());
  double mean = 0.0;
  for (const FoldRecord& rec : res.records) mean += rec.test_accuracy;
  mean /= static_cast<double>(res.records.size());
  double sq = 0.0;
  for (const FoldRecord& rec : res.records) {
    sq += (rec.test_accuracy - mean) * (rec.test_accuracy - mean);
  }
  const double stddev = std::sqrt(sq / static_cast<double>(res.records.size()));
  CHECK(res.mean_test_accuracy == doctest::Approx(mean).epsilon(1e-15));
  CHECK(res.std_test_accuracy == doctest::Approx(stddev).epsilon(1e-15));
}

TEST_CASE("result writers produce the documented layouts") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  const ExperimentResult res = run_experiment(ds, cfg);
  const auto dir = dt::make_temp_dir("writers");

  write_results_csv(res, dir / "results.csv");
  std::ifstream csv(dir / "results.csv");
  std::string line;
  std::getline(csv, line);
  CHECK(line == "dataset,variant,noise,fold,seed,epoch,split,accuracy");
  std::size_t rows = 0, test_rows = 0;
  while (std::getline(csv, line)) {
    ++rows;
    if (line.find(",test,") != std::string::npos) ++test_rows;
  }
  CHECK(rows == res.records.size() * (static_cast<std::size_t>(cfg.epochs) + 1));
  CHECK(test_rows == res.records.size());

  write_results_json(res, dir / "results.json");
  write_summary_markdown(res, dir / "summary.md");
  CHECK(std::filesystem::file_size(dir / "results.json") > 0);
  CHECK(std::filesystem::file_size(dir / "summary.md") > 0);
}

TEST_CASE("anchor override indices are validated") {
  Dataset ds = synthetic_dataset(32);
  ExperimentConfig cfg = small_config();
  cfg.variant = Variant::DgnnAnchor;
  cfg.anchor_indices = std::vector<std::size_t>{0};  // one anchor for two classes
  CHECK_THROWS_AS(run_experiment(ds, cfg), ConfigError);
}

TEST_CASE("sampled-batch epochs: step count and determinism") {
  Dataset ds = synthetic_dataset(32);
  std::vector<const Graph*> graphs;
  for (const Graph& g : ds.graphs) graphs.push_back(&g);
  GinConfig cfg;
  cfg.num_layers = 2;
  cfg.hidden_dim = 8;
  TrainOptions opts{3, 8, 0.01, /*iters_per_epoch=*/5};
  TrainResult a = train_gin(graphs, ds.labels(), cfg, ds.feature_dim, ds.num_classes, opts, 9);
  TrainResult b = train_gin(graphs, ds.labels(), cfg, ds.feature_dim, ds.num_classes, opts, 9);
  CHECK(a.loss_per_step.size() == 15);  // epochs x iters, not data passes
  CHECK(a.loss_per_step == b.loss_per_step);
  CHECK(a.params == b.params);
}
