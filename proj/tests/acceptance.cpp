// Acceptance suite: one line per criterion, nonzero exit if a gating
// criterion fails. Criteria that reference the published benchmark datasets
// run against real TU files when they are present under the data root
// (--data-root or DGNN_DATA_ROOT) and against deterministic synthetic
// stand-ins otherwise, at unchanged thresholds.

#include <cmath>
#include <cstring>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dgnn/correction.hpp"
#include "dgnn/errors.hpp"
#include "dgnn/experiment.hpp"
#include "dgnn/gin.hpp"
#include "dgnn/noise.hpp"
#include "dgnn/rng.hpp"
#include "dgnn/training.hpp"
#include "dgnn/tu_loader.hpp"
#include "support/testing.hpp"

using namespace dgnn;
namespace dt = dgnn::testing;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& detail, bool gating = true) {
  const char* tag = pass ? "[PASS]" : (gating ? "[FAIL]" : "[INFO]");
  std::cout << "criterion " << criterion << " " << tag << " " << detail << "\n" << std::flush;
  if (!pass && gating) ++g_failures;
}

void info(int criterion, const std::string& detail) {
  std::cout << "criterion " << criterion << " [INFO] " << detail << "\n" << std::flush;
}

SquareMatrix overconfident_matrix(int m, double diag) {
  SquareMatrix c(m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) c.at(i, j) = (i == j) ? diag : (1.0 - diag) / (m - 1);
  }
  return c;
}

// ---- criterion 1 -----------------------------------------------------------

void criterion_1() {
  const double expected[] = {0.76, 1.14, 1.90};
  const int ms[] = {2, 3, 5};
  bool ok = true;
  std::ostringstream detail;
  detail << "norm-table exactness:";
  for (int k = 0; k < 3; ++k) {
    const double got =
        entrywise_l1_distance(overconfident_matrix(ms[k], 0.99), build_noise_matrix(ms[k], 0.2));
    ok = ok && std::fabs(got - expected[k]) < 1e-9;
    detail << " m=" << ms[k] << " -> " << std::setprecision(12) << got;
  }
  report(1, ok, detail.str());
}

// ---- criterion 2 -----------------------------------------------------------

void criterion_2() {
  Rng rng(20260808);
  const int ms[] = {2, 3, 5};
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int m = ms[rng.uniform_index(3)];
    const double rate = rng.uniform(0.0, 0.4);
    const NoiseMatrix noise = build_noise_matrix(m, rate);
    const CorrectionMatrix corr = estimate_exact(noise);
    std::vector<double> probs(m);
    double total = 0.0;
    for (double& p : probs) {
      p = 0.02 + rng.uniform();
      total += p;
    }
    for (double& p : probs) p /= total;
    const int y = static_cast<int>(rng.uniform_index(m));
    double expectation = 0.0;
    for (int j = 0; j < m; ++j) expectation += noise.at(y, j) * backward_loss(probs, j, corr);
    worst = std::max(worst,
                     std::fabs(expectation - cross_entropy_vector(probs)[std::size_t(y)]));
  }
  std::ostringstream detail;
  detail << "backward-loss unbiasedness over 1000 random tuples: max deviation "
         << std::scientific << std::setprecision(3) << worst << " < 1e-10";
  report(2, worst < 1e-10, detail.str());
}

// ---- synthetic stand-ins ---------------------------------------------------

// Trees vs unicyclic graphs: separable from degree structure, diverse enough
// to memorize, sparse enough to train stably.
Dataset make_synthetic(const std::string& name, int num_graphs, std::uint64_t seed) {
  const auto root = dt::make_temp_dir("accept");
  dt::SyntheticSpec spec;
  spec.name = name;
  spec.num_graphs = num_graphs;
  spec.seed = seed;
  spec.structure = dt::SyntheticSpec::Structure::TreeCycle;
  spec.min_vertices = 8;
  spec.max_vertices = 20;
  dt::write_synthetic_tu(root, spec);
  RawDataset raw = parse_tu_dataset(root, name);
  return build_features(raw, FeatureScheme::auto_for(raw));
}

struct TrendData {
  Dataset dataset;
  std::string label;
  bool real = false;
};

TrendData resolve_dataset(const std::filesystem::path& data_root, const std::string& wanted,
                          const std::string& synth_name, std::uint64_t synth_seed) {
  if (!data_root.empty() && tu_dataset_present(data_root, wanted)) {
    RawDataset raw = parse_tu_dataset(data_root, wanted);
    return {build_features(raw, FeatureScheme::auto_for(raw)), wanted + " (real)", true};
  }
  return {make_synthetic(synth_name, 120, synth_seed),
          synth_name + " (synthetic stand-in; " + wanted + " not found at data root)", false};
}

int worker_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 10u));
}

ExperimentConfig protocol_config(const std::string& dataset_name, Variant variant, double noise,
                                 std::vector<std::uint64_t> seeds) {
  ExperimentConfig cfg;  // paper-fixed: epochs 20, layers 5, mlp 2, batch 64
  cfg.dataset_name = dataset_name;
  cfg.variant = variant;
  cfg.noise_rate = noise;
  cfg.seeds = std::move(seeds);
  cfg.jobs = worker_count();
  return cfg;
}

// Criteria 6-8 run the reference-faithful training profile: batch-style
// normalization and sampled mini-batches per epoch, which the published
// implementation uses and the fixed 20-epoch budget needs to reach the
// memorization regime Fig. 1 shows. Width is narrowed for single-core time.
ExperimentConfig fidelity_config(const std::string& dataset_name, Variant variant, double noise,
                                 std::vector<std::uint64_t> seeds) {
  ExperimentConfig cfg = protocol_config(dataset_name, variant, noise, std::move(seeds));
  cfg.gin.graph_norm = true;
  cfg.gin.hidden_dim = 32;
  cfg.iters_per_epoch = 30;
  return cfg;
}

// ---- criterion 3 -----------------------------------------------------------

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() &&
         (a.empty() || std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
}

void criterion_3(const Dataset& ds) {
  ExperimentConfig gin_cfg = protocol_config(ds.name, Variant::Gin, 0.0, {3, 4});
  gin_cfg.epochs = 6;
  gin_cfg.k_folds = 5;
  ExperimentConfig dgnn_cfg = gin_cfg;
  dgnn_cfg.variant = Variant::DgnnExact;

  const ExperimentResult gin = run_experiment(ds, gin_cfg);
  const ExperimentResult dgnn = run_experiment(ds, dgnn_cfg);
  bool ok = gin.records.size() == dgnn.records.size();
  std::size_t steps = 0;
  for (std::size_t i = 0; ok && i < gin.records.size(); ++i) {
    ok = gin.records[i].ok() && dgnn.records[i].ok() &&
         bitwise_equal(gin.records[i].loss_per_step, dgnn.records[i].loss_per_step) &&
         gin.records[i].test_accuracy == dgnn.records[i].test_accuracy;
    steps += gin.records[i].loss_per_step.size();
  }
  std::ostringstream detail;
  detail << "identity reduction: " << gin.records.size() << " folds x " << (steps ? steps : 0)
         << " total steps, D-GNN(C=I) trajectories bitwise equal to GIN: "
         << (ok ? "yes" : "NO");
  report(3, ok, detail.str());
}

// ---- criterion 4 -----------------------------------------------------------

void criterion_4() {
  Rng rng(424242);
  GinConfig cfg;
  cfg.num_layers = 2;
  cfg.num_mlp_layers = 2;
  cfg.hidden_dim = 5;
  double worst = 0.0;
  int trials = 0;
  for (; trials < 50; ++trials) {
    const int m = 2 + static_cast<int>(rng.uniform_index(2));
    Graph g;
    g.num_vertices = 2 + static_cast<std::uint32_t>(rng.uniform_index(7));  // <= 8
    g.neighbors.resize(g.num_vertices);
    for (std::uint32_t a = 0; a < g.num_vertices; ++a) {
      for (std::uint32_t b = a + 1; b < g.num_vertices; ++b) {
        if (rng.uniform() < 0.4) {
          g.neighbors[a].push_back(b);
          g.neighbors[b].push_back(a);
        }
      }
    }
    g.features = Tensor(g.num_vertices, 3);
    for (std::size_t i = 0; i < g.features.size(); ++i) g.features[i] = rng.uniform(-1.0, 1.0);

    ModelParams params = ModelParams::init(cfg, 3, m, rng.next_u64());
    for (std::size_t i = 0; i < params.classifier_weight.size(); ++i) {
      params.classifier_weight[i] = rng.uniform(-0.5, 0.5);
    }
    const CorrectionMatrix corr =
        estimate_exact(build_noise_matrix(m, rng.uniform(0.05, 0.35)));
    const int label = static_cast<int>(rng.uniform_index(m));

    Tape tape;
    const BoundParams bound = bind_params(tape, params);
    const GraphForward fwd = gin_forward(tape, g, bound, params);
    tape.backward(backward_loss_node(tape, fwd.probs, label, corr));

    for (Tensor* t : params.parameters()) {
      const std::vector<double> analytic = t->grad();
      auto f = [&](const std::vector<double>& values) {
        const std::vector<double> saved = t->data();
        t->data() = values;
        Tape t2;
        const BoundParams b2 = bind_params(t2, params);
        const GraphForward f2 = gin_forward(t2, g, b2, params);
        const double out = t2.value(backward_loss_node(t2, f2.probs, label, corr))[0];
        t->data() = saved;
        return out;
      };
      const std::vector<double> numeric = dt::finite_difference_gradient(f, t->data());
      worst = std::max(worst, dt::max_rel_error(analytic, numeric));
      t->reset_grad();
    }
  }
  std::ostringstream detail;
  detail << "gradient fidelity over " << trials << " random graphs (<= 8 vertices): max rel "
         << "error vs central differences " << std::scientific << std::setprecision(3) << worst
         << " < 1e-4";
  report(4, worst < 1e-4, detail.str());
}

// ---- criterion 5 -----------------------------------------------------------

void criterion_5() {
  Rng rng(550);
  GinConfig cfg;
  cfg.num_layers = 3;
  cfg.hidden_dim = 16;
  ModelParams params = ModelParams::init(cfg, 4, 3, 5150);
  for (std::size_t i = 0; i < params.classifier_weight.size(); ++i) {
    params.classifier_weight[i] = rng.uniform(-0.5, 0.5);
  }
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    Graph g;
    g.num_vertices = 3 + static_cast<std::uint32_t>(rng.uniform_index(8));
    g.neighbors.resize(g.num_vertices);
    for (std::uint32_t a = 0; a < g.num_vertices; ++a) {
      for (std::uint32_t b = a + 1; b < g.num_vertices; ++b) {
        if (rng.uniform() < 0.4) {
          g.neighbors[a].push_back(b);
          g.neighbors[b].push_back(a);
        }
      }
    }
    g.features = Tensor(g.num_vertices, 4);
    for (std::size_t i = 0; i < g.features.size(); ++i) g.features[i] = rng.uniform(-1.0, 1.0);

    std::vector<std::uint32_t> perm(g.num_vertices);
    for (std::uint32_t i = 0; i < g.num_vertices; ++i) perm[i] = i;
    rng.shuffle(perm);
    Graph pg;
    pg.num_vertices = g.num_vertices;
    pg.neighbors.resize(g.num_vertices);
    pg.features = Tensor(g.num_vertices, 4);
    for (std::uint32_t v = 0; v < g.num_vertices; ++v) {
      for (std::uint32_t u : g.neighbors[v]) pg.neighbors[perm[v]].push_back(perm[u]);
      for (std::size_t c = 0; c < 4; ++c) pg.features.at(perm[v], c) = g.features.at(v, c);
    }
    for (auto& nb : pg.neighbors) std::sort(nb.begin(), nb.end());

    const std::vector<double> a = model_logits(params, g);
    const std::vector<double> b = model_logits(params, pg);
    for (std::size_t j = 0; j < a.size(); ++j) worst = std::max(worst, std::fabs(a[j] - b[j]));
  }
  std::ostringstream detail;
  detail << "permutation invariance over 100 graph/permutation pairs: max |delta logit| "
         << std::scientific << std::setprecision(3) << worst << " < 1e-9";
  report(5, worst < 1e-9, detail.str());
}

// ---- criteria 6-8: the training protocol ----------------------------------

struct TrendPoint {
  double train_mean = 0.0;
  double test_mean = 0.0;
  std::size_t failures = 0;
};

TrendPoint trend_point(const Dataset& ds, Variant variant, double noise,
                       const std::vector<std::uint64_t>& seeds) {
  const ExperimentConfig cfg = fidelity_config(ds.name, variant, noise, seeds);
  const ExperimentResult res = run_experiment(ds, cfg);
  TrendPoint p;
  std::size_t n = 0;
  for (const FoldRecord& rec : res.records) {
    if (!rec.ok()) {
      ++p.failures;
      continue;
    }
    p.train_mean += rec.train_accuracy_per_epoch.back();
    p.test_mean += rec.test_accuracy;
    ++n;
  }
  if (n > 0) {
    p.train_mean /= static_cast<double>(n);
    p.test_mean /= static_cast<double>(n);
  }
  return p;
}

TrendPoint criterion_6(const TrendData& trend) {
  info(6, "dataset: " + trend.label +
              ", GIN, n in {0, 0.2, 0.4}, 10-fold x 3 seeds"
              " (fidelity profile: graph-norm, sampled batches, hidden 32)");
  const std::vector<std::uint64_t> seeds = {1, 2, 3};
  const TrendPoint p0 = trend_point(trend.dataset, Variant::Gin, 0.0, seeds);
  const TrendPoint p2 = trend_point(trend.dataset, Variant::Gin, 0.2, seeds);
  const TrendPoint p4 = trend_point(trend.dataset, Variant::Gin, 0.4, seeds);
  std::ostringstream detail;
  detail << std::fixed << std::setprecision(4) << "fig-1 trend: train acc " << p0.train_mean
         << " / " << p2.train_mean << " / " << p4.train_mean << ", test acc " << p0.test_mean
         << " / " << p2.test_mean << " / " << p4.test_mean << " at n = 0 / 0.2 / 0.4; ";
  const bool train_holds =
      p2.train_mean >= p0.train_mean - 0.05 && p4.train_mean >= p0.train_mean - 0.05;
  const bool gap_grows = p0.test_mean - p4.test_mean >= 0.05;
  detail << "train within 0.05 of n=0: " << (train_holds ? "yes" : "NO")
         << "; test drop 0 -> 0.4 = " << std::setprecision(4) << (p0.test_mean - p4.test_mean)
         << " >= 0.05: " << (gap_grows ? "yes" : "NO");
  report(6, train_holds && gap_grows && p0.failures + p2.failures + p4.failures == 0,
         detail.str());
  return p2;
}

void criterion_7(const TrendData& trend) {
  info(7, "dataset: " + trend.label + ", n = 0.2, 10-fold, GIN vs D-GNN-E");
  const std::vector<std::uint64_t> seeds = {1};
  const TrendPoint gin = trend_point(trend.dataset, Variant::Gin, 0.2, seeds);
  const TrendPoint dgnn = trend_point(trend.dataset, Variant::DgnnExact, 0.2, seeds);
  std::ostringstream detail;
  detail << std::fixed << std::setprecision(4) << "directional reproduction: D-GNN-E mean test "
         << dgnn.test_mean << " vs GIN " << gin.test_mean << " (paper gap +0.066); require "
         << "D-GNN-E >= GIN - 0.01";
  report(7, dgnn.test_mean >= gin.test_mean - 0.01 && gin.failures + dgnn.failures == 0,
         detail.str());
}

void criterion_8(const TrendData& trend, const TrendPoint& gin_at_02) {
  std::ostringstream detail;
  detail << std::fixed << std::setprecision(4) << "MUTAG ballpark (informational, non-gating): "
         << trend.label << " GIN mean test accuracy at n=0.2 is " << gin_at_02.test_mean
         << "; published value .7327 +- 0.10";
  if (trend.real) {
    report(8, std::fabs(gin_at_02.test_mean - 0.7327) <= 0.10, detail.str(), /*gating=*/false);
  } else {
    report(8, true, detail.str() + " (band not meaningful on the stand-in)", /*gating=*/false);
  }
}

// ---- criterion 9 -----------------------------------------------------------

void criterion_9(const Dataset& ds) {
  // a freshly initialized model has a zero classifier, so every graph maps to
  // the uniform distribution: the conservative rows coincide
  GinConfig cfg;
  ModelParams params = ModelParams::init(cfg, ds.feature_dim, ds.num_classes, 99);
  std::vector<const Graph*> graphs;
  for (const Graph& g : ds.graphs) graphs.push_back(&g);
  bool raised = false;
  try {
    estimate_conservative([&params](const Graph& g) { return model_probs(params, g); }, graphs,
                          ds.num_classes);
  } catch (const SingularMatrixError&) {
    raised = true;
  }

  ExperimentConfig run_cfg = protocol_config(ds.name, Variant::DgnnConservative, 0.2, {1});
  run_cfg.epochs = 0;  // keeps the phase-1 model constant
  run_cfg.k_folds = 5;
  const ExperimentResult res = run_experiment(ds, run_cfg);
  bool recorded = res.partial && res.ok_count == 0;
  for (const FoldRecord& rec : res.records) {
    recorded = recorded && rec.error.find("SingularMatrixError") != std::string::npos;
  }
  std::ostringstream detail;
  detail << "estimator degeneracy: constant-output model raises SingularMatrixError ("
         << (raised ? "yes" : "NO") << ") and the run records it per fold ("
         << (recorded ? "yes" : "NO") << ")";
  report(9, raised && recorded, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path data_root = dt::real_data_root();
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--data-root") data_root = argv[i + 1];
  }
  std::cout << "acceptance suite (data root: "
            << (data_root.empty() ? "<none - synthetic stand-ins>" : data_root.string())
            << ", workers: " << worker_count() << ")\n";

  criterion_1();
  criterion_2();

  const Dataset small = make_synthetic("SYNTH-S", 60, 808);
  criterion_3(small);
  criterion_4();
  criterion_5();

  const TrendData mutag_like = resolve_dataset(data_root, "MUTAG", "SYNTH-A", 101);
  const TrendPoint gin_at_02 = criterion_6(mutag_like);
  const TrendData proteins_like = resolve_dataset(data_root, "PROTEINS", "SYNTH-B", 202);
  criterion_7(proteins_like);
  criterion_8(mutag_like, gin_at_02);
  criterion_9(small);

  if (g_failures == 0) {
    std::cout << "RESULT: all gating criteria passed\n";
    return 0;
  }
  std::cout << "RESULT: " << g_failures << " gating criteria FAILED\n";
  return 1;
}
