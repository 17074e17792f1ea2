// dgnn command line front end: inspect / run / estimate / report.
//
// Exit codes are a stable contract: 0 success, 1 runtime failure (partial
// results are preserved), 2 usage or configuration error.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgnn/errors.hpp"
#include "dgnn/experiment.hpp"
#include "dgnn/graph.hpp"
#include "dgnn/noise.hpp"
#include "dgnn/rng.hpp"
#include "dgnn/training.hpp"
#include "dgnn/tu_loader.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace dgnn;

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

std::string iso8601_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::string fnv1a_hex(const fs::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) return "unreadable";
  std::uint64_t hash = 1469598103934665603ULL;
  char buffer[1 << 16];
  while (is.read(buffer, sizeof(buffer)) || is.gcount() > 0) {
    for (std::streamsize i = 0; i < is.gcount(); ++i) {
      hash ^= static_cast<unsigned char>(buffer[i]);
      hash *= 1099511628211ULL;
    }
  }
  std::ostringstream os;
  os << "fnv1a:" << std::hex << std::setw(16) << std::setfill('0') << hash;
  return os.str();
}

// Everything that determines a run; round-trips through JSON so a manifest
// can replay it byte for byte.
struct RunSettings {
  std::string data_root;
  std::string dataset;
  std::string feature_scheme = "auto";
  std::optional<std::size_t> degree_cap;
  ExperimentConfig experiment;

  json to_json() const {
    json j;
    j["data_root"] = data_root;
    j["dataset"] = dataset;
    j["feature_scheme"] = feature_scheme;
    if (degree_cap) j["degree_cap"] = *degree_cap;
    j["variant"] = variant_name(experiment.variant);
    j["noise"] = experiment.noise_rate;
    j["epochs"] = experiment.epochs;
    j["batch_size"] = experiment.batch_size;
    j["iters_per_epoch"] = experiment.iters_per_epoch;
    j["k_folds"] = experiment.k_folds;
    j["seeds"] = experiment.seeds;
    j["learning_rate"] = experiment.learning_rate;
    j["noise_scope"] = experiment.noise_scope == NoiseScope::PerFold ? "per-fold" : "global";
    j["blend"] = experiment.blend_lambda;
    j["jobs"] = experiment.jobs;
    j["num_layers"] = experiment.gin.num_layers;
    j["num_mlp_layers"] = experiment.gin.num_mlp_layers;
    j["hidden_dim"] = experiment.gin.hidden_dim;
    j["epsilon_learnable"] = experiment.gin.epsilon_learnable;
    j["graph_norm"] = experiment.gin.graph_norm;
    j["readout"] = experiment.gin.readout == GinConfig::Readout::SumConcatAllLayers
                       ? "sum-concat-all"
                       : "sum-last";
    if (experiment.anchor_indices) j["anchor_ids"] = *experiment.anchor_indices;
    return j;
  }

  void overlay(const json& j) {
    if (j.contains("data_root")) data_root = j.at("data_root").get<std::string>();
    if (j.contains("dataset")) dataset = j.at("dataset").get<std::string>();
    if (j.contains("feature_scheme")) {
      feature_scheme = j.at("feature_scheme").get<std::string>();
    }
    if (j.contains("degree_cap")) degree_cap = j.at("degree_cap").get<std::size_t>();
    if (j.contains("variant")) experiment.variant = parse_variant(j.at("variant"));
    if (j.contains("noise")) experiment.noise_rate = j.at("noise").get<double>();
    if (j.contains("epochs")) experiment.epochs = j.at("epochs").get<int>();
    if (j.contains("batch_size")) experiment.batch_size = j.at("batch_size").get<int>();
    if (j.contains("iters_per_epoch")) {
      experiment.iters_per_epoch = j.at("iters_per_epoch").get<int>();
    }
    if (j.contains("k_folds")) experiment.k_folds = j.at("k_folds").get<int>();
    if (j.contains("seeds")) {
      experiment.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    }
    if (j.contains("learning_rate")) {
      experiment.learning_rate = j.at("learning_rate").get<double>();
    }
    if (j.contains("noise_scope")) {
      const std::string scope = j.at("noise_scope").get<std::string>();
      if (scope != "per-fold" && scope != "global") {
        throw ConfigError("unknown noise scope '" + scope + "'");
      }
      experiment.noise_scope = scope == "per-fold" ? NoiseScope::PerFold : NoiseScope::Global;
    }
    if (j.contains("blend")) experiment.blend_lambda = j.at("blend").get<double>();
    if (j.contains("jobs")) experiment.jobs = j.at("jobs").get<int>();
    if (j.contains("num_layers")) experiment.gin.num_layers = j.at("num_layers").get<int>();
    if (j.contains("num_mlp_layers")) {
      experiment.gin.num_mlp_layers = j.at("num_mlp_layers").get<int>();
    }
    if (j.contains("hidden_dim")) experiment.gin.hidden_dim = j.at("hidden_dim").get<int>();
    if (j.contains("epsilon_learnable")) {
      experiment.gin.epsilon_learnable = j.at("epsilon_learnable").get<bool>();
    }
    if (j.contains("graph_norm")) experiment.gin.graph_norm = j.at("graph_norm").get<bool>();
    if (j.contains("readout")) {
      const std::string mode = j.at("readout").get<std::string>();
      if (mode != "sum-concat-all" && mode != "sum-last") {
        throw ConfigError("unknown readout '" + mode + "'");
      }
      experiment.gin.readout = mode == "sum-concat-all" ? GinConfig::Readout::SumConcatAllLayers
                                                        : GinConfig::Readout::SumLastLayer;
    }
    if (j.contains("anchor_ids")) {
      experiment.anchor_indices = j.at("anchor_ids").get<std::vector<std::size_t>>();
    }
  }
};

// CLI flag holders; only flags the user actually passed overlay the settings.
struct RunFlags {
  std::optional<std::string> data_root, dataset, feature_scheme, variant, noise_scope, readout;
  std::optional<double> noise, lr, blend;
  std::optional<int> epochs, batch_size, iters_per_epoch, k_folds, jobs, num_layers,
      num_mlp_layers, hidden_dim;
  std::optional<std::size_t> degree_cap;
  std::vector<std::uint64_t> seeds;
  std::vector<std::size_t> anchor_ids;
  bool epsilon_learnable = false;
  bool graph_norm = false;

  void apply(RunSettings& s) const {
    if (data_root) s.data_root = *data_root;
    if (dataset) s.dataset = *dataset;
    if (feature_scheme) s.feature_scheme = *feature_scheme;
    if (degree_cap) s.degree_cap = *degree_cap;
    if (variant) s.experiment.variant = parse_variant(*variant);
    if (noise) s.experiment.noise_rate = *noise;
    if (epochs) s.experiment.epochs = *epochs;
    if (batch_size) s.experiment.batch_size = *batch_size;
    if (iters_per_epoch) s.experiment.iters_per_epoch = *iters_per_epoch;
    if (k_folds) s.experiment.k_folds = *k_folds;
    if (!seeds.empty()) s.experiment.seeds = seeds;
    if (lr) s.experiment.learning_rate = *lr;
    if (noise_scope) {
      s.experiment.noise_scope =
          *noise_scope == "global" ? NoiseScope::Global : NoiseScope::PerFold;
    }
    if (blend) s.experiment.blend_lambda = *blend;
    if (jobs) s.experiment.jobs = *jobs;
    if (num_layers) s.experiment.gin.num_layers = *num_layers;
    if (num_mlp_layers) s.experiment.gin.num_mlp_layers = *num_mlp_layers;
    if (hidden_dim) s.experiment.gin.hidden_dim = *hidden_dim;
    if (epsilon_learnable) s.experiment.gin.epsilon_learnable = true;
    if (graph_norm) s.experiment.gin.graph_norm = true;
    if (readout) {
      s.experiment.gin.readout = *readout == "sum-last"
                                     ? GinConfig::Readout::SumLastLayer
                                     : GinConfig::Readout::SumConcatAllLayers;
    }
    if (!anchor_ids.empty()) s.experiment.anchor_indices = anchor_ids;
  }
};

std::string default_data_root() {
  const char* env = std::getenv("DGNN_DATA_ROOT");
  return env ? env : "";
}

FeatureScheme resolve_scheme(const RunSettings& s, const RawDataset& raw) {
  FeatureScheme scheme = s.feature_scheme == "auto" ? FeatureScheme::auto_for(raw)
                                                    : FeatureScheme::parse(s.feature_scheme);
  if (s.degree_cap) scheme.degree_cap = s.degree_cap;
  return scheme;
}

Dataset load_tu(const RunSettings& s, FeatureScheme* scheme_out = nullptr) {
  if (s.data_root.empty()) {
    throw ConfigError("no data root: pass --data-root or set DGNN_DATA_ROOT");
  }
  if (s.dataset.empty()) throw ConfigError("--dataset is required");
  RawDataset raw = parse_tu_dataset(s.data_root, s.dataset);
  const FeatureScheme scheme = resolve_scheme(s, raw);
  if (scheme_out) *scheme_out = scheme;
  return build_features(raw, scheme);
}

json checksums_json(const RunSettings& s) {
  json j;
  const fs::path dir = tu_dataset_dir(s.data_root, s.dataset);
  for (const char* suffix :
       {"_A.txt", "_graph_indicator.txt", "_graph_labels.txt", "_node_labels.txt"}) {
    const fs::path file = dir / (s.dataset + suffix);
    if (fs::exists(file)) j[s.dataset + suffix] = fnv1a_hex(file);
  }
  return j;
}

int cmd_inspect(const RunSettings& settings) {
  const Dataset ds = load_tu(settings);
  const DatasetSummary s = dataset_summary(ds);
  std::cout << s.num_graphs << " graphs, " << s.num_classes << " classes, avg |V| "
            << std::fixed << std::setprecision(1) << s.mean_vertices << "\n";
  return kExitOk;
}

int cmd_run(RunSettings settings, const fs::path& out_dir, bool force) {
  if (out_dir.empty()) throw ConfigError("--out is required");
  if (fs::exists(out_dir) && !fs::is_empty(out_dir) && !force) {
    throw ConfigError("output directory " + out_dir.string() +
                      " already has contents; pass --force to overwrite");
  }
  settings.experiment.validate();

  FeatureScheme scheme;
  const Dataset ds = load_tu(settings, &scheme);
  settings.experiment.dataset_name = settings.dataset;

  fs::create_directories(out_dir);
  fs::create_directories(out_dir / "noise");

  const ExperimentResult result = run_experiment(ds, settings.experiment);

  write_results_json(result, out_dir / "results.json");
  write_results_csv(result, out_dir / "results.csv");
  write_summary_markdown(result, out_dir / "summary.md");

  // per-fold corruption audit trail
  const std::vector<int> clean = ds.labels();
  for (const FoldRecord& rec : result.records) {
    std::vector<int> clean_train, noisy_train;
    for (std::size_t i = 0; i < rec.train_indices.size(); ++i) {
      clean_train.push_back(clean[rec.train_indices[i]]);
    }
    write_noise_audit_csv(out_dir / "noise" /
                              ("seed" + std::to_string(rec.seed) + "_fold" +
                               std::to_string(rec.fold) + ".csv"),
                          rec.train_indices, clean_train, rec.noisy_labels);
  }

  json manifest;
  manifest["config"] = settings.to_json();
  manifest["created_utc"] = iso8601_now();
  manifest["dataset_checksums"] = checksums_json(settings);
  manifest["feature_scheme_resolved"] = scheme.describe();
  manifest["outputs"] = {
      {"results_csv", "results.csv"},
      {"results_json", "results.json"},
      {"summary_md", "summary.md"},
  };
  manifest["tool"] = "dgnn";
  manifest["tool_version"] = kToolVersion;
  json errors = json::array();
  for (const FoldRecord& rec : result.records) {
    if (!rec.ok()) {
      errors.push_back({{"fold", rec.fold}, {"seed", rec.seed}, {"error", rec.error}});
    }
  }
  manifest["errors"] = errors;
  manifest["status"] = result.ok_count == result.records.size() ? "ok"
                       : result.ok_count > 0                    ? "partial"
                                                                : "failed";
  if (result.ok_count > 0) {
    manifest["aggregate"] = {{"mean_test_accuracy", result.mean_test_accuracy},
                             {"std_test_accuracy", result.std_test_accuracy}};
  }
  std::ofstream(out_dir / "manifest.json") << manifest.dump(2) << "\n";

  if (result.partial) {
    std::cerr << (result.records.size() - result.ok_count) << " of " << result.records.size()
              << " folds failed; see manifest.json\n";
    return kExitRuntime;
  }
  std::cout << "mean test accuracy " << std::fixed << std::setprecision(4)
            << result.mean_test_accuracy << " (std " << result.std_test_accuracy << ") over "
            << result.records.size() << " folds -> " << out_dir.string() << "\n";
  return kExitOk;
}

int cmd_estimate(const RunSettings& settings, const std::string& method, std::uint64_t seed,
                 const fs::path& out_file) {
  const Dataset ds = load_tu(settings);
  const NoiseMatrix noise = build_noise_matrix(ds.num_classes, settings.experiment.noise_rate);

  EstimatorKind kind;
  if (method == "conservative") {
    kind = EstimatorKind::Conservative;
  } else if (method == "anchor") {
    kind = EstimatorKind::Anchor;
  } else if (method == "exact") {
    kind = EstimatorKind::Exact;
  } else {
    throw ConfigError("unknown method '" + method +
                      "' (expected conservative, anchor or exact)");
  }

  CorrectionMatrix correction;
  if (kind == EstimatorKind::Exact) {
    correction = estimate_exact(noise);
  } else {
    // hold out fold 0 of a k-fold split; train phase 1 on the corrupted rest
    const KfoldResult kf =
        kfold_split(ds.labels(), settings.experiment.k_folds, derive_seed(seed, {0x666f6c64}));
    const FoldSplit& split = kf.folds[0];
    std::vector<const Graph*> train_graphs;
    std::vector<int> train_clean;
    for (std::size_t idx : split.train_indices) {
      train_graphs.push_back(&ds.graphs[idx]);
      train_clean.push_back(ds.graphs[idx].label);
    }
    const NoiseInjection inj =
        inject_noise(train_clean, noise, derive_seed(seed, {0x6e6f6973}));
    TrainResult phase1 =
        train_gin(train_graphs, inj.noisy_labels, settings.experiment.gin, ds.feature_dim,
                  ds.num_classes, settings.experiment.train_options(),
                  derive_seed(seed, {0x7472616e, 0}));
    ModelParams& params = phase1.params;
    const GraphProbsFn probs_fn = [&params](const Graph& g) { return model_probs(params, g); };
    SquareMatrix entries;
    if (kind == EstimatorKind::Conservative) {
      entries = conservative_entries(probs_fn, train_graphs, ds.num_classes);
    } else {
      std::vector<const Graph*> anchors(ds.num_classes, nullptr);
      for (std::size_t idx : split.test_indices) {
        const int cls = ds.graphs[idx].label;
        if (anchors[cls] == nullptr) anchors[cls] = &ds.graphs[idx];
      }
      entries = anchor_entries(probs_fn, anchors);
    }
    if (settings.experiment.blend_lambda > 0.0) {
      entries = blend_with_identity(std::move(entries), settings.experiment.blend_lambda);
    }
    correction = invert_correction(std::move(entries), kind);
  }

  json j;
  j["dataset"] = settings.dataset;
  j["method"] = method;
  j["noise"] = settings.experiment.noise_rate;
  json rows = json::array();
  json inv_rows = json::array();
  for (int i = 0; i < correction.entries.n; ++i) {
    rows.push_back(correction.entries.row(i));
    inv_rows.push_back(correction.inverse.row(i));
  }
  j["correction"] = rows;
  j["correction_inverse"] = inv_rows;
  j["condition_number"] = correction.condition_number;
  j["average_diagonal"] = correction.average_diagonal();
  j["l1_distance_to_noise"] = entrywise_l1_distance(correction.entries, noise);
  std::cout << j.dump(2) << "\n";
  if (!out_file.empty()) std::ofstream(out_file) << j.dump(2) << "\n";
  return kExitOk;
}

struct LoadedRun {
  fs::path dir;
  std::string created;
  std::string dataset;
  std::string variant;
  double noise = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t folds = 0;
  std::size_t failures = 0;
  std::string status;
};

int cmd_report(const std::vector<std::string>& run_dirs, const fs::path& out_md,
               const fs::path& out_csv) {
  std::vector<LoadedRun> runs;
  std::vector<std::string> broken;
  std::vector<std::string> notes;

  for (const std::string& dir : run_dirs) {
    try {
      std::ifstream mf(fs::path(dir) / "manifest.json");
      std::ifstream rf(fs::path(dir) / "results.json");
      if (!mf || !rf) throw IngestError("missing manifest.json or results.json");
      const json manifest = json::parse(mf);
      const json results = json::parse(rf);
      LoadedRun run;
      run.dir = dir;
      run.created = manifest.value("created_utc", "");
      run.dataset = manifest.at("config").at("dataset").get<std::string>();
      run.variant = manifest.at("config").at("variant").get<std::string>();
      run.noise = manifest.at("config").at("noise").get<double>();
      run.status = manifest.value("status", "?");
      const json& agg = results.at("aggregate");
      run.folds = results.at("records").size();
      run.failures = run.folds - agg.at("ok_count").get<std::size_t>();
      if (!agg.at("mean_test_accuracy").is_null()) {
        run.mean = agg.at("mean_test_accuracy").get<double>();
        run.stddev = agg.at("std_test_accuracy").get<double>();
      } else {
        run.mean = std::nan("");
        run.stddev = std::nan("");
      }
      runs.push_back(std::move(run));
    } catch (const std::exception& e) {
      broken.push_back(dir + ": " + e.what());
    }
  }

  // duplicate (dataset, variant, noise) -> latest created_utc wins
  std::map<std::string, LoadedRun> chosen;
  for (const LoadedRun& run : runs) {
    std::ostringstream key;
    key << run.dataset << "|" << run.variant << "|" << run.noise;
    auto it = chosen.find(key.str());
    if (it == chosen.end()) {
      chosen.emplace(key.str(), run);
    } else if (run.created >= it->second.created) {
      notes.push_back("duplicate run for " + key.str() + ": kept " + run.dir.string() +
                      " (newer), dropped " + it->second.dir.string());
      it->second = run;
    } else {
      notes.push_back("duplicate run for " + key.str() + ": kept " + it->second.dir.string() +
                      " (newer), dropped " + run.dir.string());
    }
  }

  // gin baseline per (dataset, noise) for the improvement flag
  std::map<std::string, double> gin_mean;
  for (const auto& [key, run] : chosen) {
    if (run.variant == "gin" && std::isfinite(run.mean)) {
      std::ostringstream base;
      base << run.dataset << "|" << run.noise;
      gin_mean[base.str()] = run.mean;
    }
  }

  std::ostringstream md;
  md << "# Comparison report\n\n";
  md << "| dataset | variant | noise | folds | mean test acc | std | failures |\n";
  md << "|---|---|---|---|---|---|---|\n";
  std::ostringstream csv;
  csv << "dataset,variant,noise,folds,mean_test_accuracy,std_test_accuracy,failures,improved\n";
  for (const auto& [key, run] : chosen) {
    std::ostringstream base;
    base << run.dataset << "|" << run.noise;
    const auto gin_it = gin_mean.find(base.str());
    const bool improved = run.variant != "gin" && gin_it != gin_mean.end() &&
                          std::isfinite(run.mean) && run.mean > gin_it->second;
    std::ostringstream mean_txt;
    if (std::isfinite(run.mean)) {
      mean_txt << std::fixed << std::setprecision(4) << run.mean;
    } else {
      mean_txt << "n/a";
    }
    md << "| " << run.dataset << " | " << run.variant << " | " << run.noise << " | "
       << run.folds << " | " << (improved ? "**" + mean_txt.str() + "**" : mean_txt.str())
       << " | ";
    if (std::isfinite(run.stddev)) {
      md << std::fixed << std::setprecision(4) << run.stddev;
    } else {
      md << "n/a";
    }
    md << " | " << run.failures << " |\n";
    csv << run.dataset << "," << run.variant << "," << run.noise << "," << run.folds << ",";
    if (std::isfinite(run.mean)) {
      csv << std::setprecision(17) << run.mean << "," << run.stddev;
    } else {
      csv << ",";
    }
    csv << "," << run.failures << "," << (improved ? 1 : 0) << "\n";
  }
  if (!notes.empty()) {
    md << "\n## Notes\n\n";
    for (const std::string& n : notes) md << "- " << n << "\n";
  }
  if (!broken.empty()) {
    md << "\n## Errors\n\n";
    for (const std::string& b : broken) md << "- " << b << "\n";
  }

  if (out_md.empty()) {
    std::cout << md.str();
  } else {
    std::ofstream(out_md) << md.str();
  }
  if (!out_csv.empty()) std::ofstream(out_csv) << csv.str();
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dgnn: graph classification under symmetric label noise with loss correction"};
  app.require_subcommand(1);

  RunFlags flags;
  std::string out_dir;
  std::string config_file;
  std::string manifest_file;
  std::string method = "exact";
  std::string report_out_md, report_out_csv;
  std::vector<std::string> report_runs;
  std::uint64_t estimate_seed = 1;
  std::string estimate_out;
  bool force = false;

  auto add_data_flags = [&](CLI::App* cmd) {
    cmd->add_option("--data-root", flags.data_root, "TU dataset root (default $DGNN_DATA_ROOT)");
    cmd->add_option("--dataset", flags.dataset, "dataset name, e.g. MUTAG");
    cmd->add_option("--feature-scheme", flags.feature_scheme,
                    "auto | node-labels | degree | constant");
    cmd->add_option("--degree-cap", flags.degree_cap, "cap for degree one-hot buckets");
  };
  auto add_model_flags = [&](CLI::App* cmd) {
    cmd->add_option("--epochs", flags.epochs, "training epochs (default 20)");
    cmd->add_option("--batch-size", flags.batch_size, "mini-batch size (default 64)");
    cmd->add_option("--iters-per-epoch", flags.iters_per_epoch,
                    "sampled mini-batches per epoch (default 0 = one pass over the data)");
    cmd->add_option("--k-folds", flags.k_folds, "cross-validation folds (default 10)");
    cmd->add_option("--lr", flags.lr, "Adam learning rate (default 0.01)");
    cmd->add_option("--num-layers", flags.num_layers, "message-passing layers (default 5)");
    cmd->add_option("--num-mlp-layers", flags.num_mlp_layers, "MLP depth per layer (default 2)");
    cmd->add_option("--hidden-dim", flags.hidden_dim, "hidden width (default 64)");
    cmd->add_flag("--learnable-epsilon", flags.epsilon_learnable, "train the GIN epsilons");
    cmd->add_flag("--graph-norm", flags.graph_norm,
                  "per-graph channel normalization inside each MLP");
    cmd->add_option("--readout", flags.readout, "sum-concat-all | sum-last");
    cmd->add_option("--blend", flags.blend, "blend estimated C with identity (lambda)");
  };

  CLI::App* inspect = app.add_subcommand("inspect", "print dataset summary");
  add_data_flags(inspect);

  CLI::App* run = app.add_subcommand("run", "run the cross-validated experiment");
  add_data_flags(run);
  add_model_flags(run);
  run->add_option("--variant", flags.variant, "gin | dgnn-c | dgnn-a | dgnn-e");
  run->add_option("--noise", flags.noise, "symmetric corruption rate n in [0,1]");
  run->add_option("--seeds", flags.seeds, "list of seeds (default 1)")->delimiter(',');
  run->add_option("--noise-scope", flags.noise_scope, "per-fold | global")
      ->check(CLI::IsMember({"per-fold", "global"}));
  run->add_option("--anchor-ids", flags.anchor_ids,
                  "anchor graph indices, one per class, ordered by class")
      ->delimiter(',');
  run->add_option("--jobs", flags.jobs, "max concurrent fold workers (default 1)");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--force", force, "overwrite a non-empty output directory");
  run->add_option("--config", config_file, "JSON config file (CLI flags win)");
  run->add_option("--from-manifest", manifest_file, "replay the config of a previous run");

  CLI::App* estimate = app.add_subcommand("estimate", "estimate C and its distance to N");
  add_data_flags(estimate);
  add_model_flags(estimate);
  estimate->add_option("--noise", flags.noise, "symmetric corruption rate n in [0,1]");
  estimate->add_option("--method", method, "conservative | anchor | exact")->required();
  estimate->add_option("--seed", estimate_seed, "seed for the phase-1 training");
  estimate->add_option("--out", estimate_out, "also write the JSON to this file");

  CLI::App* report = app.add_subcommand("report", "aggregate run directories into one table");
  report->add_option("--runs", report_runs, "run directories")->expected(-1);
  report->add_option("--out", report_out_md, "write markdown here instead of stdout");
  report->add_option("--csv", report_out_csv, "also write a CSV table here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      return app.exit(e);
    }
    std::cerr << e.what() << "\n";
    return kExitUsage;
  }

  try {
    RunSettings settings;
    settings.data_root = default_data_root();
    if (run->parsed()) {
      if (!manifest_file.empty()) {
        std::ifstream mf(manifest_file);
        if (!mf) throw ConfigError("cannot read manifest " + manifest_file);
        settings.overlay(json::parse(mf).at("config"));
      }
      if (!config_file.empty()) {
        std::ifstream cf(config_file);
        if (!cf) throw ConfigError("cannot read config " + config_file);
        settings.overlay(json::parse(cf));
      }
      flags.apply(settings);
      return cmd_run(std::move(settings), out_dir, force);
    }
    if (inspect->parsed()) {
      flags.apply(settings);
      return cmd_inspect(settings);
    }
    if (estimate->parsed()) {
      flags.apply(settings);
      return cmd_estimate(settings, method, estimate_seed, estimate_out);
    }
    if (report->parsed()) {
      return cmd_report(report_runs, report_out_md, report_out_csv);
    }
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const IngestError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}
