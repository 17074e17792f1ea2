#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "dgnn/correction.hpp"
#include "dgnn/errors.hpp"
#include "dgnn/experiment.hpp"
#include "dgnn/gin.hpp"
#include "dgnn/graph.hpp"
#include "dgnn/noise.hpp"
#include "dgnn/training.hpp"
#include "dgnn/tu_loader.hpp"

namespace py = pybind11;
using namespace dgnn;

namespace {

py::array_t<double> matrix_to_numpy(const SquareMatrix& m) {
  py::array_t<double> out({m.n, m.n});
  auto buf = out.mutable_unchecked<2>();
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j < m.n; ++j) buf(i, j) = m.at(i, j);
  }
  return out;
}

SquareMatrix numpy_to_matrix(const py::array_t<double, py::array::c_style>& arr) {
  if (arr.ndim() != 2 || arr.shape(0) != arr.shape(1)) {
    throw ShapeError("expected a square 2-D array");
  }
  SquareMatrix m(static_cast<int>(arr.shape(0)));
  auto buf = arr.unchecked<2>();
  for (int i = 0; i < m.n; ++i) {
    for (int j = 0; j < m.n; ++j) m.at(i, j) = buf(i, j);
  }
  return m;
}

py::array_t<double> tensor_to_numpy(const Tensor& t) {
  py::array_t<double> out({t.rows(), t.cols()});
  auto buf = out.mutable_unchecked<2>();
  for (std::size_t i = 0; i < t.rows(); ++i) {
    for (std::size_t j = 0; j < t.cols(); ++j) buf(i, j) = t.at(i, j);
  }
  return out;
}

FeatureScheme scheme_from_string(const std::string& name, const RawDataset& raw,
                                 std::optional<std::size_t> degree_cap) {
  FeatureScheme scheme =
      name == "auto" ? FeatureScheme::auto_for(raw) : FeatureScheme::parse(name);
  if (degree_cap) scheme.degree_cap = degree_cap;
  return scheme;
}

GinConfig gin_config(int num_layers, int num_mlp_layers, int hidden_dim, bool epsilon_learnable,
                     const std::string& readout, bool graph_norm = false) {
  GinConfig cfg;
  cfg.num_layers = num_layers;
  cfg.num_mlp_layers = num_mlp_layers;
  cfg.hidden_dim = hidden_dim;
  cfg.epsilon_learnable = epsilon_learnable;
  cfg.graph_norm = graph_norm;
  if (readout == "sum-concat-all") {
    cfg.readout = GinConfig::Readout::SumConcatAllLayers;
  } else if (readout == "sum-last") {
    cfg.readout = GinConfig::Readout::SumLastLayer;
  } else {
    throw ConfigError("unknown readout '" + readout + "'");
  }
  return cfg;
}

struct PyModel {
  std::shared_ptr<ModelParams> params;
  std::vector<double> train_accuracy_per_epoch;
  std::vector<double> loss_per_step;
};

std::vector<const Graph*> graphs_at(const Dataset& ds, const std::vector<std::size_t>& indices) {
  std::vector<const Graph*> out;
  out.reserve(indices.size());
  for (std::size_t idx : indices) {
    if (idx >= ds.graphs.size()) throw ConfigError("graph index out of range");
    out.push_back(&ds.graphs[idx]);
  }
  return out;
}

py::dict fold_record_to_dict(const FoldRecord& rec) {
  py::dict d;
  d["fold"] = rec.fold;
  d["seed"] = rec.seed;
  d["ok"] = rec.ok();
  if (rec.ok()) {
    d["test_accuracy"] = rec.test_accuracy;
    d["train_accuracy_per_epoch"] = rec.train_accuracy_per_epoch;
    d["loss_per_step"] = rec.loss_per_step;
  } else {
    d["error"] = rec.error;
  }
  if (rec.estimator) {
    py::dict e;
    e["correction"] = matrix_to_numpy(rec.estimator->correction);
    e["condition_number"] = rec.estimator->condition_number;
    e["average_diagonal"] = rec.estimator->average_diagonal;
    e["l1_distance_to_noise"] = rec.estimator->l1_distance_to_noise;
    d["estimator"] = e;
  }
  d["train_indices"] = rec.train_indices;
  d["test_indices"] = rec.test_indices;
  d["corrupted_indices"] = rec.corrupted_indices;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Graph classification under symmetric label noise with loss correction";
  m.attr("__version__") = "0.1.0";

  py::register_exception<ShapeError>(m, "ShapeError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<IngestError>(m, "IngestError");
  py::register_exception<FormatError>(m, "FormatError");
  py::register_exception<SingularMatrixError>(m, "SingularMatrixError");
  py::register_exception<UsageError>(m, "UsageError");

  py::class_<NoiseMatrix>(m, "NoiseMatrix")
      .def_readonly("num_classes", &NoiseMatrix::num_classes)
      .def_readonly("rate", &NoiseMatrix::rate)
      .def_property_readonly("entries",
                             [](const NoiseMatrix& n) { return matrix_to_numpy(n.entries); })
      .def("__repr__", [](const NoiseMatrix& n) {
        return "NoiseMatrix(m=" + std::to_string(n.num_classes) +
               ", n=" + std::to_string(n.rate) + ")";
      });

  py::class_<CorrectionMatrix>(m, "CorrectionMatrix")
      .def_property_readonly(
          "entries", [](const CorrectionMatrix& c) { return matrix_to_numpy(c.entries); })
      .def_property_readonly(
          "inverse", [](const CorrectionMatrix& c) { return matrix_to_numpy(c.inverse); })
      .def_readonly("condition_number", &CorrectionMatrix::condition_number)
      .def_property_readonly("source",
                             [](const CorrectionMatrix& c) { return estimator_name(c.source); })
      .def_property_readonly("average_diagonal", &CorrectionMatrix::average_diagonal);

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("name", [](const Dataset& d) { return d.name; })
      .def_readonly("num_classes", &Dataset::num_classes)
      .def_readonly("feature_dim", &Dataset::feature_dim)
      .def("__len__", [](const Dataset& d) { return d.graphs.size(); })
      .def("labels", &Dataset::labels)
      .def("num_vertices",
           [](const Dataset& d, std::size_t i) { return d.graphs.at(i).num_vertices; })
      .def("neighbors", [](const Dataset& d, std::size_t i) { return d.graphs.at(i).neighbors; })
      .def("features",
           [](const Dataset& d, std::size_t i) { return tensor_to_numpy(d.graphs.at(i).features); })
      .def("summary", [](const Dataset& d) {
        const DatasetSummary s = dataset_summary(d);
        return py::make_tuple(s.num_graphs, s.num_classes, s.mean_vertices);
      });

  m.def(
      "load_dataset",
      [](const std::string& root, const std::string& name, const std::string& feature_scheme,
         std::optional<std::size_t> degree_cap) {
        RawDataset raw = parse_tu_dataset(root, name);
        return build_features(raw, scheme_from_string(feature_scheme, raw, degree_cap));
      },
      py::arg("root"), py::arg("name"), py::arg("feature_scheme") = "auto",
      py::arg("degree_cap") = std::nullopt,
      "Parse a TU-format dataset from root/name and build vertex features.");

  m.def("build_noise_matrix", &build_noise_matrix, py::arg("num_classes"), py::arg("rate"));

  m.def(
      "inject_noise",
      [](const std::vector<int>& labels, const NoiseMatrix& noise, std::uint64_t seed) {
        const NoiseInjection inj = inject_noise(labels, noise, seed);
        return py::make_tuple(inj.noisy_labels, inj.flipped);
      },
      py::arg("labels"), py::arg("noise"), py::arg("seed"),
      "Resample each label from its noise-matrix row; returns (noisy_labels, flipped_mask).");

  m.def(
      "entrywise_l1_distance",
      [](const py::array_t<double, py::array::c_style>& estimate, const NoiseMatrix& noise) {
        return entrywise_l1_distance(numpy_to_matrix(estimate), noise);
      },
      py::arg("estimate"), py::arg("noise"));

  m.def("cross_entropy_vector", &cross_entropy_vector, py::arg("probs"));

  m.def(
      "invert_correction",
      [](const py::array_t<double, py::array::c_style>& entries) {
        return invert_correction(numpy_to_matrix(entries), EstimatorKind::Anchor);
      },
      py::arg("entries"));

  m.def("identity_correction", &identity_correction, py::arg("num_classes"));
  m.def("estimate_exact", &estimate_exact, py::arg("noise"));

  m.def("backward_loss", &backward_loss, py::arg("probs"), py::arg("observed_label"),
        py::arg("correction"),
        "(C^-1 l(probs))[observed]; the backward-corrected surrogate loss.");

  m.def(
      "kfold_split",
      [](const std::vector<int>& labels, int k, std::uint64_t seed) {
        const KfoldResult kf = kfold_split(labels, k, seed);
        py::list folds;
        for (const FoldSplit& f : kf.folds) {
          folds.append(py::make_tuple(f.train_indices, f.test_indices));
        }
        return folds;
      },
      py::arg("labels"), py::arg("k"), py::arg("seed"));

  py::class_<PyModel>(m, "Model")
      .def_property_readonly("train_accuracy_per_epoch",
                             [](const PyModel& md) { return md.train_accuracy_per_epoch; })
      .def_property_readonly("loss_per_step",
                             [](const PyModel& md) { return md.loss_per_step; })
      .def("probs",
           [](const PyModel& md, const Dataset& ds, std::size_t i) {
             return model_probs(*md.params, ds.graphs.at(i));
           })
      .def("predict", [](const PyModel& md, const Dataset& ds, std::size_t i) {
        return predict(*md.params, ds.graphs.at(i));
      });

  m.def(
      "train_gin",
      [](const Dataset& ds, const std::vector<std::size_t>& indices,
         const std::vector<int>& labels, int epochs, int batch_size, double learning_rate,
         int num_layers, int num_mlp_layers, int hidden_dim, bool epsilon_learnable,
         const std::string& readout, std::uint64_t seed) {
        const GinConfig cfg =
            gin_config(num_layers, num_mlp_layers, hidden_dim, epsilon_learnable, readout);
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train_gin(graphs_at(ds, indices), labels, cfg, ds.feature_dim, ds.num_classes,
                        TrainOptions{epochs, batch_size, learning_rate}, seed);
        }
        PyModel out;
        out.params = std::make_shared<ModelParams>(std::move(r.params));
        out.train_accuracy_per_epoch = std::move(r.train_accuracy_per_epoch);
        out.loss_per_step = std::move(r.loss_per_step);
        return out;
      },
      py::arg("dataset"), py::arg("indices"), py::arg("labels"), py::arg("epochs") = 20,
      py::arg("batch_size") = 64, py::arg("learning_rate") = 0.01, py::arg("num_layers") = 5,
      py::arg("num_mlp_layers") = 2, py::arg("hidden_dim") = 64,
      py::arg("epsilon_learnable") = false, py::arg("readout") = "sum-concat-all",
      py::arg("seed") = 1,
      "Train a plain GIN on the given graphs/labels; labels may be noisy.");

  m.def(
      "evaluate",
      [](const PyModel& model, const Dataset& ds, const std::vector<std::size_t>& indices,
         const std::vector<int>& labels) {
        return evaluate(*model.params, graphs_at(ds, indices), labels);
      },
      py::arg("model"), py::arg("dataset"), py::arg("indices"), py::arg("labels"));

  m.def(
      "estimate_conservative",
      [](const PyModel& model, const Dataset& ds, const std::vector<std::size_t>& indices) {
        ModelParams& params = *model.params;
        return estimate_conservative(
            [&params](const Graph& g) { return model_probs(params, g); }, graphs_at(ds, indices),
            ds.num_classes);
      },
      py::arg("model"), py::arg("dataset"), py::arg("training_indices"));

  m.def(
      "estimate_anchor",
      [](const PyModel& model, const Dataset& ds, const std::vector<std::size_t>& anchor_indices) {
        ModelParams& params = *model.params;
        return estimate_anchor([&params](const Graph& g) { return model_probs(params, g); },
                               graphs_at(ds, anchor_indices));
      },
      py::arg("model"), py::arg("dataset"), py::arg("anchor_indices"),
      "Anchors: one trusted graph index per class, ordered by class.");

  m.def(
      "run_experiment",
      [](const Dataset& ds, const std::string& variant, double noise, int epochs, int batch_size,
         int iters_per_epoch, int k_folds, const std::vector<std::uint64_t>& seeds,
         double learning_rate,
         int num_layers, int num_mlp_layers, int hidden_dim, bool epsilon_learnable,
         const std::string& readout, const std::string& noise_scope, double blend,
         std::optional<std::vector<std::size_t>> anchor_ids, int jobs, bool graph_norm) {
        ExperimentConfig cfg;
        cfg.dataset_name = ds.name;
        cfg.variant = parse_variant(variant);
        cfg.noise_rate = noise;
        cfg.epochs = epochs;
        cfg.batch_size = batch_size;
        cfg.iters_per_epoch = iters_per_epoch;
        cfg.k_folds = k_folds;
        cfg.seeds = seeds;
        cfg.learning_rate = learning_rate;
        cfg.gin =
            gin_config(num_layers, num_mlp_layers, hidden_dim, epsilon_learnable, readout,
                       graph_norm);
        if (noise_scope == "per-fold") {
          cfg.noise_scope = NoiseScope::PerFold;
        } else if (noise_scope == "global") {
          cfg.noise_scope = NoiseScope::Global;
        } else {
          throw ConfigError("unknown noise scope '" + noise_scope + "'");
        }
        cfg.blend_lambda = blend;
        cfg.anchor_indices = std::move(anchor_ids);
        cfg.jobs = jobs;
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(ds, cfg);
        }
        py::dict out;
        out["dataset"] = ds.name;
        out["variant"] = variant_name(result.config.variant);
        out["noise"] = result.config.noise_rate;
        py::list records;
        for (const FoldRecord& rec : result.records) records.append(fold_record_to_dict(rec));
        out["records"] = records;
        out["ok_count"] = result.ok_count;
        out["partial"] = result.partial;
        if (result.ok_count > 0) {
          out["mean_test_accuracy"] = result.mean_test_accuracy;
          out["std_test_accuracy"] = result.std_test_accuracy;
        } else {
          out["mean_test_accuracy"] = py::none();
          out["std_test_accuracy"] = py::none();
        }
        return out;
      },
      py::arg("dataset"), py::arg("variant") = "gin", py::arg("noise") = 0.2,
      py::arg("epochs") = 20, py::arg("batch_size") = 64, py::arg("iters_per_epoch") = 0,
      py::arg("k_folds") = 10,
      py::arg("seeds") = std::vector<std::uint64_t>{1}, py::arg("learning_rate") = 0.01,
      py::arg("num_layers") = 5, py::arg("num_mlp_layers") = 2, py::arg("hidden_dim") = 64,
      py::arg("epsilon_learnable") = false, py::arg("readout") = "sum-concat-all",
      py::arg("noise_scope") = "per-fold", py::arg("blend") = 0.0,
      py::arg("anchor_ids") = std::nullopt, py::arg("jobs") = 1,
      py::arg("graph_norm") = false,
      "Run the full cross-validated noisy-label protocol and return a result dict.");
}
