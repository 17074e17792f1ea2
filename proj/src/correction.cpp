#include "dgnn/correction.hpp"

#include <cmath>

#include "dgnn/errors.hpp"

namespace dgnn {

std::string estimator_name(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::Conservative:
      return "conservative";
    case EstimatorKind::Anchor:
      return "anchor";
    case EstimatorKind::Exact:
      return "exact";
    case EstimatorKind::Identity:
      return "identity";
  }
  return "?";
}

double CorrectionMatrix::average_diagonal() const {
  double total = 0.0;
  for (int i = 0; i < entries.n; ++i) total += entries.at(i, i);
  return total / entries.n;
}

CorrectionMatrix invert_correction(SquareMatrix entries, EstimatorKind source) {
  CorrectionMatrix c;
  c.inverse = lu_inverse(entries);
  c.condition_number = induced_one_norm(entries) * induced_one_norm(c.inverse);
  c.entries = std::move(entries);
  c.source = source;
  return c;
}

CorrectionMatrix identity_correction(int num_classes) {
  CorrectionMatrix c;
  c.entries = SquareMatrix::identity(num_classes);
  c.inverse = SquareMatrix::identity(num_classes);
  c.source = EstimatorKind::Identity;
  c.condition_number = 1.0;
  return c;
}

SquareMatrix blend_with_identity(SquareMatrix entries, double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw ConfigError("blend lambda must lie in [0, 1], got " + std::to_string(lambda));
  }
  for (int i = 0; i < entries.n; ++i) {
    for (int j = 0; j < entries.n; ++j) {
      entries.at(i, j) = (1.0 - lambda) * entries.at(i, j) + (i == j ? lambda : 0.0);
    }
  }
  return entries;
}

std::vector<double> cross_entropy_vector(const std::vector<double>& probs) {
  std::vector<double> loss(probs.size());
  for (std::size_t j = 0; j < probs.size(); ++j) {
    loss[j] = -std::log(std::max(probs[j], kLogClamp));
  }
  return loss;
}

double backward_loss(const std::vector<double>& probs, int observed_label,
                     const CorrectionMatrix& correction) {
  const int m = correction.num_classes();
  if (static_cast<int>(probs.size()) != m) {
    throw ShapeError("backward_loss: " + std::to_string(probs.size()) + " probs for " +
                     std::to_string(m) + " classes");
  }
  const std::vector<double> ce = cross_entropy_vector(probs);
  double total = 0.0;
  for (int j = 0; j < m; ++j) total += correction.inverse.at(observed_label, j) * ce[j];
  return total;
}

Var backward_loss_node(Tape& tape, Var probs, int observed_label,
                       const CorrectionMatrix& correction) {
  const Tensor& p = tape.value(probs);
  const int m = correction.num_classes();
  if (p.rows() != 1 || static_cast<int>(p.cols()) != m) {
    throw ShapeError("backward_loss_node: probs must be [1 x " + std::to_string(m) + "]");
  }
  const Var ce = tape.scale(tape.log(probs), -1.0);
  return tape.weighted_sum(ce, correction.inverse.row(observed_label));
}

SquareMatrix conservative_entries(const GraphProbsFn& model_probs,
                                  const std::vector<const Graph*>& training_graphs,
                                  int num_classes) {
  if (training_graphs.empty()) {
    throw ConfigError("conservative estimator needs at least one training graph");
  }
  std::vector<std::vector<double>> all_probs;
  all_probs.reserve(training_graphs.size());
  for (const Graph* g : training_graphs) {
    std::vector<double> p = model_probs(*g);
    if (static_cast<int>(p.size()) != num_classes) {
      throw ShapeError("model produced " + std::to_string(p.size()) + " probs for " +
                       std::to_string(num_classes) + " classes");
    }
    all_probs.push_back(std::move(p));
  }
  SquareMatrix entries(num_classes);
  for (int cls = 0; cls < num_classes; ++cls) {
    std::size_t best = 0;
    for (std::size_t g = 1; g < all_probs.size(); ++g) {
      if (all_probs[g][cls] > all_probs[best][cls]) best = g;
    }
    for (int j = 0; j < num_classes; ++j) entries.at(cls, j) = all_probs[best][j];
  }
  return entries;
}

SquareMatrix anchor_entries(const GraphProbsFn& model_probs,
                            const std::vector<const Graph*>& anchors) {
  const int m = static_cast<int>(anchors.size());
  if (m < 2) throw ConfigError("anchor estimator needs one anchor per class");
  SquareMatrix entries(m);
  for (int cls = 0; cls < m; ++cls) {
    if (anchors[cls] == nullptr) {
      throw ConfigError("no anchor graph for class " + std::to_string(cls));
    }
    const std::vector<double> p = model_probs(*anchors[cls]);
    if (static_cast<int>(p.size()) != m) {
      throw ShapeError("anchor produced " + std::to_string(p.size()) + " probs for " +
                       std::to_string(m) + " classes");
    }
    for (int j = 0; j < m; ++j) entries.at(cls, j) = p[j];
  }
  return entries;
}

CorrectionMatrix estimate_conservative(const GraphProbsFn& model_probs,
                                       const std::vector<const Graph*>& training_graphs,
                                       int num_classes) {
  return invert_correction(conservative_entries(model_probs, training_graphs, num_classes),
                           EstimatorKind::Conservative);
}

CorrectionMatrix estimate_anchor(const GraphProbsFn& model_probs,
                                 const std::vector<const Graph*>& anchors) {
  return invert_correction(anchor_entries(model_probs, anchors), EstimatorKind::Anchor);
}

CorrectionMatrix estimate_exact(const NoiseMatrix& noise) {
  return invert_correction(noise.entries, EstimatorKind::Exact);
}

}  // namespace dgnn
