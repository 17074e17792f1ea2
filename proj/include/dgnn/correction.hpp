#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dgnn/graph.hpp"
#include "dgnn/linalg.hpp"
#include "dgnn/noise.hpp"
#include "dgnn/tape.hpp"

namespace dgnn {

enum class EstimatorKind { Conservative, Anchor, Exact, Identity };

std::string estimator_name(EstimatorKind kind);

// Estimated corruption matrix with its inverse, ready to drive the
// backward-corrected loss.
struct CorrectionMatrix {
  SquareMatrix entries;
  SquareMatrix inverse;
  EstimatorKind source = EstimatorKind::Identity;
  double condition_number = 1.0;

  int num_classes() const { return entries.n; }
  double average_diagonal() const;
};

// Inverts the estimate (LU, partial pivoting) and records the 1-norm
// condition number. Throws SingularMatrixError when the estimate collapsed
// (e.g. identical rows from a constant-output model).
CorrectionMatrix invert_correction(SquareMatrix entries, EstimatorKind source);

CorrectionMatrix identity_correction(int num_classes);

// Optional repair: C <- (1-lambda) C + lambda I before inversion. lambda=0
// leaves the estimate untouched.
SquareMatrix blend_with_identity(SquareMatrix entries, double lambda);

// l_j = -log(max(probs_j, clamp)).
std::vector<double> cross_entropy_vector(const std::vector<double>& probs);

// (C^{-1} l(probs))[observed]: may legitimately be negative.
double backward_loss(const std::vector<double>& probs, int observed_label,
                     const CorrectionMatrix& correction);

// Tape-recorded version; probs must be a [1 x m] node.
Var backward_loss_node(Tape& tape, Var probs, int observed_label,
                       const CorrectionMatrix& correction);

// Softmax output of a frozen model for one graph.
using GraphProbsFn = std::function<std::vector<double>(const Graph&)>;

// Raw estimator rows, before inversion; exposed so the blend repair can be
// applied between estimation and inversion.
SquareMatrix conservative_entries(const GraphProbsFn& model_probs,
                                  const std::vector<const Graph*>& training_graphs,
                                  int num_classes);
SquareMatrix anchor_entries(const GraphProbsFn& model_probs,
                            const std::vector<const Graph*>& anchors);

// Row i of C = softmax vector of the training graph predicted as class i with
// the highest confidence (ties: lowest graph index).
CorrectionMatrix estimate_conservative(const GraphProbsFn& model_probs,
                                       const std::vector<const Graph*>& training_graphs,
                                       int num_classes);

// Row i of C = softmax vector of the trusted anchor for class i; anchors must
// hold exactly one graph per class, ordered by class.
CorrectionMatrix estimate_anchor(const GraphProbsFn& model_probs,
                                 const std::vector<const Graph*>& anchors);

// C = N verbatim; singular when n = (m-1)/m.
CorrectionMatrix estimate_exact(const NoiseMatrix& noise);

}  // namespace dgnn
