#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dgnn/tensor.hpp"

namespace dgnn {

// Handle to a node on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

// log() is evaluated as log(max(x, kLogClamp)) so that cross-entropy stays
// finite when a softmax output underflows to ~0.
inline constexpr double kLogClamp = 1e-12;

// Reverse-mode tape. Operations record a backward closure as they execute;
// backward() replays them in exact reverse recording order. A Tape and its
// nodes belong to a single worker; nothing here is synchronized.
//
// Leaves bound via leaf() accumulate into the external tensor's grad buffer
// (when it requires grad). Calling backward() twice without resetting those
// buffers doubles the accumulated gradients; Tensor::reset_grad clears them.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Binds an external tensor. The tensor must outlive the tape.
  Var leaf(Tensor& tensor);
  // Tape-owned constant; never receives gradient.
  Var constant(Tensor value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var add_n(const std::vector<Var>& terms);
  // a: [p x c], bias: [1 x c]; bias added to every row.
  Var add_row_broadcast(Var a, Var bias);
  Var relu(Var a);
  Var row_softmax(Var a);
  Var log(Var a);
  // Sum of all entries -> [1 x 1].
  Var sum(Var a);
  // Column sums -> [1 x c].
  Var sum_rows(Var a);
  Var index_select(Var a, std::vector<std::size_t> rows);
  Var scale(Var a, double factor);
  // (1 + s) * a with s a [1 x 1] node; used for the GIN epsilon.
  Var scale_by_one_plus(Var a, Var s);
  // out[v] = sum of h rows over neighbors of v. `neighbors` must outlive the
  // tape (it is the graph's adjacency, datasets are immutable).
  Var neighbor_sum(Var h, const std::vector<std::vector<std::uint32_t>>& neighbors);
  // Batch-norm style standardization of each column over the rows of x:
  // out[:,c] = gamma[c] * (x[:,c] - mean_c) / sqrt(var_c + eps) + beta[c]
  // with population statistics over the rows (all vertices of the batch).
  // When batch_mean/batch_var are non-null the statistics are written there.
  Var column_norm(Var x, Var gamma, Var beta, double eps = 1e-5,
                  std::vector<double>* batch_mean = nullptr,
                  std::vector<double>* batch_var = nullptr);
  // Same map with fixed statistics (the running buffers) instead of batch
  // statistics; used at evaluation time.
  Var column_norm_fixed(Var x, Var gamma, Var beta, const std::vector<double>& mean,
                        const std::vector<double>& var, double eps = 1e-5);
  // Row vectors [1 x c_i] concatenated into [1 x sum(c_i)].
  Var concat_cols(const std::vector<Var>& parts);
  // Fixed-weight inner product of a [1 x m] row -> [1 x 1].
  Var weighted_sum(Var v, std::vector<double> weights);

  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  // Gradient buffer of a node after backward(); test hook.
  const std::vector<double>& grad_of(Var v) const { return nodes_[v.id].grad; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Seeds d(loss)/d(loss)=1 and propagates. `loss` must be [1 x 1].
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;
    Tensor* external = nullptr;
    std::function<void(Tape&, std::size_t)> backprop;
  };

  Var push(Tensor value, std::function<void(Tape&, std::size_t)> backprop);
  Node& node(Var v) { return nodes_[v.id]; }
  std::vector<double>& grad_buf(std::size_t id);

  std::vector<Node> nodes_;
};

}  // namespace dgnn
