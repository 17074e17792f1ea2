#pragma once

#include <cstdint>
#include <vector>

#include "dgnn/tensor.hpp"

namespace dgnn {

struct AdamConfig {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Standard Adam with bias correction. Moment buffers are created lazily from
// the parameter list on the first step and keyed by position, so the same
// parameter tensors (in the same order) must be passed to every step.
class AdamState {
 public:
  explicit AdamState(AdamConfig config = {}) : config_(config) {}

  const AdamConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_count_; }

  // Applies one update using each parameter's accumulated grad buffer, then
  // leaves the grads untouched (caller resets them).
  void step(const std::vector<Tensor*>& params);

 private:
  AdamConfig config_;
  std::uint64_t step_count_ = 0;
  std::vector<std::vector<double>> first_moment_;
  std::vector<std::vector<double>> second_moment_;
};

}  // namespace dgnn
