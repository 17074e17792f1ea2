#include "dgnn/adam.hpp"

#include <cmath>

#include "dgnn/errors.hpp"

namespace dgnn {

void AdamState::step(const std::vector<Tensor*>& params) {
  if (first_moment_.empty()) {
    for (const Tensor* p : params) {
      first_moment_.emplace_back(p->size(), 0.0);
      second_moment_.emplace_back(p->size(), 0.0);
    }
  }
  if (first_moment_.size() != params.size()) {
    throw UsageError("adam: parameter list changed between steps");
  }
  ++step_count_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double bias1 = 1.0 - std::pow(b1, static_cast<double>(step_count_));
  const double bias2 = 1.0 - std::pow(b2, static_cast<double>(step_count_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    if (p.size() != first_moment_[k].size()) {
      throw ShapeError("adam: parameter shape changed between steps");
    }
    std::vector<double>& m = first_moment_[k];
    std::vector<double>& v = second_moment_[k];
    const std::vector<double>& g = p.grad();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0 - b1) * g[i];
      v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace dgnn
