#include "dgnn/tensor.hpp"

#include <cmath>
#include <utility>

#include "dgnn/errors.hpp"

namespace dgnn {

Tensor::Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw ShapeError("tensor data length does not match shape");
  }
}

Tensor Tensor::scalar(double value) {
  Tensor t(1, 1);
  t.data_[0] = value;
  return t;
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor(1, n, std::move(values));
}

Tensor Tensor::full(std::size_t rows, std::size_t cols, double value) {
  Tensor t(rows, cols);
  for (double& x : t.data_) x = value;
  return t;
}

std::vector<double>& Tensor::grad() {
  if (grad_.empty()) grad_.assign(data_.size(), 0.0);
  return grad_;
}

void Tensor::reset_grad() {
  if (!grad_.empty()) grad_.assign(data_.size(), 0.0);
}

bool Tensor::all_finite() const {
  for (double x : data_) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

}  // namespace dgnn
