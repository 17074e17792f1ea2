#pragma once

#include <cstddef>
#include <vector>

namespace dgnn {

// Small square matrix; m is the class count, so sizes are single digits.
struct SquareMatrix {
  int n = 0;
  std::vector<double> entries;  // row-major n*n

  SquareMatrix() = default;
  explicit SquareMatrix(int n) : n(n), entries(static_cast<std::size_t>(n) * n, 0.0) {}

  static SquareMatrix identity(int n);

  double& at(int i, int j) { return entries[static_cast<std::size_t>(i) * n + j]; }
  double at(int i, int j) const { return entries[static_cast<std::size_t>(i) * n + j]; }

  std::vector<double> row(int i) const;

  friend bool operator==(const SquareMatrix& a, const SquareMatrix& b) {
    return a.n == b.n && a.entries == b.entries;
  }
};

// Determinant threshold below which a matrix is treated as singular.
inline constexpr double kSingularDetThreshold = 1e-12;

// LU factorization with partial pivoting. Throws SingularMatrixError when
// |det| < kSingularDetThreshold.
SquareMatrix lu_inverse(const SquareMatrix& a);

double determinant(const SquareMatrix& a);

// Induced 1-norm (max absolute column sum).
double induced_one_norm(const SquareMatrix& a);

// Sum over |a_ij - b_ij|; the norm the estimator tables use.
double entrywise_l1(const SquareMatrix& a, const SquareMatrix& b);

}  // namespace dgnn
