#include "dgnn/linalg.hpp"

#include <cmath>
#include <numeric>

#include "dgnn/errors.hpp"

namespace dgnn {

SquareMatrix SquareMatrix::identity(int n) {
  SquareMatrix m(n);
  for (int i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

std::vector<double> SquareMatrix::row(int i) const {
  return std::vector<double>(entries.begin() + static_cast<std::size_t>(i) * n,
                             entries.begin() + static_cast<std::size_t>(i + 1) * n);
}

namespace {

struct LuFactors {
  SquareMatrix lu;
  std::vector<int> perm;
  double det;
};

LuFactors lu_factor(const SquareMatrix& a) {
  const int n = a.n;
  LuFactors f{a, std::vector<int>(n), 1.0};
  std::iota(f.perm.begin(), f.perm.end(), 0);
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    double best = std::fabs(f.lu.at(col, col));
    for (int r = col + 1; r < n; ++r) {
      const double cand = std::fabs(f.lu.at(r, col));
      if (cand > best) {
        best = cand;
        pivot = r;
      }
    }
    if (pivot != col) {
      for (int j = 0; j < n; ++j) std::swap(f.lu.at(pivot, j), f.lu.at(col, j));
      std::swap(f.perm[pivot], f.perm[col]);
      f.det = -f.det;
    }
    const double diag = f.lu.at(col, col);
    f.det *= diag;
    if (diag == 0.0) return f;  // det is 0, caller decides
    for (int r = col + 1; r < n; ++r) {
      const double factor = f.lu.at(r, col) / diag;
      f.lu.at(r, col) = factor;
      for (int j = col + 1; j < n; ++j) f.lu.at(r, j) -= factor * f.lu.at(col, j);
    }
  }
  return f;
}

}  // namespace

double determinant(const SquareMatrix& a) { return lu_factor(a).det; }

SquareMatrix lu_inverse(const SquareMatrix& a) {
  const int n = a.n;
  LuFactors f = lu_factor(a);
  if (!(std::fabs(f.det) >= kSingularDetThreshold)) {
    throw SingularMatrixError("matrix is singular (|det| = " + std::to_string(std::fabs(f.det)) +
                              " < 1e-12)");
  }
  SquareMatrix inv(n);
  std::vector<double> col(n), x(n);
  for (int e = 0; e < n; ++e) {
    // Solve A x = unit vector e via permuted forward/back substitution.
    for (int i = 0; i < n; ++i) col[i] = (f.perm[i] == e) ? 1.0 : 0.0;
    for (int i = 0; i < n; ++i) {
      x[i] = col[i];
      for (int j = 0; j < i; ++j) x[i] -= f.lu.at(i, j) * x[j];
    }
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j) x[i] -= f.lu.at(i, j) * x[j];
      x[i] /= f.lu.at(i, i);
    }
    for (int i = 0; i < n; ++i) inv.at(i, e) = x[i];
  }
  return inv;
}

double induced_one_norm(const SquareMatrix& a) {
  double best = 0.0;
  for (int j = 0; j < a.n; ++j) {
    double colsum = 0.0;
    for (int i = 0; i < a.n; ++i) colsum += std::fabs(a.at(i, j));
    best = std::max(best, colsum);
  }
  return best;
}

double entrywise_l1(const SquareMatrix& a, const SquareMatrix& b) {
  if (a.n != b.n) {
    throw ShapeError("entrywise_l1: " + std::to_string(a.n) + "x" + std::to_string(a.n) +
                     " vs " + std::to_string(b.n) + "x" + std::to_string(b.n));
  }
  double total = 0.0;
  for (std::size_t i = 0; i < a.entries.size(); ++i) {
    total += std::fabs(a.entries[i] - b.entries[i]);
  }
  return total;
}

}  // namespace dgnn
