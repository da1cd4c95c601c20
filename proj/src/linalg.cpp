#include "damp/linalg.hpp"

#include <bit>
#include <cstdint>
#include <stdexcept>

namespace damp {

Vector block_transpose_product(const Matrix& A, RowRange rows, const Vector& v,
                               int v_offset) {
  if (rows.begin < 0 || rows.end > A.rows() || rows.begin > rows.end) {
    throw std::invalid_argument("block_transpose_product: row range out of bounds");
  }
  if (rows.end - v_offset > v.size()) {
    throw std::invalid_argument("block_transpose_product: vector too short for row range");
  }
  const int n_cols = static_cast<int>(A.cols());
  Vector out(n_cols);
  for (int n = 0; n < n_cols; ++n) {
    const double* col = A.col(n).data();
    double acc = 0.0;
    for (int i = rows.begin; i < rows.end; ++i) {
      acc += col[i] * v(i - v_offset);
    }
    out(n) = acc;
  }
  return out;
}

Vector block_product(const Matrix& A, RowRange rows, const Vector& x) {
  if (rows.begin < 0 || rows.end > A.rows() || rows.begin > rows.end) {
    throw std::invalid_argument("block_product: row range out of bounds");
  }
  if (x.size() != A.cols()) {
    throw std::invalid_argument("block_product: x length does not match column count");
  }
  Vector out = Vector::Zero(rows.size());
  const int n_cols = static_cast<int>(A.cols());
  for (int n = 0; n < n_cols; ++n) {
    const double xn = x(n);
    if (xn == 0.0) continue;
    const double* col = A.col(n).data();
    for (int i = rows.begin; i < rows.end; ++i) {
      out(i - rows.begin) += col[i] * xn;
    }
  }
  return out;
}

double sum_squares(const Vector& v, RowRange range) {
  if (range.begin < 0 || range.end > v.size() || range.begin > range.end) {
    throw std::invalid_argument("sum_squares: range out of bounds");
  }
  double acc = 0.0;
  for (int i = range.begin; i < range.end; ++i) {
    acc += v(i) * v(i);
  }
  return acc;
}

double sum_squares(const Vector& v) {
  return sum_squares(v, RowRange{0, static_cast<int>(v.size())});
}

double combine_sigma(std::span<const double> block_sum_squares, int M) {
  if (M <= 0) {
    throw std::invalid_argument("combine_sigma: M must be positive");
  }
  double total = 0.0;
  for (double s : block_sum_squares) {
    total += s;
  }
  return std::sqrt(total / static_cast<double>(M));
}

int count_nonzero(const Vector& v) {
  int count = 0;
  for (int i = 0; i < v.size(); ++i) {
    if (v(i) != 0.0) ++count;
  }
  return count;
}

bool bits_equal(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

bool bits_equal(const Vector& a, const Vector& b) {
  if (a.size() != b.size()) return false;
  for (int i = 0; i < a.size(); ++i) {
    if (!bits_equal(a(i), b(i))) return false;
  }
  return true;
}

}  // namespace damp
