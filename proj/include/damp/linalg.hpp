#pragma once

#include <Eigen/Dense>
#include <span>

namespace damp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Contiguous half-open row interval [begin, end).
struct RowRange {
  int begin = 0;
  int end = 0;

  int size() const { return end - begin; }
  bool operator==(const RowRange&) const = default;
};

// Every reduction below accumulates strictly left to right in ascending index
// order. Callers that work on a row partition compute one partial result per
// block and combine the blocks in ascending order; keeping the evaluation
// order pinned makes results from different code paths comparable bit for
// bit, not just up to rounding.

/// u(n) = sum over i in [rows.begin, rows.end) of A(i, n) * v(i - v_offset).
Vector block_transpose_product(const Matrix& A, RowRange rows, const Vector& v,
                               int v_offset = 0);

/// u(i - rows.begin) = sum over n (ascending) of A(i, n) * x(n).
/// Columns with x(n) == 0.0 contribute nothing and are skipped.
Vector block_product(const Matrix& A, RowRange rows, const Vector& x);

/// Residual refresh for one row; shared so the centralized and per-sensor
/// updates execute the identical operation sequence.
inline double residual_update(double y, double ax, double onsager, double z) {
  return (y - ax) + onsager * z;
}

/// sum of v(i)^2 over [range.begin, range.end), ascending.
double sum_squares(const Vector& v, RowRange range);
double sum_squares(const Vector& v);

/// sqrt((s_1 + ... + s_P) / M) with the partial sums added in ascending order.
double combine_sigma(std::span<const double> block_sum_squares, int M);

/// Number of entries that are not exactly 0.0.
int count_nonzero(const Vector& v);

/// Bitwise equality (stricter than ==, which treats +0.0 and -0.0 alike).
bool bits_equal(double a, double b);
bool bits_equal(const Vector& a, const Vector& b);

}  // namespace damp
