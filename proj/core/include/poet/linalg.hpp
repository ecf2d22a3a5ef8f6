// Copyright 2026 The POET Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Dense real linear algebra: the numeric substrate for weights, orthogonal
// factors and activations. Everything is 64-bit and row-major.

#ifndef POET_LINALG_HPP_
#define POET_LINALG_HPP_

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace poet {

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix column(std::span<const double> values);
  static Matrix row(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }
  bool is_square() const { return rows_ == cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<double> row_span(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row_span(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }
  const std::vector<double>& values() const { return data_; }

  void fill(double v);
  bool all_finite() const;
  std::string shape_string() const;

  /// Bit-exact comparison (shape and every entry).
  friend bool operator==(const Matrix& a, const Matrix& b);

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

enum class Side { kLeft, kRight };

// Products. The `_tn` / `_nt` variants multiply by the transpose of the
// first / second operand without forming it.
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);
Matrix matmul_nt(const Matrix& a, const Matrix& b);
/// c += a * b
void matmul_accumulate(const Matrix& a, const Matrix& b, Matrix& c);

Matrix transpose(const Matrix& a);
Matrix add(const Matrix& a, const Matrix& b);
Matrix subtract(const Matrix& a, const Matrix& b);
Matrix scale(const Matrix& a, double s);
void axpy(double alpha, const Matrix& x, Matrix& y);

double frobenius_norm(const Matrix& a);
double max_abs_diff(const Matrix& a, const Matrix& b);
double dot(std::span<const double> a, std::span<const double> b);
double trace(const Matrix& a);

/// Solves a * x = b with partial-pivot LU. Throws SingularMatrixError.
Matrix solve(const Matrix& a, const Matrix& b);
/// LU with partial pivoting. Throws DimensionError for non-square input.
double determinant(const Matrix& a);

struct SvdResult {
  Matrix u;                   // m x r, orthonormal columns
  std::vector<double> sigma;  // descending, length r = min(m, n)
  Matrix vt;                  // r x n, orthonormal rows
};

struct SvdOptions {
  int max_sweeps = 60;
  double tolerance = 1e-12;  // relative off-diagonal threshold
};

/// One-sided Jacobi SVD. Throws ConvergenceError carrying the residual
/// off-orthogonality when the sweep cap is reached.
SvdResult svd(const Matrix& a, const SvdOptions& opts = {});

/// Same sweeps as svd() without accumulating singular vectors.
std::vector<double> singular_values(const Matrix& a, const SvdOptions& opts = {});

double spectral_norm(const Matrix& a);

/// A bijection on [0, size) stored as an index array. The matrix it stands
/// for has a one at (i, perm[i]).
class Permutation {
 public:
  Permutation() = default;
  explicit Permutation(std::vector<std::size_t> perm);
  static Permutation identity(std::size_t n);

  std::size_t size() const { return perm_.size(); }
  std::size_t operator[](std::size_t i) const { return perm_[i]; }
  const std::vector<std::size_t>& indices() const { return perm_; }
  Permutation inverse() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;

 private:
  std::vector<std::size_t> perm_;
};

/// kLeft returns Psi * a (row i of the result is row perm[i] of a);
/// kRight returns a * Psi (column perm[j] of the result is column j of a).
Matrix apply_permutation(const Permutation& p, const Matrix& a, Side side);

}  // namespace poet

#endif  // POET_LINALG_HPP_
