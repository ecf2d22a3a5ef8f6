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

#include "poet/linalg.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <sstream>
#include <utility>

#include "poet/error.hpp"

namespace poet {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap as_eigen(const Matrix& m) {
  return ConstMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                  static_cast<Eigen::Index>(m.cols()));
}

MutMap as_eigen(Matrix& m) {
  return MutMap(m.data().data(), static_cast<Eigen::Index>(m.rows()),
                static_cast<Eigen::Index>(m.cols()));
}

[[noreturn]] void shape_error(const char* op, const Matrix& a, const Matrix& b) {
  throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_string() +
                       " and " + b.shape_string());
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) shape_error(op, a, b);
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("Matrix: data length " + std::to_string(data_.size()) +
                         " does not match " + shape_string());
  }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) throw DimensionError("Matrix: ragged initializer list");
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::row(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Matrix::shape_string() const {
  std::ostringstream os;
  os << rows_ << "x" << cols_;
  return os.str();
}

bool operator==(const Matrix& a, const Matrix& b) {
  if (a.rows_ != b.rows_ || a.cols_ != b.cols_) return false;
  // Bitwise, so that -0.0 != 0.0 and NaN payloads compare by representation.
  return std::equal(a.data_.begin(), a.data_.end(), b.data_.begin(), [](double x, double y) {
    return std::memcmp(&x, &y, sizeof(double)) == 0;
  });
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) shape_error("matmul", a, b);
  Matrix c(a.rows(), b.cols());
  if (a.cols() == 0) return c;
  as_eigen(c).noalias() = as_eigen(a) * as_eigen(b);
  return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows()) shape_error("matmul_tn", a, b);
  Matrix c(a.cols(), b.cols());
  if (a.rows() == 0) return c;
  as_eigen(c).noalias() = as_eigen(a).transpose() * as_eigen(b);
  return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.cols()) shape_error("matmul_nt", a, b);
  Matrix c(a.rows(), b.rows());
  if (a.cols() == 0) return c;
  as_eigen(c).noalias() = as_eigen(a) * as_eigen(b).transpose();
  return c;
}

void matmul_accumulate(const Matrix& a, const Matrix& b, Matrix& c) {
  if (a.cols() != b.rows()) shape_error("matmul_accumulate", a, b);
  if (c.rows() != a.rows() || c.cols() != b.cols()) shape_error("matmul_accumulate", a, c);
  if (a.cols() == 0) return;
  as_eigen(c).noalias() += as_eigen(a) * as_eigen(b);
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

Matrix add(const Matrix& a, const Matrix& b) {
  require_same_shape("add", a, b);
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] += bd[i];
  return c;
}

Matrix subtract(const Matrix& a, const Matrix& b) {
  require_same_shape("subtract", a, b);
  Matrix c = a;
  auto cd = c.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < cd.size(); ++i) cd[i] -= bd[i];
  return c;
}

Matrix scale(const Matrix& a, double s) {
  Matrix c = a;
  for (double& x : c.data()) x *= s;
  return c;
}

void axpy(double alpha, const Matrix& x, Matrix& y) {
  require_same_shape("axpy", x, y);
  auto xd = x.data();
  auto yd = y.data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] += alpha * xd[i];
}

double frobenius_norm(const Matrix& a) {
  // Scaled accumulation keeps tiny and huge entries from under/overflowing.
  double scale = 0.0;
  double ssq = 1.0;
  for (double x : a.data()) {
    if (x == 0.0) continue;
    const double ax = std::fabs(x);
    if (scale < ax) {
      ssq = 1.0 + ssq * (scale / ax) * (scale / ax);
      scale = ax;
    } else {
      ssq += (ax / scale) * (ax / scale);
    }
  }
  return scale * std::sqrt(ssq);
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_same_shape("max_abs_diff", a, b);
  double m = 0.0;
  auto ad = a.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < ad.size(); ++i) m = std::max(m, std::fabs(ad[i] - bd[i]));
  return m;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("dot: length mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double trace(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("trace: non-square " + a.shape_string());
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) t += a(i, i);
  return t;
}

double determinant(const Matrix& a) {
  if (!a.is_square()) throw DimensionError("determinant: non-square " + a.shape_string());
  Matrix lu = a;
  const std::size_t n = a.rows();
  double det = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(lu(i, k)) > std::fabs(lu(piv, k))) piv = i;
    if (lu(piv, k) == 0.0) return 0.0;
    if (piv != k) {
      std::swap_ranges(lu.row_span(k).begin(), lu.row_span(k).end(), lu.row_span(piv).begin());
      det = -det;
    }
    det *= lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      for (std::size_t j = k; j < n; ++j) lu(i, j) -= f * lu(k, j);
    }
  }
  return det;
}

Matrix solve(const Matrix& a, const Matrix& b) {
  if (!a.is_square() || a.rows() != b.rows()) shape_error("solve", a, b);
  const std::size_t n = a.rows();
  Matrix lu = a;
  Matrix x = b;
  double max_entry = 0.0;
  for (double v : a.data()) max_entry = std::max(max_entry, std::fabs(v));
  const double tiny = max_entry * static_cast<double>(n) * std::numeric_limits<double>::epsilon();

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::fabs(lu(i, k)) > std::fabs(lu(piv, k))) piv = i;
    if (std::fabs(lu(piv, k)) <= tiny) {
      throw SingularMatrixError("solve: matrix is singular to working precision at column " +
                                std::to_string(k));
    }
    if (piv != k) {
      std::swap_ranges(lu.row_span(k).begin(), lu.row_span(k).end(), lu.row_span(piv).begin());
      std::swap_ranges(x.row_span(k).begin(), x.row_span(k).end(), x.row_span(piv).begin());
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu(i, k) / lu(k, k);
      lu(i, k) = f;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= f * lu(k, j);
      for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) -= f * x(k, j);
    }
  }
  for (std::size_t kk = n; kk-- > 0;) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      double s = x(kk, j);
      for (std::size_t i = kk + 1; i < n; ++i) s -= lu(kk, i) * x(i, j);
      x(kk, j) = s / lu(kk, kk);
    }
  }
  return x;
}

namespace {

// Hestenes one-sided Jacobi on the columns of a tall matrix. `cols` holds the
// columns contiguously (n vectors of length m); `vrows` (optional) holds the
// columns of V the same way. Returns the final sweep's largest relative
// off-orthogonality.
double jacobi_orthogonalize(std::vector<double>& cols, std::size_t m, std::size_t n,
                            std::vector<double>* vrows, const SvdOptions& opts) {
  double residual = 0.0;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    residual = 0.0;
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      double* ai = cols.data() + i * m;
      for (std::size_t j = i + 1; j < n; ++j) {
        double* aj = cols.data() + j * m;
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
          alpha += ai[r] * ai[r];
          beta += aj[r] * aj[r];
          gamma += ai[r] * aj[r];
        }
        if (alpha == 0.0 || beta == 0.0 || gamma == 0.0) continue;
        const double off = std::fabs(gamma) / std::sqrt(alpha * beta);
        residual = std::max(residual, off);
        if (off <= opts.tolerance) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < m; ++r) {
          const double x = ai[r];
          const double y = aj[r];
          ai[r] = c * x - s * y;
          aj[r] = s * x + c * y;
        }
        if (vrows != nullptr) {
          double* vi = vrows->data() + i * n;
          double* vj = vrows->data() + j * n;
          for (std::size_t r = 0; r < n; ++r) {
            const double x = vi[r];
            const double y = vj[r];
            vi[r] = c * x - s * y;
            vj[r] = s * x + c * y;
          }
        }
      }
    }
    if (!rotated) return residual;
  }
  throw ConvergenceError("svd: one-sided Jacobi did not converge in " +
                             std::to_string(opts.max_sweeps) +
                             " sweeps (residual " + std::to_string(residual) + ")",
                         residual);
}

void check_finite(const Matrix& a, const char* op) {
  if (!a.all_finite()) throw ArgumentError(std::string(op) + ": input has non-finite entries");
}

// SVD of a matrix with rows >= cols.
SvdResult svd_tall(const Matrix& a, const SvdOptions& opts, bool vectors) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  std::vector<double> cols(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) cols[j * m + i] = a(i, j);
  std::vector<double> vrows;
  if (vectors) {
    vrows.assign(n * n, 0.0);
    for (std::size_t j = 0; j < n; ++j) vrows[j * n + j] = 1.0;
  }
  jacobi_orthogonalize(cols, m, n, vectors ? &vrows : nullptr, opts);

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (std::size_t r = 0; r < m; ++r) s += cols[j * m + r] * cols[j * m + r];
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  SvdResult out;
  out.sigma.resize(n);
  for (std::size_t k = 0; k < n; ++k) out.sigma[k] = norms[order[k]];
  if (!vectors) return out;

  out.u = Matrix(m, n);
  out.vt = Matrix(n, n);
  const double cutoff = (n == 0 ? 0.0 : out.sigma[0]) * 1e-14;
  std::vector<bool> degenerate(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    for (std::size_t r = 0; r < n; ++r) out.vt(k, r) = vrows[j * n + r];
    if (out.sigma[k] > cutoff && out.sigma[k] > 0.0) {
      for (std::size_t r = 0; r < m; ++r) out.u(r, k) = cols[j * m + r] / out.sigma[k];
    } else {
      degenerate[k] = true;
    }
  }
  // Complete U with Gram-Schmidt over basis vectors where sigma vanished.
  std::size_t candidate = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (!degenerate[k]) continue;
    while (candidate < m) {
      std::vector<double> e(m, 0.0);
      e[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t q = 0; q < n; ++q) {
          if (q == k || (degenerate[q] && q > k)) continue;
          double p = 0.0;
          for (std::size_t r = 0; r < m; ++r) p += out.u(r, q) * e[r];
          for (std::size_t r = 0; r < m; ++r) e[r] -= p * out.u(r, q);
        }
      }
      double nrm = 0.0;
      for (double x : e) nrm += x * x;
      nrm = std::sqrt(nrm);
      if (nrm > 1e-8) {
        for (std::size_t r = 0; r < m; ++r) out.u(r, k) = e[r] / nrm;
        break;
      }
    }
  }
  return out;
}

}  // namespace

SvdResult svd(const Matrix& a, const SvdOptions& opts) {
  check_finite(a, "svd");
  if (a.rows() >= a.cols()) return svd_tall(a, opts, true);
  SvdResult t = svd_tall(transpose(a), opts, true);
  SvdResult out;
  out.sigma = std::move(t.sigma);
  out.u = transpose(t.vt);
  out.vt = transpose(t.u);
  return out;
}

std::vector<double> singular_values(const Matrix& a, const SvdOptions& opts) {
  check_finite(a, "singular_values");
  if (a.rows() >= a.cols()) return svd_tall(a, opts, false).sigma;
  return svd_tall(transpose(a), opts, false).sigma;
}

double spectral_norm(const Matrix& a) {
  auto s = singular_values(a);
  return s.empty() ? 0.0 : s.front();
}

Permutation::Permutation(std::vector<std::size_t> perm) : perm_(std::move(perm)) {
  std::vector<bool> seen(perm_.size(), false);
  for (std::size_t v : perm_) {
    if (v >= perm_.size() || seen[v]) {
      throw ArgumentError("Permutation: index array is not a bijection on [0, " +
                          std::to_string(perm_.size()) + ")");
    }
    seen[v] = true;
  }
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  return Permutation(std::move(p));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(perm_.size());
  for (std::size_t i = 0; i < perm_.size(); ++i) inv[perm_[i]] = i;
  return Permutation(std::move(inv));
}

Matrix apply_permutation(const Permutation& p, const Matrix& a, Side side) {
  Matrix out(a.rows(), a.cols());
  if (side == Side::kLeft) {
    if (p.size() != a.rows()) {
      throw DimensionError("apply_permutation: permutation of length " + std::to_string(p.size()) +
                           " cannot reorder rows of " + a.shape_string());
    }
    for (std::size_t i = 0; i < a.rows(); ++i) {
      auto src = a.row_span(p[i]);
      std::copy(src.begin(), src.end(), out.row_span(i).begin());
    }
  } else {
    if (p.size() != a.cols()) {
      throw DimensionError("apply_permutation: permutation of length " + std::to_string(p.size()) +
                           " cannot reorder columns of " + a.shape_string());
    }
    for (std::size_t i = 0; i < a.rows(); ++i)
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, p[j]) = a(i, j);
  }
  return out;
}

}  // namespace poet
