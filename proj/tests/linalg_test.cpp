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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "poet/error.hpp"
#include "test_util.hpp"

namespace poet {
namespace {

using testing::naive_matmul;
using testing::naive_transpose;
using testing::random_matrix;

// Eigenvalues of a symmetric matrix by cyclic two-sided Jacobi in long
// double. Independent of the one-sided SVD under test.
std::vector<double> symmetric_eigenvalues(const Matrix& s) {
  const std::size_t n = s.rows();
  std::vector<long double> a(n * n);
  for (std::size_t i = 0; i < n * n; ++i) a[i] = s.data()[i];
  auto at = [&](std::size_t i, std::size_t j) -> long double& { return a[i * n + j]; };
  for (int sweep = 0; sweep < 100; ++sweep) {
    long double off = 0.0L;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
    if (off < 1e-40L) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0L) continue;
        const long double theta = (at(q, q) - at(p, p)) / (2.0L * at(p, q));
        const long double t = (theta >= 0 ? 1.0L : -1.0L) /
                              (std::fabs(theta) + std::sqrt(theta * theta + 1.0L));
        const long double c = 1.0L / std::sqrt(t * t + 1.0L);
        const long double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const long double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - sn * akq;
          at(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const long double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - sn * aqk;
          at(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<double>(at(i, i));
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

TEST(MatmulTest, MatchesTripleLoop) {
  for (auto [m, k, n] : {std::tuple{1, 1, 1}, {3, 5, 2}, {17, 9, 31}, {64, 64, 64}}) {
    const Matrix a = random_matrix(m, k, 1 + m);
    const Matrix b = random_matrix(k, n, 2 + n);
    EXPECT_LE(max_abs_diff(matmul(a, b), naive_matmul(a, b)), 1e-12);
  }
}

TEST(MatmulTest, TransposedVariants) {
  const Matrix a = random_matrix(7, 5, 3);
  const Matrix b = random_matrix(7, 4, 4);
  const Matrix c = random_matrix(6, 5, 5);
  EXPECT_LE(max_abs_diff(matmul_tn(a, b), naive_matmul(naive_transpose(a), b)), 1e-12);
  EXPECT_LE(max_abs_diff(matmul_nt(a, c), naive_matmul(a, naive_transpose(c))), 1e-12);
  Matrix acc = random_matrix(7, 4, 6);
  const Matrix expected = add(acc, naive_matmul(a, random_matrix(5, 4, 7)));
  matmul_accumulate(a, random_matrix(5, 4, 7), acc);
  EXPECT_LE(max_abs_diff(acc, expected), 1e-12);
}

TEST(MatmulTest, ShapeMismatchThrows) {
  EXPECT_THROW(matmul(Matrix(2, 3), Matrix(4, 2)), DimensionError);
  EXPECT_THROW(add(Matrix(2, 3), Matrix(3, 2)), DimensionError);
  EXPECT_THROW(Matrix(2, 2, std::vector<double>{1.0, 2.0}), DimensionError);
}

TEST(ElementwiseTest, AxpyScaleTranspose) {
  const Matrix a{{1, 2}, {3, 4}};
  Matrix y{{1, 1}, {1, 1}};
  axpy(2.0, a, y);
  EXPECT_EQ(y, (Matrix{{3, 5}, {7, 9}}));
  EXPECT_EQ(scale(a, -1.0), (Matrix{{-1, -2}, {-3, -4}}));
  EXPECT_EQ(transpose(a), (Matrix{{1, 3}, {2, 4}}));
  EXPECT_DOUBLE_EQ(frobenius_norm(a), std::sqrt(30.0));
  EXPECT_DOUBLE_EQ(trace(a), 5.0);
}

TEST(SolveTest, ResidualIsSmall) {
  const Matrix a = add(random_matrix(12, 12, 8), scale(Matrix::identity(12), 5.0));
  const Matrix b = random_matrix(12, 3, 9);
  const Matrix x = solve(a, b);
  EXPECT_LE(max_abs_diff(matmul(a, x), b), 1e-12);
}

TEST(SolveTest, SingularThrows) {
  const Matrix a{{1, 2}, {2, 4}};
  EXPECT_THROW(solve(a, Matrix::identity(2)), SingularMatrixError);
}

TEST(DeterminantTest, ClosedForms) {
  EXPECT_NEAR(determinant(Matrix{{3, 1}, {4, 2}}), 2.0, 1e-14);
  EXPECT_NEAR(determinant(Matrix{{0, 1}, {1, 0}}), -1.0, 1e-14);
  EXPECT_NEAR(determinant(scale(Matrix::identity(5), 2.0)), 32.0, 1e-12);
}

TEST(SvdTest, DiagonalInput) {
  const Matrix a{{3, 0, 0}, {0, 1, 0}, {0, 0, 2}};
  const auto s = singular_values(a);
  ASSERT_EQ(s.size(), 3u);
  EXPECT_NEAR(s[0], 3.0, 1e-14);
  EXPECT_NEAR(s[1], 2.0, 1e-14);
  EXPECT_NEAR(s[2], 1.0, 1e-14);
}

TEST(SvdTest, MatchesSymmetricEigenOracle) {
  for (auto [m, n] : {std::pair{8, 5}, {5, 8}, {20, 20}, {33, 7}}) {
    const Matrix a = random_matrix(m, n, 10 + m * n);
    const Matrix gram = m >= n ? naive_matmul(naive_transpose(a), a)
                               : naive_matmul(a, naive_transpose(a));
    const auto eig = symmetric_eigenvalues(gram);
    const auto s = singular_values(a);
    ASSERT_EQ(s.size(), static_cast<std::size_t>(std::min(m, n)));
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_NEAR(s[i] * s[i], eig[i], 1e-10 * eig[0]) << "index " << i;
    }
  }
}

TEST(SvdTest, FactorsReconstructAndAreOrthonormal) {
  for (auto [m, n] : {std::pair{9, 4}, {4, 9}, {16, 16}}) {
    const Matrix a = random_matrix(m, n, 40 + m);
    const SvdResult r = svd(a);
    const std::size_t k = r.sigma.size();
    Matrix us = r.u;
    for (std::size_t i = 0; i < us.rows(); ++i)
      for (std::size_t j = 0; j < k; ++j) us(i, j) *= r.sigma[j];
    EXPECT_LE(max_abs_diff(matmul(us, r.vt), a), 1e-12);
    EXPECT_LE(max_abs_diff(matmul_tn(r.u, r.u), Matrix::identity(k)), 1e-12);
    EXPECT_LE(max_abs_diff(matmul_nt(r.vt, r.vt), Matrix::identity(k)), 1e-12);
    EXPECT_TRUE(std::is_sorted(r.sigma.begin(), r.sigma.end(), std::greater<>()));
  }
}

TEST(SvdTest, SweepCapRaisesConvergenceError) {
  SvdOptions opts;
  opts.max_sweeps = 1;
  try {
    svd(random_matrix(30, 30, 77), opts);
    FAIL() << "expected ConvergenceError";
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 0.0);
  }
}

TEST(SvdTest, NonFiniteInputRejected) {
  Matrix a(2, 2, 1.0);
  a(0, 1) = std::nan("");
  EXPECT_THROW(singular_values(a), ArgumentError);
}

TEST(SvdTest, SpectralNorm) {
  EXPECT_NEAR(spectral_norm(Matrix{{0, 2}, {-2, 0}}), 2.0, 1e-14);
}

TEST(PermutationTest, InverseAndApplication) {
  const Permutation p({2, 0, 3, 1});
  const Permutation inv = p.inverse();
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(inv[p[i]], i);
  const Matrix a = random_matrix(4, 3, 11);
  const Matrix left = apply_permutation(p, a, Side::kLeft);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 3; ++j) EXPECT_EQ(left(i, j), a(p[i], j));
  const Matrix b = random_matrix(3, 4, 12);
  const Matrix right = apply_permutation(p, b, Side::kRight);
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(right(i, p[j]), b(i, j));
  EXPECT_EQ(apply_permutation(inv, left, Side::kLeft), a);
}

TEST(PermutationTest, RejectsNonBijection) {
  EXPECT_THROW(Permutation({0, 0, 1}), ArgumentError);
  EXPECT_THROW(Permutation({0, 3}), ArgumentError);
}

}  // namespace
}  // namespace poet
