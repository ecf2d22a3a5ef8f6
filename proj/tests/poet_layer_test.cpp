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


#include "poet/poet_layer.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "poet/error.hpp"
#include "poet/trainer.hpp"
#include "test_util.hpp"

namespace poet {
namespace {

using testing::explicit_primitive;
using testing::naive_matmul;
using testing::random_matrix;
using testing::random_vector;

PoetLayer make_layer(std::size_t m, std::size_t n, SpoVariant v, std::size_t b_r, std::size_t b_p,
                     std::uint64_t seed, bool exact = false) {
  PoetLayerOptions opts;
  opts.variant = v;
  opts.block_r = b_r;
  opts.block_p = b_p;
  opts.exact_cayley = exact;
  return PoetLayer(random_matrix(m, n, seed), opts, RngKey(seed).derive("layer"));
}

void randomize(PoetLayer& layer, std::uint64_t seed, double scale) {
  for (Side side : {Side::kLeft, Side::kRight}) {
    std::vector<double> t = random_vector(layer.theta_count(side), seed + (side == Side::kLeft ? 0 : 7));
    for (double& x : t) x *= scale;
    layer.set_theta(side, t);
  }
}

// sum C .* y, so dL/dy = C.
OutputLoss linear_output_loss(const Matrix& c) {
  return [c](const Matrix& y, Matrix* grad) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += y.data()[i] * c.data()[i];
    if (grad != nullptr) *grad = c;
    return s;
  };
}

TEST(PoetLayerTest, FreshLayerIsPlainLinear) {
  const PoetLayer layer = make_layer(8, 6, SpoVariant::kFullyStochastic, 4, 3, 1);
  const Matrix x = random_matrix(5, 8, 2);
  EXPECT_EQ(layer.forward(x), matmul(x, layer.weight()));
  EXPECT_EQ(layer.merged_weight(), layer.weight());
  EXPECT_EQ(layer.orth_error(), 0.0);
}

TEST(PoetLayerTest, BasisBatchMatchesExplicitProduct) {
  for (SpoVariant v : {SpoVariant::kFullyStochastic, SpoVariant::kBlockStochastic}) {
    PoetLayer layer = make_layer(8, 6, v, 4, 3, 3);
    randomize(layer, 3, 0.3);
    const Matrix r = explicit_primitive(layer.primitive(Side::kLeft), false);
    const Matrix p = explicit_primitive(layer.primitive(Side::kRight), false);
    const Matrix expected = naive_matmul(naive_matmul(r, layer.weight()), p);
    EXPECT_LE(max_abs_diff(layer.forward(Matrix::identity(8)), expected), 1e-12);
    EXPECT_LE(max_abs_diff(layer.merged_weight(), expected), 1e-12);
  }
}

TEST(PoetLayerTest, ForwardAgreesWithMergedWeight) {
  PoetLayer layer = make_layer(12, 9, SpoVariant::kBlockStochastic, 4, 3, 4);
  randomize(layer, 4, 0.5);
  const Matrix x = random_matrix(7, 12, 5);
  EXPECT_LE(max_abs_diff(layer.forward(x), matmul(x, layer.merged_weight())), 1e-12);
}

TEST(PoetLayerTest, ExactFactorsPreserveSpectrum) {
  PoetLayer layer = make_layer(10, 8, SpoVariant::kFullyStochastic, 5, 4, 6, true);
  randomize(layer, 6, 1.0);
  const auto a = singular_values(layer.weight());
  const auto b = singular_values(layer.merged_weight());
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(PoetLayerTest, ShapeErrors) {
  PoetLayer layer = make_layer(8, 6, SpoVariant::kFullyStochastic, 4, 3, 7);
  EXPECT_THROW(layer.forward(random_matrix(2, 7, 1)), DimensionError);
  EXPECT_THROW(layer.set_theta(Side::kLeft, std::vector<double>(3)), DimensionError);
  EXPECT_THROW(make_layer(8, 6, SpoVariant::kBlockStochastic, 3, 3, 1), ArgumentError);
}

TEST(PoetBackwardTest, ZeroUpstreamGivesZeroGradients) {
  PoetLayer layer = make_layer(8, 6, SpoVariant::kFullyStochastic, 4, 3, 8);
  randomize(layer, 8, 0.3);
  const PoetGrads g = poet_backward(layer, random_matrix(4, 8, 9), Matrix(4, 6));
  for (double x : g.theta_r) EXPECT_EQ(x, 0.0);
  for (double x : g.theta_p) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(g.dx, Matrix(4, 8));
}

TEST(PoetBackwardTest, FullyStochasticMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PoetLayer layer = make_layer(8, 6, SpoVariant::kFullyStochastic, 4, 4, 100 + seed);
    randomize(layer, seed, 0.2);
    const Matrix x = random_matrix(5, 8, 200 + seed);
    EXPECT_LE(finite_diff_check(layer, x, linear_output_loss(random_matrix(5, 6, 300 + seed)), 1e-5),
              1e-5)
        << "seed " << seed;
  }
}

TEST(PoetBackwardTest, BlockStochasticMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    PoetLayer layer = make_layer(8, 8, SpoVariant::kBlockStochastic, 2, 2, 400 + seed);
    randomize(layer, seed, 0.2);
    const Matrix x = random_matrix(5, 8, 500 + seed);
    // A plain squared norm would be blind to P, which preserves row norms.
    EXPECT_LE(finite_diff_check(layer, x, linear_output_loss(random_matrix(5, 8, 600 + seed)), 1e-5),
              1e-5)
        << "seed " << seed;
  }
}

TEST(PoetBackwardTest, LinearLossAtIdentity) {
  const PoetLayer layer = make_layer(8, 6, SpoVariant::kFullyStochastic, 4, 3, 9);
  const Matrix x = random_matrix(3, 8, 10);
  EXPECT_LE(finite_diff_check(layer, x, linear_output_loss(random_matrix(3, 6, 11)), 1e-5), 1e-6);
}

TEST(PoetBackwardTest, InputGradientMatchesFiniteDifferences) {
  PoetLayer layer = make_layer(8, 6, SpoVariant::kBlockStochastic, 4, 3, 12);
  randomize(layer, 12, 0.3);
  Matrix x = random_matrix(3, 8, 13);
  const Matrix c = random_matrix(3, 6, 14);
  const PoetGrads g = poet_backward(layer, x, c);
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x.data()[i];
    x.data()[i] = saved + h;
    const double up = linear_output_loss(c)(layer.forward(x), nullptr);
    x.data()[i] = saved - h;
    const double down = linear_output_loss(c)(layer.forward(x), nullptr);
    x.data()[i] = saved;
    EXPECT_NEAR(g.dx.data()[i], (up - down) / (2 * h), 1e-8);
  }
}

TEST(PoetBackwardTest, ExactLayersHaveNoBackward) {
  PoetLayer layer = make_layer(8, 6, SpoVariant::kFullyStochastic, 4, 3, 15, true);
  PoetCache cache;
  layer.forward(random_matrix(2, 8, 1), &cache);
  EXPECT_THROW(layer.backward(cache, Matrix(2, 6)), Error);
}

TEST(MergeTest, ZeroThetaMergesAreBitExactIdentity) {
  PoetLayer layer = make_layer(9, 7, SpoVariant::kFullyStochastic, 4, 3, 16);
  const Matrix w0 = layer.weight();
  for (int i = 0; i < 5; ++i) layer.merge_reinit();
  EXPECT_EQ(layer.weight(), w0);
  EXPECT_EQ(layer.cycle(), 5u);
}

TEST(MergeTest, ForwardIsUnchangedAcrossMerges) {
  for (SpoVariant v : {SpoVariant::kFullyStochastic, SpoVariant::kBlockStochastic}) {
    PoetLayer layer = make_layer(12, 8, v, 4, 4, 17);
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      randomize(layer, 1000 + i, 0.2);
      const Matrix x = random_matrix(6, 12, 2000 + i);
      const Matrix before = layer.forward(x);
      layer.merge_reinit();
      worst = std::max(worst, max_abs_diff(layer.forward(x), before));
      EXPECT_TRUE(theta_is_zero(layer.primitive(Side::kLeft)));
      EXPECT_TRUE(theta_is_zero(layer.primitive(Side::kRight)));
      EXPECT_EQ(layer.merged_weight(), layer.weight());
    }
    EXPECT_LE(worst, 1e-12);
  }
}

TEST(MergeTest, MergesResampleSupports) {
  PoetLayer layer = make_layer(16, 16, SpoVariant::kFullyStochastic, 4, 4, 18);
  const auto first = std::get<FsPrimitive>(layer.primitive(Side::kLeft)).set;
  layer.merge_reinit();
  EXPECT_FALSE(std::get<FsPrimitive>(layer.primitive(Side::kLeft)).set == first);
  // Same key and cycle give the same support.
  PoetLayer twin = make_layer(16, 16, SpoVariant::kFullyStochastic, 4, 4, 18);
  twin.merge_reinit();
  EXPECT_EQ(std::get<FsPrimitive>(twin.primitive(Side::kLeft)).set,
            std::get<FsPrimitive>(layer.primitive(Side::kLeft)).set);
}

TEST(MergeTest, ExactMergesPreserveSpectrum) {
  PoetLayer layer = make_layer(10, 6, SpoVariant::kFullyStochastic, 5, 3, 19, true);
  const auto s0 = singular_values(layer.weight());
  for (int i = 0; i < 3; ++i) {
    randomize(layer, 50 + i, 0.7);
    layer.merge_reinit();
  }
  const auto s = singular_values(layer.weight());
  for (std::size_t i = 0; i < s0.size(); ++i) EXPECT_NEAR(s[i], s0[i], 1e-9);
}

TEST(ProbeTest, StartsAtOneAndTracksTheProductOfFactors) {
  PoetLayer layer = make_layer(8, 6, SpoVariant::kFullyStochastic, 4, 3, 20);
  const auto v_r = random_vector(8, 1), v_p = random_vector(6, 2);
  layer.set_probe(v_r, v_p);
  EXPECT_EQ(layer.probe(Side::kLeft), 1.0);
  EXPECT_EQ(layer.probe(Side::kRight), 1.0);
  Matrix r_total = Matrix::identity(8), p_total = Matrix::identity(6);
  for (int i = 0; i < 3; ++i) {
    randomize(layer, 60 + i, 0.3);
    r_total = naive_matmul(explicit_primitive(layer.primitive(Side::kLeft), false), r_total);
    p_total = naive_matmul(p_total, explicit_primitive(layer.primitive(Side::kRight), false));
    layer.merge_reinit();
  }
  randomize(layer, 70, 0.3);
  r_total = naive_matmul(explicit_primitive(layer.primitive(Side::kLeft), false), r_total);
  p_total = naive_matmul(p_total, explicit_primitive(layer.primitive(Side::kRight), false));
  auto quad = [](const Matrix& a, const std::vector<double>& v, bool row) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      den += v[i] * v[i];
      for (std::size_t j = 0; j < v.size(); ++j) num += row ? v[j] * a(j, i) * v[i] : v[i] * a(i, j) * v[j];
    }
    return num / den;
  };
  EXPECT_NEAR(layer.probe(Side::kLeft), quad(r_total, v_r, false), 1e-12);
  EXPECT_NEAR(layer.probe(Side::kRight), quad(p_total, v_p, true), 1e-12);
}

TEST(CountParamsTest, TableFormulas) {
  EXPECT_EQ(count_params(SpoVariant::kBlockStochastic, 512, 512, 64).trainable, 32256u);
  EXPECT_EQ(count_params(SpoVariant::kBlockStochastic, 512, 1280, 64).trainable, 56448u);
  for (std::size_t b : {2u, 5u, 16u, 64u}) {
    const ParamCount c = count_params(SpoVariant::kFullyStochastic, 128, 96, b);
    EXPECT_EQ(c.trainable, b * (b - 1));
    EXPECT_EQ(c.memory_units, 128u * 96u + 3 * b * (b - 1));
  }
  const ParamCount bs = count_params(SpoVariant::kBlockStochastic, 96, 64, 8);
  EXPECT_EQ(2 * bs.trainable, (96u + 64u) * 7u);
  EXPECT_EQ(2 * bs.memory_units, 2 * 96u * 64u + 3 * (96u + 64u) * 7u);
  EXPECT_EQ(count_params(SpoVariant::kBlockStochastic, 64, 64, 1).trainable, 0u);
  EXPECT_EQ(count_params(SpoVariant::kFullyStochastic, 64, 32, 16, 0).trainable, 120u);
  EXPECT_THROW(count_params(SpoVariant::kBlockStochastic, 100, 64, 8), ArgumentError);
  EXPECT_THROW(count_params(SpoVariant::kFullyStochastic, 8, 8, 9), ArgumentError);
}

TEST(CountParamsTest, SixtyMillionModelBlockStochastic) {
  // Hidden 512, intermediate 1280, 8 blocks; q, k, v, o are 512 x 512 and
  // gate, up, down pair 512 with 1280.
  std::size_t total = 0;
  for (int blk = 0; blk < 8; ++blk) {
    for (int i = 0; i < 4; ++i) total += count_params(SpoVariant::kBlockStochastic, 512, 512, 64).trainable;
    total += count_params(SpoVariant::kBlockStochastic, 512, 1280, 64).trainable;
    total += count_params(SpoVariant::kBlockStochastic, 512, 1280, 64).trainable;
    total += count_params(SpoVariant::kBlockStochastic, 1280, 512, 64).trainable;
  }
  EXPECT_EQ(total, 2386944u);
}

}  // namespace
}  // namespace poet
