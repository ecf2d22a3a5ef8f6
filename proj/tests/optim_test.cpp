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


#include "poet/optim.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "poet/error.hpp"

namespace poet {
namespace {

TEST(AdamWTest, ZeroGradientWithoutDecayLeavesParams) {
  std::vector<double> p{1.0, -2.0, 3.0};
  const std::vector<double> g(3, 0.0);
  AdamState s;
  for (int i = 0; i < 5; ++i) adamw_step(p, g, s, 0.1, 0.0);
  EXPECT_EQ(p, (std::vector<double>{1.0, -2.0, 3.0}));
  EXPECT_EQ(s.step, 5);
}

TEST(AdamWTest, FirstStepMovesByLearningRate) {
  // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps).
  std::vector<double> p{0.5};
  AdamState s;
  adamw_step(p, std::vector<double>{1.0}, s, 0.01, 0.0);
  EXPECT_NEAR(p[0], 0.5 - 0.01 / (1.0 + 1e-8), 1e-15);
  // Constant gradients keep m_hat / sqrt(v_hat) at 1.
  for (int i = 0; i < 10; ++i) adamw_step(p, std::vector<double>{1.0}, s, 0.01, 0.0);
  EXPECT_NEAR(p[0], 0.5 - 11 * 0.01 / (1.0 + 1e-8), 1e-12);
}

TEST(AdamWTest, DecoupledWeightDecay) {
  std::vector<double> p{2.0};
  AdamState s;
  adamw_step(p, std::vector<double>{0.0}, s, 0.1, 0.5);
  EXPECT_NEAR(p[0], 2.0 - 0.1 * 0.5 * 2.0, 1e-15);
}

TEST(AdamWTest, QuadraticConvergesMonotonically) {
  // f(x) = x^2 / 2, gradient x, from x = 1.
  std::vector<double> x{1.0};
  AdamState s;
  double prev = std::fabs(x[0]);
  for (int i = 0; i < 100; ++i) {
    adamw_step(x, std::vector<double>{x[0]}, s, 0.01, 0.0);
    if (i >= 5) EXPECT_LT(std::fabs(x[0]), prev) << "step " << i;
    prev = std::fabs(x[0]);
  }
  EXPECT_LT(std::fabs(x[0]), 0.5);
}

TEST(AdamWTest, NonFiniteGradientReportsStep) {
  std::vector<double> p{1.0};
  AdamState s;
  try {
    adamw_step(p, std::vector<double>{std::numeric_limits<double>::quiet_NaN()}, s, 0.1, 0.0, {}, 17);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.step(), 17);
  }
  EXPECT_EQ(p[0], 1.0);
  EXPECT_THROW(adamw_step(p, std::vector<double>{1.0, 2.0}, s, 0.1, 0.0), DimensionError);
  EXPECT_THROW(adamw_step(p, std::vector<double>{1.0}, s, -0.1, 0.0), ArgumentError);
}

TEST(AdamWTest, ResetClearsMoments) {
  std::vector<double> p{1.0};
  AdamState s;
  adamw_step(p, std::vector<double>{3.0}, s, 0.1, 0.0);
  s.reset();
  EXPECT_EQ(s.step, 0);
  EXPECT_TRUE(s.m.empty());
}

TEST(CosineLrTest, Endpoints) {
  EXPECT_DOUBLE_EQ(cosine_lr(0, 1000, 2.0, 0, 0.01), 2.0);
  EXPECT_NEAR(cosine_lr(1000, 1000, 2.0, 0, 0.01), 0.02, 1e-15);
  EXPECT_NEAR(cosine_lr(500, 1000, 1.0, 0, 0.01), 0.505, 1e-15);
}

TEST(CosineLrTest, WarmupIsLinearThenDecays) {
  EXPECT_NEAR(cosine_lr(0, 100, 1.0, 10, 0.01), 0.1, 1e-15);
  EXPECT_NEAR(cosine_lr(4, 100, 1.0, 10, 0.01), 0.5, 1e-15);
  EXPECT_NEAR(cosine_lr(10, 100, 1.0, 10, 0.01), 1.0, 1e-15);
  double prev = 2.0;
  for (long t = 10; t <= 100; ++t) {
    const double lr = cosine_lr(t, 100, 1.0, 10, 0.01);
    EXPECT_LE(lr, prev);
    prev = lr;
  }
  EXPECT_NEAR(prev, 0.01, 1e-15);
}

TEST(ClipTest, BelowThresholdUnchanged) {
  std::vector<double> a{0.03, 0.04};
  std::vector<std::span<double>> g{a};
  EXPECT_NEAR(clip_gradients(g, 0.1), 0.05, 1e-15);
  EXPECT_EQ(a, (std::vector<double>{0.03, 0.04}));
}

TEST(ClipTest, GlobalNormAcrossGroups) {
  std::vector<double> a{0.12}, b{0.16};  // global norm 0.2
  std::vector<std::span<double>> g{a, b};
  EXPECT_NEAR(clip_gradients(g, 0.1), 0.2, 1e-15);
  EXPECT_NEAR(a[0], 0.06, 1e-15);
  EXPECT_NEAR(b[0], 0.08, 1e-15);
  EXPECT_THROW(clip_gradients(g, 0.0), ArgumentError);
}

TEST(ClipTest, PostMergeWindowTightens) {
  const ClipPolicy policy;  // 0.1, 10 steps, 0.5x
  EXPECT_DOUBLE_EQ(effective_clip_threshold(policy, -1), 0.1);
  EXPECT_DOUBLE_EQ(effective_clip_threshold(policy, 0), 0.05);
  EXPECT_DOUBLE_EQ(effective_clip_threshold(policy, 9), 0.05);
  EXPECT_DOUBLE_EQ(effective_clip_threshold(policy, 10), 0.1);
  std::vector<double> a{0.1};  // norm equals the configured threshold
  std::vector<std::span<double>> g{a};
  clip_gradients(g, policy, 3);
  EXPECT_NEAR(a[0], 0.05, 1e-15);
  std::vector<double> b{0.1};
  std::vector<std::span<double>> h{b};
  clip_gradients(h, policy, 12);
  EXPECT_EQ(b[0], 0.1);
}

}  // namespace
}  // namespace poet
