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


#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "poet/config.hpp"
#include "poet/diagnostics.hpp"
#include "poet/error.hpp"
#include "poet/linalg.hpp"
#include "poet/trainer.hpp"
#include "test_util.hpp"

namespace poet {
namespace {

namespace fs = std::filesystem;

fs::path config_path(const std::string& name) {
  return fs::path(POET_SOURCE_DIR) / "configs" / name;
}

fs::path scratch_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("poet_trainer_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool bit_equal(const Matrix& a, const Matrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         std::memcmp(a.data().data(), b.data().data(), a.size() * sizeof(double)) == 0;
}

TrainConfig short_mlp(long steps = 150) {
  TrainConfig c = load_config(config_path("mlp_poet.json"));
  c.schedule.steps = steps;
  c.schedule.eval_every = 50;
  return c;
}

TrainConfig small_lm() {
  TrainConfig c = load_config(config_path("tiny_lm_poet.json"));
  c.model.hidden = 16;
  c.model.heads = 2;
  c.model.context = 16;
  c.model.blocks = 1;
  c.model.ffn = 32;
  c.schedule.steps = 20;
  c.schedule.eval_every = 10;
  c.schedule.batch_size = 2;
  c.data.eval_windows = 4;
  return c;
}

TEST(Train, ZeroPoetLearningRateKeepsWeightsBitExact) {
  TrainConfig c = short_mlp(120);
  c.optimizer.lr_poet = 0.0;
  const TrainResult r = train(c);
  ASSERT_EQ(r.final_weights.size(), r.initial_weights.size());
  for (std::size_t i = 0; i < r.final_weights.size(); ++i) {
    EXPECT_TRUE(bit_equal(r.final_weights[i], r.initial_weights[i])) << r.matrix_names[i];
  }
}

TEST(Train, MetricsFileIsDeterministic) {
  const fs::path a = scratch_dir("det_a");
  const fs::path b = scratch_dir("det_b");
  train(short_mlp(), {.out_dir = a});
  train(short_mlp(), {.out_dir = b});
  const std::string csv = slurp(a / "metrics.csv");
  EXPECT_FALSE(csv.empty());
  EXPECT_EQ(csv, slurp(b / "metrics.csv"));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST(Train, SeedChangesTheRun) {
  TrainConfig c = short_mlp(50);
  const TrainResult a = train(c);
  c.seed += 1;
  const TrainResult b = train(c);
  EXPECT_NE(a.metrics.back().train_loss, b.metrics.back().train_loss);
}

TEST(Train, ResumeMidCycleMatchesUninterruptedRun) {
  const fs::path full = scratch_dir("full");
  const fs::path first = scratch_dir("first");
  const fs::path second = scratch_dir("second");
  const TrainConfig c = short_mlp(150);
  const TrainResult whole = train(c, {.out_dir = full});
  const TrainResult head = train(c, {.out_dir = first, .stop_after = 70});
  EXPECT_EQ(head.steps_completed, 70);
  const TrainResult tail =
      train(c, {.out_dir = second, .resume = first / "checkpoint.poet"});
  EXPECT_EQ(tail.steps_completed, 150);
  EXPECT_EQ(slurp(full / "metrics.csv"), slurp(second / "metrics.csv"));
  for (std::size_t i = 0; i < whole.final_weights.size(); ++i) {
    EXPECT_TRUE(bit_equal(whole.final_weights[i], tail.final_weights[i])) << whole.matrix_names[i];
  }
  fs::remove_all(full);
  fs::remove_all(first);
  fs::remove_all(second);
}

TEST(Train, ResumeRejectsAForeignCheckpoint) {
  const fs::path dir = scratch_dir("foreign");
  train(short_mlp(10), {.out_dir = dir});
  TrainConfig other = short_mlp(10);
  other.model.layers = {2, 32, 1};
  EXPECT_ANY_THROW(train(other, {.resume = dir / "checkpoint.poet"}));
  fs::remove_all(dir);
}

TEST(Train, EvalCadenceIncludesFirstAndLastStep) {
  const TrainResult r = train(short_mlp(130));
  std::vector<long> steps;
  for (const auto& rec : r.metrics) steps.push_back(rec.step);
  EXPECT_EQ(steps, (std::vector<long>{0, 50, 100, 130}));
}

TEST(Train, ConfiguredBudgetRatioFreezesOneSide) {
  TrainConfig c = short_mlp(1);
  c.spo.budget_ratio = 1.0;
  TrainSession s(c);
  for (const auto& proj : s.model().projections()) {
    EXPECT_EQ(proj.poet().theta_count(Side::kRight), 0u) << proj.name();
    EXPECT_GT(proj.poet().theta_count(Side::kLeft), 0u) << proj.name();
  }
}

TEST(TrainSession, MergeIsTransparentToTheValidationLoss) {
  TrainSession s(short_mlp(200));
  for (int cycle = 0; cycle < 4; ++cycle) {
    for (int i = 0; i < 13; ++i) s.advance();
    const double before = s.val_loss();
    s.merge_all();
    const double after = s.val_loss();
    EXPECT_LE(std::fabs(after - before), 1e-9) << "cycle " << cycle;
  }
}

TEST(TrainSession, FirstForwardEqualsThePlainNetwork) {
  for (TrainConfig c : {short_mlp(1), small_lm()}) {
    TrainConfig direct = c;
    direct.spo.mode = ProjectionMode::kDirect;
    TrainSession poet_run(c);
    TrainSession plain_run(direct);
    EXPECT_EQ(poet_run.val_loss(), plain_run.val_loss()) << to_string(c.model.kind);
    EXPECT_EQ(poet_run.train_loss(), plain_run.train_loss()) << to_string(c.model.kind);
  }
}

TEST(TrainSession, InitialLossIsNearChance) {
  TrainSession s(short_mlp(1));
  EXPECT_NEAR(s.val_loss(), std::log(2.0), 0.2);
}

TEST(TrainSession, TinyLmTrainsAndMerges) {
  const TrainResult r = train(small_lm());
  ASSERT_FALSE(r.metrics.empty());
  EXPECT_EQ(r.matrix_names.size(), 7u);
  for (const auto& rec : r.metrics) {
    EXPECT_TRUE(std::isfinite(rec.val_loss));
    EXPECT_LT(rec.e_orth_max, 1e-3);
  }
  EXPECT_LT(r.metrics.back().train_loss, r.metrics.front().train_loss);
}

// Spectrum contrast between reparameterized and direct training.
std::pair<double, double> worst_drift(const TrainResult& r) {
  double normalized = 0.0;
  double per_sigma = 0.0;
  for (std::size_t i = 0; i < r.final_weights.size(); ++i) {
    const auto now = singular_values(r.final_weights[i]);
    const auto init = singular_values(r.initial_weights[i]);
    normalized = std::max(normalized, max_relative_sigma_drift(now, init));
    per_sigma = std::max(per_sigma, max_per_sigma_drift(now, init));
  }
  return {normalized, per_sigma};
}

TEST(Train, TwoMoonsLearnsAndOnlyDirectTrainingMovesTheSpectrum) {
  const TrainResult poet_run = train(load_config(config_path("mlp_poet.json")));
  const TrainResult direct_run = train(load_config(config_path("mlp_direct.json")));
  EXPECT_GE(poet_run.metrics.front().train_loss, 0.6);
  EXPECT_LE(poet_run.metrics.back().train_loss, 0.3);
  EXPECT_LE(direct_run.metrics.back().train_loss, 0.3);

  const auto [poet_norm, poet_per] = worst_drift(poet_run);
  const auto [direct_norm, direct_per] = worst_drift(direct_run);
  EXPECT_LE(poet_norm, 1e-2);
  EXPECT_LE(poet_per, 1e-2);
  EXPECT_GT(direct_norm, 0.1);
  for (const auto& rec : poet_run.metrics) EXPECT_LT(rec.e_orth_max, 1e-2);
}

TEST(FiniteDiffCheck, RejectsNonPositiveStep) {
  PoetLayerOptions opts;
  opts.block_r = 4;
  opts.block_p = 3;
  const PoetLayer layer(testing::random_matrix(8, 6, 1), opts, RngKey(1));
  const Matrix x = testing::random_matrix(3, 8, 2);
  const OutputLoss loss = [](const Matrix& y, Matrix* g) {
    if (g) *g = Matrix(y.rows(), y.cols(), 1.0);
    double s = 0.0;
    for (double v : y.data()) s += v;
    return s;
  };
  EXPECT_THROW(finite_diff_check(layer, x, loss, 0.0), ArgumentError);
  EXPECT_LE(finite_diff_check(layer, x, loss, 1e-5), 1e-6);
}

}  // namespace
}  // namespace poet
