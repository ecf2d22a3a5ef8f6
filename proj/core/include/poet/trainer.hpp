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

// The training loop.
//
// Each step: forward/backward on a minibatch, global-norm clipping (tightened
// for a few steps after every merge), AdamW on theta and on the directly
// trained tensors, then merge-then-reinitialize every merge_every steps and an
// evaluation every eval_every steps (and at step 0 and the last step).
// Everything random is keyed by (seed, purpose, step or cycle), so a run
// resumed from a checkpoint continues exactly as the uninterrupted run.

#ifndef POET_TRAINER_HPP_
#define POET_TRAINER_HPP_

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "poet/checkpoint.hpp"
#include "poet/config.hpp"
#include "poet/data.hpp"
#include "poet/metrics.hpp"
#include "poet/models.hpp"

namespace poet {

struct TrainOptions {
  /// Directory for metrics.csv and checkpoint.poet; empty writes nothing.
  std::filesystem::path out_dir;
  /// Continue from this checkpoint.
  std::optional<std::filesystem::path> resume;
  /// Stop once this step has completed (after its eval, if any). -1: run to the end.
  long stop_after = -1;
  /// Called after every evaluation.
  std::function<void(const MetricsRecord&)> on_eval;
};

/// A model, its data and its optimizer state, advanced one step at a time.
class TrainSession {
 public:
  explicit TrainSession(TrainConfig cfg);

  const TrainConfig& config() const { return cfg_; }
  Model& model() { return *model_; }
  const Model& model() const { return *model_; }
  long step() const { return step_; }
  const std::vector<std::string>& matrix_names() const { return names_; }
  const std::vector<MetricsRecord>& metrics() const { return metrics_; }
  /// Effective weights at step 0, in projection order.
  const std::vector<Matrix>& initial_weights() const { return initial_; }
  std::vector<Matrix> effective_weights() const;

  /// Runs step step()+1. Throws DivergenceError on a non-finite loss or gradient.
  void advance();
  bool eval_due() const;
  /// Loss of the current model on the fixed train subset / validation set.
  double train_loss();
  double val_loss();
  /// Appends a metrics row for the current step and extends the trajectories.
  const MetricsRecord& evaluate();
  /// Folds every live primitive into its weight now (outside the cadence).
  void merge_all();

  Checkpoint save() const;
  /// Restores a checkpoint written by save() for the same config.
  void load(const Checkpoint& ck);

 private:
  Batch train_batch(long step) const;
  double learning_rate(long step) const;

  TrainConfig cfg_;
  std::optional<LabeledPoints> points_train_;
  std::optional<LabeledPoints> points_val_;
  std::optional<CharCorpus> corpus_;
  Batch train_eval_;
  Batch val_eval_;
  std::unique_ptr<Model> model_;
  std::vector<std::string> names_;
  std::vector<Matrix> initial_;
  long step_ = 0;
  long since_merge_ = -1;  // -1 until the first merge
  double merged_orth_peak_ = 0.0;  // worst merged e_orth since the last eval
  std::vector<MetricsRecord> metrics_;
  std::vector<std::vector<double>> probe_traj_r_;  // flattened (step, value) pairs
  std::vector<std::vector<double>> probe_traj_p_;
  std::vector<std::vector<double>> sigma_traj_;    // flattened (step, sigma...) rows
};

struct TrainResult {
  std::vector<std::string> matrix_names;
  std::vector<MetricsRecord> metrics;
  std::vector<Matrix> initial_weights;
  std::vector<Matrix> final_weights;
  long steps_completed = 0;
};

TrainResult train(const TrainConfig& cfg, const TrainOptions& opts = {});

/// Loss of a layer output y; writes dL/dy into *grad.
using OutputLoss = std::function<double(const Matrix& y, Matrix* grad)>;

/// max over every theta entry of |analytic - central difference| /
/// (|analytic| + 1e-12), differentiating loss(forward(x)).
double finite_diff_check(const PoetLayer& layer, const Matrix& x, const OutputLoss& loss,
                         double h);

}  // namespace poet

#endif  // POET_TRAINER_HPP_
