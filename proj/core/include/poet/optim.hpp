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

// AdamW, the cosine learning-rate schedule and global-norm clipping.

#ifndef POET_OPTIM_HPP_
#define POET_OPTIM_HPP_

#include <cstddef>
#include <span>
#include <vector>

namespace poet {

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Moments for one parameter group. Sized lazily on the first step.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long step = 0;

  void reset() {
    m.clear();
    v.clear();
    step = 0;
  }
};

/// One decoupled-weight-decay Adam update:
///   p <- p - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * p)
/// Throws DivergenceError (carrying `global_step`) on a non-finite gradient.
void adamw_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                double lr, double weight_decay, const AdamHyper& hyper = {},
                long global_step = -1);

/// Linear warmup to base_lr over `warmup` steps, then cosine decay to
/// min_ratio * base_lr at step == total.
double cosine_lr(long step, long total, double base_lr, long warmup, double min_ratio);

struct ClipPolicy {
  double threshold = 0.1;
  long post_merge_steps = 10;   // length of the tightened window after a merge
  double post_merge_factor = 0.5;
};

/// Threshold in force when `steps_since_merge` steps have been taken since the
/// last merge (negative: no merge has happened yet).
double effective_clip_threshold(const ClipPolicy& policy, long steps_since_merge);

/// Scales every gradient by min(1, threshold / global_norm). Returns the
/// global norm before clipping.
double clip_gradients(std::span<const std::span<double>> grads, double threshold);

/// Same, with the threshold chosen by `policy`.
double clip_gradients(std::span<const std::span<double>> grads, const ClipPolicy& policy,
                      long steps_since_merge);

}  // namespace poet

#endif  // POET_OPTIM_HPP_
