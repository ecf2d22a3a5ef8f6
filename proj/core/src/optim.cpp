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

#include <cmath>
#include <numbers>
#include <string>

#include "poet/error.hpp"

namespace poet {

void adamw_step(std::span<double> params, std::span<const double> grads, AdamState& state,
                double lr, double weight_decay, const AdamHyper& hyper, long global_step) {
  if (params.size() != grads.size()) {
    throw DimensionError("adamw_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  }
  if (!(lr >= 0.0)) throw ArgumentError("adamw_step: learning rate must be >= 0");
  for (double g : grads) {
    if (!std::isfinite(g)) {
      throw DivergenceError("non-finite gradient at step " + std::to_string(global_step),
                            global_step);
    }
  }
  if (state.m.size() != params.size()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
    state.step = 0;
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(hyper.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(hyper.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * grads[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * grads[i] * grads[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    params[i] -= lr * (m_hat / (std::sqrt(v_hat) + hyper.eps) + weight_decay * params[i]);
  }
}

double cosine_lr(long step, long total, double base_lr, long warmup, double min_ratio) {
  if (total <= 0) return base_lr;
  if (warmup > 0 && step < warmup) {
    return base_lr * static_cast<double>(step + 1) / static_cast<double>(warmup);
  }
  const long span = total - warmup;
  if (span <= 0) return base_lr * min_ratio;
  double progress = static_cast<double>(step - warmup) / static_cast<double>(span);
  progress = std::fmin(std::fmax(progress, 0.0), 1.0);
  const double cosine = 0.5 * (1.0 + std::cos(std::numbers::pi * progress));
  return base_lr * (min_ratio + (1.0 - min_ratio) * cosine);
}

double effective_clip_threshold(const ClipPolicy& policy, long steps_since_merge) {
  const bool in_window = steps_since_merge >= 0 && steps_since_merge < policy.post_merge_steps;
  return in_window ? policy.threshold * policy.post_merge_factor : policy.threshold;
}

double clip_gradients(std::span<const std::span<double>> grads, double threshold) {
  if (!(threshold > 0.0)) throw ArgumentError("clip_gradients: threshold must be positive");
  double ssq = 0.0;
  for (auto g : grads)
    for (double x : g) ssq += x * x;
  const double norm = std::sqrt(ssq);
  if (norm > threshold) {
    const double s = threshold / norm;
    for (auto g : grads)
      for (double& x : g) x *= s;
  }
  return norm;
}

double clip_gradients(std::span<const std::span<double>> grads, const ClipPolicy& policy,
                      long steps_since_merge) {
  return clip_gradients(grads, effective_clip_threshold(policy, steps_since_merge));
}

}  // namespace poet
