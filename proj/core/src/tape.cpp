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

#include "poet/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "poet/error.hpp"

namespace poet {

namespace {

void require_same(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shapes " + a.shape_string() + " and " +
                         b.shape_string());
  }
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tape::Var Tape::push(Matrix value, std::function<void(Tape&, const Matrix&)> back) {
  nodes_.push_back({std::move(value), Matrix(), std::move(back)});
  return nodes_.size() - 1;
}

Matrix& Tape::grad_of(Var v) {
  Node& n = nodes_[v];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Tape::Var Tape::input(Matrix value) { return push(std::move(value)); }

Tape::Var Tape::project(Var x, Projection& proj) {
  if (proj.is_poet()) {
    auto cache = std::make_shared<PoetCache>();
    Matrix y = proj.poet().forward(value(x), cache.get());
    return push(std::move(y), [x, &proj, cache](Tape& t, const Matrix& g) {
      axpy(1.0, proj.poet().backward(*cache, g), t.grad_of(x));
    });
  }
  return project_param(x, proj.direct());
}

Tape::Var Tape::project_param(Var x, Parameter& w) {
  Matrix y = matmul(value(x), w.value);
  return push(std::move(y), [x, &w](Tape& t, const Matrix& g) {
    axpy(1.0, matmul_tn(t.value(x), g), w.grad);
    axpy(1.0, matmul_nt(g, w.value), t.grad_of(x));
  });
}

Tape::Var Tape::add_bias(Var x, Parameter& bias) {
  const Matrix& xv = value(x);
  if (bias.value.rows() != 1 || bias.value.cols() != xv.cols()) {
    throw DimensionError("add_bias: bias " + bias.value.shape_string() + " for input " +
                         xv.shape_string());
  }
  Matrix y = xv;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += bias.value(0, j);
  return push(std::move(y), [x, &bias](Tape& t, const Matrix& g) {
    axpy(1.0, g, t.grad_of(x));
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) bias.grad(0, j) += g(i, j);
  });
}

Tape::Var Tape::add(Var a, Var b) {
  require_same(value(a), value(b), "add");
  return push(poet::add(value(a), value(b)), [a, b](Tape& t, const Matrix& g) {
    axpy(1.0, g, t.grad_of(a));
    axpy(1.0, g, t.grad_of(b));
  });
}

Tape::Var Tape::mul(Var a, Var b) {
  require_same(value(a), value(b), "mul");
  Matrix y = value(a);
  auto yd = y.data();
  auto bd = value(b).data();
  for (std::size_t i = 0; i < yd.size(); ++i) yd[i] *= bd[i];
  return push(std::move(y), [a, b](Tape& t, const Matrix& g) {
    auto gd = g.data();
    auto av = t.value(a).data();
    auto bv = t.value(b).data();
    auto ga = t.grad_of(a).data();
    auto gb = t.grad_of(b).data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
      ga[i] += gd[i] * bv[i];
      gb[i] += gd[i] * av[i];
    }
  });
}

Tape::Var Tape::relu(Var x) {
  Matrix y = value(x);
  for (double& e : y.data()) e = e > 0.0 ? e : 0.0;
  return push(std::move(y), [x](Tape& t, const Matrix& g) {
    auto xv = t.value(x).data();
    auto gx = t.grad_of(x).data();
    auto gd = g.data();
    for (std::size_t i = 0; i < gd.size(); ++i)
      if (xv[i] > 0.0) gx[i] += gd[i];
  });
}

Tape::Var Tape::silu(Var x) {
  Matrix y = value(x);
  for (double& e : y.data()) e = e * sigmoid(e);
  return push(std::move(y), [x](Tape& t, const Matrix& g) {
    auto xv = t.value(x).data();
    auto gx = t.grad_of(x).data();
    auto gd = g.data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
      const double s = sigmoid(xv[i]);
      gx[i] += gd[i] * s * (1.0 + xv[i] * (1.0 - s));
    }
  });
}

Tape::Var Tape::rmsnorm(Var x, Parameter& gain, double eps) {
  const Matrix& xv = value(x);
  const std::size_t n = xv.cols();
  if (gain.value.rows() != 1 || gain.value.cols() != n) {
    throw DimensionError("rmsnorm: gain " + gain.value.shape_string() + " for input " +
                         xv.shape_string());
  }
  auto inv_rms = std::make_shared<std::vector<double>>(xv.rows());
  Matrix y(xv.rows(), n);
  for (std::size_t i = 0; i < xv.rows(); ++i) {
    double ms = 0.0;
    for (std::size_t j = 0; j < n; ++j) ms += xv(i, j) * xv(i, j);
    const double r = 1.0 / std::sqrt(ms / static_cast<double>(n) + eps);
    (*inv_rms)[i] = r;
    for (std::size_t j = 0; j < n; ++j) y(i, j) = xv(i, j) * r * gain.value(0, j);
  }
  return push(std::move(y), [x, &gain, inv_rms](Tape& t, const Matrix& g) {
    const Matrix& xv = t.value(x);
    Matrix& gx = t.grad_of(x);
    const std::size_t n = xv.cols();
    for (std::size_t i = 0; i < xv.rows(); ++i) {
      const double r = (*inv_rms)[i];
      double proj = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double xhat = xv(i, j) * r;
        gain.grad(0, j) += g(i, j) * xhat;
        proj += g(i, j) * gain.value(0, j) * xhat;
      }
      proj /= static_cast<double>(n);
      for (std::size_t j = 0; j < n; ++j) {
        const double xhat = xv(i, j) * r;
        gx(i, j) += r * (g(i, j) * gain.value(0, j) - xhat * proj);
      }
    }
  });
}

Tape::Var Tape::embed(std::span<const int> ids, Parameter& table) {
  const std::size_t d = table.value.cols();
  Matrix y(ids.size(), d);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= table.value.rows()) {
      throw ArgumentError("embed: token id " + std::to_string(ids[i]) + " out of range");
    }
    auto src = table.value.row_span(static_cast<std::size_t>(ids[i]));
    std::copy(src.begin(), src.end(), y.row_span(i).begin());
  }
  std::vector<int> kept(ids.begin(), ids.end());
  return push(std::move(y), [kept = std::move(kept), &table](Tape&, const Matrix& g) {
    for (std::size_t i = 0; i < kept.size(); ++i) {
      auto dst = table.grad.row_span(static_cast<std::size_t>(kept[i]));
      auto src = g.row_span(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

Tape::Var Tape::add_positional(Var x, Parameter& table, std::size_t seq_len) {
  const Matrix& xv = value(x);
  if (seq_len == 0 || xv.rows() % seq_len != 0 || table.value.rows() < seq_len ||
      table.value.cols() != xv.cols()) {
    throw DimensionError("add_positional: table " + table.value.shape_string() + ", input " +
                         xv.shape_string() + ", seq_len " + std::to_string(seq_len));
  }
  Matrix y = xv;
  for (std::size_t i = 0; i < y.rows(); ++i)
    for (std::size_t j = 0; j < y.cols(); ++j) y(i, j) += table.value(i % seq_len, j);
  return push(std::move(y), [x, &table, seq_len](Tape& t, const Matrix& g) {
    axpy(1.0, g, t.grad_of(x));
    for (std::size_t i = 0; i < g.rows(); ++i)
      for (std::size_t j = 0; j < g.cols(); ++j) table.grad(i % seq_len, j) += g(i, j);
  });
}

Tape::Var Tape::causal_attention(Var q, Var k, Var v, std::size_t seq_len, std::size_t heads) {
  const Matrix& qv = value(q);
  require_same(qv, value(k), "causal_attention");
  require_same(qv, value(v), "causal_attention");
  const std::size_t d = qv.cols();
  if (heads == 0 || d % heads != 0 || seq_len == 0 || qv.rows() % seq_len != 0) {
    throw DimensionError("causal_attention: width " + std::to_string(d) + ", heads " +
                         std::to_string(heads) + ", rows " + std::to_string(qv.rows()) +
                         ", seq_len " + std::to_string(seq_len));
  }
  const std::size_t dh = d / heads;
  const std::size_t nseq = qv.rows() / seq_len;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  // probs[(s * heads + h)] is the seq_len x seq_len attention matrix.
  auto probs = std::make_shared<std::vector<Matrix>>(nseq * heads);
  const Matrix& kv = value(k);
  const Matrix& vv = value(v);
  Matrix out(qv.rows(), d);
  for (std::size_t s = 0; s < nseq; ++s) {
    const std::size_t base = s * seq_len;
    for (std::size_t h = 0; h < heads; ++h) {
      const std::size_t c0 = h * dh;
      Matrix p(seq_len, seq_len);
      for (std::size_t i = 0; i < seq_len; ++i) {
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j <= i; ++j) {
          double acc = 0.0;
          for (std::size_t c = 0; c < dh; ++c) acc += qv(base + i, c0 + c) * kv(base + j, c0 + c);
          p(i, j) = acc * scale;
          mx = std::max(mx, p(i, j));
        }
        double z = 0.0;
        for (std::size_t j = 0; j <= i; ++j) {
          p(i, j) = std::exp(p(i, j) - mx);
          z += p(i, j);
        }
        for (std::size_t j = 0; j <= i; ++j) p(i, j) /= z;
        for (std::size_t j = 0; j <= i; ++j) {
          const double w = p(i, j);
          for (std::size_t c = 0; c < dh; ++c) out(base + i, c0 + c) += w * vv(base + j, c0 + c);
        }
      }
      (*probs)[s * heads + h] = std::move(p);
    }
  }
  return push(std::move(out), [q, k, v, seq_len, heads, dh, nseq, scale, probs](
                                  Tape& t, const Matrix& g) {
    const Matrix& qv = t.value(q);
    const Matrix& kv = t.value(k);
    const Matrix& vv = t.value(v);
    Matrix& gq = t.grad_of(q);
    Matrix& gk = t.grad_of(k);
    Matrix& gv = t.grad_of(v);
    std::vector<double> dp(seq_len);
    for (std::size_t s = 0; s < nseq; ++s) {
      const std::size_t base = s * seq_len;
      for (std::size_t h = 0; h < heads; ++h) {
        const std::size_t c0 = h * dh;
        const Matrix& p = (*probs)[s * heads + h];
        for (std::size_t i = 0; i < seq_len; ++i) {
          double row = 0.0;
          for (std::size_t j = 0; j <= i; ++j) {
            double acc = 0.0;
            for (std::size_t c = 0; c < dh; ++c) {
              acc += g(base + i, c0 + c) * vv(base + j, c0 + c);
              gv(base + j, c0 + c) += p(i, j) * g(base + i, c0 + c);
            }
            dp[j] = acc;
            row += acc * p(i, j);
          }
          for (std::size_t j = 0; j <= i; ++j) {
            const double ds = p(i, j) * (dp[j] - row) * scale;
            for (std::size_t c = 0; c < dh; ++c) {
              gq(base + i, c0 + c) += ds * kv(base + j, c0 + c);
              gk(base + j, c0 + c) += ds * qv(base + i, c0 + c);
            }
          }
        }
      }
    }
  });
}

Tape::Var Tape::cross_entropy(Var logits, std::span<const int> targets) {
  const Matrix& z = value(logits);
  if (targets.size() != z.rows()) {
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         z.shape_string() + " logits");
  }
  auto probs = std::make_shared<Matrix>(z.rows(), z.cols());
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const int tgt = targets[i];
    if (tgt < 0 || static_cast<std::size_t>(tgt) >= z.cols()) {
      throw ArgumentError("cross_entropy: target " + std::to_string(tgt) + " out of range");
    }
    double mx = z(i, 0);
    for (std::size_t j = 1; j < z.cols(); ++j) mx = std::max(mx, z(i, j));
    double sum = 0.0;
    for (std::size_t j = 0; j < z.cols(); ++j) {
      (*probs)(i, j) = std::exp(z(i, j) - mx);
      sum += (*probs)(i, j);
    }
    for (std::size_t j = 0; j < z.cols(); ++j) (*probs)(i, j) /= sum;
    total += std::log(sum) + mx - z(i, static_cast<std::size_t>(tgt));
  }
  const double n = static_cast<double>(z.rows());
  std::vector<int> kept(targets.begin(), targets.end());
  return push(Matrix(1, 1, total / n),
              [logits, probs, kept = std::move(kept), n](Tape& t, const Matrix& g) {
                Matrix& gz = t.grad_of(logits);
                const double s = g(0, 0) / n;
                for (std::size_t i = 0; i < gz.rows(); ++i) {
                  for (std::size_t j = 0; j < gz.cols(); ++j) gz(i, j) += s * (*probs)(i, j);
                  gz(i, static_cast<std::size_t>(kept[i])) -= s;
                }
              });
}

Tape::Var Tape::bce_with_logits(Var logits, std::span<const double> labels) {
  const Matrix& z = value(logits);
  if (z.cols() != 1 || labels.size() != z.rows()) {
    throw DimensionError("bce_with_logits: logits " + z.shape_string() + " with " +
                         std::to_string(labels.size()) + " labels");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < z.rows(); ++i) {
    const double x = z(i, 0);
    total += std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))) - labels[i] * x;
  }
  const double n = static_cast<double>(z.rows());
  std::vector<double> kept(labels.begin(), labels.end());
  return push(Matrix(1, 1, total / n),
              [logits, kept = std::move(kept), n](Tape& t, const Matrix& g) {
                Matrix& gz = t.grad_of(logits);
                const Matrix& zv = t.value(logits);
                for (std::size_t i = 0; i < gz.rows(); ++i) {
                  gz(i, 0) += g(0, 0) * (sigmoid(zv(i, 0)) - kept[i]) / n;
                }
              });
}

void Tape::backward(Var loss) {
  if (nodes_[loss].value.size() != 1) throw DimensionError("Tape::backward: loss must be 1x1");
  grad_of(loss)(0, 0) = 1.0;
  for (std::size_t i = loss + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.back || n.grad.empty()) continue;
    // Closures only touch the grads of earlier nodes.
    const Matrix g = std::move(n.grad);
    n.back(*this, g);
  }
}

}  // namespace poet
