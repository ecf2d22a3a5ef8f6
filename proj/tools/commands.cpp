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

#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <iomanip>
#include <vector>

#include "poet/checkpoint.hpp"
#include "poet/config.hpp"
#include "poet/error.hpp"
#include "poet/models.hpp"
#include "poet/poet_layer.hpp"
#include "poet/spo.hpp"
#include "poet/trainer.hpp"

namespace poet::cli {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// Maps library exceptions onto exit codes.
template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const DivergenceError& e) {
    err << "diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "i/o error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
}

std::string available(const Checkpoint& ck, const std::string& prefix) {
  std::string s;
  for (const auto& n : ck.names_with_prefix(prefix)) s += "\n  " + n.substr(prefix.size());
  return s;
}

}  // namespace

int cmd_train(const TrainArgs& args, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    TrainConfig cfg = load_config(args.config);
    if (args.seed) {
      cfg.seed = *args.seed;
      cfg.init.seed = *args.seed;
    }
    TrainOptions opts;
    opts.out_dir = args.out_dir;
    opts.resume = args.resume;
    opts.on_eval = [&](const MetricsRecord& r) {
      out << "step " << r.step << "  train_loss " << std::setprecision(6) << r.train_loss
          << "  val_loss " << r.val_loss << "  e_orth " << r.e_orth_max << '\n';
    };
    const TrainResult res = train(cfg, opts);
    out << "completed " << res.steps_completed << " steps; metrics in "
        << (args.out_dir / "metrics.csv").string() << '\n';
    return kOk;
  });
}

int cmd_count_params(const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const TrainConfig cfg = load_config(config);
    if (cfg.spo.mode != ProjectionMode::kPoet) {
      throw ConfigError("count-params needs spo.mode = poet");
    }
    out << "matrix,rows,cols,b_R,b_P,trainable,memory_units\n";
    std::size_t total = 0;
    std::size_t memory = 0;
    bool degenerate = false;
    for (const auto& s : projection_shapes(cfg)) {
      const auto [b_r, b_p] = resolve_block_sizes(cfg.spo, s.rows, s.cols);
      const ParamCount c = count_params(cfg.spo.variant, s.rows, s.cols, b_r, b_p);
      degenerate = degenerate || c.trainable == 0;
      total += c.trainable;
      memory += c.memory_units;
      out << s.name << ',' << s.rows << ',' << s.cols << ',' << b_r << ',' << b_p << ','
          << c.trainable << ',' << c.memory_units << '\n';
    }
    out << "total,,,,," << total << ',' << memory << '\n';
    if (degenerate) {
      err << "warning: some matrices have no trainable orthogonal parameters "
             "(block size below 2)\n";
    }
    return kOk;
  });
}

int cmd_probe(const std::filesystem::path& checkpoint, const std::string& matrix,
              std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ck = Checkpoint::read(checkpoint);
    const std::string key = "probe/" + matrix;
    if (!ck.contains(key)) {
      throw ArgumentError("no probe trajectory for '" + matrix + "'; available:" +
                          available(ck, "probe/"));
    }
    const Matrix& t = ck.get(key);
    out << "step,cosine\n";
    for (std::size_t r = 0; r < t.rows(); ++r) {
      out << static_cast<long>(t(r, 0)) << ',' << fmt(t(r, 1)) << '\n';
    }
    return kOk;
  });
}

int cmd_spectrum(const std::filesystem::path& checkpoint, const std::string& matrix,
                 std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Checkpoint ck = Checkpoint::read(checkpoint);
    const std::string key = "sigma/" + matrix;
    if (!ck.contains(key)) {
      throw ArgumentError("no singular-value trajectory for '" + matrix + "'; available:" +
                          available(ck, "sigma/"));
    }
    const Matrix& t = ck.get(key);
    out << "step";
    for (std::size_t c = 1; c < t.cols(); ++c) out << ",sigma_" << c;
    out << '\n';
    for (std::size_t r = 0; r < t.rows(); ++r) {
      out << static_cast<long>(t(r, 0));
      for (std::size_t c = 1; c < t.cols(); ++c) out << ',' << fmt(t(r, c));
      out << '\n';
    }
    return kOk;
  });
}

int cmd_factorize(std::size_t m, std::size_t b, double alpha, std::uint64_t seed,
                  std::size_t trials, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (m > 64) throw ArgumentError("factorize: m must be <= 64");
    if (b < 2 || b > m) throw ArgumentError("factorize: need 2 <= b <= m");
    if (!(alpha > 0.0)) throw ArgumentError("factorize: alpha must be positive");
    if (trials == 0) throw ArgumentError("factorize: trials must be >= 1");
    const RngKey root = RngKey(seed).derive("factorize");
    std::size_t successes = 0;
    std::size_t exhausted = 0;
    double primitives = 0.0;
    double worst_residual = 0.0;
    double remaining_mass = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
      const Matrix target = random_rotation(m, root.derive(t).derive("target"));
      try {
        const Factorization f = factorize_target(target, b, alpha, root.derive(t).derive("sets"));
        const double residual = frobenius_norm(subtract(compose(f.primitives, m), target));
        worst_residual = std::max(worst_residual, residual);
        if (residual <= 1e-6) {
          ++successes;
          primitives += static_cast<double>(f.primitives.size());
        }
      } catch (const BudgetExhaustedError& e) {
        ++exhausted;
        remaining_mass += e.remaining_mass();
      }
    }
    out << "m," << m << "\nb," << b << "\nalpha," << fmt(alpha) << "\nbudget,"
        << factorization_budget(m, b, alpha) << "\ntrials," << trials << "\nsuccesses,"
        << successes << "\nsuccess_rate," << fmt(static_cast<double>(successes) / trials)
        << "\nmean_primitives,"
        << fmt(successes ? primitives / static_cast<double>(successes) : 0.0)
        << "\nmax_residual," << fmt(worst_residual) << "\nbudget_exhausted," << exhausted
        << '\n';
    if (exhausted > 0) {
      err << "budget exhausted in " << exhausted << " of " << trials
          << " trials (mean remaining sub-diagonal mass "
          << fmt(remaining_mass / static_cast<double>(exhausted)) << ")\n";
    }
    return kOk;
  });
}

}  // namespace poet::cli
