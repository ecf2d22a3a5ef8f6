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

#include "poet/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "poet/error.hpp"

namespace poet {

using nlohmann::json;

std::string to_string(ModelKind k) { return k == ModelKind::kMlp ? "mlp" : "tiny_lm"; }
std::string to_string(DataKind k) { return k == DataKind::kTwoMoons ? "two_moons" : "text"; }
std::string to_string(ProjectionMode m) { return m == ProjectionMode::kPoet ? "poet" : "direct"; }

namespace {

// Reads the keys of one object and rejects any it did not consume.
class Section {
 public:
  Section(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where("") + " must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <typename T>
  void read_optional(const char* key, std::optional<T>& out) {
    seen_.insert(key);
    auto it = obj_.find(key);
    if (it == obj_.end() || it->is_null()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  template <typename Enum, typename Parse>
  void read_enum(const char* key, Enum& out, Parse parse) {
    std::string name;
    bool present = obj_.contains(key);
    read(key, name);
    if (!present) return;
    try {
      out = parse(name);
    } catch (const Error& e) {
      throw ConfigError(where(key) + ": " + e.what());
    }
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    auto it = obj_.find(key);
    return Section(it == obj_.end() ? empty : *it, path_.empty() ? key : path_ + "." + key);
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown config key '" + where(it.key()) + "'");
    }
  }

  std::string where(const std::string& key) const {
    if (key.empty()) return path_.empty() ? "<root>" : path_;
    return path_.empty() ? key : path_ + "." + key;
  }

 private:
  const json& obj_;
  std::string path_;
  std::set<std::string> seen_;
};

ModelKind parse_model_kind(const std::string& s) {
  if (s == "mlp") return ModelKind::kMlp;
  if (s == "tiny_lm") return ModelKind::kTinyLm;
  throw ArgumentError("unknown model kind '" + s + "' (expected mlp or tiny_lm)");
}

DataKind parse_data_kind(const std::string& s) {
  if (s == "two_moons") return DataKind::kTwoMoons;
  if (s == "text") return DataKind::kText;
  throw ArgumentError("unknown dataset kind '" + s + "' (expected two_moons or text)");
}

ProjectionMode parse_mode(const std::string& s) {
  if (s == "poet") return ProjectionMode::kPoet;
  if (s == "direct") return ProjectionMode::kDirect;
  throw ArgumentError("unknown mode '" + s + "' (expected poet or direct)");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

}  // namespace

TrainConfig config_from_json(const json& doc) {
  TrainConfig c;
  Section root(doc, "");
  root.read("seed", c.seed);

  Section model = root.child("model");
  model.read_enum("kind", c.model.kind, parse_model_kind);
  model.read("layers", c.model.layers);
  model.read("hidden", c.model.hidden);
  model.read("heads", c.model.heads);
  model.read("context", c.model.context);
  model.read("blocks", c.model.blocks);
  model.read("ffn", c.model.ffn);
  model.finish();

  Section init = root.child("init");
  init.read_enum("kind", c.init.kind, [](const std::string& s) { return parse_init_kind(s); });
  init.read("std_dev", c.init.std_dev);
  init.finish();

  Section spo = root.child("spo");
  spo.read_enum("mode", c.spo.mode, parse_mode);
  spo.read_enum("variant", c.spo.variant, [](const std::string& s) { return parse_spo_variant(s); });
  spo.read_optional("block_size", c.spo.block_size);
  spo.read("block_fraction", c.spo.block_fraction);
  spo.read_optional("budget_ratio", c.spo.budget_ratio);
  spo.read("neumann_k", c.spo.neumann_k);
  spo.read("merge_every", c.spo.merge_every);
  spo.read("exact_cayley", c.spo.exact_cayley);
  spo.finish();

  Section opt = root.child("optimizer");
  opt.read("lr_poet", c.optimizer.lr_poet);
  opt.read("lr_direct", c.optimizer.lr_direct);
  opt.read("weight_decay", c.optimizer.weight_decay);
  opt.read("beta1", c.optimizer.beta1);
  opt.read("beta2", c.optimizer.beta2);
  opt.read("eps", c.optimizer.eps);
  opt.read("clip", c.optimizer.clip);
  opt.read("post_merge_clip_steps", c.optimizer.post_merge_clip_steps);
  opt.read("post_merge_clip_factor", c.optimizer.post_merge_clip_factor);
  opt.finish();

  Section sched = root.child("schedule");
  sched.read("steps", c.schedule.steps);
  sched.read("warmup", c.schedule.warmup);
  sched.read("min_lr_ratio", c.schedule.min_lr_ratio);
  sched.read("batch_size", c.schedule.batch_size);
  sched.read("eval_every", c.schedule.eval_every);
  sched.finish();

  Section data = root.child("data");
  data.read_enum("kind", c.data.kind, parse_data_kind);
  data.read("train_size", c.data.train_size);
  data.read("val_size", c.data.val_size);
  data.read("noise", c.data.noise);
  data.read("path", c.data.path);
  data.read("val_fraction", c.data.val_fraction);
  data.read("eval_windows", c.data.eval_windows);
  data.finish();

  Section diag = root.child("diagnostics");
  diag.read("energy", c.diagnostics.energy);
  diag.read("spectrum", c.diagnostics.spectrum);
  diag.read("probe", c.diagnostics.probe);
  diag.finish();

  root.finish();
  c.init.seed = c.seed;
  validate_config(c);
  return c;
}

TrainConfig parse_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(doc);
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  TrainConfig c = parse_config(ss.str());
  if (!c.data.path.empty() && std::filesystem::path(c.data.path).is_relative()) {
    c.data.path = (path.parent_path() / c.data.path).lexically_normal().string();
  }
  return c;
}

json config_to_json(const TrainConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["model"] = {{"kind", to_string(c.model.kind)}, {"layers", c.model.layers},
                {"hidden", c.model.hidden},        {"heads", c.model.heads},
                {"context", c.model.context},      {"blocks", c.model.blocks},
                {"ffn", c.model.ffn}};
  j["init"] = {{"kind", to_string(c.init.kind)}, {"std_dev", c.init.std_dev}};
  j["spo"] = {{"mode", to_string(c.spo.mode)},
              {"variant", to_string(c.spo.variant)},
              {"block_size", c.spo.block_size ? json(*c.spo.block_size) : json(nullptr)},
              {"block_fraction", c.spo.block_fraction},
              {"budget_ratio", c.spo.budget_ratio ? json(*c.spo.budget_ratio) : json(nullptr)},
              {"neumann_k", c.spo.neumann_k},
              {"merge_every", c.spo.merge_every},
              {"exact_cayley", c.spo.exact_cayley}};
  j["optimizer"] = {{"lr_poet", c.optimizer.lr_poet},
                    {"lr_direct", c.optimizer.lr_direct},
                    {"weight_decay", c.optimizer.weight_decay},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"eps", c.optimizer.eps},
                    {"clip", c.optimizer.clip},
                    {"post_merge_clip_steps", c.optimizer.post_merge_clip_steps},
                    {"post_merge_clip_factor", c.optimizer.post_merge_clip_factor}};
  j["schedule"] = {{"steps", c.schedule.steps},
                   {"warmup", c.schedule.warmup},
                   {"min_lr_ratio", c.schedule.min_lr_ratio},
                   {"batch_size", c.schedule.batch_size},
                   {"eval_every", c.schedule.eval_every}};
  j["data"] = {{"kind", to_string(c.data.kind)},
               {"train_size", c.data.train_size},
               {"val_size", c.data.val_size},
               {"noise", c.data.noise},
               {"path", c.data.path},
               {"val_fraction", c.data.val_fraction},
               {"eval_windows", c.data.eval_windows}};
  j["diagnostics"] = {{"energy", c.diagnostics.energy},
                      {"spectrum", c.diagnostics.spectrum},
                      {"probe", c.diagnostics.probe}};
  return j;
}

void validate_config(const TrainConfig& c) {
  if (c.model.kind == ModelKind::kMlp) {
    require(c.model.layers.size() >= 2, "model.layers needs at least an input and an output width");
    for (std::size_t w : c.model.layers) require(w >= 1, "model.layers entries must be >= 1");
    require(c.model.layers.back() == 1, "model.layers must end in 1 (binary classifier)");
    require(c.data.kind == DataKind::kTwoMoons, "model mlp needs data.kind two_moons");
    require(c.model.layers.front() == 2, "model.layers must start at 2 for two_moons");
  } else {
    require(c.model.hidden >= 1 && c.model.heads >= 1 && c.model.hidden % c.model.heads == 0,
            "model.hidden must be a positive multiple of model.heads");
    require(c.model.context >= 2, "model.context must be >= 2");
    require(c.model.blocks >= 1, "model.blocks must be >= 1");
    require(c.model.ffn >= 1, "model.ffn must be >= 1");
    require(c.data.kind == DataKind::kText, "model tiny_lm needs data.kind text");
  }
  if (c.init.kind == InitKind::kStandard || c.init.kind == InitKind::kUniformSpectrum) {
    require(c.init.std_dev > 0.0, "init.std_dev must be > 0");
  }
  require(c.spo.merge_every >= 1, "spo.merge_every (T_m) must be >= 1");
  require(c.spo.neumann_k >= 1 && c.spo.neumann_k <= NeumannOrder::kMax,
          "spo.neumann_k must lie in [1, " + std::to_string(NeumannOrder::kMax) + "]");
  require(c.spo.block_fraction > 0.0 && c.spo.block_fraction <= 1.0,
          "spo.block_fraction must lie in (0, 1]");
  if (c.spo.block_size) require(*c.spo.block_size >= 1, "spo.block_size must be >= 1");
  if (c.spo.budget_ratio) {
    require(*c.spo.budget_ratio >= 0.0 && *c.spo.budget_ratio <= 1.0,
            "spo.budget_ratio must lie in [0, 1]");
    require(c.spo.variant == SpoVariant::kFullyStochastic,
            "spo.budget_ratio is only supported for the fs variant");
  }
  require(c.optimizer.lr_poet >= 0.0, "optimizer.lr_poet must be >= 0");
  require(c.optimizer.lr_direct >= 0.0, "optimizer.lr_direct must be >= 0");
  require(c.optimizer.weight_decay >= 0.0, "optimizer.weight_decay must be >= 0");
  require(c.optimizer.beta1 >= 0.0 && c.optimizer.beta1 < 1.0, "optimizer.beta1 must lie in [0, 1)");
  require(c.optimizer.beta2 >= 0.0 && c.optimizer.beta2 < 1.0, "optimizer.beta2 must lie in [0, 1)");
  require(c.optimizer.eps > 0.0, "optimizer.eps must be > 0");
  require(c.optimizer.clip > 0.0, "optimizer.clip must be > 0");
  require(c.optimizer.post_merge_clip_steps >= 0, "optimizer.post_merge_clip_steps must be >= 0");
  require(c.optimizer.post_merge_clip_factor > 0.0, "optimizer.post_merge_clip_factor must be > 0");
  require(c.schedule.steps >= 1, "schedule.steps must be >= 1");
  require(c.schedule.warmup >= 0, "schedule.warmup must be >= 0");
  require(c.schedule.min_lr_ratio >= 0.0 && c.schedule.min_lr_ratio <= 1.0,
          "schedule.min_lr_ratio must lie in [0, 1]");
  require(c.schedule.batch_size >= 1, "schedule.batch_size must be >= 1");
  require(c.schedule.eval_every >= 1, "schedule.eval_every must be >= 1");
  if (c.data.kind == DataKind::kTwoMoons) {
    require(c.data.train_size >= 2 && c.data.val_size >= 2, "data sizes must be >= 2");
    require(c.data.noise >= 0.0, "data.noise must be >= 0");
  } else {
    require(!c.data.path.empty(), "data.path is required for text data");
    require(c.data.val_fraction > 0.0 && c.data.val_fraction < 1.0,
            "data.val_fraction must lie in (0, 1)");
    require(c.data.eval_windows >= 1, "data.eval_windows must be >= 1");
  }
}

std::uint64_t config_fingerprint(const TrainConfig& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : dump) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::pair<std::size_t, std::size_t> budget_split(std::size_t total_budget, double ratio) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ArgumentError("budget_split: ratio must lie in [0, 1]");
  auto largest_block = [](double budget) -> std::size_t {
    std::size_t b = 0;
    while (static_cast<double>(SkewParams::count_for(b + 1)) <= budget) ++b;
    return b < 2 ? 0 : b;
  };
  const double total = static_cast<double>(total_budget);
  const std::size_t b_r = largest_block(ratio * total);
  const std::size_t b_p = largest_block((1.0 - ratio) * total);
  if (b_r == 0 && b_p == 0) {
    throw ArgumentError("budget_split: a budget of " + std::to_string(total_budget) +
                        " leaves no trainable parameter on either side");
  }
  return {b_r, b_p};
}

std::pair<std::size_t, std::size_t> resolve_block_sizes(const SpoConfig& spo, std::size_t m,
                                                        std::size_t n) {
  std::size_t b_r;
  std::size_t b_p;
  if (spo.block_size) {
    b_r = std::min(*spo.block_size, m);
    b_p = std::min(*spo.block_size, n);
  } else {
    b_r = static_cast<std::size_t>(std::floor(static_cast<double>(m) * spo.block_fraction));
    b_p = static_cast<std::size_t>(std::floor(static_cast<double>(n) * spo.block_fraction));
  }
  if (spo.budget_ratio) {
    const std::size_t total = SkewParams::count_for(b_r) + SkewParams::count_for(b_p);
    auto [r, p] = budget_split(total, *spo.budget_ratio);
    b_r = std::min(r, m);
    b_p = std::min(p, n);
  }
  return {b_r < 2 ? 0 : b_r, b_p < 2 ? 0 : b_p};
}

}  // namespace poet
