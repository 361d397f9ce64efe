/*
 * Copyright 2026 The cabb-lab Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Two-head conversion model. A leaf-category embedding is concatenated with
// the dense features and fed through a shared ReLU trunk; two sigmoid heads
// predict same-item (CABA) and other-item (CABB) purchase. Training minimises
//
//   L = mean_b CE(y1, p1) + lambda * mean_b alpha * CE(y2, p2)
//
// with hand-written backpropagation and plain mini-batch gradient descent.

#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cabb/common.hpp"
#include "cabb/metrics.hpp"

namespace cabb {

/// Anything the model can score and train on.
template <class E>
concept LabeledExample = requires(const E& e) {
  { e.dense() } -> std::convertible_to<std::span<const double>>;
  { e.leaf_id } -> std::convertible_to<std::size_t>;
  { e.y1 } -> std::convertible_to<double>;
  { e.y2 } -> std::convertible_to<double>;
  { e.alpha } -> std::convertible_to<double>;
};

struct Architecture {
  std::size_t embedding_dim = 8;
  std::vector<std::size_t> hidden_dims = {32, 16};

  void validate() const {
    if (embedding_dim == 0) throw InvalidArgument("embedding_dim must be positive");
    if (hidden_dims.empty()) throw InvalidArgument("hidden_dims must be non-empty");
    for (auto h : hidden_dims) {
      if (h == 0) throw InvalidArgument("hidden_dims entries must be positive");
    }
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

enum class TrainMode { kSingleTaskLastClick, kCabaOnly, kMultitask };

inline std::string_view to_string(TrainMode m) {
  switch (m) {
    case TrainMode::kSingleTaskLastClick: return "single_task_last_click";
    case TrainMode::kCabaOnly: return "caba_only";
    case TrainMode::kMultitask: return "multitask";
  }
  return "";
}

inline std::optional<TrainMode> parse_train_mode(std::string_view s) {
  for (auto m : {TrainMode::kSingleTaskLastClick, TrainMode::kCabaOnly, TrainMode::kMultitask}) {
    if (to_string(m) == s) return m;
  }
  return std::nullopt;
}

struct TrainConfig {
  double lambda = 0.75;
  double learning_rate = 0.05;
  int epochs = 10;
  std::size_t batch_size = 256;
  std::uint64_t seed = 1;
  TrainMode mode = TrainMode::kMultitask;

  void validate() const {
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw InvalidArgument("lambda must be >= 0");
    if (!(learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be >= 0");
    if (epochs <= 0) throw InvalidArgument("epochs must be positive");
    if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  }

  /// The CABB loss weight actually used by the mode.
  double effective_lambda() const { return mode == TrainMode::kMultitask ? lambda : 0.0; }
};

struct DenseLayer {
  std::size_t in = 0;
  std::size_t out = 0;
  std::vector<double> weight;  // out x in, row-major
  std::vector<double> bias;    // out

  DenseLayer() = default;
  DenseLayer(std::size_t in_dim, std::size_t out_dim)
      : in(in_dim), out(out_dim), weight(in_dim * out_dim, 0.0), bias(out_dim, 0.0) {}

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct ModelParams {
  Architecture arch;
  std::size_t leaf_count = 0;
  std::size_t feature_dim = 0;
  std::vector<double> embedding;  // leaf_count x embedding_dim
  std::vector<DenseLayer> trunk;
  DenseLayer caba_head;  // out = 1
  DenseLayer cabb_head;  // out = 1
  // Fixed input standardization, x' = (x - shift) * scale. Set once from the
  // training set; not trained.
  std::vector<double> input_shift;
  std::vector<double> input_scale;

  ModelParams() = default;
  ModelParams(Architecture a, std::size_t leaves, std::size_t features)
      : arch(std::move(a)), leaf_count(leaves), feature_dim(features) {
    arch.validate();
    if (leaves == 0 || features == 0) throw InvalidArgument("model dimensions must be positive");
    embedding.assign(leaf_count * arch.embedding_dim, 0.0);
    std::size_t width = arch.embedding_dim + feature_dim;
    for (auto h : arch.hidden_dims) {
      trunk.emplace_back(width, h);
      width = h;
    }
    caba_head = DenseLayer(width, 1);
    cabb_head = DenseLayer(width, 1);
    input_shift.assign(feature_dim, 0.0);
    input_scale.assign(feature_dim, 1.0);
  }

  std::size_t input_dim() const { return arch.embedding_dim + feature_dim; }

  /// Every tensor, in a fixed order, with a stable name.
  std::vector<std::pair<std::string, std::span<double>>> tensors() {
    std::vector<std::pair<std::string, std::span<double>>> t;
    t.emplace_back("embedding", embedding);
    for (std::size_t l = 0; l < trunk.size(); ++l) {
      t.emplace_back("trunk" + std::to_string(l) + ".weight", trunk[l].weight);
      t.emplace_back("trunk" + std::to_string(l) + ".bias", trunk[l].bias);
    }
    t.emplace_back("caba_head.weight", caba_head.weight);
    t.emplace_back("caba_head.bias", caba_head.bias);
    t.emplace_back("cabb_head.weight", cabb_head.weight);
    t.emplace_back("cabb_head.bias", cabb_head.bias);
    return t;
  }

  std::vector<std::pair<std::string, std::span<const double>>> tensors() const {
    auto mut = const_cast<ModelParams*>(this)->tensors();
    return {mut.begin(), mut.end()};
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& [name, t] : tensors()) n += t.size();
    return n;
  }

  bool all_finite() const {
    for (const auto& [name, t] : tensors()) {
      for (double v : t) {
        if (!std::isfinite(v)) return false;
      }
    }
    return true;
  }

  ModelParams zeros_like() const {
    ModelParams z = *this;
    for (auto& [name, t] : z.tensors()) std::fill(t.begin(), t.end(), 0.0);
    return z;
  }

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Weights ~ U(-sqrt(3/fan_in), sqrt(3/fan_in)) (unit variance scaled by
/// 1/sqrt(fan_in)); biases 0. Embedding rows use fan_in = embedding_dim.
inline ModelParams init_params(const Architecture& arch, std::size_t leaf_count,
                               std::size_t feature_dim, std::uint64_t seed) {
  ModelParams p(arch, leaf_count, feature_dim);
  std::mt19937_64 rng(seed_for(seed, SeedTag::kInit));
  auto fill = [&rng](std::vector<double>& w, std::size_t fan_in) {
    const double a = std::sqrt(3.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-a, a);
    for (auto& v : w) v = dist(rng);
  };
  fill(p.embedding, arch.embedding_dim);
  for (auto& layer : p.trunk) fill(layer.weight, layer.in);
  fill(p.caba_head.weight, p.caba_head.in);
  fill(p.cabb_head.weight, p.cabb_head.in);
  return p;
}

struct Prediction {
  double caba = 0.5;
  double cabb = 0.5;
};

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

namespace detail {

// Activations kept for the backward pass.
struct ForwardCache {
  std::vector<std::vector<double>> act;  // act[0] = input, act[l+1] = relu(pre[l])
  std::vector<std::vector<double>> pre;
  double logit_caba = 0, logit_cabb = 0;

  explicit ForwardCache(const ModelParams& p) {
    act.emplace_back(p.input_dim());
    for (const auto& layer : p.trunk) {
      pre.emplace_back(layer.out);
      act.emplace_back(layer.out);
    }
  }
};

inline Prediction forward(const ModelParams& p, std::size_t leaf, std::span<const double> dense,
                          ForwardCache& c) {
  if (dense.size() != p.feature_dim) {
    throw InvalidArgument("forward: expected " + std::to_string(p.feature_dim) +
                          " dense features, got " + std::to_string(dense.size()));
  }
  if (leaf >= p.leaf_count) throw InvalidArgument("forward: leaf id out of range");
  const std::size_t e = p.arch.embedding_dim;
  auto& x = c.act[0];
  std::copy_n(p.embedding.begin() + static_cast<std::ptrdiff_t>(leaf * e), e, x.begin());
  for (std::size_t i = 0; i < dense.size(); ++i) {
    x[e + i] = (dense[i] - p.input_shift[i]) * p.input_scale[i];
  }
  for (std::size_t l = 0; l < p.trunk.size(); ++l) {
    const auto& layer = p.trunk[l];
    const auto& in = c.act[l];
    auto& z = c.pre[l];
    auto& h = c.act[l + 1];
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* w = layer.weight.data() + o * layer.in;
      double s = layer.bias[o];
      for (std::size_t i = 0; i < layer.in; ++i) s += w[i] * in[i];
      z[o] = s;
      h[o] = s > 0.0 ? s : 0.0;
    }
  }
  const auto& top = c.act.back();
  auto head = [&top](const DenseLayer& h) {
    return std::inner_product(top.begin(), top.end(), h.weight.begin(), h.bias[0]);
  };
  c.logit_caba = head(p.caba_head);
  c.logit_cabb = head(p.cabb_head);
  return {sigmoid(c.logit_caba), sigmoid(c.logit_cabb)};
}

// Cross-entropy on the clamped probability, and its derivative with respect
// to the logit. Outside the clamp range the loss is flat.
inline double clamped_ce(double y, double p) {
  const double q = clamp_probability(p);
  return -(y * std::log(q) + (1.0 - y) * std::log(1.0 - q));
}

inline double clamped_ce_dlogit(double y, double p) {
  if (p < kProbabilityClamp || p > 1.0 - kProbabilityClamp) return 0.0;
  return p - y;
}

inline void backward(const ModelParams& p, std::size_t leaf, const ForwardCache& c,
                     double d_caba, double d_cabb, ModelParams& g,
                     std::vector<std::vector<double>>& delta) {
  const auto& top = c.act.back();
  auto& d_top = delta.back();
  for (std::size_t i = 0; i < top.size(); ++i) {
    g.caba_head.weight[i] += d_caba * top[i];
    g.cabb_head.weight[i] += d_cabb * top[i];
    d_top[i] = d_caba * p.caba_head.weight[i] + d_cabb * p.cabb_head.weight[i];
  }
  g.caba_head.bias[0] += d_caba;
  g.cabb_head.bias[0] += d_cabb;

  for (std::size_t l = p.trunk.size(); l-- > 0;) {
    const auto& layer = p.trunk[l];
    auto& gl = g.trunk[l];
    auto& d_out = delta[l + 1];
    auto& d_in = delta[l];
    const auto& in = c.act[l];
    std::fill(d_in.begin(), d_in.end(), 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      if (!(c.pre[l][o] > 0.0)) continue;
      const double d = d_out[o];
      if (d == 0.0) continue;
      gl.bias[o] += d;
      const double* w = layer.weight.data() + o * layer.in;
      double* gw = gl.weight.data() + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) {
        gw[i] += d * in[i];
        d_in[i] += d * w[i];
      }
    }
  }
  const std::size_t e = p.arch.embedding_dim;
  double* ge = g.embedding.data() + leaf * e;
  for (std::size_t i = 0; i < e; ++i) ge[i] += delta[0][i];
}

}  // namespace detail

inline Prediction forward(const ModelParams& params, std::size_t leaf,
                          std::span<const double> dense) {
  detail::ForwardCache cache(params);
  return detail::forward(params, leaf, dense, cache);
}

template <LabeledExample E>
Prediction forward(const ModelParams& params, const E& example) {
  return forward(params, example.leaf_id, example.dense());
}

struct LossBreakdown {
  double l_caba = 0;
  double l_cabb = 0;
  double total = 0;
};

/// Scores many examples with one scratch buffer.
class Predictor {
 public:
  explicit Predictor(const ModelParams& params) : params_(params), cache_(params) {}

  Prediction operator()(std::size_t leaf, std::span<const double> dense) {
    return detail::forward(params_, leaf, dense, cache_);
  }

  template <LabeledExample E>
  Prediction operator()(const E& e) {
    return (*this)(e.leaf_id, e.dense());
  }

 private:
  const ModelParams& params_;
  detail::ForwardCache cache_;
};

namespace detail {

// Batch loss, and (when `grad` is non-null) its gradient accumulated into
// `grad`, which must be zero-initialised and shaped like `params`.
template <class Range>
LossBreakdown loss_and_gradient(const ModelParams& params, const Range& batch, double lambda,
                                ModelParams* grad) {
  const std::size_t n = std::size(batch);
  if (n == 0) throw InvalidArgument("batch_loss: empty batch");
  ForwardCache cache(params);
  std::vector<std::vector<double>> delta;
  if (grad != nullptr) {
    delta.emplace_back(params.input_dim());
    for (const auto& layer : params.trunk) delta.emplace_back(layer.out);
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  double caba = 0, cabb = 0;
  for (const auto& item : batch) {
    const auto& e = [&]() -> const auto& {
      if constexpr (std::is_pointer_v<std::decay_t<decltype(item)>>) {
        return *item;
      } else {
        return item;
      }
    }();
    const auto pred = forward(params, e.leaf_id, e.dense(), cache);
    caba += clamped_ce(e.y1, pred.caba);
    cabb += e.alpha * clamped_ce(e.y2, pred.cabb);
    if (grad != nullptr) {
      const double d1 = clamped_ce_dlogit(e.y1, pred.caba) * inv_n;
      const double d2 =
          lambda != 0.0 ? lambda * e.alpha * clamped_ce_dlogit(e.y2, pred.cabb) * inv_n : 0.0;
      backward(params, e.leaf_id, cache, d1, d2, *grad, delta);
    }
  }
  LossBreakdown r;
  r.l_caba = caba * inv_n;
  r.l_cabb = cabb * inv_n;
  r.total = r.l_caba + lambda * r.l_cabb;
  return r;
}

}  // namespace detail

/// Batch-mean losses; probabilities are clamped to [1e-7, 1 - 1e-7].
template <LabeledExample E>
LossBreakdown batch_loss(const ModelParams& params, std::span<const E> batch, double lambda) {
  return detail::loss_and_gradient(params, batch, lambda, nullptr);
}

template <LabeledExample E>
LossBreakdown batch_loss(const ModelParams& params, const std::vector<E>& batch, double lambda) {
  return batch_loss(params, std::span<const E>(batch), lambda);
}

/// Exact gradient of batch_loss(...).total, shaped like `params`.
template <LabeledExample E>
ModelParams gradients(const ModelParams& params, std::span<const E> batch, double lambda) {
  ModelParams g = params.zeros_like();
  detail::loss_and_gradient(params, batch, lambda, &g);
  return g;
}

template <LabeledExample E>
ModelParams gradients(const ModelParams& params, const std::vector<E>& batch, double lambda) {
  return gradients(params, std::span<const E>(batch), lambda);
}

// ---------------------------------------------------------------------------
// Training

/// Lightweight view used by the training loop; labels may be substituted
/// (last-click mode) without copying the feature storage.
struct TrainingRow {
  std::size_t leaf_id = 0;
  std::span<const double> features;
  double y1 = 0;
  double y2 = 0;
  double alpha = 1.0;

  std::span<const double> dense() const { return features; }
};

struct TrainResult {
  ModelParams params;
  LossBreakdown initial;
  std::vector<LossBreakdown> history;  // after each epoch, on the full training set
};

template <class E>
concept LastClickLabeled = LabeledExample<E> && requires(const E& e) {
  { e.y_last_click } -> std::convertible_to<double>;
};

template <LabeledExample E>
std::vector<TrainingRow> training_rows(std::span<const E> dataset, TrainMode mode) {
  std::vector<TrainingRow> rows;
  rows.reserve(dataset.size());
  for (const auto& e : dataset) {
    TrainingRow r{static_cast<std::size_t>(e.leaf_id), e.dense(), static_cast<double>(e.y1),
                  static_cast<double>(e.y2), static_cast<double>(e.alpha)};
    if (mode == TrainMode::kSingleTaskLastClick) {
      if constexpr (LastClickLabeled<E>) {
        r.y1 = static_cast<double>(e.y_last_click);
      } else {
        throw InvalidArgument("single-task last-click training needs last-click labels");
      }
      r.y2 = 0.0;
    }
    rows.push_back(r);
  }
  return rows;
}

/// Per-feature mean and inverse standard deviation over `rows`. Constant
/// features keep scale 1.
inline void fit_standardization(ModelParams& params, const std::vector<TrainingRow>& rows) {
  const std::size_t d = params.feature_dim;
  std::vector<double> mean(d, 0.0), sq(d, 0.0);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < d; ++i) mean[i] += r.features[i];
  }
  const double n = static_cast<double>(rows.size());
  for (auto& m : mean) m /= n;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < d; ++i) {
      const double c = r.features[i] - mean[i];
      sq[i] += c * c;
    }
  }
  for (std::size_t i = 0; i < d; ++i) {
    const double sd = std::sqrt(sq[i] / n);
    params.input_shift[i] = mean[i];
    params.input_scale[i] = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
}

/// Mini-batch gradient descent with a seeded shuffle per epoch.
/// SingleTaskLastClick trains the CABA head on last-click labels; CabaOnly
/// drops the CABB term; Multitask uses the full weighted objective.
template <LabeledExample E>
TrainResult train(std::span<const E> dataset, const TrainConfig& config, const Architecture& arch,
                  std::size_t leaf_count) {
  config.validate();
  if (dataset.empty()) throw InvalidArgument("train: empty dataset");
  const auto rows = training_rows(dataset, config.mode);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (double v : rows[k].features) {
      if (!std::isfinite(v)) {
        throw InvalidArgument("train: non-finite feature in example " + std::to_string(k));
      }
    }
  }
  const double lambda = config.effective_lambda();

  TrainResult result{init_params(arch, leaf_count, rows.front().features.size(), config.seed),
                     {}, {}};
  ModelParams& params = result.params;
  fit_standardization(params, rows);
  result.initial = detail::loss_and_gradient(params, rows, lambda, nullptr);

  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const TrainingRow*> batch;
  ModelParams grad = params.zeros_like();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::mt19937_64 rng(seed_for(config.seed, SeedTag::kShuffle, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(&rows[order[k]]);
      for (auto& [name, t] : grad.tensors()) std::fill(t.begin(), t.end(), 0.0);
      const auto loss = detail::loss_and_gradient(params, batch, lambda, &grad);
      if (!std::isfinite(loss.total)) {
        throw TrainingError("train: non-finite loss in epoch " + std::to_string(epoch) +
                            " (l_caba=" + format_double(loss.l_caba) +
                            ", l_cabb=" + format_double(loss.l_cabb) + ")");
      }
      auto pt = params.tensors();
      auto gt = grad.tensors();
      for (std::size_t k = 0; k < pt.size(); ++k) {
        auto& p = pt[k].second;
        const auto& g = gt[k].second;
        for (std::size_t i = 0; i < p.size(); ++i) p[i] -= config.learning_rate * g[i];
      }
    }
    const auto epoch_loss = detail::loss_and_gradient(params, rows, lambda, nullptr);
    if (!std::isfinite(epoch_loss.total) || !params.all_finite()) {
      throw TrainingError("train: diverged after epoch " + std::to_string(epoch) +
                          " (total=" + format_double(epoch_loss.total) + ")");
    }
    result.history.push_back(epoch_loss);
  }
  return result;
}

template <LabeledExample E>
TrainResult train(const std::vector<E>& dataset, const TrainConfig& config,
                  const Architecture& arch, std::size_t leaf_count) {
  return train(std::span<const E>(dataset), config, arch, leaf_count);
}

// ---------------------------------------------------------------------------
// Checkpoints: a versioned text dump with hex-float values (bitwise exact).

inline constexpr std::string_view kCheckpointMagic = "cabb-checkpoint";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void write_hex_values(std::ostream& out, std::span<const double> t) {
  char buf[64];
  for (std::size_t i = 0; i < t.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%a", t[i]);
    out << buf << ((i + 1) % 8 == 0 || i + 1 == t.size() ? '\n' : ' ');
  }
}

inline bool read_hex_values(std::istream& in, std::span<double> t) {
  std::string tok;
  for (auto& v : t) {
    if (!(in >> tok)) return false;
    char* end = nullptr;
    v = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) return false;
  }
  return true;
}

}  // namespace detail

inline void save_checkpoint(std::ostream& out, const ModelParams& p) {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "embedding_dim " << p.arch.embedding_dim << '\n';
  out << "hidden_dims";
  for (auto h : p.arch.hidden_dims) out << ' ' << h;
  out << '\n';
  out << "leaf_count " << p.leaf_count << '\n';
  out << "feature_dim " << p.feature_dim << '\n';
  out << "input_shift\n";
  detail::write_hex_values(out, p.input_shift);
  out << "input_scale\n";
  detail::write_hex_values(out, p.input_scale);
  for (const auto& [name, t] : p.tensors()) {
    out << "tensor " << name << ' ' << t.size() << '\n';
    detail::write_hex_values(out, t);
  }
}

inline ModelParams load_checkpoint(std::istream& in) {
  auto fail = [](const std::string& what) -> ModelParams {
    throw ParseError("checkpoint: " + what);
  };
  std::string magic, key;
  int version = 0;
  if (!(in >> magic >> version) || magic != kCheckpointMagic) return fail("bad header");
  if (version != kCheckpointVersion) return fail("unsupported version " + std::to_string(version));
  Architecture arch;
  std::size_t leaf_count = 0, feature_dim = 0;
  if (!(in >> key >> arch.embedding_dim) || key != "embedding_dim") return fail("embedding_dim");
  if (!(in >> key) || key != "hidden_dims") return fail("hidden_dims");
  arch.hidden_dims.clear();
  std::string line;
  std::getline(in, line);
  for (auto tok : split(trim(line), ' ')) {
    std::size_t h = 0;
    if (!parse_int(tok, h)) return fail("hidden_dims value");
    arch.hidden_dims.push_back(h);
  }
  if (!(in >> key >> leaf_count) || key != "leaf_count") return fail("leaf_count");
  if (!(in >> key >> feature_dim) || key != "feature_dim") return fail("feature_dim");
  ModelParams p(arch, leaf_count, feature_dim);
  if (!(in >> key) || key != "input_shift" || !detail::read_hex_values(in, p.input_shift)) {
    return fail("input_shift");
  }
  if (!(in >> key) || key != "input_scale" || !detail::read_hex_values(in, p.input_scale)) {
    return fail("input_scale");
  }
  for (auto& [name, t] : p.tensors()) {
    std::string tag, got_name;
    std::size_t size = 0;
    if (!(in >> tag >> got_name >> size) || tag != "tensor" || got_name != name) {
      return fail("expected tensor " + name);
    }
    if (size != t.size()) return fail("shape mismatch for " + name);
    if (!detail::read_hex_values(in, t)) return fail("bad or truncated tensor " + name);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Permutation importance

enum class Head { kCaba, kCabb };

/// Number of permutable inputs: the dense features followed by the leaf id.
inline std::size_t importance_slots(const ModelParams& p) { return p.feature_dim + 1; }

/// For each dense feature (and finally the leaf id): NE of `head` with that
/// input shuffled across examples, minus NE on intact inputs, averaged over
/// `repeats` seeded permutations.
template <LabeledExample E>
std::vector<double> permutation_importance(const ModelParams& params, std::span<const E> dataset,
                                           Head head, std::uint64_t seed, int repeats = 5) {
  if (dataset.empty()) throw InvalidArgument("permutation_importance: empty dataset");
  const std::size_t n = dataset.size();
  const std::size_t d = params.feature_dim;
  std::vector<double> matrix(n * d);
  std::vector<std::size_t> leaves(n);
  std::vector<double> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = dataset[i].dense();
    if (x.size() != d) throw InvalidArgument("permutation_importance: feature dimension mismatch");
    std::copy(x.begin(), x.end(), matrix.begin() + static_cast<std::ptrdiff_t>(i * d));
    leaves[i] = dataset[i].leaf_id;
    labels[i] = head == Head::kCaba ? dataset[i].y1 : dataset[i].y2;
  }
  Predictor predict(params);
  std::vector<double> preds(n);
  auto score = [&](const std::vector<double>& m, const std::vector<std::size_t>& lv) {
    for (std::size_t i = 0; i < n; ++i) {
      const auto p = predict(lv[i], std::span<const double>(m.data() + i * d, d));
      preds[i] = head == Head::kCaba ? p.caba : p.cabb;
    }
    return normalized_entropy(labels, preds).ne;
  };
  const double base = score(matrix, leaves);

  std::vector<double> importance(d + 1, 0.0);
  std::vector<std::size_t> perm(n);
  for (std::size_t f = 0; f <= d; ++f) {
    for (int r = 0; r < repeats; ++r) {
      std::iota(perm.begin(), perm.end(), 0);
      std::mt19937_64 rng(seed_for(seed, SeedTag::kImportance, f * 1000 + static_cast<std::size_t>(r)));
      std::shuffle(perm.begin(), perm.end(), rng);
      double ne;
      if (f < d) {
        auto shuffled = matrix;
        for (std::size_t i = 0; i < n; ++i) shuffled[i * d + f] = matrix[perm[i] * d + f];
        ne = score(shuffled, leaves);
      } else {
        std::vector<std::size_t> shuffled(n);
        for (std::size_t i = 0; i < n; ++i) shuffled[i] = leaves[perm[i]];
        ne = score(matrix, shuffled);
      }
      importance[f] += (ne - base) / repeats;
    }
  }
  return importance;
}

template <LabeledExample E>
std::vector<double> permutation_importance(const ModelParams& params, const std::vector<E>& dataset,
                                           Head head, std::uint64_t seed, int repeats = 5) {
  return permutation_importance(params, std::span<const E>(dataset), head, seed, repeats);
}

}  // namespace cabb
