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

// Offline evaluation: per-task Normalized Entropy and the experiment
// harnesses (baselines, lambda sweep, weighting schemes, feature importance).
// Every harness repeats over several seeds; seed i uses base_seed + i for the
// session split, the initialisation and the shuffling.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cabb/common.hpp"
#include "cabb/corpus.hpp"
#include "cabb/labeling.hpp"
#include "cabb/metrics.hpp"
#include "cabb/model.hpp"
#include "cabb/similarity.hpp"
#include "cabb/taxonomy.hpp"

namespace cabb {

/// NE per task. A component is empty when its labels are degenerate on the
/// evaluated set; `errors` then says why.
struct TaskNE {
  std::optional<double> overall;
  std::optional<double> caba;
  std::optional<double> cabb;
  std::vector<std::string> errors;
};

/// CABA NE over (y1, p1) and CABB NE over (y2, p2), both unweighted. Overall
/// NE scores "any purchase after the click" (y1 or y2): two-head models use
/// the noisy-or 1 - (1 - p1)(1 - p2); single-task and CABA-only models use
/// their CABA head alone. A last-click model has no CABB head, so its CABA
/// head is also scored against y2.
template <LabeledExample E>
TaskNE task_ne_breakdown(const ModelParams& params, std::span<const E> dataset,
                         TrainMode mode = TrainMode::kMultitask) {
  const std::size_t n = dataset.size();
  std::vector<double> y1(n), y2(n), yany(n), p1(n), p2(n), pany(n);
  Predictor predict(params);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& e = dataset[i];
    const auto p = predict(e);
    y1[i] = e.y1;
    y2[i] = e.y2;
    yany[i] = (e.y1 > 0.5 || e.y2 > 0.5) ? 1.0 : 0.0;
    p1[i] = p.caba;
    p2[i] = mode == TrainMode::kSingleTaskLastClick ? p.caba : p.cabb;
    pany[i] = mode == TrainMode::kMultitask ? 1.0 - (1.0 - p.caba) * (1.0 - p.cabb) : p.caba;
  }
  TaskNE r;
  auto try_ne = [&r](const char* name, const std::vector<double>& y, const std::vector<double>& p,
                     std::optional<double>& slot) {
    try {
      slot = normalized_entropy(y, p).ne;
    } catch (const std::exception& e) {
      r.errors.push_back(std::string(name) + ": " + e.what());
    }
  };
  try_ne("overall", yany, pany, r.overall);
  try_ne("caba", y1, p1, r.caba);
  try_ne("cabb", y2, p2, r.cabb);
  return r;
}

template <LabeledExample E>
TaskNE task_ne_breakdown(const ModelParams& params, const std::vector<E>& dataset,
                         TrainMode mode = TrainMode::kMultitask) {
  return task_ne_breakdown(params, std::span<const E>(dataset), mode);
}

// ---------------------------------------------------------------------------
// Splits

struct SessionSplit {
  std::vector<ClickExample> train;
  std::vector<ClickExample> test;
};

inline bool in_train_split(const std::string& session_id, std::uint64_t seed,
                           double train_fraction) {
  const auto h = splitmix64(fnv1a(session_id) ^ seed_for(seed, SeedTag::kSplit));
  return static_cast<double>(h % 1'000'000) < train_fraction * 1'000'000.0;
}

/// Whole sessions go to one side, chosen by a seeded hash of the session id.
inline SessionSplit split_by_session(const std::vector<ClickExample>& dataset,
                                     std::uint64_t seed, double train_fraction = 0.8) {
  SessionSplit s;
  for (const auto& e : dataset) {
    (in_train_split(e.session_id, seed, train_fraction) ? s.train : s.test).push_back(e);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Reports

struct ReportRow {
  std::string variant;
  double overall_ne = 0;
  double caba_ne = 0;
  double cabb_ne = 0;
  std::string seed;  // a seed value, or "mean" / "std" for aggregates
};

struct ExperimentReport {
  std::string title;
  std::vector<std::pair<std::string, std::string>> header;
  std::vector<std::string> notes;
  std::vector<ReportRow> rows;

  std::vector<const ReportRow*> rows_for(const std::string& variant) const {
    std::vector<const ReportRow*> out;
    for (const auto& r : rows) {
      if (r.variant == variant && r.seed != "mean" && r.seed != "std") out.push_back(&r);
    }
    return out;
  }

  const ReportRow& aggregate(const std::string& variant, const std::string& which = "mean") const {
    for (const auto& r : rows) {
      if (r.variant == variant && r.seed == which) return r;
    }
    throw LookupError("report: no " + which + " row for variant '" + variant + "'");
  }

  std::vector<std::string> variants() const {
    std::vector<std::string> out;
    for (const auto& r : rows) {
      if (std::find(out.begin(), out.end(), r.variant) == out.end()) out.push_back(r.variant);
    }
    return out;
  }
};

inline double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample standard deviation (n - 1).
inline double stddev_of(std::span<const double> v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1));
}

/// Appends "mean" and "std" rows for every variant, in first-seen order.
inline void add_aggregates(ExperimentReport& report) {
  std::vector<ReportRow> extra;
  for (const auto& v : report.variants()) {
    const auto rows = report.rows_for(v);
    std::vector<double> o, a, b;
    for (const auto* r : rows) {
      o.push_back(r->overall_ne);
      a.push_back(r->caba_ne);
      b.push_back(r->cabb_ne);
    }
    extra.push_back({v, mean_of(o), mean_of(a), mean_of(b), "mean"});
    extra.push_back({v, stddev_of(o), stddev_of(a), stddev_of(b), "std"});
  }
  report.rows.insert(report.rows.end(), extra.begin(), extra.end());
}

inline void write_report(std::ostream& out, const ExperimentReport& report) {
  out << "# report=" << report.title << '\n';
  for (const auto& [k, v] : report.header) out << "# " << k << '=' << v << '\n';
  for (const auto& note : report.notes) out << "# note: " << note << '\n';
  out << "variant\toverall_ne\tcaba_ne\tcabb_ne\tseed\n";
  for (const auto& r : report.rows) {
    out << r.variant << '\t' << format_precise(r.overall_ne) << '\t' << format_precise(r.caba_ne)
        << '\t' << format_precise(r.cabb_ne) << '\t' << r.seed << '\n';
  }
}

// ---------------------------------------------------------------------------
// Harnesses

struct ExperimentConfig {
  TrainConfig train;
  Architecture arch;
  FeatureOptions features;
  EventWeights weights;
  int n_seeds = 5;
  double train_fraction = 0.8;

  std::vector<std::pair<std::string, std::string>> echo() const {
    std::string hidden;
    for (auto h : arch.hidden_dims) hidden += (hidden.empty() ? "" : ",") + std::to_string(h);
    return {{"base_seed", std::to_string(train.seed)},
            {"n_seeds", std::to_string(n_seeds)},
            {"split", "session_hash train_fraction=" + format_double(train_fraction)},
            {"lambda", format_double(train.lambda)},
            {"learning_rate", format_double(train.learning_rate)},
            {"epochs", std::to_string(train.epochs)},
            {"batch_size", std::to_string(train.batch_size)},
            {"embedding_dim", std::to_string(arch.embedding_dim)},
            {"hidden_dims", hidden},
            {"event_weights", format_double(weights.w_click) + "," + format_double(weights.w_cart) +
                                  "," + format_double(weights.w_purchase)}};
  }
};

/// Labelled click examples for a corpus, built once and re-weighted per
/// scheme.
struct ExperimentData {
  std::shared_ptr<const Corpus> corpus;
  std::shared_ptr<const Taxonomy> taxonomy;
  std::vector<ClickExample> examples;

  WeightingScheme scheme(std::string_view name, const EventWeights& weights) const {
    if (name == "static1") return Static1{};
    if (name == "item_i2i") return make_item_i2i(*corpus, weights);
    if (name == "taxonomy_cf") return make_taxonomy_cf(*corpus, taxonomy, weights);
    throw InvalidArgument("unknown weighting scheme '" + std::string(name) + "'");
  }

  std::vector<ClickExample> weighted(const WeightingScheme& scheme) const {
    auto out = examples;
    assign_alpha(out, scheme);
    return out;
  }
};

inline ExperimentData prepare_experiment(std::shared_ptr<const Corpus> corpus,
                                         const FeatureOptions& features = {}) {
  auto taxonomy = std::make_shared<const Taxonomy>(build_taxonomy(corpus->catalog));
  auto examples = build_dataset(*corpus, *taxonomy, Static1{}, features);
  return {std::move(corpus), std::move(taxonomy), std::move(examples)};
}

/// Trains one model on the train split and scores it on the test split.
inline TaskNE run_variant(const SessionSplit& split, const TrainConfig& train_config,
                          const Architecture& arch, std::size_t leaf_count) {
  const auto result = train(split.train, train_config, arch, leaf_count);
  return task_ne_breakdown(result.params, split.test, train_config.mode);
}

namespace detail {

inline ReportRow to_row(const std::string& variant, const TaskNE& ne, std::uint64_t seed) {
  if (!ne.overall || !ne.caba || !ne.cabb) {
    std::string why;
    for (const auto& e : ne.errors) why += (why.empty() ? "" : "; ") + e;
    throw DegenerateLabels("variant " + variant + ": " + why);
  }
  return {variant, *ne.overall, *ne.caba, *ne.cabb, std::to_string(seed)};
}

inline std::string lambda_label(double lambda) { return "lambda=" + format_double(lambda); }

}  // namespace detail

/// One model per lambda (Multitask, same seeds/splits/architecture) plus a
/// single-task last-click baseline row.
inline ExperimentReport lambda_sweep(const ExperimentData& data, const WeightingScheme& scheme,
                                     const std::vector<double>& lambdas,
                                     const ExperimentConfig& config) {
  if (lambdas.size() < 2) throw InvalidArgument("lambda_sweep: need at least two lambda values");
  ExperimentReport report;
  report.title = "lambda_sweep";
  report.header = config.echo();
  report.header.emplace_back("scheme", scheme_name(scheme));
  report.notes.push_back(
      "baseline_single_task has one head; its caba_ne and cabb_ne both score that head");
  const auto dataset = data.weighted(scheme);
  const auto leaves = data.taxonomy->leaf_count();
  for (int s = 0; s < config.n_seeds; ++s) {
    const auto seed = config.train.seed + static_cast<std::uint64_t>(s);
    const auto split = split_by_session(dataset, seed, config.train_fraction);
    TrainConfig tc = config.train;
    tc.seed = seed;
    tc.mode = TrainMode::kSingleTaskLastClick;
    report.rows.push_back(
        detail::to_row("baseline_single_task", run_variant(split, tc, config.arch, leaves), seed));
    tc.mode = TrainMode::kMultitask;
    for (double lambda : lambdas) {
      tc.lambda = lambda;
      report.rows.push_back(detail::to_row(detail::lambda_label(lambda),
                                           run_variant(split, tc, config.arch, leaves), seed));
    }
  }
  add_aggregates(report);
  return report;
}

/// One Multitask model per weighting scheme at the configured lambda.
inline ExperimentReport scheme_comparison(const ExperimentData& data,
                                          const std::vector<WeightingScheme>& schemes,
                                          const ExperimentConfig& config) {
  ExperimentReport report;
  report.title = "scheme_comparison";
  report.header = config.echo();
  std::vector<std::vector<ClickExample>> weighted;
  for (const auto& scheme : schemes) weighted.push_back(data.weighted(scheme));
  const auto leaves = data.taxonomy->leaf_count();
  for (int s = 0; s < config.n_seeds; ++s) {
    const auto seed = config.train.seed + static_cast<std::uint64_t>(s);
    TrainConfig tc = config.train;
    tc.seed = seed;
    tc.mode = TrainMode::kMultitask;
    for (std::size_t k = 0; k < schemes.size(); ++k) {
      const auto split = split_by_session(weighted[k], seed, config.train_fraction);
      report.rows.push_back(detail::to_row(scheme_name(schemes[k]),
                                           run_variant(split, tc, config.arch, leaves), seed));
    }
  }
  add_aggregates(report);
  return report;
}

inline constexpr std::string_view kBaseline1 = "baseline1_last_click";
inline constexpr std::string_view kBaseline2 = "baseline2_caba_only";
inline constexpr std::string_view kMultitaskVariant = "multitask";

/// Last-click single-task model, CABA-only model and the weighted Multitask
/// model, all on the same splits.
inline ExperimentReport baseline_comparison(const ExperimentData& data,
                                            const WeightingScheme& scheme,
                                            const ExperimentConfig& config) {
  ExperimentReport report;
  report.title = "baseline_comparison";
  report.header = config.echo();
  report.header.emplace_back("scheme", scheme_name(scheme));
  report.notes.push_back(
      "overall_ne scores y1|y2; multitask combines heads by noisy-or, baselines use the CABA head");
  const auto dataset = data.weighted(scheme);
  const auto leaves = data.taxonomy->leaf_count();
  for (int s = 0; s < config.n_seeds; ++s) {
    const auto seed = config.train.seed + static_cast<std::uint64_t>(s);
    const auto split = split_by_session(dataset, seed, config.train_fraction);
    TrainConfig tc = config.train;
    tc.seed = seed;
    for (auto [name, mode] : {std::pair{kBaseline1, TrainMode::kSingleTaskLastClick},
                              std::pair{kBaseline2, TrainMode::kCabaOnly},
                              std::pair{kMultitaskVariant, TrainMode::kMultitask}}) {
      tc.mode = mode;
      report.rows.push_back(detail::to_row(std::string(name),
                                           run_variant(split, tc, config.arch, leaves), seed));
    }
  }
  add_aggregates(report);
  return report;
}

struct ImportanceRow {
  std::string feature;
  double caba = 0;
  double cabb = 0;
  std::string seed;
};

inline std::string importance_slot_name(std::size_t slot) {
  return slot < kFeatureNames.size() ? std::string(kFeatureNames[slot]) : "leaf_id";
}

/// Permutation importance of every input for both heads of a trained model.
inline std::vector<ImportanceRow> importance_rows(const ModelParams& params,
                                                  const std::vector<ClickExample>& eval_set,
                                                  std::uint64_t seed, const std::string& seed_label) {
  const auto caba = permutation_importance(params, eval_set, Head::kCaba, seed);
  const auto cabb = permutation_importance(params, eval_set, Head::kCabb, seed);
  std::vector<ImportanceRow> rows;
  for (std::size_t f = 0; f < caba.size(); ++f) {
    rows.push_back({importance_slot_name(f), caba[f], cabb[f], seed_label});
  }
  return rows;
}

/// Trains a Multitask model per seed and reports per-feature importance for
/// each head on the held-out sessions.
inline std::vector<ImportanceRow> importance_study(const ExperimentData& data,
                                                   const WeightingScheme& scheme,
                                                   const ExperimentConfig& config) {
  const auto dataset = data.weighted(scheme);
  std::vector<ImportanceRow> rows;
  for (int s = 0; s < config.n_seeds; ++s) {
    const auto seed = config.train.seed + static_cast<std::uint64_t>(s);
    const auto split = split_by_session(dataset, seed, config.train_fraction);
    TrainConfig tc = config.train;
    tc.seed = seed;
    tc.mode = TrainMode::kMultitask;
    const auto model = train(split.train, tc, config.arch, data.taxonomy->leaf_count());
    auto r = importance_rows(model.params, split.test, seed, std::to_string(seed));
    rows.insert(rows.end(), r.begin(), r.end());
  }
  return rows;
}

inline void write_importance(std::ostream& out, const std::vector<ImportanceRow>& rows,
                             const std::vector<std::pair<std::string, std::string>>& header = {}) {
  out << "# report=permutation_importance\n";
  for (const auto& [k, v] : header) out << "# " << k << '=' << v << '\n';
  out << "feature\tcaba_importance\tcabb_importance\tseed\n";
  for (const auto& r : rows) {
    out << r.feature << '\t' << format_precise(r.caba) << '\t' << format_precise(r.cabb) << '\t'
        << r.seed << '\n';
  }
}

}  // namespace cabb
