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

#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <istream>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cabb/common.hpp"
#include "cabb/corpus.hpp"
#include "cabb/eval.hpp"
#include "cabb/labeling.hpp"
#include "cabb/model.hpp"
#include "cabb/similarity.hpp"
#include "cabb/taxonomy.hpp"

namespace cabb {

/// Every tunable of the command-line pipelines. `seed` drives both corpus
/// generation and training; sub-components derive their own streams from it.
struct RunConfig {
  std::uint64_t seed = 1;
  SynthConfig synth;
  std::string related_affinity_path;  // empty: planted affinity
  EventWeights weights;
  FeatureOptions features;
  Architecture arch;
  TrainConfig train;
  std::string scheme = "taxonomy_cf";
  std::vector<std::string> schemes = {"static1", "item_i2i", "taxonomy_cf"};
  std::vector<double> lambdas = {0.0, 0.1, 0.25, 0.5, 0.75, 0.9};
  int n_seeds = 5;
  double train_fraction = 0.8;
  std::string eval_split = "test";  // train | test | all
  std::string events_path;
  std::string catalog_path;
  std::string checkpoint_path;

  /// Sets one key from its text form. Unknown keys and malformed values throw
  /// InvalidArgument.
  void set(std::string_view key, std::string_view value);

  /// All keys with their current values, in key order.
  std::vector<std::pair<std::string, std::string>> entries() const;

  ExperimentConfig experiment() const {
    ExperimentConfig e;
    e.train = train;
    e.train.seed = seed;
    e.arch = arch;
    e.features = features;
    e.weights = weights;
    e.n_seeds = n_seeds;
    e.train_fraction = train_fraction;
    return e;
  }

  SynthConfig synth_config() const {
    SynthConfig s = synth;
    s.seed = seed;
    if (!related_affinity_path.empty()) s.related_affinity = read_matrix_file(related_affinity_path);
    return s;
  }

  void validate() const;

  static Matrix2D read_matrix_file(const std::string& path);
};

namespace detail {

struct ConfigKey {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] inline void bad_value(std::string_view key, std::string_view value,
                                   std::string_view expected) {
  throw InvalidArgument("config key '" + std::string(key) + "': expected " +
                        std::string(expected) + ", got '" + std::string(value) + "'");
}

template <class Access>
ConfigKey real_key(std::string name, Access access) {
  return {name,
          [name, access](RunConfig& c, std::string_view v) {
            double d = 0;
            if (!parse_double(v, d) || !std::isfinite(d)) bad_value(name, v, "a real number");
            access(c) = d;
          },
          [access](const RunConfig& c) {
            return format_double(access(const_cast<RunConfig&>(c)));
          }};
}

template <class Access>
ConfigKey int_key(std::string name, Access access) {
  return {name,
          [name, access](RunConfig& c, std::string_view v) {
            auto& slot = access(c);
            std::remove_reference_t<decltype(slot)> parsed{};
            if (!parse_int(v, parsed)) bad_value(name, v, "an integer");
            slot = parsed;
          },
          [access](const RunConfig& c) {
            return std::to_string(access(const_cast<RunConfig&>(c)));
          }};
}

template <class Access>
ConfigKey string_key(std::string name, Access access) {
  return {name, [access](RunConfig& c, std::string_view v) { access(c) = std::string(v); },
          [access](const RunConfig& c) { return access(const_cast<RunConfig&>(c)); }};
}

inline std::vector<std::string_view> list_items(std::string_view v) {
  std::vector<std::string_view> out;
  if (trim(v).empty()) return out;
  for (auto item : split(v, ',')) out.push_back(trim(item));
  return out;
}

template <class Access>
ConfigKey outcome_array_key(std::string name, Access access) {
  return {name,
          [name, access](RunConfig& c, std::string_view v) {
            const auto items = list_items(v);
            if (items.size() != 4) bad_value(name, v, "4 comma-separated reals (caba,related,noise,none)");
            auto& arr = access(c);
            for (std::size_t i = 0; i < 4; ++i) {
              if (!parse_double(items[i], arr[i])) bad_value(name, v, "4 comma-separated reals");
            }
          },
          [access](const RunConfig& c) {
            std::string s;
            for (double d : access(const_cast<RunConfig&>(c))) {
              s += (s.empty() ? "" : ",") + format_double(d);
            }
            return s;
          }};
}

inline const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    k.push_back(int_key("seed", [](RunConfig& c) -> auto& { return c.seed; }));
    // Synthetic corpus.
    k.push_back(int_key("n_users", [](RunConfig& c) -> auto& { return c.synth.n_users; }));
    k.push_back(int_key("n_sessions", [](RunConfig& c) -> auto& { return c.synth.n_sessions; }));
    k.push_back(int_key("n_products", [](RunConfig& c) -> auto& { return c.synth.n_products; }));
    k.push_back(int_key("n_categories", [](RunConfig& c) -> auto& { return c.synth.n_categories; }));
    k.push_back(real_key("p_caba", [](RunConfig& c) -> auto& { return c.synth.p_caba; }));
    k.push_back(real_key("p_related_cabb", [](RunConfig& c) -> auto& { return c.synth.p_related_cabb; }));
    k.push_back(real_key("p_noise_cabb", [](RunConfig& c) -> auto& { return c.synth.p_noise_cabb; }));
    k.push_back(real_key("p_no_purchase", [](RunConfig& c) -> auto& { return c.synth.p_no_purchase; }));
    k.push_back(real_key("clicks_per_session_mean",
                         [](RunConfig& c) -> auto& { return c.synth.clicks_per_session_mean; }));
    k.push_back(string_key("related_affinity_path",
                           [](RunConfig& c) -> auto& { return c.related_affinity_path; }));
    k.push_back(int_key("related_group_size",
                        [](RunConfig& c) -> auto& { return c.synth.related_group_size; }));
    k.push_back(int_key("n_departments", [](RunConfig& c) -> auto& { return c.synth.n_departments; }));
    k.push_back(int_key("favorites_per_category",
                        [](RunConfig& c) -> auto& { return c.synth.favorites_per_category; }));
    k.push_back(outcome_array_key("intent_from_profile_prob",
                                  [](RunConfig& c) -> auto& { return c.synth.intent_from_profile_prob; }));
    k.push_back(outcome_array_key("favorite_click_prob",
                                  [](RunConfig& c) -> auto& { return c.synth.favorite_click_prob; }));
    k.push_back(outcome_array_key("bounce_prob", [](RunConfig& c) -> auto& { return c.synth.bounce_prob; }));
    k.push_back(real_key("favorite_purchase_boost",
                         [](RunConfig& c) -> auto& { return c.synth.favorite_purchase_boost; }));
    k.push_back(real_key("bounced_purchase_factor",
                         [](RunConfig& c) -> auto& { return c.synth.bounced_purchase_factor; }));
    k.push_back(real_key("repeat_category_prob",
                         [](RunConfig& c) -> auto& { return c.synth.repeat_category_prob; }));
    // Engagement weights.
    k.push_back(real_key("w_impression", [](RunConfig& c) -> auto& { return c.weights.w_impression; }));
    k.push_back(real_key("w_click", [](RunConfig& c) -> auto& { return c.weights.w_click; }));
    k.push_back(real_key("w_cart", [](RunConfig& c) -> auto& { return c.weights.w_cart; }));
    k.push_back(real_key("w_purchase", [](RunConfig& c) -> auto& { return c.weights.w_purchase; }));
    // Features.
    k.push_back(int_key("bounce_threshold_ms",
                        [](RunConfig& c) -> auto& { return c.features.bounce_threshold_ms; }));
    k.push_back(real_key("cvr_prior_purchases",
                         [](RunConfig& c) -> auto& { return c.features.cvr_prior_purchases; }));
    k.push_back(real_key("cvr_prior_clicks",
                         [](RunConfig& c) -> auto& { return c.features.cvr_prior_clicks; }));
    k.push_back(int_key("time_gap_cap_ms", [](RunConfig& c) -> auto& { return c.features.time_gap_cap_ms; }));
    // Model and training.
    k.push_back(int_key("embedding_dim", [](RunConfig& c) -> auto& { return c.arch.embedding_dim; }));
    k.push_back({"hidden_dims",
                 [](RunConfig& c, std::string_view v) {
                   std::vector<std::size_t> dims;
                   for (auto item : list_items(v)) {
                     std::size_t h = 0;
                     if (!parse_int(item, h)) bad_value("hidden_dims", v, "comma-separated integers");
                     dims.push_back(h);
                   }
                   c.arch.hidden_dims = dims;
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (auto h : c.arch.hidden_dims) s += (s.empty() ? "" : ",") + std::to_string(h);
                   return s;
                 }});
    k.push_back(real_key("lambda", [](RunConfig& c) -> auto& { return c.train.lambda; }));
    k.push_back(real_key("learning_rate", [](RunConfig& c) -> auto& { return c.train.learning_rate; }));
    k.push_back(int_key("epochs", [](RunConfig& c) -> auto& { return c.train.epochs; }));
    k.push_back(int_key("batch_size", [](RunConfig& c) -> auto& { return c.train.batch_size; }));
    k.push_back({"mode",
                 [](RunConfig& c, std::string_view v) {
                   const auto m = parse_train_mode(v);
                   if (!m) bad_value("mode", v, "single_task_last_click, caba_only or multitask");
                   c.train.mode = *m;
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.train.mode)); }});
    // Experiments.
    k.push_back(string_key("scheme", [](RunConfig& c) -> auto& { return c.scheme; }));
    k.push_back({"schemes",
                 [](RunConfig& c, std::string_view v) {
                   c.schemes.clear();
                   for (auto item : list_items(v)) c.schemes.emplace_back(item);
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (const auto& n : c.schemes) s += (s.empty() ? "" : ",") + n;
                   return s;
                 }});
    k.push_back({"lambdas",
                 [](RunConfig& c, std::string_view v) {
                   c.lambdas.clear();
                   for (auto item : list_items(v)) {
                     double d = 0;
                     if (!parse_double(item, d)) bad_value("lambdas", v, "comma-separated reals");
                     c.lambdas.push_back(d);
                   }
                 },
                 [](const RunConfig& c) {
                   std::string s;
                   for (double d : c.lambdas) s += (s.empty() ? "" : ",") + format_double(d);
                   return s;
                 }});
    k.push_back(int_key("n_seeds", [](RunConfig& c) -> auto& { return c.n_seeds; }));
    k.push_back(real_key("train_fraction", [](RunConfig& c) -> auto& { return c.train_fraction; }));
    k.push_back(string_key("eval_split", [](RunConfig& c) -> auto& { return c.eval_split; }));
    // Inputs.
    k.push_back(string_key("events_path", [](RunConfig& c) -> auto& { return c.events_path; }));
    k.push_back(string_key("catalog_path", [](RunConfig& c) -> auto& { return c.catalog_path; }));
    k.push_back(string_key("checkpoint_path", [](RunConfig& c) -> auto& { return c.checkpoint_path; }));
    std::sort(k.begin(), k.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    return k;
  }();
  return keys;
}

inline const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace detail

inline void RunConfig::set(std::string_view key, std::string_view value) {
  const auto* k = detail::find_key(key);
  if (k == nullptr) throw InvalidArgument("unknown config key '" + std::string(key) + "'");
  k->set(*this, trim(value));
}

inline std::vector<std::pair<std::string, std::string>> RunConfig::entries() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& k : detail::config_keys()) out.emplace_back(k.name, k.get(*this));
  return out;
}

inline void RunConfig::validate() const {
  SynthConfig s = synth;
  cabb::validate(s);
  weights.validate();
  arch.validate();
  train.validate();
  if (n_seeds < 1) throw InvalidArgument("n_seeds must be >= 1");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw InvalidArgument("train_fraction must lie in (0,1)");
  }
  if (features.bounce_threshold_ms < 0 || features.time_gap_cap_ms <= 0) {
    throw InvalidArgument("bounce_threshold_ms must be >= 0 and time_gap_cap_ms > 0");
  }
  if (!(features.cvr_prior_clicks > 0.0) || !(features.cvr_prior_purchases >= 0.0)) {
    throw InvalidArgument("cvr_prior_clicks must be > 0 and cvr_prior_purchases >= 0");
  }
  auto known_scheme = [](const std::string& n) {
    return n == "static1" || n == "item_i2i" || n == "taxonomy_cf";
  };
  if (!known_scheme(scheme)) throw InvalidArgument("unknown scheme '" + scheme + "'");
  for (const auto& n : schemes) {
    if (!known_scheme(n)) throw InvalidArgument("unknown scheme '" + n + "' in schemes");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw InvalidArgument("lambdas must be >= 0");
  }
  if (eval_split != "train" && eval_split != "test" && eval_split != "all") {
    throw InvalidArgument("eval_split must be train, test or all");
  }
}

inline Matrix2D RunConfig::read_matrix_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open related_affinity_path '" + path + "'");
  Matrix2D m;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::istringstream fields(line);
    std::string tok;
    while (fields >> tok) {
      double v = 0;
      if (!parse_double(tok, v)) {
        throw ParseError(path + ":" + std::to_string(line_no) + ": bad value '" + tok + "'");
      }
      row.push_back(v);
    }
    m.push_back(std::move(row));
  }
  return m;
}

/// Reads `key=value` lines. Blank lines and lines starting with '#' are
/// skipped; a repeated key is an error.
inline void load_config(std::istream& in, RunConfig& config, const std::string& source = "config") {
  std::string line;
  std::size_t line_no = 0;
  std::set<std::string> seen;
  while (std::getline(in, line)) {
    ++line_no;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto where = source + ":" + std::to_string(line_no) + ": ";
    const auto eq = body.find('=');
    if (eq == std::string_view::npos) throw ParseError(where + "expected key=value");
    const std::string key(trim(body.substr(0, eq)));
    if (!seen.insert(key).second) throw ParseError(where + "duplicate key '" + key + "'");
    try {
      config.set(key, body.substr(eq + 1));
    } catch (const InvalidArgument& e) {
      throw ParseError(where + e.what());
    }
  }
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  RunConfig c;
  load_config(in, c, path);
  return c;
}

inline void write_config(std::ostream& out, const RunConfig& config) {
  for (const auto& [k, v] : config.entries()) out << k << '=' << v << '\n';
}

// ---------------------------------------------------------------------------
// Commands. Each writes its files under `out_dir` and a short summary to `log`.

namespace files {
inline constexpr std::string_view kEvents = "events.tsv";
inline constexpr std::string_view kCatalog = "catalog.tsv";
inline constexpr std::string_view kGroundTruth = "ground_truth.tsv";
inline constexpr std::string_view kSimilarity = "similarity.tsv";
inline constexpr std::string_view kLeaves = "leaves.tsv";
inline constexpr std::string_view kCheckpoint = "checkpoint.txt";
inline constexpr std::string_view kHistory = "history.tsv";
inline constexpr std::string_view kEvaluation = "evaluation.tsv";
inline constexpr std::string_view kSweep = "lambda_sweep.tsv";
inline constexpr std::string_view kSchemes = "scheme_comparison.tsv";
inline constexpr std::string_view kBaselines = "baseline_comparison.tsv";
inline constexpr std::string_view kImportance = "importance.tsv";
}  // namespace files

namespace detail {

inline std::filesystem::path prepare_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw InvalidArgument("cannot create output directory '" + dir.string() + "'");
  }
  return dir;
}

// Renders the whole file in memory, then writes it and reads it back.
inline void write_file(const std::filesystem::path& path,
                       const std::function<void(std::ostream&)>& render) {
  std::ostringstream buf;
  render(buf);
  const auto text = buf.str();
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out.flush()) throw InvalidArgument("write failed for '" + path.string() + "'");
  }
  std::ifstream back(path, std::ios::binary);
  const std::string got((std::istreambuf_iterator<char>(back)), std::istreambuf_iterator<char>());
  if (got != text) throw InvalidArgument("verification failed for '" + path.string() + "'");
}

inline std::ifstream open_input(const std::string& path, std::string_view key) {
  if (path.empty()) throw InvalidArgument("missing input: set " + std::string(key));
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + std::string(key) + " '" + path + "'");
  return in;
}

inline std::shared_ptr<const Corpus> load_corpus(const RunConfig& c) {
  auto events = open_input(c.events_path, "events_path");
  auto catalog = open_input(c.catalog_path, "catalog_path");
  try {
    return std::make_shared<const Corpus>(parse_corpus(events, catalog));
  } catch (const ParseError& e) {
    throw ParseError(c.events_path + " / " + c.catalog_path + ": " + e.what());
  }
}

inline ModelParams load_checkpoint_file(const std::string& path) {
  auto in = open_input(path, "checkpoint_path");
  return load_checkpoint(in);
}

inline std::vector<ClickExample> eval_examples(const RunConfig& c,
                                               const std::vector<ClickExample>& dataset) {
  if (c.eval_split == "all") return dataset;
  auto split = split_by_session(dataset, c.seed, c.train_fraction);
  return c.eval_split == "train" ? std::move(split.train) : std::move(split.test);
}

inline void check_compatible(const RunConfig& c, const ModelParams& p, const ExperimentData& data) {
  if (!(p.arch == c.arch)) {
    throw InvalidArgument("checkpoint architecture does not match config (embedding_dim/hidden_dims)");
  }
  if (p.feature_dim != kDenseFeatureCount) {
    throw InvalidArgument("checkpoint feature_dim " + std::to_string(p.feature_dim) +
                          " does not match " + std::to_string(kDenseFeatureCount));
  }
  if (p.leaf_count != data.taxonomy->leaf_count()) {
    throw InvalidArgument("checkpoint leaf_count " + std::to_string(p.leaf_count) +
                          " does not match corpus taxonomy (" +
                          std::to_string(data.taxonomy->leaf_count()) + ")");
  }
}

inline std::vector<std::pair<std::string, std::string>> run_header(const RunConfig& c) {
  auto h = c.experiment().echo();
  h.emplace_back("scheme", c.scheme);
  h.emplace_back("mode", std::string(to_string(c.train.mode)));
  return h;
}

}  // namespace detail

inline void cmd_generate(const RunConfig& config, const std::filesystem::path& out_dir,
                         std::ostream& log) {
  config.validate();
  const auto dir = detail::prepare_out_dir(out_dir);
  const auto [corpus, truth] = generate_synthetic(config.synth_config());
  detail::write_file(dir / files::kEvents, [&](std::ostream& o) { write_events(o, corpus); });
  detail::write_file(dir / files::kCatalog, [&](std::ostream& o) { write_catalog(o, corpus.catalog); });
  detail::write_file(dir / files::kGroundTruth,
                     [&](std::ostream& o) { write_ground_truth(o, truth); });
  std::ifstream events(dir / files::kEvents), catalog(dir / files::kCatalog);
  if (!(parse_corpus(events, catalog) == corpus)) {
    throw InvalidArgument("generated corpus does not re-parse to itself");
  }
  write_stats(log, corpus_stats(corpus, &truth));
}

inline void cmd_similarity(const RunConfig& config, const std::filesystem::path& out_dir,
                           std::ostream& log) {
  config.validate();
  const auto dir = detail::prepare_out_dir(out_dir);
  const auto corpus = detail::load_corpus(config);
  const auto taxonomy = build_taxonomy(corpus->catalog);
  const auto matrix =
      build_similarity_matrix(build_engagement_vectors(*corpus, taxonomy, config.weights).by_leaf);
  detail::write_file(dir / files::kSimilarity, [&](std::ostream& o) { write_similarity(o, matrix); });
  detail::write_file(dir / files::kLeaves, [&](std::ostream& o) { write_taxonomy(o, taxonomy); });
  log << "leaves\t" << matrix.leaf_count() << "\nnonzero_pairs\t" << matrix.nonzero_pairs() << '\n';
}

inline void cmd_train(const RunConfig& config, const std::filesystem::path& out_dir,
                      std::ostream& log) {
  config.validate();
  const auto dir = detail::prepare_out_dir(out_dir);
  const auto data = prepare_experiment(detail::load_corpus(config), config.features);
  const auto dataset = data.weighted(data.scheme(config.scheme, config.weights));
  const auto split = split_by_session(dataset, config.seed, config.train_fraction);
  TrainConfig tc = config.train;
  tc.seed = config.seed;
  const auto result = train(split.train, tc, config.arch, data.taxonomy->leaf_count());
  detail::write_file(dir / files::kCheckpoint,
                     [&](std::ostream& o) { save_checkpoint(o, result.params); });
  std::ifstream back(dir / files::kCheckpoint);
  if (!(load_checkpoint(back) == result.params)) {
    throw InvalidArgument("checkpoint does not reload bitwise");
  }
  detail::write_file(dir / files::kHistory, [&](std::ostream& o) {
    o << "# report=training_history\n";
    for (const auto& [k, v] : detail::run_header(config)) o << "# " << k << '=' << v << '\n';
    o << "# train_examples=" << split.train.size() << '\n';
    o << "epoch\tl_caba\tl_cabb\ttotal\n";
    auto row = [&o](std::size_t epoch, const LossBreakdown& l) {
      o << epoch << '\t' << format_precise(l.l_caba) << '\t' << format_precise(l.l_cabb) << '\t'
        << format_precise(l.total) << '\n';
    };
    row(0, result.initial);
    for (std::size_t e = 0; e < result.history.size(); ++e) row(e + 1, result.history[e]);
  });
  const auto& last = result.history.empty() ? result.initial : result.history.back();
  log << "train_examples\t" << split.train.size() << "\nfinal_total_loss\t"
      << format_precise(last.total) << '\n';
}

inline void cmd_evaluate(const RunConfig& config, const std::filesystem::path& out_dir,
                         std::ostream& log) {
  config.validate();
  const auto dir = detail::prepare_out_dir(out_dir);
  const auto params = detail::load_checkpoint_file(config.checkpoint_path);
  const auto data = prepare_experiment(detail::load_corpus(config), config.features);
  detail::check_compatible(config, params, data);
  const auto examples =
      detail::eval_examples(config, data.weighted(data.scheme(config.scheme, config.weights)));
  const auto ne = task_ne_breakdown(params, examples, config.train.mode);
  ExperimentReport report;
  report.title = "evaluation";
  report.header = detail::run_header(config);
  report.header.emplace_back("eval_split", config.eval_split);
  report.header.emplace_back("eval_examples", std::to_string(examples.size()));
  for (const auto& e : ne.errors) report.notes.push_back("degenerate " + e);
  auto value = [](const std::optional<double>& v) { return v ? *v : std::nan(""); };
  report.rows.push_back({std::string(to_string(config.train.mode)), value(ne.overall),
                         value(ne.caba), value(ne.cabb), std::to_string(config.seed)});
  detail::write_file(dir / files::kEvaluation, [&](std::ostream& o) { write_report(o, report); });
  log << "overall_ne\t" << format_precise(value(ne.overall)) << "\ncaba_ne\t"
      << format_precise(value(ne.caba)) << "\ncabb_ne\t" << format_precise(value(ne.cabb)) << '\n';
}

inline void cmd_sweep(const RunConfig& config, const std::filesystem::path& out_dir,
                      std::ostream& log) {
  config.validate();
  const auto dir = detail::prepare_out_dir(out_dir);
  const auto data = prepare_experiment(detail::load_corpus(config), config.features);
  const auto report = lambda_sweep(data, data.scheme(config.scheme, config.weights), config.lambdas,
                                   config.experiment());
  detail::write_file(dir / files::kSweep, [&](std::ostream& o) { write_report(o, report); });
  log << "rows\t" << report.rows.size() << '\n';
}

inline void cmd_schemes(const RunConfig& config, const std::filesystem::path& out_dir,
                        std::ostream& log) {
  config.validate();
  const auto dir = detail::prepare_out_dir(out_dir);
  const auto data = prepare_experiment(detail::load_corpus(config), config.features);
  std::vector<WeightingScheme> schemes;
  for (const auto& name : config.schemes) schemes.push_back(data.scheme(name, config.weights));
  const auto report = scheme_comparison(data, schemes, config.experiment());
  detail::write_file(dir / files::kSchemes, [&](std::ostream& o) { write_report(o, report); });
  log << "rows\t" << report.rows.size() << '\n';
}

inline void cmd_baselines(const RunConfig& config, const std::filesystem::path& out_dir,
                          std::ostream& log) {
  config.validate();
  const auto dir = detail::prepare_out_dir(out_dir);
  const auto data = prepare_experiment(detail::load_corpus(config), config.features);
  const auto report = baseline_comparison(data, data.scheme(config.scheme, config.weights),
                                          config.experiment());
  detail::write_file(dir / files::kBaselines, [&](std::ostream& o) { write_report(o, report); });
  log << "rows\t" << report.rows.size() << '\n';
}

/// With checkpoint_path set, scores that model on eval_split; otherwise
/// trains one Multitask model per seed and scores each on its test split.
inline void cmd_importance(const RunConfig& config, const std::filesystem::path& out_dir,
                           std::ostream& log) {
  config.validate();
  const auto dir = detail::prepare_out_dir(out_dir);
  const auto data = prepare_experiment(detail::load_corpus(config), config.features);
  const auto scheme = data.scheme(config.scheme, config.weights);
  std::vector<ImportanceRow> rows;
  auto header = detail::run_header(config);
  if (!config.checkpoint_path.empty()) {
    const auto params = detail::load_checkpoint_file(config.checkpoint_path);
    detail::check_compatible(config, params, data);
    const auto examples = detail::eval_examples(config, data.weighted(scheme));
    rows = importance_rows(params, examples, config.seed, std::to_string(config.seed));
    header.emplace_back("eval_split", config.eval_split);
  } else {
    rows = importance_study(data, scheme, config.experiment());
  }
  detail::write_file(dir / files::kImportance,
                     [&](std::ostream& o) { write_importance(o, rows, header); });
  log << "rows\t" << rows.size() << '\n';
}

}  // namespace cabb
