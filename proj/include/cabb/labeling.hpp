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

// Per-click training examples: CABA/CABB labels, last-click labels, history
// features and the CABB example weight.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cabb/common.hpp"
#include "cabb/corpus.hpp"
#include "cabb/similarity.hpp"
#include "cabb/taxonomy.hpp"

namespace cabb {

enum Feature : std::size_t {
  kUserProductClicks,
  kUserLeafPurchases,
  kTimeGap,
  kProductPopularity,
  kAdvertiserCvr,
  kSessionClickIndex,
  kQuickBounce,
  kDenseFeatureCount,
};

inline constexpr std::array<std::string_view, kDenseFeatureCount> kFeatureNames = {
    "f_user_product_clicks", "f_user_leaf_purchases", "f_time_gap",
    "f_product_popularity",  "f_advertiser_cvr",      "f_session_click_index",
    "f_quick_bounce"};

struct FeatureOptions {
  std::int64_t bounce_threshold_ms = 10'000;
  double cvr_prior_purchases = 1.0;
  double cvr_prior_clicks = 10.0;
  std::int64_t time_gap_cap_ms = 30LL * 24 * 3600 * 1000;
};

struct FeatureVector {
  std::array<double, kDenseFeatureCount> values{};

  double operator[](Feature f) const { return values[f]; }
  double& operator[](Feature f) { return values[f]; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

struct ClickExample {
  std::string session_id;
  std::string user_id;
  std::string product_id;
  std::int64_t timestamp_ms = 0;
  double y1 = 0;  // CABA
  double y2 = 0;  // CABB
  double y_last_click = 0;
  double alpha = 1.0;
  std::vector<std::string> purchased_others;
  FeatureVector features;
  LeafId leaf_id = 0;

  std::span<const double> dense() const { return features.values; }
};

// ---------------------------------------------------------------------------
// Labels

struct ClickLabels {
  std::size_t position = 0;  // index of the click inside the session
  bool y1 = false;
  bool y2 = false;
  std::vector<std::string> purchased_others;  // sorted, unique
};

/// For each click on A: y1 iff A is purchased later in the session; y2 iff
/// some other product is.
inline std::vector<ClickLabels> partition_labels(const Session& session) {
  std::vector<ClickLabels> out;
  for (std::size_t i = 0; i < session.size(); ++i) {
    if (session[i].type != EventType::kClick) continue;
    ClickLabels labels;
    labels.position = i;
    const auto& a = session[i].product_id;
    for (std::size_t j = i + 1; j < session.size(); ++j) {
      if (session[j].type != EventType::kPurchase) continue;
      if (session[j].product_id == a) {
        labels.y1 = true;
      } else {
        labels.purchased_others.push_back(session[j].product_id);
      }
    }
    std::sort(labels.purchased_others.begin(), labels.purchased_others.end());
    labels.purchased_others.erase(
        std::unique(labels.purchased_others.begin(), labels.purchased_others.end()),
        labels.purchased_others.end());
    labels.y2 = !labels.purchased_others.empty();
    out.push_back(std::move(labels));
  }
  return out;
}

struct LastClickResult {
  std::vector<bool> labels;  // one per click, session order
  std::size_t orphan_purchases = 0;
};

/// Each purchase credits the latest click before it (any product).
/// Purchases with no earlier click are counted as orphans.
inline LastClickResult last_click_labels(const Session& session) {
  LastClickResult r;
  std::vector<std::size_t> click_slot(session.size(), 0);
  std::size_t n_clicks = 0;
  for (std::size_t i = 0; i < session.size(); ++i) {
    if (session[i].type == EventType::kClick) click_slot[i] = n_clicks++;
  }
  r.labels.assign(n_clicks, false);
  std::optional<std::size_t> last_click;
  for (std::size_t i = 0; i < session.size(); ++i) {
    if (session[i].type == EventType::kClick) {
      last_click = click_slot[i];
    } else if (session[i].type == EventType::kPurchase) {
      if (last_click) {
        r.labels[*last_click] = true;
      } else {
        ++r.orphan_purchases;
      }
    }
  }
  return r;
}

struct CorpusLastClick {
  std::map<std::string, std::vector<bool>> by_session;
  std::size_t orphan_purchases = 0;
};

inline CorpusLastClick last_click_labels(const Corpus& corpus) {
  CorpusLastClick out;
  for (const auto& [sid, session] : corpus.sessions) {
    auto r = last_click_labels(session);
    out.orphan_purchases += r.orphan_purchases;
    out.by_session.emplace(sid, std::move(r.labels));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features

/// Timestamps of past events, grouped by the keys the features aggregate
/// over. Queries count only events strictly before the given time.
class HistoryIndex {
 public:
  HistoryIndex(const Corpus& corpus, const Taxonomy& taxonomy) {
    for (const auto& [pid, entry] : corpus.catalog) advertiser_[pid] = entry.advertiser_id;
    for (const auto& [sid, session] : corpus.sessions) {
      for (const auto& ev : session) {
        const auto t = ev.timestamp_ms;
        const auto& adv = advertiser_.at(ev.product_id);
        switch (ev.type) {
          case EventType::kClick:
            user_product_clicks_[pair_key(ev.user_id, ev.product_id)].push_back(t);
            product_clicks_[ev.product_id].push_back(t);
            advertiser_clicks_[adv].push_back(t);
            user_product_touch_[pair_key(ev.user_id, ev.product_id)].push_back(t);
            break;
          case EventType::kAddToCart:
            user_product_touch_[pair_key(ev.user_id, ev.product_id)].push_back(t);
            break;
          case EventType::kPurchase:
            user_leaf_purchases_[pair_key(ev.user_id,
                                          std::to_string(taxonomy.leaf_of(ev.product_id)))]
                .push_back(t);
            advertiser_purchases_[adv].push_back(t);
            user_product_touch_[pair_key(ev.user_id, ev.product_id)].push_back(t);
            break;
          case EventType::kImpression:
            break;
        }
      }
    }
    for (auto* m : {&user_product_clicks_, &user_product_touch_, &user_leaf_purchases_,
                    &product_clicks_, &advertiser_clicks_, &advertiser_purchases_}) {
      for (auto& [k, v] : *m) std::sort(v.begin(), v.end());
    }
  }

  std::size_t user_product_clicks(const std::string& user, const std::string& product,
                                  std::int64_t before) const {
    return count(user_product_clicks_, pair_key(user, product), before);
  }
  std::size_t user_leaf_purchases(const std::string& user, LeafId leaf,
                                  std::int64_t before) const {
    return count(user_leaf_purchases_, pair_key(user, std::to_string(leaf)), before);
  }
  std::size_t product_clicks(const std::string& product, std::int64_t before) const {
    return count(product_clicks_, product, before);
  }
  std::size_t advertiser_clicks(const std::string& product, std::int64_t before) const {
    return count(advertiser_clicks_, advertiser_.at(product), before);
  }
  std::size_t advertiser_purchases(const std::string& product, std::int64_t before) const {
    return count(advertiser_purchases_, advertiser_.at(product), before);
  }
  /// Latest click/cart/purchase by the user on the product before `before`.
  std::optional<std::int64_t> last_touch(const std::string& user, const std::string& product,
                                         std::int64_t before) const {
    const auto it = user_product_touch_.find(pair_key(user, product));
    if (it == user_product_touch_.end()) return std::nullopt;
    const auto& v = it->second;
    const auto pos = std::lower_bound(v.begin(), v.end(), before);
    if (pos == v.begin()) return std::nullopt;
    return *(pos - 1);
  }

 private:
  using Series = std::unordered_map<std::string, std::vector<std::int64_t>>;

  static std::string pair_key(const std::string& a, const std::string& b) {
    std::string k;
    k.reserve(a.size() + b.size() + 1);
    k.append(a).push_back('\x1f');
    k.append(b);
    return k;
  }

  static std::size_t count(const Series& m, const std::string& key, std::int64_t before) {
    const auto it = m.find(key);
    if (it == m.end()) return 0;
    return static_cast<std::size_t>(
        std::lower_bound(it->second.begin(), it->second.end(), before) - it->second.begin());
  }

  std::unordered_map<std::string, std::string> advertiser_;
  Series user_product_clicks_, user_product_touch_, user_leaf_purchases_;
  Series product_clicks_, advertiser_clicks_, advertiser_purchases_;
};

/// Features of the click at `position` in `session`. History aggregates see
/// only events strictly before the click; the quick-bounce flag looks at the
/// next event in the session, bounded by the bounce threshold.
inline FeatureVector extract_features(const Session& session, std::size_t position,
                                      const HistoryIndex& history, const Taxonomy& taxonomy,
                                      const FeatureOptions& options = {}) {
  const Event& click = session.at(position);
  if (click.type != EventType::kClick) throw InvalidArgument("extract_features: not a click");
  const auto t = click.timestamp_ms;
  FeatureVector f;
  f[kUserProductClicks] =
      std::log1p(static_cast<double>(history.user_product_clicks(click.user_id, click.product_id, t)));
  f[kUserLeafPurchases] = std::log1p(static_cast<double>(
      history.user_leaf_purchases(click.user_id, taxonomy.leaf_of(click.product_id), t)));
  std::int64_t gap = options.time_gap_cap_ms;
  if (const auto last = history.last_touch(click.user_id, click.product_id, t)) {
    gap = std::min(gap, t - *last);
  }
  f[kTimeGap] = std::log1p(static_cast<double>(gap));
  f[kProductPopularity] =
      std::log1p(static_cast<double>(history.product_clicks(click.product_id, t)));
  f[kAdvertiserCvr] =
      (static_cast<double>(history.advertiser_purchases(click.product_id, t)) +
       options.cvr_prior_purchases) /
      (static_cast<double>(history.advertiser_clicks(click.product_id, t)) +
       options.cvr_prior_clicks);
  std::size_t index = 0;
  for (std::size_t i = 0; i < position; ++i) index += session[i].type == EventType::kClick;
  f[kSessionClickIndex] = static_cast<double>(index);
  if (position + 1 < session.size()) {
    const Event& next = session[position + 1];
    f[kQuickBounce] = next.product_id != click.product_id &&
                              next.timestamp_ms - t <= options.bounce_threshold_ms
                          ? 1.0
                          : 0.0;
  }
  return f;
}

// ---------------------------------------------------------------------------
// Dataset

/// Max over the purchased others of alpha(A, B); 1 when there are none.
inline double example_alpha(const WeightingScheme& scheme, const std::string& product,
                            const std::vector<std::string>& purchased_others) {
  if (purchased_others.empty()) return 1.0;
  double a = 0.0;
  for (const auto& b : purchased_others) a = std::max(a, alpha(scheme, product, b));
  return a;
}

inline void assign_alpha(std::vector<ClickExample>& examples, const WeightingScheme& scheme) {
  for (auto& ex : examples) ex.alpha = example_alpha(scheme, ex.product_id, ex.purchased_others);
}

/// One example per click, ordered by session id then time.
inline std::vector<ClickExample> build_dataset(const Corpus& corpus, const Taxonomy& taxonomy,
                                               const WeightingScheme& scheme,
                                               const FeatureOptions& options = {}) {
  const HistoryIndex history(corpus, taxonomy);
  std::vector<ClickExample> out;
  for (const auto& [sid, session] : corpus.sessions) {
    const auto labels = partition_labels(session);
    const auto last = last_click_labels(session);
    for (std::size_t k = 0; k < labels.size(); ++k) {
      const auto& lab = labels[k];
      const Event& click = session[lab.position];
      ClickExample ex;
      ex.session_id = sid;
      ex.user_id = click.user_id;
      ex.product_id = click.product_id;
      ex.timestamp_ms = click.timestamp_ms;
      ex.y1 = lab.y1 ? 1.0 : 0.0;
      ex.y2 = lab.y2 ? 1.0 : 0.0;
      ex.y_last_click = last.labels[k] ? 1.0 : 0.0;
      ex.purchased_others = lab.purchased_others;
      ex.features = extract_features(session, lab.position, history, taxonomy, options);
      ex.leaf_id = taxonomy.leaf_of(click.product_id);
      ex.alpha = example_alpha(scheme, ex.product_id, ex.purchased_others);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

inline void write_dataset(std::ostream& out, const std::vector<ClickExample>& examples) {
  for (const auto& ex : examples) {
    out << ex.session_id << '\t' << ex.product_id << '\t' << ex.y1 << '\t' << ex.y2 << '\t'
        << format_double(ex.alpha);
    for (double v : ex.features.values) out << '\t' << format_double(v);
    out << '\t' << ex.leaf_id << '\n';
  }
}

}  // namespace cabb
