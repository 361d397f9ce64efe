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

// Session logs: the event data model, the tab-separated file formats and a
// seeded generator of synthetic corpora with planted CABA/CABB structure.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "cabb/common.hpp"

namespace cabb {

enum class EventType : std::uint8_t { kImpression, kClick, kAddToCart, kPurchase };

inline constexpr std::array<std::string_view, 4> kEventTypeNames = {
    "impression", "click", "add_to_cart", "purchase"};

inline std::string_view to_string(EventType t) {
  return kEventTypeNames[static_cast<std::size_t>(t)];
}

inline std::optional<EventType> parse_event_type(std::string_view s) {
  for (std::size_t i = 0; i < kEventTypeNames.size(); ++i) {
    if (kEventTypeNames[i] == s) return static_cast<EventType>(i);
  }
  return std::nullopt;
}

struct Event {
  std::string session_id;
  std::string user_id;
  std::string product_id;
  EventType type = EventType::kImpression;
  std::int64_t timestamp_ms = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

struct CatalogEntry {
  std::string product_id;
  std::string category_path;
  std::string advertiser_id;

  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

using Session = std::vector<Event>;
using Catalog = std::map<std::string, CatalogEntry>;

/// Sessions keyed by id (ordered), each sorted by timestamp with input order
/// breaking ties. Immutable once built.
struct Corpus {
  std::map<std::string, Session> sessions;
  Catalog catalog;

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& [id, s] : sessions) n += s.size();
    return n;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

inline bool valid_category_path(std::string_view path) {
  if (path.empty()) return false;
  for (auto seg : split(path, '/')) {
    if (seg.empty()) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// File formats

inline Catalog parse_catalog(std::istream& in) {
  Catalog catalog;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "catalog:" + std::to_string(line_no) + ": ";
    const auto fields = split(line, '\t');
    if (fields.size() != 3) {
      throw ParseError(where + "expected 3 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    CatalogEntry entry{std::string(fields[0]), std::string(fields[1]),
                       std::string(fields[2])};
    if (entry.product_id.empty()) throw ParseError(where + "empty product_id");
    if (!valid_category_path(entry.category_path)) {
      throw ParseError(where + "category_path '" + entry.category_path +
                       "' has an empty segment");
    }
    if (catalog.contains(entry.product_id)) {
      throw ParseError(where + "duplicate product_id '" + entry.product_id + "'");
    }
    catalog.emplace(entry.product_id, std::move(entry));
  }
  return catalog;
}

inline std::map<std::string, Session> parse_events(std::istream& in,
                                                   const Catalog& catalog) {
  std::map<std::string, Session> sessions;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto where = "events:" + std::to_string(line_no) + ": ";
    const auto fields = split(line, '\t');
    if (fields.size() != 5) {
      throw ParseError(where + "expected 5 tab-separated fields, got " +
                       std::to_string(fields.size()));
    }
    Event ev;
    ev.session_id = fields[0];
    ev.user_id = fields[1];
    ev.product_id = fields[2];
    if (ev.session_id.empty() || ev.user_id.empty() || ev.product_id.empty()) {
      throw ParseError(where + "empty identifier");
    }
    const auto type = parse_event_type(fields[3]);
    if (!type) {
      throw ParseError(where + "unknown event_type '" + std::string(fields[3]) + "'");
    }
    ev.type = *type;
    if (!parse_int(fields[4], ev.timestamp_ms) || ev.timestamp_ms < 0) {
      throw ParseError(where + "bad timestamp_ms '" + std::string(fields[4]) + "'");
    }
    if (!catalog.contains(ev.product_id)) {
      throw ParseError(where + "product '" + ev.product_id + "' not in catalog");
    }
    auto& session = sessions[ev.session_id];
    if (!session.empty() && session.front().user_id != ev.user_id) {
      throw ParseError(where + "session '" + ev.session_id +
                       "' has multiple user_ids ('" + session.front().user_id +
                       "', '" + ev.user_id + "')");
    }
    session.push_back(std::move(ev));
  }
  for (auto& [id, session] : sessions) {
    std::stable_sort(session.begin(), session.end(),
                     [](const Event& a, const Event& b) {
                       return a.timestamp_ms < b.timestamp_ms;
                     });
  }
  return sessions;
}

inline Corpus parse_corpus(std::istream& events, std::istream& catalog) {
  Corpus corpus;
  corpus.catalog = parse_catalog(catalog);
  corpus.sessions = parse_events(events, corpus.catalog);
  return corpus;
}

inline void write_events(std::ostream& out, const Corpus& corpus) {
  for (const auto& [id, session] : corpus.sessions) {
    for (const auto& ev : session) {
      out << ev.session_id << '\t' << ev.user_id << '\t' << ev.product_id << '\t'
          << to_string(ev.type) << '\t' << ev.timestamp_ms << '\n';
    }
  }
}

inline void write_catalog(std::ostream& out, const Catalog& catalog) {
  for (const auto& [id, entry] : catalog) {
    out << entry.product_id << '\t' << entry.category_path << '\t'
        << entry.advertiser_id << '\n';
  }
}

// ---------------------------------------------------------------------------
// Synthetic generation

enum class Outcome : std::uint8_t { kCaba, kRelatedCabb, kNoiseCabb, kNone };

inline constexpr std::array<std::string_view, 4> kOutcomeNames = {
    "caba", "related_cabb", "noise_cabb", "none"};

inline std::string_view to_string(Outcome o) {
  return kOutcomeNames[static_cast<std::size_t>(o)];
}

inline std::optional<Outcome> parse_outcome(std::string_view s) {
  for (std::size_t i = 0; i < kOutcomeNames.size(); ++i) {
    if (kOutcomeNames[i] == s) return static_cast<Outcome>(i);
  }
  return std::nullopt;
}

using Matrix2D = std::vector<std::vector<double>>;

struct SynthConfig {
  int n_users = 5000;
  int n_sessions = 100000;
  int n_products = 2000;
  int n_categories = 40;
  double p_caba = 0.5;
  double p_related_cabb = 0.25;
  double p_noise_cabb = 0.15;
  double p_no_purchase = 0.10;
  /// Row c: distribution of the category bought in a related-CABB session
  /// whose intent is c. Empty means planted_affinity(n_categories, ...).
  Matrix2D related_affinity;
  double clicks_per_session_mean = 2.5;
  std::uint64_t seed = 1;

  // Behavioural knobs. They shape which clicks convert, never how often a
  // session outcome occurs.
  int related_group_size = 4;
  int n_departments = 8;
  int favorites_per_category = 1;
  // Per-outcome arrays are indexed by Outcome.
  std::array<double, 4> intent_from_profile_prob = {0.9, 0.9, 0.9, 0.1};
  std::array<double, 4> favorite_click_prob = {1.0, 0.15, 0.15, 0.05};
  std::array<double, 4> bounce_prob = {0.05, 0.5, 0.5, 0.9};
  /// Purchase weight of a clicked favourite in a CABA session is 1 + boost.
  double favorite_purchase_boost = 19.0;
  double bounced_purchase_factor = 0.05;
  /// Chance that a related-CABB session's intent is a category the user
  /// already bought in.
  double repeat_category_prob = 0.7;
};

struct SessionTruth {
  std::string session_id;
  int intent_category = 0;
  Outcome outcome = Outcome::kNone;

  friend bool operator==(const SessionTruth&, const SessionTruth&) = default;
};

struct GroundTruth {
  std::vector<SessionTruth> sessions;
  std::vector<std::string> category_paths;  // generator category index -> path
  Matrix2D related_affinity;

  std::array<std::size_t, 4> outcome_counts() const {
    std::array<std::size_t, 4> counts{};
    for (const auto& s : sessions) ++counts[static_cast<std::size_t>(s.outcome)];
    return counts;
  }
};

/// Symmetric relatedness: categories are shuffled into groups of `group_size`
/// and each category spreads its mass uniformly over the other group members.
inline Matrix2D planted_affinity(int n_categories, int group_size,
                                 std::uint64_t seed) {
  if (n_categories < 2) throw InvalidArgument("planted_affinity: need >= 2 categories");
  group_size = std::clamp(group_size, 2, n_categories);
  std::vector<int> order(static_cast<std::size_t>(n_categories));
  for (int i = 0; i < n_categories; ++i) order[static_cast<std::size_t>(i)] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const int n_groups = std::max(1, n_categories / group_size);
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(n_groups));
  for (int i = 0; i < n_categories; ++i) {
    // Remainder folds into the last group.
    const int g = std::min(i / group_size, n_groups - 1);
    groups[static_cast<std::size_t>(g)].push_back(order[static_cast<std::size_t>(i)]);
  }
  Matrix2D m(static_cast<std::size_t>(n_categories),
             std::vector<double>(static_cast<std::size_t>(n_categories), 0.0));
  for (const auto& g : groups) {
    for (int a : g) {
      for (int b : g) {
        if (a != b) {
          m[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] =
              1.0 / static_cast<double>(g.size() - 1);
        }
      }
    }
  }
  return m;
}

inline void validate(const SynthConfig& c) {
  if (c.n_categories < 2) {
    throw InvalidArgument("n_categories must be >= 2 (related/unrelated split impossible)");
  }
  if (c.n_users <= 0 || c.n_sessions <= 0 || c.n_products <= 0) {
    throw InvalidArgument("n_users, n_sessions and n_products must be positive");
  }
  if (c.n_products < 2 * c.n_categories) {
    throw InvalidArgument("n_products must be at least 2 * n_categories");
  }
  if (!(c.clicks_per_session_mean >= 1.0)) {
    throw InvalidArgument("clicks_per_session_mean must be >= 1");
  }
  const std::array<double, 4> p = {c.p_caba, c.p_related_cabb, c.p_noise_cabb,
                                   c.p_no_purchase};
  double sum = 0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("outcome probabilities must lie in [0,1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw InvalidArgument("outcome probabilities must sum to 1, got " + format_double(sum));
  }
  for (const auto* arr : {&c.intent_from_profile_prob, &c.favorite_click_prob, &c.bounce_prob}) {
    for (double v : *arr) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidArgument("behavioural probabilities must lie in [0,1]");
    }
  }
  for (double v : {c.bounced_purchase_factor, c.repeat_category_prob}) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw InvalidArgument("bounced_purchase_factor and repeat_category_prob must lie in [0,1]");
    }
  }
  if (!(c.favorite_purchase_boost >= 0.0)) {
    throw InvalidArgument("favorite_purchase_boost must be >= 0");
  }
  if (c.favorites_per_category < 0 || c.related_group_size < 2 || c.n_departments < 1) {
    throw InvalidArgument("favorites_per_category >= 0, related_group_size >= 2, n_departments >= 1");
  }
  const auto n = static_cast<std::size_t>(c.n_categories);
  if (!c.related_affinity.empty()) {
    if (c.related_affinity.size() != n) {
      throw InvalidArgument("related_affinity must be n_categories x n_categories");
    }
    for (const auto& row : c.related_affinity) {
      if (row.size() != n) throw InvalidArgument("related_affinity must be square");
      double s = 0;
      for (double v : row) {
        if (!(v >= 0.0)) throw InvalidArgument("related_affinity entries must be >= 0");
        s += v;
      }
      if (std::abs(s - 1.0) > 1e-9) {
        throw InvalidArgument("related_affinity rows must sum to 1");
      }
    }
  }
}

namespace detail {

inline std::string numbered(char prefix, int value, int width) {
  auto digits = std::to_string(value);
  if (static_cast<int>(digits.size()) < width) {
    digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  }
  return prefix + digits;
}

inline int digits(int n) {
  int d = 1;
  while (n >= 10) {
    n /= 10;
    ++d;
  }
  return d;
}

template <class Rng>
double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

template <class Rng>
std::int64_t uniform_ms(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

// Weighted pick among `candidates`; weights must not all be zero.
template <class Rng>
int weighted_pick(Rng& rng, const std::vector<int>& candidates,
                  const std::vector<double>& weights) {
  std::discrete_distribution<std::size_t> dist(weights.begin(), weights.end());
  return candidates[dist(rng)];
}

}  // namespace detail

/// Seeded synthetic corpus. Each session draws a user, an intent category, an
/// outcome class with the configured probabilities and a run of clicks inside
/// the intent category; a converting session ends with add_to_cart + purchase
/// of one product.
inline std::pair<Corpus, GroundTruth> generate_synthetic(const SynthConfig& config) {
  validate(config);
  std::mt19937_64 rng(seed_for(config.seed, SeedTag::kGenerator));
  const auto n_cat = static_cast<std::size_t>(config.n_categories);

  GroundTruth truth;
  truth.related_affinity =
      config.related_affinity.empty()
          ? planted_affinity(config.n_categories, config.related_group_size, rng())
          : config.related_affinity;
  const auto& affinity = truth.related_affinity;

  // Categories and their taxonomy paths. Departments are assigned
  // independently of relatedness so that related leaves often sit in
  // different branches.
  const int n_depts = std::clamp(config.n_departments, 1, config.n_categories);
  const int cat_digits = detail::digits(config.n_categories);
  truth.category_paths.resize(n_cat);
  for (std::size_t c = 0; c < n_cat; ++c) {
    const int dept = std::uniform_int_distribution<int>(0, n_depts - 1)(rng);
    truth.category_paths[c] = detail::numbered('D', dept, 2) + "/" +
                              detail::numbered('C', static_cast<int>(c), cat_digits);
  }
  std::vector<std::vector<int>> unrelated(n_cat);
  for (std::size_t c = 0; c < n_cat; ++c) {
    for (std::size_t d = 0; d < n_cat; ++d) {
      if (d != c && affinity[c][d] == 0.0) unrelated[c].push_back(static_cast<int>(d));
    }
    if (unrelated[c].empty() && config.p_noise_cabb > 0) {
      throw InvalidArgument("related_affinity leaves no unrelated category for row " +
                            std::to_string(c));
    }
  }

  // Products: round-robin over categories, Zipf popularity within a category,
  // advertisers with a log-normal conversion appeal.
  Corpus corpus;
  const int n_adv = std::max(1, config.n_products / 25);
  std::lognormal_distribution<double> appeal_dist(0.0, 0.5);
  std::vector<double> adv_appeal(static_cast<std::size_t>(n_adv));
  for (auto& a : adv_appeal) a = appeal_dist(rng);

  const int prod_digits = detail::digits(config.n_products);
  std::vector<std::string> product_ids(static_cast<std::size_t>(config.n_products));
  std::vector<int> product_adv(product_ids.size());
  std::vector<double> popularity(product_ids.size());
  std::vector<std::vector<int>> by_category(n_cat);
  for (int p = 0; p < config.n_products; ++p) {
    const auto up = static_cast<std::size_t>(p);
    const auto c = up % n_cat;
    const auto rank = by_category[c].size();
    by_category[c].push_back(p);
    popularity[up] = 1.0 / std::pow(static_cast<double>(rank) + 1.0, 0.8);
    product_adv[up] = std::uniform_int_distribution<int>(0, n_adv - 1)(rng);
    product_ids[up] = detail::numbered('p', p, prod_digits);
    corpus.catalog.emplace(
        product_ids[up],
        CatalogEntry{product_ids[up], truth.category_paths[c],
                     detail::numbered('a', product_adv[up], detail::digits(n_adv))});
  }

  auto popular_pick = [&](std::size_t category, const std::vector<int>& exclude) {
    std::vector<int> cands;
    std::vector<double> w;
    for (int p : by_category[category]) {
      if (std::find(exclude.begin(), exclude.end(), p) != exclude.end()) continue;
      cands.push_back(p);
      w.push_back(popularity[static_cast<std::size_t>(p)] *
                  adv_appeal[static_cast<std::size_t>(product_adv[static_cast<std::size_t>(p)])]);
    }
    return cands.empty() ? -1 : detail::weighted_pick(rng, cands, w);
  };

  // Users: a primary category plus one related category, with a few favourite
  // products in each. Favourites drive repeat clicks and same-item purchases.
  struct UserProfile {
    std::vector<int> categories;
    std::vector<std::vector<int>> favorites;  // parallel to categories
  };
  const int user_digits = detail::digits(config.n_users);
  std::vector<UserProfile> users(static_cast<std::size_t>(config.n_users));
  for (auto& u : users) {
    const auto primary = std::uniform_int_distribution<std::size_t>(0, n_cat - 1)(rng);
    u.categories.push_back(static_cast<int>(primary));
    const auto& row = affinity[primary];
    std::discrete_distribution<std::size_t> rel(row.begin(), row.end());
    const auto secondary = rel(rng);
    if (secondary != primary) u.categories.push_back(static_cast<int>(secondary));
    for (int c : u.categories) {
      std::vector<int> fav;
      for (int k = 0; k < config.favorites_per_category; ++k) {
        const int p = popular_pick(static_cast<std::size_t>(c), fav);
        if (p >= 0) fav.push_back(p);
      }
      u.favorites.push_back(std::move(fav));
    }
  }

  std::discrete_distribution<int> outcome_dist(
      {config.p_caba, config.p_related_cabb, config.p_noise_cabb, config.p_no_purchase});
  std::poisson_distribution<int> extra_clicks(config.clicks_per_session_mean - 1.0);
  constexpr int kMaxClicks = 20;
  constexpr std::int64_t kSessionSpacingMs = 60'000;

  std::vector<std::vector<int>> purchased_categories(users.size());

  const int session_digits = detail::digits(config.n_sessions);
  truth.sessions.reserve(static_cast<std::size_t>(config.n_sessions));
  for (int s = 0; s < config.n_sessions; ++s) {
    const auto session_id = detail::numbered('s', s, session_digits);
    const int user = std::uniform_int_distribution<int>(0, config.n_users - 1)(rng);
    const auto& profile = users[static_cast<std::size_t>(user)];
    const auto user_id = detail::numbered('u', user, user_digits);

    const auto outcome = static_cast<Outcome>(outcome_dist(rng));
    auto& bought = purchased_categories[static_cast<std::size_t>(user)];
    std::size_t profile_slot = profile.categories.size();
    std::size_t intent = 0;
    if (outcome == Outcome::kRelatedCabb && !bought.empty() &&
        detail::uniform01(rng) < config.repeat_category_prob) {
      intent = static_cast<std::size_t>(
          bought[std::uniform_int_distribution<std::size_t>(0, bought.size() - 1)(rng)]);
    } else if (detail::uniform01(rng) < config.intent_from_profile_prob[static_cast<std::size_t>(outcome)]) {
      intent = static_cast<std::size_t>(profile.categories[std::uniform_int_distribution<std::size_t>(
          0, profile.categories.size() - 1)(rng)]);
    } else {
      intent = std::uniform_int_distribution<std::size_t>(0, n_cat - 1)(rng);
    }
    for (std::size_t k = 0; k < profile.categories.size(); ++k) {
      if (static_cast<std::size_t>(profile.categories[k]) == intent) profile_slot = k;
    }
    truth.sessions.push_back({session_id, static_cast<int>(intent), outcome});

    const int available = static_cast<int>(by_category[intent].size());
    const int n_clicks = std::clamp(1 + extra_clicks(rng), 1, std::min(kMaxClicks, available));
    const std::vector<int>* favorites =
        profile_slot < profile.categories.size() ? &profile.favorites[profile_slot] : nullptr;

    const auto oi = static_cast<std::size_t>(outcome);
    std::vector<int> clicked;
    std::vector<char> is_favorite;
    for (int k = 0; k < n_clicks; ++k) {
      int p = -1;
      if (favorites != nullptr && detail::uniform01(rng) < config.favorite_click_prob[oi]) {
        std::vector<int> open;
        for (int f : *favorites) {
          if (std::find(clicked.begin(), clicked.end(), f) == clicked.end()) open.push_back(f);
        }
        if (!open.empty()) {
          p = open[std::uniform_int_distribution<std::size_t>(0, open.size() - 1)(rng)];
        }
      }
      if (p < 0) p = popular_pick(intent, clicked);
      clicked.push_back(p);
      const bool fav = favorites != nullptr &&
                       std::find(favorites->begin(), favorites->end(), p) != favorites->end();
      is_favorite.push_back(fav ? 1 : 0);
    }

    std::vector<char> bounced(clicked.size());
    for (auto& b : bounced) b = detail::uniform01(rng) < config.bounce_prob[oi] ? 1 : 0;

    int purchased = -1;
    switch (outcome) {
      case Outcome::kCaba: {
        std::vector<double> w;
        for (std::size_t k = 0; k < clicked.size(); ++k) {
          const auto p = static_cast<std::size_t>(clicked[k]);
          w.push_back((1.0 + config.favorite_purchase_boost * is_favorite[k]) *
                      adv_appeal[static_cast<std::size_t>(product_adv[p])] *
                      (bounced[k] ? config.bounced_purchase_factor : 1.0));
        }
        purchased = detail::weighted_pick(rng, clicked, w);
        break;
      }
      case Outcome::kRelatedCabb: {
        std::discrete_distribution<std::size_t> rel(affinity[intent].begin(),
                                                    affinity[intent].end());
        purchased = popular_pick(rel(rng), clicked);
        break;
      }
      case Outcome::kNoiseCabb: {
        const auto& pool = unrelated[intent];
        const auto c = pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)];
        purchased = popular_pick(static_cast<std::size_t>(c), clicked);
        break;
      }
      case Outcome::kNone:
        break;
    }
    if (outcome != Outcome::kNone && purchased < 0) {
      throw InvalidArgument("no purchasable product left in the chosen category");
    }
    if (purchased >= 0) {
      const auto c = static_cast<int>(static_cast<std::size_t>(purchased) % n_cat);
      if (std::find(bought.begin(), bought.end(), c) == bought.end()) bought.push_back(c);
    }

    auto& events = corpus.sessions[session_id];
    auto emit = [&](int product, EventType type, std::int64_t ts) {
      events.push_back(
          {session_id, user_id, product_ids[static_cast<std::size_t>(product)], type, ts});
    };
    std::int64_t t = static_cast<std::int64_t>(s) * kSessionSpacingMs +
                     detail::uniform_ms(rng, 0, kSessionSpacingMs / 2);
    const int n_impressions = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int k = 0; k < n_impressions; ++k) {
      emit(popular_pick(intent, {}), EventType::kImpression, t);
      t += 500;
    }
    t += 1500;
    for (std::size_t k = 0; k < clicked.size(); ++k) {
      emit(clicked[k], EventType::kClick, t);
      t += bounced[k] ? detail::uniform_ms(rng, 1'000, 9'000)
                      : detail::uniform_ms(rng, 15'000, 180'000);
    }
    if (purchased >= 0) {
      emit(purchased, EventType::kAddToCart, t);
      t += detail::uniform_ms(rng, 20'000, 120'000);
      emit(purchased, EventType::kPurchase, t);
    }
  }
  return {std::move(corpus), std::move(truth)};
}

inline void write_ground_truth(std::ostream& out, const GroundTruth& truth) {
  for (const auto& s : truth.sessions) {
    out << s.session_id << '\t'
        << truth.category_paths[static_cast<std::size_t>(s.intent_category)] << '\t'
        << to_string(s.outcome) << '\n';
  }
}

struct GroundTruthRecord {
  std::string session_id;
  std::string intent_category;
  Outcome outcome = Outcome::kNone;
};

inline std::vector<GroundTruthRecord> parse_ground_truth(std::istream& in) {
  std::vector<GroundTruthRecord> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = "ground_truth:" + std::to_string(line_no) + ": ";
    const auto fields = split(line, '\t');
    if (fields.size() != 3) throw ParseError(where + "expected 3 tab-separated fields");
    const auto outcome = parse_outcome(fields[2]);
    if (!outcome) {
      throw ParseError(where + "unknown outcome_class '" + std::string(fields[2]) + "'");
    }
    out.push_back({std::string(fields[0]), std::string(fields[1]), *outcome});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Statistics

struct StatsReport {
  std::size_t sessions = 0;
  std::array<std::size_t, 4> events_by_type{};
  std::size_t converting_sessions = 0;
  // A purchase is CABA when the same product was clicked earlier in the
  // session, CABB when only other products were clicked, orphan otherwise.
  // A session with several purchases can count as both CABA and CABB.
  std::size_t caba_sessions = 0;
  std::size_t cabb_sessions = 0;
  std::size_t orphan_purchases = 0;
  double converting_fraction = 0;
  double caba_fraction = 0;
  double cabb_fraction = 0;
  std::optional<std::array<std::size_t, 4>> truth_outcomes;
};

inline StatsReport corpus_stats(const Corpus& corpus,
                                const GroundTruth* truth = nullptr) {
  StatsReport r;
  r.sessions = corpus.sessions.size();
  for (const auto& [id, session] : corpus.sessions) {
    std::unordered_set<std::string_view> clicked;
    bool any_purchase = false, caba = false, cabb = false;
    for (const auto& ev : session) {
      ++r.events_by_type[static_cast<std::size_t>(ev.type)];
      if (ev.type == EventType::kClick) {
        clicked.insert(ev.product_id);
      } else if (ev.type == EventType::kPurchase) {
        any_purchase = true;
        if (clicked.contains(ev.product_id)) {
          caba = true;
        } else if (!clicked.empty()) {
          cabb = true;
        } else {
          ++r.orphan_purchases;
        }
      }
    }
    r.converting_sessions += any_purchase;
    r.caba_sessions += caba;
    r.cabb_sessions += cabb;
  }
  auto frac = [](std::size_t a, std::size_t b) {
    return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b);
  };
  r.converting_fraction = frac(r.converting_sessions, r.sessions);
  r.caba_fraction = frac(r.caba_sessions, r.converting_sessions);
  r.cabb_fraction = frac(r.cabb_sessions, r.converting_sessions);
  if (truth != nullptr) r.truth_outcomes = truth->outcome_counts();
  return r;
}

inline void write_stats(std::ostream& out, const StatsReport& r) {
  out << "sessions\t" << r.sessions << '\n';
  for (std::size_t i = 0; i < kEventTypeNames.size(); ++i) {
    out << "events_" << kEventTypeNames[i] << '\t' << r.events_by_type[i] << '\n';
  }
  out << "converting_sessions\t" << r.converting_sessions << '\n'
      << "converting_fraction\t" << format_double(r.converting_fraction) << '\n'
      << "caba_fraction\t" << format_double(r.caba_fraction) << '\n'
      << "cabb_fraction\t" << format_double(r.cabb_fraction) << '\n'
      << "orphan_purchases\t" << r.orphan_purchases << '\n';
  if (r.truth_outcomes) {
    for (std::size_t i = 0; i < kOutcomeNames.size(); ++i) {
      out << "truth_" << kOutcomeNames[i] << '\t' << (*r.truth_outcomes)[i] << '\n';
    }
  }
}

}  // namespace cabb
