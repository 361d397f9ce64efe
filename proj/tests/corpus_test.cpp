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


#include <gtest/gtest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "cabb/corpus.hpp"
#include "support.hpp"

namespace cabb {
namespace {

using testing::corpus_from;

const char* kCatalog = "A Home/Kitchen/CoffeeMakers adv1;B Grocery/Beverages/CoffeeBeans adv2";

SynthConfig small_config(std::uint64_t seed = 3) {
  SynthConfig c;
  c.n_users = 200;
  c.n_sessions = 2000;
  c.n_products = 200;
  c.n_categories = 10;
  c.seed = seed;
  return c;
}

std::string serialize(const Corpus& c, const GroundTruth& t) {
  std::ostringstream out;
  write_events(out, c);
  write_catalog(out, c.catalog);
  write_ground_truth(out, t);
  return out.str();
}

TEST(ParseCorpus, SortsSessionByTimestamp) {
  const auto c = corpus_from("s1 u1 A click 200;s1 u1 B click 100", kCatalog);
  ASSERT_EQ(c.sessions.size(), 1u);
  const auto& s = c.sessions.at("s1");
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].product_id, "B");
  EXPECT_EQ(s[1].product_id, "A");
}

TEST(ParseCorpus, TiesKeepInputOrder) {
  const auto c = corpus_from("s1 u1 B click 5;s1 u1 A purchase 5;s1 u1 A click 5", kCatalog);
  const auto& s = c.sessions.at("s1");
  EXPECT_EQ(s[0].product_id, "B");
  EXPECT_EQ(s[1].type, EventType::kPurchase);
  EXPECT_EQ(s[2].type, EventType::kClick);
}

TEST(ParseCorpus, EmptyEventStream) {
  const auto c = corpus_from("", kCatalog);
  EXPECT_TRUE(c.sessions.empty());
  EXPECT_EQ(c.catalog.size(), 2u);
}

void expect_parse_error(const std::string& events, const std::string& needle) {
  try {
    corpus_from(events, kCatalog);
    FAIL() << "expected ParseError for " << events;
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(ParseCorpus, Errors) {
  expect_parse_error("s1 u1 A click 1;s1 u1 A view 2", "events:2:");
  expect_parse_error("s1 u1 A view 2", "'view'");
  expect_parse_error("s1 u1 Z click 1", "not in catalog");
  expect_parse_error("s1 u1 A click 1;s1 u2 A click 2", "multiple user_ids");
  expect_parse_error("s1 u1 A click", "expected 5");
  expect_parse_error("s1 u1 A click -4", "timestamp");
  EXPECT_THROW(corpus_from("", "A Home//X adv"), ParseError);
  EXPECT_THROW(corpus_from("", "A Home adv;A Garden adv"), ParseError);
}

TEST(ParseCorpus, RoundTrip) {
  const auto [corpus, truth] = generate_synthetic(small_config());
  std::ostringstream ev, cat;
  write_events(ev, corpus);
  write_catalog(cat, corpus.catalog);
  std::istringstream ev_in(ev.str()), cat_in(cat.str());
  const auto again = parse_corpus(ev_in, cat_in);
  EXPECT_EQ(again, corpus);
}

TEST(GroundTruth, RoundTrip) {
  const auto [corpus, truth] = generate_synthetic(small_config());
  std::ostringstream out;
  write_ground_truth(out, truth);
  std::istringstream in(out.str());
  const auto records = parse_ground_truth(in);
  ASSERT_EQ(records.size(), truth.sessions.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_EQ(records[i].session_id, truth.sessions[i].session_id);
    EXPECT_EQ(records[i].outcome, truth.sessions[i].outcome);
  }
}

TEST(Generate, Deterministic) {
  const auto a = generate_synthetic(small_config(9));
  const auto b = generate_synthetic(small_config(9));
  const auto c = generate_synthetic(small_config(10));
  EXPECT_EQ(serialize(a.first, a.second), serialize(b.first, b.second));
  EXPECT_NE(serialize(a.first, a.second), serialize(c.first, c.second));
}

TEST(Generate, NoPurchaseConfig) {
  auto cfg = small_config();
  cfg.p_caba = cfg.p_related_cabb = cfg.p_noise_cabb = 0;
  cfg.p_no_purchase = 1;
  const auto [corpus, truth] = generate_synthetic(cfg);
  for (const auto& [id, s] : corpus.sessions) {
    for (const auto& ev : s) EXPECT_NE(ev.type, EventType::kPurchase);
  }
  for (const auto& t : truth.sessions) EXPECT_EQ(t.outcome, Outcome::kNone);
}

TEST(Generate, RejectsBadConfigs) {
  auto cfg = small_config();
  cfg.n_categories = 1;
  EXPECT_THROW(generate_synthetic(cfg), InvalidArgument);
  cfg = small_config();
  cfg.p_caba += 0.01;
  EXPECT_THROW(generate_synthetic(cfg), InvalidArgument);
  cfg = small_config();
  cfg.related_affinity.assign(10, std::vector<double>(10, 0.2));
  EXPECT_THROW(generate_synthetic(cfg), InvalidArgument);
}

TEST(Generate, SessionInvariants) {
  const auto [corpus, truth] = generate_synthetic(small_config());
  ASSERT_EQ(corpus.sessions.size(), 2000u);
  for (const auto& [id, s] : corpus.sessions) {
    int purchases = 0, clicks = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      EXPECT_EQ(s[i].user_id, s.front().user_id);
      EXPECT_TRUE(corpus.catalog.contains(s[i].product_id));
      EXPECT_GE(s[i].timestamp_ms, 0);
      if (i > 0) {
        EXPECT_LE(s[i - 1].timestamp_ms, s[i].timestamp_ms);
      }
      purchases += s[i].type == EventType::kPurchase;
      clicks += s[i].type == EventType::kClick;
    }
    EXPECT_LE(purchases, 1);
    EXPECT_GE(clicks, 1);
  }
}

TEST(Generate, PlantedAffinityRowsAreDistributions) {
  const auto m = planted_affinity(10, 4, 5);
  ASSERT_EQ(m.size(), 10u);
  for (std::size_t i = 0; i < m.size(); ++i) {
    double sum = 0;
    for (std::size_t j = 0; j < m.size(); ++j) {
      EXPECT_GE(m[i][j], 0.0);
      EXPECT_EQ(m[i][j], m[j][i]);
      sum += m[i][j];
    }
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_EQ(m[i][i], 0.0);
  }
}

TEST(Generate, OutcomeFrequenciesMatchConfig) {
  SynthConfig cfg;
  cfg.p_caba = 0.5;
  cfg.p_related_cabb = 0.25;
  cfg.p_noise_cabb = 0.15;
  cfg.p_no_purchase = 0.10;
  cfg.n_sessions = 100000;
  const auto [corpus, truth] = generate_synthetic(cfg);
  const auto counts = truth.outcome_counts();
  const double n = static_cast<double>(truth.sessions.size());
  EXPECT_NEAR(counts[0] / n, 0.5, 0.01);
  EXPECT_NEAR(counts[1] / n, 0.25, 0.01);
  EXPECT_NEAR(counts[2] / n, 0.15, 0.01);
  EXPECT_NEAR(counts[3] / n, 0.10, 0.01);
}

TEST(CorpusStats, SingleCabaSession) {
  const auto r = corpus_stats(corpus_from("s1 u1 A click 1;s1 u1 A purchase 2", kCatalog));
  EXPECT_EQ(r.sessions, 1u);
  EXPECT_DOUBLE_EQ(r.caba_fraction, 1.0);
  EXPECT_DOUBLE_EQ(r.cabb_fraction, 0.0);
  EXPECT_DOUBLE_EQ(r.converting_fraction, 1.0);
}

TEST(CorpusStats, SingleCabbSession) {
  const auto r = corpus_stats(corpus_from("s1 u1 A click 1;s1 u1 B purchase 2", kCatalog));
  EXPECT_DOUBLE_EQ(r.caba_fraction, 0.0);
  EXPECT_DOUBLE_EQ(r.cabb_fraction, 1.0);
}

TEST(CorpusStats, CountsEventsAndOrphans) {
  const auto r = corpus_stats(corpus_from(
      "s1 u1 A impression 0;s1 u1 A purchase 1;s2 u1 B click 1;s2 u1 B add_to_cart 2", kCatalog));
  EXPECT_EQ(r.events_by_type[0], 1u);
  EXPECT_EQ(r.events_by_type[1], 1u);
  EXPECT_EQ(r.events_by_type[2], 1u);
  EXPECT_EQ(r.events_by_type[3], 1u);
  EXPECT_EQ(r.orphan_purchases, 1u);
  EXPECT_DOUBLE_EQ(r.converting_fraction, 0.5);
}

TEST(CorpusStats, CabbFractionMatchesGroundTruth) {
  const auto [corpus, truth] = generate_synthetic(small_config(21));
  const auto r = corpus_stats(corpus, &truth);
  const auto counts = truth.outcome_counts();
  ASSERT_TRUE(r.truth_outcomes.has_value());
  EXPECT_EQ(r.caba_sessions, counts[0]);
  EXPECT_EQ(r.cabb_sessions, counts[1] + counts[2]);
  EXPECT_EQ(r.converting_sessions, counts[0] + counts[1] + counts[2]);
  EXPECT_DOUBLE_EQ(r.cabb_fraction, static_cast<double>(counts[1] + counts[2]) /
                                        static_cast<double>(counts[0] + counts[1] + counts[2]));
}

}  // namespace
}  // namespace cabb
