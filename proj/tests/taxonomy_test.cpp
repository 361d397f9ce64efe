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

#include <set>
#include <sstream>

#include "cabb/taxonomy.hpp"

namespace cabb {
namespace {

Catalog catalog_of(std::initializer_list<std::pair<const char*, const char*>> rows) {
  Catalog c;
  for (const auto& [id, path] : rows) c.emplace(id, CatalogEntry{id, path, "adv"});
  return c;
}

TEST(Taxonomy, DistinctPathsGetDistinctLeaves) {
  const auto t = build_taxonomy(
      catalog_of({{"A", "Home/Kitchen/CoffeeMakers"}, {"B", "Grocery/Beverages/CoffeeBeans"}}));
  EXPECT_EQ(t.leaf_count(), 2u);
  EXPECT_NE(t.leaf_of("A"), t.leaf_of("B"));
  // Ids follow sorted path order.
  EXPECT_EQ(t.leaf_of("B"), 0u);
  EXPECT_EQ(t.path_of(t.leaf_of("A")), "Home/Kitchen/CoffeeMakers");
  const auto seg = t.segments_of(t.leaf_of("A"));
  ASSERT_EQ(seg.size(), 3u);
  EXPECT_EQ(seg[2], "CoffeeMakers");
}

TEST(Taxonomy, SharedPathPools) {
  const auto t = build_taxonomy(catalog_of({{"A", "Home/Kitchen"}, {"B", "Home/Kitchen"}}));
  EXPECT_EQ(t.leaf_count(), 1u);
  EXPECT_EQ(t.leaf_of("A"), t.leaf_of("B"));
}

TEST(Taxonomy, OneLeafPerDistinctPath) {
  Catalog c;
  for (int i = 0; i < 30; ++i) {
    const auto id = "p" + std::to_string(i);
    c.emplace(id, CatalogEntry{id, "Dept/C" + std::to_string(29 - i), "adv"});
  }
  const auto t = build_taxonomy(c);
  EXPECT_EQ(t.leaf_count(), 30u);
  std::set<LeafId> ids;
  for (const auto& [id, e] : c) ids.insert(t.leaf_of(id));
  EXPECT_EQ(ids.size(), 30u);
  EXPECT_EQ(*ids.rbegin(), 29u);
  for (LeafId l = 1; l < t.leaf_count(); ++l) EXPECT_LT(t.path_of(l - 1), t.path_of(l));
}

TEST(Taxonomy, LookupErrors) {
  const auto t = build_taxonomy(catalog_of({{"A", "Home"}}));
  EXPECT_THROW(t.leaf_of("missing"), LookupError);
  EXPECT_THROW(t.path_of(1), LookupError);
  EXPECT_TRUE(t.contains("A"));
  EXPECT_FALSE(t.contains("missing"));
}

TEST(Taxonomy, EmptyCatalogRejected) {
  EXPECT_THROW(build_taxonomy(Catalog{}), InvalidArgument);
}

TEST(Taxonomy, DeterministicDump) {
  const auto c = catalog_of({{"x", "B/B"}, {"y", "A/Z"}, {"z", "A/B"}, {"w", "A/B"}});
  std::ostringstream a, b;
  write_taxonomy(a, build_taxonomy(c));
  write_taxonomy(b, build_taxonomy(c));
  EXPECT_EQ(a.str(), b.str());
  EXPECT_EQ(a.str(), "0\tA/B\n1\tA/Z\n2\tB/B\n");
}

}  // namespace
}  // namespace cabb
