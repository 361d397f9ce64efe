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

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "cabb/common.hpp"
#include "cabb/corpus.hpp"

namespace cabb {

using LeafId = std::uint32_t;

/// Flat product taxonomy: one leaf per distinct full category path. Leaf ids
/// are dense and follow the lexicographic order of the paths.
class Taxonomy {
 public:
  std::size_t leaf_count() const { return paths_.size(); }

  LeafId leaf_of(const std::string& product_id) const {
    const auto it = leaf_of_.find(product_id);
    if (it == leaf_of_.end()) {
      throw LookupError("taxonomy: unknown product '" + product_id + "'");
    }
    return it->second;
  }

  bool contains(const std::string& product_id) const {
    return leaf_of_.contains(product_id);
  }

  const std::string& path_of(LeafId leaf) const {
    if (leaf >= paths_.size()) {
      throw LookupError("taxonomy: leaf id " + std::to_string(leaf) + " out of range");
    }
    return paths_[leaf];
  }

  std::vector<std::string_view> segments_of(LeafId leaf) const {
    return split(path_of(leaf), '/');
  }

  const std::unordered_map<std::string, LeafId>& products() const { return leaf_of_; }

  friend Taxonomy build_taxonomy(const Catalog& catalog);

 private:
  std::vector<std::string> paths_;
  std::unordered_map<std::string, LeafId> leaf_of_;
};

inline Taxonomy build_taxonomy(const Catalog& catalog) {
  if (catalog.empty()) throw InvalidArgument("build_taxonomy: empty catalog");
  std::map<std::string, LeafId> ids;
  for (const auto& [pid, entry] : catalog) {
    if (!valid_category_path(entry.category_path)) {
      throw InvalidArgument("build_taxonomy: bad category path '" + entry.category_path + "'");
    }
    ids.emplace(entry.category_path, 0);
  }
  Taxonomy t;
  t.paths_.reserve(ids.size());
  for (auto& [path, id] : ids) {
    id = static_cast<LeafId>(t.paths_.size());
    t.paths_.push_back(path);
  }
  t.leaf_of_.reserve(catalog.size());
  for (const auto& [pid, entry] : catalog) {
    t.leaf_of_.emplace(pid, ids.at(entry.category_path));
  }
  return t;
}

inline void write_taxonomy(std::ostream& out, const Taxonomy& t) {
  for (LeafId l = 0; l < t.leaf_count(); ++l) out << l << '\t' << t.path_of(l) << '\n';
}

}  // namespace cabb
