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

// Item-based collaborative filtering at the leaf-category level: categories
// are embedded in user space by weighted engagement counts and compared by
// cosine. The resulting similarity is the per-example CABB weight.

#pragma once

#include <algorithm>
#include <cmath>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "cabb/common.hpp"
#include "cabb/corpus.hpp"
#include "cabb/taxonomy.hpp"

namespace cabb {

struct EventWeights {
  double w_click = 1.0;
  double w_cart = 2.0;
  double w_purchase = 4.0;
  double w_impression = 0.0;

  double of(EventType t) const {
    switch (t) {
      case EventType::kImpression: return w_impression;
      case EventType::kClick: return w_click;
      case EventType::kAddToCart: return w_cart;
      case EventType::kPurchase: return w_purchase;
    }
    return 0.0;
  }

  void validate() const {
    const double w[] = {w_click, w_cart, w_purchase, w_impression};
    bool any = false;
    for (double v : w) {
      if (!(v >= 0.0) || !std::isfinite(v)) {
        throw InvalidArgument("event weights must be finite and >= 0");
      }
      any = any || v > 0.0;
    }
    if (!any) throw InvalidArgument("at least one event weight must be > 0");
  }
};

/// Dense user indices in lexicographic user_id order.
class UserSpace {
 public:
  explicit UserSpace(const Corpus& corpus) {
    std::map<std::string, std::uint32_t> sorted;
    for (const auto& [sid, session] : corpus.sessions) {
      if (!session.empty()) sorted.emplace(session.front().user_id, 0);
    }
    ids_.reserve(sorted.size());
    for (auto& [uid, idx] : sorted) {
      idx = static_cast<std::uint32_t>(ids_.size());
      ids_.push_back(uid);
      index_.emplace(uid, idx);
    }
  }

  std::size_t size() const { return ids_.size(); }
  const std::string& id(std::uint32_t u) const { return ids_[u]; }
  std::optional<std::uint32_t> find(const std::string& user_id) const {
    const auto it = index_.find(user_id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

/// Sparse non-negative vector over users; entries sorted by user, all > 0.
struct EngagementVector {
  std::vector<std::pair<std::uint32_t, double>> entries;

  bool empty() const { return entries.empty(); }

  double at(std::uint32_t user) const {
    const auto it = std::lower_bound(
        entries.begin(), entries.end(), user,
        [](const auto& e, std::uint32_t u) { return e.first < u; });
    return it != entries.end() && it->first == user ? it->second : 0.0;
  }

  double norm() const {
    double s = 0;
    for (const auto& [u, w] : entries) s += w * w;
    return std::sqrt(s);
  }

  friend bool operator==(const EngagementVector&, const EngagementVector&) = default;
};

inline double dot(const EngagementVector& a, const EngagementVector& b) {
  double s = 0;
  auto i = a.entries.begin();
  auto j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

/// Cosine clamped to [0,1]; 0 when either side is empty.
inline double cosine(const EngagementVector& a, const EngagementVector& b) {
  if (a.empty() || b.empty()) return 0.0;
  const double denom = a.norm() * b.norm();
  if (!(denom > 0.0)) return 0.0;
  return std::clamp(dot(a, b) / denom, 0.0, 1.0);
}

namespace detail {

// Accumulates weighted counts per (key, user) and freezes them into sorted
// sparse vectors.
template <class Key>
class EngagementAccumulator {
 public:
  void add(const Key& key, std::uint32_t user, double w) {
    if (w > 0.0) cells_[key][user] += w;
  }

  EngagementVector freeze(const Key& key) const {
    EngagementVector v;
    const auto it = cells_.find(key);
    if (it == cells_.end()) return v;
    v.entries.assign(it->second.begin(), it->second.end());
    return v;
  }

  const std::map<Key, std::map<std::uint32_t, double>>& cells() const { return cells_; }

 private:
  std::map<Key, std::map<std::uint32_t, double>> cells_;
};

}  // namespace detail

struct LeafEngagement {
  UserSpace users;
  std::vector<EngagementVector> by_leaf;  // indexed by LeafId

  double weight(LeafId leaf, const std::string& user_id) const {
    const auto u = users.find(user_id);
    return u ? by_leaf.at(leaf).at(*u) : 0.0;
  }
};

struct ItemEngagement {
  UserSpace users;
  std::map<std::string, EngagementVector> by_product;  // engaged products only

  const EngagementVector* find(const std::string& product_id) const {
    const auto it = by_product.find(product_id);
    return it == by_product.end() ? nullptr : &it->second;
  }
};

/// Per leaf c and user u: sum over u's events on products in c of the event
/// type's weight.
inline LeafEngagement build_engagement_vectors(const Corpus& corpus,
                                               const Taxonomy& taxonomy,
                                               const EventWeights& weights) {
  weights.validate();
  LeafEngagement out{UserSpace(corpus), {}};
  detail::EngagementAccumulator<LeafId> acc;
  for (const auto& [sid, session] : corpus.sessions) {
    for (const auto& ev : session) {
      acc.add(taxonomy.leaf_of(ev.product_id), *out.users.find(ev.user_id),
              weights.of(ev.type));
    }
  }
  out.by_leaf.resize(taxonomy.leaf_count());
  for (LeafId l = 0; l < taxonomy.leaf_count(); ++l) out.by_leaf[l] = acc.freeze(l);
  return out;
}

/// Same accumulation keyed by product instead of leaf.
inline ItemEngagement build_item_vectors(const Corpus& corpus, const EventWeights& weights) {
  weights.validate();
  ItemEngagement out{UserSpace(corpus), {}};
  detail::EngagementAccumulator<std::string> acc;
  for (const auto& [sid, session] : corpus.sessions) {
    for (const auto& ev : session) {
      acc.add(ev.product_id, *out.users.find(ev.user_id), weights.of(ev.type));
    }
  }
  for (const auto& [pid, cells] : acc.cells()) out.by_product.emplace(pid, acc.freeze(pid));
  return out;
}

/// Symmetric leaf-by-leaf table stored as the packed upper triangle
/// (diagonal included); (i, j) and (j, i) read the same cell.
class SimilarityMatrix {
 public:
  SimilarityMatrix() = default;
  explicit SimilarityMatrix(std::size_t leaf_count)
      : n_(leaf_count), cells_(leaf_count * (leaf_count + 1) / 2, 0.0) {
    for (std::size_t i = 0; i < n_; ++i) cells_[index(i, i)] = 1.0;
  }

  std::size_t leaf_count() const { return n_; }

  double operator()(std::size_t i, std::size_t j) const { return cells_.at(index(i, j)); }

  void set(std::size_t i, std::size_t j, double v) { cells_.at(index(i, j)) = v; }

  std::size_t nonzero_pairs() const {
    return static_cast<std::size_t>(
        std::count_if(cells_.begin(), cells_.end(), [](double v) { return v != 0.0; }));
  }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_) throw LookupError("similarity: leaf index out of range");
    if (i > j) std::swap(i, j);
    // Row i of the upper triangle starts after rows 0..i-1 of lengths n, n-1, ...
    return i * n_ - i * (i - 1) / 2 + (j - i);
  }

  std::size_t n_ = 0;
  std::vector<double> cells_;
};

/// Off-diagonal cells are the cosine of the two leaf vectors; the diagonal is
/// 1 for every leaf, including leaves nobody engaged with.
inline SimilarityMatrix build_similarity_matrix(const std::vector<EngagementVector>& vectors) {
  SimilarityMatrix m(vectors.size());
  std::vector<double> norms(vectors.size());
  for (std::size_t i = 0; i < vectors.size(); ++i) norms[i] = vectors[i].norm();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    for (std::size_t j = i + 1; j < vectors.size(); ++j) {
      const double denom = norms[i] * norms[j];
      const double s =
          denom > 0.0 ? std::clamp(dot(vectors[i], vectors[j]) / denom, 0.0, 1.0) : 0.0;
      m.set(i, j, s);
    }
  }
  return m;
}

inline void write_similarity(std::ostream& out, const SimilarityMatrix& m) {
  for (std::size_t i = 0; i < m.leaf_count(); ++i) {
    for (std::size_t j = i; j < m.leaf_count(); ++j) {
      const double v = m(i, j);
      if (v != 0.0) out << i << '\t' << j << '\t' << format_precise(v) << '\n';
    }
  }
}

/// Reads a dump written by write_similarity. Missing pairs are 0.
inline SimilarityMatrix read_similarity(std::istream& in, std::size_t leaf_count) {
  SimilarityMatrix m(leaf_count);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto where = "similarity:" + std::to_string(line_no) + ": ";
    const auto f = split(line, '\t');
    std::size_t i = 0, j = 0;
    double v = 0;
    if (f.size() != 3 || !parse_int(f[0], i) || !parse_int(f[1], j) || !parse_double(f[2], v)) {
      throw ParseError(where + "expected leaf_i<TAB>leaf_j<TAB>score");
    }
    if (i > j || j >= leaf_count) throw ParseError(where + "bad leaf pair");
    if (!(v >= 0.0 && v <= 1.0)) throw ParseError(where + "score outside [0,1]");
    m.set(i, j, v);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Weighting schemes

/// Every CABB pair gets weight 1.
struct Static1 {};

/// Cosine between product-level engagement vectors.
struct ItemI2I {
  std::shared_ptr<const ItemEngagement> items;
};

/// Similarity of the two products' leaf categories.
struct TaxonomyCF {
  std::shared_ptr<const Taxonomy> taxonomy;
  std::shared_ptr<const SimilarityMatrix> similarity;
};

using WeightingScheme = std::variant<Static1, ItemI2I, TaxonomyCF>;

inline std::string scheme_name(const WeightingScheme& s) {
  switch (s.index()) {
    case 0: return "static1";
    case 1: return "item_i2i";
    default: return "taxonomy_cf";
  }
}

inline double alpha(const WeightingScheme& scheme, const std::string& product_a,
                    const std::string& product_b) {
  struct Visitor {
    const std::string& a;
    const std::string& b;
    double operator()(const Static1&) const { return 1.0; }
    double operator()(const ItemI2I& s) const {
      const auto* va = s.items->find(a);
      const auto* vb = s.items->find(b);
      return va != nullptr && vb != nullptr ? cosine(*va, *vb) : 0.0;
    }
    double operator()(const TaxonomyCF& s) const {
      return (*s.similarity)(s.taxonomy->leaf_of(a), s.taxonomy->leaf_of(b));
    }
  };
  return std::visit(Visitor{product_a, product_b}, scheme);
}

inline WeightingScheme make_item_i2i(const Corpus& corpus, const EventWeights& weights) {
  return ItemI2I{std::make_shared<const ItemEngagement>(build_item_vectors(corpus, weights))};
}

inline WeightingScheme make_taxonomy_cf(const Corpus& corpus,
                                        std::shared_ptr<const Taxonomy> taxonomy,
                                        const EventWeights& weights) {
  const auto vectors = build_engagement_vectors(corpus, *taxonomy, weights);
  auto matrix = std::make_shared<const SimilarityMatrix>(build_similarity_matrix(vectors.by_leaf));
  return TaxonomyCF{std::move(taxonomy), std::move(matrix)};
}

}  // namespace cabb
