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


// Small builders shared by the unit tests.

#pragma once

#include <sstream>
#include <string>

#include "cabb/corpus.hpp"

namespace cabb::testing {

// Rows are "session user product type ts" separated by ';', fields by spaces.
inline Corpus corpus_from(const std::string& events, const std::string& catalog) {
  auto tsv = [](const std::string& text) {
    std::string out;
    for (char c : text) out += c == ' ' ? '\t' : (c == ';' ? '\n' : c);
    return out;
  };
  std::istringstream ev(tsv(events)), cat(tsv(catalog));
  return parse_corpus(ev, cat);
}

inline std::string events_text(const Corpus& c) {
  std::ostringstream out;
  write_events(out, c);
  return out.str();
}

}  // namespace cabb::testing
