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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

#include "cabb/common.hpp"

namespace cabb {

inline constexpr double kProbabilityClamp = 1e-7;

inline double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

struct NEResult {
  double ne = 0;
  std::size_t n = 0;
  double base_rate = 0;
};

/// Normalized Entropy: mean log loss of `predictions` divided by the entropy
/// of always predicting the label base rate. 1 means no better than the base
/// rate, 0 is a perfect predictor. The ratio does not depend on `log_base`.
inline NEResult normalized_entropy(std::span<const double> labels,
                                   std::span<const double> predictions,
                                   double log_base = std::numbers::e) {
  if (labels.size() != predictions.size()) {
    throw InvalidArgument("normalized_entropy: labels and predictions differ in length");
  }
  if (labels.empty()) throw InvalidArgument("normalized_entropy: empty input");
  const double ln_base = std::log(log_base);
  double positives = 0, loss = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = labels[i];
    const double q = clamp_probability(predictions[i]);
    positives += y;
    loss -= (y * std::log(q) + (1.0 - y) * std::log(1.0 - q)) / ln_base;
  }
  const double n = static_cast<double>(labels.size());
  const double p = positives / n;
  if (!(p > 0.0 && p < 1.0)) {
    throw DegenerateLabels("normalized_entropy: base rate is " + format_double(p));
  }
  const double entropy = -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p)) / ln_base;
  return {(loss / n) / entropy, labels.size(), p};
}

}  // namespace cabb
