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


// Generates a small corpus, trains the two-head model with taxonomy weights
// and prints its test-split NE.

#include <iostream>
#include <memory>

#include "cabb/eval.hpp"

int main() {
  cabb::SynthConfig synth;
  synth.n_users = 500;
  synth.n_sessions = 20000;
  synth.n_products = 400;
  synth.n_categories = 20;
  auto corpus = std::make_shared<const cabb::Corpus>(cabb::generate_synthetic(synth).first);
  const auto stats = cabb::corpus_stats(*corpus);
  std::cout << "sessions " << stats.sessions << ", CABB share of conversions "
            << stats.cabb_fraction << '\n';

  const auto data = cabb::prepare_experiment(corpus);
  const auto scheme = data.scheme("taxonomy_cf", cabb::EventWeights{});
  const auto split = cabb::split_by_session(data.weighted(scheme), /*seed=*/1);

  cabb::TrainConfig config;  // multitask, lambda 0.75
  const auto model = cabb::train(split.train, config, cabb::Architecture{},
                                 data.taxonomy->leaf_count());
  const auto ne = cabb::task_ne_breakdown(model.params, split.test);
  std::cout << "test NE: overall " << *ne.overall << ", caba " << *ne.caba << ", cabb "
            << *ne.cabb << '\n';
}
