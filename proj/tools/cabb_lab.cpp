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

// cabb_lab: generate corpora, build similarity, train, evaluate and run the
// experiment harnesses. Any config key can be overridden with --key value.

#include <CLI11.hpp>

#include <cstdint>
#include <exception>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cabb/cli.hpp"

namespace {

using Command = std::function<void(const cabb::RunConfig&, const std::filesystem::path&,
                                   std::ostream&)>;

struct Subcommand {
  const char* name;
  const char* help;
  Command run;
};

// Turns leftover "--key value" / "--key=value" tokens into config overrides.
void apply_overrides(const std::vector<std::string>& extras, cabb::RunConfig& config) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& tok = extras[i];
    if (tok.rfind("--", 0) != 0 || tok.size() < 3) {
      throw cabb::InvalidArgument("unexpected argument '" + tok + "'");
    }
    const auto eq = tok.find('=');
    if (eq != std::string::npos) {
      config.set(tok.substr(2, eq - 2), tok.substr(eq + 1));
      continue;
    }
    if (i + 1 >= extras.size()) throw cabb::InvalidArgument("missing value for '" + tok + "'");
    config.set(tok.substr(2), extras[++i]);
  }
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Subcommand> commands = {
      {"generate", "write a synthetic corpus (events, catalog, ground truth)", cabb::cmd_generate},
      {"similarity", "build the leaf similarity matrix of a corpus", cabb::cmd_similarity},
      {"train", "train a model on the train split and write a checkpoint", cabb::cmd_train},
      {"evaluate", "score a checkpoint (overall, CABA and CABB NE)", cabb::cmd_evaluate},
      {"sweep", "lambda sweep report", cabb::cmd_sweep},
      {"schemes", "weighting-scheme comparison report", cabb::cmd_schemes},
      {"baselines", "last-click / CABA-only / multitask comparison report", cabb::cmd_baselines},
      {"importance", "permutation importance per feature and head", cabb::cmd_importance},
  };

  CLI::App app{"cabb_lab: CABA/CABB conversion attribution laboratory"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir = ".";
  bool dump_config = false;

  std::map<CLI::App*, const Subcommand*> by_app;
  for (const auto& c : commands) {
    auto* sub = app.add_subcommand(c.name, c.help);
    sub->add_option("--config", config_path, "flat key=value config file");
    sub->add_option("--seed", seed, "top-level seed (overrides the config)");
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_flag("--print-config", dump_config, "print the effective config before running");
    sub->allow_extras();
    by_app[sub] = &c;
  }

  CLI11_PARSE(app, argc, argv);

  try {
    for (auto& [sub, command] : by_app) {
      if (!sub->parsed()) continue;
      cabb::RunConfig config =
          config_path.empty() ? cabb::RunConfig{} : cabb::load_config_file(config_path);
      if (seed) config.seed = *seed;
      apply_overrides(sub->remaining(), config);
      if (dump_config) cabb::write_config(std::cerr, config);
      command->run(config, out_dir, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
