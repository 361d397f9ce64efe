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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cabb/cli.hpp"

namespace cabb {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::path(::testing::TempDir()) /
            ("cabb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  // A small generated corpus; returns a config pointing at it.
  RunConfig corpus_config(int sessions, int users) {
    RunConfig c;
    c.set("n_sessions", std::to_string(sessions));
    c.set("n_users", std::to_string(users));
    std::ostringstream log;
    cmd_generate(c, root_ / "corpus", log);
    c.set("events_path", (root_ / "corpus" / files::kEvents).string());
    c.set("catalog_path", (root_ / "corpus" / files::kCatalog).string());
    return c;
  }

  fs::path root_;
};

TEST(RunConfigTest, SetAndTypeChecks) {
  RunConfig c;
  c.set("lambda", "0.5");
  EXPECT_EQ(c.train.lambda, 0.5);
  c.set("hidden_dims", "8, 4");
  EXPECT_EQ(c.arch.hidden_dims, (std::vector<std::size_t>{8, 4}));
  c.set("lambdas", "0,0.25,0.75");
  EXPECT_EQ(c.lambdas, (std::vector<double>{0, 0.25, 0.75}));
  c.set("mode", "caba_only");
  EXPECT_EQ(c.train.mode, TrainMode::kCabaOnly);
  c.set("bounce_prob", "0.1,0.2,0.3,0.4");
  EXPECT_EQ(c.synth.bounce_prob[3], 0.4);
  EXPECT_THROW(c.set("lambda_typo", "1"), InvalidArgument);
  EXPECT_THROW(c.set("epochs", "2.5"), InvalidArgument);
  EXPECT_THROW(c.set("seed", "-1"), InvalidArgument);
  EXPECT_THROW(c.set("learning_rate", "fast"), InvalidArgument);
  EXPECT_THROW(c.set("mode", "both"), InvalidArgument);
  EXPECT_THROW(c.set("bounce_prob", "0.1,0.2"), InvalidArgument);
}

TEST(RunConfigTest, LoadFileAndRoundTrip) {
  std::istringstream in("# comment\n\nseed = 7\nlambda=0.25\nscheme=static1\n");
  RunConfig c;
  load_config(in, c);
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(c.train.lambda, 0.25);
  EXPECT_EQ(c.scheme, "static1");
  std::ostringstream out;
  write_config(out, c);
  std::istringstream back(out.str());
  RunConfig d;
  load_config(back, d);
  EXPECT_EQ(d.entries(), c.entries());
}

TEST(RunConfigTest, LoadErrorsNameTheLine) {
  auto fails = [](const std::string& text, const std::string& needle) {
    std::istringstream in(text);
    RunConfig c;
    try {
      load_config(in, c, "cfg");
      ADD_FAILURE() << "no error for " << text;
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  fails("seed=1\nbogus=2\n", "cfg:2:");
  fails("seed=1\nseed=2\n", "duplicate");
  fails("epochs\n", "key=value");
  fails("epochs=ten\n", "integer");
}

TEST(RunConfigTest, ValidateRejectsBadCombos) {
  RunConfig c;
  c.set("eval_split", "holdout");
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.set("schemes", "static1,mystery");
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = RunConfig{};
  c.set("train_fraction", "1.0");
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST_F(CliTest, GenerateWritesParseableFilesIdempotently) {
  RunConfig c;
  c.set("n_sessions", "500");
  c.set("n_users", "50");
  std::ostringstream log;
  cmd_generate(c, root_ / "a", log);
  cmd_generate(c, root_ / "b", log);
  for (auto f : {files::kEvents, files::kCatalog, files::kGroundTruth}) {
    ASSERT_TRUE(fs::exists(root_ / "a" / f));
    EXPECT_EQ(slurp(root_ / "a" / f), slurp(root_ / "b" / f)) << f;
  }
  std::ifstream ev(root_ / "a" / files::kEvents), cat(root_ / "a" / files::kCatalog);
  EXPECT_EQ(parse_corpus(ev, cat).sessions.size(), 500u);
  EXPECT_NE(log.str().find("sessions\t500"), std::string::npos);
}

TEST_F(CliTest, GenerateNoPurchaseConfig) {
  RunConfig c;
  c.set("n_sessions", "300");
  c.set("n_users", "30");
  c.set("p_caba", "0");
  c.set("p_related_cabb", "0");
  c.set("p_noise_cabb", "0");
  c.set("p_no_purchase", "1");
  std::ostringstream log;
  cmd_generate(c, root_, log);
  std::ifstream in(root_ / files::kGroundTruth);
  const auto records = parse_ground_truth(in);
  ASSERT_EQ(records.size(), 300u);
  for (const auto& r : records) EXPECT_EQ(r.outcome, Outcome::kNone);
}

TEST_F(CliTest, SimilarityOneLeaf) {
  spit(root_ / "events.tsv", "s1\tu1\tA\tclick\t1\ns1\tu1\tB\tpurchase\t2\n");
  spit(root_ / "catalog.tsv", "A\tHome/Kitchen\ta\nB\tHome/Kitchen\tb\n");
  RunConfig c;
  c.set("events_path", (root_ / "events.tsv").string());
  c.set("catalog_path", (root_ / "catalog.tsv").string());
  std::ostringstream log;
  cmd_similarity(c, root_ / "out", log);
  EXPECT_EQ(slurp(root_ / "out" / files::kSimilarity), "0\t0\t1.0\n");
  EXPECT_EQ(slurp(root_ / "out" / files::kLeaves), "0\tHome/Kitchen\n");
  EXPECT_NE(log.str().find("leaves\t1"), std::string::npos);
}

TEST_F(CliTest, SimilarityDisjointLeavesAndReload) {
  spit(root_ / "events.tsv", "s1\tu1\tA\tclick\t1\ns2\tu2\tB\tclick\t2\ns3\tu3\tC\tclick\t1\ns3\tu3\tA\tclick\t2\n");
  spit(root_ / "catalog.tsv", "A\tX\ta\nB\tY\tb\nC\tZ\tc\n");
  RunConfig c;
  c.set("events_path", (root_ / "events.tsv").string());
  c.set("catalog_path", (root_ / "catalog.tsv").string());
  std::ostringstream log;
  cmd_similarity(c, root_, log);
  const auto text = slurp(root_ / files::kSimilarity);
  EXPECT_EQ(text.find("0\t1\t"), std::string::npos);
  EXPECT_EQ(text.find("1\t2\t"), std::string::npos);
  std::istringstream in(text);
  const auto m = read_similarity(in, 3);
  std::ifstream ev(root_ / "events.tsv"), cat(root_ / "catalog.tsv");
  const auto corpus = parse_corpus(ev, cat);
  const auto fresh =
      build_similarity_matrix(build_engagement_vectors(corpus, build_taxonomy(corpus.catalog), {}).by_leaf);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) EXPECT_NEAR(m(i, j), fresh(i, j), 1e-12);
  }
  EXPECT_GT(m(0, 2), 0.0);
}

TEST_F(CliTest, ParseErrorsCarryFileAndLine) {
  spit(root_ / "events.tsv", "s1\tu1\tA\tclick\t1\ns1\tu1\tA\tview\t2\n");
  spit(root_ / "catalog.tsv", "A\tX\ta\n");
  RunConfig c;
  c.set("events_path", (root_ / "events.tsv").string());
  c.set("catalog_path", (root_ / "catalog.tsv").string());
  std::ostringstream log;
  try {
    cmd_similarity(c, root_, log);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("events:2"), std::string::npos) << e.what();
  }
  c.set("events_path", (root_ / "missing.tsv").string());
  EXPECT_ANY_THROW(cmd_similarity(c, root_, log));
}

TEST_F(CliTest, TrainThenEvaluateOnTrainSplitBeatsBaseRate) {
  auto c = corpus_config(20000, 500);
  std::ostringstream log;
  cmd_train(c, root_ / "model", log);
  ASSERT_TRUE(fs::exists(root_ / "model" / files::kCheckpoint));
  const auto history = slurp(root_ / "model" / files::kHistory);
  EXPECT_NE(history.find("epoch\tl_caba\tl_cabb\ttotal\n0\t"), std::string::npos);
  c.set("checkpoint_path", (root_ / "model" / files::kCheckpoint).string());
  c.set("eval_split", "train");
  cmd_evaluate(c, root_ / "eval", log);
  std::istringstream report(slurp(root_ / "eval" / files::kEvaluation));
  std::string line;
  while (std::getline(report, line) && line.rfind("multitask\t", 0) != 0) {
  }
  const auto fields = split(line, '\t');
  ASSERT_EQ(fields.size(), 5u) << line;
  double overall = 0;
  ASSERT_TRUE(parse_double(fields[1], overall));
  EXPECT_LT(overall, 1.0);
}

TEST_F(CliTest, EvaluateRejectsArchitectureMismatch) {
  auto c = corpus_config(1500, 100);
  c.set("epochs", "1");
  std::ostringstream log;
  cmd_train(c, root_ / "model", log);
  c.set("checkpoint_path", (root_ / "model" / files::kCheckpoint).string());
  c.set("hidden_dims", "8");
  EXPECT_THROW(cmd_evaluate(c, root_ / "eval", log), InvalidArgument);
  c.set("hidden_dims", "32,16");
  c.set("checkpoint_path", (root_ / "nope.txt").string());
  EXPECT_ANY_THROW(cmd_evaluate(c, root_ / "eval", log));
}

TEST_F(CliTest, SweepRowCount) {
  auto c = corpus_config(2000, 100);
  c.set("lambdas", "0,0.25,0.75");
  c.set("n_seeds", "1");
  c.set("epochs", "1");
  std::ostringstream log;
  cmd_sweep(c, root_, log);
  std::istringstream in(slurp(root_ / files::kSweep));
  std::string line;
  int per_seed = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] != '#' && line.ends_with("\t1")) ++per_seed;
  }
  EXPECT_EQ(per_seed, 4);
}

TEST_F(CliTest, ImportanceOfConstantModelIsZero) {
  auto c = corpus_config(1500, 100);
  std::ifstream ev(c.events_path), cat(c.catalog_path);
  const auto corpus = parse_corpus(ev, cat);
  auto params = init_params(c.arch, build_taxonomy(corpus.catalog).leaf_count(),
                            kDenseFeatureCount, 3);
  std::fill(params.caba_head.weight.begin(), params.caba_head.weight.end(), 0.0);
  std::fill(params.cabb_head.weight.begin(), params.cabb_head.weight.end(), 0.0);
  {
    std::ofstream out(root_ / "zero.txt");
    save_checkpoint(out, params);
  }
  c.set("checkpoint_path", (root_ / "zero.txt").string());
  std::ostringstream log;
  cmd_importance(c, root_ / "imp", log);
  std::istringstream in(slurp(root_ / "imp" / files::kImportance));
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#' || line.rfind("feature\t", 0) == 0) continue;
    const auto f = split(line, '\t');
    ASSERT_EQ(f.size(), 4u);
    double a = 1, b = 1;
    ASSERT_TRUE(parse_double(f[1], a));
    ASSERT_TRUE(parse_double(f[2], b));
    EXPECT_NEAR(a, 0.0, 1e-12);
    EXPECT_NEAR(b, 0.0, 1e-12);
    ++rows;
  }
  EXPECT_EQ(rows, static_cast<int>(kDenseFeatureCount + 1));
}

TEST_F(CliTest, CommandsAreIdempotent) {
  auto c = corpus_config(1500, 100);
  c.set("n_seeds", "1");
  c.set("epochs", "1");
  c.set("lambdas", "0,0.75");
  using Cmd = void (*)(const RunConfig&, const fs::path&, std::ostream&);
  const std::vector<std::pair<const char*, Cmd>> cmds = {
      {"similarity", cmd_similarity}, {"train", cmd_train},     {"sweep", cmd_sweep},
      {"schemes", cmd_schemes},       {"baselines", cmd_baselines}, {"importance", cmd_importance}};
  for (const auto& [name, cmd] : cmds) {
    std::ostringstream log_a, log_b;
    cmd(c, root_ / name / "a", log_a);
    cmd(c, root_ / name / "b", log_b);
    EXPECT_EQ(log_a.str(), log_b.str()) << name;
    for (const auto& entry : fs::directory_iterator(root_ / name / "a")) {
      const auto other = root_ / name / "b" / entry.path().filename();
      EXPECT_EQ(slurp(entry.path()), slurp(other)) << name << " " << entry.path().filename();
    }
  }
  c.set("checkpoint_path", (root_ / "train" / "a" / files::kCheckpoint).string());
  std::ostringstream log;
  cmd_evaluate(c, root_ / "eval_a", log);
  cmd_evaluate(c, root_ / "eval_b", log);
  EXPECT_EQ(slurp(root_ / "eval_a" / files::kEvaluation), slurp(root_ / "eval_b" / files::kEvaluation));
}

}  // namespace
}  // namespace cabb
