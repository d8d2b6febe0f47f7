#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "rlb/io.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rlb");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = rlb::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("rlb_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    config_ = root_ / "short.ini";
    std::ofstream(config_) << "[scenario]\npreset = reduced\nepisode_length = 3\n"
                              "[train]\nepisodes = 2\nupdates_per_episode = 2\nhidden = 8\nsegment = 6\n";
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string path(const std::string& rel) const { return (root_ / rel).string(); }

  fs::path root_;
  fs::path config_;
};

}  // namespace

TEST_F(CliTest, SimulateWritesPerSeedDirectories) {
  const auto r = run_cli({"simulate", "--config", config_.string(), "--policy", "sed", "--seeds", "1..3",
                          "--out", path("sim")});
  ASSERT_EQ(r.code, 0) << r.err;
  for (int s = 1; s <= 3; ++s) {
    const fs::path d = root_ / "sim" / ("seed-" + std::to_string(s));
    for (const char* f : {"flows.csv", "summary.csv", "cdf.csv", "busy_workers.csv", "fairness.csv", "config.ini"})
      EXPECT_TRUE(fs::exists(d / f)) << d / f;
  }
  const auto agg = rlb::read_csv(root_ / "sim" / "aggregate.csv");
  EXPECT_EQ(agg.rows.size(), 9u);
}

TEST_F(CliTest, PersistedConfigReproducesRun) {
  ASSERT_EQ(run_cli({"simulate", "--config", config_.string(), "--policy", "lsq", "--seed", "4", "--out", path("a")}).code, 0);
  const auto cfg = (root_ / "a" / "seed-4" / "config.ini").string();
  ASSERT_EQ(run_cli({"simulate", "--config", cfg, "--out", path("b")}).code, 0);
  EXPECT_EQ(slurp(root_ / "a" / "seed-4" / "flows.csv"), slurp(root_ / "b" / "seed-4" / "flows.csv"));
}

TEST_F(CliTest, UnknownPolicyListsValidOnes) {
  const auto r = run_cli({"simulate", "--config", config_.string(), "--policy", "random", "--out", path("x")});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("sed"), std::string::npos) << r.err;
  EXPECT_NE(r.err.find("ecmp"), std::string::npos) << r.err;
}

TEST_F(CliTest, ExistingOutputNeedsForce) {
  fs::create_directories(root_ / "exists");
  EXPECT_EQ(run_cli({"simulate", "--config", config_.string(), "--out", path("exists")}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--config", config_.string(), "--out", path("exists"), "--force"}).code, 0);
}

TEST_F(CliTest, BadArgumentsAreValidationErrors) {
  EXPECT_EQ(run_cli({}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--out", path("x")}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--preset", "galaxy", "--out", path("x")}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--config", path("missing.ini"), "--out", path("x")}).code, 1);
  EXPECT_EQ(run_cli({"simulate", "--config", config_.string(), "--policy", "rl-weighted", "--out", path("x")}).code, 1);
}

TEST_F(CliTest, TrainThenResumeThenEvaluate) {
  auto r = run_cli({"train", "--config", config_.string(), "--agent", "qmix", "--out", path("t")});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(rlb::read_csv(root_ / "t" / "learning_curve.csv").rows.size(), 2u);
  const auto ck = (root_ / "t" / "checkpoint.ckpt").string();
  ASSERT_TRUE(fs::exists(ck));

  r = run_cli({"train", "--config", config_.string(), "--agent", "qmix", "--episodes", "3", "--checkpoint", ck,
               "--out", path("t2")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto curve = rlb::read_csv(root_ / "t2" / "learning_curve.csv");
  ASSERT_EQ(curve.rows.size(), 3u);
  EXPECT_EQ(curve.rows.back()[0], "2");

  EXPECT_EQ(run_cli({"train", "--config", config_.string(), "--checkpoint", path("nope.ckpt"), "--out", path("t3")})
                .code,
            1);

  r = run_cli({"evaluate", "--config", config_.string(), "--methods", "ecmp,sed,qmix", "--rates", "4,5",
               "--seeds", "1..2", "--checkpoint", "qmix=" + ck, "--out", path("e")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto table = rlb::read_csv(root_ / "e" / "comparison.csv");
  EXPECT_EQ(table.rows.size(), 3u * 2u * 3u);
  EXPECT_EQ(table.header[table.column("class")], "class");
  EXPECT_EQ(rlb::read_csv(root_ / "e" / "aggregate.csv").rows.size(), 3u * 2u * 2u * 3u);

  r = run_cli({"simulate", "--config", config_.string(), "--policy", "rl-weighted", "--checkpoint", ck, "--out",
               path("rl")});
  EXPECT_EQ(r.code, 0) << r.err;
}

TEST_F(CliTest, EvaluateNeedsMethodsAndCheckpoints) {
  EXPECT_EQ(run_cli({"evaluate", "--config", config_.string(), "--methods", "", "--out", path("e")}).code, 1);
  EXPECT_EQ(run_cli({"evaluate", "--config", config_.string(), "--out", path("e")}).code, 1);
  EXPECT_EQ(run_cli({"evaluate", "--config", config_.string(), "--methods", "sed,qmix", "--out", path("e")}).code, 1);
}

TEST_F(CliTest, BenchDecisionCoversAllPolicies) {
  const auto r = run_cli({"bench-decision", "--servers", "24", "--calls", "20000", "--out", path("bench")});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto t = rlb::read_csv(root_ / "bench" / "bench.csv");
  EXPECT_EQ(t.rows.size(), 6u);
}

TEST_F(CliTest, GenTraceRoundTrips) {
  ASSERT_EQ(run_cli({"gen-trace", "--config", config_.string(), "--seed", "2", "--out", path("trace.csv")}).code, 0);
  std::ofstream(root_ / "replay.ini") << "[scenario]\npreset = reduced\nepisode_length = 3\ntrace = "
                                      << path("trace.csv") << "\n";
  const auto a = run_cli({"simulate", "--config", config_.string(), "--seed", "2", "--out", path("gen")});
  const auto b = run_cli({"simulate", "--config", path("replay.ini"), "--seed", "2", "--out", path("rep")});
  ASSERT_EQ(a.code, 0);
  ASSERT_EQ(b.code, 0) << b.err;
  const auto fa = rlb::read_csv(root_ / "gen" / "seed-2" / "flows.csv");
  const auto fb = rlb::read_csv(root_ / "rep" / "seed-2" / "flows.csv");
  EXPECT_EQ(fa.rows.size(), fb.rows.size());
  EXPECT_EQ(fa.rows.front()[fa.column("t_arrival")], fb.rows.front()[fb.column("t_arrival")]);
}
