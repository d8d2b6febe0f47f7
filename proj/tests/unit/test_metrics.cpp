#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "rlb/error.hpp"
#include "rlb/metrics.hpp"
#include "rlb/rng.hpp"
#include "rlb/simulation.hpp"

using namespace rlb;

TEST(Fairness, Examples) {
  const std::vector<double> eq{3, 3, 3}, two{1, 2}, three{1, 2, 4}, zero{0, 0};
  EXPECT_DOUBLE_EQ(fairness(eq), 1.0);
  EXPECT_DOUBLE_EQ(fairness(two), 0.5);
  EXPECT_DOUBLE_EQ(fairness(three), 0.125);
  EXPECT_DOUBLE_EQ(fairness(zero), 1.0);
  const std::vector<double> neg{1, -1};
  EXPECT_THROW(fairness(neg), ValidationError);
}

TEST(Fairness, Properties) {
  RngStream r(1, "fair");
  for (int t = 0; t < 2000; ++t) {
    const std::size_t n = 1 + r.uniform_index(6);
    std::vector<double> l(n);
    for (auto& x : l) x = r.uniform(0.01, 5.0);
    const double f = fairness(l);
    ASSERT_GT(f, 0.0);
    ASSERT_LE(f, 1.0);
    auto p = l;
    std::shuffle(p.begin(), p.end(), r);
    ASSERT_NEAR(fairness(p), f, 1e-12 * std::max(f, 1e-300));
    auto s = l;
    const double c = r.uniform(0.1, 10.0);
    for (auto& x : s) x *= c;
    ASSERT_NEAR(fairness(s), f, 1e-12);
    const auto mx = std::max_element(l.begin(), l.end()) - l.begin();
    for (std::size_t j = 0; j < n; ++j) {
      if (static_cast<std::ptrdiff_t>(j) == mx || l[j] == l[mx]) continue;
      auto d = l;
      d[j] *= 0.9;
      ASSERT_LT(fairness(d), f);
    }
  }
}

TEST(Makespan, Examples) {
  const std::vector<double> a{1, 2, 4}, b{0, 0}, c{3};
  EXPECT_DOUBLE_EQ(makespan(a), 4.0);
  EXPECT_DOUBLE_EQ(makespan(b), 0.0);
  EXPECT_DOUBLE_EQ(makespan(c), 3.0);
  EXPECT_THROW(makespan({}), ValidationError);
}

TEST(StepReward, Examples) {
  RewardState st;
  const std::vector<double> ones{1, 1}, n1{1, 3};
  EXPECT_DOUBLE_EQ(step_reward(st, ones), 1.0);
  EXPECT_NEAR(step_reward(st, n1), 1.0 / 2.8, 1e-12);
  EXPECT_EQ(st.step, 2u);
  EXPECT_EQ(st.prev, n1);
}

TEST(StepReward, ConstantInputGivesFairnessOfInput) {
  RngStream r(2, "rew");
  RewardState st;
  std::vector<double> v{0.3, 0.7, 0.5};
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(step_reward(st, v), fairness(v), 1e-12);
  RewardState eq;
  const std::vector<double> e{2, 2, 2};
  for (int i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(step_reward(eq, e), 1.0);
}

TEST(StepReward, LengthMismatchThrows) {
  RewardState st;
  const std::vector<double> a{1, 1}, b{1, 1, 1};
  step_reward(st, a);
  EXPECT_THROW(step_reward(st, b), ValidationError);
}

TEST(Jct, Summary) {
  const JctStats s = jct_stats({1, 2, 3});
  EXPECT_DOUBLE_EQ(s.mean, 2.0);
  EXPECT_NEAR(s.std, 0.816496580927726, 1e-12);
  std::vector<double> h;
  for (int i = 1; i <= 100; ++i) h.push_back(i);
  const JctStats t = jct_stats(h);
  EXPECT_NEAR(t.p90, 90.1, 1e-12);
  EXPECT_NEAR(t.p99, 99.01, 1e-12);
  EXPECT_EQ(t.cdf.size(), kCdfPoints);
  EXPECT_DOUBLE_EQ(t.cdf.back().fraction, 1.0);
  EXPECT_DOUBLE_EQ(t.cdf.back().value, 100.0);
  for (std::size_t i = 1; i < t.cdf.size(); ++i) {
    EXPECT_GE(t.cdf[i].value, t.cdf[i - 1].value);
    EXPECT_GT(t.cdf[i].fraction, t.cdf[i - 1].fraction);
  }
  EXPECT_DOUBLE_EQ(jct_stats({4.0}).std, 0.0);
  EXPECT_THROW(jct_stats({}), ValidationError);
}

TEST(Jct, PerClass) {
  std::vector<FlowRecord> f(3);
  f[0].cls = FlowClass::Heavy;
  f[0].t_complete = 2.0;
  f[1].cls = FlowClass::Light;
  f[1].t_complete = 0.5;
  f[2].cls = FlowClass::Heavy;
  f[2].t_complete = 4.0;
  const JctSummary s = jct_summary(f);
  EXPECT_EQ(s.overall.count, 3u);
  EXPECT_EQ(s.heavy.count, 2u);
  EXPECT_DOUBLE_EQ(s.heavy.mean, 3.0);
  EXPECT_DOUBLE_EQ(s.light.mean, 0.5);
}

TEST(Prop1, Examples) {
  const std::vector<double> s11{1, 1}, s12{1, 2}, s1{3};
  const Prop1Verdict a = prop1_oracle(4, s11);
  EXPECT_TRUE(a.sufficiency_holds);
  EXPECT_DOUBLE_EQ(a.min_makespan, 2.0);
  EXPECT_DOUBLE_EQ(a.max_fairness, 1.0);
  EXPECT_EQ(a.assignments, 16u);
  const Prop1Verdict b = prop1_oracle(3, s12);
  EXPECT_TRUE(b.sufficiency_holds);
  EXPECT_FALSE(b.degenerate);
  const Prop1Verdict c = prop1_oracle(5, s1);
  EXPECT_TRUE(c.sufficiency_holds);
  EXPECT_THROW(prop1_oracle(13, s11), ValidationError);
  const std::vector<double> five{1, 1, 1, 1, 1};
  EXPECT_THROW(prop1_oracle(3, five), ValidationError);
}

TEST(Prop1, NotNecessaryWitness) {
  // (2,1,1) and (2,2,0) share makespan 2; the latter has F = 0.
  const std::vector<double> s{1, 1, 1};
  const Prop1Verdict v = prop1_oracle(4, s);
  EXPECT_TRUE(v.sufficiency_holds);
  EXPECT_TRUE(v.has_unnecessary_witness);
}
