#include <gtest/gtest.h>

#include <set>

#include "rlb/error.hpp"
#include "rlb/event_queue.hpp"
#include "rlb/rng.hpp"
#include "rlb/stats.hpp"

using namespace rlb;

TEST(RngStream, SameSeedAndLabelReproduce) {
  RngStream a(42, "arrivals"), b(42, "arrivals");
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(RngStream, DistinctLabelsDiverge) {
  RngStream a(42, "arrivals"), b(42, "workloads");
  int same = 0;
  for (int i = 0; i < 1000; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(RngStream, DistinctLabelsUncorrelated) {
  RngStream a(7, "policy"), b(7, "agent-0-explore");
  std::vector<double> x, y;
  for (int i = 0; i < 20000; ++i) {
    x.push_back(a.uniform());
    y.push_back(b.uniform());
  }
  const double mx = mean(x), my = mean(y);
  double cov = 0;
  for (std::size_t i = 0; i < x.size(); ++i) cov += (x[i] - mx) * (y[i] - my);
  cov /= static_cast<double>(x.size());
  const double corr = cov / (stddev(x) * stddev(y));
  EXPECT_LT(std::abs(corr), 0.03);
}

TEST(RngStream, DeriveIsLabelled) {
  RngStream root(3, "train");
  RngStream c1 = root.derive("1"), c1b = root.derive("1"), c2 = root.derive("2");
  EXPECT_EQ(c1.id(), "train/1");
  EXPECT_EQ(c1.next_u64(), c1b.next_u64());
  EXPECT_NE(RngStream(3, "train/1").next_u64(), c2.next_u64());
}

TEST(RngStream, UniformRangeAndIndex) {
  RngStream r(1, "u");
  std::vector<int> hits(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const auto k = r.uniform_index(5);
    ASSERT_LT(k, 5u);
    ++hits[k];
  }
  for (int h : hits) EXPECT_NEAR(h / 50000.0, 0.2, 0.01);
}

TEST(RngStream, ExponentialMean) {
  RngStream r(9, "exp");
  double s = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) s += r.exponential(0.2);
  EXPECT_NEAR(s / n, 0.2, 0.2 * 0.01);
}

TEST(EventQueue, TieBreakBySchedulingOrder) {
  EventQueue q;
  Event a{1.0, EventKind::FlowArrival, 1};
  Event b{1.0, EventKind::FlowArrival, 2};
  q.schedule(a);
  q.schedule(b);
  EXPECT_EQ(q.pop().entity, 1u);
  EXPECT_EQ(q.pop().entity, 2u);
}

TEST(EventQueue, OrdersByTime) {
  EventQueue q;
  q.schedule({2.0, EventKind::ControlStep, 0});
  q.schedule({1.0, EventKind::FlowArrival, 0});
  const Event e = q.pop();
  EXPECT_DOUBLE_EQ(e.time, 1.0);
  EXPECT_DOUBLE_EQ(q.now(), 1.0);
}

TEST(EventQueue, RejectsPast) {
  EventQueue q;
  q.schedule({1.0, EventKind::FlowArrival, 0});
  q.pop();
  EXPECT_THROW(q.schedule({0.5, EventKind::FlowArrival, 0}), CausalityError);
  EXPECT_NO_THROW(q.schedule({1.0, EventKind::FlowArrival, 0}));
}

TEST(EventQueue, ClockNeverDecreasesUnderRandomLoad) {
  EventQueue q;
  RngStream r(5, "events");
  for (int i = 0; i < 200; ++i) q.schedule({r.uniform(0, 10), EventKind::FlowArrival, 0});
  double last = 0.0;
  std::uint64_t last_seq = 0;
  int popped = 0;
  while (!q.empty()) {
    const Event e = q.pop();
    ASSERT_GE(e.time, last);
    if (e.time == last && popped > 0) ASSERT_GT(e.seq, last_seq);
    last = e.time;
    last_seq = e.seq;
    if (popped++ < 300) q.schedule({last + r.uniform(0, 1), EventKind::FlowCompletion, 0});
  }
}

TEST(Stats, PercentileInterpolates) {
  std::vector<double> v;
  for (int i = 1; i <= 10; ++i) v.push_back(i);
  EXPECT_NEAR(percentile(v, 0.9), 9.1, 1e-12);
  v.clear();
  for (int i = 1; i <= 100; ++i) v.push_back(i);
  EXPECT_NEAR(percentile(v, 0.9), 90.1, 1e-12);
  EXPECT_EQ(percentile({}, 0.5), 0.0);
  EXPECT_EQ(percentile({4.0}, 0.99), 4.0);
}

TEST(Stats, PopulationStd) {
  std::vector<double> v{1, 2, 3};
  EXPECT_DOUBLE_EQ(mean(v), 2.0);
  EXPECT_NEAR(stddev(v), 0.816496580927726, 1e-12);
}
