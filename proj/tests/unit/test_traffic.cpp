#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rlb/error.hpp"
#include "rlb/traffic.hpp"

using namespace rlb;

namespace {

// Two-sided KS statistic of the sample against Exponential(mean).
double ks_exponential(std::vector<double> x, double mean) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = 1.0 - std::exp(-x[i] / mean);
    d = std::max({d, f - i / n, (i + 1) / n - f});
  }
  return d;
}

}  // namespace

TEST(Traffic, ArrivalCountWithinPoissonBound) {
  TrafficModel m{400.0, ExponentialWorkload{0.2}, 30.0};
  const double mu = 400.0 * 30.0, band = 4.0 * std::sqrt(mu);
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Trace t = generate_trace(m, RngStream(s, "traffic"));
    const double n = static_cast<double>(t.entries.size());
    EXPECT_GE(n, mu - band) << "seed " << s;
    EXPECT_LE(n, mu + band) << "seed " << s;
  }
}

TEST(Traffic, ExponentialWorkloadMean) {
  TrafficModel m{4000.0, ExponentialWorkload{0.2}, 30.0};
  const Trace t = generate_trace(m, RngStream(11, "traffic"));
  ASSERT_GE(t.entries.size(), 100000u);
  double s = 0;
  for (const auto& e : t.entries) s += e.workload;
  EXPECT_NEAR(s / t.entries.size(), 0.2, 0.2 * 0.03);
}

TEST(Traffic, ZeroDurationIsEmpty) {
  TrafficModel m{10.0, ExponentialWorkload{0.2}, 0.0};
  EXPECT_TRUE(generate_trace(m, RngStream(1, "t")).entries.empty());
}

TEST(Traffic, SortedPositiveAndTruncated) {
  TrafficModel m{50.0, TwoClassWorkload{}, 20.0};
  const Trace t = generate_trace(m, RngStream(2, "t"));
  for (std::size_t i = 0; i < t.entries.size(); ++i) {
    ASSERT_GT(t.entries[i].workload, 0.0);
    ASSERT_LT(t.entries[i].arrival_time, 20.0);
    if (i) ASSERT_LE(t.entries[i - 1].arrival_time, t.entries[i].arrival_time);
  }
}

TEST(Traffic, GapsPassKsForMostSeeds) {
  const double lambda = 50.0;
  TrafficModel m{lambda, ExponentialWorkload{0.2}, 20.0};
  int pass = 0;
  for (std::uint64_t s = 0; s < 100; ++s) {
    const Trace t = generate_trace(m, RngStream(s, "ks"));
    std::vector<double> gaps;
    double prev = 0.0;
    for (const auto& e : t.entries) {
      gaps.push_back(e.arrival_time - prev);
      prev = e.arrival_time;
    }
    const double crit = 1.63 / std::sqrt(static_cast<double>(gaps.size()));  // alpha = 0.01
    pass += ks_exponential(gaps, 1.0 / lambda) < crit;
  }
  EXPECT_GE(pass, 95);
}

TEST(Traffic, TwoClassMix) {
  TrafficModel m{2000.0, TwoClassWorkload{0.3, 0.4, 0.02}, 50.0};
  const Trace t = generate_trace(m, RngStream(4, "mix"));
  double heavy = 0, wh = 0, wl = 0;
  for (const auto& e : t.entries) {
    if (e.cls == FlowClass::Heavy) {
      ++heavy;
      wh += e.workload;
    } else {
      wl += e.workload;
    }
  }
  const double n = static_cast<double>(t.entries.size());
  EXPECT_NEAR(heavy / n, 0.3, 0.01);
  EXPECT_NEAR(wh / heavy, 0.4, 0.4 * 0.03);
  EXPECT_NEAR(wl / (n - heavy), 0.02, 0.02 * 0.03);
  EXPECT_NEAR(m.mean_workload(), 0.3 * 0.4 + 0.7 * 0.02, 1e-15);
}

TEST(Traffic, ModelValidation) {
  EXPECT_THROW((TrafficModel{0.0, ExponentialWorkload{0.2}, 1.0}.validate()), ValidationError);
  EXPECT_THROW((TrafficModel{1.0, ExponentialWorkload{-1.0}, 1.0}.validate()), ValidationError);
  EXPECT_THROW((TrafficModel{1.0, TwoClassWorkload{1.5, 0.4, 0.02}, 1.0}.validate()), ValidationError);
}

TEST(TraceFile, ParsesTwoRows) {
  std::istringstream in("arrival_time,workload,class\n0.00,1.0,H\n0.10,0.5,L\n");
  const Trace t = parse_trace(in);
  ASSERT_EQ(t.entries.size(), 2u);
  EXPECT_EQ(t.entries[1].cls, FlowClass::Light);
  EXPECT_DOUBLE_EQ(t.entries[1].workload, 0.5);
}

TEST(TraceFile, RejectsNegativeWorkload) {
  std::istringstream in("arrival_time,workload,class\n0.00,-1,H\n");
  EXPECT_THROW(parse_trace(in), ValidationError);
}

TEST(TraceFile, UnsortedErrorNamesLine) {
  std::istringstream in("arrival_time,workload,class\n0.5,1,H\n0.7,1,H\n0.2,1,L\n");
  try {
    parse_trace(in);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
  }
}

TEST(TraceFile, RoundTrip) {
  TrafficModel m{30.0, TwoClassWorkload{}, 5.0};
  const Trace t = generate_trace(m, RngStream(8, "rt"));
  std::stringstream ss;
  write_trace(t, ss);
  const Trace back = parse_trace(ss);
  EXPECT_EQ(back.entries, t.entries);
}

TEST(Dispatch, SingleLbAlwaysZero) {
  RngStream r(1, "d");
  for (int i = 0; i < 100; ++i) EXPECT_EQ(dispatch_to_lb(1, r), 0u);
}

TEST(Dispatch, TwoLbsSplitEvenly) {
  RngStream r(1, "d");
  int first = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) first += dispatch_to_lb(2, r) == 0;
  EXPECT_NEAR(first / static_cast<double>(n), 0.5, 0.01);
}
