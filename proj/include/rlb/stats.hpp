#pragma once

#include <span>
#include <vector>

namespace rlb {

// Linear-interpolation percentile on the sorted sample (h = (n-1) q), q in [0, 1].
// Empty input yields 0.
double percentile(std::vector<double> values, double q);
double percentile_sorted(std::span<const double> sorted, double q);

double mean(std::span<const double> values);
// Population standard deviation.
double stddev(std::span<const double> values);

}  // namespace rlb
