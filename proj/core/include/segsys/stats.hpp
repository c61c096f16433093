#pragma once

#include <span>
#include <vector>

namespace segsys {

// Percentile with linear interpolation between order statistics:
// position p/100 * (n - 1) in the sorted sample. p in [0, 100].
double percentile(std::vector<double> values, double p);

double mean(std::span<const double> values);

}  // namespace segsys
