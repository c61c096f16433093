#include "segsys/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "segsys/errors.hpp"

namespace segsys {

double percentile(std::vector<double> values, double p) {
    require(!values.empty(), "percentile of an empty sample");
    require(p >= 0.0 && p <= 100.0, "percentile rank must be in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

double mean(std::span<const double> values) {
    require(!values.empty(), "mean of an empty sample");
    return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

}  // namespace segsys
