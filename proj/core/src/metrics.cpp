#include "segsys/metrics.hpp"

#include <cmath>
#include <cstdint>
#include <numeric>

#include "segsys/errors.hpp"

namespace segsys::segmentation {

namespace {

[[noreturn]] void undefined(const std::string& message) {
    throw Error(ErrorKind::undefined_metric, "undefined_metric", message);
}

double norm(std::span<const double> v) { return std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)); }

}  // namespace

double metric_entropy(std::span<const std::size_t> sizes, EntropyForm form) {
    const std::size_t total = std::accumulate(sizes.begin(), sizes.end(), std::size_t{0});
    if (sizes.empty() || total == 0) undefined("entropy of an empty clustering");
    const double n = static_cast<double>(total);
    double sum = 0.0;
    for (std::size_t size : sizes) {
        if (size == 0) continue;
        const double p = static_cast<double>(size) / n;
        sum += p * std::log(p);
    }
    return form == EntropyForm::as_published ? -sum / n : -sum;
}

double metric_size_stddev(std::span<const std::size_t> sizes) {
    if (sizes.size() < 2) undefined("size standard deviation needs at least two clusters");
    // sum (s - mean)^2 = (k * sum s^2 - (sum s)^2) / k, evaluated in integers
    // so the result does not depend on cluster order.
    std::uint64_t sum = 0;
    std::uint64_t sum_sq = 0;
    for (std::size_t s : sizes) {
        sum += s;
        sum_sq += static_cast<std::uint64_t>(s) * s;
    }
    const auto k = static_cast<std::uint64_t>(sizes.size());
    const std::uint64_t numerator = k * sum_sq - sum * sum;
    const double kd = static_cast<double>(sizes.size());
    return std::sqrt(static_cast<double>(numerator) / (kd * (kd - 1.0)));
}

double metric_estimated_threshold(std::span<const MemberCluster> clusters) {
    std::size_t total = 0;
    double acc = 0.0;
    for (const MemberCluster& c : clusters) {
        const double c_norm = norm(c.centroid);
        if (c_norm == 0.0) undefined("estimated threshold with a zero-norm centroid");
        double spread = 0.0;
        for (const auto& x : c.members) {
            require(x.size() == c.centroid.size(), "member dimension differs from centroid");
            double d2 = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double d = x[i] - c.centroid[i];
                d2 += d * d;
            }
            spread += std::sqrt(d2);
        }
        acc += spread / c_norm;
        total += c.members.size();
    }
    if (total == 0) undefined("estimated threshold of an empty clustering");
    return acc / static_cast<double>(total);
}

}  // namespace segsys::segmentation
