#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace segsys::segmentation {

// The published entropy carries an extra leading 1/N factor:
//   E_k = -(1/N) * sum_i p(C_i) ln p(C_i),   p(C_i) = N(C_i) / N.
// `standard` drops that factor (Shannon entropy in nats).
enum class EntropyForm { as_published, standard };

struct QualityMetrics {
    double entropy = 0.0;
    std::optional<double> size_stddev;          // undefined for k < 2
    std::optional<double> estimated_threshold;  // undefined for a zero-norm centroid
};

double metric_entropy(std::span<const std::size_t> sizes, EntropyForm form = EntropyForm::as_published);

// Sample standard deviation of the cluster sizes,
//   sqrt( sum_i (N(C_i) - mean)^2 / (k - 1) ).
// Throws undefined_metric for k < 2.
double metric_size_stddev(std::span<const std::size_t> sizes);

// A cluster as consumed by the estimated-threshold metric: its centroid and
// the raw member vectors.
struct MemberCluster {
    std::vector<double> centroid;
    std::vector<std::vector<double>> members;
};

// theta_k = (1/N) * sum_i sum_{X in C_i} ||X - C_i0|| / ||C_i0||.
// Throws undefined_metric when a centroid has zero norm.
double metric_estimated_threshold(std::span<const MemberCluster> clusters);

}  // namespace segsys::segmentation
