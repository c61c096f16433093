#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "segsys/cftree.hpp"
#include "segsys/metrics.hpp"

namespace segsys::segmentation {

inline constexpr std::size_t kHoursPerDay = 24;
using HourlyVector = std::array<double, kHoursPerDay>;
using Date = std::chrono::year_month_day;

// One household-day of hourly consumption (kWh).
struct LoadProfile {
    std::string meter_id;
    Date date;
    HourlyVector values{};

    // Throws invalid_argument unless every value is finite and >= 0.
    void validate() const;
};

// Hourly shares of a day's total; sums to one.
struct NormalizedProfile {
    HourlyVector shares{};
};

// Anomaly bounds are alpha1 * T and alpha2 * T for clustering threshold T.
struct AnomalyConfig {
    double alpha1 = 2.0;
    double alpha2 = 2.0;

    void validate() const;
};

// Probability that a point at distance d from its nearest cluster is an
// anomaly. Piecewise linear between T_L = alpha1*t and T_U = alpha2*t; with
// alpha1 == alpha2 it degenerates to the step 1[d >= T_U].
double anomaly_probability(double d, double t, const AnomalyConfig& cfg);

// Days (or customers) scored at or above this probability are flagged.
inline constexpr double kDefaultFlagCut = 0.5;

struct SegmentationParams {
    cftree::TreeShape shape{};
    AnomalyConfig alphas{};
    double flag_cut = kDefaultFlagCut;
    EntropyForm entropy_form = EntropyForm::as_published;
};

// ---- step 1: per-household intensity clustering ---------------------------

struct DayScore {
    std::size_t index;  // position in the input
    Date date;
    cftree::ClusterId cluster;
    double distance;
    double probability;
    bool anomalous;
};

struct IntensityCluster {
    cftree::ClusterId id;
    cftree::ClusterFeature cf;
    std::vector<std::size_t> days;  // input indices, ascending
};

struct IntensityResult {
    std::string meter_id;
    double threshold;
    std::vector<IntensityCluster> clusters;  // ordered by id
    std::vector<DayScore> days;              // one per input profile
    std::vector<HourlyVector> vectors;       // the input days, retained

    std::size_t anomaly_count() const;
};

// Streams one household's days through a fresh tree. All profiles must share
// a meter id.
IntensityResult segment_intensity(std::span<const LoadProfile> profiles, double threshold,
                                  const SegmentationParams& params = {});

// Centroid of the intensity cluster with the most non-anomalous days, computed
// over those days only. Ties go to the lowest cluster id. Throws
// unprocessable ("no_representative") when every day is anomalous.
HourlyVector representative_profile(const IntensityResult& result);

// s_h = x_h / sum(x). Throws invalid_argument for a zero-sum or negative input.
NormalizedProfile normalize_profile(std::span<const double> values);

// ---- step 2: cross-customer pattern clustering ----------------------------

struct CustomerProfile {
    std::string customer_id;
    NormalizedProfile profile;
};

enum class AnomalyStage { intensity, pattern };

struct Anomaly {
    std::string member;
    std::optional<Date> date;  // set for intensity-stage (per-day) anomalies
    double probability;
    AnomalyStage stage;
};

struct PatternCluster {
    int cluster_id;  // 1-based, creation order
    HourlyVector centroid{};
    std::vector<std::string> members;

    std::size_t size() const { return members.size(); }
};

struct RunConfig {
    std::size_t branch_factor = 6;
    std::size_t leaf_capacity = 3;
    double pattern_threshold = 0.0;
    std::optional<double> intensity_threshold;  // unset: per-household default
    AnomalyConfig alphas{};
    double flag_cut = kDefaultFlagCut;
    EntropyForm entropy_form = EntropyForm::as_published;
};

struct SegmentationResult {
    std::vector<PatternCluster> clusters;
    std::vector<Anomaly> anomalies;
    QualityMetrics metrics;
    RunConfig config;
    std::chrono::sys_seconds created_at{};
};

SegmentationResult segment_patterns(std::span<const CustomerProfile> representatives, double threshold,
                                    const SegmentationParams& params = {});

// Default threshold when none is configured: the given quantile (0.25) of all
// pairwise distances over a deterministic sample of at most `sample` vectors.
// Needs at least two vectors.
double default_threshold(std::span<const HourlyVector> vectors, std::size_t sample = 200,
                         double quantile = 0.25);

}  // namespace segsys::segmentation
