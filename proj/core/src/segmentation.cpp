#include "segsys/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "segsys/errors.hpp"
#include "segsys/stats.hpp"

namespace segsys::segmentation {

namespace {

[[noreturn]] void invalid(const std::string& code, const std::string& message) {
    throw Error(ErrorKind::invalid_argument, code, message);
}

double score(const cftree::InsertOutcome& outcome, double threshold, const AnomalyConfig& cfg) {
    if (outcome.first_point) return 0.0;
    return anomaly_probability(outcome.distance, threshold, cfg);
}

}  // namespace

void LoadProfile::validate() const {
    for (double v : values) {
        if (!std::isfinite(v)) invalid("non_finite_consumption", "load profile has a non-finite value");
        if (v < 0.0) invalid("negative_consumption", "load profile has a negative value");
    }
}

void AnomalyConfig::validate() const {
    if (!(alpha1 > 0.0) || !std::isfinite(alpha1) || !std::isfinite(alpha2)) {
        invalid("invalid_alpha", "alpha1 must be positive and finite");
    }
    if (alpha1 > alpha2) invalid("invalid_alpha", "alpha1 must not exceed alpha2");
}

double anomaly_probability(double d, double t, const AnomalyConfig& cfg) {
    cfg.validate();
    require(d >= 0.0, "distance must be >= 0");
    require(t > 0.0, "threshold must be > 0");
    const double lower = cfg.alpha1 * t;
    const double upper = cfg.alpha2 * t;
    if (d >= upper) return 1.0;
    if (d <= lower) return 0.0;
    return (d - lower) / (upper - lower);
}

std::size_t IntensityResult::anomaly_count() const {
    return static_cast<std::size_t>(std::count_if(days.begin(), days.end(), [](const DayScore& d) { return d.anomalous; }));
}

IntensityResult segment_intensity(std::span<const LoadProfile> profiles, double threshold,
                                  const SegmentationParams& params) {
    if (profiles.empty()) invalid("empty_input", "intensity segmentation needs at least one day");
    params.alphas.validate();
    const std::string& meter = profiles.front().meter_id;
    for (const LoadProfile& p : profiles) {
        if (p.meter_id != meter) invalid("mixed_meters", "intensity segmentation runs per household");
        p.validate();
    }

    cftree::CFTree tree(kHoursPerDay, threshold, params.shape);
    IntensityResult result{meter, threshold, {}, {}, {}};
    result.days.reserve(profiles.size());
    result.vectors.reserve(profiles.size());
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto outcome = tree.insert(profiles[i].values);
        const double prob = score(outcome, threshold, params.alphas);
        result.days.push_back(DayScore{i, profiles[i].date, outcome.leaf_cluster_id, outcome.distance, prob,
                                       prob >= params.flag_cut});
        result.vectors.push_back(profiles[i].values);
    }

    std::map<cftree::ClusterId, std::size_t> slot;
    for (auto& leaf : tree.leaf_clusters()) {
        slot[leaf.id] = result.clusters.size();
        result.clusters.push_back(IntensityCluster{leaf.id, std::move(leaf.cf), {}});
    }
    for (const DayScore& d : result.days) result.clusters[slot.at(d.cluster)].days.push_back(d.index);
    return result;
}

HourlyVector representative_profile(const IntensityResult& result) {
    const IntensityCluster* best = nullptr;
    std::size_t best_clean = 0;
    for (const IntensityCluster& c : result.clusters) {
        const auto clean = static_cast<std::size_t>(
            std::count_if(c.days.begin(), c.days.end(), [&](std::size_t i) { return !result.days[i].anomalous; }));
        if (clean > best_clean) {
            best = &c;
            best_clean = clean;
        }
    }
    if (best == nullptr) {
        throw Error(ErrorKind::unprocessable, "no_representative",
                    "every day of " + result.meter_id + " is anomalous");
    }

    std::optional<cftree::ClusterFeature> clean_cf;
    for (std::size_t i : best->days) {
        if (result.days[i].anomalous) continue;
        if (!clean_cf) {
            clean_cf.emplace(result.vectors[i]);
        } else {
            clean_cf->absorb(result.vectors[i]);
        }
    }
    const std::vector<double> c = cftree::cf_centroid(*clean_cf);
    HourlyVector out{};
    std::copy(c.begin(), c.end(), out.begin());
    return out;
}

NormalizedProfile normalize_profile(std::span<const double> values) {
    require(values.size() == kHoursPerDay, "a daily profile has 24 values");
    double total = 0.0;
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) invalid("invalid_profile", "profile values must be finite and >= 0");
        total += v;
    }
    if (!(total > 0.0)) invalid("zero_sum_profile", "cannot normalize a profile that sums to zero");
    NormalizedProfile out;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) out.shares[h] = values[h] / total;
    return out;
}

SegmentationResult segment_patterns(std::span<const CustomerProfile> representatives, double threshold,
                                    const SegmentationParams& params) {
    if (representatives.empty()) invalid("empty_input", "pattern segmentation needs at least one customer");
    params.alphas.validate();
    require(threshold > 0.0, "pattern threshold must be > 0");

    cftree::CFTree tree(kHoursPerDay, threshold, params.shape);
    SegmentationResult result;
    std::vector<cftree::ClusterId> assignment;
    assignment.reserve(representatives.size());
    for (const CustomerProfile& rep : representatives) {
        const auto outcome = tree.insert(rep.profile.shares);
        assignment.push_back(outcome.leaf_cluster_id);
        const double prob = score(outcome, threshold, params.alphas);
        if (prob >= params.flag_cut) {
            result.anomalies.push_back(Anomaly{rep.customer_id, std::nullopt, prob, AnomalyStage::pattern});
        }
    }

    std::map<cftree::ClusterId, std::size_t> slot;
    for (const auto& leaf : tree.leaf_clusters()) {
        slot[leaf.id] = result.clusters.size();
        PatternCluster cluster;
        cluster.cluster_id = static_cast<int>(result.clusters.size()) + 1;
        const auto c = cftree::cf_centroid(leaf.cf);
        std::copy(c.begin(), c.end(), cluster.centroid.begin());
        result.clusters.push_back(std::move(cluster));
    }
    std::vector<MemberCluster> metric_input(result.clusters.size());
    for (std::size_t i = 0; i < result.clusters.size(); ++i) {
        metric_input[i].centroid.assign(result.clusters[i].centroid.begin(), result.clusters[i].centroid.end());
    }
    for (std::size_t i = 0; i < representatives.size(); ++i) {
        const std::size_t k = slot.at(assignment[i]);
        result.clusters[k].members.push_back(representatives[i].customer_id);
        const auto& shares = representatives[i].profile.shares;
        metric_input[k].members.emplace_back(shares.begin(), shares.end());
    }

    std::vector<std::size_t> sizes;
    for (const auto& c : result.clusters) sizes.push_back(c.size());
    result.metrics.entropy = metric_entropy(sizes, params.entropy_form);
    if (sizes.size() >= 2) result.metrics.size_stddev = metric_size_stddev(sizes);
    try {
        result.metrics.estimated_threshold = metric_estimated_threshold(metric_input);
    } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_metric) throw;
    }

    result.config.branch_factor = params.shape.branch_factor;
    result.config.leaf_capacity = params.shape.leaf_capacity;
    result.config.pattern_threshold = threshold;
    result.config.alphas = params.alphas;
    result.config.flag_cut = params.flag_cut;
    result.config.entropy_form = params.entropy_form;
    result.created_at = std::chrono::time_point_cast<std::chrono::seconds>(std::chrono::system_clock::now());
    return result;
}

double default_threshold(std::span<const HourlyVector> vectors, std::size_t sample, double quantile) {
    require(vectors.size() >= 2, "default threshold needs at least two vectors");
    require(sample >= 2, "sample size must be >= 2");
    std::vector<const HourlyVector*> picked;
    if (vectors.size() <= sample) {
        for (const auto& v : vectors) picked.push_back(&v);
    } else {
        // Even stride over the input keeps the sample deterministic.
        for (std::size_t i = 0; i < sample; ++i) picked.push_back(&vectors[i * vectors.size() / sample]);
    }
    std::vector<double> distances;
    distances.reserve(picked.size() * (picked.size() - 1) / 2);
    for (std::size_t i = 0; i < picked.size(); ++i) {
        for (std::size_t j = i + 1; j < picked.size(); ++j) {
            distances.push_back(cftree::euclidean_distance(*picked[i], *picked[j]));
        }
    }
    // Identical inputs give a zero quantile; keep T positive so anomaly
    // bounds stay defined.
    return std::max(percentile(std::move(distances), quantile * 100.0), 1e-9);
}

}  // namespace segsys::segmentation
