#include "segsys/segmentation.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "segsys/errors.hpp"

namespace segsys::segmentation {
namespace {

using std::chrono::day;
using std::chrono::month;
using std::chrono::year;

Date nth_day(int i) {
    return Date{std::chrono::sys_days{year{2024} / 1 / 1} + std::chrono::days{i}};
}

HourlyVector constant(double v) {
    HourlyVector out;
    out.fill(v);
    return out;
}

LoadProfile day_profile(const std::string& meter, int i, HourlyVector values) {
    return LoadProfile{meter, nth_day(i), values};
}

HourlyVector noisy(const HourlyVector& base, double sigma, std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, sigma);
    HourlyVector out = base;
    for (double& v : out) v = std::max(0.0, v + n(rng));
    return out;
}

// ---- anomaly probability ---------------------------------------------------

TEST(AnomalyProbabilityTest, LowerBoundaryIsZero) {
    EXPECT_DOUBLE_EQ(anomaly_probability(1.5, 1.5, AnomalyConfig{1.0, 3.0}), 0.0);
}

TEST(AnomalyProbabilityTest, LinearBranchMidpoint) {
    // T_L = 1, T_U = 3, d = 2 -> (2 - 1) / (3 - 1)
    EXPECT_DOUBLE_EQ(anomaly_probability(2.0, 1.0, AnomalyConfig{1.0, 3.0}), 0.5);
}

TEST(AnomalyProbabilityTest, EqualAlphasGiveAStep) {
    const AnomalyConfig cfg{2.0, 2.0};
    EXPECT_DOUBLE_EQ(anomaly_probability(1.9, 1.0, cfg), 0.0);
    EXPECT_DOUBLE_EQ(anomaly_probability(2.0, 1.0, cfg), 1.0);
}

TEST(AnomalyProbabilityTest, RejectsInvertedAlphas) {
    try {
        (void)anomaly_probability(1.0, 1.0, AnomalyConfig{3.0, 1.0});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::invalid_argument);
    }
    EXPECT_THROW((void)anomaly_probability(1.0, 1.0, AnomalyConfig{0.0, 1.0}), Error);
    EXPECT_THROW((void)anomaly_probability(-1.0, 1.0, AnomalyConfig{}), Error);
    EXPECT_THROW((void)anomaly_probability(1.0, 0.0, AnomalyConfig{}), Error);
}

TEST(AnomalyProbabilityTest, MonotoneBoundedAndContinuous) {
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.1, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double a1 = u(rng);
        const AnomalyConfig cfg{a1, a1 + u(rng)};
        const double t = u(rng);
        double prev = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double d = 0.005 * i;
            const double p = anomaly_probability(d, t, cfg);
            ASSERT_GE(p, 0.0);
            ASSERT_LE(p, 1.0);
            ASSERT_GE(p, prev);
            // Lipschitz with constant 1 / (T_U - T_L): no jumps.
            ASSERT_LE(p - prev, 0.005 / ((cfg.alpha2 - cfg.alpha1) * t) + 1e-12);
            prev = p;
        }
    }
}

// ---- step 1 ---------------------------------------------------------------

TEST(SegmentIntensityTest, IdenticalDaysFormOneCluster) {
    std::vector<LoadProfile> days;
    for (int i = 0; i < 30; ++i) days.push_back(day_profile("m1", i, constant(0.5)));
    const auto r = segment_intensity(days, 0.1);
    ASSERT_EQ(r.clusters.size(), 1u);
    EXPECT_EQ(r.clusters[0].days.size(), 30u);
    EXPECT_EQ(r.anomaly_count(), 0u);
}

TEST(SegmentIntensityTest, ZeroDayIsFlaggedWithCertainty) {
    std::mt19937_64 rng(2);
    std::vector<LoadProfile> days;
    for (int i = 0; i < 30; ++i) {
        days.push_back(day_profile("m1", i, i == 17 ? constant(0.0) : noisy(constant(0.6), 0.01, rng)));
    }
    const auto r = segment_intensity(days, 0.1, SegmentationParams{{}, AnomalyConfig{2.0, 2.0}});
    EXPECT_DOUBLE_EQ(r.days[17].probability, 1.0);
    EXPECT_TRUE(r.days[17].anomalous);
    EXPECT_EQ(r.anomaly_count(), 1u);
}

TEST(SegmentIntensityTest, TwoLevelHouseholdSplitsIntoWeekdayAndWeekend) {
    std::mt19937_64 rng(5);
    std::vector<LoadProfile> days;
    std::vector<int> truth;  // brute-force two-partition: weekend flag
    for (int i = 0; i < 56; ++i) {
        const bool weekend = (i % 7) >= 5;
        truth.push_back(weekend ? 1 : 0);
        days.push_back(day_profile("m1", i, noisy(constant(weekend ? 1.2 : 0.4), 0.01, rng)));
    }
    // Gap between levels is 0.8 * sqrt(24) ~ 3.9; spread ~0.05.
    const auto r = segment_intensity(days, 0.3);
    ASSERT_EQ(r.clusters.size(), 2u);
    for (const auto& c : r.clusters) {
        std::set<int> labels;
        for (std::size_t i : c.days) labels.insert(truth[i]);
        EXPECT_EQ(labels.size(), 1u);
    }
    EXPECT_EQ(r.clusters[0].days.size() + r.clusters[1].days.size(), 56u);
}

TEST(SegmentIntensityTest, RejectsEmptyAndMixedInput) {
    EXPECT_THROW(segment_intensity({}, 1.0), Error);
    std::vector<LoadProfile> mixed{day_profile("a", 0, constant(1)), day_profile("b", 1, constant(1))};
    EXPECT_THROW(segment_intensity(mixed, 1.0), Error);
    std::vector<LoadProfile> negative{day_profile("a", 0, constant(-1))};
    EXPECT_THROW(segment_intensity(negative, 1.0), Error);
}

// ---- representative profile ------------------------------------------------

TEST(RepresentativeProfileTest, SingleClusterGivesItsCentroid) {
    std::vector<LoadProfile> days{day_profile("m", 0, constant(1.0)), day_profile("m", 1, constant(1.2))};
    const auto r = segment_intensity(days, 1.0);
    ASSERT_EQ(r.clusters.size(), 1u);
    const auto rep = representative_profile(r);
    for (double v : rep) EXPECT_NEAR(v, 1.1, 1e-12);
}

TEST(RepresentativeProfileTest, PicksLargestClusterAndMatchesBruteForceMean) {
    std::mt19937_64 rng(12);
    std::vector<LoadProfile> days;
    std::vector<oracle::Point> majority;
    for (int i = 0; i < 25; ++i) {
        const bool high = i % 5 == 4;  // sizes {20, 5}
        days.push_back(day_profile("m", i, noisy(constant(high ? 2.0 : 0.5), 0.01, rng)));
        if (!high) majority.emplace_back(days.back().values.begin(), days.back().values.end());
    }
    const auto r = segment_intensity(days, 0.3, SegmentationParams{{}, AnomalyConfig{5.0, 5.0}});
    ASSERT_EQ(r.clusters.size(), 2u);
    const auto rep = representative_profile(r);
    const auto expected = oracle::mean_point(majority);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) EXPECT_NEAR(rep[h], expected[h], 1e-12);
}

TEST(RepresentativeProfileTest, AnomalousDaysNeverContribute) {
    // An absorbed but flagged day must not shift the representative.
    std::vector<LoadProfile> days;
    for (int i = 0; i < 10; ++i) days.push_back(day_profile("m", i, constant(1.0)));
    HourlyVector off = constant(1.0);
    off[0] = 1.0 + 0.2;
    days.push_back(day_profile("m", 10, off));
    // T large enough to absorb, alphas tiny enough to flag the off day.
    const auto r = segment_intensity(days, 1.0, SegmentationParams{{}, AnomalyConfig{0.1, 0.1}});
    ASSERT_EQ(r.clusters.size(), 1u);
    ASSERT_TRUE(r.days[10].anomalous);
    const auto rep = representative_profile(r);
    for (double v : rep) EXPECT_DOUBLE_EQ(v, 1.0);
}

TEST(RepresentativeProfileTest, AllAnomalousHasNoRepresentative) {
    IntensityResult r{"m", 1.0, {}, {}, {}};
    r.vectors.push_back(constant(1.0));
    r.days.push_back(DayScore{0, nth_day(0), 0, 5.0, 1.0, true});
    r.clusters.push_back(IntensityCluster{0, cftree::ClusterFeature(r.vectors[0]), {0}});
    try {
        (void)representative_profile(r);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "no_representative");
    }
}

// ---- normalization ------------------------------------------------------------

TEST(NormalizeProfileTest, UniformAndOneHot) {
    const auto uniform = normalize_profile(constant(3.7));
    for (double s : uniform.shares) EXPECT_DOUBLE_EQ(s, 1.0 / 24.0);

    HourlyVector one_hot{};
    one_hot[7] = 2.5;
    const auto n = normalize_profile(one_hot);
    for (std::size_t h = 0; h < kHoursPerDay; ++h) EXPECT_DOUBLE_EQ(n.shares[h], h == 7 ? 1.0 : 0.0);
}

TEST(NormalizeProfileTest, SumsToOneAndKeepsArgmax) {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 1000; ++trial) {
        HourlyVector x;
        for (double& v : x) v = u(rng);
        const auto n = normalize_profile(x);
        double sum = 0.0;
        for (double s : n.shares) sum += s;
        EXPECT_NEAR(sum, 1.0, 1e-9);
        EXPECT_EQ(std::max_element(x.begin(), x.end()) - x.begin(),
                  std::max_element(n.shares.begin(), n.shares.end()) - n.shares.begin());
    }
}

TEST(NormalizeProfileTest, RejectsZeroSum) {
    try {
        (void)normalize_profile(constant(0.0));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "zero_sum_profile");
    }
}

// ---- step 2 -------------------------------------------------------------------

HourlyVector peak_shape(double center) {
    HourlyVector out;
    for (std::size_t h = 0; h < kHoursPerDay; ++h) {
        const double d = static_cast<double>(h) - center;
        out[h] = 0.2 + std::exp(-d * d / 4.5);
    }
    return out;
}

TEST(SegmentPatternsTest, SharedProfileGivesOneCluster) {
    std::vector<CustomerProfile> reps;
    for (int i = 0; i < 8; ++i) reps.push_back({"c" + std::to_string(i), normalize_profile(peak_shape(8))});
    const auto r = segment_patterns(reps, 0.01);
    ASSERT_EQ(r.clusters.size(), 1u);
    EXPECT_EQ(r.clusters[0].size(), 8u);
    EXPECT_DOUBLE_EQ(r.metrics.entropy, 0.0);
    EXPECT_FALSE(r.metrics.size_stddev.has_value());
    ASSERT_TRUE(r.metrics.estimated_threshold.has_value());
    EXPECT_NEAR(*r.metrics.estimated_threshold, 0.0, 1e-12);
}

std::vector<CustomerProfile> two_archetypes(std::mt19937_64& rng, std::vector<int>& truth, double scale_jitter) {
    std::uniform_real_distribution<double> scale(1.0 - scale_jitter, 1.0 + scale_jitter);
    std::vector<CustomerProfile> reps;
    for (int i = 0; i < 40; ++i) {
        const int archetype = (i * 7) % 3 == 0 ? 1 : 0;
        truth.push_back(archetype);
        HourlyVector raw = noisy(peak_shape(archetype ? 19.0 : 7.5), 0.003, rng);
        const double s = scale(rng);
        for (double& v : raw) v *= s;
        reps.push_back({"c" + std::to_string(i), normalize_profile(raw)});
    }
    return reps;
}

TEST(SegmentPatternsTest, RecoversTwoPlantedArchetypes) {
    std::mt19937_64 rng(31);
    std::vector<int> truth;
    const auto reps = two_archetypes(rng, truth, 0.5);
    const auto r = segment_patterns(reps, 0.02);
    ASSERT_EQ(r.clusters.size(), 2u);
    for (const auto& c : r.clusters) {
        std::set<int> labels;
        for (const auto& m : c.members) labels.insert(truth[static_cast<std::size_t>(std::stoi(m.substr(1)))]);
        EXPECT_EQ(labels.size(), 1u);
    }
    EXPECT_TRUE(r.metrics.size_stddev.has_value());
}

TEST(SegmentPatternsTest, MembershipInvariantToUniformScaling) {
    std::mt19937_64 rng(32);
    std::vector<CustomerProfile> reps;
    std::vector<CustomerProfile> scaled;
    std::uniform_real_distribution<double> factor(0.1, 50.0);
    for (int i = 0; i < 30; ++i) {
        HourlyVector raw = noisy(peak_shape(i % 2 ? 18.0 : 8.0), 0.05, rng);
        reps.push_back({"c" + std::to_string(i), normalize_profile(raw)});
        const double f = factor(rng);
        for (double& v : raw) v *= f;
        scaled.push_back({"c" + std::to_string(i), normalize_profile(raw)});
    }
    const auto a = segment_patterns(reps, 0.02);
    const auto b = segment_patterns(scaled, 0.02);
    ASSERT_EQ(a.clusters.size(), b.clusters.size());
    for (std::size_t k = 0; k < a.clusters.size(); ++k) EXPECT_EQ(a.clusters[k].members, b.clusters[k].members);
}

TEST(SegmentPatternsTest, RejectsEmptyInput) { EXPECT_THROW(segment_patterns({}, 0.1), Error); }

TEST(SegmentPatternsTest, MetricsRecomputeBitIdentically) {
    std::mt19937_64 rng(33);
    std::vector<int> truth;
    const auto reps = two_archetypes(rng, truth, 0.2);
    const auto a = segment_patterns(reps, 0.02);
    const auto b = segment_patterns(reps, 0.02);
    EXPECT_EQ(a.metrics.entropy, b.metrics.entropy);
    EXPECT_EQ(a.metrics.size_stddev, b.metrics.size_stddev);
    EXPECT_EQ(a.metrics.estimated_threshold, b.metrics.estimated_threshold);
}

// ---- default threshold ---------------------------------------------------------

TEST(DefaultThresholdTest, QuartileOfPairwiseDistances) {
    // Points 0, 1, 3 on one axis: distances {1, 2, 3}; 25th percentile at
    // rank 0.5 interpolates to 1.5.
    std::vector<HourlyVector> v(3, HourlyVector{});
    v[1][0] = 1.0;
    v[2][0] = 3.0;
    EXPECT_DOUBLE_EQ(default_threshold(v), 1.5);
}

TEST(DefaultThresholdTest, StaysPositiveForIdenticalVectors) {
    std::vector<HourlyVector> v(5, constant(1.0));
    EXPECT_GT(default_threshold(v), 0.0);
    EXPECT_THROW((void)default_threshold(std::vector<HourlyVector>(1)), Error);
}

}  // namespace
}  // namespace segsys::segmentation
