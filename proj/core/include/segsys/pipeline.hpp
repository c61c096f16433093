#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "segsys/segmentation.hpp"
#include "segsys/warehouse.hpp"

namespace segsys::pipeline {

struct PipelineConfig {
    cftree::TreeShape shape{};
    std::optional<double> pattern_threshold;    // unset: default helper over representatives
    std::optional<double> intensity_threshold;  // unset: default helper per household
    segmentation::AnomalyConfig alphas{};
    std::map<std::string, segmentation::AnomalyConfig> household_alphas;  // per-household overrides
    double flag_cut = segmentation::kDefaultFlagCut;
    segmentation::EntropyForm entropy_form = segmentation::EntropyForm::as_published;
    warehouse::TimeRange range;
    std::string energy_type = "electricity";
    unsigned threads = 0;  // 0: hardware concurrency

    void validate() const;
};

struct QualityReport {
    std::size_t households = 0;           // with any fact in range
    std::size_t eligible_households = 0;  // contributed a representative
    std::size_t complete_days = 0;
    std::size_t incomplete_days = 0;  // excluded: at least one missing hour
    std::map<std::string, std::string> skipped;  // household -> reason
};

struct PipelineOutput {
    segmentation::SegmentationResult result;
    QualityReport quality;
};

// Step 1 per household over complete days, ordered by date; step 2 over the
// normalized representatives, ordered by household id. Throws unprocessable
// ("no_eligible_households") when no household yields a representative.
PipelineOutput run_segmentation(const warehouse::Warehouse& store, const PipelineConfig& config);

}  // namespace segsys::pipeline
