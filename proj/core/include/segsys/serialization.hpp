#pragma once

#include <nlohmann/json.hpp>

#include "segsys/segmentation.hpp"

namespace segsys::serialization {

using nlohmann::json;

json to_json(const segmentation::RunConfig& config);
segmentation::RunConfig run_config_from_json(const json& j);

json to_json(const segmentation::QualityMetrics& metrics);
segmentation::QualityMetrics metrics_from_json(const json& j);

json to_json(const segmentation::Anomaly& anomaly);
segmentation::Anomaly anomaly_from_json(const json& j);

json to_json(const segmentation::PatternCluster& cluster);
segmentation::PatternCluster cluster_from_json(const json& j);

json to_json(const segmentation::SegmentationResult& result);
segmentation::SegmentationResult result_from_json(const json& j);

}  // namespace segsys::serialization
