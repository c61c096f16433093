#include "segsys/serialization.hpp"

#include "segsys/errors.hpp"
#include "segsys/timeutil.hpp"

namespace segsys::serialization {

using namespace segmentation;

namespace {

const char* entropy_name(EntropyForm f) { return f == EntropyForm::standard ? "standard" : "as_published"; }

EntropyForm entropy_from(const std::string& s) {
    if (s == "standard") return EntropyForm::standard;
    if (s == "as_published") return EntropyForm::as_published;
    throw Error(ErrorKind::invalid_argument, "invalid_entropy_form", "unknown entropy form '" + s + "'");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> number_or_null(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

json to_json(const RunConfig& c) {
    return json{{"branch_factor", c.branch_factor},
                {"leaf_capacity", c.leaf_capacity},
                {"pattern_threshold", c.pattern_threshold},
                {"intensity_threshold", optional_number(c.intensity_threshold)},
                {"alpha1", c.alphas.alpha1},
                {"alpha2", c.alphas.alpha2},
                {"flag_cut", c.flag_cut},
                {"entropy_form", entropy_name(c.entropy_form)}};
}

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    c.branch_factor = j.at("branch_factor").get<std::size_t>();
    c.leaf_capacity = j.at("leaf_capacity").get<std::size_t>();
    c.pattern_threshold = j.at("pattern_threshold").get<double>();
    c.intensity_threshold = number_or_null(j, "intensity_threshold");
    c.alphas.alpha1 = j.at("alpha1").get<double>();
    c.alphas.alpha2 = j.at("alpha2").get<double>();
    c.flag_cut = j.at("flag_cut").get<double>();
    c.entropy_form = entropy_from(j.at("entropy_form").get<std::string>());
    return c;
}

json to_json(const QualityMetrics& m) {
    return json{{"entropy", m.entropy},
                {"size_stddev", optional_number(m.size_stddev)},
                {"estimated_threshold", optional_number(m.estimated_threshold)}};
}

QualityMetrics metrics_from_json(const json& j) {
    return QualityMetrics{j.at("entropy").get<double>(), number_or_null(j, "size_stddev"),
                          number_or_null(j, "estimated_threshold")};
}

json to_json(const Anomaly& a) {
    return json{{"member", a.member},
                {"date", a.date ? json(timeutil::format_date(*a.date)) : json(nullptr)},
                {"probability", a.probability},
                {"stage", a.stage == AnomalyStage::intensity ? "intensity" : "pattern"}};
}

Anomaly anomaly_from_json(const json& j) {
    Anomaly a;
    a.member = j.at("member").get<std::string>();
    if (!j.at("date").is_null()) {
        const auto d = timeutil::parse_date(j.at("date").get<std::string>());
        if (!d) throw Error(ErrorKind::invalid_argument, "invalid_date", "bad anomaly date");
        a.date = *d;
    }
    a.probability = j.at("probability").get<double>();
    const auto stage = j.at("stage").get<std::string>();
    a.stage = stage == "pattern" ? AnomalyStage::pattern : AnomalyStage::intensity;
    return a;
}

json to_json(const PatternCluster& c) {
    return json{{"cluster_id", c.cluster_id},
                {"size", c.size()},
                {"centroid", c.centroid},
                {"members", c.members}};
}

PatternCluster cluster_from_json(const json& j) {
    PatternCluster c;
    c.cluster_id = j.at("cluster_id").get<int>();
    c.centroid = j.at("centroid").get<HourlyVector>();
    c.members = j.at("members").get<std::vector<std::string>>();
    return c;
}

json to_json(const SegmentationResult& r) {
    json clusters = json::array();
    for (const auto& c : r.clusters) clusters.push_back(to_json(c));
    json anomalies = json::array();
    for (const auto& a : r.anomalies) anomalies.push_back(to_json(a));
    return json{{"clusters", std::move(clusters)},
                {"anomalies", std::move(anomalies)},
                {"metrics", to_json(r.metrics)},
                {"config", to_json(r.config)},
                {"created_at", timeutil::format_utc(r.created_at)}};
}

SegmentationResult result_from_json(const json& j) {
    SegmentationResult r;
    for (const auto& c : j.at("clusters")) r.clusters.push_back(cluster_from_json(c));
    for (const auto& a : j.at("anomalies")) r.anomalies.push_back(anomaly_from_json(a));
    r.metrics = metrics_from_json(j.at("metrics"));
    r.config = run_config_from_json(j.at("config"));
    const auto t = timeutil::parse_timestamp(j.at("created_at").get<std::string>());
    if (!t) throw Error(ErrorKind::invalid_argument, "invalid_timestamp", "bad created_at");
    r.created_at = *t;
    return r;
}

}  // namespace segsys::serialization
