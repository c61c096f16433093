#pragma once

#include <array>
#include <bitset>
#include <chrono>
#include <cstdint>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "segsys/geometry.hpp"
#include "segsys/segmentation.hpp"
#include "segsys/timeutil.hpp"

namespace segsys::warehouse {

using std::chrono::sys_seconds;
using segmentation::Date;
using segmentation::HourlyVector;
using Key = std::int64_t;

inline constexpr const char* kReadingsHeader = "meter_id,timestamp,energy_type,consumption_kwh";
inline constexpr const char* kHouseholdsHeader =
    "household_id,lon,lat,family_size,income_band,education,employment,dwelling_type,area_m2,rooms,building_age";
inline constexpr const char* kMetersHeader = "meter_id,household_id";

inline constexpr std::array<const char*, 4> kEnergyTypes{"electricity", "heat", "water", "gas"};
inline constexpr std::array<const char*, 5> kIncomeBands{"low", "lower_middle", "middle", "upper_middle", "high"};
inline constexpr std::array<const char*, 4> kEducationLevels{"primary", "secondary", "tertiary", "postgraduate"};
inline constexpr std::array<const char*, 5> kEmploymentStatuses{"employed", "unemployed", "retired", "student",
                                                                "self_employed"};
inline constexpr std::array<const char*, 4> kDwellingTypes{"detached", "semi_detached", "terraced", "apartment"};
// Attributes accepted by group_by_sociodemographic.
inline constexpr std::array<const char*, 8> kHouseholdFactors{"family_size",   "income_band", "education",
                                                              "employment",    "dwelling_type", "area_m2",
                                                              "rooms",         "building_age"};

// Half-open [from, to); an unset end is unbounded.
struct TimeRange {
    std::optional<sys_seconds> from;
    std::optional<sys_seconds> to;
};

struct HouseholdRecord {
    std::string household_id;
    geometry::GeoPoint location{};
    std::optional<int> family_size;
    std::optional<std::string> income_band;
    std::optional<std::string> education;
    std::optional<std::string> employment;
    std::optional<std::string> dwelling_type;
    std::optional<double> area_m2;
    std::optional<int> rooms;
    std::optional<int> building_age;

    // Throws invalid_argument on an unknown enumeration value or a
    // non-positive numeric attribute; invalid_geometry on a bad location.
    void validate() const;
    // Factor value as text, or nullopt when the attribute is null.
    std::optional<std::string> factor(const std::string& name) const;
    bool operator==(const HouseholdRecord&) const = default;
};

struct MeterRecord {
    std::string meter_id;
    std::string household_id;
};

struct ReadingRow {
    std::string meter_id;
    std::string timestamp;
    std::string energy_type;
    double consumption_kwh = 0.0;
};

struct RejectedRow {
    std::size_t line;  // 1-based; the CSV header is line 1
    std::string reason;
    std::string detail;
};

struct AcceptedFact {
    std::string meter_id;
    std::string household_id;
    sys_seconds time;
};

struct IngestReport {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t updated = 0;  // accepted rows that replaced a different value
    std::vector<RejectedRow> reasons;
    std::vector<AcceptedFact> facts;

    std::map<std::string, std::size_t> reason_counts() const;
};

struct ConsumptionFilter {
    TimeRange range;
    std::vector<std::string> meter_ids;      // empty: all
    std::vector<std::string> household_ids;  // empty: all
    std::optional<std::string> energy_type;  // unset: all
};

enum class Granularity { hour, day };

struct HourlyPoint {
    std::string meter_id;
    std::string household_id;
    sys_seconds time;
    std::optional<double> value;  // nullopt marks a gap
};

struct DailyVector {
    std::string id;  // meter id, or household id for household-level vectors
    std::string household_id;
    Date date;
    HourlyVector values{};
    std::bitset<24> missing;

    bool complete() const { return missing.none(); }
};

struct ConsumptionSeries {
    Granularity granularity = Granularity::hour;
    std::vector<HourlyPoint> hourly;  // ordered by (meter_id, time)
    std::vector<DailyVector> daily;   // ordered by (meter_id, date)
};

struct Statistic {
    enum class Kind { sum, mean, percentile };
    Kind kind = Kind::mean;
    double p = 50.0;

    // "sum", "mean", "percentile" (p from the argument), or "percentile(90)".
    static Statistic parse(const std::string& text, std::optional<double> p = std::nullopt);
    double apply(std::vector<double> values) const;
    std::string name() const;
};

struct BucketValue {
    sys_seconds time;
    double value;
    std::size_t households;  // households reporting in this bucket
};

struct NeighborhoodAggregate {
    Key neighborhood_id = 0;
    bool empty = true;  // no household inside the geometry
    std::vector<std::string> household_ids;
    std::vector<BucketValue> series;
};

struct NeighborhoodProfile {
    Key neighborhood_id = 0;
    std::string name;
    bool empty = true;
    std::size_t household_count = 0;
    std::array<std::optional<double>, 24> profile{};  // by local hour
};

struct NeighborhoodRecord {
    Key id = 0;
    std::string name;
    geometry::GeoPolygon geometry;
    std::string created_at;
};

struct SocioGroup {
    std::vector<std::string> key;  // factor values in request order
    std::vector<std::string> household_ids;
    std::size_t households_with_data = 0;
    bool too_small = false;
    std::optional<double> statistic;            // over per-household mean daily kWh
    std::optional<HourlyVector> mean_profile;  // mean normalized daily profile
};

struct SocioGrouping {
    std::vector<std::string> factors;
    std::vector<SocioGroup> groups;  // ordered by key
    std::size_t excluded_null = 0;   // households with a null factor
};

enum class SegmentationStatus { pending, running, done, failed };
std::string to_string(SegmentationStatus s);

struct SegmentationRecord {
    Key id = 0;
    SegmentationStatus status = SegmentationStatus::pending;
    std::string created_at;
    nlohmann::json request;
    std::optional<segmentation::SegmentationResult> result;
    std::optional<std::string> error_code;
    std::optional<std::string> error_message;
};

struct IntegrityReport {
    std::size_t dangling_meter = 0;
    std::size_t dangling_time = 0;
    std::size_t dangling_household = 0;
    std::size_t dangling_energy_type = 0;
    std::size_t household_mismatch = 0;  // fact household differs from its meter's
    std::size_t orphan_meters = 0;

    bool ok() const {
        return dangling_meter + dangling_time + dangling_household + dangling_energy_type + household_mismatch +
                   orphan_meters ==
               0;
    }
};

struct FactSummary {
    std::size_t count = 0;
    double total_kwh = 0.0;
    std::uint64_t checksum = 0;  // order-independent digest of (meter, time, value)
};

struct WarehouseOptions {
    std::string path = ":memory:";
    std::string local_zone = "UTC";
    std::size_t reader_pool = 4;
};

// Star-schema store. One writer at a time; readers use pooled connections
// that each see a committed snapshot. Thread-safe.
class Warehouse {
public:
    explicit Warehouse(WarehouseOptions options = {});
    ~Warehouse();
    Warehouse(const Warehouse&) = delete;
    Warehouse& operator=(const Warehouse&) = delete;

    const timeutil::LocalZone& zone() const;

    // ---- dimensions
    Key upsert_household(const HouseholdRecord& record);
    Key upsert_meter(const MeterRecord& record);
    std::optional<HouseholdRecord> household(const std::string& household_id) const;
    std::vector<HouseholdRecord> households() const;  // ordered by id
    std::vector<HouseholdRecord> households_in(const geometry::BoundingBox& box) const;
    std::vector<MeterRecord> meters() const;

    // ---- ingestion
    IngestReport ingest_readings(std::istream& csv);
    IngestReport ingest_reading_rows(std::span<const ReadingRow> rows, std::size_t first_line = 1);
    IngestReport ingest_households(std::istream& csv);
    IngestReport ingest_meters(std::istream& csv);

    IntegrityReport audit_integrity() const;
    FactSummary fact_summary() const;
    // Facts in range, optionally of one energy type.
    std::size_t count_facts(const TimeRange& range, const std::optional<std::string>& energy_type = {}) const;

    // ---- queries
    ConsumptionSeries query_consumption(const ConsumptionFilter& filter, Granularity granularity) const;
    // Household-level days: all meters of the household summed per local
    // hour, ordered by (household_id, date).
    std::vector<DailyVector> household_days(const ConsumptionFilter& filter) const;
    NeighborhoodAggregate aggregate_by_neighborhood(Key neighborhood_id, const Statistic& stat,
                                                    const TimeRange& range,
                                                    const std::string& energy_type = "electricity") const;
    // Mean by local hour of the per-bucket household means.
    NeighborhoodProfile neighborhood_profile(Key neighborhood_id, const TimeRange& range,
                                             const std::string& energy_type = "electricity") const;
    SocioGrouping group_by_sociodemographic(const std::vector<std::string>& factors, const TimeRange& range,
                                            const Statistic& stat, std::size_t min_group_size = 3,
                                            const std::string& energy_type = "electricity") const;

    // ---- neighborhoods
    Key store_neighborhood(const std::string& name, const geometry::GeoPolygon& polygon);
    void update_neighborhood(Key id, const std::optional<std::string>& name,
                             const std::optional<geometry::GeoPolygon>& polygon);
    void delete_neighborhood(Key id);
    NeighborhoodRecord fetch_neighborhood(Key id) const;
    std::vector<NeighborhoodRecord> neighborhoods() const;  // ordered by id

    // ---- segmentations
    Key create_segmentation(const nlohmann::json& request);
    void mark_segmentation_running(Key id);
    void complete_segmentation(Key id, const segmentation::SegmentationResult& result);
    void fail_segmentation(Key id, const std::string& code, const std::string& message);
    Key store_segmentation(const segmentation::SegmentationResult& result);
    SegmentationRecord fetch_segmentation(Key id) const;
    SegmentationStatus segmentation_status(Key id) const;
    segmentation::PatternCluster fetch_cluster(Key segmentation_id, int cluster_id) const;
    std::vector<SegmentationRecord> segmentations() const;  // without results, ordered by id
    void delete_segmentation(Key id);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Interval of whole local days [first, last] as a UTC range.
TimeRange local_day_range(const timeutil::LocalZone& zone, const std::optional<Date>& first,
                          const std::optional<Date>& last);

// Accepts a date (whole local day, inclusive) or a full timestamp.
std::optional<sys_seconds> parse_range_start(const timeutil::LocalZone& zone, const std::string& text);
std::optional<sys_seconds> parse_range_end(const timeutil::LocalZone& zone, const std::string& text);

}  // namespace segsys::warehouse
