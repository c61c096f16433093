#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "segsys/geometry.hpp"
#include "segsys/segmentation.hpp"
#include "segsys/warehouse.hpp"

namespace segsys::synth {

using segmentation::Date;
using segmentation::HourlyVector;

struct Archetype {
    std::string name;
    HourlyVector shape{};  // mean kWh per hour at scale 1
    double weight = 1.0;   // relative share of households
};

// morning-peak, evening-peak, flat
std::vector<Archetype> default_archetypes();

struct SyntheticSpec {
    std::size_t households = 100;
    std::vector<Archetype> archetypes = default_archetypes();
    double noise = 0.05;         // relative std of each hourly value
    double anomaly_rate = 0.0;   // per household-day, never on the first day
    Date start_date{std::chrono::year{2024}, std::chrono::month{1}, std::chrono::day{1}};
    std::size_t days = 30;
    std::uint64_t seed = 42;
    geometry::BoundingBox bbox{11.50, 48.10, 11.60, 48.20};
    double scale_min = 0.6;  // per-household multiplier range
    double scale_max = 1.6;

    void validate() const;
    static SyntheticSpec from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

struct InjectedAnomaly {
    std::string household_id;
    Date date;
    std::string kind;  // "zero_day" or "spike"
    double multiplier;  // 0 for zero days
};

struct GroundTruth {
    std::map<std::string, std::string> archetype_of;  // household -> archetype name
    std::map<std::string, double> scale_of;
    std::vector<InjectedAnomaly> anomalies;

    nlohmann::json to_json() const;
};

struct SyntheticData {
    std::vector<warehouse::HouseholdRecord> households;
    std::vector<warehouse::ReadingRow> readings;  // ordered by (household, time)
    GroundTruth truth;
};

// Each household's first injected anomaly is an all-zero day; later ones are
// spikes with multipliers 4, 6, 8, ... so no two anomalous days coincide.
SyntheticData generate(const SyntheticSpec& spec);

void write_households_csv(std::ostream& out, const std::vector<warehouse::HouseholdRecord>& households);
void write_readings_csv(std::ostream& out, const std::vector<warehouse::ReadingRow>& readings);

// households.csv, readings.csv, ground_truth.json
void write_dataset(const SyntheticData& data, const std::filesystem::path& dir);

inline constexpr const char* kHouseholdsFile = "households.csv";
inline constexpr const char* kReadingsFile = "readings.csv";
inline constexpr const char* kGroundTruthFile = "ground_truth.json";

}  // namespace segsys::synth
