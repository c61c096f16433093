#include "segsys/synth.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <set>

#include "segsys/errors.hpp"
#include "segsys/timeutil.hpp"

namespace segsys::synth {

using nlohmann::json;

namespace {

double bump(double h, double center, double width) {
    const double z = (h - center) / width;
    return std::exp(-0.5 * z * z);
}

std::string shortest(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

[[noreturn]] void bad_spec(const std::string& msg) { throw Error(ErrorKind::invalid_argument, "invalid_spec", msg); }

HourlyVector shape_from_json(const json& j) {
    if (j.is_string()) {
        for (const auto& a : default_archetypes()) {
            if (a.name == j.get<std::string>()) return a.shape;
        }
        bad_spec("unknown built-in shape '" + j.get<std::string>() + "'");
    }
    if (!j.is_array() || j.size() != segmentation::kHoursPerDay) bad_spec("shape must be a name or 24 numbers");
    HourlyVector v{};
    for (std::size_t h = 0; h < v.size(); ++h) {
        if (!j[h].is_number()) bad_spec("shape values must be numbers");
        v[h] = j[h].get<double>();
    }
    return v;
}

template <class T>
T pick(std::mt19937_64& rng, const T* values, std::size_t n) {
    return values[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)];
}

}  // namespace

std::vector<Archetype> default_archetypes() {
    std::vector<Archetype> out(3);
    out[0].name = "morning-peak";
    out[1].name = "evening-peak";
    out[2].name = "flat";
    for (std::size_t h = 0; h < segmentation::kHoursPerDay; ++h) {
        const double x = static_cast<double>(h);
        out[0].shape[h] = 0.3 + 1.2 * bump(x, 7.5, 1.5) + 0.3 * bump(x, 19.0, 2.0);
        out[1].shape[h] = 0.3 + 0.3 * bump(x, 7.5, 1.5) + 1.2 * bump(x, 19.0, 2.0);
        out[2].shape[h] = 0.6;
    }
    return out;
}

void SyntheticSpec::validate() const {
    if (households < 1) bad_spec("households must be >= 1");
    if (days < 1) bad_spec("days must be >= 1");
    if (archetypes.empty()) bad_spec("at least one archetype is required");
    std::set<std::string> names;
    for (const auto& a : archetypes) {
        if (a.name.empty() || !names.insert(a.name).second) bad_spec("archetype names must be unique and non-empty");
        if (!(a.weight > 0.0 && std::isfinite(a.weight))) bad_spec("archetype weights must be > 0");
        double total = 0.0;
        for (double v : a.shape) {
            if (!(v >= 0.0 && std::isfinite(v))) bad_spec("archetype shapes must be finite and >= 0");
            total += v;
        }
        if (total <= 0.0) bad_spec("archetype shapes must have a positive total");
    }
    if (!(noise >= 0.0 && std::isfinite(noise))) bad_spec("noise must be >= 0");
    if (!(anomaly_rate >= 0.0 && anomaly_rate <= 1.0)) bad_spec("anomaly_rate must lie in [0, 1]");
    if (!start_date.ok()) bad_spec("invalid start_date");
    if (!(scale_min > 0.0 && scale_max >= scale_min && std::isfinite(scale_max))) bad_spec("invalid scale range");
    try {
        geometry::validate(geometry::GeoPoint{bbox.min_lon, bbox.min_lat});
        geometry::validate(geometry::GeoPoint{bbox.max_lon, bbox.max_lat});
    } catch (const Error&) {
        bad_spec("bbox corners must be valid coordinates");
    }
    if (!(bbox.min_lon <= bbox.max_lon && bbox.min_lat <= bbox.max_lat)) bad_spec("bbox is inverted");
}

SyntheticSpec SyntheticSpec::from_json(const json& j) {
    if (!j.is_object()) bad_spec("spec must be a JSON object");
    static const std::set<std::string> known{"households", "archetypes", "noise", "anomaly_rate", "start_date",
                                             "days",       "seed",       "bbox",  "scale"};
    for (const auto& [k, _] : j.items()) {
        if (!known.contains(k)) bad_spec("unknown spec key '" + k + "'");
    }
    SyntheticSpec s;
    try {
        if (j.contains("households")) s.households = j.at("households").get<std::size_t>();
        if (j.contains("days")) s.days = j.at("days").get<std::size_t>();
        if (j.contains("seed")) s.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("noise")) s.noise = j.at("noise").get<double>();
        if (j.contains("anomaly_rate")) s.anomaly_rate = j.at("anomaly_rate").get<double>();
        if (j.contains("start_date")) {
            const auto d = timeutil::parse_date(j.at("start_date").get<std::string>());
            if (!d) bad_spec("start_date must be YYYY-MM-DD");
            s.start_date = *d;
        }
        if (j.contains("bbox")) {
            const auto b = j.at("bbox").get<std::vector<double>>();
            if (b.size() != 4) bad_spec("bbox must be [min_lon, min_lat, max_lon, max_lat]");
            s.bbox = {b[0], b[1], b[2], b[3]};
        }
        if (j.contains("scale")) {
            const auto r = j.at("scale").get<std::vector<double>>();
            if (r.size() != 2) bad_spec("scale must be [min, max]");
            s.scale_min = r[0];
            s.scale_max = r[1];
        }
        if (j.contains("archetypes")) {
            s.archetypes.clear();
            for (const auto& a : j.at("archetypes")) {
                Archetype arch;
                arch.name = a.at("name").get<std::string>();
                arch.shape = shape_from_json(a.contains("shape") ? a.at("shape") : json(arch.name));
                arch.weight = a.value("weight", 1.0);
                s.archetypes.push_back(std::move(arch));
            }
        }
    } catch (const json::exception& e) {
        bad_spec(std::string("malformed spec: ") + e.what());
    }
    s.validate();
    return s;
}

json SyntheticSpec::to_json() const {
    json arch = json::array();
    for (const auto& a : archetypes) arch.push_back({{"name", a.name}, {"shape", a.shape}, {"weight", a.weight}});
    return json{{"households", households},
                {"archetypes", std::move(arch)},
                {"noise", noise},
                {"anomaly_rate", anomaly_rate},
                {"start_date", timeutil::format_date(start_date)},
                {"days", days},
                {"seed", seed},
                {"bbox", {bbox.min_lon, bbox.min_lat, bbox.max_lon, bbox.max_lat}},
                {"scale", {scale_min, scale_max}}};
}

json GroundTruth::to_json() const {
    json anomalies_json = json::array();
    for (const auto& a : anomalies) {
        anomalies_json.push_back({{"household_id", a.household_id},
                                  {"date", timeutil::format_date(a.date)},
                                  {"kind", a.kind},
                                  {"multiplier", a.multiplier}});
    }
    return json{{"archetypes", archetype_of}, {"scales", scale_of}, {"anomalies", std::move(anomalies_json)}};
}

SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    std::mt19937_64 rng(spec.seed);
    SyntheticData data;

    std::vector<double> weights;
    for (const auto& a : spec.archetypes) weights.push_back(a.weight);
    std::discrete_distribution<std::size_t> archetype(weights.begin(), weights.end());
    std::uniform_real_distribution<double> scale(spec.scale_min, spec.scale_max);
    std::uniform_real_distribution<double> lon(spec.bbox.min_lon, spec.bbox.max_lon);
    std::uniform_real_distribution<double> lat(spec.bbox.min_lat, spec.bbox.max_lat);
    std::uniform_int_distribution<int> family(1, 6);
    std::uniform_int_distribution<int> rooms(1, 8);
    std::uniform_int_distribution<int> age(1, 120);
    std::uniform_int_distribution<int> area_dm(300, 2500);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution anomalous(spec.anomaly_rate);

    const std::size_t width = std::max<std::size_t>(4, std::to_string(spec.households).size());
    for (std::size_t i = 0; i < spec.households; ++i) {
        std::string id = std::to_string(i + 1);
        id = "hh" + std::string(width - id.size(), '0') + id;

        const auto& arch = spec.archetypes[archetype(rng)];
        const double s = scale(rng);
        warehouse::HouseholdRecord h;
        h.household_id = id;
        h.location = {lon(rng), lat(rng)};
        h.family_size = family(rng);
        h.income_band = pick(rng, warehouse::kIncomeBands.data(), warehouse::kIncomeBands.size());
        h.education = pick(rng, warehouse::kEducationLevels.data(), warehouse::kEducationLevels.size());
        h.employment = pick(rng, warehouse::kEmploymentStatuses.data(), warehouse::kEmploymentStatuses.size());
        h.dwelling_type = pick(rng, warehouse::kDwellingTypes.data(), warehouse::kDwellingTypes.size());
        h.area_m2 = area_dm(rng) / 10.0;
        h.rooms = rooms(rng);
        h.building_age = age(rng);
        data.households.push_back(h);
        data.truth.archetype_of[id] = arch.name;
        data.truth.scale_of[id] = s;

        std::size_t injected = 0;
        for (std::size_t d = 0; d < spec.days; ++d) {
            const Date date{std::chrono::sys_days{spec.start_date} + std::chrono::days{static_cast<int>(d)}};
            double multiplier = 1.0;
            // Draw every day so the stream does not depend on the rate.
            const bool hit = anomalous(rng) && d > 0;
            if (hit) {
                multiplier = injected == 0 ? 0.0 : 4.0 + 2.0 * static_cast<double>(injected - 1);
                data.truth.anomalies.push_back({id, date, injected == 0 ? "zero_day" : "spike", multiplier});
                ++injected;
            }
            const std::chrono::sys_seconds midnight{std::chrono::sys_days{date}};
            for (std::size_t hr = 0; hr < segmentation::kHoursPerDay; ++hr) {
                const double jitter = 1.0 + spec.noise * gauss(rng);
                const double v = std::max(0.0, s * arch.shape[hr] * jitter) * multiplier;
                std::string ts = timeutil::format_utc(midnight + std::chrono::hours{hr});
                ts.back() = '+';
                ts += "00:00";
                data.readings.push_back({id, std::move(ts), "electricity", v});
            }
        }
    }
    return data;
}

void write_households_csv(std::ostream& out, const std::vector<warehouse::HouseholdRecord>& households) {
    out << warehouse::kHouseholdsHeader << '\n';
    auto opt = [](const auto& v) -> std::string {
        if (!v) return "";
        if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, std::string>) {
            return *v;
        } else if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) {
            return shortest(*v);
        } else {
            return std::to_string(*v);
        }
    };
    for (const auto& h : households) {
        out << h.household_id << ',' << shortest(h.location.lon) << ',' << shortest(h.location.lat) << ','
            << opt(h.family_size) << ',' << opt(h.income_band) << ',' << opt(h.education) << ','
            << opt(h.employment) << ',' << opt(h.dwelling_type) << ',' << opt(h.area_m2) << ',' << opt(h.rooms)
            << ',' << opt(h.building_age) << '\n';
    }
}

void write_readings_csv(std::ostream& out, const std::vector<warehouse::ReadingRow>& readings) {
    out << warehouse::kReadingsHeader << '\n';
    for (const auto& r : readings) {
        out << r.meter_id << ',' << r.timestamp << ',' << r.energy_type << ',' << shortest(r.consumption_kwh) << '\n';
    }
}

void write_dataset(const SyntheticData& data, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::io, "io_error", "cannot create '" + dir.string() + "': " + ec.message());
    auto open = [&](const char* name) {
        std::ofstream f(dir / name, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::io, "io_error", "cannot write '" + (dir / name).string() + "'");
        return f;
    };
    {
        auto f = open(kHouseholdsFile);
        write_households_csv(f, data.households);
    }
    {
        auto f = open(kReadingsFile);
        write_readings_csv(f, data.readings);
    }
    auto f = open(kGroundTruthFile);
    f << data.truth.to_json().dump(2) << '\n';
    if (!f) throw Error(ErrorKind::io, "io_error", "write failed in '" + dir.string() + "'");
}

}  // namespace segsys::synth
