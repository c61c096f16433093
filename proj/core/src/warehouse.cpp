#include "segsys/warehouse.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <mutex>
#include <set>
#include <sstream>
#include <type_traits>
#include <unordered_map>
#include <unordered_set>

#include "segsys/errors.hpp"
#include "segsys/geojson.hpp"
#include "segsys/serialization.hpp"
#include "segsys/stats.hpp"
#include "sqlite.hpp"

namespace segsys::warehouse {

using nlohmann::json;
using sql::Connection;
using sql::Statement;

namespace {

constexpr std::int64_t kHour = 3600;

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS meta(
  key TEXT PRIMARY KEY,
  value TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS energy_type_dim(
  energy_type_key INTEGER PRIMARY KEY,
  name TEXT NOT NULL UNIQUE);
CREATE TABLE IF NOT EXISTS household_dim(
  household_key INTEGER PRIMARY KEY,
  household_id TEXT NOT NULL UNIQUE,
  lon REAL NOT NULL,
  lat REAL NOT NULL,
  family_size INTEGER,
  income_band TEXT,
  education TEXT,
  employment TEXT,
  dwelling_type TEXT,
  area_m2 REAL,
  rooms INTEGER,
  building_age INTEGER);
CREATE INDEX IF NOT EXISTS household_dim_location ON household_dim(lon, lat);
CREATE TABLE IF NOT EXISTS meter_dim(
  meter_key INTEGER PRIMARY KEY,
  meter_id TEXT NOT NULL UNIQUE,
  household_key INTEGER NOT NULL REFERENCES household_dim(household_key));
CREATE TABLE IF NOT EXISTS time_dim(
  time_key INTEGER PRIMARY KEY,
  timestamp TEXT NOT NULL,
  hour INTEGER NOT NULL,
  day INTEGER NOT NULL,
  month INTEGER NOT NULL,
  year INTEGER NOT NULL,
  weekday INTEGER NOT NULL,
  is_weekend INTEGER NOT NULL,
  local_date TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS consumption_fact(
  meter_key INTEGER NOT NULL REFERENCES meter_dim(meter_key),
  time_key INTEGER NOT NULL REFERENCES time_dim(time_key),
  household_key INTEGER NOT NULL REFERENCES household_dim(household_key),
  energy_type_key INTEGER NOT NULL REFERENCES energy_type_dim(energy_type_key),
  consumption REAL NOT NULL CHECK (consumption >= 0),
  PRIMARY KEY (meter_key, time_key)) WITHOUT ROWID;
CREATE INDEX IF NOT EXISTS consumption_fact_time ON consumption_fact(time_key);
CREATE INDEX IF NOT EXISTS consumption_fact_household ON consumption_fact(household_key, time_key);
CREATE TABLE IF NOT EXISTS neighborhood_details(
  neighborhood_id INTEGER PRIMARY KEY AUTOINCREMENT,
  name TEXT NOT NULL UNIQUE,
  geometry TEXT NOT NULL,
  created_at TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS segmentations(
  segmentation_id INTEGER PRIMARY KEY AUTOINCREMENT,
  created_at TEXT NOT NULL,
  status TEXT NOT NULL,
  request TEXT NOT NULL,
  config TEXT,
  metrics TEXT,
  anomalies TEXT,
  result_created_at TEXT,
  error_code TEXT,
  error_message TEXT);
CREATE TABLE IF NOT EXISTS segmentation_clusters(
  segmentation_id INTEGER NOT NULL REFERENCES segmentations(segmentation_id) ON DELETE CASCADE,
  cluster_id INTEGER NOT NULL,
  size INTEGER NOT NULL,
  centroid TEXT NOT NULL,
  members TEXT NOT NULL,
  PRIMARY KEY (segmentation_id, cluster_id));
)sql";

constexpr const char* kHouseholdColumns =
    "household_id, lon, lat, family_size, income_band, education, employment, dwelling_type, area_m2, rooms, "
    "building_age";

std::string now_text() {
    return timeutil::format_utc(std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now()));
}

template <std::size_t N>
bool member_of(const std::array<const char*, N>& values, const std::string& v) {
    return std::any_of(values.begin(), values.end(), [&](const char* s) { return v == s; });
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

template <class T>
std::optional<T> parse_number(const std::string& s) {
    T v{};
    const auto* end = s.data() + s.size();
    const auto [p, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc{} || p != end || s.empty()) return std::nullopt;
    return v;
}

std::string number_text(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string placeholders(std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += i ? ",?" : "?";
    return s;
}

std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

HouseholdRecord read_household(const Statement& st, int col) {
    HouseholdRecord h;
    h.household_id = st.text(col);
    h.location = {st.real(col + 1), st.real(col + 2)};
    h.family_size = st.opt_int(col + 3);
    h.income_band = st.opt_text(col + 4);
    h.education = st.opt_text(col + 5);
    h.employment = st.opt_text(col + 6);
    h.dwelling_type = st.opt_text(col + 7);
    h.area_m2 = st.opt_real(col + 8);
    h.rooms = st.opt_int(col + 9);
    h.building_age = st.opt_int(col + 10);
    return h;
}

SegmentationStatus status_from(const std::string& s) {
    if (s == "pending") return SegmentationStatus::pending;
    if (s == "running") return SegmentationStatus::running;
    if (s == "done") return SegmentationStatus::done;
    if (s == "failed") return SegmentationStatus::failed;
    throw Error(ErrorKind::internal, "internal_error", "unknown segmentation status '" + s + "'");
}

[[noreturn]] void not_found(const std::string& what) { throw Error(ErrorKind::not_found, "not_found", what); }

struct FactRow {
    std::string id;  // meter or household id
    std::string household_id;
    std::int64_t time;
    double consumption;
    std::string local_date;
    int hour;
};

}  // namespace

// ---- records ---------------------------------------------------------------

void HouseholdRecord::validate() const {
    if (household_id.empty()) {
        throw Error(ErrorKind::invalid_argument, "invalid_household", "household_id must be non-empty");
    }
    geometry::validate(location);
    auto check_enum = [](const auto& values, const std::optional<std::string>& v, const char* name) {
        if (v && !member_of(values, *v)) {
            throw Error(ErrorKind::invalid_argument, "invalid_attribute",
                        std::string("unknown ") + name + " '" + *v + "'");
        }
    };
    check_enum(kIncomeBands, income_band, "income_band");
    check_enum(kEducationLevels, education, "education");
    check_enum(kEmploymentStatuses, employment, "employment");
    check_enum(kDwellingTypes, dwelling_type, "dwelling_type");
    auto check_positive = [](auto v, const char* name) {
        if (v && !(static_cast<double>(*v) > 0.0 && std::isfinite(static_cast<double>(*v)))) {
            throw Error(ErrorKind::invalid_argument, "invalid_attribute", std::string(name) + " must be positive");
        }
    };
    check_positive(family_size, "family_size");
    check_positive(area_m2, "area_m2");
    check_positive(rooms, "rooms");
    check_positive(building_age, "building_age");
}

std::optional<std::string> HouseholdRecord::factor(const std::string& name) const {
    auto num = [](const auto& v) -> std::optional<std::string> {
        if (!v) return std::nullopt;
        if constexpr (std::is_same_v<std::decay_t<decltype(*v)>, double>) {
            return number_text(*v);
        } else {
            return std::to_string(*v);
        }
    };
    if (name == "family_size") return num(family_size);
    if (name == "income_band") return income_band;
    if (name == "education") return education;
    if (name == "employment") return employment;
    if (name == "dwelling_type") return dwelling_type;
    if (name == "area_m2") return num(area_m2);
    if (name == "rooms") return num(rooms);
    if (name == "building_age") return num(building_age);
    throw Error(ErrorKind::invalid_argument, "unknown_factor", "unknown household factor '" + name + "'");
}

std::map<std::string, std::size_t> IngestReport::reason_counts() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& r : reasons) ++counts[r.reason];
    return counts;
}

std::string to_string(SegmentationStatus s) {
    switch (s) {
        case SegmentationStatus::pending: return "pending";
        case SegmentationStatus::running: return "running";
        case SegmentationStatus::done: return "done";
        case SegmentationStatus::failed: return "failed";
    }
    return "unknown";
}

Statistic Statistic::parse(const std::string& text, std::optional<double> p) {
    Statistic s;
    if (text == "sum") {
        s.kind = Kind::sum;
    } else if (text == "mean") {
        s.kind = Kind::mean;
    } else if (text == "percentile" || text.rfind("percentile(", 0) == 0) {
        s.kind = Kind::percentile;
        if (text != "percentile") {
            if (text.back() != ')') {
                throw Error(ErrorKind::invalid_argument, "invalid_statistic", "malformed statistic '" + text + "'");
            }
            p = parse_number<double>(text.substr(11, text.size() - 12));
            if (!p) throw Error(ErrorKind::invalid_argument, "invalid_statistic", "malformed percentile '" + text + "'");
        }
        s.p = p.value_or(50.0);
        if (!(s.p >= 0.0 && s.p <= 100.0)) {
            throw Error(ErrorKind::invalid_argument, "invalid_statistic", "percentile must lie in [0, 100]");
        }
    } else {
        throw Error(ErrorKind::invalid_argument, "invalid_statistic", "unknown statistic '" + text + "'");
    }
    return s;
}

double Statistic::apply(std::vector<double> values) const {
    require(!values.empty(), "statistic over an empty set");
    switch (kind) {
        case Kind::sum: {
            double total = 0.0;
            for (double v : values) total += v;
            return total;
        }
        case Kind::mean: return segsys::mean(values);
        case Kind::percentile: return segsys::percentile(std::move(values), p);
    }
    return 0.0;
}

std::string Statistic::name() const {
    switch (kind) {
        case Kind::sum: return "sum";
        case Kind::mean: return "mean";
        case Kind::percentile: return "percentile(" + number_text(p) + ")";
    }
    return "";
}

// ---- ranges ----------------------------------------------------------------

TimeRange local_day_range(const timeutil::LocalZone& zone, const std::optional<Date>& first,
                          const std::optional<Date>& last) {
    TimeRange r;
    if (first) r.from = zone.start_of_day(*first);
    if (last) r.to = zone.start_of_day(Date{std::chrono::sys_days{*last} + std::chrono::days{1}});
    return r;
}

std::optional<sys_seconds> parse_range_start(const timeutil::LocalZone& zone, const std::string& text) {
    if (const auto d = timeutil::parse_date(text)) return zone.start_of_day(*d);
    return timeutil::parse_timestamp(text);
}

std::optional<sys_seconds> parse_range_end(const timeutil::LocalZone& zone, const std::string& text) {
    if (const auto d = timeutil::parse_date(text)) {
        return zone.start_of_day(Date{std::chrono::sys_days{*d} + std::chrono::days{1}});
    }
    return timeutil::parse_timestamp(text);
}

// ---- connection management -------------------------------------------------

struct Warehouse::Impl {
    WarehouseOptions options;
    timeutil::LocalZone zone;
    bool shared_connection;  // in-memory stores cannot be reopened by readers

    std::mutex write_mu;
    std::unique_ptr<Connection> writer;
    std::unordered_set<std::int64_t> known_times;  // guarded by write_mu

    std::mutex pool_mu;
    std::vector<std::unique_ptr<Connection>> pool;

    explicit Impl(WarehouseOptions opts)
        : options(std::move(opts)),
          zone(options.local_zone),
          shared_connection(options.path.empty() || options.path == ":memory:" ||
                            options.path.rfind("file::memory:", 0) == 0) {
        writer = std::make_unique<Connection>(options.path);
        writer->exec("PRAGMA foreign_keys = ON");
        if (!shared_connection) {
            writer->exec("PRAGMA journal_mode = WAL");
            writer->exec("PRAGMA synchronous = NORMAL");
        }
        sql::Transaction tx(*writer, true);
        writer->exec(kSchema);
        auto seed = writer->prepare("INSERT OR IGNORE INTO energy_type_dim(energy_type_key, name) VALUES(?, ?)");
        for (std::size_t i = 0; i < kEnergyTypes.size(); ++i) {
            seed.bind(1, static_cast<std::int64_t>(i + 1)).bind(2, kEnergyTypes[i]).run();
            seed.reset();
        }
        auto get = writer->prepare("SELECT value FROM meta WHERE key = 'local_zone'");
        if (get.step()) {
            if (get.text(0) != zone.spec()) {
                throw Error(ErrorKind::conflict, "zone_mismatch",
                            "warehouse was created with local zone '" + get.text(0) + "', not '" + zone.spec() + "'");
            }
        } else {
            writer->prepare("INSERT INTO meta(key, value) VALUES('local_zone', ?)").bind(1, zone.spec()).run();
        }
        tx.commit();
    }

    std::unique_ptr<Connection> take_reader() {
        {
            std::lock_guard lk(pool_mu);
            if (!pool.empty()) {
                auto c = std::move(pool.back());
                pool.pop_back();
                return c;
            }
        }
        return std::make_unique<Connection>(options.path);
    }

    void give_back(std::unique_ptr<Connection> c) {
        std::lock_guard lk(pool_mu);
        if (pool.size() < options.reader_pool) pool.push_back(std::move(c));
    }

    // Runs f against a committed snapshot.
    template <class F>
    auto read(F&& f) {
        if (shared_connection) {
            std::lock_guard lk(write_mu);
            return f(*writer);
        }
        auto conn = take_reader();
        struct Return {
            Impl& self;
            std::unique_ptr<Connection>& c;
            ~Return() { self.give_back(std::move(c)); }
        } guard{*this, conn};
        sql::Transaction tx(*conn, false);
        if constexpr (std::is_void_v<std::invoke_result_t<F, Connection&>>) {
            f(*conn);
            tx.commit();
        } else {
            auto result = f(*conn);
            tx.commit();
            return result;
        }
    }

    template <class F>
    auto write(F&& f) {
        std::lock_guard lk(write_mu);
        sql::Transaction tx(*writer, true);
        if constexpr (std::is_void_v<std::invoke_result_t<F, Connection&>>) {
            try {
                f(*writer);
            } catch (...) {
                known_times.clear();  // rolled-back time rows may be cached
                throw;
            }
            tx.commit();
        } else {
            try {
                auto result = f(*writer);
                tx.commit();
                return result;
            } catch (...) {
                known_times.clear();
                throw;
            }
        }
    }

    // Caller holds write_mu.
    void ensure_time(Connection& c, Statement& insert, std::int64_t t) {
        if (known_times.contains(t)) return;
        const auto local = zone.to_local(sys_seconds{std::chrono::seconds{t}});
        insert.bind(1, t)
            .bind(2, timeutil::format_utc(sys_seconds{std::chrono::seconds{t}}))
            .bind(3, local.hour)
            .bind(4, static_cast<int>(static_cast<unsigned>(local.date.day())))
            .bind(5, static_cast<int>(static_cast<unsigned>(local.date.month())))
            .bind(6, static_cast<int>(local.date.year()))
            .bind(7, static_cast<int>(local.weekday))
            .bind(8, local.weekend() ? 1 : 0)
            .bind(9, timeutil::format_date(local.date))
            .run();
        insert.reset();
        (void)c;
        known_times.insert(t);
    }
};

// ---- fact scans --------------------------------------------------------------

namespace {

std::optional<Key> energy_key(Connection& c, const std::string& name) {
    auto st = c.prepare("SELECT energy_type_key FROM energy_type_dim WHERE name = ?");
    st.bind(1, name);
    if (!st.step()) return std::nullopt;
    return st.int64(0);
}

void check_known(Connection& c, const char* table, const char* column, const std::vector<std::string>& ids) {
    auto st = c.prepare(std::string("SELECT 1 FROM ") + table + " WHERE " + column + " = ?");
    for (const auto& id : ids) {
        st.bind(1, id);
        if (!st.step()) {
            throw Error(ErrorKind::not_found, "unknown_key", std::string("unknown ") + column + " '" + id + "'");
        }
        st.reset();
    }
}

// Facts matching the filter; `by_household` keys rows by household id.
template <class F>
void scan_facts(Connection& c, const ConsumptionFilter& filter, bool by_household, F&& on_row) {
    check_known(c, "meter_dim", "meter_id", filter.meter_ids);
    check_known(c, "household_dim", "household_id", filter.household_ids);
    std::optional<Key> energy;
    if (filter.energy_type) {
        energy = energy_key(c, *filter.energy_type);
        if (!energy) {
            throw Error(ErrorKind::not_found, "unknown_key", "unknown energy type '" + *filter.energy_type + "'");
        }
    }
    std::string q =
        "SELECT m.meter_id, h.household_id, f.time_key, f.consumption, t.local_date, t.hour "
        "FROM consumption_fact f "
        "JOIN meter_dim m ON m.meter_key = f.meter_key "
        "JOIN household_dim h ON h.household_key = f.household_key "
        "JOIN time_dim t ON t.time_key = f.time_key "
        "WHERE f.time_key >= ? AND f.time_key < ?";
    if (energy) q += " AND f.energy_type_key = ?";
    if (!filter.meter_ids.empty()) q += " AND m.meter_id IN (" + placeholders(filter.meter_ids.size()) + ")";
    if (!filter.household_ids.empty()) {
        q += " AND h.household_id IN (" + placeholders(filter.household_ids.size()) + ")";
    }
    q += by_household ? " ORDER BY h.household_id, f.time_key, m.meter_id" : " ORDER BY m.meter_id, f.time_key";
    auto st = c.prepare(q);
    int i = 1;
    st.bind(i++, filter.range.from ? filter.range.from->time_since_epoch().count() : INT64_MIN);
    st.bind(i++, filter.range.to ? filter.range.to->time_since_epoch().count() : INT64_MAX);
    if (energy) st.bind(i++, *energy);
    for (const auto& id : filter.meter_ids) st.bind(i++, id);
    for (const auto& id : filter.household_ids) st.bind(i++, id);
    while (st.step()) {
        on_row(FactRow{by_household ? st.text(1) : st.text(0), st.text(1), st.int64(2), st.real(3), st.text(4),
                       static_cast<int>(st.int64(5))});
    }
}

// Groups consecutive rows with the same (id, local_date) into day vectors.
class DayAccumulator {
public:
    void add(const FactRow& r) {
        if (days_.empty() || days_.back().id != r.id || date_text_ != r.local_date) {
            DailyVector d;
            d.id = r.id;
            d.household_id = r.household_id;
            d.date = *timeutil::parse_date(r.local_date);
            d.missing.set();
            days_.push_back(std::move(d));
            date_text_ = r.local_date;
        }
        auto& d = days_.back();
        d.values[static_cast<std::size_t>(r.hour)] += r.consumption;
        d.missing.reset(static_cast<std::size_t>(r.hour));
    }
    std::vector<DailyVector> take() {
        // Rows arrive in UTC order; with a DST shift one local day's hours
        // never interleave with another's, so grouping by run suffices.
        return std::move(days_);
    }

private:
    std::vector<DailyVector> days_;
    std::string date_text_;
};

std::vector<HouseholdRecord> households_where(Connection& c, const std::string& where,
                                              const std::vector<double>& args) {
    auto st = c.prepare(std::string("SELECT ") + kHouseholdColumns + " FROM household_dim " + where +
                        " ORDER BY household_id");
    for (std::size_t i = 0; i < args.size(); ++i) st.bind(static_cast<int>(i + 1), args[i]);
    std::vector<HouseholdRecord> out;
    while (st.step()) out.push_back(read_household(st, 0));
    return out;
}

NeighborhoodRecord read_neighborhood(const Statement& st) {
    NeighborhoodRecord r;
    r.id = st.int64(0);
    r.name = st.text(1);
    r.geometry = geojson::parse_polygon(json::parse(st.text(2)));
    r.created_at = st.text(3);
    return r;
}

NeighborhoodRecord neighborhood_by_id(Connection& c, Key id) {
    auto st = c.prepare("SELECT neighborhood_id, name, geometry, created_at FROM neighborhood_details "
                        "WHERE neighborhood_id = ?");
    st.bind(1, id);
    if (!st.step()) not_found("unknown neighborhood " + std::to_string(id));
    return read_neighborhood(st);
}

}  // namespace

// ---- Warehouse ---------------------------------------------------------------

Warehouse::Warehouse(WarehouseOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
Warehouse::~Warehouse() = default;

const timeutil::LocalZone& Warehouse::zone() const { return impl_->zone; }

namespace {

Key upsert_household_on(Connection& c, const HouseholdRecord& h) {
    h.validate();
    auto st = c.prepare(std::string("INSERT INTO household_dim(") + kHouseholdColumns +
                        ") VALUES(?,?,?,?,?,?,?,?,?,?,?) ON CONFLICT(household_id) DO UPDATE SET "
                        "lon = excluded.lon, lat = excluded.lat, family_size = excluded.family_size, "
                        "income_band = excluded.income_band, education = excluded.education, "
                        "employment = excluded.employment, dwelling_type = excluded.dwelling_type, "
                        "area_m2 = excluded.area_m2, rooms = excluded.rooms, building_age = excluded.building_age");
    st.bind(1, h.household_id)
        .bind(2, h.location.lon)
        .bind(3, h.location.lat)
        .bind(4, h.family_size)
        .bind(5, h.income_band)
        .bind(6, h.education)
        .bind(7, h.employment)
        .bind(8, h.dwelling_type)
        .bind(9, h.area_m2)
        .bind(10, h.rooms)
        .bind(11, h.building_age)
        .run();
    auto key = c.prepare("SELECT household_key FROM household_dim WHERE household_id = ?");
    key.bind(1, h.household_id);
    key.step();
    const Key hk = key.int64(0);
    // Every household carries a meter named after it.
    c.prepare("INSERT OR IGNORE INTO meter_dim(meter_id, household_key) VALUES(?, ?)")
        .bind(1, h.household_id)
        .bind(2, hk)
        .run();
    return hk;
}

Key upsert_meter_on(Connection& c, const MeterRecord& m) {
    if (m.meter_id.empty()) throw Error(ErrorKind::invalid_argument, "invalid_meter", "meter_id must be non-empty");
    auto hh = c.prepare("SELECT household_key FROM household_dim WHERE household_id = ?");
    hh.bind(1, m.household_id);
    if (!hh.step()) {
        throw Error(ErrorKind::invalid_argument, "unknown_household",
                    "meter '" + m.meter_id + "' references unknown household '" + m.household_id + "'");
    }
    const Key hk = hh.int64(0);
    auto existing = c.prepare("SELECT meter_key, household_key FROM meter_dim WHERE meter_id = ?");
    existing.bind(1, m.meter_id);
    if (existing.step()) {
        if (existing.int64(1) != hk) {
            throw Error(ErrorKind::conflict, "meter_reassignment",
                        "meter '" + m.meter_id + "' already belongs to another household");
        }
        return existing.int64(0);
    }
    c.prepare("INSERT INTO meter_dim(meter_id, household_key) VALUES(?, ?)").bind(1, m.meter_id).bind(2, hk).run();
    return c.last_insert_rowid();
}

}  // namespace

Key Warehouse::upsert_household(const HouseholdRecord& record) {
    return impl_->write([&](Connection& c) { return upsert_household_on(c, record); });
}

Key Warehouse::upsert_meter(const MeterRecord& record) {
    return impl_->write([&](Connection& c) { return upsert_meter_on(c, record); });
}

std::optional<HouseholdRecord> Warehouse::household(const std::string& household_id) const {
    return impl_->read([&](Connection& c) -> std::optional<HouseholdRecord> {
        auto st = c.prepare(std::string("SELECT ") + kHouseholdColumns + " FROM household_dim WHERE household_id = ?");
        st.bind(1, household_id);
        if (!st.step()) return std::nullopt;
        return read_household(st, 0);
    });
}

std::vector<HouseholdRecord> Warehouse::households() const {
    return impl_->read([](Connection& c) { return households_where(c, "", {}); });
}

std::vector<HouseholdRecord> Warehouse::households_in(const geometry::BoundingBox& box) const {
    return impl_->read([&](Connection& c) {
        return households_where(c, "WHERE lon >= ? AND lon <= ? AND lat >= ? AND lat <= ?",
                                {box.min_lon, box.max_lon, box.min_lat, box.max_lat});
    });
}

std::vector<MeterRecord> Warehouse::meters() const {
    return impl_->read([](Connection& c) {
        auto st = c.prepare("SELECT m.meter_id, h.household_id FROM meter_dim m "
                            "JOIN household_dim h ON h.household_key = m.household_key ORDER BY m.meter_id");
        std::vector<MeterRecord> out;
        while (st.step()) out.push_back({st.text(0), st.text(1)});
        return out;
    });
}

// ---- ingestion -----------------------------------------------------------------

namespace {

struct MeterInfo {
    Key meter_key;
    Key household_key;
    std::string household_id;
};

// Reads the header; false for an empty source.
bool read_header(std::istream& in, const char* expected) {
    if (!in) throw Error(ErrorKind::io, "io_error", "unreadable source");
    std::string header;
    if (!std::getline(in, header)) {
        if (in.bad()) throw Error(ErrorKind::io, "io_error", "unreadable source");
        return false;
    }
    // A UTF-8 byte order mark is tolerated.
    if (header.rfind("\xEF\xBB\xBF", 0) == 0) header.erase(0, 3);
    if (header != expected) {
        throw Error(ErrorKind::invalid_argument, "bad_header",
                    "expected header '" + std::string(expected) + "', got '" + header + "'");
    }
    return true;
}

}  // namespace

IngestReport Warehouse::ingest_readings(std::istream& csv) {
    IngestReport report;
    if (!read_header(csv, kReadingsHeader)) return report;
    std::vector<ReadingRow> rows;
    std::vector<RejectedRow> malformed;
    std::vector<std::size_t> lines;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto fields = split(line, ',');
        std::optional<double> value;
        if (fields.size() == 4) value = parse_number<double>(fields[3]);
        if (!value) {
            malformed.push_back({line_no, "malformed_row", line});
            continue;
        }
        rows.push_back({fields[0], fields[1], fields[2], *value});
        lines.push_back(line_no);
    }
    if (csv.bad()) throw Error(ErrorKind::io, "io_error", "read failure");

    // Rows are ingested in one transaction; line numbers are restored after.
    report = ingest_reading_rows(rows, 0);
    for (auto& r : report.reasons) r.line = lines[r.line];
    report.rejected += malformed.size();
    report.reasons.insert(report.reasons.end(), malformed.begin(), malformed.end());
    std::stable_sort(report.reasons.begin(), report.reasons.end(),
                     [](const RejectedRow& a, const RejectedRow& b) { return a.line < b.line; });
    return report;
}

IngestReport Warehouse::ingest_reading_rows(std::span<const ReadingRow> rows, std::size_t first_line) {
    return impl_->write([&](Connection& c) {
        IngestReport report;
        std::unordered_map<std::string, std::optional<MeterInfo>> meters;
        std::unordered_map<std::string, Key> energy;
        {
            auto st = c.prepare("SELECT name, energy_type_key FROM energy_type_dim");
            while (st.step()) energy[st.text(0)] = st.int64(1);
        }
        auto meter_lookup = c.prepare(
            "SELECT m.meter_key, m.household_key, h.household_id FROM meter_dim m "
            "JOIN household_dim h ON h.household_key = m.household_key WHERE m.meter_id = ?");
        auto time_insert = c.prepare(
            "INSERT OR IGNORE INTO time_dim(time_key, timestamp, hour, day, month, year, weekday, is_weekend, "
            "local_date) VALUES(?,?,?,?,?,?,?,?,?)");
        auto existing = c.prepare(
            "SELECT consumption, energy_type_key FROM consumption_fact WHERE meter_key = ? AND time_key = ?");
        auto insert = c.prepare(
            "INSERT INTO consumption_fact(meter_key, time_key, household_key, energy_type_key, consumption) "
            "VALUES(?,?,?,?,?)");
        auto update = c.prepare(
            "UPDATE consumption_fact SET consumption = ?, energy_type_key = ? WHERE meter_key = ? AND time_key = ?");

        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& row = rows[i];
            const std::size_t line = first_line + i;
            auto reject = [&](const char* reason, std::string detail) {
                ++report.rejected;
                report.reasons.push_back({line, reason, std::move(detail)});
            };

            auto it = meters.find(row.meter_id);
            if (it == meters.end()) {
                meter_lookup.bind(1, row.meter_id);
                std::optional<MeterInfo> info;
                if (meter_lookup.step()) info = MeterInfo{meter_lookup.int64(0), meter_lookup.int64(1), meter_lookup.text(2)};
                meter_lookup.reset();
                it = meters.emplace(row.meter_id, std::move(info)).first;
            }
            if (!it->second) {
                reject("unknown_meter", row.meter_id);
                continue;
            }
            const auto ts = timeutil::parse_timestamp(row.timestamp);
            if (!ts) {
                reject("malformed_timestamp", row.timestamp);
                continue;
            }
            const std::int64_t t = ts->time_since_epoch().count();
            if (t % kHour != 0) {
                reject("unaligned_timestamp", row.timestamp);
                continue;
            }
            const auto e = energy.find(row.energy_type);
            if (e == energy.end()) {
                reject("unknown_energy_type", row.energy_type);
                continue;
            }
            if (!std::isfinite(row.consumption_kwh)) {
                reject("non_finite_consumption", number_text(row.consumption_kwh));
                continue;
            }
            if (row.consumption_kwh < 0.0) {
                reject("negative_consumption", number_text(row.consumption_kwh));
                continue;
            }

            const auto& m = *it->second;
            impl_->ensure_time(c, time_insert, t);
            existing.bind(1, m.meter_key).bind(2, t);
            if (existing.step()) {
                const bool same = existing.real(0) == row.consumption_kwh && existing.int64(1) == e->second;
                existing.reset();
                if (same) {
                    reject("duplicate", row.meter_id + "@" + row.timestamp);
                    continue;
                }
                update.bind(1, row.consumption_kwh).bind(2, e->second).bind(3, m.meter_key).bind(4, t).run();
                update.reset();
                ++report.updated;
            } else {
                existing.reset();
                insert.bind(1, m.meter_key).bind(2, t).bind(3, m.household_key).bind(4, e->second);
                insert.bind(5, row.consumption_kwh).run();
                insert.reset();
            }
            ++report.accepted;
            report.facts.push_back({row.meter_id, m.household_id, *ts});
        }
        return report;
    });
}

IngestReport Warehouse::ingest_households(std::istream& csv) {
    IngestReport report;
    if (!read_header(csv, kHouseholdsHeader)) return report;
    std::vector<std::pair<std::size_t, HouseholdRecord>> records;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 11) {
            ++report.rejected;
            report.reasons.push_back({line_no, "malformed_row", line});
            continue;
        }
        HouseholdRecord h;
        h.household_id = f[0];
        bool ok = true;
        auto text = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<std::string>(s); };
        auto numeric = [&]<class T>(const std::string& s, std::optional<T>& out) {
            if (s.empty()) return;
            out = parse_number<T>(s);
            if (!out) ok = false;
        };
        const auto lon = parse_number<double>(f[1]);
        const auto lat = parse_number<double>(f[2]);
        if (!lon || !lat) ok = false;
        numeric(f[3], h.family_size);
        h.income_band = text(f[4]);
        h.education = text(f[5]);
        h.employment = text(f[6]);
        h.dwelling_type = text(f[7]);
        numeric(f[8], h.area_m2);
        numeric(f[9], h.rooms);
        numeric(f[10], h.building_age);
        if (!ok) {
            ++report.rejected;
            report.reasons.push_back({line_no, "malformed_row", line});
            continue;
        }
        h.location = {*lon, *lat};
        records.emplace_back(line_no, std::move(h));
    }
    if (csv.bad()) throw Error(ErrorKind::io, "io_error", "read failure");

    impl_->write([&](Connection& c) {
        for (const auto& [line_no, h] : records) {
            try {
                upsert_household_on(c, h);
                ++report.accepted;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::invalid_argument && e.kind() != ErrorKind::invalid_geometry) throw;
                ++report.rejected;
                report.reasons.push_back({line_no, e.code(), e.what()});
            }
        }
    });
    std::stable_sort(report.reasons.begin(), report.reasons.end(),
                     [](const RejectedRow& a, const RejectedRow& b) { return a.line < b.line; });
    return report;
}

IngestReport Warehouse::ingest_meters(std::istream& csv) {
    IngestReport report;
    if (!read_header(csv, kMetersHeader)) return report;
    std::vector<std::pair<std::size_t, MeterRecord>> records;
    std::string line;
    std::size_t line_no = 1;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        if (f.size() != 2) {
            ++report.rejected;
            report.reasons.push_back({line_no, "malformed_row", line});
            continue;
        }
        records.emplace_back(line_no, MeterRecord{f[0], f[1]});
    }
    impl_->write([&](Connection& c) {
        for (const auto& [line_no, m] : records) {
            try {
                upsert_meter_on(c, m);
                ++report.accepted;
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::invalid_argument && e.kind() != ErrorKind::conflict) throw;
                ++report.rejected;
                report.reasons.push_back({line_no, e.code(), e.what()});
            }
        }
    });
    std::stable_sort(report.reasons.begin(), report.reasons.end(),
                     [](const RejectedRow& a, const RejectedRow& b) { return a.line < b.line; });
    return report;
}

IntegrityReport Warehouse::audit_integrity() const {
    return impl_->read([](Connection& c) {
        auto count = [&](const char* q) {
            auto st = c.prepare(q);
            st.step();
            return static_cast<std::size_t>(st.int64(0));
        };
        IntegrityReport r;
        r.dangling_meter = count(
            "SELECT COUNT(*) FROM consumption_fact f LEFT JOIN meter_dim m ON m.meter_key = f.meter_key "
            "WHERE m.meter_key IS NULL");
        r.dangling_time = count(
            "SELECT COUNT(*) FROM consumption_fact f LEFT JOIN time_dim t ON t.time_key = f.time_key "
            "WHERE t.time_key IS NULL");
        r.dangling_household = count(
            "SELECT COUNT(*) FROM consumption_fact f LEFT JOIN household_dim h ON h.household_key = f.household_key "
            "WHERE h.household_key IS NULL");
        r.dangling_energy_type = count(
            "SELECT COUNT(*) FROM consumption_fact f LEFT JOIN energy_type_dim e "
            "ON e.energy_type_key = f.energy_type_key WHERE e.energy_type_key IS NULL");
        r.household_mismatch = count(
            "SELECT COUNT(*) FROM consumption_fact f JOIN meter_dim m ON m.meter_key = f.meter_key "
            "WHERE m.household_key <> f.household_key");
        r.orphan_meters = count(
            "SELECT COUNT(*) FROM meter_dim m LEFT JOIN household_dim h ON h.household_key = m.household_key "
            "WHERE h.household_key IS NULL");
        return r;
    });
}

FactSummary Warehouse::fact_summary() const {
    return impl_->read([](Connection& c) {
        FactSummary s;
        auto st = c.prepare(
            "SELECT m.meter_id, f.time_key, f.consumption FROM consumption_fact f "
            "JOIN meter_dim m ON m.meter_key = f.meter_key ORDER BY m.meter_id, f.time_key");
        while (st.step()) {
            ++s.count;
            const double v = st.real(2);
            s.total_kwh += v;
            std::uint64_t h = std::hash<std::string>{}(st.text(0));
            h = mix(h ^ static_cast<std::uint64_t>(st.int64(1)));
            h = mix(h ^ std::bit_cast<std::uint64_t>(v));
            s.checksum += h;
        }
        return s;
    });
}

std::size_t Warehouse::count_facts(const TimeRange& range, const std::optional<std::string>& energy_type) const {
    return impl_->read([&](Connection& c) -> std::size_t {
        std::optional<Key> energy;
        if (energy_type) {
            energy = energy_key(c, *energy_type);
            if (!energy) throw Error(ErrorKind::not_found, "unknown_key", "unknown energy type '" + *energy_type + "'");
        }
        auto st = c.prepare(std::string("SELECT COUNT(*) FROM consumption_fact WHERE time_key >= ? AND time_key < ?") +
                            (energy ? " AND energy_type_key = ?" : ""));
        st.bind(1, range.from ? range.from->time_since_epoch().count() : INT64_MIN);
        st.bind(2, range.to ? range.to->time_since_epoch().count() : INT64_MAX);
        if (energy) st.bind(3, *energy);
        st.step();
        return static_cast<std::size_t>(st.int64(0));
    });
}

// ---- queries -------------------------------------------------------------------

ConsumptionSeries Warehouse::query_consumption(const ConsumptionFilter& filter, Granularity granularity) const {
    return impl_->read([&](Connection& c) {
        ConsumptionSeries out;
        out.granularity = granularity;
        if (granularity == Granularity::day) {
            DayAccumulator acc;
            scan_facts(c, filter, false, [&](const FactRow& r) { acc.add(r); });
            out.daily = acc.take();
            return out;
        }
        scan_facts(c, filter, false, [&](const FactRow& r) {
            if (!out.hourly.empty() && out.hourly.back().meter_id == r.id) {
                // Fill gaps between consecutive facts of one meter.
                for (auto t = out.hourly.back().time.time_since_epoch().count() + kHour; t < r.time; t += kHour) {
                    out.hourly.push_back({r.id, r.household_id, sys_seconds{std::chrono::seconds{t}}, std::nullopt});
                }
            }
            out.hourly.push_back({r.id, r.household_id, sys_seconds{std::chrono::seconds{r.time}}, r.consumption});
        });
        return out;
    });
}

std::vector<DailyVector> Warehouse::household_days(const ConsumptionFilter& filter) const {
    return impl_->read([&](Connection& c) {
        DayAccumulator acc;
        scan_facts(c, filter, true, [&](const FactRow& r) { acc.add(r); });
        return acc.take();
    });
}

namespace {

std::vector<HouseholdRecord> households_inside(Connection& c, const geometry::GeoPolygon& polygon) {
    const auto box = geometry::bounding_box(polygon);
    auto candidates = households_where(c, "WHERE lon >= ? AND lon <= ? AND lat >= ? AND lat <= ?",
                                       {box.min_lon, box.max_lon, box.min_lat, box.max_lat});
    std::erase_if(candidates, [&](const HouseholdRecord& h) { return !geometry::contains(polygon, h.location); });
    return candidates;
}

NeighborhoodAggregate aggregate_on(Connection& c, Key id, const Statistic& stat, const TimeRange& range,
                                   const std::string& energy_type) {
    const auto nb = neighborhood_by_id(c, id);
    NeighborhoodAggregate out;
    out.neighborhood_id = id;
    const auto members = households_inside(c, nb.geometry);
    if (members.empty()) return out;
    out.empty = false;
    for (const auto& h : members) out.household_ids.push_back(h.household_id);

    ConsumptionFilter filter;
    filter.range = range;
    filter.energy_type = energy_type;
    // One value per (bucket, household): the household's meters summed.
    std::map<std::int64_t, std::map<std::string, double>> buckets;
    const std::unordered_set<std::string> inside(out.household_ids.begin(), out.household_ids.end());
    scan_facts(c, filter, true, [&](const FactRow& r) {
        if (inside.contains(r.id)) buckets[r.time][r.id] += r.consumption;
    });
    for (const auto& [t, per_household] : buckets) {
        std::vector<double> values;
        values.reserve(per_household.size());
        for (const auto& [_, v] : per_household) values.push_back(v);
        out.series.push_back({sys_seconds{std::chrono::seconds{t}}, stat.apply(values), values.size()});
    }
    return out;
}

}  // namespace

NeighborhoodAggregate Warehouse::aggregate_by_neighborhood(Key neighborhood_id, const Statistic& stat,
                                                           const TimeRange& range,
                                                           const std::string& energy_type) const {
    return impl_->read([&](Connection& c) { return aggregate_on(c, neighborhood_id, stat, range, energy_type); });
}

NeighborhoodProfile Warehouse::neighborhood_profile(Key neighborhood_id, const TimeRange& range,
                                                    const std::string& energy_type) const {
    return impl_->read([&](Connection& c) {
        const auto nb = neighborhood_by_id(c, neighborhood_id);
        const auto agg = aggregate_on(c, neighborhood_id, Statistic{Statistic::Kind::mean, 50.0}, range, energy_type);
        NeighborhoodProfile p;
        p.neighborhood_id = neighborhood_id;
        p.name = nb.name;
        p.empty = agg.empty;
        p.household_count = agg.household_ids.size();
        std::array<double, 24> sum{};
        std::array<std::size_t, 24> n{};
        for (const auto& b : agg.series) {
            const auto h = static_cast<std::size_t>(impl_->zone.to_local(b.time).hour);
            sum[h] += b.value;
            ++n[h];
        }
        for (std::size_t h = 0; h < 24; ++h) {
            if (n[h]) p.profile[h] = sum[h] / static_cast<double>(n[h]);
        }
        return p;
    });
}

SocioGrouping Warehouse::group_by_sociodemographic(const std::vector<std::string>& factors, const TimeRange& range,
                                                   const Statistic& stat, std::size_t min_group_size,
                                                   const std::string& energy_type) const {
    if (factors.empty()) throw Error(ErrorKind::invalid_argument, "unknown_factor", "at least one factor is required");
    for (const auto& f : factors) {
        if (!member_of(kHouseholdFactors, f)) {
            throw Error(ErrorKind::invalid_argument, "unknown_factor", "unknown household factor '" + f + "'");
        }
    }
    return impl_->read([&](Connection& c) {
        SocioGrouping out;
        out.factors = factors;

        struct PerHousehold {
            double mean_daily;
            std::optional<HourlyVector> shares;
        };
        std::map<std::string, PerHousehold> per_household;
        {
            ConsumptionFilter filter;
            filter.range = range;
            filter.energy_type = energy_type;
            DayAccumulator acc;
            scan_facts(c, filter, true, [&](const FactRow& r) { acc.add(r); });
            std::map<std::string, std::pair<HourlyVector, std::size_t>> sums;
            for (const auto& d : acc.take()) {
                if (!d.complete()) continue;
                auto& [v, n] = sums[d.id];
                for (std::size_t h = 0; h < 24; ++h) v[h] += d.values[h];
                ++n;
            }
            for (const auto& [id, vn] : sums) {
                const auto& [v, n] = vn;
                HourlyVector mean{};
                double total = 0.0;
                for (std::size_t h = 0; h < 24; ++h) {
                    mean[h] = v[h] / static_cast<double>(n);
                    total += mean[h];
                }
                PerHousehold ph{total, std::nullopt};
                if (total > 0.0) ph.shares = segmentation::normalize_profile(mean).shares;
                per_household.emplace(id, ph);
            }
        }

        std::map<std::vector<std::string>, SocioGroup> groups;
        for (const auto& h : households_where(c, "", {})) {
            std::vector<std::string> key;
            for (const auto& f : factors) {
                auto v = h.factor(f);
                if (!v) break;
                key.push_back(std::move(*v));
            }
            if (key.size() != factors.size()) {
                ++out.excluded_null;
                continue;
            }
            auto& g = groups[key];
            g.key = key;
            g.household_ids.push_back(h.household_id);
        }
        for (auto& [key, g] : groups) {
            g.too_small = g.household_ids.size() < min_group_size;
            std::vector<double> values;
            HourlyVector profile{};
            std::size_t profiles = 0;
            for (const auto& id : g.household_ids) {
                const auto it = per_household.find(id);
                if (it == per_household.end()) continue;
                values.push_back(it->second.mean_daily);
                if (it->second.shares) {
                    for (std::size_t h = 0; h < 24; ++h) profile[h] += (*it->second.shares)[h];
                    ++profiles;
                }
            }
            g.households_with_data = values.size();
            if (g.too_small) continue;
            if (!values.empty()) g.statistic = stat.apply(values);
            if (profiles) {
                for (auto& v : profile) v /= static_cast<double>(profiles);
                g.mean_profile = profile;
            }
        }
        for (auto& [_, g] : groups) out.groups.push_back(std::move(g));
        return out;
    });
}

// ---- neighborhoods --------------------------------------------------------------

Key Warehouse::store_neighborhood(const std::string& name, const geometry::GeoPolygon& polygon) {
    if (name.empty()) throw Error(ErrorKind::invalid_argument, "invalid_name", "neighborhood name must be non-empty");
    geometry::validate(polygon);
    const auto text = geojson::to_geometry(polygon).dump();
    return impl_->write([&](Connection& c) {
        auto dup = c.prepare("SELECT 1 FROM neighborhood_details WHERE name = ?");
        dup.bind(1, name);
        if (dup.step()) throw Error(ErrorKind::conflict, "duplicate_name", "neighborhood '" + name + "' exists");
        c.prepare("INSERT INTO neighborhood_details(name, geometry, created_at) VALUES(?, ?, ?)")
            .bind(1, name)
            .bind(2, text)
            .bind(3, now_text())
            .run();
        return c.last_insert_rowid();
    });
}

void Warehouse::update_neighborhood(Key id, const std::optional<std::string>& name,
                                    const std::optional<geometry::GeoPolygon>& polygon) {
    if (name && name->empty()) {
        throw Error(ErrorKind::invalid_argument, "invalid_name", "neighborhood name must be non-empty");
    }
    if (polygon) geometry::validate(*polygon);
    impl_->write([&](Connection& c) {
        neighborhood_by_id(c, id);
        if (name) {
            auto dup = c.prepare("SELECT 1 FROM neighborhood_details WHERE name = ? AND neighborhood_id <> ?");
            dup.bind(1, *name).bind(2, id);
            if (dup.step()) throw Error(ErrorKind::conflict, "duplicate_name", "neighborhood '" + *name + "' exists");
            c.prepare("UPDATE neighborhood_details SET name = ? WHERE neighborhood_id = ?").bind(1, *name).bind(2, id).run();
        }
        if (polygon) {
            c.prepare("UPDATE neighborhood_details SET geometry = ? WHERE neighborhood_id = ?")
                .bind(1, geojson::to_geometry(*polygon).dump())
                .bind(2, id)
                .run();
        }
    });
}

void Warehouse::delete_neighborhood(Key id) {
    impl_->write([&](Connection& c) {
        c.prepare("DELETE FROM neighborhood_details WHERE neighborhood_id = ?").bind(1, id).run();
        if (c.changes() == 0) not_found("unknown neighborhood " + std::to_string(id));
    });
}

NeighborhoodRecord Warehouse::fetch_neighborhood(Key id) const {
    return impl_->read([&](Connection& c) { return neighborhood_by_id(c, id); });
}

std::vector<NeighborhoodRecord> Warehouse::neighborhoods() const {
    return impl_->read([](Connection& c) {
        auto st = c.prepare("SELECT neighborhood_id, name, geometry, created_at FROM neighborhood_details "
                            "ORDER BY neighborhood_id");
        std::vector<NeighborhoodRecord> out;
        while (st.step()) out.push_back(read_neighborhood(st));
        return out;
    });
}

// ---- segmentations --------------------------------------------------------------

namespace {

Key create_segmentation_on(Connection& c, const json& request) {
    c.prepare("INSERT INTO segmentations(created_at, status, request) VALUES(?, 'pending', ?)")
        .bind(1, now_text())
        .bind(2, request.dump())
        .run();
    return c.last_insert_rowid();
}

void require_segmentation(Connection& c, Key id) {
    auto st = c.prepare("SELECT 1 FROM segmentations WHERE segmentation_id = ?");
    st.bind(1, id);
    if (!st.step()) not_found("unknown segmentation " + std::to_string(id));
}

void complete_on(Connection& c, Key id, const segmentation::SegmentationResult& r) {
    require_segmentation(c, id);
    json anomalies = json::array();
    for (const auto& a : r.anomalies) anomalies.push_back(serialization::to_json(a));
    c.prepare("UPDATE segmentations SET status = 'done', config = ?, metrics = ?, anomalies = ?, "
              "result_created_at = ?, error_code = NULL, error_message = NULL WHERE segmentation_id = ?")
        .bind(1, serialization::to_json(r.config).dump())
        .bind(2, serialization::to_json(r.metrics).dump())
        .bind(3, anomalies.dump())
        .bind(4, timeutil::format_utc(r.created_at))
        .bind(5, id)
        .run();
    c.prepare("DELETE FROM segmentation_clusters WHERE segmentation_id = ?").bind(1, id).run();
    auto ins = c.prepare(
        "INSERT INTO segmentation_clusters(segmentation_id, cluster_id, size, centroid, members) VALUES(?,?,?,?,?)");
    for (const auto& cl : r.clusters) {
        ins.bind(1, id)
            .bind(2, cl.cluster_id)
            .bind(3, static_cast<std::int64_t>(cl.size()))
            .bind(4, json(cl.centroid).dump())
            .bind(5, json(cl.members).dump())
            .run();
        ins.reset();
    }
}

segmentation::PatternCluster read_cluster(const Statement& st) {
    segmentation::PatternCluster cl;
    cl.cluster_id = static_cast<int>(st.int64(0));
    cl.centroid = json::parse(st.text(1)).get<HourlyVector>();
    cl.members = json::parse(st.text(2)).get<std::vector<std::string>>();
    return cl;
}

SegmentationRecord read_segmentation_row(const Statement& st) {
    SegmentationRecord r;
    r.id = st.int64(0);
    r.created_at = st.text(1);
    r.status = status_from(st.text(2));
    r.request = json::parse(st.text(3));
    r.error_code = st.opt_text(4);
    r.error_message = st.opt_text(5);
    return r;
}

constexpr const char* kSegmentationColumns =
    "segmentation_id, created_at, status, request, error_code, error_message, config, metrics, anomalies, "
    "result_created_at";

}  // namespace

Key Warehouse::create_segmentation(const json& request) {
    return impl_->write([&](Connection& c) { return create_segmentation_on(c, request); });
}

void Warehouse::mark_segmentation_running(Key id) {
    impl_->write([&](Connection& c) {
        require_segmentation(c, id);
        c.prepare("UPDATE segmentations SET status = 'running' WHERE segmentation_id = ?").bind(1, id).run();
    });
}

void Warehouse::complete_segmentation(Key id, const segmentation::SegmentationResult& result) {
    impl_->write([&](Connection& c) { complete_on(c, id, result); });
}

void Warehouse::fail_segmentation(Key id, const std::string& code, const std::string& message) {
    impl_->write([&](Connection& c) {
        require_segmentation(c, id);
        c.prepare("UPDATE segmentations SET status = 'failed', error_code = ?, error_message = ? "
                  "WHERE segmentation_id = ?")
            .bind(1, code)
            .bind(2, message)
            .bind(3, id)
            .run();
    });
}

Key Warehouse::store_segmentation(const segmentation::SegmentationResult& result) {
    return impl_->write([&](Connection& c) {
        const Key id = create_segmentation_on(c, serialization::to_json(result.config));
        complete_on(c, id, result);
        return id;
    });
}

SegmentationRecord Warehouse::fetch_segmentation(Key id) const {
    return impl_->read([&](Connection& c) {
        auto st = c.prepare(std::string("SELECT ") + kSegmentationColumns +
                            " FROM segmentations WHERE segmentation_id = ?");
        st.bind(1, id);
        if (!st.step()) not_found("unknown segmentation " + std::to_string(id));
        auto rec = read_segmentation_row(st);
        if (rec.status != SegmentationStatus::done) return rec;
        segmentation::SegmentationResult r;
        r.config = serialization::run_config_from_json(json::parse(st.text(6)));
        r.metrics = serialization::metrics_from_json(json::parse(st.text(7)));
        for (const auto& a : json::parse(st.text(8))) r.anomalies.push_back(serialization::anomaly_from_json(a));
        r.created_at = timeutil::parse_timestamp(st.text(9)).value_or(sys_seconds{});
        auto cl = c.prepare("SELECT cluster_id, centroid, members FROM segmentation_clusters "
                            "WHERE segmentation_id = ? ORDER BY cluster_id");
        cl.bind(1, id);
        while (cl.step()) r.clusters.push_back(read_cluster(cl));
        rec.result = std::move(r);
        return rec;
    });
}

SegmentationStatus Warehouse::segmentation_status(Key id) const {
    return impl_->read([&](Connection& c) {
        auto st = c.prepare("SELECT status FROM segmentations WHERE segmentation_id = ?");
        st.bind(1, id);
        if (!st.step()) not_found("unknown segmentation " + std::to_string(id));
        return status_from(st.text(0));
    });
}

segmentation::PatternCluster Warehouse::fetch_cluster(Key segmentation_id, int cluster_id) const {
    return impl_->read([&](Connection& c) {
        require_segmentation(c, segmentation_id);
        auto st = c.prepare("SELECT cluster_id, centroid, members FROM segmentation_clusters "
                            "WHERE segmentation_id = ? AND cluster_id = ?");
        st.bind(1, segmentation_id).bind(2, cluster_id);
        if (!st.step()) {
            not_found("segmentation " + std::to_string(segmentation_id) + " has no cluster " +
                      std::to_string(cluster_id));
        }
        return read_cluster(st);
    });
}

std::vector<SegmentationRecord> Warehouse::segmentations() const {
    return impl_->read([](Connection& c) {
        auto st = c.prepare(std::string("SELECT ") + kSegmentationColumns +
                            " FROM segmentations ORDER BY segmentation_id");
        std::vector<SegmentationRecord> out;
        while (st.step()) out.push_back(read_segmentation_row(st));
        return out;
    });
}

void Warehouse::delete_segmentation(Key id) {
    impl_->write([&](Connection& c) {
        require_segmentation(c, id);
        c.prepare("DELETE FROM segmentation_clusters WHERE segmentation_id = ?").bind(1, id).run();
        c.prepare("DELETE FROM segmentations WHERE segmentation_id = ?").bind(1, id).run();
    });
}

}  // namespace segsys::warehouse
