#include "segsys/timeutil.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>
#include <stdexcept>
#include <cstdio>

#include <boost/date_time/local_time/local_time.hpp>

#include "segsys/errors.hpp"

namespace segsys::timeutil {

namespace {

bool digits(std::string_view s, std::size_t pos, std::size_t n, int& out) {
    if (pos + n > s.size()) return false;
    out = 0;
    for (std::size_t i = pos; i < pos + n; ++i) {
        if (s[i] < '0' || s[i] > '9') return false;
        out = out * 10 + (s[i] - '0');
    }
    return true;
}

std::optional<Date> date_prefix(std::string_view s) {
    int y, m, d;
    if (s.size() < 10 || !digits(s, 0, 4, y) || s[4] != '-' || !digits(s, 5, 2, m) || s[7] != '-' ||
        !digits(s, 8, 2, d)) {
        return std::nullopt;
    }
    const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                    std::chrono::day{static_cast<unsigned>(d)}};
    if (!date.ok()) return std::nullopt;
    return date;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
    if (text.size() != 10) return std::nullopt;
    return date_prefix(text);
}

std::optional<sys_seconds> parse_timestamp(std::string_view s) {
    const auto date = date_prefix(s);
    int hh, mm, ss;
    if (!date || s.size() < 20 || s[10] != 'T' || !digits(s, 11, 2, hh) || s[13] != ':' || !digits(s, 14, 2, mm) ||
        s[16] != ':' || !digits(s, 17, 2, ss)) {
        return std::nullopt;
    }
    if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;

    std::size_t pos = 19;
    if (s[pos] == '.') {
        ++pos;
        const std::size_t start = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == start) return std::nullopt;
        // Fractional seconds are accepted but must be zero: facts are hourly.
        for (std::size_t i = start; i < pos; ++i) {
            if (s[i] != '0') return std::nullopt;
        }
    }
    int offset_minutes = 0;
    if (pos < s.size() && s[pos] == 'Z') {
        ++pos;
    } else if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) {
        int oh, om;
        if (!digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' || !digits(s, pos + 4, 2, om) ||
            oh > 23 || om > 59) {
            return std::nullopt;
        }
        offset_minutes = (s[pos] == '+' ? 1 : -1) * (oh * 60 + om);
        pos += 6;
    } else {
        return std::nullopt;
    }
    if (pos != s.size()) return std::nullopt;

    const sys_seconds local{std::chrono::sys_days{*date} + std::chrono::hours{hh} + std::chrono::minutes{mm} +
                            std::chrono::seconds{ss}};
    return local - std::chrono::minutes{offset_minutes};
}

std::string format_utc(sys_seconds t) {
    const auto day_start = std::chrono::floor<std::chrono::days>(t);
    const Date d{day_start};
    const auto secs = (t - day_start).count();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02lld:%02lld:%02lldZ", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()),
                  static_cast<long long>(secs / 3600), static_cast<long long>(secs / 60 % 60),
                  static_cast<long long>(secs % 60));
    return buf;
}

std::string format_date(const Date& d) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                  static_cast<unsigned>(d.day()));
    return buf;
}

namespace {

// Signed [+-]hh[:mm[:ss]] in seconds; advances pos.
std::optional<long> parse_offset(const std::string& s, std::size_t& pos) {
    int sign = 1;
    if (pos < s.size() && (s[pos] == '+' || s[pos] == '-')) sign = s[pos++] == '-' ? -1 : 1;
    long total = 0;
    for (int part = 0; part < 3; ++part) {
        if (part > 0) {
            if (pos >= s.size() || s[pos] != ':') break;
            ++pos;
        }
        const std::size_t start = pos;
        long v = 0;
        while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) v = v * 10 + (s[pos++] - '0');
        if (pos == start || pos - start > 2) return std::nullopt;
        total += v * (part == 0 ? 3600 : part == 1 ? 60 : 1);
    }
    return sign * total;
}

bool skip_name(const std::string& s, std::size_t& pos) {
    const std::size_t start = pos;
    if (pos < s.size() && s[pos] == '<') {
        pos = s.find('>', pos);
        if (pos == std::string::npos) return false;
        ++pos;
        return pos - start > 2;
    }
    while (pos < s.size() && std::isalpha(static_cast<unsigned char>(s[pos]))) ++pos;
    return pos - start >= 3;
}

std::string boost_offset(long seconds) {
    const long a = std::labs(seconds);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%c%02ld:%02ld:%02ld", seconds < 0 ? '-' : '+', a / 3600, a / 60 % 60, a % 60);
    return buf;
}

// POSIX offsets count hours west of Greenwich and give the DST offset
// absolutely; Boost counts east and wants the DST shift as a delta.
std::optional<std::string> posix_to_boost(const std::string& spec) {
    std::size_t pos = 0;
    if (!skip_name(spec, pos)) return std::nullopt;
    const auto std_west = parse_offset(spec, pos);
    if (!std_west) return std::nullopt;
    std::string out = "STD" + boost_offset(-*std_west);
    if (pos == spec.size()) return out;
    if (!skip_name(spec, pos)) return std::nullopt;
    long dst_west = *std_west - 3600;
    if (pos < spec.size() && spec[pos] != ',') {
        const auto d = parse_offset(spec, pos);
        if (!d) return std::nullopt;
        dst_west = *d;
    }
    out += "DST" + boost_offset(*std_west - dst_west);
    if (pos == spec.size()) return out + ",M3.2.0,M11.1.0";
    if (spec[pos] != ',') return std::nullopt;
    return out + spec.substr(pos);
}

}  // namespace

struct LocalZone::Rules {
    boost::local_time::time_zone_ptr zone;
};

LocalZone::LocalZone(std::string spec) : spec_(std::move(spec)) {
    const auto posix = posix_to_boost((spec_ == "UTC" || spec_ == "Z") ? "UTC0" : spec_);
    try {
        if (!posix) throw std::invalid_argument("not a POSIX TZ rule");
        auto rules = std::make_shared<Rules>();
        rules->zone = boost::local_time::time_zone_ptr(new boost::local_time::posix_time_zone(*posix));
        rules_ = std::move(rules);
    } catch (const std::exception& e) {
        throw Error(ErrorKind::invalid_argument, "invalid_time_zone",
                    "cannot parse time zone '" + spec_ + "': " + e.what());
    }
}

LocalFields LocalZone::to_local(sys_seconds t) const {
    namespace pt = boost::posix_time;
    const pt::ptime utc = pt::from_time_t(static_cast<std::time_t>(t.time_since_epoch().count()));
    const boost::local_time::local_date_time ldt(utc, rules_->zone);
    const pt::ptime local = ldt.local_time();
    const auto ymd = local.date().year_month_day();
    const Date date{std::chrono::year{static_cast<int>(ymd.year)}, std::chrono::month{ymd.month.as_number()},
                    std::chrono::day{ymd.day.as_number()}};
    return LocalFields{date, static_cast<int>(local.time_of_day().hours()),
                       std::chrono::weekday{std::chrono::sys_days{date}}.c_encoding()};
}

sys_seconds LocalZone::start_of_day(const Date& d) const {
    namespace pt = boost::posix_time;
    namespace lt = boost::local_time;
    const boost::gregorian::date day(static_cast<unsigned short>(static_cast<int>(d.year())),
                                     static_cast<unsigned short>(static_cast<unsigned>(d.month())),
                                     static_cast<unsigned short>(static_cast<unsigned>(d.day())));
    const lt::local_date_time ldt(day, pt::time_duration(0, 0, 0), rules_->zone,
                                  lt::local_date_time::NOT_DATE_TIME_ON_ERROR);
    pt::ptime utc;
    if (ldt.is_not_a_date_time()) {
        // Midnight skipped by a DST jump: take the first instant of the day.
        const lt::local_date_time later(day, pt::time_duration(1, 0, 0), rules_->zone,
                                        lt::local_date_time::NOT_DATE_TIME_ON_ERROR);
        utc = later.utc_time();
    } else {
        utc = ldt.utc_time();
    }
    const pt::ptime epoch(boost::gregorian::date(1970, 1, 1));
    return sys_seconds{std::chrono::seconds{(utc - epoch).total_seconds()}};
}

}  // namespace segsys::timeutil
