#pragma once

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

namespace segsys::timeutil {

using Date = std::chrono::year_month_day;
using std::chrono::sys_seconds;

// ISO-8601 instant with an explicit offset: YYYY-MM-DDTHH:MM:SS[.fff](Z|+HH:MM|-HH:MM).
std::optional<sys_seconds> parse_timestamp(std::string_view text);
// YYYY-MM-DD
std::optional<Date> parse_date(std::string_view text);

std::string format_utc(sys_seconds t);  // YYYY-MM-DDTHH:MM:SSZ
std::string format_date(const Date& d);  // YYYY-MM-DD

struct LocalFields {
    Date date;
    int hour;         // 0-23
    unsigned weekday;  // 0 = Sunday
    bool weekend() const { return weekday == 0 || weekday == 6; }
};

// Deployment-local civil time. Accepts "UTC" or a POSIX TZ rule such as
// "CET-1CEST,M3.5.0,M10.5.0/3". Facts are stored in UTC; hour-of-day and
// calendar day are derived here because load patterns follow local time.
class LocalZone {
public:
    explicit LocalZone(std::string spec = "UTC");

    LocalFields to_local(sys_seconds t) const;
    // UTC instant of local midnight starting `d`.
    sys_seconds start_of_day(const Date& d) const;

    const std::string& spec() const noexcept { return spec_; }

private:
    struct Rules;
    std::string spec_;
    std::shared_ptr<const Rules> rules_;
};

}  // namespace segsys::timeutil
