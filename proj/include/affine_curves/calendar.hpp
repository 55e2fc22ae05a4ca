#pragma once

// Dates, business-day calendar, overnight day-count weights, compounding and
// the rate/yield transform.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "affine_curves/error.hpp"
#include "affine_curves/pricing.hpp"

namespace affine_curves {

using Date = std::chrono::sys_days;

inline Date make_date(int y, unsigned m, unsigned d) {
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw InputError("invalid calendar date");
    return Date(ymd);
}

/// Parses YYYY-MM-DD.
inline Date parse_date(std::string_view s) {
    int y = 0;
    unsigned m = 0, d = 0;
    char tail = 0;
    const std::string buf(s);
    if (buf.size() != 10 || buf[4] != '-' || buf[7] != '-' ||
        std::sscanf(buf.c_str(), "%4d-%2u-%2u%c", &y, &m, &d, &tail) != 3)
        throw InputError("malformed date '" + buf + "'");
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw InputError("invalid date '" + buf + "'");
    return Date(ymd);
}

inline std::string format_date(Date d) {
    const std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

inline int days_between(Date a, Date b) { return static_cast<int>((b - a).count()); }

/// ACT/360 year fraction.
inline double year_fraction(Date a, Date b) { return days_between(a, b) / 360.0; }

inline Date first_of_month(int y, unsigned m) { return make_date(y, m, 1); }

inline Date add_months(Date first, int n) {
    const std::chrono::year_month_day ymd{first};
    const auto ym = std::chrono::year_month{ymd.year(), ymd.month()} + std::chrono::months{n};
    return Date(ym / std::chrono::day{1});
}

/// Weekends plus an optional explicit holiday list.
class Calendar {
public:
    Calendar() = default;
    explicit Calendar(std::set<Date> holidays) : holidays_(std::move(holidays)) {}

    /// One YYYY-MM-DD per line; blank lines and lines starting with '#' are skipped.
    static Calendar load(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw InputError("cannot open holiday file " + path);
        std::set<Date> h;
        std::string line;
        std::size_t row = 0;
        while (std::getline(in, line)) {
            ++row;
            while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
            if (line.empty() || line[0] == '#') continue;
            try {
                h.insert(parse_date(line));
            } catch (const InputError& e) {
                throw ParseError(e.what(), row, 1);
            }
        }
        return Calendar(std::move(h));
    }

    bool is_business_day(Date d) const {
        const std::chrono::weekday wd{d};
        if (wd == std::chrono::Saturday || wd == std::chrono::Sunday) return false;
        return !holidays_.contains(d);
    }

    /// Latest business day on or before d.
    Date previous_or_same(Date d) const {
        while (!is_business_day(d)) d -= std::chrono::days{1};
        return d;
    }

    /// First business day strictly after d.
    Date next_business_day(Date d) const {
        do d += std::chrono::days{1};
        while (!is_business_day(d));
        return d;
    }

    /// Business days in [from, to).
    std::vector<Date> business_days(Date from, Date to) const {
        std::vector<Date> out;
        for (Date d = from; d < to; d += std::chrono::days{1})
            if (is_business_day(d)) out.push_back(d);
        return out;
    }

    /// The first n business days on or after `from`.
    std::vector<Date> business_days_from(Date from, std::size_t n) const {
        std::vector<Date> out;
        out.reserve(n);
        for (Date d = from; out.size() < n; d += std::chrono::days{1})
            if (is_business_day(d)) out.push_back(d);
        return out;
    }

    const std::set<Date>& holidays() const { return holidays_; }

private:
    std::set<Date> holidays_;
};

/// Weight of one overnight fixing inside an accrual period.
struct DatedWeight {
    Date fixing_date;
    double weight = 0.0;
};

/// Fixings and ACT/360 weights covering the calendar days of [from, to). A
/// non-business day carries the preceding business day's fixing, so a Friday
/// inside the period gets 3/360. Weights sum to (to - from)/360.
inline std::vector<DatedWeight> day_count_weights(const Calendar& cal, Date from, Date to) {
    std::vector<DatedWeight> out;
    int run = 0;
    Date current{};
    for (Date d = from; d < to; d += std::chrono::days{1}) {
        const Date f = cal.previous_or_same(d);
        if (run > 0 && f != current) {
            out.push_back({current, run / 360.0});
            run = 0;
        }
        current = f;
        ++run;
    }
    if (run > 0) out.push_back({current, run / 360.0});
    return out;
}

/// (prod(1 + d_i R_i) - 1) / sum d_i.
inline double compound_fixings(std::span<const Fixing> fixings) {
    if (fixings.empty()) throw InputError("no fixings to compound");
    double total = 0.0;
    for (const auto& f : fixings) total += f.weight;
    return std::expm1(log_compounded_factor(fixings)) / total;
}

/// sum d_i R_i / sum d_i.
inline double average_fixings(std::span<const Fixing> fixings) {
    if (fixings.empty()) throw InputError("no fixings to average");
    double total = 0.0;
    for (const auto& f : fixings) total += f.weight;
    return weighted_sum(fixings) / total;
}

/// Continuously compounded equivalent of a simple rate: log(1 + tau L) / tau.
inline double yield_from_rate(double rate, double accrual) { return std::log1p(accrual * rate) / accrual; }

inline double rate_from_yield(double y, double accrual) { return std::expm1(accrual * y) / accrual; }

}  // namespace affine_curves
