#pragma once

// Observation panels: column descriptors, contract calendars, CSV I/O.
//
// CSV layout: a header row whose first cell is "date" followed by one column
// descriptor per cell, then one row per observation date (YYYY-MM-DD, strictly
// increasing). An empty cell is a missing quote. Descriptors:
//
//   SOFR1M:2020-03   FF:2020-03   SOFR3M:2020-03   ED:2020-03   explicit contract month
//   SOFR1M:#1  FF:#12  SOFR3M:#2  ED:#4                         k-th nearest live contract
//   LIBOR:3M  LIBOR:6M  REPO:3M  REPO:6M                        spot rates
//   FIX:SOFR  FIX:EFFR                                          overnight fixings of that date
//
// One-month contracts (SOFR1M, FF) accrue over the calendar month. Three-month
// contracts (SOFR3M, ED) start on the first of the month and run 91 days.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "affine_curves/calendar.hpp"
#include "affine_curves/error.hpp"
#include "affine_curves/pricing.hpp"

namespace affine_curves {

enum class ColumnKind { Sofr1m, Sofr3m, FedFunds, Eurodollar, Libor, Repo, FixingSofr, FixingEffr };

inline constexpr int kThreeMonthDays = 91;

struct ColumnDescriptor {
    ColumnKind kind = ColumnKind::Libor;
    int year = 0;
    unsigned month = 0;
    int rolling = 0;       // k >= 1 selects the k-th nearest contract; 0 for explicit months
    int tenor_months = 0;  // spot rates only

    bool is_futures() const {
        return kind == ColumnKind::Sofr1m || kind == ColumnKind::Sofr3m || kind == ColumnKind::FedFunds ||
               kind == ColumnKind::Eurodollar;
    }
    bool is_spot() const { return kind == ColumnKind::Libor || kind == ColumnKind::Repo; }
    bool is_fixing() const { return kind == ColumnKind::FixingSofr || kind == ColumnKind::FixingEffr; }
    bool is_one_month() const { return kind == ColumnKind::Sofr1m || kind == ColumnKind::FedFunds; }

    double tenor_years() const { return tenor_months / 12.0; }

    std::string to_string() const {
        char buf[32];
        switch (kind) {
            case ColumnKind::Libor: std::snprintf(buf, sizeof buf, "LIBOR:%dM", tenor_months); return buf;
            case ColumnKind::Repo: std::snprintf(buf, sizeof buf, "REPO:%dM", tenor_months); return buf;
            case ColumnKind::FixingSofr: return "FIX:SOFR";
            case ColumnKind::FixingEffr: return "FIX:EFFR";
            default: break;
        }
        const char* name = kind == ColumnKind::Sofr1m   ? "SOFR1M"
                           : kind == ColumnKind::Sofr3m ? "SOFR3M"
                           : kind == ColumnKind::FedFunds ? "FF"
                                                          : "ED";
        if (rolling > 0)
            std::snprintf(buf, sizeof buf, "%s:#%d", name, rolling);
        else
            std::snprintf(buf, sizeof buf, "%s:%04d-%02u", name, year, month);
        return buf;
    }

    static ColumnDescriptor parse(std::string_view s) {
        const auto colon = s.find(':');
        if (colon == std::string_view::npos) throw InputError("column descriptor without ':' in '" + std::string(s) + "'");
        const std::string_view head = s.substr(0, colon);
        const std::string_view rest = s.substr(colon + 1);
        ColumnDescriptor d;
        auto bad = [&]() { return InputError("unrecognized column descriptor '" + std::string(s) + "'"); };
        if (head == "LIBOR" || head == "REPO") {
            d.kind = head == "LIBOR" ? ColumnKind::Libor : ColumnKind::Repo;
            if (rest == "3M")
                d.tenor_months = 3;
            else if (rest == "6M")
                d.tenor_months = 6;
            else
                throw bad();
            return d;
        }
        if (head == "FIX") {
            if (rest == "SOFR")
                d.kind = ColumnKind::FixingSofr;
            else if (rest == "EFFR")
                d.kind = ColumnKind::FixingEffr;
            else
                throw bad();
            return d;
        }
        if (head == "SOFR1M")
            d.kind = ColumnKind::Sofr1m;
        else if (head == "SOFR3M")
            d.kind = ColumnKind::Sofr3m;
        else if (head == "FF")
            d.kind = ColumnKind::FedFunds;
        else if (head == "ED")
            d.kind = ColumnKind::Eurodollar;
        else
            throw bad();
        if (!rest.empty() && rest[0] == '#') {
            int k = 0;
            const auto r = std::from_chars(rest.data() + 1, rest.data() + rest.size(), k);
            if (r.ec != std::errc() || r.ptr != rest.data() + rest.size() || k < 1) throw bad();
            d.rolling = k;
            return d;
        }
        if (rest.size() != 7 || rest[4] != '-') throw bad();
        int y = 0, m = 0;
        const auto ry = std::from_chars(rest.data(), rest.data() + 4, y);
        const auto rm = std::from_chars(rest.data() + 5, rest.data() + 7, m);
        if (ry.ec != std::errc() || ry.ptr != rest.data() + 4 || rm.ec != std::errc() || rm.ptr != rest.data() + 7 ||
            m < 1 || m > 12)
            throw bad();
        d.year = y;
        d.month = static_cast<unsigned>(m);
        return d;
    }

    bool operator==(const ColumnDescriptor&) const = default;
};

/// Accrual period of a futures contract in calendar dates.
struct ContractTerms {
    Date S;
    Date T;
};

namespace detail {

inline ContractTerms terms_for_month(ColumnKind kind, Date first) {
    if (kind == ColumnKind::Sofr1m || kind == ColumnKind::FedFunds) return {first, add_months(first, 1)};
    return {first, first + std::chrono::days{kThreeMonthDays}};
}

inline bool is_live(ColumnKind kind, const ContractTerms& c, Date d) {
    // Eurodollar futures settle at S; the others trade until the end of accrual.
    if (kind == ColumnKind::Eurodollar) return c.S >= d;
    return c.T > d;
}

}  // namespace detail

/// Concrete contract a futures column refers to on date d, or nullopt when an
/// explicit contract has expired (or for non-futures columns).
inline std::optional<ContractTerms> resolve_contract(const ColumnDescriptor& c, Date d) {
    if (!c.is_futures()) return std::nullopt;
    if (c.rolling == 0) {
        const auto terms = detail::terms_for_month(c.kind, first_of_month(c.year, c.month));
        if (!detail::is_live(c.kind, terms, d)) return std::nullopt;
        return terms;
    }
    const std::chrono::year_month_day ymd{d};
    const Date this_month = first_of_month(static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
    int found = 0;
    if (c.is_one_month()) {
        for (int k = 0;; ++k) {
            const auto terms = detail::terms_for_month(c.kind, add_months(this_month, k));
            if (detail::is_live(c.kind, terms, d) && ++found == c.rolling) return terms;
        }
    }
    const int back = static_cast<int>(static_cast<unsigned>(ymd.month()) % 3) + 3;  // previous Mar/Jun/Sep/Dec
    const Date start = add_months(this_month, -back);
    for (int k = 0;; k += 3) {
        const auto terms = detail::terms_for_month(c.kind, add_months(start, k));
        // Eurodollar rolling columns skip the contract settling today.
        const bool live = c.kind == ColumnKind::Eurodollar ? terms.S > d : detail::is_live(c.kind, terms, d);
        if (live && ++found == c.rolling) return terms;
    }
}

/// Column set of a rolling-contract panel.
struct ContractLadder {
    int sofr1m = 5;
    int sofr3m = 5;
    int fedfunds = 12;
    int eurodollar = 4;
    std::vector<int> libor_tenors{3, 6};
    std::vector<int> repo_tenors{3, 6};

    void validate() const {
        if (sofr1m < 1 || sofr3m < 1 || fedfunds < 1 || eurodollar < 1)
            throw InputError("contract ladder counts must be >= 1");
        for (int t : libor_tenors)
            if (t != 3 && t != 6) throw InputError("LIBOR tenor must be 3 or 6 months");
        for (int t : repo_tenors)
            if (t != 3 && t != 6) throw InputError("repo tenor must be 3 or 6 months");
    }

    std::vector<ColumnDescriptor> columns() const {
        validate();
        std::vector<ColumnDescriptor> out;
        auto roll = [&](ColumnKind k, int n) {
            for (int i = 1; i <= n; ++i) out.push_back({k, 0, 0, i, 0});
        };
        roll(ColumnKind::Sofr1m, sofr1m);
        roll(ColumnKind::Sofr3m, sofr3m);
        roll(ColumnKind::FedFunds, fedfunds);
        roll(ColumnKind::Eurodollar, eurodollar);
        for (int t : libor_tenors) out.push_back({ColumnKind::Libor, 0, 0, 0, t});
        for (int t : repo_tenors) out.push_back({ColumnKind::Repo, 0, 0, 0, t});
        out.push_back({ColumnKind::FixingSofr});
        out.push_back({ColumnKind::FixingEffr});
        return out;
    }
};

/// Quote conventions of a panel file. Values are stored internally as
/// decimal rates.
struct PanelSchema {
    bool percent = false;               // every value is quoted in percent
    bool futures_price_quoted = false;  // futures quoted as 100 - rate(%)
};

inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

inline ColumnKind fixing_kind_for(ColumnKind futures) {
    return futures == ColumnKind::FedFunds ? ColumnKind::FixingEffr : ColumnKind::FixingSofr;
}

struct ObservationPanel {
    std::vector<Date> dates;
    std::vector<ColumnDescriptor> columns;
    std::vector<double> values;  // row-major dates x columns; NaN marks a missing quote
    Calendar calendar;

    std::size_t rows() const { return dates.size(); }
    std::size_t cols() const { return columns.size(); }
    double value(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
    double& value(std::size_t i, std::size_t j) { return values[i * cols() + j]; }

    std::optional<std::size_t> find_column(const ColumnDescriptor& d) const {
        for (std::size_t j = 0; j < cols(); ++j)
            if (columns[j] == d) return j;
        return std::nullopt;
    }

    std::optional<std::size_t> row_of(Date d) const {
        const auto it = std::lower_bound(dates.begin(), dates.end(), d);
        if (it == dates.end() || *it != d) return std::nullopt;
        return static_cast<std::size_t>(it - dates.begin());
    }

    /// Overnight fixing published for business day d, if present.
    std::optional<double> fixing(ColumnKind fixing_kind, Date d) const {
        const auto j = find_column({fixing_kind});
        if (!j) return std::nullopt;
        const auto i = row_of(d);
        if (!i) return std::nullopt;
        const double v = value(*i, *j);
        if (is_missing(v)) return std::nullopt;
        return v;
    }

    /// Fixings with day-count weights covering [S, d); nullopt if any is absent.
    std::optional<std::vector<Fixing>> realized_fixings(ColumnKind fixing_kind, Date S, Date d) const {
        std::vector<Fixing> out;
        for (const auto& w : day_count_weights(calendar, S, d)) {
            const auto f = fixing(fixing_kind, w.fixing_date);
            if (!f) return std::nullopt;
            out.push_back({*f, w.weight});
        }
        return out;
    }

    /// Checks the panel invariants; errors carry 1-based file coordinates
    /// (header is row 1, the date column is column 1).
    void validate() const {
        if (values.size() != rows() * cols()) throw InputError("panel value matrix has the wrong size");
        for (std::size_t i = 1; i < rows(); ++i)
            if (!(dates[i] > dates[i - 1])) throw ParseError("dates must be strictly increasing", i + 2, 1);
        for (std::size_t i = 0; i < rows(); ++i) {
            for (std::size_t j = 0; j < cols(); ++j) {
                const double v = value(i, j);
                if (is_missing(v)) continue;
                if (!std::isfinite(v)) throw ParseError("non-finite value", i + 2, j + 2);
                const auto& c = columns[j];
                if (!c.is_futures()) continue;
                const auto terms = resolve_contract(c, dates[i]);
                if (!terms) throw ParseError("quote for an expired contract " + c.to_string(), i + 2, j + 2);
                if (c.kind != ColumnKind::Eurodollar && terms->S < dates[i] &&
                    !realized_fixings(fixing_kind_for(c.kind), terms->S, dates[i]))
                    throw ParseError("in-accrual contract " + c.to_string() + " lacks realized fixings", i + 2,
                                     j + 2);
            }
        }
    }

    /// Copy with the given columns, in the given order.
    ObservationPanel select_columns(const std::vector<std::size_t>& idx) const {
        ObservationPanel out;
        out.dates = dates;
        out.calendar = calendar;
        for (std::size_t j : idx) out.columns.push_back(columns.at(j));
        out.values.reserve(rows() * idx.size());
        for (std::size_t i = 0; i < rows(); ++i)
            for (std::size_t j : idx) out.values.push_back(value(i, j));
        return out;
    }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cell);
            cell.clear();
        } else if (ch != '\r') {
            cell.push_back(ch);
        }
    }
    out.push_back(cell);
    for (auto& c : out) {
        const auto b = c.find_first_not_of(" \t");
        const auto e = c.find_last_not_of(" \t");
        c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
    }
    return out;
}

inline double parse_number(const std::string& s, std::size_t row, std::size_t col) {
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    const auto r = std::from_chars(first, s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v))
        throw ParseError("malformed number '" + s + "'", row, col);
    return v;
}

}  // namespace detail

inline ObservationPanel read_panel(std::istream& in, const PanelSchema& schema = {}, Calendar calendar = {}) {
    ObservationPanel p;
    p.calendar = std::move(calendar);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty panel file", 1, 0);
    const auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "date") throw ParseError("header must start with 'date'", 1, 1);
    for (std::size_t j = 1; j < header.size(); ++j) {
        try {
            p.columns.push_back(ColumnDescriptor::parse(header[j]));
        } catch (const InputError& e) {
            throw ParseError(e.what(), 1, j + 1);
        }
        for (std::size_t k = 0; k + 1 < p.columns.size(); ++k)
            if (p.columns[k] == p.columns.back()) throw ParseError("duplicate column " + header[j], 1, j + 1);
    }
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("expected " + std::to_string(header.size()) + " cells, found " +
                                 std::to_string(cells.size()),
                             row, 0);
        try {
            p.dates.push_back(parse_date(cells[0]));
        } catch (const InputError& e) {
            throw ParseError(e.what(), row, 1);
        }
        if (p.dates.size() > 1 && !(p.dates.back() > p.dates[p.dates.size() - 2]))
            throw ParseError("dates must be strictly increasing", row, 1);
        for (std::size_t j = 1; j < cells.size(); ++j) {
            if (cells[j].empty()) {
                p.values.push_back(kMissing);
                continue;
            }
            double v = detail::parse_number(cells[j], row, j + 1);
            const auto& c = p.columns[j - 1];
            if (c.is_futures() && schema.futures_price_quoted)
                v = (100.0 - v) / 100.0;
            else if (schema.percent)
                v /= 100.0;
            p.values.push_back(v);
        }
    }
    p.validate();
    return p;
}

inline ObservationPanel load_panel(const std::string& path, const PanelSchema& schema = {}, Calendar calendar = {}) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open panel file " + path);
    return read_panel(in, schema, std::move(calendar));
}

/// Writes decimal rates with round-trip precision.
inline void write_panel(std::ostream& out, const ObservationPanel& p) {
    out << "date";
    for (const auto& c : p.columns) out << ',' << c.to_string();
    out << '\n';
    char buf[32];
    for (std::size_t i = 0; i < p.rows(); ++i) {
        out << format_date(p.dates[i]);
        for (std::size_t j = 0; j < p.cols(); ++j) {
            out << ',';
            const double v = p.value(i, j);
            if (is_missing(v)) continue;
            std::snprintf(buf, sizeof buf, "%.17g", v);
            out << buf;
        }
        out << '\n';
    }
}

inline void write_panel(const std::string& path, const ObservationPanel& p) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write panel file " + path);
    write_panel(out, p);
    if (!out) throw InputError("failed writing panel file " + path);
}

}  // namespace affine_curves
