#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "rollcast/errors.hpp"

namespace rollcast {

/// Calendar dates are day-resolution time points (no timezone semantics;
/// all times are the exchange's local session clock).
using Date = std::chrono::sys_days;

inline Date make_date(int year, unsigned month, unsigned day) {
    std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                    std::chrono::day{day}};
    if (!ymd.ok()) throw ParseError("invalid calendar date");
    return Date{ymd};
}

inline std::optional<Date> try_parse_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    auto digits = [](std::string_view t) {
        for (char c : t)
            if (c < '0' || c > '9') return false;
        return true;
    };
    if (!digits(s.substr(0, 4)) || !digits(s.substr(5, 2)) || !digits(s.substr(8, 2)))
        return std::nullopt;
    int y = std::stoi(std::string(s.substr(0, 4)));
    unsigned m = static_cast<unsigned>(std::stoi(std::string(s.substr(5, 2))));
    unsigned d = static_cast<unsigned>(std::stoi(std::string(s.substr(8, 2))));
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                    std::chrono::day{d}};
    if (!ymd.ok()) return std::nullopt;
    return Date{ymd};
}

/// Parses an ISO-8601 date (YYYY-MM-DD). Throws ParseError on anything else.
inline Date parse_date(std::string_view s) {
    auto d = try_parse_date(s);
    if (!d) throw ParseError("invalid date '" + std::string(s) + "', expected YYYY-MM-DD");
    return *d;
}

inline std::string to_string(Date d) {
    std::chrono::year_month_day ymd{d};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

/// 0 = January .. 11 = December.
inline int month_index(Date d) {
    return static_cast<int>(unsigned(std::chrono::year_month_day{d}.month())) - 1;
}

/// 0-based day of month (0..30).
inline int day_of_month_index(Date d) {
    return static_cast<int>(unsigned(std::chrono::year_month_day{d}.day())) - 1;
}

/// ISO weekday index shifted to 0 = Monday .. 6 = Sunday.
inline int weekday_index(Date d) {
    return static_cast<int>(std::chrono::weekday{d}.iso_encoding()) - 1;
}

/// Parses "HH:MM" into minutes after midnight.
inline std::chrono::minutes parse_time_of_day(std::string_view s) {
    if (s.size() != 5 || s[2] != ':') throw ParseError("invalid time '" + std::string(s) + "'");
    auto dig = [&](size_t i) {
        char c = s[i];
        if (c < '0' || c > '9') throw ParseError("invalid time '" + std::string(s) + "'");
        return c - '0';
    };
    int h = dig(0) * 10 + dig(1);
    int m = dig(3) * 10 + dig(4);
    if (h > 23 || m > 59) throw ParseError("invalid time '" + std::string(s) + "'");
    return std::chrono::minutes{h * 60 + m};
}

inline std::string time_of_day_string(std::chrono::minutes m) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d:%02d", int(m.count()) / 60, int(m.count()) % 60);
    return buf;
}

/// Trading session grid: open/close times, the 15-minute interval width,
/// exchange holidays and the weekend day set. Immutable after construction.
class TradingCalendar {
public:
    TradingCalendar() : TradingCalendar(std::chrono::minutes{9 * 60 + 30}, std::chrono::minutes{16 * 60}) {}

    TradingCalendar(std::chrono::minutes session_open, std::chrono::minutes session_close,
                    std::set<Date> holidays = {}, int interval_minutes = 15,
                    std::set<int> weekend_days = {5, 6})  // 5 = Saturday, 6 = Sunday
        : open_(session_open),
          close_(session_close),
          interval_minutes_(interval_minutes),
          weekend_{} {
        if (interval_minutes_ != 15)
            throw ParseError("interval_minutes is fixed at 15");
        if (close_ <= open_)
            throw ParseError("session_close must be after session_open");
        const int len = static_cast<int>((close_ - open_).count());
        if (len % interval_minutes_ != 0)
            throw ParseError("session length must be a multiple of interval_minutes");
        for (int w : weekend_days) {
            if (w < 0 || w > 6) throw ParseError("weekend day out of range");
            weekend_[static_cast<size_t>(w)] = true;
        }
        if (!weekend_[5] || !weekend_[6])
            throw ParseError("weekend_days must include Saturday and Sunday");
        // Normalize: holidays never overlap the weekend set.
        for (Date d : holidays)
            if (!weekend_[static_cast<size_t>(weekday_index(d))]) holidays_.insert(d);
    }

    std::chrono::minutes session_open() const { return open_; }
    std::chrono::minutes session_close() const { return close_; }
    int interval_minutes() const { return interval_minutes_; }
    const std::set<Date>& holidays() const { return holidays_; }

    int session_minutes() const { return static_cast<int>((close_ - open_).count()); }
    int slots_per_day() const { return session_minutes() / interval_minutes_; }

    /// Start-of-interval clock time for a slot.
    std::chrono::minutes slot_start(int slot) const {
        return open_ + std::chrono::minutes{slot * interval_minutes_};
    }

    /// Hour one-hot geometry: index over the distinct wall-clock hours that
    /// interval start times touch within the session.
    int first_hour() const { return static_cast<int>(open_.count()) / 60; }
    int hour_count() const {
        int last = static_cast<int>(slot_start(slots_per_day() - 1).count()) / 60;
        return last - first_hour() + 1;
    }
    int hour_index(int slot) const {
        return static_cast<int>(slot_start(slot).count()) / 60 - first_hour();
    }
    int minute_segment(int slot) const {
        return (static_cast<int>(slot_start(slot).count()) % 60) / 15;
    }

    bool is_weekend(Date d) const { return weekend_[static_cast<size_t>(weekday_index(d))]; }
    bool is_holiday(Date d) const { return holidays_.count(d) > 0; }
    bool is_trading_day(Date d) const { return !is_weekend(d) && !is_holiday(d); }

    Date next_trading_day(Date d) const {
        do d += std::chrono::days{1};
        while (!is_trading_day(d));
        return d;
    }
    Date prev_trading_day(Date d) const {
        do d -= std::chrono::days{1};
        while (!is_trading_day(d));
        return d;
    }

    /// Next/previous calendar weekday, ignoring holidays. A trading day whose
    /// neighbour differs from this is adjacent to a holiday gap.
    Date next_weekday(Date d) const {
        do d += std::chrono::days{1};
        while (is_weekend(d));
        return d;
    }
    Date prev_weekday(Date d) const {
        do d -= std::chrono::days{1};
        while (is_weekend(d));
        return d;
    }

    bool operator==(const TradingCalendar& other) const {
        return open_ == other.open_ && close_ == other.close_ &&
               interval_minutes_ == other.interval_minutes_ && holidays_ == other.holidays_ &&
               weekend_ == other.weekend_;
    }

private:
    std::chrono::minutes open_;
    std::chrono::minutes close_;
    int interval_minutes_;
    std::set<Date> holidays_;
    std::array<bool, 7> weekend_;
};

/// One 15-minute observation slot: a trading date plus the session slot index.
struct IntervalStamp {
    Date date{};
    int slot = 0;

    auto operator<=>(const IntervalStamp&) const = default;
};

inline std::string to_string(const TradingCalendar& cal, const IntervalStamp& s) {
    return to_string(s.date) + "T" + time_of_day_string(cal.slot_start(s.slot));
}

inline void validate_stamp(const TradingCalendar& cal, const IntervalStamp& s) {
    if (!cal.is_trading_day(s.date))
        throw NonTradingDay(to_string(s.date) + " is not a trading day");
    if (s.slot < 0 || s.slot >= cal.slots_per_day())
        throw NonTradingDay("slot " + std::to_string(s.slot) + " out of session range on " +
                            to_string(s.date));
}

/// Ascending trading days in [start, end]; weekends and holidays excluded.
inline std::vector<Date> trading_days(const TradingCalendar& cal, Date start, Date end) {
    std::vector<Date> out;
    for (Date d = start; d <= end; d += std::chrono::days{1})
        if (cal.is_trading_day(d)) out.push_back(d);
    return out;
}

/// All interval stamps of one trading day, in slot order.
inline std::vector<IntervalStamp> interval_grid(const TradingCalendar& cal, Date day) {
    if (!cal.is_trading_day(day))
        throw NonTradingDay(to_string(day) + " is not a trading day");
    std::vector<IntervalStamp> out;
    out.reserve(static_cast<size_t>(cal.slots_per_day()));
    for (int s = 0; s < cal.slots_per_day(); ++s) out.push_back({day, s});
    return out;
}

/// Calendar indicator features of one interval, stored as group indices.
/// append_row expands them into the fixed-width 0/1 block, so each one-hot
/// group sums to exactly 1 by construction.
struct CalendarFeatures {
    int month = 0;           // 0..11
    int day_of_month = 0;    // 0..30
    int day_of_week = 0;     // 0 = Monday .. 4 = Friday
    int hour = 0;            // 0..hour_count-1
    int minute_segment = 0;  // 0..3 for :00/:15/:30/:45
    bool monday_morning = false;
    bool friday_afternoon = false;
    bool preholiday_afternoon = false;
    bool postholiday_morning = false;

    static int width(const TradingCalendar& cal) { return 12 + 31 + 5 + cal.hour_count() + 4 + 4; }

    void append_row(const TradingCalendar& cal, std::vector<double>& out) const {
        auto one_hot = [&out](int index, int n) {
            for (int i = 0; i < n; ++i) out.push_back(i == index ? 1.0 : 0.0);
        };
        one_hot(month, 12);
        one_hot(day_of_month, 31);
        one_hot(day_of_week, 5);
        one_hot(hour, cal.hour_count());
        one_hot(minute_segment, 4);
        out.push_back(monday_morning ? 1.0 : 0.0);
        out.push_back(friday_afternoon ? 1.0 : 0.0);
        out.push_back(preholiday_afternoon ? 1.0 : 0.0);
        out.push_back(postholiday_morning ? 1.0 : 0.0);
    }

    static std::vector<std::string> column_names(const TradingCalendar& cal) {
        std::vector<std::string> names;
        char buf[32];
        for (int i = 1; i <= 12; ++i) {
            std::snprintf(buf, sizeof(buf), "month_%02d", i);
            names.emplace_back(buf);
        }
        for (int i = 1; i <= 31; ++i) {
            std::snprintf(buf, sizeof(buf), "dom_%02d", i);
            names.emplace_back(buf);
        }
        for (const char* d : {"mon", "tue", "wed", "thu", "fri"})
            names.emplace_back(std::string("dow_") + d);
        for (int h = 0; h < cal.hour_count(); ++h) {
            std::snprintf(buf, sizeof(buf), "hour_%02d", cal.first_hour() + h);
            names.emplace_back(buf);
        }
        for (int m = 0; m < 4; ++m) {
            std::snprintf(buf, sizeof(buf), "minseg_%02d", m * 15);
            names.emplace_back(buf);
        }
        names.emplace_back("monday_morning");
        names.emplace_back("friday_afternoon");
        names.emplace_back("preholiday_afternoon");
        names.emplace_back("postholiday_morning");
        return names;
    }
};

/// Derives all nine indicator groups for a valid stamp.
///
/// Morning means the first half of the session's slot range (slot index below
/// floor(slots_per_day / 2)); afternoon is the rest. Pre-/post-holiday flags
/// fire when the adjacent trading day is not the adjacent calendar weekday,
/// i.e. a holiday widened the gap beyond a plain weekend.
inline CalendarFeatures calendar_features(const TradingCalendar& cal, const IntervalStamp& stamp) {
    validate_stamp(cal, stamp);
    CalendarFeatures f;
    f.month = month_index(stamp.date);
    f.day_of_month = day_of_month_index(stamp.date);
    f.day_of_week = weekday_index(stamp.date);
    f.hour = cal.hour_index(stamp.slot);
    f.minute_segment = cal.minute_segment(stamp.slot);

    const bool morning = stamp.slot < cal.slots_per_day() / 2;
    const bool afternoon = !morning;
    f.monday_morning = (f.day_of_week == 0) && morning;
    f.friday_afternoon = (f.day_of_week == 4) && afternoon;
    f.preholiday_afternoon = afternoon && cal.next_trading_day(stamp.date) != cal.next_weekday(stamp.date);
    f.postholiday_morning = morning && cal.prev_trading_day(stamp.date) != cal.prev_weekday(stamp.date);
    return f;
}

/// Reads a holiday file: one ISO-8601 date per line, '#' comments and blank
/// lines allowed. Weekend dates are dropped during calendar normalization.
inline std::set<Date> load_holiday_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open holiday file '" + path + "'");
    std::set<Date> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        auto e = line.find_last_not_of(" \t\r");
        auto d = try_parse_date(std::string_view(line).substr(b, e - b + 1));
        if (!d)
            throw ParseError(path + ":" + std::to_string(lineno) + ": invalid date line '" +
                             line + "'");
        out.insert(*d);
    }
    return out;
}

}  // namespace rollcast
