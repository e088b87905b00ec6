#pragma once

#include <charconv>
#include <chrono>
#include <compare>
#include <cstdio>
#include <string>
#include <string_view>
#include <tuple>

#include "errors.hpp"

namespace ensimp {

/// Calendar date parsed from and printed as ISO-8601 `YYYY-MM-DD`.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::year_month_day ymd) : ymd_(ymd) {}

    static Date parse(std::string_view text) {
        auto bad = [&] { return ParseError("invalid ISO-8601 date '" + std::string(text) + "'"); };
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
            throw bad();
        }
        auto field = [&](std::size_t pos, std::size_t len) {
            int v = 0;
            const char* first = text.data() + pos;
            const auto [ptr, ec] = std::from_chars(first, first + len, v);
            if (ec != std::errc{} || ptr != first + len) {
                throw bad();
            }
            return v;
        };
        const std::chrono::year_month_day ymd{std::chrono::year{field(0, 4)},
                                              std::chrono::month{static_cast<unsigned>(field(5, 2))},
                                              std::chrono::day{static_cast<unsigned>(field(8, 2))}};
        if (!ymd.ok()) {
            throw bad();
        }
        return Date(ymd);
    }

    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd_.year()),
                      static_cast<unsigned>(ymd_.month()), static_cast<unsigned>(ymd_.day()));
        return buf;
    }

    std::chrono::sys_days days() const { return std::chrono::sys_days{ymd_}; }

    friend bool operator==(const Date& a, const Date& b) { return a.ymd_ == b.ymd_; }
    friend std::strong_ordering operator<=>(const Date& a, const Date& b) {
        return a.days().time_since_epoch().count() <=> b.days().time_since_epoch().count();
    }

private:
    std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::January,
                                     std::chrono::day{1}};
};

/// One forecasting task: where, when it was issued, how far ahead, and the
/// date the target refers to.
struct TaskKey {
    Date forecast_date;
    std::string location;
    int horizon = 1;
    Date target_end_date;

    void validate() const {
        if (horizon < 1) {
            throw ValidationError("horizon must be >= 1, got " + std::to_string(horizon));
        }
        if (target_end_date < forecast_date) {
            throw ValidationError("target_end_date " + target_end_date.str() +
                                  " precedes forecast_date " + forecast_date.str());
        }
    }

    std::string str() const {
        return forecast_date.str() + "/" + location + "/h" + std::to_string(horizon) + "/" +
               target_end_date.str();
    }

    friend bool operator==(const TaskKey&, const TaskKey&) = default;
    friend std::strong_ordering operator<=>(const TaskKey& a, const TaskKey& b) {
        if (auto c = a.forecast_date <=> b.forecast_date; c != 0) return c;
        if (auto c = a.location <=> b.location; c != 0) return c;
        if (auto c = a.horizon <=> b.horizon; c != 0) return c;
        return a.target_end_date <=> b.target_end_date;
    }
};

} // namespace ensimp
