#pragma once

#include <chrono>
#include <compare>
#include <string>
#include <string_view>

namespace edg {

// Calendar date, ISO 8601 `YYYY-MM-DD`.
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::year_month_day ymd) : ymd_(ymd) {}

    static Date parse(std::string_view s);  // throws InvalidArgument

    std::chrono::year_month_day ymd() const noexcept { return ymd_; }
    std::string to_string() const;

    friend bool operator==(const Date&, const Date&) = default;
    friend auto operator<=>(const Date&, const Date&) = default;

private:
    std::chrono::year_month_day ymd_{std::chrono::year{1970}, std::chrono::January, std::chrono::day{1}};
};

// UTC instant with seconds precision, ISO 8601 `YYYY-MM-DDTHH:MM:SSZ`.
class Timestamp {
public:
    Timestamp() = default;
    explicit Timestamp(std::chrono::sys_seconds t) : t_(t) {}

    // Accepts `YYYY-MM-DD`, `YYYY-MM-DDTHH:MM[:SS]` with optional `Z` or `+00:00`.
    static Timestamp parse(std::string_view s);  // throws InvalidArgument
    static Timestamp now();

    std::chrono::sys_seconds time() const noexcept { return t_; }
    Date date() const;
    std::string to_string() const;

    friend bool operator==(const Timestamp&, const Timestamp&) = default;
    friend auto operator<=>(const Timestamp&, const Timestamp&) = default;

private:
    std::chrono::sys_seconds t_{};
};

}  // namespace edg
