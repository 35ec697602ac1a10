#include "edg/time.hpp"

#include <cctype>
#include <cstdio>

#include "edg/errors.hpp"

namespace edg {

namespace {

using namespace std::chrono;

bool read_int(std::string_view s, std::size_t pos, std::size_t width, int& out) {
    if (pos + width > s.size()) return false;
    int v = 0;
    for (std::size_t i = pos; i < pos + width; ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return false;
        v = v * 10 + (s[i] - '0');
    }
    out = v;
    return true;
}

year_month_day parse_ymd(std::string_view s) {
    int y = 0, m = 0, d = 0;
    if (s.size() < 10 || s[4] != '-' || s[7] != '-' || !read_int(s, 0, 4, y) || !read_int(s, 5, 2, m) ||
        !read_int(s, 8, 2, d))
        throw InvalidArgument("invalid ISO 8601 date '" + std::string(s) + "'");
    const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) throw InvalidArgument("invalid calendar date '" + std::string(s) + "'");
    return ymd;
}

}  // namespace

Date Date::parse(std::string_view s) {
    if (s.size() != 10) throw InvalidArgument("invalid ISO 8601 date '" + std::string(s) + "'");
    return Date(parse_ymd(s));
}

std::string Date::to_string() const {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd_.year()),
                  static_cast<unsigned>(ymd_.month()), static_cast<unsigned>(ymd_.day()));
    return buf;
}

Timestamp Timestamp::parse(std::string_view s) {
    const auto bad = [&] { return InvalidArgument("invalid ISO 8601 timestamp '" + std::string(s) + "'"); };
    const year_month_day ymd = parse_ymd(s);
    sys_seconds t = sys_days{ymd};
    if (s.size() == 10) return Timestamp(t);

    if (s[10] != 'T' && s[10] != ' ') throw bad();
    int hh = 0, mm = 0, ss = 0;
    if (!read_int(s, 11, 2, hh) || s.size() < 16 || s[13] != ':' || !read_int(s, 14, 2, mm)) throw bad();
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        if (!read_int(s, pos + 1, 2, ss)) throw bad();
        pos += 3;
        // fractional seconds are truncated
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
    }
    const std::string_view zone = s.substr(pos);
    if (!(zone.empty() || zone == "Z" || zone == "+00:00")) throw bad();
    if (hh > 23 || mm > 59 || ss > 60) throw bad();
    t += hours{hh} + minutes{mm} + seconds{ss};
    return Timestamp(t);
}

Timestamp Timestamp::now() { return Timestamp(floor<seconds>(system_clock::now())); }

Date Timestamp::date() const { return Date(year_month_day{floor<days>(t_)}); }

std::string Timestamp::to_string() const {
    const auto day_start = floor<days>(t_);
    const hh_mm_ss<seconds> hms{t_ - day_start};
    char buf[32];
    std::snprintf(buf, sizeof buf, "%sT%02d:%02d:%02dZ", date().to_string().c_str(),
                  static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                  static_cast<int>(hms.seconds().count()));
    return buf;
}

}  // namespace edg
