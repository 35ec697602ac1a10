#include "edg/cpe.hpp"

#include <algorithm>
#include <cctype>

#include "edg/errors.hpp"

namespace edg {

namespace {

constexpr std::string_view kPrefix = "cpe:2.3:";
constexpr std::size_t kFieldCount = 13;

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

// Characters that appear unescaped inside a formatted-string literal.
bool is_plain(char c) { return is_alnum(c) || c == '_' || c == '.' || c == '-'; }

struct Field {
    std::string_view raw;
    std::size_t offset;
};

std::vector<Field> split_fields(std::string_view s) {
    std::vector<Field> fields;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\') {
            ++i;  // skip the escaped character, validated later
            continue;
        }
        if (s[i] == ':') {
            fields.push_back({s.substr(start, i - start), start});
            start = i + 1;
        }
    }
    fields.push_back({s.substr(start), start});
    return fields;
}

AttributeValue decode_value(const Field& f) {
    if (f.raw.empty()) throw MalformedCpe("empty attribute", f.offset);
    if (f.raw == "*") return AttributeValue::any();
    if (f.raw == "-") return AttributeValue::na();

    std::string out;
    out.reserve(f.raw.size());
    for (std::size_t i = 0; i < f.raw.size(); ++i) {
        const char c = f.raw[i];
        if (c == '\\') {
            if (i + 1 >= f.raw.size()) throw MalformedCpe("dangling escape", f.offset + i);
            const char next = f.raw[i + 1];
            if (is_alnum(next) || next < '!' || next > '~')
                throw MalformedCpe("illegal escape", f.offset + i);
            out.push_back(next);
            ++i;
            continue;
        }
        if (c == '*' || c == '?')
            throw MalformedCpe("embedded wildcard not supported", f.offset + i);
        if (!is_plain(c)) throw MalformedCpe("character must be escaped", f.offset + i);
        out.push_back(lower(c));
    }
    return AttributeValue::literal(std::move(out));
}

std::string encode_value(const AttributeValue& v) {
    if (v.is_any()) return "*";
    if (v.is_na()) return "-";
    const std::string& t = v.text();
    if (t == "-") return "\\-";
    std::string out;
    out.reserve(t.size() + 4);
    for (char c : t) {
        if (!is_plain(c)) out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

bool equal_ci(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

bool attribute_matches(const AttributeValue& candidate, const AttributeValue& pattern) {
    switch (pattern.kind()) {
        case AttributeValue::Kind::Any:
            return true;
        case AttributeValue::Kind::Na:
            return candidate.is_na();
        case AttributeValue::Kind::Literal:
            return candidate.is_literal() && equal_ci(candidate.text(), pattern.text());
    }
    return false;
}

std::string_view strip_leading_zeros(std::string_view s) {
    const auto pos = s.find_first_not_of('0');
    return pos == std::string_view::npos ? std::string_view("0") : s.substr(pos);
}

std::weak_ordering compare_segments(const std::string& a, const std::string& b) {
    const bool a_num = !a.empty() && is_digit(a.front());
    const bool b_num = !b.empty() && is_digit(b.front());
    if (a_num && b_num) {
        const auto x = strip_leading_zeros(a);
        const auto y = strip_leading_zeros(b);
        if (x.size() != y.size()) return x.size() <=> y.size();
        const int c = x.compare(y);
        return c < 0 ? std::weak_ordering::less
                     : (c > 0 ? std::weak_ordering::greater : std::weak_ordering::equivalent);
    }
    const int c = a.compare(b);
    return c < 0 ? std::weak_ordering::less
                 : (c > 0 ? std::weak_ordering::greater : std::weak_ordering::equivalent);
}

}  // namespace

AttributeValue AttributeValue::literal(std::string text) {
    std::transform(text.begin(), text.end(), text.begin(), lower);
    return AttributeValue(Kind::Literal, std::move(text));
}

WellFormedName::WellFormedName(Part part, std::string_view vendor, std::string_view product,
                               std::string_view version)
    : part_(part) {
    set(Attribute::Vendor, AttributeValue::literal(std::string(vendor)));
    set(Attribute::Product, AttributeValue::literal(std::string(product)));
    if (!version.empty()) set(Attribute::Version, AttributeValue::literal(std::string(version)));
}

bool WellFormedName::is_concrete() const noexcept {
    return part_ != Part::Any && vendor().is_literal() && product().is_literal();
}

WellFormedName parse_formatted(std::string_view s) {
    if (s.size() < kPrefix.size() || !equal_ci(s.substr(0, kPrefix.size()), kPrefix))
        throw MalformedCpe("expected 'cpe:2.3:' prefix", 0);

    const auto fields = split_fields(s);
    if (fields.size() != kFieldCount) {
        const std::size_t at = fields.size() > kFieldCount ? fields[kFieldCount].offset - 1 : s.size();
        throw MalformedCpe("expected 13 colon-separated fields, found " + std::to_string(fields.size()), at);
    }

    WellFormedName w;
    const Field& part = fields[2];
    if (part.raw == "a" || part.raw == "A") w.set_part(Part::Application);
    else if (part.raw == "o" || part.raw == "O") w.set_part(Part::OperatingSystem);
    else if (part.raw == "h" || part.raw == "H") w.set_part(Part::Hardware);
    else if (part.raw == "*") w.set_part(Part::Any);
    else throw MalformedCpe("illegal part '" + std::string(part.raw) + "'", part.offset);

    for (std::size_t i = 0; i < kValueAttributeCount; ++i)
        w.set(static_cast<Attribute>(i), decode_value(fields[3 + i]));
    return w;
}

std::string bind_formatted(const WellFormedName& w) {
    std::string out(kPrefix);
    switch (w.part()) {
        case Part::Application: out += 'a'; break;
        case Part::OperatingSystem: out += 'o'; break;
        case Part::Hardware: out += 'h'; break;
        case Part::Any: out += '*'; break;
    }
    for (const auto& v : w.values()) {
        out += ':';
        out += encode_value(v);
    }
    return out;
}

bool matches(const WellFormedName& candidate, const WellFormedName& pattern) {
    if (pattern.part() != Part::Any && pattern.part() != candidate.part()) return false;
    for (std::size_t i = 0; i < kValueAttributeCount; ++i)
        if (!attribute_matches(candidate.values()[i], pattern.values()[i])) return false;
    return true;
}

VersionKey::VersionKey(std::string_view version) {
    std::string current;
    auto flush = [&] {
        if (!current.empty()) segments_.push_back(std::move(current));
        current.clear();
    };
    for (char c : version) {
        if (!is_alnum(c)) {
            flush();
            continue;
        }
        if (!current.empty() && is_digit(current.back()) != is_digit(c)) flush();
        current.push_back(lower(c));
    }
    flush();
}

std::weak_ordering operator<=>(const VersionKey& a, const VersionKey& b) {
    const std::size_t n = std::min(a.segments_.size(), b.segments_.size());
    for (std::size_t i = 0; i < n; ++i) {
        const auto c = compare_segments(a.segments_[i], b.segments_[i]);
        if (c != std::weak_ordering::equivalent) return c;
    }
    return a.segments_.size() <=> b.segments_.size();
}

std::weak_ordering compare_versions(std::string_view a, std::string_view b) {
    return VersionKey(a) <=> VersionKey(b);
}

}  // namespace edg
