#pragma once

// CPE 2.3 well-formed names: formatted-string binding, matching, and the
// version ordering used for catalog applicability ranges.

#include <array>
#include <compare>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace edg {

enum class Part { Application, OperatingSystem, Hardware, Any };

// One WFN attribute value: ANY (`*`), NA (`-`) or a literal. Literals are
// stored decoded (no escape backslashes) and lower-cased.
class AttributeValue {
public:
    enum class Kind { Any, Na, Literal };

    AttributeValue() = default;

    static AttributeValue any() { return AttributeValue(Kind::Any, {}); }
    static AttributeValue na() { return AttributeValue(Kind::Na, {}); }
    static AttributeValue literal(std::string text);

    Kind kind() const noexcept { return kind_; }
    bool is_any() const noexcept { return kind_ == Kind::Any; }
    bool is_na() const noexcept { return kind_ == Kind::Na; }
    bool is_literal() const noexcept { return kind_ == Kind::Literal; }
    const std::string& text() const noexcept { return text_; }

    friend bool operator==(const AttributeValue&, const AttributeValue&) = default;
    friend auto operator<=>(const AttributeValue&, const AttributeValue&) = default;

private:
    AttributeValue(Kind kind, std::string text) : kind_(kind), text_(std::move(text)) {}

    Kind kind_ = Kind::Any;
    std::string text_;
};

enum class Attribute : std::size_t {
    Vendor,
    Product,
    Version,
    Update,
    Edition,
    Language,
    SwEdition,
    TargetSw,
    TargetHw,
    Other,
};

inline constexpr std::size_t kValueAttributeCount = 10;

class WellFormedName {
public:
    WellFormedName() = default;
    WellFormedName(Part part, std::string_view vendor, std::string_view product,
                   std::string_view version = {});

    Part part() const noexcept { return part_; }
    void set_part(Part p) noexcept { part_ = p; }

    const AttributeValue& get(Attribute a) const { return values_[static_cast<std::size_t>(a)]; }
    void set(Attribute a, AttributeValue v) { values_[static_cast<std::size_t>(a)] = std::move(v); }

    const AttributeValue& vendor() const { return get(Attribute::Vendor); }
    const AttributeValue& product() const { return get(Attribute::Product); }
    const AttributeValue& version() const { return get(Attribute::Version); }
    const AttributeValue& update() const { return get(Attribute::Update); }

    const std::array<AttributeValue, kValueAttributeCount>& values() const noexcept { return values_; }

    // Concrete names identify an asset: part, vendor and product are set.
    bool is_concrete() const noexcept;

    friend bool operator==(const WellFormedName&, const WellFormedName&) = default;
    friend auto operator<=>(const WellFormedName&, const WellFormedName&) = default;

private:
    Part part_ = Part::Any;
    std::array<AttributeValue, kValueAttributeCount> values_{};
};

// Parses a `cpe:2.3:` formatted string. Throws MalformedCpe.
WellFormedName parse_formatted(std::string_view s);

// Canonical lower-case formatted string.
std::string bind_formatted(const WellFormedName& w);

// True iff every pattern attribute is ANY or equal to the candidate's.
// NA in the pattern only matches NA.
bool matches(const WellFormedName& candidate, const WellFormedName& pattern);

// Segment-wise version ordering. Segments split on non-alphanumerics and on
// digit/letter boundaries; numeric segments compare numerically, anything
// else lexicographically (so numbers sort before words); a strict prefix
// sorts first.
class VersionKey {
public:
    explicit VersionKey(std::string_view version);

    const std::vector<std::string>& segments() const noexcept { return segments_; }

    friend std::weak_ordering operator<=>(const VersionKey& a, const VersionKey& b);
    friend bool operator==(const VersionKey& a, const VersionKey& b) {
        return (a <=> b) == std::weak_ordering::equivalent;
    }

private:
    std::vector<std::string> segments_;
};

std::weak_ordering compare_versions(std::string_view a, std::string_view b);

}  // namespace edg
