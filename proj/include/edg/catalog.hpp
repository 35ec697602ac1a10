#pragma once

// Standards catalogs: known vulnerabilities (CVE), weaknesses (CWE), attack
// patterns (CAPEC) and the remediation knowledge base keyed by weakness.

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/cpe.hpp"
#include "edg/time.hpp"

namespace edg {

// Weakness id used for CVEs that carry no CWE.
inline constexpr std::string_view kNullWeakness = "CWE-NULL";

enum class CvssScheme { V2, V3 };

std::string_view to_string(CvssScheme s);
CvssScheme parse_cvss_scheme(std::string_view s);

struct CvssScore {
    double score = 0.0;  // [0.0, 10.0]
    CvssScheme scheme = CvssScheme::V3;

    friend bool operator==(const CvssScore&, const CvssScore&) = default;
};

// Version interval attached to an affected-product pattern. Bounds are
// optional; the default shape is [start, end).
struct VersionRange {
    std::optional<std::string> start;
    bool start_inclusive = true;
    std::optional<std::string> end;
    bool end_inclusive = false;

    bool contains(std::string_view version) const;

    friend bool operator==(const VersionRange&, const VersionRange&) = default;
};

struct AffectedProduct {
    WellFormedName pattern;
    std::optional<VersionRange> range;

    // Pattern match plus range test. A candidate whose version is not a
    // literal never satisfies a range.
    bool applies_to(const WellFormedName& name) const;

    friend bool operator==(const AffectedProduct&, const AffectedProduct&) = default;
};

struct VulnerabilityRecord {
    std::string cve_id;
    CvssScore cvss;
    std::vector<std::string> cwe_ids;    // never empty once in a catalog
    std::vector<std::string> capec_ids;  // derived from cwe_ids
    std::vector<AffectedProduct> affected;
    bool exploit_available = false;
    Date published;

    const std::string& primary_weakness() const { return cwe_ids.front(); }

    friend bool operator==(const VulnerabilityRecord&, const VulnerabilityRecord&) = default;
};

struct WeaknessRecord {
    std::string cwe_id;
    std::string name;
    std::string description;
    std::vector<std::string> related_capec_ids;

    friend bool operator==(const WeaknessRecord&, const WeaknessRecord&) = default;
};

enum class Rating { VeryLow, Low, Medium, High, VeryHigh };

std::string_view to_string(Rating r);
Rating parse_rating(std::string_view s);

struct AttackPatternRecord {
    std::string capec_id;
    std::string name;
    Rating likelihood = Rating::Medium;
    Rating impact = Rating::Medium;

    friend bool operator==(const AttackPatternRecord&, const AttackPatternRecord&) = default;
};

enum class RemediationKind { Requirement, Training, TestCase };

std::string_view to_string(RemediationKind k);
RemediationKind parse_remediation_kind(std::string_view s);

struct RemediationEntry {
    std::vector<std::string> cwe_ids;
    RemediationKind kind = RemediationKind::Requirement;
    std::string text;
    std::vector<std::string> capec_ids;  // test cases only

    friend bool operator==(const RemediationEntry&, const RemediationEntry&) = default;
};

struct RemediationGroups {
    std::vector<RemediationEntry> requirements;
    std::vector<RemediationEntry> training;
    std::vector<RemediationEntry> test_cases;

    bool empty() const { return requirements.empty() && training.empty() && test_cases.empty(); }

    friend bool operator==(const RemediationGroups&, const RemediationGroups&) = default;
};

// Raw material for a catalog, in file order.
struct CatalogContents {
    std::optional<Date> snapshot_date;
    std::vector<VulnerabilityRecord> vulnerabilities;
    std::vector<WeaknessRecord> weaknesses;
    std::vector<AttackPatternRecord> attack_patterns;
    std::vector<RemediationEntry> remediation;

    friend bool operator==(const CatalogContents&, const CatalogContents&) = default;
};

// Immutable, indexed catalog. Safe for concurrent reads.
class Catalog {
public:
    Catalog() = default;

    // Validates and indexes. Throws DuplicateId or SchemaError; unresolved
    // cross references are collected in dangling_references().
    static Catalog build(CatalogContents contents);

    const std::optional<Date>& snapshot_date() const noexcept { return contents_.snapshot_date; }
    const std::vector<VulnerabilityRecord>& vulnerabilities() const noexcept { return contents_.vulnerabilities; }
    const std::vector<WeaknessRecord>& weaknesses() const noexcept { return contents_.weaknesses; }
    const std::vector<AttackPatternRecord>& attack_patterns() const noexcept { return contents_.attack_patterns; }
    const std::vector<RemediationEntry>& remediation() const noexcept { return contents_.remediation; }
    const std::vector<std::string>& dangling_references() const noexcept { return dangling_; }

    const VulnerabilityRecord* find_vulnerability(std::string_view cve_id) const;
    const WeaknessRecord* find_weakness(std::string_view cwe_id) const;
    const AttackPatternRecord* find_attack_pattern(std::string_view capec_id) const;

    // CAPEC ids linked to the given weaknesses; unknown weaknesses contribute nothing.
    std::vector<std::string> capec_ids_for(const std::vector<std::string>& cwe_ids) const;

    const CatalogContents& contents() const noexcept { return contents_; }

private:
    CatalogContents contents_;
    std::map<std::string, std::size_t, std::less<>> vuln_index_;
    std::map<std::string, std::size_t, std::less<>> weakness_index_;
    std::map<std::string, std::size_t, std::less<>> pattern_index_;
    std::vector<std::string> dangling_;
};

// Records whose affected patterns apply to `name` and that were published on
// or before `at`, ordered by cve_id.
std::vector<VulnerabilityRecord> lookup_vulnerabilities(const Catalog& c, const WellFormedName& name, Date at);

// Attack patterns able to exploit the weakness. Empty for CWE-NULL; throws
// UnknownWeakness for other ids absent from the catalog.
std::vector<AttackPatternRecord> capecs_for_weakness(const Catalog& c, std::string_view cwe_id);

// Entries whose weakness list intersects `cwes`, grouped by kind, first
// occurrence order. CWE-NULL never joins.
RemediationGroups remediation_for_weaknesses(const Catalog& c, const std::set<std::string>& cwes);

// Canonical catalog JSON document.
Catalog load_catalog(const std::filesystem::path& path);
Catalog catalog_from_json(const nlohmann::json& doc);
nlohmann::json catalog_to_json(const Catalog& c);
void save_catalog(const Catalog& c, const std::filesystem::path& path);

nlohmann::json record_to_json(const VulnerabilityRecord& r);
VulnerabilityRecord record_from_json(const nlohmann::json& j, const std::string& path);

// Weakness/attack-pattern mapping CSV, one row per CWE->CAPEC link:
//   cwe_id,cwe_name,cwe_description,capec_id,capec_name,likelihood,impact
// A weakness without patterns has empty capec columns.
struct WeaknessMapping {
    std::vector<WeaknessRecord> weaknesses;
    std::vector<AttackPatternRecord> attack_patterns;
};
WeaknessMapping load_weakness_mapping_csv(const std::filesystem::path& path);

// Remediation knowledge base CSV:
//   kind,cwe_ids,capec_ids,text
// with `;`-separated id lists and kind one of requirement|training|test_case.
std::vector<RemediationEntry> load_remediation_csv(const std::filesystem::path& path);

// Ordered set of catalog snapshots; events at time t consult the latest
// snapshot dated on or before t (the earliest one if none is).
class CatalogHistory {
public:
    CatalogHistory() = default;
    explicit CatalogHistory(Catalog single);
    explicit CatalogHistory(std::vector<Catalog> snapshots);

    const Catalog& at(const Timestamp& t) const;
    const Catalog& latest() const;
    bool empty() const noexcept { return snapshots_.empty(); }
    std::size_t size() const noexcept { return snapshots_.size(); }

private:
    std::vector<std::shared_ptr<const Catalog>> snapshots_;
};

// Weakness id ordering: numeric CWE ids ascending, CWE-NULL last.
bool weakness_id_less(std::string_view a, std::string_view b);

}  // namespace edg
