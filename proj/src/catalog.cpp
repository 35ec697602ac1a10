#include "edg/catalog.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include "csv.hpp"
#include "edg/errors.hpp"
#include "json_util.hpp"

namespace edg {

using detail::json;

namespace {

constexpr int kSchemaVersion = 1;

const std::regex& cve_pattern() {
    static const std::regex re(R"(CVE-\d{4}-\d{4,})");
    return re;
}

template <typename Vec, typename Key>
void push_unique(Vec& v, const Key& k) {
    if (std::find(v.begin(), v.end(), k) == v.end()) v.push_back(k);
}

std::optional<long> numeric_suffix(std::string_view id) {
    const auto dash = id.rfind('-');
    if (dash == std::string_view::npos || dash + 1 >= id.size()) return std::nullopt;
    long v = 0;
    for (char c : id.substr(dash + 1)) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
        v = v * 10 + (c - '0');
    }
    return v;
}

}  // namespace

std::string_view to_string(CvssScheme s) { return s == CvssScheme::V2 ? "v2" : "v3"; }

CvssScheme parse_cvss_scheme(std::string_view s) {
    if (s == "v2") return CvssScheme::V2;
    if (s == "v3") return CvssScheme::V3;
    throw InvalidArgument("unknown CVSS scheme '" + std::string(s) + "'");
}

std::string_view to_string(Rating r) {
    switch (r) {
        case Rating::VeryLow: return "very_low";
        case Rating::Low: return "low";
        case Rating::Medium: return "medium";
        case Rating::High: return "high";
        case Rating::VeryHigh: return "very_high";
    }
    return "medium";
}

Rating parse_rating(std::string_view s) {
    std::string k;
    for (char c : s) k.push_back(c == ' ' || c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (k == "very_low") return Rating::VeryLow;
    if (k == "low") return Rating::Low;
    if (k == "medium") return Rating::Medium;
    if (k == "high") return Rating::High;
    if (k == "very_high") return Rating::VeryHigh;
    throw InvalidArgument("rating '" + std::string(s) + "' is not on the five-step scale");
}

std::string_view to_string(RemediationKind k) {
    switch (k) {
        case RemediationKind::Requirement: return "requirement";
        case RemediationKind::Training: return "training";
        case RemediationKind::TestCase: return "test_case";
    }
    return "requirement";
}

RemediationKind parse_remediation_kind(std::string_view s) {
    if (s == "requirement") return RemediationKind::Requirement;
    if (s == "training") return RemediationKind::Training;
    if (s == "test_case") return RemediationKind::TestCase;
    throw InvalidArgument("unknown remediation kind '" + std::string(s) + "'");
}

bool weakness_id_less(std::string_view a, std::string_view b) {
    const bool a_null = a == kNullWeakness;
    const bool b_null = b == kNullWeakness;
    if (a_null != b_null) return b_null;
    const auto na = numeric_suffix(a);
    const auto nb = numeric_suffix(b);
    if (na && nb && *na != *nb) return *na < *nb;
    if (na.has_value() != nb.has_value()) return na.has_value();
    return a < b;
}

// ---------------------------------------------------------------------------
// Applicability

bool VersionRange::contains(std::string_view version) const {
    if (start) {
        const auto c = compare_versions(version, *start);
        if (c < 0 || (c == 0 && !start_inclusive)) return false;
    }
    if (end) {
        const auto c = compare_versions(version, *end);
        if (c > 0 || (c == 0 && !end_inclusive)) return false;
    }
    return true;
}

bool AffectedProduct::applies_to(const WellFormedName& name) const {
    if (!matches(name, pattern)) return false;
    if (!range) return true;
    return name.version().is_literal() && range->contains(name.version().text());
}

// ---------------------------------------------------------------------------
// Catalog

Catalog Catalog::build(CatalogContents contents) {
    Catalog c;
    c.contents_ = std::move(contents);
    auto& data = c.contents_;

    for (std::size_t i = 0; i < data.weaknesses.size(); ++i) {
        const auto& w = data.weaknesses[i];
        if (w.cwe_id.empty()) throw SchemaError("weaknesses[" + std::to_string(i) + "].cwe_id: empty");
        if (!c.weakness_index_.emplace(w.cwe_id, i).second) throw DuplicateId("duplicate weakness " + w.cwe_id);
    }
    for (std::size_t i = 0; i < data.attack_patterns.size(); ++i) {
        const auto& p = data.attack_patterns[i];
        if (p.capec_id.empty()) throw SchemaError("attack_patterns[" + std::to_string(i) + "].capec_id: empty");
        if (!c.pattern_index_.emplace(p.capec_id, i).second)
            throw DuplicateId("duplicate attack pattern " + p.capec_id);
    }

    // The sentinel weakness always exists and never links to patterns.
    if (const auto it = c.weakness_index_.find(kNullWeakness); it != c.weakness_index_.end()) {
        if (!data.weaknesses[it->second].related_capec_ids.empty())
            throw SchemaError("weaknesses: " + std::string(kNullWeakness) + " must not link attack patterns");
    }

    for (const auto& w : data.weaknesses)
        for (const auto& capec : w.related_capec_ids)
            if (!c.pattern_index_.count(capec)) c.dangling_.push_back(w.cwe_id + " -> " + capec);

    for (std::size_t i = 0; i < data.vulnerabilities.size(); ++i) {
        auto& r = data.vulnerabilities[i];
        const std::string path = "vulnerabilities[" + std::to_string(i) + "]";
        if (!std::regex_match(r.cve_id, cve_pattern()))
            throw SchemaError(path + ".cve_id: '" + r.cve_id + "' is not a CVE identifier");
        if (!(r.cvss.score >= 0.0 && r.cvss.score <= 10.0))
            throw SchemaError(path + ".cvss.score: " + std::to_string(r.cvss.score) + " outside [0.0, 10.0]");
        if (!c.vuln_index_.emplace(r.cve_id, i).second) throw DuplicateId("duplicate vulnerability " + r.cve_id);
        if (r.cwe_ids.empty()) r.cwe_ids.emplace_back(kNullWeakness);
        for (const auto& cwe : r.cwe_ids)
            if (cwe != kNullWeakness && !c.weakness_index_.count(cwe)) push_unique(c.dangling_, r.cve_id + " -> " + cwe);
        r.capec_ids = c.capec_ids_for(r.cwe_ids);
    }

    for (std::size_t i = 0; i < data.remediation.size(); ++i) {
        const auto& e = data.remediation[i];
        const std::string path = "remediation[" + std::to_string(i) + "]";
        if (e.cwe_ids.empty()) throw SchemaError(path + ".cwe_ids: must not be empty");
        if (e.kind == RemediationKind::TestCase && e.capec_ids.empty())
            throw SchemaError(path + ".capec_ids: test cases need at least one attack pattern");
    }
    return c;
}

const VulnerabilityRecord* Catalog::find_vulnerability(std::string_view cve_id) const {
    const auto it = vuln_index_.find(cve_id);
    return it == vuln_index_.end() ? nullptr : &contents_.vulnerabilities[it->second];
}

const WeaknessRecord* Catalog::find_weakness(std::string_view cwe_id) const {
    const auto it = weakness_index_.find(cwe_id);
    return it == weakness_index_.end() ? nullptr : &contents_.weaknesses[it->second];
}

const AttackPatternRecord* Catalog::find_attack_pattern(std::string_view capec_id) const {
    const auto it = pattern_index_.find(capec_id);
    return it == pattern_index_.end() ? nullptr : &contents_.attack_patterns[it->second];
}

std::vector<std::string> Catalog::capec_ids_for(const std::vector<std::string>& cwe_ids) const {
    std::vector<std::string> out;
    for (const auto& cwe : cwe_ids) {
        const auto* w = find_weakness(cwe);
        if (!w) continue;
        for (const auto& capec : w->related_capec_ids) push_unique(out, capec);
    }
    return out;
}

std::vector<VulnerabilityRecord> lookup_vulnerabilities(const Catalog& c, const WellFormedName& name, Date at) {
    std::vector<VulnerabilityRecord> out;
    for (const auto& r : c.vulnerabilities()) {
        if (r.published > at) continue;
        if (std::any_of(r.affected.begin(), r.affected.end(), [&](const AffectedProduct& p) { return p.applies_to(name); }))
            out.push_back(r);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.cve_id < b.cve_id; });
    return out;
}

std::vector<AttackPatternRecord> capecs_for_weakness(const Catalog& c, std::string_view cwe_id) {
    if (cwe_id == kNullWeakness) return {};
    const auto* w = c.find_weakness(cwe_id);
    if (!w) throw UnknownWeakness("weakness " + std::string(cwe_id) + " is not in the catalog");
    std::vector<AttackPatternRecord> out;
    for (const auto& id : w->related_capec_ids)
        if (const auto* p = c.find_attack_pattern(id)) out.push_back(*p);
    return out;
}

RemediationGroups remediation_for_weaknesses(const Catalog& c, const std::set<std::string>& cwes) {
    RemediationGroups groups;
    for (const auto& e : c.remediation()) {
        const bool joins = std::any_of(e.cwe_ids.begin(), e.cwe_ids.end(), [&](const std::string& id) {
            return id != kNullWeakness && cwes.count(id) > 0;
        });
        if (!joins) continue;
        auto& bucket = e.kind == RemediationKind::Requirement ? groups.requirements
                       : e.kind == RemediationKind::Training  ? groups.training
                                                              : groups.test_cases;
        push_unique(bucket, e);
    }
    return groups;
}

// ---------------------------------------------------------------------------
// Canonical JSON

nlohmann::json record_to_json(const VulnerabilityRecord& r) {
    json affected = json::array();
    for (const auto& a : r.affected) {
        json entry{{"cpe", bind_formatted(a.pattern)}};
        if (a.range) {
            if (a.range->start) {
                entry["version_start"] = *a.range->start;
                entry["version_start_including"] = a.range->start_inclusive;
            }
            if (a.range->end) {
                entry["version_end"] = *a.range->end;
                entry["version_end_including"] = a.range->end_inclusive;
            }
        }
        affected.push_back(std::move(entry));
    }
    return json{{"cve_id", r.cve_id},
                {"cvss", {{"score", r.cvss.score}, {"scheme", to_string(r.cvss.scheme)}}},
                {"cwe_ids", r.cwe_ids},
                {"affected", std::move(affected)},
                {"exploit_available", r.exploit_available},
                {"published", r.published.to_string()}};
}

VulnerabilityRecord record_from_json(const nlohmann::json& j, const std::string& path) {
    using namespace detail;
    VulnerabilityRecord r;
    r.cve_id = string_field(j, "cve_id", path);
    const auto& cvss = require(j, "cvss", path);
    const std::string cvss_path = join_path(path, "cvss");
    r.cvss.score = as_number(require(cvss, "score", cvss_path), join_path(cvss_path, "score"));
    if (const auto* scheme = optional_field(cvss, "scheme")) {
        const auto s = as_string(*scheme, join_path(cvss_path, "scheme"));
        r.cvss.scheme = convert_at(join_path(cvss_path, "scheme"), [&] { return parse_cvss_scheme(s); });
    }
    r.cwe_ids = string_list_field(j, "cwe_ids", path);
    if (const auto* aff = optional_field(j, "affected")) {
        const std::string aff_path = join_path(path, "affected");
        const auto& arr = as_array(*aff, aff_path);
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string ip = index_path(aff_path, i);
            AffectedProduct p;
            const auto cpe = string_field(arr[i], "cpe", ip);
            p.pattern = convert_at(join_path(ip, "cpe"), [&] { return parse_formatted(cpe); });
            VersionRange range;
            bool has_range = false;
            if (const auto* v = optional_field(arr[i], "version_start")) {
                range.start = as_string(*v, join_path(ip, "version_start"));
                has_range = true;
            }
            if (const auto* v = optional_field(arr[i], "version_start_including"))
                range.start_inclusive = as_bool(*v, join_path(ip, "version_start_including"));
            if (const auto* v = optional_field(arr[i], "version_end")) {
                range.end = as_string(*v, join_path(ip, "version_end"));
                has_range = true;
            }
            if (const auto* v = optional_field(arr[i], "version_end_including"))
                range.end_inclusive = as_bool(*v, join_path(ip, "version_end_including"));
            if (has_range) p.range = range;
            r.affected.push_back(std::move(p));
        }
    }
    if (const auto* e = optional_field(j, "exploit_available"))
        r.exploit_available = as_bool(*e, join_path(path, "exploit_available"));
    const auto published = string_field(j, "published", path);
    r.published = convert_at(join_path(path, "published"), [&] { return Date::parse(published); });
    return r;
}

Catalog catalog_from_json(const nlohmann::json& doc) {
    using namespace detail;
    if (!doc.is_object()) throw SchemaError("$: expected a catalog object");
    if (const auto* v = optional_field(doc, "schema_version")) {
        if (!v->is_number_integer() || v->get<int>() != kSchemaVersion)
            throw SchemaError("schema_version: unsupported value " + v->dump());
    }
    CatalogContents contents;
    if (const auto* d = optional_field(doc, "snapshot_date")) {
        const auto s = as_string(*d, "snapshot_date");
        contents.snapshot_date = convert_at("snapshot_date", [&] { return Date::parse(s); });
    }
    if (const auto* arr = optional_field(doc, "vulnerabilities")) {
        as_array(*arr, "vulnerabilities");
        for (std::size_t i = 0; i < arr->size(); ++i)
            contents.vulnerabilities.push_back(record_from_json((*arr)[i], index_path("vulnerabilities", i)));
    }
    if (const auto* arr = optional_field(doc, "weaknesses")) {
        as_array(*arr, "weaknesses");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const auto p = index_path("weaknesses", i);
            const auto& j = (*arr)[i];
            WeaknessRecord w;
            w.cwe_id = string_field(j, "cwe_id", p);
            if (const auto* f = optional_field(j, "name")) w.name = as_string(*f, join_path(p, "name"));
            if (const auto* f = optional_field(j, "description")) w.description = as_string(*f, join_path(p, "description"));
            w.related_capec_ids = string_list_field(j, "related_capec_ids", p);
            contents.weaknesses.push_back(std::move(w));
        }
    }
    if (const auto* arr = optional_field(doc, "attack_patterns")) {
        as_array(*arr, "attack_patterns");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const auto p = index_path("attack_patterns", i);
            const auto& j = (*arr)[i];
            AttackPatternRecord a;
            a.capec_id = string_field(j, "capec_id", p);
            if (const auto* f = optional_field(j, "name")) a.name = as_string(*f, join_path(p, "name"));
            if (const auto* f = optional_field(j, "likelihood")) {
                const auto s = as_string(*f, join_path(p, "likelihood"));
                a.likelihood = convert_at(join_path(p, "likelihood"), [&] { return parse_rating(s); });
            }
            if (const auto* f = optional_field(j, "impact")) {
                const auto s = as_string(*f, join_path(p, "impact"));
                a.impact = convert_at(join_path(p, "impact"), [&] { return parse_rating(s); });
            }
            contents.attack_patterns.push_back(std::move(a));
        }
    }
    if (const auto* arr = optional_field(doc, "remediation")) {
        as_array(*arr, "remediation");
        for (std::size_t i = 0; i < arr->size(); ++i) {
            const auto p = index_path("remediation", i);
            const auto& j = (*arr)[i];
            RemediationEntry e;
            const auto kind = string_field(j, "kind", p);
            e.kind = convert_at(join_path(p, "kind"), [&] { return parse_remediation_kind(kind); });
            e.cwe_ids = string_list_field(j, "cwe_ids", p);
            e.capec_ids = string_list_field(j, "capec_ids", p);
            e.text = string_field(j, "text", p);
            contents.remediation.push_back(std::move(e));
        }
    }
    return Catalog::build(std::move(contents));
}

Catalog load_catalog(const std::filesystem::path& path) {
    const std::string text = detail::read_text_file(path);
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": not valid JSON: " + e.what());
    }
    return catalog_from_json(doc);
}

nlohmann::json catalog_to_json(const Catalog& c) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["snapshot_date"] = c.snapshot_date() ? json(c.snapshot_date()->to_string()) : json(nullptr);
    json vulns = json::array();
    for (const auto& r : c.vulnerabilities()) vulns.push_back(record_to_json(r));
    doc["vulnerabilities"] = std::move(vulns);
    json weaknesses = json::array();
    for (const auto& w : c.weaknesses())
        weaknesses.push_back({{"cwe_id", w.cwe_id},
                              {"name", w.name},
                              {"description", w.description},
                              {"related_capec_ids", w.related_capec_ids}});
    doc["weaknesses"] = std::move(weaknesses);
    json patterns = json::array();
    for (const auto& p : c.attack_patterns())
        patterns.push_back({{"capec_id", p.capec_id},
                            {"name", p.name},
                            {"likelihood", to_string(p.likelihood)},
                            {"impact", to_string(p.impact)}});
    doc["attack_patterns"] = std::move(patterns);
    json remediation = json::array();
    for (const auto& e : c.remediation())
        remediation.push_back(
            {{"kind", to_string(e.kind)}, {"cwe_ids", e.cwe_ids}, {"capec_ids", e.capec_ids}, {"text", e.text}});
    doc["remediation"] = std::move(remediation);
    return doc;
}

void save_catalog(const Catalog& c, const std::filesystem::path& path) {
    detail::write_text_file(path, catalog_to_json(c).dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// CSV knowledge base

WeaknessMapping load_weakness_mapping_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_csv_file(path);
    WeaknessMapping out;
    std::map<std::string, std::size_t> weakness_at;
    std::map<std::string, std::size_t> pattern_at;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        if (i == 0 && !row.empty() && detail::trim(row[0]) == "cwe_id") continue;  // header
        if (row.size() != 7) throw SchemaError(where + ": expected 7 columns, found " + std::to_string(row.size()));
        const auto cwe = detail::trim(row[0]);
        if (cwe.empty()) throw SchemaError(where + ": empty cwe_id");
        auto [wit, fresh] = weakness_at.emplace(cwe, out.weaknesses.size());
        if (fresh) out.weaknesses.push_back({cwe, detail::trim(row[1]), detail::trim(row[2]), {}});
        const auto capec = detail::trim(row[3]);
        if (capec.empty()) continue;
        auto& related = out.weaknesses[wit->second].related_capec_ids;
        push_unique(related, capec);
        if (pattern_at.emplace(capec, out.attack_patterns.size()).second) {
            AttackPatternRecord p{capec, detail::trim(row[4]), Rating::Medium, Rating::Medium};
            p.likelihood = detail::convert_at(where + ".likelihood", [&] { return parse_rating(detail::trim(row[5])); });
            p.impact = detail::convert_at(where + ".impact", [&] { return parse_rating(detail::trim(row[6])); });
            out.attack_patterns.push_back(std::move(p));
        }
    }
    return out;
}

std::vector<RemediationEntry> load_remediation_csv(const std::filesystem::path& path) {
    const auto rows = detail::read_csv_file(path);
    std::vector<RemediationEntry> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = path.string() + ":" + std::to_string(i + 1);
        if (i == 0 && !row.empty() && detail::trim(row[0]) == "kind") continue;
        if (row.size() != 4) throw SchemaError(where + ": expected 4 columns, found " + std::to_string(row.size()));
        RemediationEntry e;
        e.kind = detail::convert_at(where + ".kind", [&] { return parse_remediation_kind(detail::trim(row[0])); });
        e.cwe_ids = detail::split_list(row[1], ';');
        e.capec_ids = detail::split_list(row[2], ';');
        e.text = detail::trim(row[3]);
        if (e.cwe_ids.empty()) throw SchemaError(where + ".cwe_ids: must not be empty");
        if (e.kind == RemediationKind::TestCase && e.capec_ids.empty())
            throw SchemaError(where + ".capec_ids: test cases need at least one attack pattern");
        out.push_back(std::move(e));
    }
    return out;
}

// ---------------------------------------------------------------------------
// CatalogHistory

CatalogHistory::CatalogHistory(Catalog single) {
    snapshots_.push_back(std::make_shared<const Catalog>(std::move(single)));
}

CatalogHistory::CatalogHistory(std::vector<Catalog> snapshots) {
    for (auto& c : snapshots) snapshots_.push_back(std::make_shared<const Catalog>(std::move(c)));
    std::stable_sort(snapshots_.begin(), snapshots_.end(), [](const auto& a, const auto& b) {
        const Date da = a->snapshot_date().value_or(Date{});
        const Date db = b->snapshot_date().value_or(Date{});
        return da < db;
    });
}

const Catalog& CatalogHistory::at(const Timestamp& t) const {
    if (snapshots_.empty()) throw InvalidArgument("no catalog supplied");
    const Date d = t.date();
    const Catalog* chosen = snapshots_.front().get();
    for (const auto& c : snapshots_)
        if (c->snapshot_date().value_or(Date{}) <= d) chosen = c.get();
    return *chosen;
}

const Catalog& CatalogHistory::latest() const {
    if (snapshots_.empty()) throw InvalidArgument("no catalog supplied");
    return *snapshots_.back();
}

}  // namespace edg
