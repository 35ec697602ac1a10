#include "edg/nvd.hpp"

#include <algorithm>
#include <optional>

#include "csv.hpp"
#include "edg/errors.hpp"

namespace edg {

using nlohmann::json;

namespace {

const json* child(const json& j, const char* key) {
    if (!j.is_object()) return nullptr;
    const auto it = j.find(key);
    return it == j.end() || it->is_null() ? nullptr : &*it;
}

const json* path_of(const json& j, std::initializer_list<const char*> keys) {
    const json* cur = &j;
    for (const char* k : keys) {
        cur = child(*cur, k);
        if (!cur) return nullptr;
    }
    return cur;
}

std::optional<double> base_score(const json& impact, const char* metric, const char* cvss) {
    const json* s = path_of(impact, {metric, cvss, "baseScore"});
    if (!s || !s->is_number()) return std::nullopt;
    return s->get<double>();
}

// First CWE listed in problemtype data; placeholders map to CWE-NULL.
std::string first_weakness(const json& cve) {
    const json* data = path_of(cve, {"problemtype", "problemtype_data"});
    if (!data || !data->is_array()) return std::string(kNullWeakness);
    for (const auto& pt : *data) {
        const json* descs = child(pt, "description");
        if (!descs || !descs->is_array()) continue;
        for (const auto& d : *descs) {
            const json* v = child(d, "value");
            if (!v || !v->is_string()) continue;
            const auto id = v->get<std::string>();
            if (id.rfind("CWE-", 0) == 0) return id;
        }
    }
    return std::string(kNullWeakness);
}

void flatten_nodes(const json& nodes, std::vector<AffectedProduct>& out, std::vector<std::string>& warnings,
                   const std::string& cve_id) {
    if (!nodes.is_array()) return;
    for (const auto& node : nodes) {
        if (const json* children = child(node, "children")) flatten_nodes(*children, out, warnings, cve_id);
        const json* matches = child(node, "cpe_match");
        if (!matches || !matches->is_array()) continue;
        for (const auto& m : *matches) {
            const json* vulnerable = child(m, "vulnerable");
            if (vulnerable && vulnerable->is_boolean() && !vulnerable->get<bool>()) continue;
            const json* uri = child(m, "cpe23Uri");
            if (!uri || !uri->is_string()) continue;
            AffectedProduct p;
            try {
                p.pattern = parse_formatted(uri->get<std::string>());
            } catch (const MalformedCpe& e) {
                warnings.push_back(cve_id + ": skipped cpe match: " + e.what());
                continue;
            }
            VersionRange r;
            bool ranged = false;
            auto bound = [&](const char* key, std::optional<std::string>& slot, bool& inclusive, bool incl) {
                if (const json* v = child(m, key); v && v->is_string()) {
                    slot = v->get<std::string>();
                    inclusive = incl;
                    ranged = true;
                }
            };
            bound("versionStartIncluding", r.start, r.start_inclusive, true);
            bound("versionStartExcluding", r.start, r.start_inclusive, false);
            bound("versionEndIncluding", r.end, r.end_inclusive, true);
            bound("versionEndExcluding", r.end, r.end_inclusive, false);
            if (ranged) p.range = r;
            if (std::find(out.begin(), out.end(), p) == out.end()) out.push_back(std::move(p));
        }
    }
}

bool has_exploit_reference(const json& cve) {
    const json* refs = path_of(cve, {"references", "reference_data"});
    if (!refs || !refs->is_array()) return false;
    for (const auto& ref : *refs) {
        const json* tags = child(ref, "tags");
        if (!tags || !tags->is_array()) continue;
        for (const auto& t : *tags)
            if (t.is_string() && t.get<std::string>() == "Exploit") return true;
    }
    return false;
}

}  // namespace

NvdImportResult import_nvd_document(const json& doc, const NvdImportOptions& options) {
    const json* items = child(doc, "CVE_Items");
    if (!items || !items->is_array()) throw FeedParseError("document has no CVE_Items array");

    NvdImportResult result;
    for (std::size_t i = 0; i < items->size(); ++i) {
        const json& item = (*items)[i];
        const std::string where = "CVE_Items[" + std::to_string(i) + "]";
        const json* id = path_of(item, {"cve", "CVE_data_meta", "ID"});
        if (!id || !id->is_string()) {
            result.warnings.push_back(where + ": missing CVE_data_meta.ID, entry skipped");
            continue;
        }
        VulnerabilityRecord r;
        r.cve_id = id->get<std::string>();

        const json* impact = child(item, "impact");
        const auto v3 = impact ? base_score(*impact, "baseMetricV3", "cvssV3") : std::nullopt;
        const auto v2 = impact ? base_score(*impact, "baseMetricV2", "cvssV2") : std::nullopt;
        const bool prefer_v3 = options.preference == CvssPreference::PreferV3;
        const auto& first = prefer_v3 ? v3 : v2;
        const auto& second = prefer_v3 ? v2 : v3;
        if (first) {
            r.cvss = {*first, prefer_v3 ? CvssScheme::V3 : CvssScheme::V2};
        } else if (second) {
            r.cvss = {*second, prefer_v3 ? CvssScheme::V2 : CvssScheme::V3};
        } else {
            result.warnings.push_back(r.cve_id + ": no CVSS base score, entry skipped");
            continue;
        }
        if (r.cvss.score < 0.0 || r.cvss.score > 10.0) {
            result.warnings.push_back(r.cve_id + ": CVSS score out of range, entry skipped");
            continue;
        }

        if (const json* cve = child(item, "cve")) {
            r.cwe_ids.push_back(first_weakness(*cve));
            r.exploit_available = has_exploit_reference(*cve);
        } else {
            r.cwe_ids.emplace_back(kNullWeakness);
        }

        if (const json* nodes = path_of(item, {"configurations", "nodes"}))
            flatten_nodes(*nodes, r.affected, result.warnings, r.cve_id);
        if (r.affected.empty()) result.warnings.push_back(r.cve_id + ": no applicable configurations");

        const json* published = child(item, "publishedDate");
        if (!published || !published->is_string() || published->get<std::string>().size() < 10) {
            result.warnings.push_back(r.cve_id + ": missing publishedDate, entry skipped");
            continue;
        }
        try {
            r.published = Date::parse(published->get<std::string>().substr(0, 10));
        } catch (const Error& e) {
            result.warnings.push_back(r.cve_id + ": " + e.what() + ", entry skipped");
            continue;
        }
        result.records.push_back(std::move(r));
    }
    return result;
}

NvdImportResult import_nvd_feed(const std::filesystem::path& path, const NvdImportOptions& options) {
    std::string text;
    try {
        text = detail::read_text_file(path);
    } catch (const IoError& e) {
        throw FeedParseError(e.what());
    }
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FeedParseError(path.string() + ": not valid JSON: " + e.what());
    }
    return import_nvd_document(doc, options);
}

}  // namespace edg
