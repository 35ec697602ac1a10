#include "edg/report.hpp"

#include <set>

#include "edg/errors.hpp"

namespace edg {

using nlohmann::json;

namespace {

std::set<std::string> active_cves(const Edg& g) {
    const Edg view = active_subgraph(expand_clusters(g));
    std::set<std::string> out;
    for (const AssetNode* a : view.active_assets())
        for (const VulnNode* v : view.vulns_of(a->id)) out.insert(v->cve_id);
    return out;
}

std::string join(const std::vector<std::string>& items, std::string_view sep = ", ") {
    std::string out;
    for (const auto& s : items) {
        if (!out.empty()) out += sep;
        out += s;
    }
    return out;
}

// Markdown table cells cannot hold raw pipes or line breaks.
std::string cell(std::string_view s) {
    std::string out;
    for (char ch : s) {
        if (ch == '|') out += "\\|";
        else if (ch == '\n') out += ' ';
        else out.push_back(ch);
    }
    return out;
}

std::string table_row(const std::vector<std::string>& cells) {
    std::string out = "|";
    for (const auto& c : cells) out += " " + cell(c) + " |";
    return out + "\n";
}

std::string table_header(const std::vector<std::string>& cells) {
    std::string out = table_row(cells) + "|";
    for (std::size_t i = 0; i < cells.size(); ++i) out += " --- |";
    return out + "\n";
}

json remediation_entries_to_json(const std::vector<RemediationEntry>& entries, bool with_capec) {
    json out = json::array();
    for (const auto& e : entries) {
        json j{{"cwe_ids", e.cwe_ids}, {"text", e.text}};
        if (with_capec) j["capec_ids"] = e.capec_ids;
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

Report build_report(const Timeline& tl, const Catalog& kb, const ReportOptions& opts) {
    Report r;
    r.sut = bind_formatted(tl.latest().root.sut);
    r.min_cvss = opts.min_cvss;
    r.max_cvss = opts.max_cvss;
    r.lifecycle = compute_lifecycle(tl);

    const auto epochs = designated_epochs(tl);
    for (const auto& [label, g] : epochs)
        r.prioritization.push_back({label, prioritize(*g, opts.min_cvss, opts.max_cvss)});

    std::set<std::string> weaknesses;
    for (const auto& f : r.lifecycle.weakness_frequency) {
        if (f.cwe_id == kNullWeakness) {
            r.unclassified = f.count;
            continue;
        }
        RootCause rc{f.cwe_id, "", f.count, {}};
        if (const WeaknessRecord* w = kb.find_weakness(f.cwe_id)) {
            rc.name = w->name;
            rc.capec_ids = w->related_capec_ids;
        }
        r.root_causes.push_back(std::move(rc));
        weaknesses.insert(f.cwe_id);
    }
    r.remediation = remediation_for_weaknesses(kb, weaknesses);

    const Iec62443Mapping& mapping = opts.mapping ? *opts.mapping : Iec62443Mapping::bundled();
    for (std::size_t i = 0; i < kMetricCount; ++i) {
        const std::string id = "M" + std::to_string(i);
        r.iec62443.push_back({id, iec62443_annotations(id, mapping)});
    }

    for (std::size_t i = 0; i + 1 < epochs.size(); ++i) {
        const auto before = active_cves(*epochs[i].second);
        const auto after = active_cves(*epochs[i + 1].second);
        FixedIssues f{epochs[i].first, epochs[i + 1].first, {}};
        for (const auto& cve : before)
            if (!after.count(cve)) f.cves.push_back(cve);
        r.fixed.push_back(std::move(f));
    }
    return r;
}

std::string render_report_markdown(const Report& r) {
    std::string out = "# Security assessment of " + r.sut + "\n\n";
    out += "Epochs: " + join(r.lifecycle.epochs) + "\n\n";

    out += "## Metrics\n\n";
    for (const auto& m : r.lifecycle.per_epoch) out += "```\n" + render_metrics_text(m) + "```\n\n";
    out += table_header({"Lifecycle metric", "Value"});
    out += table_row({"M2", std::to_string(r.lifecycle.m2)});
    out += table_row({"M8 (union)", std::to_string(r.lifecycle.m8_union)});
    out += table_row({"M8 (sum)", std::to_string(r.lifecycle.m8_sum)});
    out += "\n";

    out += "## Prioritization\n\nCVSS window [" + format_decimal(r.min_cvss) + ", " + format_decimal(r.max_cvss) +
           "], grouped by asset.\n\n";
    for (const auto& p : r.prioritization) {
        out += "### Epoch " + p.epoch + "\n\n";
        if (p.entries.empty()) {
            out += "No vulnerabilities in the window.\n\n";
            continue;
        }
        out += table_header({"Rank", "CVE", "CVSS", "Asset", "Exploit"});
        for (const auto& e : p.entries)
            out += table_row({std::to_string(e.rank), e.cve_id, format_decimal(e.cvss), e.asset,
                              e.exploit_available ? "yes" : "no"});
        out += "\n";
    }

    out += "## Weakness frequency\n\n";
    if (r.lifecycle.weakness_frequency.empty()) {
        out += "No weaknesses recorded.\n\n";
    } else {
        out += table_header({"CWE", "Occurrences"});
        for (const auto& f : r.lifecycle.weakness_frequency) out += table_row({f.cwe_id, std::to_string(f.count)});
        out += "\n";
    }

    out += "## Root causes\n\n";
    if (r.root_causes.empty()) {
        out += "No classified weaknesses.\n\n";
    } else {
        out += table_header({"CWE", "Name", "Occurrences", "Attack patterns"});
        for (const auto& rc : r.root_causes)
            out += table_row({rc.cwe_id, rc.name, std::to_string(rc.count), join(rc.capec_ids)});
        out += "\n";
    }
    if (r.unclassified > 0)
        out += std::to_string(r.unclassified) + " occurrences carry no weakness classification (CWE-NULL).\n\n";

    out += "## Remediation\n\n";
    if (r.remediation.empty()) out += "No remediation entries apply.\n\n";
    if (!r.remediation.requirements.empty()) {
        out += "### Requirements\n\n" + table_header({"CWE ID", "Requirement"});
        for (const auto& e : r.remediation.requirements) out += table_row({join(e.cwe_ids), e.text});
        out += "\n";
    }
    if (!r.remediation.training.empty()) {
        out += "### Training\n\n" + table_header({"CWE ID", "Training"});
        for (const auto& e : r.remediation.training) out += table_row({join(e.cwe_ids), e.text});
        out += "\n";
    }
    if (!r.remediation.test_cases.empty()) {
        out += "### Test cases\n\n" + table_header({"CAPEC ID", "CWE ID", "Test case"});
        for (const auto& e : r.remediation.test_cases)
            out += table_row({join(e.capec_ids), join(e.cwe_ids), e.text});
        out += "\n";
    }

    out += "## ISA/IEC 62443-4-1 annotations\n\n" + table_header({"Metric", "Requirements"});
    for (const auto& a : r.iec62443) out += table_row({a.metric, a.tags.empty() ? "-" : join(a.tags)});
    out += "\n";

    out += "## Fixed vulnerabilities\n\n";
    if (r.fixed.empty()) out += "Only one epoch; nothing to compare.\n";
    for (const auto& f : r.fixed) {
        out += "### " + f.from_epoch + " to " + f.to_epoch + " (" + std::to_string(f.cves.size()) + ")\n\n";
        out += f.cves.empty() ? "None.\n" : join(f.cves) + "\n";
        out += "\n";
    }
    return out;
}

json report_to_json(const Report& r) {
    json prio = json::array();
    for (const auto& p : r.prioritization)
        prio.push_back(json{{"epoch", p.epoch}, {"entries", prioritized_to_json(p.entries)}});
    json causes = json::array();
    for (const auto& rc : r.root_causes)
        causes.push_back(json{{"cwe_id", rc.cwe_id}, {"name", rc.name}, {"count", rc.count}, {"capec_ids", rc.capec_ids}});
    json annotations = json::array();
    for (const auto& a : r.iec62443) annotations.push_back(json{{"metric", a.metric}, {"tags", a.tags}});
    json fixed = json::array();
    for (const auto& f : r.fixed) fixed.push_back(json{{"from", f.from_epoch}, {"to", f.to_epoch}, {"cves", f.cves}});
    return json{
        {"sut", r.sut},
        {"metrics", lifecycle_to_json(r.lifecycle)},
        {"prioritization", json{{"min_cvss", r.min_cvss}, {"max_cvss", r.max_cvss}, {"epochs", std::move(prio)}}},
        {"root_causes", std::move(causes)},
        {"unclassified", r.unclassified},
        {"remediation",
         json{{"requirements", remediation_entries_to_json(r.remediation.requirements, false)},
              {"training", remediation_entries_to_json(r.remediation.training, false)},
              {"test_cases", remediation_entries_to_json(r.remediation.test_cases, true)}}},
        {"iec62443", std::move(annotations)},
        {"fixed", std::move(fixed)},
    };
}

std::string generate_report(const Timeline& tl, const Catalog& kb, ReportFormat format, const ReportOptions& opts) {
    const Report r = build_report(tl, kb, opts);
    return format == ReportFormat::Json ? report_to_json(r).dump(2) + "\n" : render_report_markdown(r);
}

}  // namespace edg
