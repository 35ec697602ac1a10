#pragma once

// Assessment report over a timeline: per-epoch metrics, prioritized patch
// lists, root causes with their remediation, ISA/IEC 62443 annotations and
// the vulnerabilities fixed between consecutive epochs.
//
// Both renderings read the same Report value; nothing is recomputed while
// rendering.

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/catalog.hpp"
#include "edg/metrics.hpp"
#include "edg/timeline.hpp"

namespace edg {

struct ReportOptions {
    double min_cvss = 6.0;
    double max_cvss = 10.0;
    const Iec62443Mapping* mapping = nullptr;  // bundled table when null
};

struct EpochPrioritization {
    std::string epoch;
    std::vector<PrioritizedVulnerability> entries;
};

struct RootCause {
    std::string cwe_id;
    std::string name;  // empty when the catalog lacks the weakness
    std::size_t count = 0;
    std::vector<std::string> capec_ids;
};

struct MetricAnnotation {
    std::string metric;
    std::vector<std::string> tags;
};

struct FixedIssues {
    std::string from_epoch;
    std::string to_epoch;
    std::vector<std::string> cves;  // present in `from`, absent in `to`
};

struct Report {
    std::string sut;
    LifecycleReport lifecycle;
    double min_cvss = 6.0;
    double max_cvss = 10.0;
    std::vector<EpochPrioritization> prioritization;
    std::vector<RootCause> root_causes;  // lifetime frequency order, CWE-NULL excluded
    std::size_t unclassified = 0;        // lifetime CWE-NULL occurrences
    RemediationGroups remediation;       // one row per entry, shared entries once
    std::vector<MetricAnnotation> iec62443;
    std::vector<FixedIssues> fixed;
};

// `kb` supplies weakness names, attack patterns and remediation entries.
// Throws InvalidArgument for a bad CVSS window.
Report build_report(const Timeline& tl, const Catalog& kb, const ReportOptions& opts = {});

std::string render_report_markdown(const Report& r);
nlohmann::json report_to_json(const Report& r);

enum class ReportFormat { Markdown, Json };

std::string generate_report(const Timeline& tl, const Catalog& kb, ReportFormat format,
                            const ReportOptions& opts = {});

}  // namespace edg
