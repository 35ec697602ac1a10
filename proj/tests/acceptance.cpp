// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// FAIL. Tolerances are pinned below.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edg/alerts.hpp"
#include "edg/cli.hpp"
#include "edg/dot.hpp"
#include "edg/metrics.hpp"
#include "edg/nvd.hpp"
#include "edg/report.hpp"
#include "support/dot_checker.hpp"
#include "support/fixture.hpp"
#include "support/published_tables.hpp"
#include "support/properties.hpp"

namespace {

using namespace edg;
using namespace edg::testing;
using Clock = std::chrono::steady_clock;

// Decimals are compared after rounding to two display places; the sum-of-m4
// tolerance (1e-9) lives with the property checks.
constexpr double kDisplayTolerance = 1e-9;
constexpr double kMetricsBudgetSeconds = 1.0;
constexpr double kPropertyBudgetSeconds = 30.0;
constexpr std::size_t kPropertyCases = 500;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

double round2(double x) { return std::round(x * 100.0) / 100.0; }

// Collects mismatches for one criterion.
class Check {
public:
    void expect(bool ok, const std::string& what) {
        if (!ok) problems_.push_back(what);
    }
    void equal(double got, double want, const std::string& what) {
        expect(std::abs(round2(got) - want) <= kDisplayTolerance,
               what + ": got " + format_decimal(got) + ", want " + format_decimal(want));
    }
    void equal(std::size_t got, std::size_t want, const std::string& what) {
        expect(got == want, what + ": got " + std::to_string(got) + ", want " + std::to_string(want));
    }
    bool ok() const { return problems_.empty(); }
    std::string summary() const {
        std::string s;
        for (std::size_t i = 0; i < problems_.size() && i < 5; ++i) s += (i ? "; " : "") + problems_[i];
        if (problems_.size() > 5) s += "; +" + std::to_string(problems_.size() - 5) + " more";
        return s;
    }

private:
    std::vector<std::string> problems_;
};

std::string cli_out(const std::vector<std::string>& args, int* code = nullptr) {
    std::ostringstream out, err;
    const int c = run_cli(args, out, err);
    if (code) *code = c;
    return out.str() + err.str();
}

Check metrics_reproduction(std::string& detail) {
    Check c;
    const auto start = Clock::now();
    const Timeline tl = replay(load_manifest(openplc_dir() / "manifest.json"),
                               events_from_json(read_json(openplc_dir() / "events.json")), openplc_catalogs());
    const LifecycleReport life = compute_lifecycle(tl);
    const double elapsed = seconds_since(start);

    const std::vector<std::string> epochs{"V1", "V2", "V3"};
    const std::vector<double> m0{4.79, 3.50, 0.26};
    const std::vector<std::size_t> m1{91, 77, 5}, m7{19, 18, 2}, m6_119{15, 11, 4};
    const std::vector<double> m4_ssl{0.71, 0.82};
    c.equal(life.epochs.size(), epochs.size(), "epoch count");
    for (std::size_t i = 0; i < epochs.size() && i < life.per_epoch.size(); ++i) {
        const MetricReport& r = life.per_epoch[i];
        c.expect(r.m0.has_value(), epochs[i] + " M0 missing");
        if (r.m0) c.equal(*r.m0, m0[i], epochs[i] + " M0");
        c.equal(r.m1, m1[i], epochs[i] + " M1");
        c.equal(r.m7, m7[i], epochs[i] + " M7");
        c.equal(r.m6.contains("CWE-119") ? r.m6.at("CWE-119") : 0, m6_119[i], epochs[i] + " M6(CWE-119)");
        if (i < m4_ssl.size()) {
            std::string ssl;
            for (const auto& [id, name] : r.names)
                if (name == "libssl") ssl = id;
            c.expect(!ssl.empty() && r.m4.contains(ssl), epochs[i] + " libssl missing");
            if (!ssl.empty() && r.m4.contains(ssl)) c.equal(r.m4.at(ssl), m4_ssl[i], epochs[i] + " M4(libssl)");
        }
    }
    c.equal(life.m2, 173, "M2");
    c.equal(life.m8_union, 22, "M8 union");
    const std::map<std::string, std::size_t> lifetime{{"CWE-119", 30}, {"CWE-200", 22}, {"CWE-310", 17}};
    for (const auto& [cwe, want] : lifetime) {
        std::size_t got = 0;
        for (const auto& f : life.weakness_frequency)
            if (f.cwe_id == cwe) got = f.count;
        c.equal(got, want, "lifetime " + cwe);
    }

    // The same constants as printed in the published tables.
    const PublishedMetricTable published = published_metric_table(reference_document());
    c.equal(published.m2, 173, "published M2");
    c.equal(published.m8, 22, "published M8");
    for (std::size_t i = 0; i < published.epochs.size() && i < m1.size(); ++i) {
        c.equal(published.epochs[i].m1, m1[i], "published M1 " + epochs[i]);
        c.equal(std::stod(published.epochs[i].m0), m0[i], "published M0 " + epochs[i]);
    }
    const auto totals = published_weakness_totals(reference_document());
    for (const auto& [cwe, want] : lifetime) c.equal(totals.count(cwe) ? totals.at(cwe) : 0, want, "published " + cwe);

    c.expect(elapsed < kMetricsBudgetSeconds, "took " + std::to_string(elapsed) + " s");
    detail = "replay + metrics in " + format_decimal(elapsed * 1000.0) + " ms";
    return c;
}

Check prioritization_reproduction(std::string& detail) {
    Check c;
    const std::string timeline = (openplc_dir() / "openplc.json").string();
    int code = 0;
    const std::string v3_text = cli_out({"prioritize", "--timeline", timeline, "--epoch", "V3", "--min", "6.0", "--max",
                                         "10.0", "--format", "json"},
                                        &code);
    c.expect(code == kExitOk, "prioritize V3 exit " + std::to_string(code));
    const auto v3 = nlohmann::json::parse(v3_text, nullptr, false);
    const auto want = published_prioritization(reference_document(), "tab:OpenPLCv3Prioritization");
    const MetricReport names = compute_metrics(openplc_timeline().epoch("V3"));
    c.expect(v3.is_array() && v3.size() == want.size(), "V3 row count differs from the published table");
    for (std::size_t i = 0; v3.is_array() && i < want.size() && i < v3.size(); ++i) {
        const auto& row = v3[i];
        c.expect(row["cve_id"] == want[i].cve_id, "V3 row " + std::to_string(i + 1) + " cve");
        c.expect(std::abs(row["cvss"].get<double>() - want[i].cvss) <= kDisplayTolerance,
                 "V3 row " + std::to_string(i + 1) + " cvss");
        const std::string asset = row["asset"];
        c.expect(names.names.contains(asset) && names.names.at(asset) == want[i].asset,
                 "V3 row " + std::to_string(i + 1) + " asset");
    }

    const auto v1 = nlohmann::json::parse(cli_out({"prioritize", "--timeline", timeline, "--epoch", "V1", "--global",
                                                   "--format", "json"}),
                                          nullptr, false);
    std::set<std::string> rank1;
    const MetricReport v1_names = compute_metrics(openplc_timeline().epoch("V1"));
    for (const auto& row : v1) {
        if (row["rank"] != 1) continue;
        rank1.insert(row["cve_id"].get<std::string>());
        c.expect(row["cvss"] == 10.0, "V1 rank-1 score");
        c.expect(v1_names.names.at(row["asset"].get<std::string>()) == "libssl", "V1 rank-1 asset");
    }
    const std::set<std::string> want_rank1{"CVE-2016-0705", "CVE-2016-0799", "CVE-2016-2842"};
    c.expect(rank1 == want_rank1, "V1 rank-1 set differs");
    detail = std::to_string(v3.size()) + " V3 rows, " + std::to_string(rank1.size()) + " V1 rank-1 entries";
    return c;
}

Check temporal_semantics(std::string& detail) {
    Check c;
    const Timeline tl = TimeModel::make().replayed();
    const std::string cve = TimeModel::kCve;
    const auto deprecated = [](const Edg& g) {
        std::set<std::pair<std::string, std::string>> out;
        for (const auto& e : g.edges)
            if (e.kind == EdgeKind::Deprecated) out.emplace(e.source, e.target);
        return out;
    };
    const auto has_normal = [](const Edg& g, const std::string& s, const std::string& t) {
        return g.edges.contains(Edge{s, t, EdgeKind::Normal});
    };
    using Pairs = std::set<std::pair<std::string, std::string>>;

    const Edg& t0 = tl.epoch("t0");
    const Edg t0c = cluster_by(t0, NoVulnerabilitiesCriterion{});
    c.equal(t0c.clusters.size(), 1, "t0 clusters");
    c.expect(t0c.assets.empty(), "t0 cluster should hold every asset");

    const Edg& t1 = tl.epoch("t1");
    c.expect(has_normal(t1, "a2", cve), "t1 a2 carries the vulnerability");
    c.expect(deprecated(t1).empty(), "t1 has no deprecated edges");

    const Edg& t2 = tl.epoch("t2");
    c.expect(has_normal(t2, "a2", cve) && has_normal(t2, "a3", cve), "t2 both versions carry the vulnerability");
    c.expect(deprecated(t2) == Pairs{{"a1", "a2"}}, "t2 deprecated edges");
    c.expect(t2.find_asset("a3") && t2.find_asset("a3")->predecessor == "a2", "t2 a3 succeeds a2");

    const Edg& t3 = tl.epoch("t3");
    c.expect(t3.vulns_of("a4").empty(), "t3 newest version is clean");
    c.expect(!has_normal(t3, "a4", cve), "t3 no edge from a4");
    c.expect(deprecated(t3) == (Pairs{{"a1", "a2"}, {"a1", "a3"}, {"a3", cve}}), "t3 deprecated edges");
    c.expect(has_normal(t3, "a1", "a4"), "t3 a1 depends on a4");
    detail = std::to_string(tl.snapshots().size()) + " snapshots replayed";
    return c;
}

Check property_suites(std::string& detail) {
    Check c;
    const auto start = Clock::now();
    const std::vector<std::pair<std::string, std::function<PropertyResult()>>> suites{
        {"cpe round-trip", [] { return cpe_round_trip(101, kPropertyCases); }},
        {"cluster/expand identity", [] { return cluster_expand_identity(102, kPropertyCases); }},
        {"metric oracle", [] { return metric_oracle(103, kPropertyCases); }},
        {"sum of m4", [] { return m4_sums_to_one(104, kPropertyCases); }},
        {"m8 union <= sum", [] { return m8_union_within_sum(105, kPropertyCases); }},
        {"replay determinism", [] { return replay_deterministic(106, kPropertyCases); }},
    };
    std::size_t total = 0;
    for (const auto& [name, run] : suites) {
        const PropertyResult r = run();
        total += r.cases;
        c.expect(r.cases >= kPropertyCases, name + " ran " + std::to_string(r.cases) + " cases");
        c.expect(r.ok(), name + ": " + r.first_failure);
    }
    const double elapsed = seconds_since(start);
    c.expect(elapsed < kPropertyBudgetSeconds, "took " + std::to_string(elapsed) + " s");
    detail = std::to_string(suites.size()) + " suites, " + std::to_string(total) + " cases in " +
             format_decimal(elapsed) + " s";
    return c;
}

Check ingestion(std::string& detail) {
    Check c;
    const auto feed = source_dir() / "tests" / "data" / "nvd_three_entries.json";
    const NvdImportResult v3 = import_nvd_feed(feed);
    const NvdImportResult v2 = import_nvd_feed(feed, {CvssPreference::PreferV2});
    c.equal(v3.records.size(), 3, "record count");
    const auto find = [](const NvdImportResult& r, const std::string& id) -> const VulnerabilityRecord* {
        for (const auto& v : r.records)
            if (v.cve_id == id) return &v;
        return nullptr;
    };
    const auto* both3 = find(v3, "CVE-2016-2108");
    const auto* both2 = find(v2, "CVE-2016-2108");
    const auto* only2 = find(v3, "CVE-2017-16997");
    const auto* bare = find(v3, "CVE-2019-99999");
    c.expect(both3 && both3->cvss.scheme == CvssScheme::V3 && both3->cvss.score == 9.8, "v3 preferred by default");
    c.expect(both2 && both2->cvss.scheme == CvssScheme::V2 && both2->cvss.score == 10.0, "v2 when asked");
    c.expect(only2 && only2->cvss.scheme == CvssScheme::V2 && only2->cvss.score == 9.3, "v2-only record");
    c.expect(bare && bare->cwe_ids == std::vector<std::string>{"CWE-NULL"}, "missing weakness maps to CWE-NULL");
    c.expect(both3 && both3->cwe_ids == std::vector<std::string>{"CWE-119"}, "first listed weakness kept");

    CatalogContents contents;
    contents.vulnerabilities = v3.records;
    const Catalog first = Catalog::build(std::move(contents));
    const std::string once = catalog_to_json(first).dump();
    const Catalog second = catalog_from_json(nlohmann::json::parse(once));
    c.expect(catalog_to_json(second).dump() == once, "serialize -> load -> serialize differs");
    c.expect(second.vulnerabilities() == first.vulnerabilities(), "records differ after reload");
    detail = std::to_string(v3.records.size()) + " records, " + std::to_string(v3.warnings.size()) + " warnings";
    return c;
}

Check reporting(std::string& detail) {
    Check c;
    const Timeline& tl = openplc_timeline();
    std::size_t graphs = 0;
    for (const auto& [label, g] : designated_epochs(tl)) {
        DotGraph d;
        try {
            d = parse_dot(export_dot(*g));
        } catch (const std::exception& e) {
            c.expect(false, label + " DOT does not parse: " + e.what());
            continue;
        }
        ++graphs;
        c.equal(d.declared.size(), 1 + g->assets.size() + g->vulns.size() + g->clusters.size(), label + " DOT nodes");
        c.equal(d.nodes.size(), d.declared.size(), label + " DOT undeclared nodes");
        c.equal(d.edges.size(), g->edges.size(), label + " DOT edges");
    }

    const std::vector<AlertRule> rules{parse_alert_rule("cvss>=10.0")};
    c.equal(check_alerts(tl.epoch("V1"), rules).size(), 3, "V1 alerts");
    c.equal(check_alerts(tl.epoch("V3"), rules).size(), 0, "V3 alerts");

    CatalogContents kb = load_catalog(openplc_dir() / "catalog_v3.json").contents();
    kb.vulnerabilities.clear();
    const Report report = build_report(tl, Catalog::build(std::move(kb)));
    std::size_t rows = 0;
    const auto check_table = [&](const char* label, const std::vector<RemediationEntry>& entries, bool by_capec) {
        for (const auto& row : published_table(reference_document(), label)) {
            ++rows;
            const std::set<std::string> ids(row.ids.begin(), row.ids.end());
            bool found = false;
            for (const auto& e : entries) {
                const auto& have = by_capec ? e.capec_ids : e.cwe_ids;
                found = found || (e.text == row.text && std::set<std::string>(have.begin(), have.end()) == ids);
            }
            c.expect(found, std::string(label) + " row missing: " + row.text.substr(0, 40));
        }
    };
    check_table("tab:requirements", report.remediation.requirements, false);
    check_table("tab:training", report.remediation.training, false);
    check_table("tab:testCases", report.remediation.test_cases, true);
    detail = std::to_string(graphs) + " DOT graphs, " + std::to_string(rows) + " published remediation rows";
    return c;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Check(std::string&)>>> criteria{
        {"metrics reproduction", metrics_reproduction},
        {"prioritization reproduction", prioritization_reproduction},
        {"temporal semantics", temporal_semantics},
        {"property suites", property_suites},
        {"ingestion", ingestion},
        {"reporting and alerts", reporting},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        std::string detail;
        Check result;
        try {
            result = criteria[i].second(detail);
        } catch (const std::exception& e) {
            result.expect(false, std::string("exception: ") + e.what());
        }
        const bool ok = result.ok();
        if (!ok) ++failed;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << i + 1 << ": " << criteria[i].first;
        if (!ok) std::cout << " (" << result.summary() << ")";
        else if (!detail.empty()) std::cout << " (" << detail << ")";
        std::cout << "\n";
    }
    return failed == 0 ? 0 : 1;
}
