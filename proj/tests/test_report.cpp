#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>

#include "edg/alerts.hpp"
#include "edg/dot.hpp"
#include "edg/errors.hpp"
#include "edg/report.hpp"
#include "support/dot_checker.hpp"
#include "support/fixture.hpp"
#include "support/published_tables.hpp"

namespace edg {
namespace {

using testing::openplc_dir;
using testing::openplc_timeline;
using testing::published_table;
using testing::parse_dot;
using testing::reference_document;
using testing::source_dir;
using testing::TimeModel;

// Knowledge base: the fixture catalog without its vulnerability records.
Catalog fixture_kb() {
    CatalogContents c = load_catalog(openplc_dir() / "catalog_v3.json").contents();
    c.vulnerabilities.clear();
    return Catalog::build(std::move(c));
}

std::size_t count_of(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto at = text.find(needle); at != std::string::npos; at = text.find(needle, at + needle.size())) ++n;
    return n;
}

// Alerts --------------------------------------------------------------------

TEST(AlertRules, ParseAndFormat) {
    const AlertRule cvss = parse_alert_rule("cvss>=10");
    EXPECT_EQ(std::get<CvssAtLeast>(cvss.condition).threshold, 10.0);
    EXPECT_EQ(cvss.severity, "warning");
    EXPECT_EQ(format_alert_rule(cvss), "cvss>=10.00:warning");

    const AlertRule metric = parse_alert_rule(" m4 > 0.5 : critical ");
    const auto& b = std::get<MetricBound>(metric.condition);
    EXPECT_EQ(b.metric, "M4");
    EXPECT_EQ(b.comparator, Comparator::Greater);
    EXPECT_DOUBLE_EQ(b.bound, 0.5);
    EXPECT_EQ(metric.severity, "critical");
    EXPECT_EQ(parse_alert_rule(format_alert_rule(metric)), metric);

    EXPECT_EQ(std::get<MetricBound>(parse_alert_rule("M1<=3").condition).comparator, Comparator::LessEqual);
    EXPECT_EQ(std::get<MetricBound>(parse_alert_rule("M1<3").condition).comparator, Comparator::Less);
}

TEST(AlertRules, Rejections) {
    for (const char* bad : {"cvss<5", "cvss>=11", "cvss>=-1", "M0", ">=3", "M0>=abc", "M0>=1:", "M0>=1x"})
        EXPECT_THROW(parse_alert_rule(bad), InvalidArgument) << bad;
    EXPECT_THROW(parse_alert_rule("M9>=1"), UnknownMetric);
}

TEST(AlertRules, Comparators) {
    EXPECT_TRUE(compare(1.0, Comparator::Less, 2.0));
    EXPECT_FALSE(compare(2.0, Comparator::Less, 2.0));
    EXPECT_TRUE(compare(2.0, Comparator::LessEqual, 2.0));
    EXPECT_TRUE(compare(3.0, Comparator::Greater, 2.0));
    EXPECT_TRUE(compare(2.0, Comparator::GreaterEqual, 2.0));
    EXPECT_EQ(to_string(Comparator::GreaterEqual), ">=");
}

TEST(CheckAlerts, PerfectScoresOnTheFixture) {
    const std::vector<AlertRule> rules{parse_alert_rule("cvss>=10.0")};
    const auto v1 = check_alerts(openplc_timeline().epoch("V1"), rules);
    ASSERT_EQ(v1.size(), 3u);
    std::set<std::string> ids;
    for (const auto& f : v1) {
        ids.insert(f.entity);
        EXPECT_DOUBLE_EQ(f.value, 10.0);
        EXPECT_EQ(f.rule_index, 0u);
    }
    EXPECT_EQ(ids, (std::set<std::string>{"CVE-2016-0705", "CVE-2016-0799", "CVE-2016-2842"}));
    EXPECT_TRUE(check_alerts(openplc_timeline().epoch("V3"), rules).empty());
    EXPECT_EQ(check_alerts(openplc_timeline().epoch("V2"), rules).size(), 4u);
}

TEST(CheckAlerts, MetricBounds) {
    const Timeline& tl = openplc_timeline();
    const Edg& v1 = tl.epoch("V1");
    const auto sut = check_alerts(v1, {parse_alert_rule("M0>=4.5"), parse_alert_rule("M1>100")});
    ASSERT_EQ(sut.size(), 1u);
    EXPECT_EQ(sut[0].entity, "SUT");
    EXPECT_EQ(sut[0].rule_index, 0u);
    EXPECT_NEAR(sut[0].value, 91.0 / 19.0, 1e-12);

    const auto share = check_alerts(v1, {parse_alert_rule("M4>0.5:high")});
    ASSERT_EQ(share.size(), 1u);
    EXPECT_EQ(share[0].severity, "high");
    EXPECT_EQ(compute_metrics(v1).names.at(share[0].entity), "libssl");

    const auto per_cwe = check_alerts(v1, {parse_alert_rule("M6>=12")});
    std::set<std::string> cwes;
    for (const auto& f : per_cwe) cwes.insert(f.entity);
    EXPECT_EQ(cwes, (std::set<std::string>{"CWE-119", "CWE-310", "CWE-NULL"}));

    const auto per_asset_cwe = check_alerts(v1, {parse_alert_rule("M5>=12")});
    ASSERT_EQ(per_asset_cwe.size(), 2u);
    for (const auto& f : per_asset_cwe) EXPECT_NE(f.entity.find('/'), std::string::npos);

    EXPECT_THROW(check_alerts(v1, {parse_alert_rule("M2>=1")}), InvalidArgument);
    const auto life = check_alerts(v1, {parse_alert_rule("M2>=173"), parse_alert_rule("M8>22")}, &tl);
    ASSERT_EQ(life.size(), 1u);
    EXPECT_DOUBLE_EQ(life[0].value, 173.0);
}

TEST(CheckAlerts, MissingValuesNeverFire) {
    const Timeline tl = TimeModel::make().replayed();
    EXPECT_TRUE(check_alerts(tl.epoch("t3"), {parse_alert_rule("M4>=0")}).empty());
    EXPECT_EQ(check_alerts(tl.epoch("t3"), {parse_alert_rule("M1<=0")}).size(), 1u);
    const auto json = alert_firings_to_json(check_alerts(tl.epoch("t2"), {parse_alert_rule("cvss>=7")}));
    ASSERT_EQ(json.size(), 1u);
    EXPECT_EQ(json[0]["entity"], TimeModel::kCve);
    EXPECT_EQ(json[0]["rule"], "cvss>=7.00:warning");
}

// DOT ------------------------------------------------------------------------

void expect_dot_matches(const Edg& g, const RenderOptions& opts, const std::string& what) {
    const std::string text = export_dot(g, opts);
    testing::DotGraph d;
    ASSERT_NO_THROW(d = parse_dot(text)) << what;
    Edg shown = opts.cluster ? cluster_by(g, *opts.cluster) : g;
    if (!opts.show_deprecated) shown = active_subgraph(shown);
    EXPECT_TRUE(d.directed) << what;
    EXPECT_EQ(d.declared.size(), 1 + shown.assets.size() + shown.vulns.size() + shown.clusters.size()) << what;
    EXPECT_EQ(d.nodes.size(), d.declared.size()) << what;  // no edge to an undeclared node
    EXPECT_EQ(d.edges.size(), shown.edges.size()) << what;

    std::size_t dashed = 0;
    for (const auto& e : d.edges)
        if (e.attrs.contains("style") && e.attrs.at("style") == "dashed") ++dashed;
    const auto deprecated = std::count_if(shown.edges.begin(), shown.edges.end(),
                                          [](const Edge& e) { return e.kind == EdgeKind::Deprecated; });
    EXPECT_EQ(dashed, static_cast<std::size_t>(deprecated)) << what;
    for (const auto& [id, v] : shown.vulns) EXPECT_EQ(d.nodes.at(id).attrs.at("shape"), "invtriangle") << what;
    for (const auto& [id, c] : shown.clusters) EXPECT_EQ(d.nodes.at(id).attrs.at("style"), "dotted") << what;
    EXPECT_EQ(d.nodes.at("root").attrs.at("shape"), "box");
}

TEST(DotExport, EveryFixtureSnapshotParsesWithMatchingCounts) {
    const Timeline& tl = openplc_timeline();
    for (std::size_t i = 0; i < tl.snapshots().size(); ++i)
        expect_dot_matches(tl.snapshots()[i], {}, "snapshot " + std::to_string(i));
    for (const char* epoch : {"V1", "V2", "V3"}) {
        const Edg& g = tl.epoch(epoch);
        expect_dot_matches(g, {CvssBelowCriterion{7.0}, true, std::nullopt, LabelVerbosity::Full}, epoch);
        expect_dot_matches(g, {NoVulnerabilitiesCriterion{}, false, std::nullopt, LabelVerbosity::Brief}, epoch);
    }
}

TEST(DotExport, TimeModelStyles) {
    const Timeline tl = TimeModel::make().replayed();
    const std::string text = export_dot(tl.epoch("t3"));
    const auto d = parse_dot(text);
    EXPECT_EQ(d.nodes.at("a3").attrs.at("style"), "dashed");
    EXPECT_FALSE(d.nodes.at("a4").attrs.contains("style"));
    EXPECT_EQ(d.nodes.at("a4").attrs.at("shape"), "ellipse");
    EXPECT_EQ(count_of(text, "[style=dashed]"), 3u);  // a1->a2, a1->a3, a3->CVE; a2->CVE stays normal
    EXPECT_NE(text.find("label=\"epoch t3\""), std::string::npos);

    const std::string brief = export_dot(tl.epoch("t2"));
    const auto t2 = parse_dot(brief);
    std::size_t dashed = 0, solid_to_cve = 0;
    for (const auto& e : t2.edges) {
        const bool is_dashed = e.attrs.contains("style") && e.attrs.at("style") == "dashed";
        dashed += is_dashed;
        solid_to_cve += !is_dashed && e.target == TimeModel::kCve;
    }
    EXPECT_EQ(dashed, 1u);
    EXPECT_EQ(solid_to_cve, 2u);
    const std::string full = export_dot(tl.epoch("t2"), {std::nullopt, true, "release", LabelVerbosity::Full});
    EXPECT_EQ(brief.find("CWE-119"), std::string::npos);
    EXPECT_NE(full.find("CWE-119"), std::string::npos);
    EXPECT_NE(full.find("label=\"epoch release\""), std::string::npos);

    const std::string active = export_dot(tl.epoch("t3"), {std::nullopt, false, std::nullopt, LabelVerbosity::Brief});
    EXPECT_EQ(active.find("dashed"), std::string::npos);
}

TEST(DotExport, Deterministic) {
    const Edg& g = openplc_timeline().epoch("V2");
    EXPECT_EQ(export_dot(g), export_dot(g));
}

TEST(DotExport, Quoting) {
    EXPECT_EQ(dot_quote("plain"), "\"plain\"");
    EXPECT_EQ(dot_quote("a\"b"), "\"a\\\"b\"");
    EXPECT_EQ(dot_quote("a\\b"), "\"a\\\\b\"");
    EXPECT_EQ(dot_quote("a\nb"), "\"a\\nb\"");
    const auto d = parse_dot("digraph { " + dot_quote("x\"y\\z") + " -> b; }");
    EXPECT_EQ(d.edges.size(), 1u);
}

TEST(DotChecker, RejectsBrokenInput) {
    EXPECT_THROW(parse_dot("digraph { a -> ; }"), std::runtime_error);
    EXPECT_THROW(parse_dot("digraph { a -- b; }"), std::runtime_error);
    EXPECT_THROW(parse_dot("digraph { \"open }"), std::runtime_error);
    EXPECT_THROW(parse_dot("digraph { a [label=x; }"), std::runtime_error);
    EXPECT_THROW(parse_dot("graph { a -> b; }"), std::runtime_error);
    EXPECT_NO_THROW(parse_dot("strict digraph g { a -> b -> c [style=dashed]; subgraph s { d } // note\n }"));
}

// Report ---------------------------------------------------------------------

bool has_entry(const std::vector<RemediationEntry>& entries, const std::string& text,
               const std::vector<std::string>& ids, bool by_capec) {
    const std::set<std::string> want(ids.begin(), ids.end());
    for (const auto& e : entries) {
        const auto& have = by_capec ? e.capec_ids : e.cwe_ids;
        if (e.text == text && std::set<std::string>(have.begin(), have.end()) == want) return true;
    }
    return false;
}

TEST(Report, RemediationReproducesThePublishedTables) {
    const Report r = build_report(openplc_timeline(), fixture_kb());
    const auto doc = reference_document();
    const auto reqs = published_table(doc, "tab:requirements");
    const auto training = published_table(doc, "tab:training");
    const auto tests = published_table(doc, "tab:testCases");
    ASSERT_FALSE(reqs.empty());
    ASSERT_FALSE(training.empty());
    ASSERT_FALSE(tests.empty());
    for (const auto& row : reqs) EXPECT_TRUE(has_entry(r.remediation.requirements, row.text, row.ids, false)) << row.text;
    for (const auto& row : training) EXPECT_TRUE(has_entry(r.remediation.training, row.text, row.ids, false)) << row.text;
    for (const auto& row : tests) EXPECT_TRUE(has_entry(r.remediation.test_cases, row.text, row.ids, true)) << row.text;
}

TEST(Report, Sections) {
    const Report r = build_report(openplc_timeline(), fixture_kb());
    EXPECT_EQ(r.sut, "cpe:2.3:a:openplc_project:openplc:3.0:*:*:*:*:*:*:*");
    ASSERT_EQ(r.prioritization.size(), 3u);
    EXPECT_EQ(r.prioritization[2].entries.size(), 3u);
    EXPECT_EQ(r.unclassified, 22u);
    ASSERT_FALSE(r.root_causes.empty());
    EXPECT_EQ(r.root_causes.front().cwe_id, "CWE-119");
    EXPECT_EQ(r.root_causes.front().count, 30u);
    EXPECT_FALSE(r.root_causes.front().name.empty());
    for (const auto& rc : r.root_causes) EXPECT_NE(rc.cwe_id, "CWE-NULL");
    ASSERT_EQ(r.iec62443.size(), kMetricCount);
    EXPECT_EQ(r.iec62443[2].tags, iec62443_annotations("M2"));
    ASSERT_EQ(r.fixed.size(), 2u);
    EXPECT_EQ(r.fixed[0].from_epoch, "V1");
    EXPECT_EQ(r.fixed[1].to_epoch, "V3");
    // Every V1 record not present in V2 counts as fixed.
    const auto v1 = prioritize(openplc_timeline().epoch("V1"), 0, 10);
    const auto v2 = prioritize(openplc_timeline().epoch("V2"), 0, 10);
    std::set<std::string> a, b;
    for (const auto& p : v1) a.insert(p.cve_id);
    for (const auto& p : v2) b.insert(p.cve_id);
    std::vector<std::string> gone;
    std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(gone));
    EXPECT_EQ(r.fixed[0].cves, gone);

    const std::string md = render_report_markdown(r);
    for (const char* heading : {"## Metrics", "## Prioritization", "## Weakness frequency", "## Root causes",
                                "## Remediation", "### Requirements", "### Training", "### Test cases",
                                "## ISA/IEC 62443-4-1 annotations", "## Fixed vulnerabilities"})
        EXPECT_NE(md.find(heading), std::string::npos) << heading;
}

TEST(Report, MarkdownAndJsonCarryTheSameNumbers) {
    const Report r = build_report(openplc_timeline(), fixture_kb());
    const std::string md = render_report_markdown(r);
    const nlohmann::json j = nlohmann::json::parse(generate_report(openplc_timeline(), fixture_kb(), ReportFormat::Json));
    EXPECT_EQ(j, report_to_json(r));
    EXPECT_EQ(j["metrics"]["m2"], 173);
    EXPECT_NE(md.find("| M2 | 173 |"), std::string::npos);
    EXPECT_NE(md.find("| M8 (union) | " + j["metrics"]["m8_union"].dump() + " |"), std::string::npos);
    for (const auto& ep : j["metrics"]["epochs"])
        EXPECT_NE(md.find("M0  " + format_decimal(ep["m0"].get<double>())), std::string::npos);
    std::size_t md_rows = 0, json_rows = 0;
    for (const auto& ep : j["prioritization"]["epochs"]) json_rows += ep["entries"].size();
    for (const auto& ep : r.prioritization)
        for (const auto& e : ep.entries)
            if (md.find("| " + e.cve_id + " | " + format_decimal(e.cvss) + " |") != std::string::npos) ++md_rows;
    EXPECT_EQ(md_rows, json_rows);
    EXPECT_EQ(j["root_causes"].size(), r.root_causes.size());
    EXPECT_EQ(j["remediation"]["test_cases"].size(), r.remediation.test_cases.size());
}

TEST(Report, SingleVulnerabilityFreeEpoch) {
    TimeModel m = TimeModel::make();
    m.events.clear();
    const Timeline tl = m.replayed();
    const Report r = build_report(tl, Catalog{});
    EXPECT_TRUE(r.fixed.empty());
    EXPECT_TRUE(r.root_causes.empty());
    EXPECT_TRUE(r.remediation.empty());
    const std::string md = render_report_markdown(r);
    EXPECT_NE(md.find("No vulnerabilities in the window."), std::string::npos);
    EXPECT_NE(md.find("No weaknesses recorded."), std::string::npos);
    EXPECT_NE(md.find("No remediation entries apply."), std::string::npos);
    EXPECT_NE(md.find("Only one epoch; nothing to compare."), std::string::npos);
    EXPECT_EQ(report_to_json(r)["unclassified"], 0);
}

TEST(Report, WindowAndMapping) {
    EXPECT_THROW(build_report(openplc_timeline(), Catalog{}, {7.0, 6.0, nullptr}), InvalidArgument);
    const Report wide = build_report(openplc_timeline(), Catalog{}, {0.0, 10.0, nullptr});
    EXPECT_EQ(wide.prioritization[0].entries.size(), 91u);
    const auto custom = Iec62443Mapping::parse("metric,X\nM0,1\nM1,0\nM2,0\nM3,0\nM4,0\nM5,0\nM6,0\nM7,0\nM8,1\n", "t");
    const Report tagged = build_report(openplc_timeline(), Catalog{}, {6.0, 10.0, &custom});
    EXPECT_EQ(tagged.iec62443[0].tags, std::vector<std::string>{"X"});
    EXPECT_TRUE(tagged.iec62443[1].tags.empty());
    EXPECT_NE(render_report_markdown(tagged).find("| M1 | - |"), std::string::npos);
}

}  // namespace
}  // namespace edg
