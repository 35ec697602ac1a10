#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <string>

#include "edg/errors.hpp"
#include "edg/graph.hpp"
#include "support/fixture.hpp"

namespace edg {
namespace {

using testing::openplc_timeline;
using testing::TimeModel;

constexpr const char* kCve = TimeModel::kCve;

const Edge normal(const char* s, const char* t) { return Edge{s, t, EdgeKind::Normal}; }
const Edge deprecated(const char* s, const char* t) { return Edge{s, t, EdgeKind::Deprecated}; }

std::set<std::string> active_ids(const Edg& g) {
    std::set<std::string> out;
    for (const AssetNode* a : g.active_assets()) out.insert(a->id);
    return out;
}

Edg snapshot(const Timeline& tl, const char* epoch) { return tl.epoch(epoch); }

TEST(BuildEdg, RootEdgesGoToTopLevelAndUnrequiredAssets) {
    const TimeModel m = TimeModel::make();
    const Edg g = build_edg(m.manifest, m.catalog);
    EXPECT_EQ(g.epoch, "t0");
    EXPECT_EQ(g.assets.size(), 2u);
    EXPECT_TRUE(g.vulns.empty());  // the record is published after the manifest date
    EXPECT_EQ(g.edges, (std::set<Edge>{normal("root", "a1"), normal("a1", "a2")}));
    EXPECT_EQ(g.find_asset("a1")->seq, 1u);
    EXPECT_EQ(g.find_asset("a2")->seq, 2u);
    EXPECT_TRUE(validate(g).empty());
}

TEST(BuildEdg, AttachesCatalogHitsAtTheManifestDate) {
    TimeModel m = TimeModel::make();
    m.manifest.at = Timestamp::parse("2020-02-01T00:00:00Z");
    const Edg g = build_edg(m.manifest, m.catalog);
    ASSERT_EQ(g.vulns.size(), 1u);
    EXPECT_TRUE(g.edges.contains(normal("a2", kCve)));
    EXPECT_EQ(g.vulns.at(kCve).cwe_ids, std::vector<std::string>{"CWE-119"});
}

TEST(BuildEdg, Errors) {
    const TimeModel m = TimeModel::make();
    Manifest empty = m.manifest;
    empty.assets.clear();
    EXPECT_THROW(build_edg(empty, m.catalog), EmptyManifest);

    Manifest dup = m.manifest;
    dup.assets.push_back(dup.assets[1]);
    EXPECT_THROW(build_edg(dup, m.catalog), DuplicateId);

    Manifest dangling = m.manifest;
    dangling.assets[1].depends_on = {"nowhere"};
    EXPECT_THROW(build_edg(dangling, m.catalog), UnknownDependencyTarget);

    Manifest self = m.manifest;
    self.assets[1].depends_on = {"a2"};
    EXPECT_THROW(build_edg(self, m.catalog), InvalidArgument);

    for (const char* reserved : {"", "root", "cluster(x)", "CVE-2020-1"}) {
        Manifest bad = m.manifest;
        bad.assets[0].id = reserved;
        EXPECT_THROW(build_edg(bad, m.catalog), InvalidArgument) << reserved;
    }

    Manifest vague = m.manifest;
    vague.assets[0].cpe = WellFormedName(Part::Any, "example", "p1");
    EXPECT_THROW(build_edg(vague, m.catalog), InvalidArgument);
}

TEST(BuildEdg, UnreachableCycleIsAttachedToTheRoot) {
    const TimeModel m = TimeModel::make();
    Manifest cyc = m.manifest;
    cyc.assets[0].top_level = false;
    cyc.assets[1].depends_on = {"a1"};
    const Edg g = build_edg(cyc, m.catalog);
    EXPECT_TRUE(g.edges.contains(normal("root", "a1")));
    EXPECT_FALSE(g.edges.contains(normal("root", "a2")));
    EXPECT_TRUE(validate(g).empty());
}

TEST(TimeModelScenario, DiscoveryAddsOneNormalEdge) {
    const Timeline tl = TimeModel::make().replayed();
    const Edg g = snapshot(tl, "t1");
    EXPECT_EQ(g.edges, (std::set<Edge>{normal("root", "a1"), normal("a1", "a2"), normal("a2", kCve)}));
}

TEST(TimeModelScenario, UpdateWithoutFixKeepsTheVulnerabilityOnBothVersions) {
    const Timeline tl = TimeModel::make().replayed();
    const Edg g = snapshot(tl, "t2");
    EXPECT_EQ(g.edges, (std::set<Edge>{normal("root", "a1"), deprecated("a1", "a2"), normal("a1", "a3"),
                                       normal("a2", kCve), normal("a3", kCve)}));
    EXPECT_TRUE(g.find_asset("a2")->deprecated);
    const AssetNode* a3 = g.find_asset("a3");
    EXPECT_EQ(a3->predecessor, "a2");
    EXPECT_EQ(a3->cpe_previous, TimeModel::cpe("p2", "1.0"));
    EXPECT_EQ(a3->name, "a2");
    EXPECT_EQ(active_ids(g), (std::set<std::string>{"a1", "a3"}));
    ASSERT_EQ(g.vulns_of("a3").size(), 1u);
}

TEST(TimeModelScenario, FixingUpdateLeavesTheSuccessorClean) {
    const Timeline tl = TimeModel::make().replayed();
    const Edg g = snapshot(tl, "t3");
    EXPECT_TRUE(g.vulns_of("a4").empty());
    EXPECT_TRUE(g.edges.contains(deprecated("a3", kCve)));
    EXPECT_TRUE(g.edges.contains(deprecated("a1", "a3")));
    EXPECT_TRUE(g.edges.contains(normal("a1", "a4")));
    EXPECT_TRUE(active_subgraph(g).vulns.empty());
    EXPECT_EQ(version_chain(g, "a4"),
              (std::vector<WellFormedName>{TimeModel::cpe("p2", "3.0"), TimeModel::cpe("p2", "2.0"),
                                           TimeModel::cpe("p2", "1.0")}));
    for (const Edg& s : tl.snapshots()) EXPECT_TRUE(validate(s).empty()) << s.epoch;
}

TEST(UpdateAsset, GeneratesSuccessorIdsAndRejectsBadInput) {
    const TimeModel m = TimeModel::make();
    const Timeline tl = m.replayed();
    const Edg t1 = snapshot(tl, "t1");
    const Edg u = update_asset(t1, "a2", TimeModel::cpe("p2", "2.0"), m.catalog, {});
    EXPECT_NE(u.find_asset("a2@2"), nullptr);
    const Edg u2 = update_asset(u, "a2@2", TimeModel::cpe("p2", "3.0"), m.catalog, {});
    EXPECT_NE(u2.find_asset("a2@3"), nullptr);

    EXPECT_THROW(update_asset(t1, "zz", TimeModel::cpe("p2", "2.0"), m.catalog, {}), UnknownAsset);
    EXPECT_THROW(update_asset(t1, "a2", TimeModel::cpe("p2", "1.0"), m.catalog, {}), SelfSucc);
    EXPECT_THROW(update_asset(t1, "a1", TimeModel::cpe("p1", "2.0"), m.catalog, {kCve}), UnknownCve);
    EXPECT_THROW(update_asset(t1, "a2", TimeModel::cpe("p2", "2.0"), m.catalog, {}, "a1"), DuplicateId);
    EXPECT_THROW(update_asset(u, "a2", TimeModel::cpe("p2", "4.0"), m.catalog, {}), UnknownAsset);
    const Edg clustered = cluster_by(t1, NoVulnerabilitiesCriterion{});
    EXPECT_THROW(update_asset(clustered, "a2", TimeModel::cpe("p2", "2.0"), m.catalog, {}), InvalidArgument);
}

TEST(DiscoverAndPatch, EdgesAndErrors) {
    const TimeModel m = TimeModel::make();
    const Timeline tl = m.replayed();
    const Edg& t0 = tl.snapshots().front();
    const Edg d = discover_vulnerability(t0, kCve, "a1", m.catalog);
    EXPECT_TRUE(d.edges.contains(normal("a1", kCve)));
    EXPECT_THROW(discover_vulnerability(t0, "CVE-2099-0001", "a1", m.catalog), UnknownCve);
    EXPECT_THROW(discover_vulnerability(t0, kCve, "zz", m.catalog), UnknownAsset);

    const Edg p = patch_vulnerability(d, kCve, "a1");
    EXPECT_TRUE(p.edges.contains(deprecated("a1", kCve)));
    EXPECT_FALSE(p.edges.contains(normal("a1", kCve)));
    EXPECT_THROW(patch_vulnerability(p, kCve, "a1"), UnknownCve);
    EXPECT_THROW(patch_vulnerability(d, kCve, "a2"), UnknownCve);
    EXPECT_TRUE(validate(p).empty());
}

TEST(AddRemove, RemovalReattachesOrphansInCreationOrder) {
    const TimeModel m = TimeModel::make();
    const Edg t1 = snapshot(m.replayed(), "t1");
    const ManifestEntry a5{"a5", "five", TimeModel::cpe("p5", "1.0"), {"a2"}, false};
    const Edg added = add_asset(t1, a5, {"a1"}, m.catalog, Date::parse("2020-01-02"));
    EXPECT_TRUE(added.edges.contains(normal("a1", "a5")));
    EXPECT_TRUE(added.edges.contains(normal("a5", "a2")));
    EXPECT_FALSE(added.edges.contains(normal("root", "a5")));
    EXPECT_EQ(added.find_asset("a5")->name, "five");

    const Edg removed = remove_asset(added, "a1");
    EXPECT_TRUE(removed.find_asset("a1")->deprecated);
    EXPECT_TRUE(removed.edges.contains(deprecated("root", "a1")));
    EXPECT_TRUE(removed.edges.contains(deprecated("a1", "a5")));
    EXPECT_TRUE(removed.edges.contains(normal("root", "a2")));
    EXPECT_TRUE(removed.edges.contains(normal("root", "a5")));
    EXPECT_TRUE(validate(removed).empty());
    EXPECT_EQ(active_ids(removed), (std::set<std::string>{"a2", "a5"}));
}

TEST(AddRemove, Errors) {
    const TimeModel m = TimeModel::make();
    const Edg t1 = snapshot(m.replayed(), "t1");
    const Date at = Date::parse("2020-01-02");
    EXPECT_THROW(add_asset(t1, {"a2", "", TimeModel::cpe("p", "1"), {}, false}, {}, m.catalog, at), DuplicateId);
    EXPECT_THROW(add_asset(t1, {"a9", "", TimeModel::cpe("p", "1"), {"zz"}, false}, {}, m.catalog, at),
                 UnknownDependencyTarget);
    EXPECT_THROW(add_asset(t1, {"a9", "", TimeModel::cpe("p", "1"), {}, false}, {"zz"}, m.catalog, at), UnknownAsset);
    EXPECT_THROW(add_asset(t1, {"cluster(z)", "", TimeModel::cpe("p", "1"), {}, false}, {}, m.catalog, at), InvalidArgument);
    EXPECT_THROW(remove_asset(t1, "zz"), UnknownAsset);
    EXPECT_THROW(remove_asset(remove_asset(t1, "a2"), "a2"), UnknownAsset);
}

TEST(AddRemove, NewAssetPicksUpCatalogHits) {
    const TimeModel m = TimeModel::make();
    const Edg t0 = m.replayed().snapshots().front();
    const Edg g = add_asset(t0, {"a9", "", TimeModel::cpe("p2", "2.0"), {}, true}, {"a1"}, m.catalog,
                            Date::parse("2020-01-05"));
    EXPECT_TRUE(g.edges.contains(normal("root", "a9")));
    EXPECT_TRUE(g.edges.contains(normal("a9", kCve)));
}

TEST(VersionChain, BrokenLinksAreReported) {
    const Edg base = snapshot(TimeModel::make().replayed(), "t3");
    EXPECT_THROW(version_chain(base, "zz"), UnknownAsset);
    EXPECT_EQ(version_chain(base, "a1").size(), 1u);

    Edg incomplete = base;
    incomplete.assets.at("a4").cpe_previous.reset();
    EXPECT_THROW(version_chain(incomplete, "a4"), BrokenChain);

    Edg missing = base;
    missing.assets.erase("a3");
    EXPECT_THROW(version_chain(missing, "a4"), BrokenChain);

    Edg mismatch = base;
    mismatch.assets.at("a4").cpe_previous = TimeModel::cpe("p2", "9.9");
    EXPECT_THROW(version_chain(mismatch, "a4"), BrokenChain);

    Edg loop = base;
    loop.assets.at("a2").predecessor = "a4";
    loop.assets.at("a2").cpe_previous = loop.assets.at("a4").cpe_current;
    EXPECT_THROW(version_chain(loop, "a4"), BrokenChain);
    EXPECT_FALSE(validate(loop).empty());
}

TEST(Clustering, VulnerabilityFreeSnapshotCollapsesToOneCluster) {
    const Edg t0 = TimeModel::make().replayed().snapshots().front();
    const Edg c = cluster_by(t0, NoVulnerabilitiesCriterion{});
    ASSERT_EQ(c.clusters.size(), 1u);
    const Cluster& cl = c.clusters.begin()->second;
    EXPECT_EQ(cl.id, "cluster(a1)");
    EXPECT_EQ(cl.assets.size(), 2u);
    EXPECT_TRUE(c.assets.empty());
    EXPECT_EQ(c.edges, (std::set<Edge>{normal("root", "cluster(a1)")}));
    EXPECT_TRUE(validate(c).empty());
    EXPECT_EQ(expand_clusters(c), t0);
}

TEST(Clustering, CvssThresholdDecidesEligibility) {
    const Edg t1 = snapshot(TimeModel::make().replayed(), "t1");
    const Edg high = cluster_by(t1, CvssBelowCriterion{8.0});
    ASSERT_EQ(high.clusters.size(), 1u);
    EXPECT_EQ(high.clusters.begin()->second.vulns.size(), 1u);
    EXPECT_TRUE(high.vulns.empty());

    const Edg low = cluster_by(t1, CvssBelowCriterion{7.0});
    ASSERT_EQ(low.clusters.size(), 1u);
    EXPECT_EQ(low.clusters.begin()->second.assets.size(), 1u);
    EXPECT_TRUE(low.edges.contains(normal("cluster(a1)", "a2")));
    EXPECT_EQ(expand_clusters(low), t1);
    EXPECT_EQ(expand_clusters(high), t1);

    const Edg scoped = cluster_by(t1, CvssBelowCriterion{8.0}, std::set<std::string>{"a2"});
    ASSERT_EQ(scoped.clusters.size(), 1u);
    EXPECT_EQ(scoped.clusters.begin()->first, "cluster(a2)");

    EXPECT_THROW(cluster_by(t1, CvssBelowCriterion{-0.1}), InvalidArgument);
    EXPECT_THROW(cluster_by(t1, CvssBelowCriterion{10.1}), InvalidArgument);
}

TEST(Clustering, NestedClustersExpandInReverse) {
    const Edg t1 = snapshot(TimeModel::make().replayed(), "t1");
    const Edg once = cluster_by(t1, CvssBelowCriterion{7.0});
    const Edg twice = cluster_by(once, CvssBelowCriterion{8.0});
    EXPECT_EQ(expand_clusters(twice), t1);
}

TEST(Clustering, FixtureEpochsRoundTrip) {
    for (const char* epoch : {"V1", "V2", "V3"}) {
        const Edg& g = openplc_timeline().epoch(epoch);
        for (double th : {0.0, 4.0, 7.0, 10.0}) {
            const Edg c = cluster_by(g, CvssBelowCriterion{th});
            EXPECT_TRUE(validate(c).empty()) << epoch << " " << th;
            EXPECT_EQ(expand_clusters(c), g) << epoch << " " << th;
        }
        EXPECT_EQ(expand_clusters(cluster_by(g, NoVulnerabilitiesCriterion{})), g) << epoch;
    }
}

TEST(ImpactSet, FollowsActiveDependents) {
    const Timeline tl = TimeModel::make().replayed();
    EXPECT_EQ(impact_set(snapshot(tl, "t1"), kCve), (std::set<std::string>{"a1", "a2"}));
    EXPECT_EQ(impact_set(snapshot(tl, "t2"), kCve), (std::set<std::string>{"a1", "a3"}));
    EXPECT_EQ(impact_set(cluster_by(snapshot(tl, "t1"), CvssBelowCriterion{8.0}), kCve),
              (std::set<std::string>{"a1", "a2"}));
    EXPECT_THROW(impact_set(snapshot(tl, "t1"), "CVE-2099-0001"), UnknownCve);
}

TEST(ImpactSet, FixtureLibcFlawReachesEveryActiveAsset) {
    const Edg& v3 = openplc_timeline().epoch("V3");
    const std::set<std::string> hit = impact_set(v3, "CVE-2018-11236");
    for (const Edge& e : v3.edges)
        if (e.source == "root" && e.kind == EdgeKind::Normal) EXPECT_TRUE(hit.contains(e.target)) << e.target;
    EXPECT_EQ(hit.size(), v3.active_assets().size());  // everything depends on libc
}

TEST(ActiveSubgraph, DropsDeprecatedParts) {
    const Edg t3 = snapshot(TimeModel::make().replayed(), "t3");
    const Edg v = active_subgraph(t3);
    EXPECT_EQ(active_ids(v), (std::set<std::string>{"a1", "a4"}));
    EXPECT_EQ(v.assets.size(), 2u);
    for (const Edge& e : v.edges) EXPECT_EQ(e.kind, EdgeKind::Normal);
    EXPECT_EQ(v.edges, (std::set<Edge>{normal("root", "a1"), normal("a1", "a4")}));
}

TEST(Validate, FixtureSnapshotsAreWellFormed) {
    for (const Edg& s : openplc_timeline().snapshots()) EXPECT_TRUE(validate(s).empty()) << s.epoch;
}

TEST(Validate, ReportsStructuralDamage) {
    Edg g = snapshot(TimeModel::make().replayed(), "t1");
    g.edges.insert(normal("a1", "ghost"));
    g.edges.insert(normal(kCve, "a1"));
    g.edges.insert(normal("a1", "root"));
    g.edges.insert(deprecated("a1", "a2"));
    g.vulns.at(kCve).cvss.score = 11.0;
    EXPECT_GE(validate(g).size(), 5u);
}

TEST(Diff, UpdatesAndVulnerabilityChanges) {
    const Timeline tl = TimeModel::make().replayed();
    for (const Edg& s : tl.snapshots()) EXPECT_TRUE(diff_snapshots(s, s).empty());

    const SnapshotDiff d01 = diff_snapshots(tl.snapshots().front(), snapshot(tl, "t1"));
    EXPECT_EQ(d01.added_vulns, std::vector<std::string>{kCve});
    EXPECT_TRUE(d01.added_assets.empty());

    const SnapshotDiff d13 = diff_snapshots(snapshot(tl, "t1"), snapshot(tl, "t3"));
    EXPECT_EQ(d13.updated_assets, (std::vector<std::pair<std::string, std::string>>{{"a2", "a4"}}));
    EXPECT_EQ(d13.removed_vulns, std::vector<std::string>{kCve});
    EXPECT_TRUE(d13.removed_assets.empty());
}

TEST(Diff, FixtureEpochs) {
    const Timeline& tl = openplc_timeline();
    const SnapshotDiff d = diff_snapshots(tl.epoch("V1"), tl.epoch("V2"));
    EXPECT_FALSE(d.removed_assets.empty());
    EXPECT_FALSE(d.added_assets.empty());
    EXPECT_FALSE(d.updated_assets.empty());
    EXPECT_FALSE(d.removed_vulns.empty());
}

TEST(Json, SnapshotsRoundTrip) {
    for (const Edg& s : openplc_timeline().snapshots()) EXPECT_EQ(edg_from_json(edg_to_json(s)), s);
    const Edg& v1 = openplc_timeline().epoch("V1");
    const Edg c = cluster_by(v1, CvssBelowCriterion{5.0});
    EXPECT_EQ(edg_from_json(edg_to_json(c)), c);
    const Edg t3 = snapshot(TimeModel::make().replayed(), "t3");
    EXPECT_EQ(edg_from_json(edg_to_json(t3)), t3);
}

TEST(Json, MalformedSnapshotsAreRejected) {
    const Edg t1 = snapshot(TimeModel::make().replayed(), "t1");
    nlohmann::json j = edg_to_json(t1);
    nlohmann::json no_root = j;
    no_root.erase("root");
    EXPECT_THROW(edg_from_json(no_root), SchemaError);
    nlohmann::json bad_type = j;
    bad_type["assets"] = 3;
    EXPECT_THROW(edg_from_json(bad_type), SchemaError);
    EXPECT_THROW(edg_from_json(nlohmann::json::array()), SchemaError);
}

TEST(Json, ManifestRoundTrip) {
    const TimeModel m = TimeModel::make();
    EXPECT_EQ(manifest_from_json(manifest_to_json(m.manifest)), m.manifest);
    const Manifest fixture = load_manifest(testing::openplc_dir() / "manifest.json");
    EXPECT_EQ(fixture.assets.size(), 19u);
    EXPECT_EQ(fixture.epoch, "V1");
    EXPECT_EQ(manifest_from_json(manifest_to_json(fixture)), fixture);
    nlohmann::json unnamed = manifest_to_json(m.manifest);
    EXPECT_FALSE(unnamed["assets"][0].contains("name"));
    EXPECT_EQ(manifest_from_json(unnamed).assets[0].name, "a1");
    nlohmann::json bad = unnamed;
    bad["assets"][0].erase("cpe");
    EXPECT_THROW(manifest_from_json(bad), SchemaError);
}

}  // namespace
}  // namespace edg
