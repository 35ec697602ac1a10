#pragma once

// Extended dependency graph snapshots: a root (the system under test), asset
// nodes, known-vulnerability nodes, typed edges and lossless clusters.
//
// Edges are stored as drawn: asset -> dependency, asset -> vulnerability,
// root -> top-level asset. Impact therefore propagates against edge
// direction.

#include <compare>
#include <filesystem>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/catalog.hpp"
#include "edg/cpe.hpp"
#include "edg/time.hpp"

namespace edg {

inline constexpr std::string_view kRootId = "root";

enum class EdgeKind { Normal, Deprecated };

std::string_view to_string(EdgeKind k);

struct RootNode {
    WellFormedName sut;
    Timestamp checked_at;

    friend bool operator==(const RootNode&, const RootNode&) = default;
};

struct AssetNode {
    std::string id;
    std::string name;        // display label, inherited by successors
    std::uint64_t seq = 0;   // creation order
    WellFormedName cpe_current;
    std::optional<WellFormedName> cpe_previous;
    std::optional<std::string> predecessor;  // node holding cpe_previous
    bool deprecated = false;

    friend bool operator==(const AssetNode&, const AssetNode&) = default;
};

struct VulnNode {
    std::string cve_id;
    CvssScore cvss;
    std::vector<std::string> cwe_ids;
    std::vector<std::string> capec_ids;
    bool exploit_available = false;

    friend bool operator==(const VulnNode&, const VulnNode&) = default;
};

struct Edge {
    std::string source;
    std::string target;
    EdgeKind kind = EdgeKind::Normal;

    friend bool operator==(const Edge&, const Edge&) = default;
    friend auto operator<=>(const Edge&, const Edge&) = default;
};

// A summarised connected group of assets plus the vulnerabilities only they
// carry. Holds everything needed to restore the members exactly.
struct Cluster {
    std::string id;
    std::uint64_t seq = 0;
    std::map<std::string, AssetNode, std::less<>> assets;
    std::map<std::string, VulnNode, std::less<>> vulns;
    std::set<Edge> internal_edges;  // both endpoints inside
    std::set<Edge> boundary_edges;  // original form of re-targeted edges

    friend bool operator==(const Cluster&, const Cluster&) = default;
};

struct Edg {
    std::string epoch;
    RootNode root;
    std::map<std::string, AssetNode, std::less<>> assets;
    std::map<std::string, VulnNode, std::less<>> vulns;
    std::set<Edge> edges;
    std::map<std::string, Cluster, std::less<>> clusters;
    std::uint64_t next_seq = 1;

    const AssetNode* find_asset(std::string_view id) const;
    const VulnNode* find_vuln(std::string_view id) const;

    // Non-deprecated assets in creation order.
    std::vector<const AssetNode*> active_assets() const;

    // Vulnerabilities reached from the asset over Normal edges.
    std::vector<const VulnNode*> vulns_of(std::string_view asset_id) const;

    friend bool operator==(const Edg&, const Edg&) = default;
};

struct ManifestEntry {
    std::string id;
    std::string name;  // defaults to id
    WellFormedName cpe;
    std::vector<std::string> depends_on;
    bool top_level = false;

    friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

struct Manifest {
    WellFormedName sut;
    std::string epoch;
    Timestamp at;
    std::vector<ManifestEntry> assets;

    friend bool operator==(const Manifest&, const Manifest&) = default;
};

// Root, one asset per entry, dependency edges, root edges to assets nobody
// depends on, and one vulnerability node per catalog hit.
// Throws EmptyManifest, DuplicateId, UnknownDependencyTarget, InvalidArgument.
Edg build_edg(const Manifest& manifest, const Catalog& catalog);

// Creates the successor version of `asset`. Dependency edges move to the
// successor and the originals turn Deprecated. Vulnerability edges carry
// over except those in `fixes`, whose original edges turn Deprecated; the
// catalog is re-queried for the new CPE. Throws UnknownAsset, SelfSucc,
// UnknownCve.
Edg update_asset(const Edg& g, std::string_view asset, const WellFormedName& new_cpe, const Catalog& catalog,
                 const std::set<std::string>& fixes, std::optional<std::string> successor_id = std::nullopt);

Edg discover_vulnerability(const Edg& g, std::string_view cve, std::string_view asset, const Catalog& catalog);
Edg patch_vulnerability(const Edg& g, std::string_view cve, std::string_view asset);

// Adds an asset required by `required_by` (or by the root when empty).
Edg add_asset(const Edg& g, const ManifestEntry& entry, const std::vector<std::string>& required_by,
              const Catalog& catalog, Date at);

// Retires an asset: its dependency edges turn Deprecated. Assets left
// unreachable from the root are re-attached to it.
Edg remove_asset(const Edg& g, std::string_view asset);

// Current CPE first, back to the first version. Throws UnknownAsset, BrokenChain.
std::vector<WellFormedName> version_chain(const Edg& g, std::string_view asset);

struct NoVulnerabilitiesCriterion {};
struct CvssBelowCriterion {
    double threshold = 0.0;
};
using ClusterCriterion = std::variant<NoVulnerabilitiesCriterion, CvssBelowCriterion>;

// Replaces maximal connected groups of eligible active assets by clusters.
// `scope` limits which assets may be grouped.
Edg cluster_by(const Edg& g, const ClusterCriterion& criterion,
               const std::optional<std::set<std::string>>& scope = std::nullopt);

Edg expand_clusters(const Edg& g);

// Hosts of the vulnerability plus every asset depending on them through
// active Normal edges. Throws UnknownCve.
std::set<std::string> impact_set(const Edg& g, std::string_view cve);

// Only Normal edges between non-deprecated nodes, the nodes they touch, the
// root and every active asset.
Edg active_subgraph(const Edg& g);

// Weakness ids present on the asset through active vulnerabilities.
std::set<std::string> asset_weaknesses(const Edg& g, std::string_view asset);

// Structural invariant violations, empty when the snapshot is well formed.
std::vector<std::string> validate(const Edg& g);

struct SnapshotDiff {
    std::vector<std::string> added_assets;
    std::vector<std::string> removed_assets;
    std::vector<std::pair<std::string, std::string>> updated_assets;  // old id, new id
    std::vector<std::string> added_vulns;
    std::vector<std::string> removed_vulns;

    bool empty() const {
        return added_assets.empty() && removed_assets.empty() && updated_assets.empty() && added_vulns.empty() &&
               removed_vulns.empty();
    }
};

SnapshotDiff diff_snapshots(const Edg& from, const Edg& to);

nlohmann::json edg_to_json(const Edg& g);
Edg edg_from_json(const nlohmann::json& j, const std::string& path = "snapshot");

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j, const std::string& path = "manifest");
Manifest load_manifest(const std::filesystem::path& path);

}  // namespace edg
