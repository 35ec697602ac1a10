#include "edg/graph.hpp"

#include <algorithm>
#include <deque>

#include "csv.hpp"
#include "edg/errors.hpp"
#include "json_util.hpp"

namespace edg {

using nlohmann::json;

std::string_view to_string(EdgeKind k) {
    return k == EdgeKind::Normal ? "normal" : "deprecated";
}

const AssetNode* Edg::find_asset(std::string_view id) const {
    const auto it = assets.find(id);
    return it == assets.end() ? nullptr : &it->second;
}

const VulnNode* Edg::find_vuln(std::string_view id) const {
    const auto it = vulns.find(id);
    return it == vulns.end() ? nullptr : &it->second;
}

std::vector<const AssetNode*> Edg::active_assets() const {
    std::vector<const AssetNode*> out;
    for (const auto& [id, a] : assets)
        if (!a.deprecated) out.push_back(&a);
    std::sort(out.begin(), out.end(), [](const AssetNode* x, const AssetNode* y) { return x->seq < y->seq; });
    return out;
}

std::vector<const VulnNode*> Edg::vulns_of(std::string_view asset_id) const {
    std::vector<const VulnNode*> out;
    const std::string src(asset_id);
    for (auto it = edges.lower_bound(Edge{src, "", EdgeKind::Normal}); it != edges.end() && it->source == src; ++it) {
        if (it->kind != EdgeKind::Normal) continue;
        if (const VulnNode* v = find_vuln(it->target)) out.push_back(v);
    }
    return out;
}

namespace {

bool is_root(std::string_view id) { return id == kRootId; }

bool reserved_asset_id(std::string_view id) {
    return id.empty() || is_root(id) || id.rfind("cluster(", 0) == 0 || id.rfind("CVE-", 0) == 0;
}

void check_asset_id(std::string_view id) {
    if (reserved_asset_id(id)) throw InvalidArgument("asset id '" + std::string(id) + "' is empty or reserved");
}

bool is_active_asset(const Edg& g, std::string_view id) {
    const AssetNode* a = g.find_asset(id);
    return a && !a->deprecated;
}

AssetNode& asset_ref(Edg& g, std::string_view id) {
    const auto it = g.assets.find(id);
    if (it == g.assets.end()) throw UnknownAsset("unknown asset '" + std::string(id) + "'");
    return it->second;
}

AssetNode& active_asset_ref(Edg& g, std::string_view id) {
    AssetNode& a = asset_ref(g, id);
    if (a.deprecated) throw UnknownAsset("asset '" + std::string(id) + "' is deprecated");
    return a;
}

VulnNode make_vuln_node(const VulnerabilityRecord& r, const Catalog& catalog) {
    VulnNode v;
    v.cve_id = r.cve_id;
    v.cvss = r.cvss;
    v.cwe_ids = r.cwe_ids;
    if (v.cwe_ids.empty()) v.cwe_ids.emplace_back(kNullWeakness);
    v.capec_ids = r.capec_ids.empty() ? catalog.capec_ids_for(v.cwe_ids) : r.capec_ids;
    v.exploit_available = r.exploit_available;
    return v;
}

// Inserts or refreshes the vulnerability node and links it to the asset.
void attach(Edg& g, const std::string& asset, const VulnerabilityRecord& r, const Catalog& catalog) {
    g.vulns[r.cve_id] = make_vuln_node(r, catalog);
    g.edges.insert(Edge{asset, r.cve_id, EdgeKind::Normal});
}

void deprecate_edge(Edg& g, const Edge& e) {
    g.edges.erase(e);
    g.edges.insert(Edge{e.source, e.target, EdgeKind::Deprecated});
}

std::vector<Edge> normal_edges_touching(const Edg& g, std::string_view id) {
    std::vector<Edge> out;
    for (const auto& e : g.edges)
        if (e.kind == EdgeKind::Normal && (e.source == id || e.target == id)) out.push_back(e);
    return out;
}

// Active assets reachable from the root over Normal non-vulnerability edges.
std::set<std::string> reachable_from_root(const Edg& g) {
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& e : g.edges)
        if (e.kind == EdgeKind::Normal && !g.vulns.contains(e.target)) out[e.source].push_back(e.target);
    std::set<std::string> seen{std::string(kRootId)};
    std::deque<std::string> queue{std::string(kRootId)};
    while (!queue.empty()) {
        const std::string cur = queue.front();
        queue.pop_front();
        for (const auto& next : out[cur])
            if (seen.insert(next).second) queue.push_back(next);
    }
    return seen;
}

// Attaches unreachable active assets to the root, earliest first, until all
// are reachable.
void connect_orphans(Edg& g) {
    for (;;) {
        const auto seen = reachable_from_root(g);
        const AssetNode* first = nullptr;
        for (const AssetNode* a : g.active_assets()) {
            if (!seen.contains(a->id)) {
                first = a;
                break;
            }
        }
        if (!first) return;
        g.edges.insert(Edge{std::string(kRootId), first->id, EdgeKind::Normal});
    }
}

AssetNode make_asset(Edg& g, const ManifestEntry& e) {
    check_asset_id(e.id);
    if (!e.cpe.is_concrete()) throw InvalidArgument("asset '" + e.id + "' needs a CPE with part, vendor and product");
    AssetNode a;
    a.id = e.id;
    a.name = e.name.empty() ? e.id : e.name;
    a.seq = g.next_seq++;
    a.cpe_current = e.cpe;
    return a;
}

void attach_catalog_hits(Edg& g, const std::string& asset, const WellFormedName& cpe, const Catalog& catalog,
                         Date at, const std::set<std::string>& skip = {}) {
    for (const auto& r : lookup_vulnerabilities(catalog, cpe, at))
        if (!skip.contains(r.cve_id)) attach(g, asset, r, catalog);
}

std::string strip_revision(std::string_view id) {
    const auto at = id.rfind('@');
    if (at == std::string_view::npos || at + 1 == id.size()) return std::string(id);
    const auto rest = id.substr(at + 1);
    if (!std::all_of(rest.begin(), rest.end(), [](char c) { return c >= '0' && c <= '9'; })) return std::string(id);
    return std::string(id.substr(0, at));
}

bool node_exists(const Edg& g, std::string_view id) {
    if (g.assets.contains(id) || g.vulns.contains(id) || g.clusters.contains(id) || is_root(id)) return true;
    for (const auto& [cid, c] : g.clusters)
        if (c.assets.contains(id) || c.vulns.contains(id)) return true;
    return false;
}

std::string next_successor_id(const Edg& g, std::string_view id) {
    const std::string base = strip_revision(id);
    for (int k = 2;; ++k) {
        std::string candidate = base + "@" + std::to_string(k);
        if (!node_exists(g, candidate)) return candidate;
    }
}

void require_unclustered(const Edg& g) {
    if (!g.clusters.empty()) throw InvalidArgument("lifecycle changes apply to unclustered snapshots");
}

}  // namespace

Edg build_edg(const Manifest& manifest, const Catalog& catalog) {
    if (manifest.assets.empty()) throw EmptyManifest("manifest lists no assets");
    Edg g;
    g.epoch = manifest.epoch;
    g.root = RootNode{manifest.sut, manifest.at};

    for (const auto& e : manifest.assets) {
        if (g.assets.contains(e.id)) throw DuplicateId("duplicate asset id '" + e.id + "'");
        AssetNode a = make_asset(g, e);
        g.assets.emplace(a.id, std::move(a));
    }
    std::set<std::string> required;
    for (const auto& e : manifest.assets) {
        for (const auto& dep : e.depends_on) {
            if (!g.assets.contains(dep))
                throw UnknownDependencyTarget("asset '" + e.id + "' depends on unknown asset '" + dep + "'");
            if (dep == e.id) throw InvalidArgument("asset '" + e.id + "' depends on itself");
            g.edges.insert(Edge{e.id, dep, EdgeKind::Normal});
            required.insert(dep);
        }
    }
    for (const auto& e : manifest.assets)
        if (e.top_level || !required.contains(e.id)) g.edges.insert(Edge{std::string(kRootId), e.id, EdgeKind::Normal});
    connect_orphans(g);

    const Date at = manifest.at.date();
    for (const auto& e : manifest.assets) attach_catalog_hits(g, e.id, e.cpe, catalog, at);
    return g;
}

Edg update_asset(const Edg& g0, std::string_view asset, const WellFormedName& new_cpe, const Catalog& catalog,
                 const std::set<std::string>& fixes, std::optional<std::string> successor_id) {
    require_unclustered(g0);
    Edg g = g0;
    AssetNode& old = active_asset_ref(g, asset);
    if (old.cpe_current == new_cpe) throw SelfSucc("asset '" + old.id + "' already at " + bind_formatted(new_cpe));
    if (!new_cpe.is_concrete()) throw InvalidArgument("successor CPE must name part, vendor and product");

    const std::string old_id = old.id;
    std::set<std::string> carried;
    for (const VulnNode* v : g.vulns_of(old_id)) carried.insert(v->cve_id);
    for (const auto& f : fixes)
        if (!carried.contains(f)) throw UnknownCve("'" + f + "' is not an active vulnerability of '" + old_id + "'");

    const std::string succ = successor_id ? *successor_id : next_successor_id(g, old_id);
    check_asset_id(succ);
    if (node_exists(g, succ)) throw DuplicateId("node '" + succ + "' already exists");

    AssetNode s;
    s.id = succ;
    s.name = old.name;
    s.seq = g.next_seq++;
    s.cpe_current = new_cpe;
    s.cpe_previous = old.cpe_current;
    s.predecessor = old_id;
    old.deprecated = true;

    for (const Edge& e : normal_edges_touching(g, old_id)) {
        if (g.vulns.contains(e.target)) {
            if (fixes.contains(e.target))
                deprecate_edge(g, e);
            else
                g.edges.insert(Edge{succ, e.target, EdgeKind::Normal});
            continue;
        }
        deprecate_edge(g, e);
        const std::string& src = e.source == old_id ? succ : e.source;
        const std::string& dst = e.target == old_id ? succ : e.target;
        g.edges.insert(Edge{src, dst, EdgeKind::Normal});
    }
    g.assets.emplace(succ, std::move(s));
    attach_catalog_hits(g, succ, new_cpe, catalog, g.root.checked_at.date(), fixes);
    return g;
}

Edg discover_vulnerability(const Edg& g0, std::string_view cve, std::string_view asset, const Catalog& catalog) {
    require_unclustered(g0);
    Edg g = g0;
    const AssetNode& a = active_asset_ref(g, asset);
    const VulnerabilityRecord* r = catalog.find_vulnerability(cve);
    if (!r) throw UnknownCve("'" + std::string(cve) + "' is not in the catalog");
    attach(g, a.id, *r, catalog);
    return g;
}

Edg patch_vulnerability(const Edg& g0, std::string_view cve, std::string_view asset) {
    require_unclustered(g0);
    Edg g = g0;
    const AssetNode& a = asset_ref(g, asset);
    const Edge e{a.id, std::string(cve), EdgeKind::Normal};
    if (!g.edges.contains(e))
        throw UnknownCve("'" + std::string(cve) + "' is not an active vulnerability of '" + a.id + "'");
    deprecate_edge(g, e);
    return g;
}

Edg add_asset(const Edg& g0, const ManifestEntry& entry, const std::vector<std::string>& required_by,
              const Catalog& catalog, Date at) {
    require_unclustered(g0);
    Edg g = g0;
    if (node_exists(g, entry.id)) throw DuplicateId("node '" + entry.id + "' already exists");
    for (const auto& dep : entry.depends_on)
        if (!is_active_asset(g, dep))
            throw UnknownDependencyTarget("asset '" + entry.id + "' depends on unknown asset '" + dep + "'");
    for (const auto& req : required_by)
        if (!is_active_asset(g, req)) throw UnknownAsset("unknown requiring asset '" + req + "'");

    AssetNode a = make_asset(g, entry);
    const std::string id = a.id;
    g.assets.emplace(id, std::move(a));
    for (const auto& dep : entry.depends_on) g.edges.insert(Edge{id, dep, EdgeKind::Normal});
    for (const auto& req : required_by) g.edges.insert(Edge{req, id, EdgeKind::Normal});
    if (required_by.empty() || entry.top_level) g.edges.insert(Edge{std::string(kRootId), id, EdgeKind::Normal});
    attach_catalog_hits(g, id, entry.cpe, catalog, at);
    return g;
}

Edg remove_asset(const Edg& g0, std::string_view asset) {
    require_unclustered(g0);
    Edg g = g0;
    AssetNode& a = active_asset_ref(g, asset);
    a.deprecated = true;
    const std::string id = a.id;
    for (const Edge& e : normal_edges_touching(g, id))
        if (!g.vulns.contains(e.target)) deprecate_edge(g, e);
    connect_orphans(g);
    return g;
}

std::vector<WellFormedName> version_chain(const Edg& g0, std::string_view asset) {
    const Edg g = expand_clusters(g0);
    const AssetNode* node = g.find_asset(asset);
    if (!node) throw UnknownAsset("unknown asset '" + std::string(asset) + "'");
    std::vector<WellFormedName> chain{node->cpe_current};
    std::set<std::string> visited{node->id};
    while (node->predecessor || node->cpe_previous) {
        if (!node->predecessor || !node->cpe_previous)
            throw BrokenChain("asset '" + node->id + "' has an incomplete predecessor link");
        const AssetNode* prev = g.find_asset(*node->predecessor);
        if (!prev) throw BrokenChain("predecessor '" + *node->predecessor + "' of '" + node->id + "' is missing");
        if (prev->cpe_current != *node->cpe_previous)
            throw BrokenChain("predecessor '" + prev->id + "' does not carry the previous CPE of '" + node->id + "'");
        if (!visited.insert(prev->id).second) throw BrokenChain("version chain of '" + std::string(asset) + "' loops");
        chain.push_back(prev->cpe_current);
        node = prev;
    }
    return chain;
}

namespace {

bool eligible(const Edg& g, const AssetNode& a, const ClusterCriterion& criterion) {
    const auto vulns = g.vulns_of(a.id);
    if (std::holds_alternative<NoVulnerabilitiesCriterion>(criterion)) return vulns.empty();
    const double th = std::get<CvssBelowCriterion>(criterion).threshold;
    return std::all_of(vulns.begin(), vulns.end(), [th](const VulnNode* v) { return v->cvss.score < th; });
}

std::uint64_t next_cluster_seq(const Edg& g) {
    std::uint64_t s = 0;
    for (const auto& [id, c] : g.clusters) s = std::max(s, c.seq);
    return s + 1;
}

}  // namespace

Edg cluster_by(const Edg& g0, const ClusterCriterion& criterion, const std::optional<std::set<std::string>>& scope) {
    if (const auto* c = std::get_if<CvssBelowCriterion>(&criterion); c && (c->threshold < 0.0 || c->threshold > 10.0))
        throw InvalidArgument("CVSS threshold must lie in [0, 10]");
    Edg g = g0;

    std::set<std::string> pool;
    for (const AssetNode* a : g.active_assets()) {
        if (scope && !scope->contains(a->id)) continue;
        if (eligible(g, *a, criterion)) pool.insert(a->id);
    }
    std::map<std::string, std::set<std::string>> adjacent;
    for (const auto& e : g.edges) {
        if (e.kind != EdgeKind::Normal || !pool.contains(e.source) || !pool.contains(e.target)) continue;
        adjacent[e.source].insert(e.target);
        adjacent[e.target].insert(e.source);
    }

    std::set<std::string> assigned;
    for (const auto& start : pool) {
        if (assigned.contains(start)) continue;
        std::set<std::string> members{start};
        std::deque<std::string> queue{start};
        while (!queue.empty()) {
            const std::string cur = queue.front();
            queue.pop_front();
            for (const auto& n : adjacent[cur])
                if (members.insert(n).second) queue.push_back(n);
        }
        assigned.insert(members.begin(), members.end());

        // Vulnerabilities whose every edge comes from a member.
        std::map<std::string, bool> owned;
        for (const auto& e : g.edges) {
            if (!g.vulns.contains(e.target)) continue;
            const bool inside = members.contains(e.source);
            const auto [it, fresh] = owned.emplace(e.target, inside);
            if (!fresh) it->second = it->second && inside;
        }
        std::set<std::string> inside = members;
        for (const auto& [cve, all_inside] : owned)
            if (all_inside) inside.insert(cve);

        Cluster c;
        c.id = "cluster(" + *members.begin() + ")";
        c.seq = next_cluster_seq(g);
        for (const auto& id : inside) {
            if (auto it = g.assets.find(id); it != g.assets.end()) {
                c.assets.insert(g.assets.extract(it));
            } else if (auto vt = g.vulns.find(id); vt != g.vulns.end()) {
                c.vulns.insert(g.vulns.extract(vt));
            }
        }
        std::set<Edge> rewired;
        for (auto it = g.edges.begin(); it != g.edges.end();) {
            const bool s_in = inside.contains(it->source);
            const bool t_in = inside.contains(it->target);
            if (!s_in && !t_in) {
                ++it;
                continue;
            }
            if (s_in && t_in) {
                c.internal_edges.insert(*it);
            } else {
                c.boundary_edges.insert(*it);
                rewired.insert(Edge{s_in ? c.id : it->source, t_in ? c.id : it->target, it->kind});
            }
            it = g.edges.erase(it);
        }
        g.edges.insert(rewired.begin(), rewired.end());
        g.clusters.emplace(c.id, std::move(c));
    }
    return g;
}

Edg expand_clusters(const Edg& g0) {
    if (g0.clusters.empty()) return g0;
    Edg g = g0;
    std::vector<Cluster> order;
    for (auto& [id, c] : g.clusters) order.push_back(std::move(c));
    g.clusters.clear();
    std::sort(order.begin(), order.end(), [](const Cluster& a, const Cluster& b) { return a.seq > b.seq; });
    for (auto& c : order) {
        for (auto it = g.edges.begin(); it != g.edges.end();) {
            if (it->source == c.id || it->target == c.id)
                it = g.edges.erase(it);
            else
                ++it;
        }
        g.edges.insert(c.internal_edges.begin(), c.internal_edges.end());
        g.edges.insert(c.boundary_edges.begin(), c.boundary_edges.end());
        g.assets.merge(c.assets);
        g.vulns.merge(c.vulns);
    }
    return g;
}

std::set<std::string> impact_set(const Edg& g0, std::string_view cve) {
    const Edg g = expand_clusters(g0);
    if (!g.vulns.contains(cve)) throw UnknownCve("unknown vulnerability '" + std::string(cve) + "'");
    std::map<std::string, std::vector<std::string>> dependents;
    std::set<std::string> result;
    std::deque<std::string> queue;
    for (const auto& e : g.edges) {
        if (e.kind != EdgeKind::Normal || !is_active_asset(g, e.source)) continue;
        if (e.target == cve) {
            if (result.insert(e.source).second) queue.push_back(e.source);
        } else if (is_active_asset(g, e.target)) {
            dependents[e.target].push_back(e.source);
        }
    }
    while (!queue.empty()) {
        const std::string cur = queue.front();
        queue.pop_front();
        for (const auto& d : dependents[cur])
            if (result.insert(d).second) queue.push_back(d);
    }
    return result;
}

Edg active_subgraph(const Edg& g) {
    Edg v;
    v.epoch = g.epoch;
    v.root = g.root;
    v.next_seq = g.next_seq;
    v.clusters = g.clusters;
    auto dead = [&](const std::string& id) {
        const AssetNode* a = g.find_asset(id);
        return a && a->deprecated;
    };
    std::set<std::string> touched;
    for (const auto& e : g.edges) {
        if (e.kind != EdgeKind::Normal || dead(e.source) || dead(e.target)) continue;
        v.edges.insert(e);
        touched.insert(e.source);
        touched.insert(e.target);
    }
    for (const auto& [id, a] : g.assets)
        if (!a.deprecated) v.assets.emplace(id, a);
    for (const auto& [id, vn] : g.vulns)
        if (touched.contains(id)) v.vulns.emplace(id, vn);
    return v;
}

std::set<std::string> asset_weaknesses(const Edg& g, std::string_view asset) {
    std::set<std::string> out;
    for (const VulnNode* v : g.vulns_of(asset)) out.insert(v->cwe_ids.begin(), v->cwe_ids.end());
    return out;
}

std::vector<std::string> validate(const Edg& g) {
    std::vector<std::string> problems;
    auto known = [&](const std::string& id) {
        return is_root(id) || g.assets.contains(id) || g.vulns.contains(id) || g.clusters.contains(id);
    };
    for (const auto& [id, a] : g.assets) {
        if (id != a.id) problems.push_back("asset key '" + id + "' differs from node id '" + a.id + "'");
        if (reserved_asset_id(id)) problems.push_back("asset id '" + id + "' is reserved");
        if (a.seq >= g.next_seq) problems.push_back("asset '" + id + "' has a sequence number from the future");
    }
    for (const auto& [id, v] : g.vulns) {
        if (id != v.cve_id) problems.push_back("vulnerability key '" + id + "' differs from '" + v.cve_id + "'");
        if (v.cvss.score < 0.0 || v.cvss.score > 10.0) problems.push_back("'" + id + "' has CVSS outside [0, 10]");
        if (v.cwe_ids.empty()) problems.push_back("'" + id + "' has no weakness id");
    }
    std::set<std::string> clustered;
    for (const auto& [id, c] : g.clusters) {
        for (const auto& [mid, m] : c.assets)
            if (!clustered.insert(mid).second || g.assets.contains(mid))
                problems.push_back("asset '" + mid + "' belongs to more than one place");
    }
    for (const auto& e : g.edges) {
        if (!known(e.source) || !known(e.target))
            problems.push_back("edge " + e.source + " -> " + e.target + " has a dangling endpoint");
        if (e.source == e.target) problems.push_back("self loop on '" + e.source + "'");
        if (g.vulns.contains(e.source)) problems.push_back("edge leaves vulnerability '" + e.source + "'");
        if (is_root(e.target)) problems.push_back("edge enters the root");
        if (e.kind == EdgeKind::Normal && g.edges.contains(Edge{e.source, e.target, EdgeKind::Deprecated}))
            problems.push_back("edge " + e.source + " -> " + e.target + " is both normal and deprecated");
    }
    for (const auto& [id, v] : g.vulns) {
        const bool linked = std::any_of(g.edges.begin(), g.edges.end(), [&](const Edge& e) { return e.target == id; });
        if (!linked) problems.push_back("vulnerability '" + id + "' is not linked to any asset");
    }
    const auto seen = reachable_from_root(g);
    for (const AssetNode* a : g.active_assets())
        if (!seen.contains(a->id)) problems.push_back("active asset '" + a->id + "' is not reachable from the root");
    try {
        for (const auto& [id, a] : g.assets) version_chain(g, id);
    } catch (const BrokenChain& e) {
        problems.emplace_back(e.what());
    }
    return problems;
}

SnapshotDiff diff_snapshots(const Edg& from0, const Edg& to0) {
    const Edg from = expand_clusters(from0);
    const Edg to = expand_clusters(to0);
    std::set<std::string> a_assets, b_assets, a_vulns, b_vulns;
    for (const AssetNode* a : from.active_assets()) a_assets.insert(a->id);
    for (const AssetNode* a : to.active_assets()) b_assets.insert(a->id);
    const Edg av = active_subgraph(from);
    const Edg bv = active_subgraph(to);
    for (const auto& [id, v] : av.vulns) a_vulns.insert(id);
    for (const auto& [id, v] : bv.vulns) b_vulns.insert(id);

    SnapshotDiff d;
    std::set<std::string> matched;
    for (const auto& id : b_assets) {
        if (a_assets.contains(id)) continue;
        const AssetNode* cur = to.find_asset(id);
        std::set<std::string> guard;
        std::optional<std::string> origin;
        while (cur && cur->predecessor && guard.insert(cur->id).second) {
            if (a_assets.contains(*cur->predecessor)) {
                origin = *cur->predecessor;
                break;
            }
            cur = to.find_asset(*cur->predecessor);
        }
        if (origin && !matched.contains(*origin)) {
            matched.insert(*origin);
            d.updated_assets.emplace_back(*origin, id);
        } else {
            d.added_assets.push_back(id);
        }
    }
    for (const auto& id : a_assets)
        if (!b_assets.contains(id) && !matched.contains(id)) d.removed_assets.push_back(id);
    std::set_difference(b_vulns.begin(), b_vulns.end(), a_vulns.begin(), a_vulns.end(),
                        std::back_inserter(d.added_vulns));
    std::set_difference(a_vulns.begin(), a_vulns.end(), b_vulns.begin(), b_vulns.end(),
                        std::back_inserter(d.removed_vulns));
    return d;
}

// JSON -----------------------------------------------------------------------

namespace {

json asset_to_json(const AssetNode& a) {
    json j{{"id", a.id},
           {"name", a.name},
           {"seq", a.seq},
           {"cpe", bind_formatted(a.cpe_current)},
           {"deprecated", a.deprecated}};
    if (a.cpe_previous) j["cpe_previous"] = bind_formatted(*a.cpe_previous);
    if (a.predecessor) j["predecessor"] = *a.predecessor;
    return j;
}

WellFormedName cpe_field(const json& obj, std::string_view key, const std::string& path) {
    const std::string p = detail::join_path(path, key);
    const std::string s = detail::string_field(obj, key, path);
    return detail::convert_at(p, [&] { return parse_formatted(s); });
}

AssetNode asset_from_json(const json& j, const std::string& path) {
    AssetNode a;
    a.id = detail::string_field(j, "id", path);
    a.name = detail::string_field(j, "name", path);
    const json& seq = detail::require(j, "seq", path);
    if (!seq.is_number_unsigned()) throw SchemaError(detail::join_path(path, "seq") + ": expected an unsigned integer");
    a.seq = seq.get<std::uint64_t>();
    a.cpe_current = cpe_field(j, "cpe", path);
    if (detail::optional_field(j, "cpe_previous")) a.cpe_previous = cpe_field(j, "cpe_previous", path);
    if (const json* p = detail::optional_field(j, "predecessor"))
        a.predecessor = detail::as_string(*p, detail::join_path(path, "predecessor"));
    if (const json* d = detail::optional_field(j, "deprecated"))
        a.deprecated = detail::as_bool(*d, detail::join_path(path, "deprecated"));
    return a;
}

json vuln_to_json(const VulnNode& v) {
    return json{{"cve_id", v.cve_id},
                {"cvss", v.cvss.score},
                {"cvss_scheme", to_string(v.cvss.scheme)},
                {"cwe_ids", v.cwe_ids},
                {"capec_ids", v.capec_ids},
                {"exploit_available", v.exploit_available}};
}

VulnNode vuln_from_json(const json& j, const std::string& path) {
    VulnNode v;
    v.cve_id = detail::string_field(j, "cve_id", path);
    v.cvss.score = detail::as_number(detail::require(j, "cvss", path), detail::join_path(path, "cvss"));
    if (v.cvss.score < 0.0 || v.cvss.score > 10.0) throw SchemaError(detail::join_path(path, "cvss") + ": outside [0, 10]");
    if (const json* s = detail::optional_field(j, "cvss_scheme")) {
        const std::string p = detail::join_path(path, "cvss_scheme");
        const std::string text = detail::as_string(*s, p);
        v.cvss.scheme = detail::convert_at(p, [&] { return parse_cvss_scheme(text); });
    }
    v.cwe_ids = detail::string_list_field(j, "cwe_ids", path);
    if (v.cwe_ids.empty()) v.cwe_ids.emplace_back(kNullWeakness);
    v.capec_ids = detail::string_list_field(j, "capec_ids", path);
    if (const json* e = detail::optional_field(j, "exploit_available"))
        v.exploit_available = detail::as_bool(*e, detail::join_path(path, "exploit_available"));
    return v;
}

json edge_to_json(const Edge& e) {
    return json{{"source", e.source}, {"target", e.target}, {"kind", to_string(e.kind)}};
}

Edge edge_from_json(const json& j, const std::string& path) {
    Edge e;
    e.source = detail::string_field(j, "source", path);
    e.target = detail::string_field(j, "target", path);
    const std::string kind = detail::string_field(j, "kind", path);
    if (kind == "normal")
        e.kind = EdgeKind::Normal;
    else if (kind == "deprecated")
        e.kind = EdgeKind::Deprecated;
    else
        throw SchemaError(detail::join_path(path, "kind") + ": expected 'normal' or 'deprecated'");
    return e;
}

template <typename Map>
json nodes_by_seq(const Map& assets) {
    std::vector<const AssetNode*> order;
    for (const auto& [id, a] : assets) order.push_back(&a);
    std::sort(order.begin(), order.end(), [](const AssetNode* x, const AssetNode* y) {
        return x->seq != y->seq ? x->seq < y->seq : x->id < y->id;
    });
    json out = json::array();
    for (const AssetNode* a : order) out.push_back(asset_to_json(*a));
    return out;
}

json edges_to_json(const std::set<Edge>& edges) {
    json out = json::array();
    for (const auto& e : edges) out.push_back(edge_to_json(e));
    return out;
}

std::set<Edge> edges_from_json(const json& obj, std::string_view key, const std::string& path) {
    std::set<Edge> out;
    const json* arr = detail::optional_field(obj, key);
    if (!arr) return out;
    const std::string p = detail::join_path(path, key);
    detail::as_array(*arr, p);
    for (std::size_t i = 0; i < arr->size(); ++i) out.insert(edge_from_json((*arr)[i], detail::index_path(p, i)));
    return out;
}

template <typename Node, typename F>
std::map<std::string, Node, std::less<>> nodes_from_json(const json& obj, std::string_view key, const std::string& path,
                                                         F convert) {
    std::map<std::string, Node, std::less<>> out;
    const json* arr = detail::optional_field(obj, key);
    if (!arr) return out;
    const std::string p = detail::join_path(path, key);
    detail::as_array(*arr, p);
    for (std::size_t i = 0; i < arr->size(); ++i) {
        Node n = convert((*arr)[i], detail::index_path(p, i));
        std::string id;
        if constexpr (std::is_same_v<Node, AssetNode>)
            id = n.id;
        else
            id = n.cve_id;
        if (!out.emplace(id, std::move(n)).second) throw DuplicateId(p + ": duplicate node '" + id + "'");
    }
    return out;
}

json vulns_to_json(const std::map<std::string, VulnNode, std::less<>>& vulns) {
    json out = json::array();
    for (const auto& [id, v] : vulns) out.push_back(vuln_to_json(v));
    return out;
}

}  // namespace

json edg_to_json(const Edg& g) {
    json clusters = json::array();
    for (const auto& [id, c] : g.clusters) {
        clusters.push_back(json{{"id", c.id},
                                {"seq", c.seq},
                                {"assets", nodes_by_seq(c.assets)},
                                {"vulnerabilities", vulns_to_json(c.vulns)},
                                {"internal_edges", edges_to_json(c.internal_edges)},
                                {"boundary_edges", edges_to_json(c.boundary_edges)}});
    }
    return json{{"epoch", g.epoch},
                {"root", json{{"sut", bind_formatted(g.root.sut)}, {"checked_at", g.root.checked_at.to_string()}}},
                {"assets", nodes_by_seq(g.assets)},
                {"vulnerabilities", vulns_to_json(g.vulns)},
                {"edges", edges_to_json(g.edges)},
                {"clusters", std::move(clusters)},
                {"next_seq", g.next_seq}};
}

Edg edg_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    Edg g;
    if (const json* e = detail::optional_field(j, "epoch")) g.epoch = detail::as_string(*e, detail::join_path(path, "epoch"));
    const std::string rp = detail::join_path(path, "root");
    const json& root = detail::require(j, "root", path);
    g.root.sut = cpe_field(root, "sut", rp);
    const std::string at = detail::string_field(root, "checked_at", rp);
    g.root.checked_at = detail::convert_at(detail::join_path(rp, "checked_at"), [&] { return Timestamp::parse(at); });
    g.assets = nodes_from_json<AssetNode>(j, "assets", path, asset_from_json);
    g.vulns = nodes_from_json<VulnNode>(j, "vulnerabilities", path, vuln_from_json);
    g.edges = edges_from_json(j, "edges", path);
    if (const json* cs = detail::optional_field(j, "clusters")) {
        const std::string cp = detail::join_path(path, "clusters");
        detail::as_array(*cs, cp);
        for (std::size_t i = 0; i < cs->size(); ++i) {
            const json& cj = (*cs)[i];
            const std::string p = detail::index_path(cp, i);
            Cluster c;
            c.id = detail::string_field(cj, "id", p);
            c.seq = detail::require(cj, "seq", p).get<std::uint64_t>();
            c.assets = nodes_from_json<AssetNode>(cj, "assets", p, asset_from_json);
            c.vulns = nodes_from_json<VulnNode>(cj, "vulnerabilities", p, vuln_from_json);
            c.internal_edges = edges_from_json(cj, "internal_edges", p);
            c.boundary_edges = edges_from_json(cj, "boundary_edges", p);
            const std::string id = c.id;
            if (!g.clusters.emplace(id, std::move(c)).second) throw DuplicateId(p + ": duplicate cluster '" + id + "'");
        }
    }
    std::uint64_t max_seq = 0;
    for (const auto& [id, a] : g.assets) max_seq = std::max(max_seq, a.seq);
    for (const auto& [cid, c] : g.clusters)
        for (const auto& [id, a] : c.assets) max_seq = std::max(max_seq, a.seq);
    g.next_seq = max_seq + 1;
    if (const json* n = detail::optional_field(j, "next_seq")) {
        if (!n->is_number_unsigned() || n->get<std::uint64_t>() < g.next_seq)
            throw SchemaError(detail::join_path(path, "next_seq") + ": must exceed every asset sequence number");
        g.next_seq = n->get<std::uint64_t>();
    }
    return g;
}

json manifest_to_json(const Manifest& m) {
    json assets = json::array();
    for (const auto& e : m.assets) {
        json a{{"id", e.id}, {"cpe", bind_formatted(e.cpe)}, {"depends_on", e.depends_on}};
        if (!e.name.empty() && e.name != e.id) a["name"] = e.name;
        if (e.top_level) a["top_level"] = true;
        assets.push_back(std::move(a));
    }
    return json{{"sut", bind_formatted(m.sut)}, {"epoch", m.epoch}, {"at", m.at.to_string()}, {"assets", assets}};
}

Manifest manifest_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    Manifest m;
    m.sut = cpe_field(j, "sut", path);
    if (const json* e = detail::optional_field(j, "epoch")) m.epoch = detail::as_string(*e, detail::join_path(path, "epoch"));
    const std::string at = detail::string_field(j, "at", path);
    m.at = detail::convert_at(detail::join_path(path, "at"), [&] { return Timestamp::parse(at); });
    const std::string ap = detail::join_path(path, "assets");
    const json& arr = detail::as_array(detail::require(j, "assets", path), ap);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        const std::string p = detail::index_path(ap, i);
        ManifestEntry e;
        e.id = detail::string_field(arr[i], "id", p);
        e.name = e.id;
        if (const json* n = detail::optional_field(arr[i], "name")) e.name = detail::as_string(*n, detail::join_path(p, "name"));
        e.cpe = cpe_field(arr[i], "cpe", p);
        e.depends_on = detail::string_list_field(arr[i], "depends_on", p);
        if (const json* t = detail::optional_field(arr[i], "top_level"))
            e.top_level = detail::as_bool(*t, detail::join_path(p, "top_level"));
        m.assets.push_back(std::move(e));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
    json doc;
    try {
        doc = json::parse(detail::read_text_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": not valid JSON: " + e.what());
    }
    return manifest_from_json(doc);
}

}  // namespace edg
