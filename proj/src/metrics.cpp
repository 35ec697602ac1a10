#include "edg/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <set>

#include "bundled_data.hpp"
#include "csv.hpp"
#include "edg/errors.hpp"
#include "text_table.hpp"

namespace edg {

using nlohmann::json;

namespace {

Edg active_view(const Edg& g) { return active_subgraph(expand_clusters(g)); }

std::set<std::string> cve_union(const Edg& view) {
    std::set<std::string> out;
    for (const AssetNode* a : view.active_assets())
        for (const VulnNode* v : view.vulns_of(a->id)) out.insert(v->cve_id);
    return out;
}

std::set<std::string> weaknesses_of(const VulnNode& v) { return {v.cwe_ids.begin(), v.cwe_ids.end()}; }

bool has_weakness(const VulnNode& v, std::string_view cwe) {
    return std::find(v.cwe_ids.begin(), v.cwe_ids.end(), cwe) != v.cwe_ids.end();
}

// Throws UnknownAsset when the id names no asset at all; deprecated assets
// are known but carry nothing in the active view.
void require_known_asset(const Edg& expanded, std::string_view asset) {
    if (!expanded.find_asset(asset)) throw UnknownAsset("unknown asset '" + std::string(asset) + "'");
}

std::size_t per_asset_sum(const Edg& view) {
    std::size_t total = 0;
    for (const AssetNode* a : view.active_assets()) total += view.vulns_of(a->id).size();
    return total;
}

std::set<std::string> weakness_union(const Edg& view) {
    std::set<std::string> out;
    for (const auto& id : cve_union(view)) {
        const auto w = weaknesses_of(*view.find_vuln(id));
        out.insert(w.begin(), w.end());
    }
    return out;
}

}  // namespace

std::vector<std::string> asset_column_order(const Edg& g0) {
    const Edg g = expand_clusters(g0);
    std::vector<std::pair<std::pair<std::uint64_t, std::uint64_t>, std::string>> keyed;
    for (const AssetNode* a : g.active_assets()) {
        const AssetNode* origin = a;
        std::set<std::string> guard{a->id};
        while (origin->predecessor) {
            const AssetNode* p = g.find_asset(*origin->predecessor);
            if (!p || !guard.insert(p->id).second) break;
            origin = p;
        }
        keyed.push_back({{origin->seq, a->seq}, a->id});
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<std::string> out;
    for (auto& [key, id] : keyed) out.push_back(std::move(id));
    return out;
}

double m0(const Edg& g) {
    const Edg view = active_view(g);
    const auto n = view.active_assets().size();
    if (n == 0) throw NoAssets("snapshot has no active assets");
    return static_cast<double>(cve_union(view).size()) / static_cast<double>(n);
}

std::size_t m1(const Edg& g) { return cve_union(active_view(g)).size(); }

std::size_t m3(const Edg& g, std::string_view asset) {
    const Edg expanded = expand_clusters(g);
    require_known_asset(expanded, asset);
    return active_subgraph(expanded).vulns_of(asset).size();
}

double m4(const Edg& g, std::string_view asset) {
    const Edg expanded = expand_clusters(g);
    require_known_asset(expanded, asset);
    const Edg view = active_subgraph(expanded);
    const std::size_t total = per_asset_sum(view);
    if (total == 0) throw NoVulnerabilities("snapshot has no active vulnerabilities");
    return static_cast<double>(view.vulns_of(asset).size()) / static_cast<double>(total);
}

std::size_t m5(const Edg& g, std::string_view asset, std::string_view cwe) {
    const Edg expanded = expand_clusters(g);
    require_known_asset(expanded, asset);
    const Edg view = active_subgraph(expanded);
    const auto vulns = view.vulns_of(asset);
    return static_cast<std::size_t>(
        std::count_if(vulns.begin(), vulns.end(), [&](const VulnNode* v) { return has_weakness(*v, cwe); }));
}

std::size_t m6(const Edg& g, std::string_view cwe) {
    const Edg view = active_view(g);
    std::size_t n = 0;
    for (const auto& id : cve_union(view))
        if (has_weakness(*view.find_vuln(id), cwe)) ++n;
    return n;
}

std::size_t m7(const Edg& g) { return weakness_union(active_view(g)).size(); }

std::vector<std::pair<std::string, const Edg*>> designated_epochs(const Timeline& tl) {
    std::vector<std::pair<std::string, const Edg*>> out;
    for (const auto& label : tl.epoch_labels()) out.emplace_back(label, &tl.epoch(label));
    if (out.empty()) out.emplace_back(tl.latest().epoch, &tl.latest());
    return out;
}

std::size_t m2(const Timeline& tl) {
    std::size_t total = 0;
    for (const auto& [label, g] : designated_epochs(tl)) total += m1(*g);
    return total;
}

std::size_t m8(const Timeline& tl, M8Mode mode) {
    std::set<std::string> all;
    std::size_t sum = 0;
    for (const auto& [label, g] : designated_epochs(tl)) {
        const auto w = weakness_union(active_view(*g));
        sum += w.size();
        all.insert(w.begin(), w.end());
    }
    return mode == M8Mode::Union ? all.size() : sum;
}

std::vector<std::string> MetricReport::weakness_order() const {
    std::vector<std::string> out;
    for (const auto& [cwe, n] : m6) out.push_back(cwe);
    std::sort(out.begin(), out.end(), [](const std::string& a, const std::string& b) { return weakness_id_less(a, b); });
    return out;
}

MetricReport compute_metrics(const Edg& g) {
    const Edg expanded = expand_clusters(g);
    const Edg view = active_subgraph(expanded);
    MetricReport r;
    r.epoch = g.epoch;
    r.asset_order = asset_column_order(expanded);
    for (const auto& id : r.asset_order) r.names[id] = expanded.find_asset(id)->name;
    r.n_assets = r.asset_order.size();
    const auto cves = cve_union(view);
    r.m1 = cves.size();
    if (r.n_assets > 0) r.m0 = static_cast<double>(r.m1) / static_cast<double>(r.n_assets);
    for (const auto& id : r.asset_order) {
        const auto vulns = view.vulns_of(id);
        r.m3[id] = vulns.size();
        r.m3_sum += vulns.size();
        for (const VulnNode* v : vulns)
            for (const auto& cwe : weaknesses_of(*v)) ++r.m5[id][cwe];
    }
    if (r.m3_sum > 0)
        for (const auto& id : r.asset_order)
            r.m4[id] = static_cast<double>(r.m3[id]) / static_cast<double>(r.m3_sum);
    for (const auto& id : cves)
        for (const auto& cwe : weaknesses_of(*view.find_vuln(id))) ++r.m6[cwe];
    r.m7 = r.m6.size();
    return r;
}

namespace {

std::vector<WeaknessFrequency> sorted_frequency(const std::map<std::string, std::size_t>& counts) {
    std::vector<WeaknessFrequency> out;
    for (const auto& [cwe, n] : counts) out.push_back({cwe, n});
    std::sort(out.begin(), out.end(), [](const WeaknessFrequency& a, const WeaknessFrequency& b) {
        return a.count != b.count ? a.count > b.count : weakness_id_less(a.cwe_id, b.cwe_id);
    });
    return out;
}

}  // namespace

LifecycleReport compute_lifecycle(const Timeline& tl) {
    LifecycleReport r;
    std::set<std::string> all;
    std::map<std::string, std::size_t> freq;
    for (const auto& [label, g] : designated_epochs(tl)) {
        MetricReport m = compute_metrics(*g);
        m.epoch = label;
        r.epochs.push_back(label);
        r.m2 += m.m1;
        r.m8_sum += m.m7;
        for (const auto& [cwe, n] : m.m6) {
            all.insert(cwe);
            freq[cwe] += n;
        }
        r.per_epoch.push_back(std::move(m));
    }
    r.m8_union = all.size();
    r.weakness_frequency = sorted_frequency(freq);
    return r;
}

std::vector<WeaknessFrequency> lifecycle_weakness_frequency(const Timeline& tl) {
    std::map<std::string, std::size_t> freq;
    for (const auto& [label, g] : designated_epochs(tl))
        for (const auto& [cwe, n] : compute_metrics(*g).m6) freq[cwe] += n;
    return sorted_frequency(freq);
}

std::vector<PrioritizedVulnerability> prioritize(const Edg& g, double min_cvss, double max_cvss, Grouping grouping) {
    if (!(min_cvss >= 0.0 && min_cvss <= max_cvss && max_cvss <= 10.0))
        throw InvalidArgument("CVSS window must satisfy 0 <= min <= max <= 10");
    constexpr double kEps = 1e-9;
    const Edg expanded = expand_clusters(g);
    const Edg view = active_subgraph(expanded);

    std::vector<std::vector<PrioritizedVulnerability>> groups;
    for (const auto& asset : asset_column_order(expanded)) {
        std::vector<PrioritizedVulnerability> group;
        for (const VulnNode* v : view.vulns_of(asset)) {
            const double s = v->cvss.score;
            if (s < min_cvss - kEps || s > max_cvss + kEps) continue;
            group.push_back({v->cve_id, s, asset, v->exploit_available, 1});
        }
        if (!group.empty()) groups.push_back(std::move(group));
    }
    if (grouping == Grouping::Global) {
        std::vector<PrioritizedVulnerability> all;
        for (auto& grp : groups) all.insert(all.end(), grp.begin(), grp.end());
        groups.assign(1, std::move(all));
    }

    std::vector<PrioritizedVulnerability> out;
    for (auto& grp : groups) {
        std::stable_sort(grp.begin(), grp.end(), [](const auto& a, const auto& b) {
            if (a.cvss != b.cvss) return a.cvss > b.cvss;
            if (a.exploit_available != b.exploit_available) return a.exploit_available;
            return a.cve_id < b.cve_id;
        });
        for (auto& e : grp)
            e.rank = 1 + static_cast<std::size_t>(
                             std::count_if(grp.begin(), grp.end(), [&](const auto& o) { return o.cvss > e.cvss; }));
        out.insert(out.end(), grp.begin(), grp.end());
    }
    return out;
}

std::string canonical_metric_id(std::string_view id) {
    const std::string s = detail::trim(id);
    if (s.size() == 2 && (s[0] == 'M' || s[0] == 'm') && s[1] >= '0' && s[1] < static_cast<char>('0' + kMetricCount))
        return std::string("M") + s[1];
    throw UnknownMetric("unknown metric '" + std::string(id) + "'");
}

Iec62443Mapping Iec62443Mapping::parse(std::string_view csv_text, const std::string& source) {
    const auto rows = detail::parse_csv(csv_text, source);
    if (rows.empty() || rows.front().size() < 2) throw SchemaError(source + ": missing header row");
    Iec62443Mapping m;
    m.columns_.assign(rows.front().begin() + 1, rows.front().end());
    for (auto& c : m.columns_) c = detail::trim(c);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = source + ":" + std::to_string(i + 1);
        if (row.size() != m.columns_.size() + 1) throw SchemaError(where + ": expected " + std::to_string(m.columns_.size() + 1) + " cells");
        std::string id;
        try {
            id = canonical_metric_id(row[0]);
        } catch (const UnknownMetric& e) {
            throw SchemaError(where + ": " + e.what());
        }
        std::vector<std::string> tags;
        for (std::size_t c = 0; c < m.columns_.size(); ++c) {
            const std::string cell = detail::trim(row[c + 1]);
            if (cell == "1" || cell == "x" || cell == "X")
                tags.push_back(m.columns_[c]);
            else if (!(cell.empty() || cell == "0"))
                throw SchemaError(where + ": cell '" + cell + "' is not 1, x, 0 or empty");
        }
        if (!m.rows_.emplace(id, std::move(tags)).second) throw DuplicateId(where + ": duplicate row for " + id);
    }
    return m;
}

Iec62443Mapping Iec62443Mapping::load(const std::filesystem::path& path) {
    return parse(detail::read_text_file(path), path.string());
}

const Iec62443Mapping& Iec62443Mapping::bundled() {
    static const Iec62443Mapping m = parse(detail::bundled_iec62443_csv(), "bundled iec62443_mapping.csv");
    return m;
}

std::vector<std::string> Iec62443Mapping::tags_for(std::string_view metric_id) const {
    const std::string id = canonical_metric_id(metric_id);
    const auto it = rows_.find(id);
    if (it == rows_.end()) throw UnknownMetric("no 62443 mapping row for " + id);
    return it->second;
}

std::vector<std::string> iec62443_annotations(std::string_view metric_id, const Iec62443Mapping& mapping) {
    return mapping.tags_for(metric_id);
}

std::string format_decimal(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    std::string s = buf;
    if (s == "-0.00") s = "0.00";
    return s;
}

std::string render_metrics_text(const MetricReport& r) {
    std::string out = "Epoch " + (r.epoch.empty() ? std::string("(unnamed)") : r.epoch) + "\n";
    out += detail::render_table({
        {"n", std::to_string(r.n_assets)},
        {"M0", r.m0 ? format_decimal(*r.m0) : "n/a"},
        {"M1", std::to_string(r.m1)},
        {"M7", std::to_string(r.m7)},
    });
    if (r.asset_order.empty()) return out;

    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> header{"metric", ""};
    for (const auto& id : r.asset_order) header.push_back(r.names.at(id));
    rows.push_back(header);
    std::vector<std::string> m3{"M3", ""}, m4{"M4", ""};
    for (const auto& id : r.asset_order) {
        m3.push_back(std::to_string(r.m3.at(id)));
        m4.push_back(r.m4.empty() ? "-" : format_decimal(r.m4.at(id)));
    }
    rows.push_back(m3);
    rows.push_back(m4);
    auto m5_cell = [&](const std::string& id, const std::string& cwe) -> std::string {
        const auto a = r.m5.find(id);
        if (a == r.m5.end()) return "-";
        const auto c = a->second.find(cwe);
        return c == a->second.end() ? "-" : std::to_string(c->second);
    };
    for (const auto& cwe : r.weakness_order()) {
        std::vector<std::string> row{"M5", cwe};
        for (const auto& id : r.asset_order) row.push_back(m5_cell(id, cwe));
        rows.push_back(std::move(row));
    }
    for (const auto& cwe : r.weakness_order()) rows.push_back({"M6", cwe, std::to_string(r.m6.at(cwe))});
    out += "\n" + detail::render_table(rows);
    return out;
}

std::string render_lifecycle_text(const LifecycleReport& r) {
    std::string out;
    for (const auto& m : r.per_epoch) out += render_metrics_text(m) + "\n";
    out += "Lifecycle (" + std::to_string(r.epochs.size()) + " epochs)\n";
    out += detail::render_table({
        {"M2", std::to_string(r.m2)},
        {"M8 union", std::to_string(r.m8_union)},
        {"M8 sum", std::to_string(r.m8_sum)},
    });
    if (!r.weakness_frequency.empty()) {
        std::vector<std::vector<std::string>> rows{{"weakness", "sum M6"}};
        for (const auto& f : r.weakness_frequency) rows.push_back({f.cwe_id, std::to_string(f.count)});
        out += "\n" + detail::render_table(rows);
    }
    return out;
}

json metric_report_to_json(const MetricReport& r) {
    json assets = json::array();
    for (const auto& id : r.asset_order) {
        json a{{"id", id}, {"name", r.names.at(id)}, {"m3", r.m3.at(id)}};
        a["m4"] = r.m4.empty() ? json(nullptr) : json(r.m4.at(id));
        json m5 = json::object();
        if (const auto it = r.m5.find(id); it != r.m5.end())
            for (const auto& [cwe, n] : it->second) m5[cwe] = n;
        a["m5"] = std::move(m5);
        assets.push_back(std::move(a));
    }
    json m6 = json::object();
    for (const auto& [cwe, n] : r.m6) m6[cwe] = n;
    return json{{"epoch", r.epoch},
                {"n_assets", r.n_assets},
                {"m0", r.m0 ? json(*r.m0) : json(nullptr)},
                {"m1", r.m1},
                {"m7", r.m7},
                {"assets", std::move(assets)},
                {"m6", std::move(m6)}};
}

json lifecycle_to_json(const LifecycleReport& r) {
    json epochs = json::array();
    for (const auto& m : r.per_epoch) epochs.push_back(metric_report_to_json(m));
    json freq = json::array();
    for (const auto& f : r.weakness_frequency) freq.push_back(json{{"cwe_id", f.cwe_id}, {"count", f.count}});
    return json{{"epochs", std::move(epochs)},
                {"m2", r.m2},
                {"m8_union", r.m8_union},
                {"m8_sum", r.m8_sum},
                {"weakness_frequency", std::move(freq)}};
}

json prioritized_to_json(const std::vector<PrioritizedVulnerability>& list) {
    json out = json::array();
    for (const auto& p : list)
        out.push_back(json{{"cve_id", p.cve_id},
                           {"cvss", p.cvss},
                           {"asset", p.asset},
                           {"exploit_available", p.exploit_available},
                           {"rank", p.rank}});
    return out;
}

}  // namespace edg
