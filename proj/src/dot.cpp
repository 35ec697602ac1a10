#include "edg/dot.hpp"

#include <algorithm>
#include <sstream>

#include "edg/metrics.hpp"

namespace edg {

namespace {

std::string join(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
    return out;
}

std::string asset_label(const AssetNode& a, LabelVerbosity v) {
    std::string label = a.name + "\n" + bind_formatted(a.cpe_current);
    if (v == LabelVerbosity::Full && a.cpe_previous) label += "\nprevious: " + bind_formatted(*a.cpe_previous);
    return label;
}

std::string vuln_label(const VulnNode& n, LabelVerbosity v) {
    std::string label = n.cve_id + "\nCVSS " + format_decimal(n.cvss.score);
    if (v == LabelVerbosity::Full) {
        label += "\n" + join(n.cwe_ids);
        if (!n.capec_ids.empty()) label += "\n" + join(n.capec_ids);
    }
    return label;
}

std::string cluster_label(const Cluster& c, LabelVerbosity v) {
    std::string label = c.id + "\n" + std::to_string(c.assets.size()) + " assets, " + std::to_string(c.vulns.size()) +
                        " vulnerabilities";
    if (v == LabelVerbosity::Full) {
        std::vector<std::string> members;
        for (const auto& [id, a] : c.assets) members.push_back(id);
        label += "\n" + join(members);
    }
    return label;
}

}  // namespace

std::string dot_quote(std::string_view s) {
    std::string out = "\"";
    for (char ch : s) {
        switch (ch) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': break;
            default: out.push_back(ch);
        }
    }
    return out + "\"";
}

std::string export_dot(const Edg& input, const RenderOptions& opts) {
    Edg g = opts.cluster ? cluster_by(input, *opts.cluster) : input;
    if (!opts.show_deprecated) g = active_subgraph(g);
    const std::string epoch = opts.epoch.value_or(g.epoch);

    std::ostringstream out;
    out << "digraph edg {\n";
    if (!epoch.empty()) out << "  label=" << dot_quote("epoch " + epoch) << ";\n";
    out << "  " << dot_quote(kRootId) << " [shape=box, label="
        << dot_quote(bind_formatted(g.root.sut) + "\n" + g.root.checked_at.to_string()) << "];\n";

    std::vector<const AssetNode*> assets;
    for (const auto& [id, a] : g.assets) assets.push_back(&a);
    std::sort(assets.begin(), assets.end(), [](const AssetNode* x, const AssetNode* y) { return x->seq < y->seq; });
    for (const AssetNode* a : assets) {
        out << "  " << dot_quote(a->id) << " [shape=ellipse";
        if (a->deprecated) out << ", style=dashed";
        out << ", label=" << dot_quote(asset_label(*a, opts.verbosity)) << "];\n";
    }
    for (const auto& [id, c] : g.clusters)
        out << "  " << dot_quote(id) << " [shape=ellipse, style=dotted, label="
            << dot_quote(cluster_label(c, opts.verbosity)) << "];\n";
    for (const auto& [id, v] : g.vulns)
        out << "  " << dot_quote(id) << " [shape=invtriangle, label=" << dot_quote(vuln_label(v, opts.verbosity))
            << "];\n";
    for (const Edge& e : g.edges) {
        out << "  " << dot_quote(e.source) << " -> " << dot_quote(e.target);
        if (e.kind == EdgeKind::Deprecated) out << " [style=dashed]";
        out << ";\n";
    }
    out << "}\n";
    return out.str();
}

}  // namespace edg
