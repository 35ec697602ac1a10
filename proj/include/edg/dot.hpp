#pragma once

// Graphviz DOT rendering of a snapshot using the EDG symbol set: root as a
// box, assets as ellipses, vulnerabilities as inverted triangles, clusters
// as dotted ellipses, deprecated edges dashed. No colors are emitted.

#include <optional>
#include <string>

#include "edg/graph.hpp"

namespace edg {

enum class LabelVerbosity {
    Brief,  // ids, CPE names, CVSS
    Full,   // adds previous CPE, CWE and CAPEC ids
};

struct RenderOptions {
    std::optional<ClusterCriterion> cluster;  // applied before rendering
    bool show_deprecated = true;              // false renders the active view
    std::optional<std::string> epoch;         // graph label, defaults to the snapshot epoch
    LabelVerbosity verbosity = LabelVerbosity::Brief;
};

// Deterministic: root, assets by creation order, clusters and
// vulnerabilities by id, then edges in (source, target, kind) order.
std::string export_dot(const Edg& g, const RenderOptions& opts = {});

// Quoted DOT identifier.
std::string dot_quote(std::string_view s);

}  // namespace edg
