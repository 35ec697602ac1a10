#pragma once

// Threshold alerts over a snapshot: CVSS ceilings and metric bounds.

#include <cstddef>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/graph.hpp"
#include "edg/timeline.hpp"

namespace edg {

enum class Comparator { Less, LessEqual, Greater, GreaterEqual };

std::string_view to_string(Comparator c);
bool compare(double lhs, Comparator c, double rhs);

// Fires once per active vulnerability scored at or above the threshold.
struct CvssAtLeast {
    double threshold = 10.0;  // [0, 10]

    friend bool operator==(const CvssAtLeast&, const CvssAtLeast&) = default;
};

// Fires once per entity whose metric value satisfies `value <cmp> bound`.
// Per-asset metrics (M3, M4) and per-weakness metrics (M5, M6) are checked
// for every entity; the rest are single values.
struct MetricBound {
    std::string metric;  // canonical M0..M8
    Comparator comparator = Comparator::GreaterEqual;
    double bound = 0.0;

    friend bool operator==(const MetricBound&, const MetricBound&) = default;
};

struct AlertRule {
    std::variant<CvssAtLeast, MetricBound> condition;
    std::string severity = "warning";

    friend bool operator==(const AlertRule&, const AlertRule&) = default;
};

struct AlertFiring {
    std::size_t rule_index = 0;
    std::string rule;      // textual form of the rule
    std::string severity;
    std::string entity;    // CVE id, asset id, `asset/CWE`, CWE id, or "SUT"
    double value = 0.0;

    friend bool operator==(const AlertFiring&, const AlertFiring&) = default;
};

// Text form: `cvss>=X` or `<metric><cmp><value>`, optionally followed by
// `:<severity>`. Comparators are <, <=, >, >=. Throws InvalidArgument.
AlertRule parse_alert_rule(std::string_view text);
std::string format_alert_rule(const AlertRule& rule);

// M2 and M8 need the timeline; without one such rules throw InvalidArgument.
// Metrics without a value (M0 on an empty graph, M4 without vulnerabilities)
// never fire.
std::vector<AlertFiring> check_alerts(const Edg& g, const std::vector<AlertRule>& rules,
                                      const Timeline* timeline = nullptr);

nlohmann::json alert_firings_to_json(const std::vector<AlertFiring>& firings);

}  // namespace edg
