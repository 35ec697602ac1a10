#include "edg/alerts.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

#include "csv.hpp"
#include "edg/errors.hpp"
#include "edg/metrics.hpp"

namespace edg {

namespace {

struct ComparatorToken {
    std::string_view text;
    Comparator value;
};

// Two-character forms first so `>=` is not read as `>`.
constexpr std::array<ComparatorToken, 4> kComparators{{
    {"<=", Comparator::LessEqual},
    {">=", Comparator::GreaterEqual},
    {"<", Comparator::Less},
    {">", Comparator::Greater},
}};

double parse_number(std::string_view raw, std::string_view rule) {
    const std::string s = detail::trim(raw);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        throw InvalidArgument("alert rule '" + std::string(rule) + "': bad number '" + std::string(s) + "'");
    return v;
}

void check_threshold(double x, std::string_view rule) {
    if (x < 0.0 || x > 10.0)
        throw InvalidArgument("alert rule '" + std::string(rule) + "': CVSS threshold outside [0, 10]");
}

struct Evaluator {
    const Edg& g;
    const Timeline* timeline;
    const AlertRule& rule;
    std::size_t index;
    std::vector<AlertFiring>& out;

    void fire(std::string entity, double value) const {
        out.push_back({index, format_alert_rule(rule), rule.severity, std::move(entity), value});
    }

    void operator()(const CvssAtLeast& c) const {
        const Edg view = active_subgraph(expand_clusters(g));
        std::map<std::string, double> hits;
        for (const AssetNode* a : view.active_assets())
            for (const VulnNode* v : view.vulns_of(a->id))
                if (v->cvss.score >= c.threshold) hits.emplace(v->cve_id, v->cvss.score);
        for (const auto& [cve, score] : hits) fire(cve, score);
    }

    void check(std::string entity, double value, const MetricBound& b) const {
        if (compare(value, b.comparator, b.bound)) fire(std::move(entity), value);
    }

    const Timeline& need_timeline(const MetricBound& b) const {
        if (!timeline) throw InvalidArgument(b.metric + " alerts need a timeline");
        return *timeline;
    }

    void operator()(const MetricBound& b) const {
        const std::string id = canonical_metric_id(b.metric);
        if (id == "M2") return check("SUT", static_cast<double>(m2(need_timeline(b))), b);
        if (id == "M8") return check("SUT", static_cast<double>(m8(need_timeline(b))), b);
        const MetricReport r = compute_metrics(g);
        if (id == "M0") {
            if (r.m0) check("SUT", *r.m0, b);
        } else if (id == "M1") {
            check("SUT", static_cast<double>(r.m1), b);
        } else if (id == "M7") {
            check("SUT", static_cast<double>(r.m7), b);
        } else if (id == "M3") {
            for (const auto& a : r.asset_order) check(a, static_cast<double>(r.m3.at(a)), b);
        } else if (id == "M4") {
            for (const auto& a : r.asset_order)
                if (auto it = r.m4.find(a); it != r.m4.end()) check(a, it->second, b);
        } else if (id == "M5") {
            static const std::map<std::string, std::size_t> kNone;
            for (const auto& a : r.asset_order) {
                const auto found = r.m5.find(a);
                const auto& row = found == r.m5.end() ? kNone : found->second;
                for (const auto& cwe : r.weakness_order()) {
                    const auto it = row.find(cwe);
                    check(a + "/" + cwe, it == row.end() ? 0.0 : static_cast<double>(it->second), b);
                }
            }
        } else if (id == "M6") {
            for (const auto& cwe : r.weakness_order()) check(cwe, static_cast<double>(r.m6.at(cwe)), b);
        }
    }
};

}  // namespace

std::string_view to_string(Comparator c) {
    for (const auto& t : kComparators)
        if (t.value == c) return t.text;
    return "?";
}

bool compare(double lhs, Comparator c, double rhs) {
    switch (c) {
        case Comparator::Less: return lhs < rhs;
        case Comparator::LessEqual: return lhs <= rhs;
        case Comparator::Greater: return lhs > rhs;
        case Comparator::GreaterEqual: return lhs >= rhs;
    }
    return false;
}

AlertRule parse_alert_rule(std::string_view text) {
    AlertRule rule;
    std::string body = detail::trim(text);
    if (const auto colon = body.find(':'); colon != std::string::npos) {
        rule.severity = detail::trim(std::string_view(body).substr(colon + 1));
        if (rule.severity.empty()) throw InvalidArgument("alert rule '" + std::string(text) + "': empty severity");
        body = detail::trim(std::string_view(body).substr(0, colon));
    }
    const auto op_pos = body.find_first_of("<>");
    if (op_pos == std::string::npos || op_pos == 0)
        throw InvalidArgument("alert rule '" + std::string(text) + "': expected <subject><comparator><value>");
    const std::string subject = detail::trim(std::string_view(body).substr(0, op_pos));
    std::string_view rest = std::string_view(body).substr(op_pos);
    Comparator cmp{};
    for (const auto& t : kComparators)
        if (rest.substr(0, t.text.size()) == t.text) {
            cmp = t.value;
            rest.remove_prefix(t.text.size());
            break;
        }
    const double value = parse_number(rest, text);

    std::string lowered;
    for (char ch : subject) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (lowered == "cvss") {
        if (cmp != Comparator::GreaterEqual)
            throw InvalidArgument("alert rule '" + std::string(text) + "': CVSS rules take >= only");
        check_threshold(value, text);
        rule.condition = CvssAtLeast{value};
    } else {
        rule.condition = MetricBound{canonical_metric_id(subject), cmp, value};
    }
    return rule;
}

std::string format_alert_rule(const AlertRule& rule) {
    std::string out;
    if (const auto* c = std::get_if<CvssAtLeast>(&rule.condition)) {
        out = "cvss>=" + format_decimal(c->threshold);
    } else {
        const auto& b = std::get<MetricBound>(rule.condition);
        out = b.metric + std::string(to_string(b.comparator)) + format_decimal(b.bound);
    }
    return out + ":" + rule.severity;
}

std::vector<AlertFiring> check_alerts(const Edg& g, const std::vector<AlertRule>& rules, const Timeline* timeline) {
    std::vector<AlertFiring> out;
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (const auto* c = std::get_if<CvssAtLeast>(&rules[i].condition)) check_threshold(c->threshold, "cvss");
        std::visit(Evaluator{g, timeline, rules[i], i, out}, rules[i].condition);
    }
    return out;
}

nlohmann::json alert_firings_to_json(const std::vector<AlertFiring>& firings) {
    auto out = nlohmann::json::array();
    for (const auto& f : firings)
        out.push_back({{"rule_index", f.rule_index},
                       {"rule", f.rule},
                       {"severity", f.severity},
                       {"entity", f.entity},
                       {"value", f.value}});
    return out;
}

}  // namespace edg
