#pragma once

// Metric suite M0-M8 over snapshots and timelines, prioritized patch lists
// and ISA/IEC 62443 annotations.
//
// Snapshot metrics are evaluated on the active view of the expanded graph:
// deprecated assets and edges never count. Lifecycle metrics consume the
// designated epochs of a timeline.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/graph.hpp"
#include "edg/timeline.hpp"

namespace edg {

// Active assets in column order: by the creation order of the first version
// of each asset's lineage, so columns keep their place across updates.
std::vector<std::string> asset_column_order(const Edg& g);

double m0(const Edg& g);  // throws NoAssets
std::size_t m1(const Edg& g);
std::size_t m2(const Timeline& tl);
std::size_t m3(const Edg& g, std::string_view asset);  // throws UnknownAsset
double m4(const Edg& g, std::string_view asset);       // throws UnknownAsset, NoVulnerabilities
std::size_t m5(const Edg& g, std::string_view asset, std::string_view cwe);
std::size_t m6(const Edg& g, std::string_view cwe);
std::size_t m7(const Edg& g);

enum class M8Mode { Union, Sum };
std::size_t m8(const Timeline& tl, M8Mode mode = M8Mode::Union);

struct MetricReport {
    std::string epoch;
    std::size_t n_assets = 0;
    std::optional<double> m0;  // absent without active assets
    std::size_t m1 = 0;
    std::size_t m3_sum = 0;                     // denominator of m4
    std::vector<std::string> asset_order;       // active assets, column order
    std::map<std::string, std::string> names;   // asset id -> display name
    std::map<std::string, std::size_t> m3;
    std::map<std::string, double> m4;           // empty when m3_sum is 0
    std::map<std::string, std::map<std::string, std::size_t>> m5;  // asset -> cwe -> count, non-zero only
    std::map<std::string, std::size_t> m6;
    std::size_t m7 = 0;

    // Weakness ids present in the snapshot, numeric order, CWE-NULL last.
    std::vector<std::string> weakness_order() const;
};

MetricReport compute_metrics(const Edg& g);

struct WeaknessFrequency {
    std::string cwe_id;
    std::size_t count = 0;

    friend bool operator==(const WeaknessFrequency&, const WeaknessFrequency&) = default;
};

struct LifecycleReport {
    std::vector<std::string> epochs;
    std::vector<MetricReport> per_epoch;
    std::size_t m2 = 0;
    std::size_t m8_union = 0;
    std::size_t m8_sum = 0;
    std::vector<WeaknessFrequency> weakness_frequency;  // count descending
};

// Named epochs in order, or the latest snapshot alone when none is named.
std::vector<std::pair<std::string, const Edg*>> designated_epochs(const Timeline& tl);

LifecycleReport compute_lifecycle(const Timeline& tl);

// Sum over epochs of m6 per weakness, count descending, ties by weakness id.
std::vector<WeaknessFrequency> lifecycle_weakness_frequency(const Timeline& tl);

enum class Grouping { ByAsset, Global };

struct PrioritizedVulnerability {
    std::string cve_id;
    double cvss = 0.0;
    std::string asset;
    bool exploit_available = false;
    std::size_t rank = 1;  // 1 + entries of the group with a strictly higher score

    friend bool operator==(const PrioritizedVulnerability&, const PrioritizedVulnerability&) = default;
};

// Active (vulnerability, asset) pairs with min <= cvss <= max. Groups follow
// asset column order; inside a group: CVSS descending, exploit first, then
// CVE id. Throws InvalidArgument unless 0 <= min <= max <= 10.
std::vector<PrioritizedVulnerability> prioritize(const Edg& g, double min_cvss, double max_cvss,
                                                 Grouping grouping = Grouping::ByAsset);

// Metric ids M0..M8.
inline constexpr std::size_t kMetricCount = 9;
std::string canonical_metric_id(std::string_view id);  // throws UnknownMetric

// Metric id -> requirement tags, rows of `metric,<tag>...` with 1/0 cells.
class Iec62443Mapping {
public:
    static Iec62443Mapping parse(std::string_view csv_text, const std::string& source);
    static Iec62443Mapping load(const std::filesystem::path& path);
    static const Iec62443Mapping& bundled();

    // Tags in column order. Throws UnknownMetric.
    std::vector<std::string> tags_for(std::string_view metric_id) const;
    const std::vector<std::string>& columns() const noexcept { return columns_; }

private:
    std::vector<std::string> columns_;
    std::map<std::string, std::vector<std::string>> rows_;
};

std::vector<std::string> iec62443_annotations(std::string_view metric_id,
                                              const Iec62443Mapping& mapping = Iec62443Mapping::bundled());

// Two-decimal display form.
std::string format_decimal(double v);

// Aligned plain-text tables: assets as columns, metrics as rows.
std::string render_metrics_text(const MetricReport& r);
std::string render_lifecycle_text(const LifecycleReport& r);

nlohmann::json metric_report_to_json(const MetricReport& r);
nlohmann::json lifecycle_to_json(const LifecycleReport& r);
nlohmann::json prioritized_to_json(const std::vector<PrioritizedVulnerability>& list);

}  // namespace edg
