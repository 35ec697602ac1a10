#pragma once

// Shared test inputs: repository paths, the OpenPLC fixture timeline and the
// four-step update scenario.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/catalog.hpp"
#include "edg/graph.hpp"
#include "edg/timeline.hpp"

namespace edg::testing {

inline std::filesystem::path source_dir() { return EDG_SOURCE_DIR; }
inline std::filesystem::path openplc_dir() { return source_dir() / "data" / "openplc"; }

inline nlohmann::json read_json(const std::filesystem::path& p) {
    std::ifstream in(p);
    return nlohmann::json::parse(in);
}

inline std::vector<std::filesystem::path> openplc_catalog_paths() {
    return {openplc_dir() / "catalog_v1.json", openplc_dir() / "catalog_v2.json", openplc_dir() / "catalog_v3.json"};
}

inline const CatalogHistory& openplc_catalogs() {
    static const CatalogHistory history = [] {
        std::vector<Catalog> cs;
        for (const auto& p : openplc_catalog_paths()) cs.push_back(load_catalog(p));
        return CatalogHistory(std::move(cs));
    }();
    return history;
}

// Replayed from manifest and events, independent of the stored timeline file.
inline const Timeline& openplc_timeline() {
    static const Timeline tl = replay(load_manifest(openplc_dir() / "manifest.json"),
                                      events_from_json(read_json(openplc_dir() / "events.json")), openplc_catalogs());
    return tl;
}

// a1 (top level) depends on a2. t1: a vulnerability is found on a2. t2: a2
// is updated to a3 without fixing it. t3: a3 is updated to a4, fixing it.
// Each checkpoint opens its epoch before the epoch's event.
struct TimeModel {
    static constexpr const char* kCve = "CVE-2020-0001";

    Catalog catalog;
    Manifest manifest;
    std::vector<LifecycleEvent> events;

    static WellFormedName cpe(const char* product, const char* version) {
        return WellFormedName(Part::Application, "example", product, version);
    }

    static TimeModel make() {
        TimeModel m;
        CatalogContents c;
        VulnerabilityRecord v;
        v.cve_id = kCve;
        v.cvss = {7.5, CvssScheme::V3};
        v.cwe_ids = {"CWE-119"};
        v.affected = {{cpe("p2", "1.0"), std::nullopt}, {cpe("p2", "2.0"), std::nullopt}};
        v.published = Date::parse("2020-01-02");
        c.vulnerabilities.push_back(v);
        c.weaknesses.push_back({"CWE-119", "Buffer errors", "", {}});
        m.catalog = Catalog::build(std::move(c));

        m.manifest.sut = cpe("sut", "1.0");
        m.manifest.epoch = "t0";
        m.manifest.at = Timestamp::parse("2020-01-01T00:00:00Z");
        m.manifest.assets = {{"a1", "a1", cpe("p1", "1.0"), {"a2"}, true}, {"a2", "a2", cpe("p2", "1.0"), {}, false}};

        auto at = [](const char* s) { return Timestamp::parse(s); };
        m.events = {
            {at("2020-01-02T00:00:00Z"), 0, Checkpoint{"t1", std::nullopt}},
            {at("2020-01-02T00:00:00Z"), 0, VulnDiscovered{"a2", kCve}},
            {at("2020-01-03T00:00:00Z"), 0, Checkpoint{"t2", std::nullopt}},
            {at("2020-01-03T00:00:00Z"), 0, AssetUpdated{"a2", cpe("p2", "2.0"), {}, "a3"}},
            {at("2020-01-04T00:00:00Z"), 0, Checkpoint{"t3", std::nullopt}},
            {at("2020-01-04T00:00:00Z"), 0, AssetUpdated{"a3", cpe("p2", "3.0"), {kCve}, "a4"}},
        };
        return m;
    }

    Timeline replayed() const { return replay(manifest, events, CatalogHistory(catalog)); }
};

}  // namespace edg::testing
