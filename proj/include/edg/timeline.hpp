#pragma once

// Append-only lifecycle event log and the snapshot it produces after every
// event. Snapshot i is the graph after the first i events; snapshot 0 is
// built from the manifest.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "edg/catalog.hpp"
#include "edg/graph.hpp"
#include "edg/time.hpp"

namespace edg {

struct AssetAdded {
    ManifestEntry entry;
    std::vector<std::string> required_by;  // empty: required by the root

    friend bool operator==(const AssetAdded&, const AssetAdded&) = default;
};

struct VulnDiscovered {
    std::string asset;
    std::string cve;

    friend bool operator==(const VulnDiscovered&, const VulnDiscovered&) = default;
};

struct AssetUpdated {
    std::string asset;
    WellFormedName cpe;
    std::vector<std::string> fixes;
    std::optional<std::string> successor;  // generated when absent

    friend bool operator==(const AssetUpdated&, const AssetUpdated&) = default;
};

struct VulnPatched {
    std::string asset;
    std::string cve;

    friend bool operator==(const VulnPatched&, const VulnPatched&) = default;
};

struct AssetRemoved {
    std::string asset;

    friend bool operator==(const AssetRemoved&, const AssetRemoved&) = default;
};

// Leaves the graph unchanged. A label opens a new epoch; a CPE replaces the
// system-under-test name.
struct Checkpoint {
    std::string label;
    std::optional<WellFormedName> sut;

    friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

using EventPayload = std::variant<AssetAdded, VulnDiscovered, AssetUpdated, VulnPatched, AssetRemoved, Checkpoint>;

struct LifecycleEvent {
    Timestamp at;
    std::uint64_t seq = 0;  // assigned on append, 1-based
    EventPayload payload;

    friend bool operator==(const LifecycleEvent&, const LifecycleEvent&) = default;
};

std::string_view event_kind(const LifecycleEvent& e);

class Timeline {
public:
    // Builds snapshot 0 from the manifest. The manifest epoch names the
    // first epoch.
    static Timeline start(Manifest manifest, const CatalogHistory& catalogs);

    // Reassembles a timeline from stored snapshots without replaying.
    // Throws SchemaError when counts or timestamps are inconsistent.
    static Timeline restore(Manifest manifest, std::vector<LifecycleEvent> events, std::vector<Edg> snapshots);

    // Throws NonMonotonicTimestamp when `e.at` precedes the last event, and
    // the graph operation's errors otherwise. The timeline is unchanged on
    // failure.
    void append(LifecycleEvent e, const CatalogHistory& catalogs);

    const Manifest& manifest() const noexcept { return manifest_; }
    const std::vector<LifecycleEvent>& events() const noexcept { return events_; }
    const std::vector<Edg>& snapshots() const noexcept { return snapshots_; }
    const Edg& latest() const { return snapshots_.back(); }

    Timestamp snapshot_time(std::size_t i) const;

    // Latest snapshot taken on or before t; the first one if t precedes it.
    const Edg& snapshot_at(const Timestamp& t) const;

    // Epoch labels in the order they were opened.
    std::vector<std::string> epoch_labels() const;

    // Last snapshot carrying the label. Throws UnknownEpoch.
    const Edg& epoch(std::string_view label) const;

    friend bool operator==(const Timeline&, const Timeline&) = default;

private:
    Manifest manifest_;
    std::vector<LifecycleEvent> events_;
    std::vector<Edg> snapshots_;
};

// Value-returning form of Timeline::append.
Timeline apply_event(const Timeline& tl, LifecycleEvent e, const CatalogHistory& catalogs);

// Builds the initial snapshot and applies the events in (at, seq) order.
Timeline replay(const Manifest& manifest, std::vector<LifecycleEvent> events, const CatalogHistory& catalogs);

nlohmann::json event_to_json(const LifecycleEvent& e);
LifecycleEvent event_from_json(const nlohmann::json& j, const std::string& path = "event");
std::vector<LifecycleEvent> events_from_json(const nlohmann::json& j, const std::string& path = "events");

// Document: {schema_version, manifest, events, snapshots?}.
nlohmann::json timeline_to_json(const Timeline& tl, bool with_snapshots = true);

// Without stored snapshots the events are replayed against `catalogs`,
// which must then be non-empty.
Timeline timeline_from_json(const nlohmann::json& j, const CatalogHistory* catalogs = nullptr);

Timeline load_timeline(const std::filesystem::path& path, const CatalogHistory* catalogs = nullptr);
void save_timeline(const Timeline& tl, const std::filesystem::path& path, bool with_snapshots = true);

}  // namespace edg
