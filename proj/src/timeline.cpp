#include "edg/timeline.hpp"

#include <algorithm>

#include "csv.hpp"
#include "edg/errors.hpp"
#include "json_util.hpp"

namespace edg {

using nlohmann::json;

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string_view event_kind(const LifecycleEvent& e) {
    return std::visit(overloaded{
                          [](const AssetAdded&) { return std::string_view("asset_added"); },
                          [](const VulnDiscovered&) { return std::string_view("vuln_discovered"); },
                          [](const AssetUpdated&) { return std::string_view("asset_updated"); },
                          [](const VulnPatched&) { return std::string_view("vuln_patched"); },
                          [](const AssetRemoved&) { return std::string_view("asset_removed"); },
                          [](const Checkpoint&) { return std::string_view("checkpoint"); },
                      },
                      e.payload);
}

Timeline Timeline::start(Manifest manifest, const CatalogHistory& catalogs) {
    Timeline tl;
    tl.snapshots_.push_back(build_edg(manifest, catalogs.at(manifest.at)));
    tl.manifest_ = std::move(manifest);
    return tl;
}

Timestamp Timeline::snapshot_time(std::size_t i) const {
    if (i >= snapshots_.size()) throw InvalidArgument("snapshot index out of range");
    return i == 0 ? manifest_.at : events_[i - 1].at;
}

Timeline Timeline::restore(Manifest manifest, std::vector<LifecycleEvent> events, std::vector<Edg> snapshots) {
    if (snapshots.size() != events.size() + 1)
        throw SchemaError("timeline: expected " + std::to_string(events.size() + 1) + " snapshots, found " +
                          std::to_string(snapshots.size()));
    Timeline tl;
    tl.manifest_ = std::move(manifest);
    tl.events_ = std::move(events);
    tl.snapshots_ = std::move(snapshots);
    Timestamp last = tl.manifest_.at;
    for (std::size_t i = 0; i < tl.events_.size(); ++i) {
        if (tl.events_[i].seq != i + 1) throw SchemaError("timeline: events[" + std::to_string(i) + "].seq out of order");
        if (tl.events_[i].at < last)
            throw NonMonotonicTimestamp("timeline: events[" + std::to_string(i) + "] precedes its predecessor");
        last = tl.events_[i].at;
    }
    for (std::size_t i = 0; i < tl.snapshots_.size(); ++i)
        if (tl.snapshots_[i].root.checked_at != tl.snapshot_time(i))
            throw SchemaError("timeline: snapshots[" + std::to_string(i) + "] is not timed at its event");
    return tl;
}

void Timeline::append(LifecycleEvent e, const CatalogHistory& catalogs) {
    const Timestamp last = events_.empty() ? manifest_.at : events_.back().at;
    if (e.at < last)
        throw NonMonotonicTimestamp("event at " + e.at.to_string() + " precedes the last event at " + last.to_string());
    e.seq = events_.size() + 1;

    Edg g = latest();
    g.root.checked_at = e.at;
    // Only additions, discoveries and updates consult a catalog.
    auto catalog = [&]() -> const Catalog& { return catalogs.at(e.at); };
    std::visit(overloaded{
                   [&](const AssetAdded& p) { g = add_asset(g, p.entry, p.required_by, catalog(), e.at.date()); },
                   [&](const VulnDiscovered& p) { g = discover_vulnerability(g, p.cve, p.asset, catalog()); },
                   [&](const AssetUpdated& p) {
                       const std::set<std::string> fixes(p.fixes.begin(), p.fixes.end());
                       g = update_asset(g, p.asset, p.cpe, catalog(), fixes, p.successor);
                   },
                   [&](const VulnPatched& p) { g = patch_vulnerability(g, p.cve, p.asset); },
                   [&](const AssetRemoved& p) { g = remove_asset(g, p.asset); },
                   [&](const Checkpoint& p) {
                       if (!p.label.empty()) {
                           const auto labels = epoch_labels();
                           if (std::find(labels.begin(), labels.end(), p.label) != labels.end())
                               throw DuplicateId("epoch '" + p.label + "' already exists");
                           g.epoch = p.label;
                       }
                       if (p.sut) g.root.sut = *p.sut;
                   },
               },
               e.payload);
    snapshots_.push_back(std::move(g));
    events_.push_back(std::move(e));
}

const Edg& Timeline::snapshot_at(const Timestamp& t) const {
    std::size_t chosen = 0;
    for (std::size_t i = 0; i < snapshots_.size(); ++i)
        if (snapshot_time(i) <= t) chosen = i;
    return snapshots_[chosen];
}

std::vector<std::string> Timeline::epoch_labels() const {
    std::vector<std::string> out;
    for (const auto& s : snapshots_)
        if (!s.epoch.empty() && std::find(out.begin(), out.end(), s.epoch) == out.end()) out.push_back(s.epoch);
    return out;
}

const Edg& Timeline::epoch(std::string_view label) const {
    for (auto it = snapshots_.rbegin(); it != snapshots_.rend(); ++it)
        if (it->epoch == label) return *it;
    throw UnknownEpoch("unknown epoch '" + std::string(label) + "'");
}

Timeline apply_event(const Timeline& tl, LifecycleEvent e, const CatalogHistory& catalogs) {
    Timeline next = tl;
    next.append(std::move(e), catalogs);
    return next;
}

Timeline replay(const Manifest& manifest, std::vector<LifecycleEvent> events, const CatalogHistory& catalogs) {
    std::stable_sort(events.begin(), events.end(), [](const LifecycleEvent& a, const LifecycleEvent& b) {
        return a.at != b.at ? a.at < b.at : a.seq < b.seq;
    });
    Timeline tl = Timeline::start(manifest, catalogs);
    for (auto& e : events) tl.append(std::move(e), catalogs);
    return tl;
}

// JSON -----------------------------------------------------------------------

namespace {

WellFormedName cpe_at(const json& obj, std::string_view key, const std::string& path) {
    const std::string s = detail::string_field(obj, key, path);
    return detail::convert_at(detail::join_path(path, key), [&] { return parse_formatted(s); });
}

json entry_to_json(const ManifestEntry& e) {
    json j{{"id", e.id}, {"cpe", bind_formatted(e.cpe)}, {"depends_on", e.depends_on}};
    if (!e.name.empty() && e.name != e.id) j["name"] = e.name;
    if (e.top_level) j["top_level"] = true;
    return j;
}

ManifestEntry entry_from_json(const json& j, const std::string& path) {
    ManifestEntry e;
    e.id = detail::string_field(j, "id", path);
    if (const json* n = detail::optional_field(j, "name")) e.name = detail::as_string(*n, detail::join_path(path, "name"));
    e.cpe = cpe_at(j, "cpe", path);
    e.depends_on = detail::string_list_field(j, "depends_on", path);
    if (const json* t = detail::optional_field(j, "top_level"))
        e.top_level = detail::as_bool(*t, detail::join_path(path, "top_level"));
    return e;
}

}  // namespace

json event_to_json(const LifecycleEvent& e) {
    json j{{"seq", e.seq}, {"at", e.at.to_string()}, {"kind", event_kind(e)}};
    std::visit(overloaded{
                   [&](const AssetAdded& p) {
                       j["entry"] = entry_to_json(p.entry);
                       j["required_by"] = p.required_by;
                   },
                   [&](const VulnDiscovered& p) {
                       j["asset"] = p.asset;
                       j["cve"] = p.cve;
                   },
                   [&](const AssetUpdated& p) {
                       j["asset"] = p.asset;
                       j["cpe"] = bind_formatted(p.cpe);
                       j["fixes"] = p.fixes;
                       if (p.successor) j["successor"] = *p.successor;
                   },
                   [&](const VulnPatched& p) {
                       j["asset"] = p.asset;
                       j["cve"] = p.cve;
                   },
                   [&](const AssetRemoved& p) { j["asset"] = p.asset; },
                   [&](const Checkpoint& p) {
                       if (!p.label.empty()) j["label"] = p.label;
                       if (p.sut) j["sut"] = bind_formatted(*p.sut);
                   },
               },
               e.payload);
    return j;
}

LifecycleEvent event_from_json(const json& j, const std::string& path) {
    if (!j.is_object()) throw SchemaError(path + ": expected an object");
    LifecycleEvent e;
    const std::string at = detail::string_field(j, "at", path);
    e.at = detail::convert_at(detail::join_path(path, "at"), [&] { return Timestamp::parse(at); });
    if (const json* s = detail::optional_field(j, "seq")) {
        if (!s->is_number_unsigned()) throw SchemaError(detail::join_path(path, "seq") + ": expected an unsigned integer");
        e.seq = s->get<std::uint64_t>();
    }
    const std::string kind = detail::string_field(j, "kind", path);
    if (kind == "asset_added") {
        AssetAdded p;
        p.entry = entry_from_json(detail::require(j, "entry", path), detail::join_path(path, "entry"));
        p.required_by = detail::string_list_field(j, "required_by", path);
        e.payload = std::move(p);
    } else if (kind == "vuln_discovered") {
        e.payload = VulnDiscovered{detail::string_field(j, "asset", path), detail::string_field(j, "cve", path)};
    } else if (kind == "asset_updated") {
        AssetUpdated p;
        p.asset = detail::string_field(j, "asset", path);
        p.cpe = cpe_at(j, "cpe", path);
        p.fixes = detail::string_list_field(j, "fixes", path);
        if (const json* s = detail::optional_field(j, "successor"))
            p.successor = detail::as_string(*s, detail::join_path(path, "successor"));
        e.payload = std::move(p);
    } else if (kind == "vuln_patched") {
        e.payload = VulnPatched{detail::string_field(j, "asset", path), detail::string_field(j, "cve", path)};
    } else if (kind == "asset_removed") {
        e.payload = AssetRemoved{detail::string_field(j, "asset", path)};
    } else if (kind == "checkpoint") {
        Checkpoint p;
        if (const json* l = detail::optional_field(j, "label")) p.label = detail::as_string(*l, detail::join_path(path, "label"));
        if (detail::optional_field(j, "sut")) p.sut = cpe_at(j, "sut", path);
        e.payload = std::move(p);
    } else {
        throw SchemaError(detail::join_path(path, "kind") + ": unknown event kind '" + kind + "'");
    }
    return e;
}

std::vector<LifecycleEvent> events_from_json(const json& j, const std::string& path) {
    const json* arr = &j;
    std::string p = path;
    if (j.is_object()) {
        arr = &detail::require(j, "events", path);
        p = detail::join_path(path, "events");
    }
    detail::as_array(*arr, p);
    std::vector<LifecycleEvent> out;
    for (std::size_t i = 0; i < arr->size(); ++i) out.push_back(event_from_json((*arr)[i], detail::index_path(p, i)));
    return out;
}

json timeline_to_json(const Timeline& tl, bool with_snapshots) {
    json events = json::array();
    for (const auto& e : tl.events()) events.push_back(event_to_json(e));
    json doc{{"schema_version", 1}, {"manifest", manifest_to_json(tl.manifest())}, {"events", std::move(events)}};
    if (with_snapshots) {
        json snaps = json::array();
        for (const auto& s : tl.snapshots()) snaps.push_back(edg_to_json(s));
        doc["snapshots"] = std::move(snaps);
    }
    return doc;
}

Timeline timeline_from_json(const json& j, const CatalogHistory* catalogs) {
    if (!j.is_object()) throw SchemaError("timeline: expected an object");
    if (const json* v = detail::optional_field(j, "schema_version"); v && (!v->is_number_integer() || v->get<int>() != 1))
        throw SchemaError("schema_version: unsupported version");
    Manifest m = manifest_from_json(detail::require(j, "manifest", ""), "manifest");
    std::vector<LifecycleEvent> events;
    if (detail::optional_field(j, "events")) events = events_from_json(j, "");
    if (const json* snaps = detail::optional_field(j, "snapshots")) {
        detail::as_array(*snaps, "snapshots");
        std::vector<Edg> out;
        for (std::size_t i = 0; i < snaps->size(); ++i)
            out.push_back(edg_from_json((*snaps)[i], detail::index_path("snapshots", i)));
        return Timeline::restore(std::move(m), std::move(events), std::move(out));
    }
    if (!catalogs || catalogs->empty())
        throw InvalidArgument("timeline has no stored snapshots; a catalog is needed to replay it");
    return replay(m, std::move(events), *catalogs);
}

Timeline load_timeline(const std::filesystem::path& path, const CatalogHistory* catalogs) {
    json doc;
    try {
        doc = json::parse(detail::read_text_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(path.string() + ": not valid JSON: " + e.what());
    }
    return timeline_from_json(doc, catalogs);
}

void save_timeline(const Timeline& tl, const std::filesystem::path& path, bool with_snapshots) {
    detail::write_text_file(path, timeline_to_json(tl, with_snapshots).dump(2) + "\n");
}

}  // namespace edg
