#include "edg/cli.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <optional>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "edg/alerts.hpp"
#include "edg/catalog.hpp"
#include "edg/dot.hpp"
#include "edg/errors.hpp"
#include "edg/graph.hpp"
#include "edg/metrics.hpp"
#include "edg/nvd.hpp"
#include "edg/report.hpp"
#include "edg/timeline.hpp"

namespace edg {

using nlohmann::json;

namespace {

json load_json(const std::string& path) {
    try {
        return json::parse(detail::read_text_file(path));
    } catch (const json::parse_error& e) {
        throw SchemaError(path + ": not valid JSON: " + e.what());
    }
}

CatalogHistory load_catalogs(const std::vector<std::string>& paths) {
    std::vector<Catalog> catalogs;
    for (const auto& p : paths) catalogs.push_back(load_catalog(p));
    return catalogs.empty() ? CatalogHistory{} : CatalogHistory(std::move(catalogs));
}

void require_format(const std::string& format, std::initializer_list<std::string_view> allowed) {
    if (std::find(allowed.begin(), allowed.end(), format) == allowed.end())
        throw CLI::ValidationError("--format", "unsupported format '" + format + "'");
}

// State shared by the subcommands reading a timeline.
struct Context {
    std::string timeline_path;
    std::vector<std::string> catalog_paths;
    std::string epoch;
    std::string at;
    std::string out_path;
    std::string format = "text";

    std::ostream* out = nullptr;

    Timeline timeline() const {
        const CatalogHistory catalogs = load_catalogs(catalog_paths);
        return load_timeline(timeline_path, &catalogs);
    }

    // --at picks the snapshot in force at that time; otherwise the named
    // epoch, defaulting to the last one.
    const Edg& select(const Timeline& tl) const {
        if (!at.empty()) return tl.snapshot_at(Timestamp::parse(at));
        if (!epoch.empty()) return tl.epoch(epoch);
        return *designated_epochs(tl).back().second;
    }

    std::string epoch_name(const Timeline& tl) const {
        if (!epoch.empty()) return epoch;
        if (!at.empty()) return select(tl).epoch;
        return designated_epochs(tl).back().first;
    }

    void emit(const std::string& text) const {
        if (out_path.empty()) *out << text;
        else detail::write_text_file(out_path, text);
    }
};

void add_timeline_options(CLI::App* cmd, Context& ctx, bool with_epoch = true) {
    cmd->add_option("--timeline", ctx.timeline_path, "Timeline JSON file")->required();
    cmd->add_option("--catalog", ctx.catalog_paths,
                    "Catalog snapshot(s), needed when the timeline stores no snapshots");
    if (with_epoch) {
        cmd->add_option("--epoch", ctx.epoch, "Epoch label (default: the last epoch)");
        cmd->add_option("--at", ctx.at, "Select the snapshot in force at this ISO 8601 time");
    }
    cmd->add_option("--out", ctx.out_path, "Write to this file instead of standard output");
}

ClusterCriterion parse_criterion(const std::string& name, double threshold) {
    if (name == "no-vulns") return NoVulnerabilitiesCriterion{};
    if (name == "cvss-below") {
        if (threshold < 0.0 || threshold > 10.0)
            throw CLI::ValidationError("--threshold", "must lie in [0, 10]");
        return CvssBelowCriterion{threshold};
    }
    throw CLI::ValidationError("--criterion", "unknown criterion '" + name + "'");
}

std::string render_prioritized(const std::vector<PrioritizedVulnerability>& list) {
    std::vector<std::vector<std::string>> rows{{"rank", "cve", "cvss", "asset", "exploit"}};
    for (const auto& p : list)
        rows.push_back({std::to_string(p.rank), p.cve_id, format_decimal(p.cvss), p.asset,
                        p.exploit_available ? "yes" : "no"});
    std::string out;
    for (const auto& row : rows) {
        std::string line;
        for (std::size_t i = 0; i < row.size(); ++i) line += (i ? "\t" : "") + row[i];
        out += line + "\n";
    }
    return out;
}

std::vector<PrioritizedVulnerability> keep_top(const std::vector<PrioritizedVulnerability>& list, std::size_t top,
                                               Grouping grouping) {
    if (top == 0) return list;
    std::vector<PrioritizedVulnerability> out;
    std::map<std::string, std::size_t> taken;
    for (const auto& p : list) {
        const std::string group = grouping == Grouping::Global ? std::string() : p.asset;
        if (taken[group]++ < top) out.push_back(p);
    }
    return out;
}

json diff_to_json(const SnapshotDiff& d, const std::string& from, const std::string& to) {
    json updated = json::array();
    for (const auto& [a, b] : d.updated_assets) updated.push_back(json{{"from", a}, {"to", b}});
    return json{{"from", from},
                {"to", to},
                {"added_assets", d.added_assets},
                {"removed_assets", d.removed_assets},
                {"updated_assets", std::move(updated)},
                {"added_vulnerabilities", d.added_vulns},
                {"removed_vulnerabilities", d.removed_vulns}};
}

std::string render_diff(const SnapshotDiff& d, const std::string& from, const std::string& to) {
    std::string out = "diff " + from + " -> " + to + "\n";
    if (d.empty()) return out + "no changes\n";
    for (const auto& a : d.added_assets) out += "+ asset " + a + "\n";
    for (const auto& a : d.removed_assets) out += "- asset " + a + "\n";
    for (const auto& [a, b] : d.updated_assets) out += "~ asset " + a + " -> " + b + "\n";
    for (const auto& v : d.added_vulns) out += "+ vuln " + v + "\n";
    for (const auto& v : d.removed_vulns) out += "- vuln " + v + "\n";
    return out;
}

std::vector<AlertRule> read_rules(const std::vector<std::string>& texts, const std::string& file) {
    std::vector<AlertRule> rules;
    for (const auto& t : texts) rules.push_back(parse_alert_rule(t));
    if (!file.empty()) {
        std::istringstream in(detail::read_text_file(file));
        std::string line;
        while (std::getline(in, line)) {
            const std::string t = detail::trim(line);
            if (t.empty() || t.front() == '#') continue;
            rules.push_back(parse_alert_rule(t));
        }
    }
    return rules;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Extended dependency graph assessment tool", "edgtool"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    Context ctx;
    ctx.out = &out;
    int status = kExitOk;
    std::function<void()> action;

    // ingest
    std::vector<std::string> feeds;
    std::string prefer = "v3", snapshot_date, base_catalog, weakness_csv, remediation_csv;
    auto* ingest = app.add_subcommand("ingest", "Import NVD JSON feeds into a canonical catalog");
    ingest->add_option("--feed", feeds, "NVD JSON 1.1 feed file")->required();
    ingest->add_option("--prefer", prefer, "CVSS version to prefer when both exist (v3|v2)")
        ->check(CLI::IsMember({"v2", "v3"}));
    ingest->add_option("--snapshot-date", snapshot_date, "Catalog snapshot date (YYYY-MM-DD)");
    ingest->add_option("--base", base_catalog, "Existing catalog to extend; feed records replace same-id ones");
    ingest->add_option("--weaknesses", weakness_csv, "Weakness/attack-pattern mapping CSV");
    ingest->add_option("--remediation", remediation_csv, "Remediation CSV");
    ingest->add_option("--out", ctx.out_path, "Write to this file instead of standard output");
    ingest->callback([&] {
        action = [&] {
            CatalogContents contents;
            if (!base_catalog.empty()) contents = load_catalog(base_catalog).contents();
            const NvdImportOptions opts{prefer == "v2" ? CvssPreference::PreferV2 : CvssPreference::PreferV3};
            for (const auto& f : feeds) {
                NvdImportResult r = import_nvd_feed(f, opts);
                for (const auto& w : r.warnings) err << "warning: " << f << ": " << w << "\n";
                for (auto& rec : r.records) {
                    auto& vs = contents.vulnerabilities;
                    auto it = std::find_if(vs.begin(), vs.end(), [&](const auto& v) { return v.cve_id == rec.cve_id; });
                    if (it != vs.end()) *it = std::move(rec);
                    else vs.push_back(std::move(rec));
                }
            }
            if (!snapshot_date.empty()) contents.snapshot_date = Date::parse(snapshot_date);
            if (!weakness_csv.empty()) {
                WeaknessMapping m = load_weakness_mapping_csv(weakness_csv);
                contents.weaknesses = std::move(m.weaknesses);
                contents.attack_patterns = std::move(m.attack_patterns);
            }
            if (!remediation_csv.empty()) contents.remediation = load_remediation_csv(remediation_csv);
            const Catalog c = Catalog::build(std::move(contents));
            for (const auto& d : c.dangling_references()) err << "warning: " << d << "\n";
            ctx.emit(catalog_to_json(c).dump(2) + "\n");
        };
    });

    // build
    std::string manifest_path, events_path;
    bool no_snapshots = false;
    auto* build = app.add_subcommand("build", "Build a timeline from a manifest, catalogs and events");
    build->add_option("--manifest", manifest_path, "Manifest JSON file")->required();
    build->add_option("--catalog", ctx.catalog_paths, "Catalog snapshot file(s)")->required();
    build->add_option("--events", events_path, "Lifecycle events JSON file");
    build->add_flag("--no-snapshots", no_snapshots, "Store only manifest and events");
    build->add_option("--out", ctx.out_path, "Write to this file instead of standard output");
    build->callback([&] {
        action = [&] {
            const CatalogHistory catalogs = load_catalogs(ctx.catalog_paths);
            std::vector<LifecycleEvent> events;
            if (!events_path.empty()) events = events_from_json(load_json(events_path), events_path);
            const Timeline tl = replay(load_manifest(manifest_path), std::move(events), catalogs);
            ctx.emit(timeline_to_json(tl, !no_snapshots).dump(2) + "\n");
        };
    });

    // event
    std::string ev_json, ev_file, ev_kind, ev_at, ev_asset, ev_cve, ev_cpe, ev_successor, ev_id, ev_name, ev_label,
        ev_sut;
    std::vector<std::string> ev_fixes, ev_depends, ev_required;
    bool ev_top = false;
    auto* event = app.add_subcommand("event", "Append a lifecycle event to a timeline file");
    event->add_option("--timeline", ctx.timeline_path, "Timeline JSON file, rewritten unless --out is given")
        ->required();
    event->add_option("--catalog", ctx.catalog_paths, "Catalog snapshot file(s)");
    event->add_option("--out", ctx.out_path, "Write the new timeline here");
    event->add_flag("--no-snapshots", no_snapshots, "Store only manifest and events");
    event->add_option("--json", ev_json, "Event as inline JSON");
    event->add_option("--file", ev_file, "Event JSON file");
    event->add_option("--kind", ev_kind, "asset_added|vuln_discovered|asset_updated|vuln_patched|asset_removed|checkpoint");
    event->add_option("--at", ev_at, "Event time (ISO 8601, or 'now')");
    event->add_option("--asset", ev_asset, "Asset id");
    event->add_option("--cve", ev_cve, "CVE id");
    event->add_option("--cpe", ev_cpe, "CPE 2.3 formatted string");
    event->add_option("--fix", ev_fixes, "CVE fixed by an update");
    event->add_option("--successor", ev_successor, "Id of the updated asset's new node");
    event->add_option("--id", ev_id, "Id of an added asset");
    event->add_option("--name", ev_name, "Display name of an added asset");
    event->add_option("--depends-on", ev_depends, "Dependency of an added asset");
    event->add_option("--required-by", ev_required, "Asset depending on an added asset (default: the root)");
    event->add_flag("--top-level", ev_top, "Mark an added asset as top level");
    event->add_option("--label", ev_label, "Checkpoint epoch label");
    event->add_option("--sut", ev_sut, "Checkpoint system-under-test CPE");
    event->callback([&] {
        action = [&] {
            json j;
            if (!ev_json.empty()) {
                try {
                    j = json::parse(ev_json);
                } catch (const json::parse_error& e) {
                    throw SchemaError(std::string("--json: not valid JSON: ") + e.what());
                }
            } else if (!ev_file.empty()) {
                j = load_json(ev_file);
            } else {
                if (ev_kind.empty()) throw CLI::RequiredError("--kind");
                if (ev_at.empty()) throw CLI::RequiredError("--at");
                j = json{{"kind", ev_kind}};
                if (ev_kind == "asset_added") {
                    json entry{{"id", ev_id}, {"cpe", ev_cpe}, {"depends_on", ev_depends}};
                    if (!ev_name.empty()) entry["name"] = ev_name;
                    if (ev_top) entry["top_level"] = true;
                    j["entry"] = std::move(entry);
                    j["required_by"] = ev_required;
                } else if (ev_kind == "vuln_discovered" || ev_kind == "vuln_patched") {
                    j["asset"] = ev_asset;
                    j["cve"] = ev_cve;
                } else if (ev_kind == "asset_updated") {
                    j["asset"] = ev_asset;
                    j["cpe"] = ev_cpe;
                    j["fixes"] = ev_fixes;
                    if (!ev_successor.empty()) j["successor"] = ev_successor;
                } else if (ev_kind == "asset_removed") {
                    j["asset"] = ev_asset;
                } else if (ev_kind == "checkpoint") {
                    j["label"] = ev_label;
                    if (!ev_sut.empty()) j["sut"] = ev_sut;
                }
            }
            if (!ev_at.empty()) j["at"] = ev_at == "now" ? Timestamp::now().to_string() : ev_at;
            const CatalogHistory catalogs = load_catalogs(ctx.catalog_paths);
            Timeline tl = load_timeline(ctx.timeline_path, &catalogs);
            tl.append(event_from_json(j), catalogs);
            const std::string text = timeline_to_json(tl, !no_snapshots).dump(2) + "\n";
            detail::write_text_file(ctx.out_path.empty() ? ctx.timeline_path : ctx.out_path, text);
            out << "appended event " << tl.events().size() << " (" << event_kind(tl.events().back()) << ")\n";
        };
    });

    // metrics
    bool lifecycle = false;
    auto* metrics = app.add_subcommand("metrics", "Metric tables for an epoch or the whole lifecycle");
    add_timeline_options(metrics, ctx);
    metrics->add_flag("--lifecycle", lifecycle, "All designated epochs plus lifecycle metrics");
    metrics->add_option("--format", ctx.format, "text|json");
    metrics->callback([&] {
        action = [&] {
            require_format(ctx.format, {"text", "json"});
            const Timeline tl = ctx.timeline();
            if (lifecycle) {
                const LifecycleReport r = compute_lifecycle(tl);
                ctx.emit(ctx.format == "json" ? lifecycle_to_json(r).dump(2) + "\n" : render_lifecycle_text(r));
                return;
            }
            MetricReport r = compute_metrics(ctx.select(tl));
            r.epoch = ctx.epoch_name(tl);
            ctx.emit(ctx.format == "json" ? metric_report_to_json(r).dump(2) + "\n" : render_metrics_text(r));
        };
    });

    // prioritize
    double min_cvss = 6.0, max_cvss = 10.0;
    bool global = false;
    std::size_t top = 0;
    auto* prio = app.add_subcommand("prioritize", "Vulnerabilities to patch first, grouped by asset");
    add_timeline_options(prio, ctx);
    prio->add_option("--min", min_cvss, "Lowest CVSS score kept")->capture_default_str();
    prio->add_option("--max", max_cvss, "Highest CVSS score kept")->capture_default_str();
    prio->add_flag("--global", global, "One list over all assets");
    prio->add_option("--top", top, "Keep at most N entries per group (0: all)");
    prio->add_option("--format", ctx.format, "text|json");
    prio->callback([&] {
        action = [&] {
            require_format(ctx.format, {"text", "json"});
            const Timeline tl = ctx.timeline();
            const Grouping grouping = global ? Grouping::Global : Grouping::ByAsset;
            const auto list = keep_top(prioritize(ctx.select(tl), min_cvss, max_cvss, grouping), top, grouping);
            ctx.emit(ctx.format == "json" ? prioritized_to_json(list).dump(2) + "\n" : render_prioritized(list));
        };
    });

    // cluster
    std::string criterion = "no-vulns";
    double threshold = 0.0;
    std::vector<std::string> scope;
    auto* cluster = app.add_subcommand("cluster", "Summarise groups of assets into cluster nodes");
    add_timeline_options(cluster, ctx);
    cluster->add_option("--criterion", criterion, "no-vulns|cvss-below")->capture_default_str();
    cluster->add_option("--threshold", threshold, "CVSS threshold for cvss-below");
    cluster->add_option("--scope", scope, "Only these assets may be grouped");
    cluster->add_option("--format", ctx.format, "text|json|dot");
    cluster->callback([&] {
        action = [&] {
            require_format(ctx.format, {"text", "json", "dot"});
            const Timeline tl = ctx.timeline();
            const ClusterCriterion crit = parse_criterion(criterion, threshold);
            std::optional<std::set<std::string>> sc;
            if (!scope.empty()) sc.emplace(scope.begin(), scope.end());
            const Edg g = cluster_by(ctx.select(tl), crit, sc);
            if (ctx.format == "json") return ctx.emit(edg_to_json(g).dump(2) + "\n");
            if (ctx.format == "dot") return ctx.emit(export_dot(g));
            std::string text;
            for (const auto& [id, c] : g.clusters) {
                text += id + ":";
                for (const auto& [aid, a] : c.assets) text += " " + aid;
                text += "\n";
            }
            ctx.emit(text.empty() ? "no clusters\n" : text);
        };
    });

    // impact
    std::string impact_cve;
    auto* impact = app.add_subcommand("impact", "Assets exposed to a vulnerability");
    add_timeline_options(impact, ctx);
    impact->add_option("--cve", impact_cve, "CVE id")->required();
    impact->add_option("--format", ctx.format, "text|json");
    impact->callback([&] {
        action = [&] {
            require_format(ctx.format, {"text", "json"});
            const Timeline tl = ctx.timeline();
            const auto set = impact_set(ctx.select(tl), impact_cve);
            if (ctx.format == "json") return ctx.emit(json(set).dump(2) + "\n");
            std::string text;
            for (const auto& a : set) text += a + "\n";
            ctx.emit(text);
        };
    });

    // export
    std::string export_cluster = "none", labels = "brief";
    bool hide_deprecated = false;
    auto* exp = app.add_subcommand("export", "Graphviz DOT rendering of a snapshot");
    add_timeline_options(exp, ctx);
    exp->add_option("--cluster", export_cluster, "none|no-vulns|cvss-below")->capture_default_str();
    exp->add_option("--threshold", threshold, "CVSS threshold for cvss-below");
    exp->add_flag("--hide-deprecated", hide_deprecated, "Render only the active graph");
    exp->add_option("--labels", labels, "brief|full")->check(CLI::IsMember({"brief", "full"}));
    exp->callback([&] {
        action = [&] {
            const Timeline tl = ctx.timeline();
            RenderOptions opts;
            if (export_cluster != "none") opts.cluster = parse_criterion(export_cluster, threshold);
            opts.show_deprecated = !hide_deprecated;
            opts.epoch = ctx.epoch_name(tl);
            opts.verbosity = labels == "full" ? LabelVerbosity::Full : LabelVerbosity::Brief;
            ctx.emit(export_dot(ctx.select(tl), opts));
        };
    });

    // report
    std::string mapping_csv;
    auto* report = app.add_subcommand("report", "Assessment report over all epochs");
    add_timeline_options(report, ctx, false);
    report->add_option("--kb", base_catalog, "Catalog supplying weaknesses, attack patterns and remediation");
    report->add_option("--weaknesses", weakness_csv, "Weakness/attack-pattern mapping CSV");
    report->add_option("--remediation", remediation_csv, "Remediation CSV");
    report->add_option("--mapping", mapping_csv, "ISA/IEC 62443 mapping CSV (default: bundled)");
    report->add_option("--min", min_cvss, "Lowest CVSS score in prioritization tables")->capture_default_str();
    report->add_option("--max", max_cvss, "Highest CVSS score in prioritization tables")->capture_default_str();
    report->add_option("--format", ctx.format, "markdown|json");
    report->callback([&] {
        action = [&] {
            if (ctx.format == "text") ctx.format = "markdown";
            require_format(ctx.format, {"markdown", "json"});
            const Timeline tl = ctx.timeline();
            CatalogContents kb;
            if (!base_catalog.empty()) kb = load_catalog(base_catalog).contents();
            kb.vulnerabilities.clear();
            if (!weakness_csv.empty()) {
                WeaknessMapping m = load_weakness_mapping_csv(weakness_csv);
                kb.weaknesses = std::move(m.weaknesses);
                kb.attack_patterns = std::move(m.attack_patterns);
            }
            if (!remediation_csv.empty()) kb.remediation = load_remediation_csv(remediation_csv);
            std::optional<Iec62443Mapping> mapping;
            if (!mapping_csv.empty()) mapping = Iec62443Mapping::load(mapping_csv);
            ReportOptions opts{min_cvss, max_cvss, mapping ? &*mapping : nullptr};
            ctx.emit(generate_report(tl, Catalog::build(std::move(kb)),
                                     ctx.format == "json" ? ReportFormat::Json : ReportFormat::Markdown, opts));
        };
    });

    // alerts
    std::vector<std::string> rule_texts;
    std::string rules_file;
    auto* alerts = app.add_subcommand("alerts", "Check alert rules; exit status 1 when any fires");
    add_timeline_options(alerts, ctx);
    alerts->add_option("--rule", rule_texts, "Rule such as 'cvss>=10.0' or 'M0>=1.0:critical'");
    alerts->add_option("--rules-file", rules_file, "File with one rule per line");
    alerts->add_option("--format", ctx.format, "text|json");
    alerts->callback([&] {
        action = [&] {
            require_format(ctx.format, {"text", "json"});
            const std::vector<AlertRule> rules = read_rules(rule_texts, rules_file);
            const Timeline tl = ctx.timeline();
            const auto firings = check_alerts(ctx.select(tl), rules, &tl);
            if (ctx.format == "json") {
                ctx.emit(alert_firings_to_json(firings).dump(2) + "\n");
            } else {
                std::string text;
                for (const auto& f : firings)
                    text += f.severity + "\t" + f.rule + "\t" + f.entity + "\t" + format_decimal(f.value) + "\n";
                text += std::to_string(firings.size()) + " alert(s)\n";
                ctx.emit(text);
            }
            if (!firings.empty()) status = kExitAlert;
        };
    });

    // diff
    std::string diff_from, diff_to;
    auto* diff = app.add_subcommand("diff", "Asset and vulnerability changes between two epochs");
    add_timeline_options(diff, ctx, false);
    diff->add_option("--from", diff_from, "Earlier epoch (default: the one before --to)");
    diff->add_option("--to", diff_to, "Later epoch (default: the last epoch)");
    diff->add_option("--format", ctx.format, "text|json");
    diff->callback([&] {
        action = [&] {
            require_format(ctx.format, {"text", "json"});
            const Timeline tl = ctx.timeline();
            const auto epochs = designated_epochs(tl);
            std::string to = diff_to.empty() ? epochs.back().first : diff_to;
            std::string from = diff_from;
            if (from.empty()) {
                auto it = std::find_if(epochs.begin(), epochs.end(), [&](const auto& e) { return e.first == to; });
                if (it == epochs.end()) throw UnknownEpoch("unknown epoch '" + to + "'");
                from = it == epochs.begin() ? to : std::prev(it)->first;
            }
            const SnapshotDiff d = diff_snapshots(tl.epoch(from), tl.epoch(to));
            ctx.emit(ctx.format == "json" ? diff_to_json(d, from, to).dump(2) + "\n" : render_diff(d, from, to));
        };
    });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return kExitError;
    }

    try {
        if (action) action();
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n";
        return kExitError;
    } catch (const Error& e) {
        err << "error: " << e.kind() << ": " << e.what() << "\n";
        return kExitError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitError;
    }
    return status;
}

}  // namespace edg
