#!/usr/bin/env python3
"""Generate the OpenPLC desk-scale fixture.

Writes per-release catalog snapshots, the V1 manifest and the lifecycle
events that turn V1 into V2 and V3. Per-asset, per-weakness vulnerability
counts follow the published metric tables. CVEs named in the published
prioritization tables keep their identifiers and scores; every other
vulnerability is a synthetic placeholder CVE-1999-9xxxx scored below 6.0.

Usage: make_openplc_fixture.py [--data DIR]
"""

import argparse
import csv
import json
import pathlib

EPOCHS = ["V1", "V2", "V3"]
AT = {"V1": "2020-01-13T09:00:00Z", "V2": "2020-01-14T09:00:00Z", "V3": "2020-01-15T09:00:00Z"}
SUT = {e: f"cpe:2.3:a:openplc_project:openplc:{v}:*:*:*:*:*:*:*" for e, v in zip(EPOCHS, ["1.0", "2.0", "3.0"])}


def cpe(vendor, product, version):
    return f"cpe:2.3:a:{vendor}:{product}:{version}:*:*:*:*:*:*:*"


# (vendor, product, version per release); None when the asset is absent.
PRODUCTS = {
    "libgcc_s": ("gnu", "gcc", {"V1": "4.8.4", "V2": "5.4.0", "V3": "7.5.0"}),
    "libc": ("gnu", "glibc", {"V1": "2.19", "V2": "2.23", "V3": "2.27"}),
    "libz": ("zlib", "zlib", {"V1": "1.2.8", "V2": "1.2.8"}),
    "libcares": ("c-ares_project", "c-ares", {"V1": "1.10.0", "V2": "1.14.0"}),
    "nodejs": ("nodejs", "node.js", {"V1": "4.2.6", "V2": "8.10.0"}),
    "libssl": ("openssl", "openssl", {"V1": "1.0.1f", "V2": "1.0.2g"}),
    "server_js": ("openplc_project", "openplc_webserver_js", {"V1": "1.0", "V2": "1.0"}),
    "oplc_starter": ("openplc_project", "openplc_starter", {e: "1.0" for e in EPOCHS}),
    "oplc_compiler": ("openplc_project", "openplc_compiler", {"V1": "1.0"}),
    "openplc": ("openplc_project", "openplc_runtime", {e: "1.0" for e in EPOCHS}),
    "libuv": ("libuv_project", "libuv", {"V1": "1.8.0", "V2": "1.8.0"}),
    "libhttp_parser": ("nodejs", "http-parser", {"V1": "2.5.0"}),
    "libstdcxx": ("gnu", "libstdc\\+\\+", {e: "6.0.19" for e in EPOCHS}),
    "libm": ("gnu", "libm", {e: "2.19" for e in EPOCHS}),
    "libpthread": ("gnu", "libpthread", {e: "2.19" for e in EPOCHS}),
    "libdl": ("gnu", "libdl", {e: "2.19" for e in EPOCHS}),
    "librt": ("gnu", "librt", {e: "2.19" for e in EPOCHS}),
    "oplc_hardware_layer": ("openplc_project", "openplc_hardware_layer", {e: "1.0" for e in EPOCHS}),
    "libutil": ("gnu", "libutil", {e: "2.19" for e in EPOCHS}),
    "matiec": ("openplc_project", "matiec", {"V2": "2.0", "V3": "2.0"}),
    "st_optimizer": ("openplc_project", "st_optimizer", {"V2": "2.0", "V3": "2.0"}),
    "glue_generator": ("openplc_project", "glue_generator", {"V2": "2.0", "V3": "2.0"}),
    "opendnp3": ("automatak", "opendnp3", {"V2": "2.1.0", "V3": "2.1.0"}),
    "libicuuc": ("icu-project", "international_components_for_unicode", {"V2": "55.1"}),
    "webserver_py": ("openplc_project", "openplc_webserver_py", {"V3": "3.0"}),
    "python": ("python", "python", {"V3": "2.7.15"}),
    "libmodbus": ("libmodbus", "libmodbus", {"V3": "3.1.4"}),
    "libsqlite3": ("sqlite", "sqlite", {"V3": "3.22.0"}),
}

# V1 manifest order fixes the report column order.
V1_ORDER = [
    "libgcc_s", "libc", "libz", "libcares", "nodejs", "libssl", "server_js", "oplc_starter", "oplc_compiler",
    "openplc", "libuv", "libhttp_parser", "libstdcxx", "libm", "libpthread", "libdl", "librt",
    "oplc_hardware_layer", "libutil",
]

DEPENDS = {
    "server_js": ["nodejs", "openplc", "oplc_starter", "libc"],
    "oplc_starter": ["openplc", "libc"],
    "openplc": ["oplc_hardware_layer", "oplc_compiler", "libstdcxx", "libm", "libpthread", "librt", "libdl",
                "libutil", "libgcc_s", "libc"],
    "oplc_compiler": ["libstdcxx", "libm", "libgcc_s", "libc"],
    "nodejs": ["libcares", "libssl", "libz", "libuv", "libhttp_parser", "libstdcxx", "libm", "libdl", "librt",
               "libpthread", "libgcc_s", "libc"],
    "libcares": ["libc"],
    "libssl": ["libz", "libdl", "libc"],
    "libz": ["libc"],
    "libuv": ["libpthread", "libdl", "librt", "libc"],
    "libhttp_parser": ["libc"],
    "libstdcxx": ["libm", "libgcc_s", "libc"],
    "libm": ["libc"],
    "libgcc_s": ["libc"],
    "libpthread": ["libc"],
    "libdl": ["libc"],
    "librt": ["libpthread", "libc"],
    "oplc_hardware_layer": ["libpthread", "libc"],
    "libutil": ["libc"],
    "libc": [],
}

# Named CVEs: weakness, score per release, exploit flag.
NAMED = {
    "CVE-2018-12886": ("CWE-331", {"V1": 7.5, "V2": 6.8, "V3": 6.8}),
    "CVE-2017-16997": ("CWE-426", {"V1": 9.3, "V2": 9.3}),
    "CVE-2014-9984": ("CWE-119", {"V1": 7.5}),
    "CVE-2014-4043": ("CWE-94", {"V1": 7.5}),
    "CVE-2015-5277": ("CWE-17", {"V1": 7.2}),
    "CVE-2015-7547": ("CWE-119", {"V1": 6.8}),
    "CVE-2014-0475": ("CWE-22", {"V1": 6.8}),
    "CVE-2017-18269": ("CWE-119", {"V2": 7.5, "V3": 7.5}),
    "CVE-2018-11236": ("CWE-119", {"V3": 7.5}),
    "CVE-2019-15847": ("CWE-787", {"V1": 7.5}),
    "CVE-2016-9840": ("CWE-189", {"V1": 6.8, "V2": 6.8}),
    "CVE-2016-9841": ("CWE-189", {"V1": 7.5, "V2": 7.5}),
    "CVE-2016-9842": ("CWE-189", {"V1": 6.8, "V2": 6.8}),
    "CVE-2016-9843": ("CWE-189", {"V1": 7.5, "V2": 7.5}),
    "CVE-2016-2842": ("CWE-119", {"V1": 10.0, "V2": 10.0}),
    "CVE-2016-0705": ("CWE-399", {"V1": 10.0, "V2": 10.0}),
    "CVE-2016-0799": ("CWE-20", {"V1": 10.0, "V2": 10.0}),
    "CVE-2016-6304": ("CWE-399", {"V1": 7.8, "V2": 7.8}),
    "CVE-2016-0798": ("CWE-399", {"V1": 7.8, "V2": 7.8}),
    "CVE-2014-8176": ("CWE-119", {"V1": 7.5}),
    "CVE-2016-2182": ("CWE-787", {"V1": 7.5, "V2": 7.5}),
    "CVE-2014-3512": ("CWE-119", {"V1": 7.5}),
    "CVE-2016-6303": ("CWE-787", {"V1": 7.5, "V2": 7.5}),
    "CVE-2015-0292": ("CWE-119", {"V1": 7.5}),
    "CVE-2016-2177": ("CWE-190", {"V1": 7.5, "V2": 7.5}),
    "CVE-2014-3567": ("CWE-399", {"V1": 7.1}),
    "CVE-2014-3513": ("CWE-399", {"V1": 7.1}),
    "CVE-2015-1791": ("CWE-362", {"V1": 6.8, "V2": 6.8}),
    "CVE-2012-2333": ("CWE-189", {"V1": 6.8}),
    "CVE-2015-0209": ("CWE-17", {"V1": 6.8, "V2": 6.8}),
    "CVE-2014-3509": ("CWE-362", {"V1": 6.8}),
    "CVE-2014-0195": ("CWE-119", {"V1": 6.8}),
    "CVE-2014-3505": ("CWE-399", {"V1": 5.0}),
    "CVE-2016-2108": ("CWE-119", {"V2": 10.0}),
    "CVE-2016-2109": ("CWE-399", {"V2": 7.8}),
    "CVE-2016-2106": ("CWE-189", {"V2": 6.5}),
    "CVE-2016-2176": ("CWE-119", {"V2": 6.4}),
}

# Breaks the 7.5 tie on libc in V3 the way the published table orders it.
EXPLOIT = {"CVE-2018-11236"}

OWNER = {
    "CVE-2018-12886": "libgcc_s", "CVE-2017-16997": "libc", "CVE-2014-9984": "libc", "CVE-2014-4043": "libc",
    "CVE-2015-5277": "libc", "CVE-2015-7547": "libc", "CVE-2014-0475": "libc", "CVE-2017-18269": "libc",
    "CVE-2018-11236": "libc", "CVE-2019-15847": "libcares",
}
for _cve in NAMED:
    if _cve.startswith("CVE-2016-98"):
        OWNER[_cve] = "libz"
    OWNER.setdefault(_cve, "libssl")

# Per-asset weakness multiplicities per release.
M5 = {
    "V1": {
        "libgcc_s": {"CWE-119": 1, "CWE-331": 1},
        "libc": {"CWE-17": 1, "CWE-22": 1, "CWE-94": 1, "CWE-119": 5, "CWE-426": 1},
        "libz": {"CWE-189": 4},
        "libcares": {"CWE-200": 1, "CWE-787": 1},
        "nodejs": {"CWE-19": 1, "CWE-20": 3, "CWE-113": 1, "CWE-200": 3, "CWE-787": 1},
        "libssl": {"CWE-17": 2, "CWE-20": 5, "CWE-119": 9, "CWE-125": 2, "CWE-189": 2, "CWE-190": 1,
                   "CWE-200": 5, "CWE-310": 12, "CWE-362": 4, "CWE-399": 8, "CWE-400": 1, "CWE-787": 2,
                   "CWE-NULL": 12},
    },
    "V2": {
        "libgcc_s": {"CWE-119": 1, "CWE-200": 1, "CWE-331": 1},
        "libc": {"CWE-119": 3, "CWE-399": 1, "CWE-426": 1},
        "libz": {"CWE-189": 4},
        "libicuuc": {"CWE-119": 1, "CWE-190": 1},
        "libssl": {"CWE-17": 3, "CWE-20": 3, "CWE-119": 6, "CWE-125": 3, "CWE-189": 4, "CWE-190": 1,
                   "CWE-200": 12, "CWE-295": 1, "CWE-310": 5, "CWE-311": 2, "CWE-320": 3, "CWE-362": 1,
                   "CWE-399": 6, "CWE-400": 1, "CWE-787": 2, "CWE-NULL": 10},
    },
    "V3": {
        "libgcc_s": {"CWE-119": 1, "CWE-331": 1},
        "libc": {"CWE-119": 3},
    },
}

SYNTHETIC_SCORES = [2.1, 4.3, 5.0, 3.5, 5.8, 4.0, 2.6, 5.5]


def allocate():
    """Per release and asset: list of (cve, cwe, score)."""
    synthetic = {}  # (asset, cwe) -> [(cve, score)]
    counter = [0]

    def fresh():
        counter[0] += 1
        return f"CVE-1999-9{counter[0]:04d}", SYNTHETIC_SCORES[(counter[0] - 1) % len(SYNTHETIC_SCORES)]

    out = {}
    for epoch in EPOCHS:
        out[epoch] = {}
        for asset, cwes in M5[epoch].items():
            rows = []
            for cwe, count in cwes.items():
                named = [c for c, (w, s) in NAMED.items() if OWNER[c] == asset and w == cwe and epoch in s]
                if len(named) > count:
                    raise SystemExit(f"{epoch}/{asset}/{cwe}: {len(named)} named CVEs exceed count {count}")
                rows += [(c, cwe, NAMED[c][1][epoch]) for c in named]
                pool = synthetic.setdefault((asset, cwe), [])
                while len(pool) < count - len(named):
                    pool.append(fresh())
                rows += [(c, cwe, s) for c, s in pool[: count - len(named)]]
            out[epoch][asset] = sorted(rows)
    return out


def load_kb(data):
    weaknesses, patterns, seen_patterns = [], [], set()
    with open(data / "kb" / "weaknesses.csv", newline="") as f:
        rows = list(csv.DictReader(f))
    by_id = {}
    for row in rows:
        w = by_id.get(row["cwe_id"])
        if w is None:
            w = {"cwe_id": row["cwe_id"], "name": row["cwe_name"], "description": row["cwe_description"],
                 "related_capec_ids": []}
            by_id[row["cwe_id"]] = w
            weaknesses.append(w)
        capec = row["capec_id"].strip()
        if capec:
            if capec not in w["related_capec_ids"]:
                w["related_capec_ids"].append(capec)
            if capec not in seen_patterns:
                seen_patterns.add(capec)
                patterns.append({"capec_id": capec, "name": row["capec_name"],
                                 "likelihood": row["likelihood"].replace(" ", "_"),
                                 "impact": row["impact"].replace(" ", "_")})
    remediation = []
    with open(data / "kb" / "remediation.csv", newline="") as f:
        for row in csv.DictReader(f):
            split = lambda s: [x.strip() for x in s.split(";") if x.strip()]
            remediation.append({"kind": row["kind"], "cwe_ids": split(row["cwe_ids"]),
                                "capec_ids": split(row["capec_ids"]), "text": row["text"].strip()})
    return weaknesses, patterns, remediation


def asset_cpe(asset, epoch):
    vendor, product, versions = PRODUCTS[asset]
    return cpe(vendor, product, versions[epoch])


def write_json(path, doc):
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--data", default=pathlib.Path(__file__).resolve().parents[2] / "data", type=pathlib.Path)
    args = parser.parse_args()
    data = args.data
    out_dir = data / "openplc"
    out_dir.mkdir(parents=True, exist_ok=True)

    alloc = allocate()
    weaknesses, patterns, remediation = load_kb(data)

    # Versions of an asset in which each CVE is present.
    presence = {}
    for epoch in EPOCHS:
        for asset, rows in alloc[epoch].items():
            for cve, _, _ in rows:
                presence.setdefault(cve, []).append(asset_cpe(asset, epoch))

    for epoch in EPOCHS:
        vulns = []
        for asset, rows in alloc[epoch].items():
            for cve, cwe, score in rows:
                affected = []
                for c in presence[cve]:
                    if {"cpe": c} not in affected:
                        affected.append({"cpe": c})
                vulns.append({
                    "cve_id": cve,
                    "cvss": {"score": score, "scheme": "v2"},
                    "cwe_ids": [cwe],
                    "affected": affected,
                    "exploit_available": cve in EXPLOIT,
                    "published": cve[4:8] + "-01-01",
                })
        vulns.sort(key=lambda v: v["cve_id"])
        write_json(out_dir / f"catalog_{epoch.lower()}.json", {
            "schema_version": 1,
            "snapshot_date": AT[epoch][:10],
            "vulnerabilities": vulns,
            "weaknesses": weaknesses,
            "attack_patterns": patterns,
            "remediation": remediation,
        })

    def entry(asset, epoch, depends_on, top_level=False):
        e = {"id": asset, "cpe": asset_cpe(asset, epoch), "depends_on": depends_on}
        if top_level:
            e["top_level"] = True
        return e

    manifest = {
        "sut": SUT["V1"],
        "epoch": "V1",
        "at": AT["V1"],
        "assets": [entry(a, "V1", DEPENDS[a], a == "server_js") for a in V1_ORDER],
    }
    write_json(out_dir / "manifest.json", manifest)

    def active_cves(epoch, asset):
        return {c for c, _, _ in alloc[epoch].get(asset, [])}

    events = []
    current = {a: a for a in V1_ORDER}  # lineage -> current node id

    def update(epoch, asset, prev):
        events.append({
            "at": AT[epoch], "kind": "asset_updated", "asset": current[asset],
            "cpe": asset_cpe(asset, epoch),
            "fixes": sorted(active_cves(prev, asset) - active_cves(epoch, asset)),
        })
        base = asset
        revision = 2 if current[asset] == asset else int(current[asset].split("@")[1]) + 1
        current[asset] = f"{base}@{revision}"

    def add(epoch, asset, depends_on, required_by):
        events.append({"at": AT[epoch], "kind": "asset_added",
                       "entry": entry(asset, epoch, [current[d] for d in depends_on]),
                       "required_by": [current[r] for r in required_by]})
        current[asset] = asset

    def remove(epoch, asset):
        events.append({"at": AT[epoch], "kind": "asset_removed", "asset": current[asset]})

    # V2
    events.append({"at": AT["V2"], "kind": "checkpoint", "label": "V2", "sut": SUT["V2"]})
    remove("V2", "oplc_compiler")
    remove("V2", "libhttp_parser")
    for a in ["libgcc_s", "libc", "libcares", "nodejs", "libssl"]:
        update("V2", a, "V1")
    add("V2", "matiec", ["libstdcxx", "libc"], ["openplc"])
    add("V2", "st_optimizer", ["libstdcxx", "libc"], ["openplc"])
    add("V2", "glue_generator", ["libstdcxx", "libc"], ["openplc"])
    add("V2", "opendnp3", ["libstdcxx", "libpthread", "libc"], ["openplc"])
    add("V2", "libicuuc", ["libstdcxx", "libc"], ["nodejs"])

    # V3
    events.append({"at": AT["V3"], "kind": "checkpoint", "label": "V3", "sut": SUT["V3"]})
    for a in ["libgcc_s", "libc"]:
        update("V3", a, "V2")
    add("V3", "libsqlite3", ["libpthread", "libdl", "libc"], [])
    add("V3", "python", ["libsqlite3", "libm", "libpthread", "libdl", "libutil", "libc"], [])
    add("V3", "webserver_py", ["python", "openplc", "oplc_starter", "libc"], [])
    add("V3", "libmodbus", ["libc"], ["openplc"])
    for a in ["server_js", "nodejs", "libcares", "libssl", "libz", "libuv", "libicuuc"]:
        remove("V3", a)

    for i, e in enumerate(events, start=1):
        e["seq"] = i
    write_json(out_dir / "events.json", {"events": events})


if __name__ == "__main__":
    main()
