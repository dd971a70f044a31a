"""rmltq: build the groups, search for sharply transitive sets, classify, certify.

Exit status: 0 when every requested check matches its expected value,
1 on a mismatch or missing input, 2 on a usage error, 3 when a search
budget runs out.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import time
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from . import catalog, classify, obstruct, stset
from .lingroup import normalizer_in_gl

log = logging.getLogger("rmltq")

EXIT_OK, EXIT_MISMATCH, EXIT_USAGE, EXIT_BUDGET = 0, 1, 2, 3

OBSTRUCTION_TARGETS = ("4.k-360", "4.k-720", "4.e-240", "4.e-480", "4.m")
E32_FAMILY = "4.j"


@dataclass
class RunConfig:
    cases: list[catalog.CaseDescriptor]
    out: Path
    threads: int = 1
    cache: Path | None = None
    budget_nodes: int | None = None
    fmt: str = "csv"


def load_expectations() -> dict:
    text = resources.files("rmltq").joinpath("data/expectations.json").read_text()
    return json.loads(text)


class _Checks:
    """Collects computed-vs-expected comparisons for one command."""

    def __init__(self):
        self.rows: list[dict] = []

    def add(self, case_id: str, item: str, computed, expected) -> bool:
        ok = expected is None or computed == expected
        self.rows.append({"case_id": case_id, "check": item, "computed": computed,
                          "expected": expected, "status": "ok" if ok else "MISMATCH"})
        if not ok:
            log.error("%s %s: computed %r, expected %r", case_id, item, computed, expected)
        return ok

    def skip(self, case_id: str, item: str, reason: str):
        self.rows.append({"case_id": case_id, "check": item, "computed": None,
                          "expected": None, "status": "skipped", "reason": reason})

    @property
    def failed(self) -> bool:
        return any(r["status"] == "MISMATCH" for r in self.rows)

    def print(self):
        for r in self.rows:
            if r["status"] == "skipped":
                print(f"skipped  {r['case_id']:<9} {r['check']:<28} {r['reason']}")
            else:
                print(f"{r['status']:<8} {r['case_id']:<9} {r['check']:<28} computed={r['computed']} "
                      f"expected={r['expected']}")


def _write_rows(path: Path, rows: list[dict], fmt: str, key: str = "case_id") -> Path:
    """Write rows, merging with rows already present for other keys."""
    path = path.with_suffix("." + fmt)
    old: list[dict] = []
    if path.exists():
        if fmt == "json":
            old = json.loads(path.read_text())
        else:
            with open(path, newline="") as fh:
                old = list(csv.DictReader(fh))
    fresh = {str(r[key]) for r in rows}
    merged = [r for r in old if str(r[key]) not in fresh] + rows
    merged.sort(key=lambda r: str(r[key]))
    path.parent.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        path.write_text(json.dumps(merged, indent=1, default=str))
    else:
        fields = list(rows[0].keys()) if rows else list(old[0].keys())
        with open(path, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            w.writeheader()
            w.writerows(merged)
    return path


def _built(c: catalog.CaseDescriptor, cfg: RunConfig) -> catalog.BuiltCase:
    return catalog.cached_build(c, cfg.cache)


# ---------------------------------------------------------------------------
# commands

def cmd_catalog(cfg: RunConfig) -> int:
    exp = load_expectations()["catalog"]
    checks = _Checks()
    rows = []
    t0 = time.time()
    for c in cfg.cases:
        t = time.time()
        try:
            b = _built(c, cfg)
        except catalog.CaseUnavailable as e:
            checks.skip(c.case_id, "order", str(e))
            continue
        rep = catalog.verify_case(b.group, c, b.g0)
        checks.add(c.case_id, "order", b.group.order, exp.get(c.case_id))
        checks.add(c.case_id, "transitive", rep["transitive"], True)
        rows.append({"case_id": c.case_id, "p": c.p, "d": c.d, "order": b.group.order,
                     "g0": c.g0_name, "transitive": rep["transitive"], "ok": rep["ok"],
                     "seconds": round(time.time() - t, 2), "notes": "; ".join(b.notes)})
    if rows:
        _write_rows(cfg.out / "catalog", rows, cfg.fmt)
    checks.print()
    print(f"catalog: {len(rows)} cases in {time.time() - t0:.1f}s")
    return EXIT_MISMATCH if checks.failed else EXIT_OK


def _clique_path(cfg: RunConfig, case_id: str) -> Path:
    return cfg.out / "cliques" / f"{case_id}.jsonl"


def cmd_search(cfg: RunConfig) -> int:
    exp = load_expectations()
    checks = _Checks()
    rows = []
    for c in cfg.cases:
        if c.family == E32_FAMILY:
            checks.skip(c.case_id, "clique_count", "direct 79-clique search is replaced by `obstruct --case 4.j`")
            continue
        try:
            b = _built(c, cfg)
        except catalog.CaseUnavailable as e:
            checks.skip(c.case_id, "clique_count", str(e))
            continue
        t = time.time()
        graph = stset.build_graph(b.group)
        ckpt = cfg.cache / "search" / c.case_id if cfg.cache else None
        try:
            cliques = stset.enumerate_cliques(graph, b.group.n - 1, workers=cfg.threads,
                                              checkpoint_dir=ckpt, node_budget=cfg.budget_nodes)
        except stset.SearchBudgetExceeded as e:
            print(f"{c.case_id}: {e}", file=sys.stderr)
            return EXIT_BUDGET
        path = _clique_path(cfg, c.case_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        stset.write_clique_store(path, c.case_id, graph, cliques)
        expected = exp["table3"].get(c.case_id, {}).get("cliques")
        if expected is None and c.case_id in exp["empty_search"]:
            expected = 0
        checks.add(c.case_id, "clique_count", len(cliques), expected)
        rows.append({"case_id": c.case_id, "graph_vertices": graph.num_vertices,
                     "clique_count": len(cliques), "seconds": round(time.time() - t, 2)})
    if rows:
        _write_rows(cfg.out / "search_summary", rows, "csv")
    checks.print()
    return EXIT_MISMATCH if checks.failed else EXIT_OK


def classify_case(c: catalog.CaseDescriptor, cfg: RunConfig):
    """(record, collision report) for a case whose clique file exists."""
    path = _clique_path(cfg, c.case_id)
    if not path.exists():
        raise FileNotFoundError(f"{path} missing; run `search --case {c.case_id}` first")
    b = _built(c, cfg)
    g = b.group
    n = normalizer_in_gl(g)
    graph = stset.build_graph(g)
    cliques = stset.read_clique_store(path, graph)
    spreads = classify.cliques_to_spreads(graph, cliques)
    rec = classify.classify(c.case_id, spreads, g, n)
    collisions = classify.collision_report(rec, spreads, g, n) if len(spreads) else []
    return rec, collisions


def cmd_classify(cfg: RunConfig) -> int:
    exp = load_expectations()
    checks = _Checks()
    rows, autos = [], []
    for c in cfg.cases:
        if not c.in_table3:
            continue
        try:
            rec, collisions = classify_case(c, cfg)
        except FileNotFoundError as e:
            print(f"error: {e}", file=sys.stderr)
            return EXIT_MISMATCH
        row = rec.row()
        rows.append(row)
        want = exp["table3"].get(c.case_id, {})
        for k in ("cliques", "parastrophy_classes", "proper_G_classes", "distinct_fingerprints"):
            checks.add(c.case_id, k, row[k], want.get(k))
        a_exp = exp["autotopism"].get(c.case_id)
        if collisions or a_exp:
            checks.add(c.case_id, "colliding_pairs", len(collisions), a_exp and a_exp["colliding_pairs"])
        for col in collisions:
            autos.append(col)
            if not a_exp:
                continue
            for m in col["members"]:
                checks.add(c.case_id, "autotopism_order", m["order"], a_exp["order"])
                checks.add(c.case_id, "infinite_orbits", m["orbit_profile"], a_exp["infinite_orbits"])
                if "identified" in a_exp:
                    checks.add(c.case_id, "identified", m["identified"], a_exp["identified"])
            if "verdict" in a_exp:
                checks.add(c.case_id, "iso_verdict", col["members"][0]["iso_verdict"], a_exp["verdict"])
    if rows:
        _write_rows(cfg.out / "classification", rows, cfg.fmt)
    if autos:
        path = cfg.out / "autotopisms.json"
        old = json.loads(path.read_text()) if path.exists() else []
        fresh = {a["members"][0]["case_id"] for a in autos}
        path.write_text(json.dumps([a for a in old if a["members"][0]["case_id"] not in fresh] + autos, indent=1))
    checks.print()
    return EXIT_MISMATCH if checks.failed else EXIT_OK


def cmd_obstruct(cfg: RunConfig) -> int:
    exp = load_expectations()
    checks = _Checks()
    certs, verdicts = [], []
    ran_e32 = False
    for c in cfg.cases:
        if c.family == E32_FAMILY:
            if ran_e32:
                continue
            ran_e32 = True
            tower = [_built(x, cfg).group for x in catalog.expand_case_selection([E32_FAMILY])]
            L = max(tower, key=lambda grp: grp.order)
            try:
                report = obstruct.e32_pipeline(L, tower, expected=exp["e32"], workers=cfg.threads,
                                               node_budget=cfg.budget_nodes)
            except obstruct.CheckpointMismatch as e:
                print(f"4.j pipeline: {e}", file=sys.stderr)
                return EXIT_MISMATCH
            except stset.SearchBudgetExceeded as e:
                print(f"4.j pipeline: {e}", file=sys.stderr)
                return EXIT_BUDGET
            (cfg.out / "e32_pipeline.json").parent.mkdir(parents=True, exist_ok=True)
            (cfg.out / "e32_pipeline.json").write_text(json.dumps(report.to_json(), indent=1))
            for k, v in exp["e32"].items():
                checks.add("4.j", k, report.checkpoints.get(k), v)
            checks.add("4.j", "verdict", report.verdict, "no 79-clique")
            verdicts.append({"case_id": "4.j", "method": "block-clique pipeline", "verdict": report.verdict})
            continue
        if c.case_id not in OBSTRUCTION_TARGETS:
            checks.skip(c.case_id, "certificate", "not an obstruction target")
            continue
        want = exp["obstruct"][c.case_id]
        try:
            variants = catalog.case_variants(c)
        except catalog.CaseUnavailable as e:
            checks.skip(c.case_id, "certificate", str(e))
            verdicts.append({"case_id": c.case_id, "method": "intersection certificate", "verdict": str(e)})
            continue
        for k, g in enumerate(variants):
            cert = obstruct.find_obstruction(g, want["q"], want["strategy"], case_id=c.case_id)
            certs.append(dict(cert.to_json(), variant=k))
            label = f"{c.case_id}#{k}"
            checks.add(label, "hypothesis_holds", cert.hypothesis_holds, True)
            checks.add(label, "intersection_sizes", list(cert.intersection_sizes), want["sizes"])
            checks.add(label, "orbit_length", len(cert.orbit_A), want["orbit_length"])
        ok = all(x["hypothesis_holds"] for x in certs if x["case_id"] == c.case_id)
        verdicts.append({"case_id": c.case_id, "method": "intersection certificate",
                         "verdict": "no sharply transitive set" if ok else "no certificate"})
    if certs:
        path = cfg.out / "certificates.json"
        path.parent.mkdir(parents=True, exist_ok=True)
        old = json.loads(path.read_text()) if path.exists() else []
        fresh = {x["case_id"] for x in certs}
        path.write_text(json.dumps([x for x in old if x["case_id"] not in fresh] + certs, indent=1))
    if verdicts:
        _write_rows(cfg.out / "obstruct_summary", verdicts, cfg.fmt)
    checks.print()
    return EXIT_MISMATCH if checks.failed else EXIT_OK


def cmd_report(cfg: RunConfig) -> int:
    """Table 3 and the non-existence verdicts, compared against expectations."""
    exp = load_expectations()
    checks = _Checks()
    cls_path = cfg.out / "classification.csv"
    cls_json = cfg.out / "classification.json"
    rows = []
    if cls_path.exists():
        with open(cls_path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    elif cls_json.exists():
        rows = json.loads(cls_json.read_text())
    by_id = {r["case_id"]: r for r in rows}
    wanted = {c.case_id for c in cfg.cases}
    for cid, want in exp["table3"].items():
        if cid not in wanted:
            continue
        r = by_id.get(cid)
        for k, v in want.items():
            checks.add(cid, k, None if r is None else int(r[k]), v)
    summary = cfg.out / f"obstruct_summary.{cfg.fmt}"
    if summary.exists():
        vs = json.loads(summary.read_text()) if cfg.fmt == "json" else list(csv.DictReader(open(summary)))
        for v in vs:
            if v["case_id"] in wanted or v["case_id"] == "4.j" and any(x.startswith("4.j") for x in wanted):
                expected = "no 79-clique" if v["case_id"] == "4.j" else "no sharply transitive set"
                if v["verdict"].startswith("4.m: skipped"):
                    checks.skip(v["case_id"], "verdict", v["verdict"])
                else:
                    checks.add(v["case_id"], "verdict", v["verdict"], expected)
    if cfg.fmt == "json":
        print(json.dumps(checks.rows, indent=1, default=str))
    else:
        w = csv.DictWriter(sys.stdout, fieldnames=["case_id", "check", "computed", "expected", "status", "reason"])
        w.writeheader()
        w.writerows(checks.rows)
    return EXIT_MISMATCH if checks.failed else EXIT_OK


COMMANDS = {
    "catalog": cmd_catalog,
    "search": cmd_search,
    "classify": cmd_classify,
    "obstruct": cmd_obstruct,
    "report": cmd_report,
}


def _positive(text: str) -> int:
    v = int(text)
    if v <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmltq", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__.splitlines()[0] if fn.__doc__ else name)
        sp.add_argument("--case", nargs="+", default=["all"],
                        help="case ids (4.b), families (4.e) or 'all'")
        sp.add_argument("--out", type=Path, default=Path("out"))
        sp.add_argument("--threads", type=_positive, default=1)
        sp.add_argument("--cache", type=Path, default=None)
        sp.add_argument("--budget-nodes", type=_positive, default=None)
        sp.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cases = catalog.expand_case_selection(args.case)
    except KeyError as e:
        parser.error(str(e))
    if not cases:
        parser.error("empty case list")
    cfg = RunConfig(cases, args.out, args.threads, args.cache, args.budget_nodes, args.format)
    cfg.out.mkdir(parents=True, exist_ok=True)
    return COMMANDS[args.command](cfg)


if __name__ == "__main__":
    sys.exit(main())
