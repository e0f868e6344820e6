"""``mobiflow`` command line: lag, cluster, metrics, geo, export, synth, replay.

Every command writes its reports as files plus a ``manifest.json`` listing
inputs (with digests), the full parameter set and a sha256 of each artifact;
``mobiflow replay`` re-runs a manifest and verifies the digests match.

Exit status: 0 when nothing was flagged, 1 when some region/week was
flagged (partial results are still written), 2 on fatal input errors.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from datetime import date
from pathlib import Path

from . import __version__, reports
from ._accel import BACKEND
from .centrality import CLOSENESS_FORMS, DEFAULT_TOP_K, centrality_report, relative_reduction
from .cluster import DEFAULT_RUNS, Partition, consensus_cluster
from .errors import MobiflowError, NonConvergenceError, UnknownWeekError
from .geo import cluster_distance_report
from .ingest import (
    FLOW_KINDS,
    LESS_THAN_ONE,
    WEEKLY,
    interpolate_weekly_to_daily,
    minmax_scale,
    parse_daily_mobility,
    parse_daily_trends,
    parse_date,
    parse_flow_records,
    parse_weekly_trends,
    sniff_cadence,
)
from .lagcorr import DEFAULT_MAX_SHIFT, best_lags, lag_summary
from .network import DEFAULT_THRESHOLD, build_week_network, dumps_geojson, edge_threshold_subgraph, to_dot, to_geojson
from .synth import fixture_files

log = logging.getLogger("mobiflow")

SEED_ENV = "MOBIFLOW_SEED"
MANIFEST = "manifest.json"


def sha256_bytes(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def sha256_file(path) -> str:
    return sha256_bytes(Path(path).read_bytes())


class Run:
    """Collects the artifacts of one command and writes its manifest."""

    def __init__(self, command, out_dir, inputs, params, argv):
        self.command = command
        self.out_dir = Path(out_dir)
        self.out_dir.mkdir(parents=True, exist_ok=True)
        self.inputs = {k: {"path": str(Path(p).resolve()), "sha256": sha256_file(p)} for k, p in inputs.items()}
        self.params = params
        self.argv = argv
        self.outputs = {}
        self.flags = {}

    def write(self, name, text):
        data = text.encode("utf-8")
        (self.out_dir / name).write_bytes(data)
        self.outputs[name] = sha256_bytes(data)

    def flag(self, key, message):
        self.flags[str(key)] = str(message)

    def finish(self, manifest_name=MANIFEST):
        manifest = {
            "tool": "mobiflow",
            "version": __version__,
            "backend": BACKEND,
            "command": self.command,
            "argv": self.argv,
            "inputs": self.inputs,
            "parameters": self.params,
            "outputs": dict(sorted(self.outputs.items())),
            "flagged": dict(sorted(self.flags.items())),
        }
        (self.out_dir / manifest_name).write_text(reports.dumps(manifest), encoding="utf-8")
        return 1 if self.flags else 0


def resolve_seed(value):
    if value is not None:
        return int(value)
    env = os.environ.get(SEED_ENV)
    return int(env) if env not in (None, "") else 0


def _read(path):
    return Path(path).read_text(encoding="utf-8")


def _abs(path):
    return str(Path(path).resolve())


# -- commands ----------------------------------------------------------------


def cmd_lag(mobility_csv, trends_csv, out_dir, max_shift=DEFAULT_MAX_SHIFT, less_than_one=LESS_THAN_ONE, workers=1):
    """Per-region delay between trends (awareness) and mobility."""
    params = {"max_shift": max_shift, "less_than_one": less_than_one}
    argv = ["lag", _abs(mobility_csv), _abs(trends_csv), "--max-shift", str(max_shift), "--less-than-one", repr(less_than_one)]
    run = Run("lag", out_dir, {"mobility": mobility_csv, "trends": trends_csv}, params, argv)
    mobility = parse_daily_mobility(_read(mobility_csv))
    trends_text = _read(trends_csv)
    if sniff_cadence(trends_text) == WEEKLY:
        trends = {k: interpolate_weekly_to_daily(s) for k, s in parse_weekly_trends(trends_text, less_than_one).items()}
    else:
        trends = parse_daily_trends(trends_text, less_than_one)
    pairs = {}
    for region, mob in sorted(mobility.items()):
        if region not in trends:
            run.flag(region, "region missing from trends input")
            continue
        try:
            pairs[region] = (minmax_scale(mob), minmax_scale(trends[region]))
        except MobiflowError as exc:
            run.flag(region, exc)
    results = []
    for region, res in best_lags(pairs, max_shift, workers=workers).items():
        if isinstance(res, Exception):
            run.flag(region, res)
        else:
            results.append(res)
    summary = lag_summary(results)
    run.write("lags.csv", reports.csv_text(reports.LAG_HEADER, reports.lag_rows(results)))
    run.write("lag_summary.csv", reports.csv_text(
        ("regions", "min_delay", "max_delay", "mean_delay"),
        [(summary["regions"], summary["min_delay"], summary["max_delay"], summary["mean_delay"])],
    ))
    run.write("lags.json", reports.dumps({
        "results": [r.to_dict() for r in results],
        "summary": summary,
        "flagged": dict(sorted(run.flags.items())),
        "unmatched_trends": sorted(set(trends) - set(mobility)),
        "parameters": params,
    }))
    status = run.finish()
    print(f"lag: {summary['regions']} regions, delay min {summary['min_delay']} max {summary['max_delay']} "
          f"mean {summary['mean_delay']}; {len(run.flags)} flagged")
    return status


def _weeks(table, week):
    if week in (None, "all"):
        return table.weeks
    d = parse_date(week) if isinstance(week, str) else week
    if d not in table.weeks:
        raise UnknownWeekError(f"week {d} not in table")
    return [d]


def cmd_cluster(flows_csv, out_dir, week=None, runs=DEFAULT_RUNS, base_seed=None, flow_kind="visitor", weighted=True, workers=1):
    """Consensus label propagation for one week or every week."""
    seed = resolve_seed(base_seed)
    week_arg = "all" if week in (None, "all") else str(parse_date(week) if isinstance(week, str) else week)
    params = {"week": week_arg, "runs": runs, "base_seed": seed, "flow_kind": flow_kind, "weighted": weighted}
    argv = ["cluster", _abs(flows_csv), "--week", week_arg, "--runs", str(runs), "--base-seed", str(seed),
            "--flow-kind", flow_kind] + ([] if weighted else ["--unweighted"])
    run = Run("cluster", out_dir, {"flows": flows_csv}, params, argv)
    table = parse_flow_records(_read(flows_csv))
    consensus = {}
    for w in _weeks(table, week):
        g = build_week_network(table, w, flow_kind)
        try:
            consensus[w] = consensus_cluster(g, runs, seed, weighted=weighted, workers=workers)
        except NonConvergenceError as exc:
            run.flag(w, exc)
    run.write("clusters.csv", reports.csv_text(reports.CLUSTER_HEADER, reports.cluster_rows(consensus)))
    header, rows = reports.cluster_table_wide(consensus)
    run.write("clusters_wide.csv", reports.csv_text(header, rows))
    run.write("consensus.json", reports.dumps(consensus_json_doc(consensus, params)))
    run.write("partitions.json", reports.dumps(reports.partitions_json(consensus)))
    run.write("partitions.geojson", dumps_geojson(reports.partition_geojson(
        {w: c.representative for w, c in consensus.items()}, table.centroids)))
    status = run.finish()
    modes = " ".join(str(c.mode) for _, c in sorted(consensus.items()))
    print(f"cluster: {len(consensus)} weeks, modes [{modes}]; {len(run.flags)} flagged")
    return status


def consensus_json_doc(consensus, params):
    return {"parameters": params, "weeks": reports.consensus_json(consensus)}


def cmd_metrics(flows_csv, before_week, after_week, out_dir, top_k=DEFAULT_TOP_K, flow_kind="visitor", closeness_form="centrality"):
    """Centrality for two weeks and the per-node reductions between them."""
    before, after = parse_date(str(before_week)), parse_date(str(after_week))
    params = {"before": str(before), "after": str(after), "top_k": top_k, "flow_kind": flow_kind,
              "closeness_form": closeness_form}
    argv = ["metrics", _abs(flows_csv), "--before", str(before), "--after", str(after), "--top-k", str(top_k),
            "--flow-kind", flow_kind, "--closeness-form", closeness_form]
    run = Run("metrics", out_dir, {"flows": flows_csv}, params, argv)
    table = parse_flow_records(_read(flows_csv))
    rep_b = centrality_report(build_week_network(table, before, flow_kind), closeness_form)
    rep_a = centrality_report(build_week_network(table, after, flow_kind), closeness_form)
    red = relative_reduction(rep_b, rep_a)
    for rep in (rep_b, rep_a):
        run.write(f"centrality_{rep.week_start}.csv",
                  reports.csv_text(reports.CENTRALITY_HEADER, reports.centrality_rows(rep)))
        run.write(f"centrality_{rep.week_start}.json", reports.dumps(reports.centrality_json(rep)))
    run.write("reduction.csv", reports.csv_text(reports.REDUCTION_HEADER, reports.reduction_rows(red)))
    run.write("reduction.json", reports.dumps(reports.reduction_json(red)))
    header, rows = reports.top_k_table(red, top_k)
    run.write("top_k.csv", reports.csv_text(header, rows))
    status = run.finish()
    means = ", ".join(f"{m} {v:.1f}%" if v == v and v is not None else f"{m} undefined" for m, v in red.means.items())
    print(f"metrics: {len(red.per_node)} regions {before} -> {after}; mean reductions {means}")
    return status


def load_partitions(path) -> dict:
    """``{week or None: Partition}`` from cluster output or a bare partition JSON."""
    data = json.loads(_read(path))
    if "weeks" in data:
        return {parse_date(w): Partition.from_dict(p) for w, p in data["weeks"].items()}
    if "assignment" in data:
        return {None: Partition.from_dict(data)}
    raise MobiflowError(f"{path}: expected a 'weeks' mapping or an 'assignment'")


def cmd_geo(flows_csv, partitions_json, out_dir):
    """Cluster-average vs country-average distances per week and cluster."""
    run = Run("geo", out_dir, {"flows": flows_csv, "partitions": partitions_json}, {},
              ["geo", _abs(flows_csv), _abs(partitions_json)])
    table = parse_flow_records(_read(flows_csv))
    parts = load_partitions(partitions_json)
    rows, docs, ok, medoids = [], [], {}, {}
    for week, partition in sorted(parts.items(), key=lambda kv: (kv[0] is not None, kv[0] or date.min)):
        try:
            rep = cluster_distance_report(partition, table.centroids, week)
        except MobiflowError as exc:
            run.flag(week, exc)
            continue
        rows += reports.geo_rows(rep)
        docs.append(reports.geo_json(rep))
        ok[week] = partition
        medoids[week] = {c.medoid for c in rep.per_cluster}
    run.write("geo.csv", reports.csv_text(reports.GEO_HEADER, rows))
    run.write("geo.json", reports.dumps({"weeks": docs}))
    run.write("geo.geojson", dumps_geojson(reports.partition_geojson(ok, table.centroids, medoids)))
    status = run.finish()
    print(f"geo: {len(docs)} weeks, {len(rows)} clusters; {len(run.flags)} flagged")
    return status


def cmd_export(flows_csv, week, out_path, threshold=DEFAULT_THRESHOLD, fmt="dot", flow_kind="visitor"):
    """Thresholded flow graph for one week as DOT or GeoJSON."""
    if fmt not in ("dot", "geojson"):
        raise MobiflowError(f"unknown export format {fmt!r}")
    out_path = Path(out_path)
    d = parse_date(str(week))
    params = {"week": str(d), "threshold": threshold, "format": fmt, "flow_kind": flow_kind}
    argv = ["export", _abs(flows_csv), "--week", str(d), "--threshold", repr(float(threshold)),
            "--format", fmt, "--flow-kind", flow_kind]
    run = Run("export", out_path.parent, {"flows": flows_csv}, params, argv)
    table = parse_flow_records(_read(flows_csv))
    g = edge_threshold_subgraph(build_week_network(table, d, flow_kind), threshold)
    text = to_dot(g) if fmt == "dot" else dumps_geojson(to_geojson(g))
    run.write(out_path.name, text)
    status = run.finish(out_path.name + ".manifest.json")
    print(f"export: {len(g.nodes)} nodes, {len(g.edges)} edges >= {threshold} -> {out_path}")
    return status


def cmd_synth(spec_json, out_dir):
    """Synthetic fixtures plus a ground-truth sidecar (truth.json)."""
    spec = json.loads(_read(spec_json))
    run = Run("synth", out_dir, {"spec": spec_json}, {"spec": spec}, ["synth", _abs(spec_json)])
    files, truth = fixture_files(spec)
    for name, text in sorted(files.items()):
        run.write(name, text)
    run.write("truth.json", reports.dumps(truth))
    status = run.finish()
    print(f"synth: wrote {', '.join(sorted(files))} + truth.json to {out_dir}")
    return status


def cmd_replay(manifest_path, out=None):
    """Re-run a manifest and compare artifact digests; 0 iff all match."""
    manifest_path = Path(manifest_path)
    manifest = json.loads(_read(manifest_path))
    argv = list(manifest["argv"])
    if manifest["command"] == "export":
        name = manifest_path.name[: -len(".manifest.json")]
        target = Path(out) / name if out else manifest_path.parent / name
        argv += ["--out", str(target)]
        out_dir, new_manifest = target.parent, target.name + ".manifest.json"
    else:
        out_dir = Path(out) if out else manifest_path.parent
        argv += ["--out-dir", str(out_dir)]
        new_manifest = MANIFEST
    code = main(argv)
    fresh = json.loads((out_dir / new_manifest).read_text(encoding="utf-8"))
    same = fresh["outputs"] == manifest["outputs"] and fresh["inputs"] == manifest["inputs"]
    print(f"replay: {'identical' if same else 'DIFFERENT'} outputs ({len(fresh['outputs'])} artifacts)")
    if not same:
        return 1
    return code


# -- argument parsing --------------------------------------------------------


def build_parser():
    p = argparse.ArgumentParser(prog="mobiflow", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"mobiflow {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("lag", help="delay between trends and mobility per region")
    s.add_argument("mobility_csv")
    s.add_argument("trends_csv")
    s.add_argument("--max-shift", type=int, default=DEFAULT_MAX_SHIFT)
    s.add_argument("--less-than-one", type=float, default=LESS_THAN_ONE, help="value for the '<1' token")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out-dir", required=True)

    s = sub.add_parser("cluster", help="consensus label propagation per week")
    s.add_argument("flows_csv")
    s.add_argument("--week", default="all", help="week_start date, or 'all'")
    s.add_argument("--runs", type=int, default=DEFAULT_RUNS)
    s.add_argument("--base-seed", type=int, default=None, help=f"default: ${SEED_ENV} or 0")
    s.add_argument("--flow-kind", choices=FLOW_KINDS, default="visitor")
    s.add_argument("--unweighted", action="store_true", help="count neighbour labels instead of summing weights")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("--out-dir", required=True)

    s = sub.add_parser("metrics", help="centrality reductions between two weeks")
    s.add_argument("flows_csv")
    s.add_argument("--before", required=True)
    s.add_argument("--after", required=True)
    s.add_argument("--top-k", type=int, default=DEFAULT_TOP_K)
    s.add_argument("--flow-kind", choices=FLOW_KINDS, default="visitor")
    s.add_argument("--closeness-form", choices=CLOSENESS_FORMS, default="centrality")
    s.add_argument("--out-dir", required=True)

    s = sub.add_parser("geo", help="cluster vs country average distances")
    s.add_argument("flows_csv")
    s.add_argument("partitions_json")
    s.add_argument("--out-dir", required=True)

    s = sub.add_parser("export", help="thresholded flow graph as DOT or GeoJSON")
    s.add_argument("flows_csv")
    s.add_argument("--week", required=True)
    s.add_argument("--threshold", type=float, default=DEFAULT_THRESHOLD)
    s.add_argument("--format", choices=("dot", "geojson"), default="dot")
    s.add_argument("--flow-kind", choices=FLOW_KINDS, default="visitor")
    s.add_argument("--out", required=True)

    s = sub.add_parser("synth", help="write synthetic fixtures from a JSON job")
    s.add_argument("spec_json")
    s.add_argument("--out-dir", required=True)

    s = sub.add_parser("replay", help="re-run a manifest and verify identical outputs")
    s.add_argument("manifest")
    s.add_argument("--out", default=None, help="directory for the re-run (default: alongside the manifest)")
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if args.command == "lag":
            return cmd_lag(args.mobility_csv, args.trends_csv, args.out_dir, args.max_shift,
                           args.less_than_one, args.workers)
        if args.command == "cluster":
            return cmd_cluster(args.flows_csv, args.out_dir, args.week, args.runs, args.base_seed,
                               args.flow_kind, not args.unweighted, args.workers)
        if args.command == "metrics":
            return cmd_metrics(args.flows_csv, args.before, args.after, args.out_dir, args.top_k,
                               args.flow_kind, args.closeness_form)
        if args.command == "geo":
            return cmd_geo(args.flows_csv, args.partitions_json, args.out_dir)
        if args.command == "export":
            if not args.threshold > 0:
                raise MobiflowError("threshold must be positive")
            return cmd_export(args.flows_csv, args.week, args.out, args.threshold, args.format, args.flow_kind)
        if args.command == "synth":
            return cmd_synth(args.spec_json, args.out_dir)
        if args.command == "replay":
            return cmd_replay(args.manifest, args.out)
    except (MobiflowError, OSError, ValueError) as exc:
        print(f"mobiflow {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
