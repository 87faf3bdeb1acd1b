"""Command-line front end.

Subcommands: ``solve`` (greedy on an unweighted instance), ``solve-weighted``
(generalized greedy plus rounding), ``incremental`` (per-step served-pairs
series vs. the exact oracle), ``gen`` (scenario generation) and ``bench``
(batch runs emitting a metrics CSV).

Exit codes are a stable contract: 0 success, 2 infeasible, 3 parse error,
4 oracle too large. On failure a machine-readable error JSON is printed.
Every emitted assignment is re-validated against the instance invariants
before the report is written.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import greedy as greedy_mod
from . import ingest, oracle, weighted
from .exceptions import (
    DomainError,
    GeoUnavailable,
    Infeasible,
    InfeasiblePair,
    ParseError,
    PlacementError,
    RoundingFailed,
    Stalled,
    TooLarge,
)
from .instance import PlacementInstance, build_feasibility, check_total_capacity, is_feasible
from .netgraph import METRICS

EXIT_OK = 0
EXIT_INFEASIBLE = 2
EXIT_PARSE = 3
EXIT_TOO_LARGE = 4

REPORT_VERSION = 1

BENCH_COLUMNS = [
    "topology", "kind", "nodes", "edges", "p", "stretch", "replication", "seed",
    "algorithm", "status", "middlebox_count", "assigned", "total",
    "oracle_optimum", "approximation_ratio", "relative_difference_max",
    "max_relative_load", "capacity_violations", "wall_time_s", "error",
]

INCREMENTAL_COLUMNS = ["n", "phi_greedy", "phi_opt", "relative_difference"]

TRACE_COLUMNS = ["iteration", "chosen", "gain", "phi_after"]


# ---------------------------------------------------------------------------
# helpers


def _write_text(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _load_unweighted(args) -> tuple[PlacementInstance, str]:
    """Instance from JSON or GraphML+params; returns (instance, digest)."""
    raw = Path(args.instance).read_text()
    if raw.lstrip().startswith("<"):
        net = ingest.parse_graphml(raw)
        cfg = ingest.ScenarioConfig(
            topology=args.instance, p=args.p, stretch=args.stretch or 1.5,
            capacity=args.capacity, seed=args.seed, replication=args.replication,
            metric=args.metric or "geo",
        )
        inst = ingest.generate_unweighted_scenario(cfg, net)
        text = ingest.instance_to_json(inst)
        return inst, ingest.instance_digest(text)
    inst = ingest.instance_from_json(raw)
    if not isinstance(inst, PlacementInstance):
        raise ParseError("expected an unweighted instance document")
    overrides = {}
    if args.stretch is not None:
        overrides["stretch"] = args.stretch
    if args.capacity is not None:
        overrides["capacity"] = args.capacity
    if args.metric is not None and args.metric != inst.metric:
        overrides["metric"] = args.metric
        overrides["dist"] = ingest.compute_apsp(inst.net, args.metric)
    if overrides:
        fields = dict(
            net=inst.net, dist=inst.dist, pairs=inst.pairs, candidates=inst.candidates,
            capacity=inst.capacity, stretch=inst.stretch, route_limit=inst.route_limit,
            metric=inst.metric,
        )
        fields.update(overrides)
        inst = PlacementInstance(**fields)
    return inst, ingest.instance_digest(ingest.instance_to_json(inst))


def _validate_solution(inst: PlacementInstance, engine) -> None:
    """Independent re-check of stretch, capacity, and load bookkeeping."""
    loads: dict[int, int] = {m: 0 for m in engine.load}
    for i, m in enumerate(engine.mu):
        if m is None:
            continue
        if not is_feasible(m, inst.pairs[i], inst):
            raise PlacementError(f"validation: pair {inst.pairs[i]} infeasible at {m}")
        loads[m] = loads.get(m, 0) + 1
    for m, count in loads.items():
        if count > inst.capacity:
            raise PlacementError(f"validation: middlebox {m} load {count} > capacity")
        if count != engine.load[m]:
            raise PlacementError(f"validation: load bookkeeping mismatch at {m}")


def _csv_text(columns, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow(["" if v is None else v for v in row])
    return buf.getvalue()


def _relative_difference_series(inst, fs, trace, limit) -> list[float]:
    """(phi_opt - phi_greedy) / phi_opt per deployment step of the trace."""
    series = []
    for step in trace.steps:
        opt = oracle.max_assignment_for_n(inst, fs, step.iteration + 1, limit=limit).value
        series.append((opt - step.phi_after) / opt if opt else 0.0)
    return series


# ---------------------------------------------------------------------------
# solve


def cmd_solve(args) -> int:
    t0 = time.perf_counter()
    inst, digest = _load_unweighted(args)
    fs = build_feasibility(inst)
    check_total_capacity(inst, fs)
    trace = greedy_mod.greedy_place(inst, fs, threads=args.threads)
    _validate_solution(inst, trace.engine)
    if not trace.complete:
        raise PlacementError("validation: solve finished with unserved pairs")
    oracle_opt = ratio = rel_series = None
    if args.oracle:
        result = oracle.exact_min_middleboxes(inst, fs, limit=args.oracle_limit)
        oracle_opt = result.value
        ratio = len(trace.steps) / result.value if result.value else None
        rel_series = _relative_difference_series(inst, fs, trace, args.oracle_limit)
    report = {
        "report_version": REPORT_VERSION,
        "algorithm": "greedy",
        "instance_digest": digest,
        "metric": inst.metric,
        "stretch": inst.stretch,
        "route_limit": inst.route_limit,
        "capacity": inst.capacity,
        "nodes": inst.net.num_nodes,
        "edges": inst.net.num_edges,
        "pairs": inst.num_pairs,
        "candidates": len(inst.candidates),
        "middlebox_count": len(trace.steps),
        "middleboxes": trace.middleboxes,
        "assigned_pairs": trace.engine.num_assigned,
        "assignment": [
            [inst.pairs[i].s, inst.pairs[i].t, m]
            for i, m in enumerate(trace.engine.mu) if m is not None
        ],
        "trace": [
            {"iteration": s.iteration, "chosen": s.chosen, "gain": s.gain,
             "phi_after": s.phi_after}
            for s in trace.steps
        ],
        "oracle_optimum": oracle_opt,
        "approximation_ratio": ratio,
        "relative_difference": rel_series,
        "validated": True,
        "wall_time_s": round(time.perf_counter() - t0, 6),
    }
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    if args.trace_csv:
        rows = [[s.iteration, s.chosen, s.gain, s.phi_after] for s in trace.steps]
        _write_text(args.trace_csv, _csv_text(TRACE_COLUMNS, rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# solve-weighted


def cmd_solve_weighted(args) -> int:
    t0 = time.perf_counter()
    raw = Path(args.instance).read_text()
    winst = ingest.instance_from_json(raw)
    if not isinstance(winst, weighted.WeightedInstance):
        raise ParseError("expected a weighted instance document")
    digest = ingest.instance_digest(ingest.instance_to_json(winst))
    prep, chosen, frac, rounded = weighted.solve_weighted(winst)
    rfs = weighted.build_request_feasibility(
        winst.requests, winst.dist, winst.candidates,
        stretch=winst.stretch, route_limit=winst.route_limit,
    )
    for j, u in rounded.assignment.items():
        if u not in rfs.candidates_of[j]:
            raise PlacementError(f"validation: request {j} infeasible at {u}")
    kappa = float(prep.kappa)
    rel_load = {str(u): float(load) / kappa for u, load in sorted(rounded.load.items())}
    violations = sum(1 for v in rel_load.values() if v > 1.0)
    oracle_opt = ratio = None
    if args.oracle:
        rfs_kept = weighted.RequestFeasibility(
            universe=rfs.universe, candidates_of=rfs.candidates_of,
        )
        result = oracle.exact_weighted_min_middleboxes(
            winst.requests, rfs_kept, winst.capacity, limit=args.oracle_limit,
        )
        oracle_opt = result.value
        ratio = len(chosen) / result.value if result.value else None
    report = {
        "report_version": REPORT_VERSION,
        "algorithm": "generalized_greedy",
        "instance_digest": digest,
        "metric": winst.metric,
        "stretch": winst.stretch,
        "route_limit": winst.route_limit,
        "capacity": kappa,
        "nodes": winst.net.num_nodes,
        "edges": winst.net.num_edges,
        "requests": len(winst.requests),
        "kept": list(prep.kept),
        "rejected": list(prep.rejected),
        "middlebox_count": len(chosen),
        "middleboxes": sorted(chosen),
        "fractional_objective": frac.objective_float,
        "assignment": [[j, rounded.assignment[j]] for j in sorted(rounded.assignment)],
        "relative_load": rel_load,
        "max_relative_load": max(rel_load.values(), default=0.0),
        "capacity_violations": violations,
        "oracle_optimum": oracle_opt,
        "approximation_ratio": ratio,
        "validated": True,
        "wall_time_s": round(time.perf_counter() - t0, 6),
    }
    _write_text(args.out, json.dumps(report, indent=2) + "\n")
    return EXIT_OK


# ---------------------------------------------------------------------------
# incremental


def cmd_incremental(args) -> int:
    inst, _ = _load_unweighted(args)
    fs = build_feasibility(inst)
    check_total_capacity(inst, fs)
    trace = greedy_mod.greedy_prefix(inst, fs)
    rows = [[0, 0, 0 if args.oracle else None, 0.0 if args.oracle else None]]
    n = 0
    while not trace.complete:
        if args.budget_steps is not None and n >= args.budget_steps:
            break
        trace = greedy_mod.incremental_extend(trace, 1, threads=args.threads)
        n += 1
        phi_g = trace.engine.num_assigned
        phi_opt = rel = None
        if args.oracle:
            try:
                phi_opt = oracle.max_assignment_for_n(inst, fs, n, limit=args.oracle_limit).value
            except TooLarge:
                raise TooLarge(
                    f"{len(inst.candidates)} candidates exceed --oracle-limit "
                    f"{args.oracle_limit}; re-run without --oracle"
                ) from None
            rel = (phi_opt - phi_g) / phi_opt if phi_opt else 0.0
        rows.append([n, phi_g, phi_opt, rel])
    _write_text(args.out, _csv_text(INCREMENTAL_COLUMNS, rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# gen


def cmd_gen(args) -> int:
    if (args.topology is None) == (args.sndlib is None):
        raise ParseError("exactly one of --topology / --sndlib is required")
    if args.topology:
        net = ingest.parse_graphml(Path(args.topology).read_text())
        cfg = ingest.ScenarioConfig(
            topology=args.topology, p=args.p, stretch=args.stretch,
            capacity=args.capacity, seed=args.seed, replication=args.replication,
            metric=args.metric or "geo",
        )
        inst = ingest.generate_unweighted_scenario(cfg, net)
        provenance = {
            "source": args.topology, "p": args.p, "seed": args.seed,
            "replication": args.replication,
        }
    else:
        net, demands = ingest.parse_sndlib(Path(args.sndlib).read_text())
        cfg = ingest.ScenarioConfig(
            topology=args.sndlib, p=args.keep_prob, stretch=args.stretch,
            seed=args.seed, replication=args.replication, metric=args.metric or "geo",
        )
        inst = ingest.generate_weighted_scenario(cfg, net, demands,
                                                 keep_probability=args.keep_prob)
        provenance = {
            "source": args.sndlib, "keep_probability": args.keep_prob,
            "seed": args.seed, "replication": args.replication,
        }
    _write_text(args.out, ingest.instance_to_json(inst, provenance))
    return EXIT_OK


# ---------------------------------------------------------------------------
# bench


def _bench_unweighted_row(net_cache, spec) -> list:
    path, p, stretch, rep, seed, algorithm, opts = spec
    t0 = time.perf_counter()
    base = [Path(path).stem, "unweighted"]
    try:
        net = net_cache[path]
        cfg = ingest.ScenarioConfig(topology=path, p=p, stretch=stretch, seed=seed,
                                    replication=rep, metric=opts["metric"])
        inst = ingest.generate_unweighted_scenario(cfg, net)
        fs = build_feasibility(inst)
        check_total_capacity(inst, fs)
        trace = greedy_mod.greedy_place(inst, fs, threads=opts["threads"])
        _validate_solution(inst, trace.engine)
        opt = ratio = rel_max = None
        if opts["oracle"]:
            opt = oracle.exact_min_middleboxes(inst, fs, limit=opts["oracle_limit"]).value
            ratio = len(trace.steps) / opt if opt else None
            series = _relative_difference_series(inst, fs, trace, opts["oracle_limit"])
            rel_max = max(series, default=0.0)
        return base + [
            inst.net.num_nodes, inst.net.num_edges, p, stretch, rep, seed, algorithm,
            "ok", len(trace.steps), trace.engine.num_assigned, inst.num_pairs,
            opt, ratio, rel_max, None, None, round(time.perf_counter() - t0, 6), None,
        ]
    except PlacementError as exc:
        return base + [None, None, p, stretch, rep, seed, algorithm, "error",
                       None, None, None, None, None, None, None, None,
                       round(time.perf_counter() - t0, 6), f"{type(exc).__name__}: {exc}"]


def _bench_weighted_row(parsed_cache, spec) -> list:
    path, keep, stretch, rep, seed, opts = spec
    t0 = time.perf_counter()
    base = [Path(path).stem, "weighted"]
    try:
        net, demands = parsed_cache[path]
        cfg = ingest.ScenarioConfig(topology=path, p=keep, stretch=stretch, seed=seed,
                                    replication=rep, metric=opts["metric"])
        winst = ingest.generate_weighted_scenario(cfg, net, demands, keep_probability=keep)
        prep, chosen, frac, rounded = weighted.solve_weighted(winst)
        kappa = float(prep.kappa)
        rel = [float(v) / kappa for v in rounded.load.values()]
        return base + [
            net.num_nodes, net.num_edges, keep, stretch, rep, seed, "generalized_greedy",
            "ok", len(chosen), len(rounded.assignment), prep.num_kept,
            None, None, None, max(rel, default=0.0), sum(1 for v in rel if v > 1.0),
            round(time.perf_counter() - t0, 6), None,
        ]
    except PlacementError as exc:
        return base + [None, None, keep, stretch, rep, seed, "generalized_greedy",
                       "error", None, None, None, None, None, None, None, None,
                       round(time.perf_counter() - t0, 6), f"{type(exc).__name__}: {exc}"]


def cmd_bench(args) -> int:
    try:
        config = json.loads(Path(args.config).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"malformed bench config: {exc}") from exc
    seed = config.get("seed", 0)
    stretches = config.get("stretches", "grid")
    if stretches == "grid":
        stretches = ingest.stretch_grid()
    opts = {
        "metric": config.get("metric", "geo"),
        "threads": config.get("threads", 1),
        "oracle": config.get("oracle", False),
        "oracle_limit": config.get("oracle_limit", 16),
    }
    reps = config.get("replications", 1)
    algorithms = config.get("algorithms", ["greedy"])
    jobs = []
    net_cache = {p: ingest.parse_graphml(Path(p).read_text())
                 for p in config.get("topologies", [])}
    for path in config.get("topologies", []):
        for p in config.get("p_values", [0.3]):
            for stretch in stretches:
                for rep in range(reps):
                    for algorithm in algorithms:
                        jobs.append(("u", (path, p, stretch, rep, seed, algorithm, opts)))
    parsed_cache = {entry["path"]: ingest.parse_sndlib(Path(entry["path"]).read_text())
                    for entry in config.get("sndlib", [])}
    for entry in config.get("sndlib", []):
        keep = entry.get("keep_probability", 0.5)
        for stretch in stretches:
            for rep in range(reps):
                jobs.append(("w", (entry["path"], keep, stretch, rep, seed, opts)))

    def run(job):
        kind, spec = job
        if kind == "u":
            return _bench_unweighted_row(net_cache, spec)
        return _bench_weighted_row(parsed_cache, spec)

    if args.workers > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(run, jobs))
    else:
        rows = [run(job) for job in jobs]
    _write_text(args.out, _csv_text(BENCH_COLUMNS, rows))
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mbplace",
        description="Capacitated, stretch-constrained middlebox placement solver",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common_solve(sp):
        sp.add_argument("instance", help="instance JSON or GraphML file")
        sp.add_argument("--metric", choices=METRICS, default=None)
        sp.add_argument("--stretch", type=float, default=None)
        sp.add_argument("--capacity", type=int, default=None)
        sp.add_argument("--p", type=float, default=0.3,
                        help="pair probability for GraphML inputs")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--replication", type=int, default=0)
        sp.add_argument("--threads", type=int, default=1)
        sp.add_argument("--out", default=None, help="output path (default stdout)")

    sp = sub.add_parser("solve", help="greedy placement on an unweighted instance")
    add_common_solve(sp)
    sp.add_argument("--trace-csv", default=None, help="write the per-step trace CSV")
    sp.add_argument("--oracle", action="store_true", help="also run the exact oracle")
    sp.add_argument("--oracle-limit", type=int, default=16)
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("solve-weighted", help="generalized greedy plus rounding")
    sp.add_argument("instance", help="weighted instance JSON")
    sp.add_argument("--oracle", action="store_true")
    sp.add_argument("--oracle-limit", type=int, default=12)
    sp.add_argument("--out", default=None)
    sp.set_defaults(func=cmd_solve_weighted)

    sp = sub.add_parser("incremental", help="per-step assignment series")
    add_common_solve(sp)
    sp.add_argument("--budget-steps", type=int, default=None)
    sp.add_argument("--oracle", action="store_true")
    sp.add_argument("--oracle-limit", type=int, default=16)
    sp.set_defaults(func=cmd_incremental)

    sp = sub.add_parser("gen", help="generate a scenario instance file")
    sp.add_argument("--topology", default=None, help="GraphML topology")
    sp.add_argument("--sndlib", default=None, help="SNDlib native file")
    sp.add_argument("--p", type=float, default=0.3)
    sp.add_argument("--keep-prob", type=float, default=0.5)
    sp.add_argument("--stretch", type=float, default=1.5)
    sp.add_argument("--capacity", type=int, default=None)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--replication", type=int, default=0)
    sp.add_argument("--metric", choices=METRICS, default=None)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_gen)

    sp = sub.add_parser("bench", help="batch runs over a config file")
    sp.add_argument("config", help="bench config JSON")
    sp.add_argument("--out", default=None)
    sp.add_argument("--workers", type=int, default=1)
    sp.set_defaults(func=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, GeoUnavailable, DomainError, FileNotFoundError) as exc:
        _emit_error(exc, EXIT_PARSE)
        return EXIT_PARSE
    except TooLarge as exc:
        _emit_error(exc, EXIT_TOO_LARGE)
        return EXIT_TOO_LARGE
    except (Infeasible, InfeasiblePair, Stalled, RoundingFailed) as exc:
        _emit_error(exc, EXIT_INFEASIBLE)
        return EXIT_INFEASIBLE
    except PlacementError as exc:
        _emit_error(exc, 1)
        return 1


def _emit_error(exc: Exception, code: int) -> None:
    sys.stdout.write(json.dumps(
        {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    ) + "\n")


if __name__ == "__main__":
    sys.exit(main())
