"""Command-line entry point: run, sweep, gen, check, and compare flows.

Exit codes: 0 success, 1 validation failure or rule violation, 2 I/O or
parse error.  All run outputs land under --out.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time

from . import __version__
from .bank import SimulationError
from .checker import CheckError, check_command_log, parse_command_log
from .config import (
    ConfigError,
    ConfigParseError,
    SimConfig,
    apply_overrides,
    load_config,
    serialize,
)
from .simulator import Simulation, write_command_log
from .stats import (
    DEFAULT_SWEEP_SIZES,
    pareto_report,
    sweep,
    write_breakdown_csv,
    write_pareto_csv,
    write_records_csv,
    write_sweep_csv,
    write_windows_csv,
)
from .trace_io import TraceError, parse_trace, write_trace
from .workload import KINDS, WorkloadError, WorkloadSpec, generate

EXIT_OK = 0
EXIT_VIOLATION = 1
EXIT_PARSE = 2


def _load_cfg(args) -> SimConfig:
    cfg = load_config(args.config) if args.config else SimConfig()
    if getattr(args, "set", None):
        cfg = apply_overrides(cfg, args.set)
    return cfg


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: str, cfg: SimConfig, trace_path: str, wall: float,
                    result) -> None:
    manifest = {
        "config": serialize(cfg),
        "tracePath": os.path.abspath(trace_path),
        "traceSha256": _sha256(trace_path),
        "outputDir": os.path.abspath(out_dir),
        "simulatorVersion": __version__,
        "wallClockSeconds": round(wall, 3),
        "cyclesSimulated": result.cycles_simulated,
        "drained": result.drained,
    }
    with open(os.path.join(out_dir, "manifest.json"), "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


def _summary_dict(summary) -> dict:
    return {
        "requestsEnqueued": summary.requestsEnqueued,
        "requestsCompleted": summary.requestsCompleted,
        "requestsInFlight": summary.requestsInFlight,
        "completedReads": summary.completedReads,
        "completedWrites": summary.completedWrites,
        "meanLatency": summary.meanLatency,
        "meanReadLatency": summary.meanReadLatency,
        "meanWriteLatency": summary.meanWriteLatency,
        "stddevReadLatency": summary.stddevReadLatency,
        "stddevWriteLatency": summary.stddevWriteLatency,
        "meanFrontendStall": summary.meanFrontendStall,
        "cyclesSimulated": summary.cyclesSimulated,
        "breakdown": {k: {"meanCycles": m, "percentOfLatency": p}
                      for k, (m, p) in summary.breakdown.items()},
    }


def cmd_run(args) -> int:
    cfg = _load_cfg(args)
    trace = parse_trace(args.trace, cfg.topology)
    os.makedirs(args.out, exist_ok=True)
    began = time.perf_counter()
    result = Simulation(cfg, trace).run()
    wall = time.perf_counter() - began
    write_records_csv(result.records, os.path.join(args.out, "records.csv"))
    write_windows_csv(result.summary.perWindowMeans, os.path.join(args.out, "windows.csv"))
    write_breakdown_csv(result.summary.breakdown, os.path.join(args.out, "breakdown.csv"))
    write_command_log(result.command_log, os.path.join(args.out, "command_log.csv"))
    with open(os.path.join(args.out, "summary.json"), "w") as f:
        json.dump(_summary_dict(result.summary), f, indent=2, sort_keys=True)
        f.write("\n")
    _write_manifest(args.out, cfg, args.trace, wall, result)
    s = result.summary
    print(f"simulated {result.cycles_simulated} cycles "
          f"({'drained' if result.drained else 'horizon reached'}) in {wall:.2f}s")
    print(f"completed {s.requestsCompleted}/{s.requestsEnqueued} admitted requests "
          f"({s.completedReads} reads, {s.completedWrites} writes)")
    if s.meanLatency is not None:
        print(f"mean latency {s.meanLatency:.1f} cycles "
              f"(reads {s.meanReadLatency:.1f}, writes {s.meanWriteLatency:.1f})")
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg = _load_cfg(args)
    trace = parse_trace(args.trace, cfg.topology)
    sizes = DEFAULT_SWEEP_SIZES
    if args.sizes:
        sizes = tuple(int(s) for s in args.sizes.split(","))
    os.makedirs(args.out, exist_ok=True)
    points = sweep(trace, cfg, sizes)
    write_sweep_csv(points, os.path.join(args.out, "sweep.csv"))
    flagged = pareto_report(points)
    write_pareto_csv(flagged, os.path.join(args.out, "pareto.csv"))
    for p in points:
        lat = "n/a" if p.meanLatency is None else f"{p.meanLatency:.1f}"
        print(f"queueSize {p.queueSize:5d}: {p.requestsCompleted:7d} completed, "
              f"mean latency {lat}")
    return EXIT_OK


def cmd_gen(args) -> int:
    cfg = _load_cfg(args)
    spec = WorkloadSpec(kind=args.kind, footprint=args.footprint,
                        requestCount=args.requests, issueRate=args.rate,
                        rwRatio=args.rw_ratio, seed=args.seed)
    requests = generate(spec, cfg.topology)
    write_trace(requests, args.out)
    print(f"wrote {len(requests)} requests to {args.out} "
          f"(cycles 0..{requests[-1].traceCycle})")
    return EXIT_OK


def cmd_check(args) -> int:
    cfg = _load_cfg(args)
    entries = parse_command_log(args.log)
    violations = check_command_log(entries, cfg)
    for v in violations:
        print(str(v))
    print(f"{len(violations)} violation(s) in {len(entries)} log entries")
    return EXIT_OK if not violations else EXIT_VIOLATION


def _read_completions(path: str) -> dict[int, tuple[str, int]]:
    out = {}
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"reqId", "op", "completionCycle"} <= set(reader.fieldnames):
            raise CheckError(f"{path}: need columns reqId, op, completionCycle")
        for row in reader:
            if row["completionCycle"] == "":
                continue
            out[int(row["reqId"])] = (row["op"], int(row["completionCycle"]))
    return out


def cmd_compare(args) -> int:
    a = _read_completions(args.a)
    b = _read_completions(args.b)
    if a.keys() != b.keys():
        only_a = sorted(a.keys() - b.keys())[:5]
        only_b = sorted(b.keys() - a.keys())[:5]
        print(f"request sets differ (only in A: {only_a}, only in B: {only_b})",
              file=sys.stderr)
        return EXIT_VIOLATION
    diffs: dict[str, list[int]] = {}
    for req_id, (op, cyc_a) in a.items():
        diffs.setdefault(op, []).append(cyc_a - b[req_id][1])
    for op in sorted(diffs):
        vals = diffs[op]
        mean = sum(vals) / len(vals)
        std = math.sqrt(sum((v - mean) ** 2 for v in vals) / len(vals))
        print(f"{op}: n={len(vals)} meanDiff={mean:.2f} stddev={std:.2f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="memsim",
                                     description="cycle-accurate DRAM subsystem simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config_args(p):
        p.add_argument("--config", help="JSON config file (defaults when omitted)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override a config scalar, e.g. timing.tRP=16 or queueSize=64")

    p = sub.add_parser("run", help="simulate one trace and write reports")
    add_config_args(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="rerun one trace across queue sizes")
    add_config_args(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--sizes", help="comma-separated powers of two (default 2..1024)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="generate a synthetic trace")
    add_config_args(p)
    p.add_argument("--kind", required=True, choices=KINDS)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--requests", type=int, default=10_000)
    p.add_argument("--rate", type=float, default=0.5, help="mean requests per cycle")
    p.add_argument("--footprint", type=int, default=None, help="bytes")
    p.add_argument("--rw-ratio", type=float, default=0.9, help="fraction of reads (vecsim)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("check", help="verify a command log against the timing rules")
    add_config_args(p)
    p.add_argument("--log", required=True, help="command_log.csv from a run")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("compare", help="per-request completion-cycle differences (A - B)")
    p.add_argument("--a", required=True, help="records.csv")
    p.add_argument("--b", required=True, help="reference records.csv")
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigParseError, TraceError, CheckError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PARSE
    except (ConfigError, WorkloadError, SimulationError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VIOLATION


if __name__ == "__main__":
    raise SystemExit(main())
