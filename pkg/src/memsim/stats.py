"""Per-request lifecycle records and report generation.

Latency is measured inside the system (completionCycle - enqueueCycle) and
decomposes exactly into reqQueueWait + schedulerWait + serviceCycles +
responseTransit; time a request spent stalled at the frontend before
admission (frontendStall) is reported separately.  Requests still in flight
at the horizon are excluded from latency statistics and counted on the side.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

from .config import SimConfig
from .trace_io import MemoryRequest, READ, WRITE

LATENCY_COMPONENTS = ("reqQueueWait", "schedulerWait", "serviceCycles", "responseTransit")


@dataclass
class RequestRecord:
    reqId: int
    op: str
    address: int
    traceCycle: int
    enqueueCycle: int | None = None
    dispatchCycle: int | None = None
    activateStart: int | None = None
    activateAck: int | None = None
    rwStart: int | None = None
    rwAck: int | None = None
    prechargeAck: int | None = None
    completionCycle: int | None = None
    data: int | None = None

    @property
    def completed(self) -> bool:
        return self.completionCycle is not None

    @property
    def frontendStall(self) -> int:
        return self.enqueueCycle - self.traceCycle

    @property
    def reqQueueWait(self) -> int:
        return self.dispatchCycle - self.enqueueCycle

    @property
    def schedulerWait(self) -> int:
        return self.activateStart - self.dispatchCycle

    @property
    def serviceCycles(self) -> int:
        return self.prechargeAck - self.activateStart

    @property
    def responseTransit(self) -> int:
        return self.completionCycle - self.prechargeAck

    @property
    def latency(self) -> int:
        return self.completionCycle - self.enqueueCycle


@dataclass
class RunSummary:
    requestsCompleted: int
    completedReads: int
    completedWrites: int
    meanLatency: float | None
    meanReadLatency: float | None
    meanWriteLatency: float | None
    stddevReadLatency: float | None
    stddevWriteLatency: float | None
    meanFrontendStall: float | None
    perWindowMeans: list[tuple[int, float]]
    breakdown: dict[str, tuple[float, float]]  # component -> (mean, percent)
    requestsEnqueued: int = 0
    requestsInFlight: int = 0
    cyclesSimulated: int = 0


def _mean(values) -> float | None:
    values = list(values)
    if not values:
        return None
    return sum(values) / len(values)


def _stddev(values) -> float | None:
    values = list(values)
    if not values:
        return None
    m = sum(values) / len(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / len(values))


def window_profile(records, window_size: int = 1000) -> list[tuple[int, float]]:
    """Mean latency per enqueue-cycle bin; empty bins omitted, exact means."""
    bins: dict[int, list[int]] = {}
    for rec in records:
        if not rec.completed:
            continue
        start = (rec.enqueueCycle // window_size) * window_size
        bins.setdefault(start, []).append(rec.latency)
    return [(start, sum(vals) / len(vals)) for start, vals in sorted(bins.items())]


def breakdown_report(records) -> dict[str, tuple[float, float]]:
    """Mean cycles and share of mean latency for each latency component."""
    done = [r for r in records if r.completed]
    out: dict[str, tuple[float, float]] = {}
    if not done:
        return {name: (0.0, 0.0) for name in LATENCY_COMPONENTS}
    total = _mean(r.latency for r in done)
    for name in LATENCY_COMPONENTS:
        m = _mean(getattr(r, name) for r in done)
        pct = 100.0 * m / total if total else 0.0
        out[name] = (m, pct)
    return out


def summarize(records, window_size: int = 1000, requests_enqueued: int = 0,
              cycles_simulated: int = 0) -> RunSummary:
    done = [r for r in records if r.completed]
    reads = [r for r in done if r.op == READ]
    writes = [r for r in done if r.op == WRITE]
    return RunSummary(
        requestsCompleted=len(done),
        completedReads=len(reads),
        completedWrites=len(writes),
        meanLatency=_mean(r.latency for r in done),
        meanReadLatency=_mean(r.latency for r in reads),
        meanWriteLatency=_mean(r.latency for r in writes),
        stddevReadLatency=_stddev(r.latency for r in reads),
        stddevWriteLatency=_stddev(r.latency for r in writes),
        meanFrontendStall=_mean(r.frontendStall for r in done),
        perWindowMeans=window_profile(done, window_size),
        breakdown=breakdown_report(done),
        requestsEnqueued=requests_enqueued,
        requestsInFlight=requests_enqueued - len(done),
        cyclesSimulated=cycles_simulated,
    )


@dataclass
class SweepPoint:
    queueSize: int
    requestsCompleted: int
    completedReads: int
    completedWrites: int
    meanReadLatency: float | None
    meanWriteLatency: float | None
    meanLatency: float | None


DEFAULT_SWEEP_SIZES = (2, 4, 8, 16, 32, 64, 128, 256, 512, 1024)


def sweep(trace: list[MemoryRequest], cfg: SimConfig,
          sizes=DEFAULT_SWEEP_SIZES) -> list[SweepPoint]:
    """One full deterministic run per queue size over the same trace and horizon."""
    from dataclasses import replace

    from .simulator import Simulation

    for size in sizes:
        if size < 1 or size & (size - 1):
            raise ValueError(f"sweep sizes must be powers of two, got {size}")
    points = []
    for size in sizes:
        run_cfg = replace(cfg, queueSize=size)
        result = Simulation(run_cfg, trace).run()
        s = result.summary
        points.append(SweepPoint(
            queueSize=size,
            requestsCompleted=s.requestsCompleted,
            completedReads=s.completedReads,
            completedWrites=s.completedWrites,
            meanReadLatency=s.meanReadLatency,
            meanWriteLatency=s.meanWriteLatency,
            meanLatency=s.meanLatency,
        ))
    return points


def pareto_report(points: list[SweepPoint]) -> list[tuple[SweepPoint, bool]]:
    """(point, dominated) pairs sorted by throughput.

    A point is dominated when another point completes at least as many
    requests with latency at most as high, strictly better in one of the two.
    """
    if not points:
        raise ValueError("pareto_report needs at least one sweep point")
    ordered = sorted(points, key=lambda p: (p.requestsCompleted, p.queueSize))
    out = []
    for p in ordered:
        dominated = any(
            q is not p
            and q.requestsCompleted >= p.requestsCompleted
            and _lat(q) <= _lat(p)
            and (q.requestsCompleted > p.requestsCompleted or _lat(q) < _lat(p))
            for q in points
        )
        out.append((p, dominated))
    return out


def _lat(p: SweepPoint) -> float:
    return p.meanLatency if p.meanLatency is not None else math.inf


# ---------------------------------------------------------------------------
# CSV output (column names are fixed; see README).

def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return f"{v:.6f}"
    return str(v)


RECORD_COLUMNS = (
    "reqId", "op", "address", "traceCycle", "enqueueCycle", "dispatchCycle",
    "activateStart", "activateAck", "rwStart", "rwAck", "prechargeAck",
    "completionCycle", "frontendStall", "reqQueueWait", "schedulerWait",
    "serviceCycles", "responseTransit", "latency", "data",
)


def write_records_csv(records, path: str) -> None:
    """One row per completed request, ordered by reqId."""
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(RECORD_COLUMNS)
        for rec in sorted((r for r in records if r.completed), key=lambda r: r.reqId):
            w.writerow([
                rec.reqId, rec.op, f"0x{rec.address:x}", rec.traceCycle,
                rec.enqueueCycle, rec.dispatchCycle, rec.activateStart,
                rec.activateAck, rec.rwStart, rec.rwAck, rec.prechargeAck,
                rec.completionCycle, rec.frontendStall, rec.reqQueueWait,
                rec.schedulerWait, rec.serviceCycles, rec.responseTransit,
                rec.latency, "" if rec.data is None else f"0x{rec.data:x}",
            ])


def write_windows_csv(windows, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["windowStart", "meanLatency"])
        for start, mean in windows:
            w.writerow([start, _fmt(mean)])


def write_breakdown_csv(breakdown, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["component", "meanCycles", "percentOfLatency"])
        for name in LATENCY_COMPONENTS:
            mean, pct = breakdown[name]
            w.writerow([name, _fmt(mean), _fmt(pct)])


def write_sweep_csv(points, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["queueSize", "requestsCompleted", "completedReads", "completedWrites",
                    "meanReadLatency", "meanWriteLatency", "meanLatency"])
        for p in points:
            w.writerow([p.queueSize, p.requestsCompleted, p.completedReads,
                        p.completedWrites, _fmt(p.meanReadLatency),
                        _fmt(p.meanWriteLatency), _fmt(p.meanLatency)])


def write_pareto_csv(flagged, path: str) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["queueSize", "requestsCompleted", "meanLatency", "dominated"])
        for p, dominated in flagged:
            w.writerow([p.queueSize, p.requestsCompleted, _fmt(p.meanLatency),
                        int(dominated)])
