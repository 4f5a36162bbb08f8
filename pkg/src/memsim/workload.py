"""Synthetic trace generation for the four microbenchmark access patterns.

conv2d    sliding-window strided reads over an 8-byte-element image with
          row-major output writes (spatial locality, bursts)
attention repeated full passes over a small set of key vectors per query
          (heavy reuse) with one output write per query
simple    alternating write-then-read of the same address (validates data
          return end to end)
vecsim    irregular reads across the whole footprint plus a small write
          region (reductions into accumulators)

Arrival cycles follow a seeded geometric inter-arrival process with mean
1/issueRate (zero gaps allowed, so high rates produce bursts).  Generation
is a pure function of (spec, topology): one seed, one trace.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import Topology
from .trace_io import READ, WRITE, MemoryRequest, synth_write_data

CONV2D = "conv2d"
ATTENTION = "attention"
SIMPLE = "simple"
VECSIM = "vecsim"
KINDS = (CONV2D, ATTENTION, SIMPLE, VECSIM)

_DEFAULT_FOOTPRINT = {
    CONV2D: 64 * 1024,
    ATTENTION: 32 * 1024,
    SIMPLE: 4 * 1024,
    VECSIM: 256 * 1024,
}


class WorkloadError(Exception):
    pass


@dataclass
class WorkloadSpec:
    kind: str
    footprint: int | None = None   # bytes; kind-specific default when None
    requestCount: int = 10_000
    issueRate: float = 0.5         # mean requests per cycle
    rwRatio: float = 0.9           # fraction of reads (vecsim)
    seed: int = 1

    def resolved_footprint(self) -> int:
        return self.footprint if self.footprint is not None else _DEFAULT_FOOTPRINT[self.kind]


def _validate(spec: WorkloadSpec, topology: Topology) -> int:
    if spec.kind not in KINDS:
        raise WorkloadError(f"unknown workload kind {spec.kind!r}")
    if spec.requestCount < 1:
        raise WorkloadError("requestCount must be >= 1")
    if not spec.issueRate > 0:
        raise WorkloadError("issueRate must be > 0")
    if not 0 <= spec.rwRatio <= 1:
        raise WorkloadError("rwRatio must be in [0, 1]")
    footprint = spec.resolved_footprint()
    if footprint > (1 << topology.addressBits):
        raise WorkloadError(
            f"footprint {footprint} exceeds {topology.addressBits}-bit address space")
    if footprint < 64:
        raise WorkloadError("footprint too small to build a pattern")
    return footprint


def conv2d_accesses(width: int, out_base: int):
    """(op, byte address) stream for 3x3 windows over a width^2 8-byte image."""
    for r in range(width - 2):
        for c in range(width - 2):
            for i in range(3):
                for j in range(3):
                    yield READ, ((r + i) * width + (c + j)) * 8
            yield WRITE, out_base + (r * (width - 2) + c) * 8


def _conv2d_stream(footprint: int, count: int):
    width = max(4, int((footprint // 16) ** 0.5))
    out_base = width * width * 8
    out = []
    while len(out) < count:
        for access in conv2d_accesses(width, out_base):
            out.append(access)
            if len(out) == count:
                break
    return out


def _attention_stream(footprint: int, count: int):
    vec_len = 4                      # words per vector
    num_keys = 8
    words = footprint // 8
    key_words = num_keys * vec_len
    query_base = key_words
    query_words = max(vec_len, (words - key_words) // 2)
    out_base = query_base + query_words
    out_words = max(1, words - out_base)
    out = []
    q = 0
    while len(out) < count:
        q_addr = query_base + (q * vec_len) % query_words
        for w in range(vec_len):
            out.append((READ, q_addr + w))
        for k in range(key_words):   # full key pass per query: the reuse
            out.append((READ, k))
        out.append((WRITE, out_base + q % out_words))
        q += 1
    return out[:count]


def _simple_stream(footprint: int, count: int):
    words = footprint // 8
    out = []
    k = 0
    while len(out) < count:
        addr = k % words
        out.append((WRITE, addr))
        if len(out) < count:
            out.append((READ, addr))
        k += 1
    return out


def _vecsim_stream(footprint: int, count: int, rw_ratio: float, rng) -> list:
    write_region = max(16, footprint // 16)
    is_read = rng.random(count) < rw_ratio
    read_addrs = rng.integers(0, footprint, size=count)
    write_addrs = rng.integers(0, write_region, size=count)
    return [(READ, int(read_addrs[i])) if is_read[i] else (WRITE, int(write_addrs[i]))
            for i in range(count)]


def arrival_cycles(count: int, issue_rate: float, rng) -> np.ndarray:
    """Nondecreasing cycles with mean gap 1/issue_rate; first request at 0."""
    p = issue_rate / (1.0 + issue_rate)
    gaps = rng.geometric(p, size=count) - 1
    cycles = np.cumsum(gaps)
    return cycles - cycles[0]


def generate(spec: WorkloadSpec, topology: Topology) -> list[MemoryRequest]:
    footprint = _validate(spec, topology)
    rng = np.random.default_rng(spec.seed)
    count = spec.requestCount
    if spec.kind == CONV2D:
        accesses = _conv2d_stream(footprint, count)
    elif spec.kind == ATTENTION:
        accesses = _attention_stream(footprint, count)
    elif spec.kind == SIMPLE:
        accesses = _simple_stream(footprint, count)
    else:
        accesses = _vecsim_stream(footprint, count, spec.rwRatio, rng)
    cycles = arrival_cycles(count, spec.issueRate, rng)
    requests = []
    for req_id, ((op, address), cycle) in enumerate(zip(accesses, cycles)):
        data = synth_write_data(address, req_id) if op == WRITE else None
        requests.append(MemoryRequest(req_id, address, op, int(cycle), data))
    return requests
