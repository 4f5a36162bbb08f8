"""Trace file parsing and writing.

Line grammar (whitespace separated, `#` comments, blank lines ignored):

    <hex-address> <READ|WRITE> <decimal-cycle> [<hex-data>]

traceCycle must be nondecreasing through the file; ties keep file order.
WRITE lines without a data field get a synthetic payload that is a pure
function of (address, reqId), so two parses of one file agree bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .config import Topology

READ = "READ"
WRITE = "WRITE"

_MASK64 = (1 << 64) - 1


class TraceError(Exception):
    """Malformed trace line, non-monotonic cycle, or address overflow."""


@dataclass
class MemoryRequest:
    reqId: int
    address: int
    op: str
    traceCycle: int
    data: int | None = None


def synth_write_data(address: int, req_id: int) -> int:
    """Deterministic payload for WRITEs that carry no explicit data."""
    return (address ^ req_id) & _MASK64


def parse_trace(path: str, topology: Topology) -> list[MemoryRequest]:
    try:
        with open(path) as f:
            lines = f.readlines()
    except OSError as e:
        raise TraceError(f"cannot read trace {path}: {e}") from e
    return parse_trace_lines(lines, topology, name=path)


def parse_trace_lines(lines: Iterable[str], topology: Topology, name: str = "<trace>") -> list[MemoryRequest]:
    limit = 1 << topology.addressBits
    requests: list[MemoryRequest] = []
    last_cycle = 0
    req_id = 0
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (3, 4):
            raise TraceError(f"{name}:{lineno}: expected 3 or 4 fields, got {len(parts)}")
        try:
            address = int(parts[0], 16)
        except ValueError:
            raise TraceError(f"{name}:{lineno}: bad hex address {parts[0]!r}") from None
        op = parts[1].upper()
        if op not in (READ, WRITE):
            raise TraceError(f"{name}:{lineno}: opcode must be READ or WRITE, got {parts[1]!r}")
        try:
            cycle = int(parts[2], 10)
        except ValueError:
            raise TraceError(f"{name}:{lineno}: bad decimal cycle {parts[2]!r}") from None
        if cycle < 0:
            raise TraceError(f"{name}:{lineno}: negative cycle {cycle}")
        if address >= limit:
            raise TraceError(
                f"{name}:{lineno}: address {parts[0]} exceeds {topology.addressBits}-bit address space"
            )
        if requests and cycle < last_cycle:
            raise TraceError(
                f"{name}:{lineno}: non-monotonic traceCycle {cycle} after {last_cycle}"
            )
        data = None
        if len(parts) == 4:
            if op != WRITE:
                raise TraceError(f"{name}:{lineno}: data field only allowed on WRITE lines")
            try:
                data = int(parts[3], 16) & _MASK64
            except ValueError:
                raise TraceError(f"{name}:{lineno}: bad hex data {parts[3]!r}") from None
        elif op == WRITE:
            data = synth_write_data(address, req_id)
        requests.append(MemoryRequest(req_id, address, op, cycle, data))
        last_cycle = cycle
        req_id += 1
    return requests


def format_request(req: MemoryRequest) -> str:
    line = f"0x{req.address:x} {req.op} {req.traceCycle}"
    if req.op == WRITE and req.data is not None:
        line += f" 0x{req.data:x}"
    return line


def write_trace(requests: Iterable[MemoryRequest], path: str) -> None:
    """Write a trace so that re-parsing yields a field-for-field identical stream."""
    with open(path, "w") as f:
        for req in requests:
            f.write(format_request(req) + "\n")
