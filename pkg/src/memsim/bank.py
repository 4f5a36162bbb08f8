"""Per-bank DRAM timing model and bit-true data storage.

A bank accepts one command at a time (the scheduler guarantees a single
in-flight command per bank), computes the earliest legal start cycle from the
timing constraints, holds the command for its service duration, and emits the
response at completion.  ACTIVATE spacing (tRRDL, tFAW) is tracked per rank;
column timing (tCCDL, tWTR) is tracked per bank group.  READ data is sampled
and WRITE data committed at ack time.
"""

from __future__ import annotations

from .commands import (
    ACTIVATE,
    PRECHARGE,
    READ,
    REFRESH,
    SREF_ENTER,
    SREF_EXIT,
    WRITE,
    BankCommand,
    MemoryResponse,
)
from .config import TimingParams

MODE_PRECHARGED = "PRECHARGED"
MODE_ACTIVE = "ACTIVE"
MODE_REFRESHING = "REFRESHING"
MODE_SREF = "SREF"


class SimulationError(Exception):
    """Internal protocol violation; indicates a simulator bug, not bad input."""


class DataStore:
    """Sparse 64-bit word store; unwritten addresses read as zero."""

    def __init__(self):
        self._mem: dict[int, int] = {}

    def read(self, address: int) -> int:
        return self._mem.get(address, 0)

    def write(self, address: int, value: int) -> None:
        self._mem[address] = value

    def snapshot(self) -> dict[int, int]:
        return dict(self._mem)


class RankTiming:
    """ACTIVATE start history shared by all banks of one rank (tRRDL, tFAW)."""

    def __init__(self, timing: TimingParams):
        self.timing = timing
        self.act_history: list[int] = []  # up to 4 most recent ACTIVATE starts

    def earliest_activate(self, now: int) -> int:
        t = now
        if self.act_history:
            t = max(t, self.act_history[-1] + self.timing.tRRDL)
            if len(self.act_history) == 4:
                t = max(t, self.act_history[0] + self.timing.tFAW)
        return t

    def record_activate(self, start: int) -> None:
        self.act_history.append(start)
        if len(self.act_history) > 4:
            self.act_history.pop(0)


class BankGroupTiming:
    """Column command history shared by all banks of one bank group (tCCDL, tWTR)."""

    def __init__(self, timing: TimingParams):
        self.timing = timing
        self.last_read_start: int | None = None
        self.last_write_start: int | None = None
        self.last_write_end: int | None = None

    def earliest_read(self, now: int) -> int:
        t = now
        if self.last_read_start is not None:
            t = max(t, self.last_read_start + self.timing.tCCDL)
        if self.last_write_end is not None:
            t = max(t, self.last_write_end + self.timing.tWTR)
        return t

    def earliest_write(self, now: int) -> int:
        t = now
        if self.last_write_start is not None:
            t = max(t, self.last_write_start + self.timing.tCCDL)
        return t


class DramBank:
    def __init__(self, flat_id: int, timing: TimingParams, rank: RankTiming,
                 bank_group: BankGroupTiming, store: DataStore):
        self.flat_id = flat_id
        self.timing = timing
        self.rank = rank
        self.bank_group = bank_group
        self.store = store
        self.mode = MODE_PRECHARGED
        self.open_row: int | None = None
        self.busy_until = 0
        self.pending: BankCommand | None = None      # arrived, waiting to start
        self.in_service: BankCommand | None = None
        self.response_out: tuple[MemoryResponse, int] | None = None  # (resp, readyCycle)

    def duration(self, cmd: BankCommand) -> int:
        t = self.timing
        if cmd.kind == ACTIVATE:
            return t.tRCDWR if cmd.intent == WRITE else t.tRCDRD
        if cmd.kind in (READ, WRITE):
            return t.tCL
        if cmd.kind == PRECHARGE:
            return t.tRP
        if cmd.kind == REFRESH:
            return t.tRFC
        if cmd.kind == SREF_ENTER:
            return t.tSREFEnter
        if cmd.kind == SREF_EXIT:
            return t.tSREFExit
        raise SimulationError(f"unknown command kind {cmd.kind}")

    def _check_mode(self, cmd: BankCommand) -> None:
        kind = cmd.kind
        if kind == ACTIVATE and self.mode != MODE_PRECHARGED:
            raise SimulationError(f"bank {self.flat_id}: ACTIVATE while {self.mode}")
        if kind in (READ, WRITE):
            if self.mode != MODE_ACTIVE:
                raise SimulationError(f"bank {self.flat_id}: {kind} while {self.mode}")
            if self.open_row != cmd.coords.row:
                raise SimulationError(
                    f"bank {self.flat_id}: {kind} to row {cmd.coords.row} "
                    f"but open row is {self.open_row}"
                )
        if kind == PRECHARGE and self.mode != MODE_ACTIVE:
            raise SimulationError(f"bank {self.flat_id}: PRECHARGE while {self.mode}")
        if kind in (REFRESH, SREF_ENTER) and self.mode != MODE_PRECHARGED:
            raise SimulationError(f"bank {self.flat_id}: {kind} while {self.mode}")
        if kind == SREF_EXIT and self.mode != MODE_SREF:
            raise SimulationError(f"bank {self.flat_id}: SREF_EXIT while {self.mode}")

    def earliest_start(self, cmd: BankCommand, now: int) -> int:
        """Earliest cycle the command may start given the bounds known at `now`.

        Shared rank/bank-group state mutates as other banks start commands, so
        the result is only a lower bound valid at `now`; a held command must be
        re-evaluated every cycle until its start cycle arrives.
        """
        self._check_mode(cmd)
        t = max(now, self.busy_until)
        if cmd.kind == ACTIVATE:
            t = max(t, self.rank.earliest_activate(now))
        elif cmd.kind == READ:
            t = max(t, self.bank_group.earliest_read(now))
        elif cmd.kind == WRITE:
            t = max(t, self.bank_group.earliest_write(now))
        return t

    def receive(self, cmd: BankCommand, cycle: int) -> None:
        """Accept an arriving command; it is held until the timing state allows it."""
        if self.pending is not None or self.in_service is not None:
            raise SimulationError(f"bank {self.flat_id}: command arrived while busy")
        self._check_mode(cmd)
        self.pending = cmd

    def start_bound(self, now: int) -> int:
        """Current lower bound on the held command's start; mode was already
        checked at receive time.  Bounds only move later as other banks start
        commands, so a returned future value stays valid until that cycle."""
        cmd = self.pending
        t = self.busy_until
        kind = cmd.kind
        if kind == ACTIVATE:
            b = self.rank.earliest_activate(now)
            if b > t:
                t = b
        elif kind == READ:
            b = self.bank_group.earliest_read(now)
            if b > t:
                t = b
        elif kind == WRITE:
            b = self.bank_group.earliest_write(now)
            if b > t:
                t = b
        return t if t > now else now

    def try_start(self, cycle: int) -> int | None:
        """Start the held command if every bound allows it; returns completion cycle."""
        if self.pending is None:
            raise SimulationError(f"bank {self.flat_id}: nothing pending to start")
        if self.start_bound(cycle) > cycle:
            return None
        cmd = self.pending
        self.pending = None
        return self.service(cmd, cycle)

    def service(self, cmd: BankCommand, start: int) -> int:
        """Begin servicing at `start`; returns the completion cycle."""
        if self.in_service is not None:
            raise SimulationError(f"bank {self.flat_id}: overlapping service")
        if start < self.busy_until:
            raise SimulationError(f"bank {self.flat_id}: start {start} before busyUntil {self.busy_until}")
        dur = self.duration(cmd)
        completion = start + dur
        kind = cmd.kind
        if kind == ACTIVATE:
            self.rank.record_activate(start)
            self.mode = MODE_ACTIVE
            self.open_row = cmd.coords.row
        elif kind == READ:
            self.bank_group.last_read_start = start
        elif kind == WRITE:
            self.bank_group.last_write_start = start
            self.bank_group.last_write_end = completion
        elif kind == PRECHARGE:
            self.mode = MODE_PRECHARGED
            self.open_row = None
        elif kind == REFRESH:
            self.mode = MODE_PRECHARGED
        elif kind == SREF_ENTER:
            self.mode = MODE_SREF
        elif kind == SREF_EXIT:
            self.mode = MODE_PRECHARGED
        self.busy_until = completion
        self.in_service = cmd
        return completion

    def complete(self, cycle: int, address: int | None = None) -> MemoryResponse:
        """Finish the in-service command; data is sampled/committed here (ack time)."""
        cmd = self.in_service
        if cmd is None:
            raise SimulationError(f"bank {self.flat_id}: completion with nothing in service")
        data = None
        if cmd.kind == READ:
            assert address is not None
            data = self.store.read(address)
        elif cmd.kind == WRITE:
            assert address is not None and cmd.data is not None
            self.store.write(address, cmd.data)
        self.in_service = None
        resp = MemoryResponse(cmd.kind, self.flat_id, cmd.reqId, cycle, data)
        if self.response_out is not None:
            raise SimulationError(f"bank {self.flat_id}: response output occupied")
        self.response_out = (resp, cycle)
        return resp

    def pop_response(self, cycle: int) -> MemoryResponse | None:
        """Hand the completed response upward; one-cycle minimum residency."""
        if self.response_out is not None and self.response_out[1] < cycle:
            resp = self.response_out[0]
            self.response_out = None
            return resp
        return None
